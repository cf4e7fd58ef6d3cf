#pragma once

#include <cstdint>
#include <vector>

#include "lighttune/loss.hpp"
#include "lighttune/mlp.hpp"

namespace lighttune {

/// Offline greedy layer-local FF training configuration.
struct TrainConfig {
    std::size_t epochs = 0;
    double alpha = 0.03;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double threshold_T = 9.0;
    LossKind loss = LossKind::quadratic;
    std::uint64_t seed = 1;
    bool shuffle = true;  // full reshuffle every epoch

    void validate() const;
};

/// Abstract training-sample view so large datasets need not be materialized
/// as doubles.
class SampleSource {
public:
    virtual ~SampleSource() = default;
    virtual std::size_t size() const = 0;
    virtual void get(std::size_t i, std::vector<double>& features, double& label) const = 0;
};

/// Trains layers greedily and locally. Every sample forms one positive pair
/// (x, y) and one negative pair (x, y_neg) with y_neg drawn uniformly from the
/// incorrect labels. Layers update sequentially 1..L; each layer's input is
/// the previous layer's output under the already-updated parameters of the
/// current step. Deterministic given the seed.
MlpModel train_offline(MlpModel model, const SampleSource& dataset, const LabelSet& labels,
                       const TrainConfig& config);
MlpModel train_offline(MlpModel model, const std::vector<AugmentedSample>& dataset,
                       const LabelSet& labels, const TrainConfig& config);

}  // namespace lighttune
