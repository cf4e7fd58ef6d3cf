#pragma once

#include <span>
#include <vector>

#include "lighttune/mlp.hpp"

namespace lighttune {

/// Per-layer per-neuron goodness g_l[j] = h_l[j]^2 and the terminal total
/// G = ||h_L||_2^2.
struct GoodnessReport {
    std::vector<std::vector<double>> per_layer;  // layers 1..L at index l-1
    double total = 0.0;
};

/// Goodness of already-computed activations.
GoodnessReport goodness_report(const LayerActivations& acts);

/// Builds z = [x^T, y]^T, runs the forward pass and squares activations.
GoodnessReport goodness(const MlpModel& model, std::span<const double> x, double label,
                        MacCounter* mac = nullptr);

struct Prediction {
    double label = 0.0;
    std::size_t label_index = 0;
    /// Terminal goodness per candidate label, in label-set order.
    std::vector<double> goodness_per_label;
};

/// argmax over the label set of G(x, y); exact ties resolve to the smallest
/// label value.
Prediction predict_label(const MlpModel& model, std::span<const double> x, const LabelSet& labels,
                         MacCounter* mac = nullptr);

}  // namespace lighttune
