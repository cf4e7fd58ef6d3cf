#include "lighttune/train.hpp"

#include <cmath>
#include <numeric>

#include "lighttune/errors.hpp"
#include "lighttune/gradient.hpp"
#include "lighttune/optimizer.hpp"
#include "lighttune/rng.hpp"

namespace lighttune {

void TrainConfig::validate() const {
    if (!(alpha > 0.0)) throw ConfigError("alpha must be > 0");
    if (beta1 < 0.0 || beta1 >= 1.0) throw ConfigError("beta1 must be in [0, 1)");
    if (beta2 < 0.0 || beta2 >= 1.0) throw ConfigError("beta2 must be in [0, 1)");
    if (epsilon < 0.0) throw ConfigError("epsilon must be >= 0");
    if (!std::isfinite(threshold_T)) throw ConfigError("threshold T must be finite");
}

namespace {

/// One layer evaluation: h_out = relu(W h_in + b).
void eval_layer(const Layer& lay, const std::vector<double>& h_in, std::vector<double>& h_out) {
    const std::size_t m = lay.weights.rows();
    const std::size_t n = lay.weights.cols();
    h_out.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
        const double* wr = lay.weights.data() + j * n;
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) acc += wr[k] * h_in[k];
        acc += lay.bias[j];
        h_out[j] = acc > 0.0 ? acc : 0.0;
    }
}

class VectorSource final : public SampleSource {
public:
    explicit VectorSource(const std::vector<AugmentedSample>& data) : data_(data) {}
    std::size_t size() const override { return data_.size(); }
    void get(std::size_t i, std::vector<double>& features, double& label) const override {
        features = data_[i].features;
        label = data_[i].label;
    }

private:
    const std::vector<AugmentedSample>& data_;
};

}  // namespace

MlpModel train_offline(MlpModel model, const SampleSource& dataset, const LabelSet& labels,
                       const TrainConfig& config) {
    config.validate();
    model.validate();
    if (dataset.size() == 0) throw InputError("training dataset is empty");

    FineTuneConfig opt;
    opt.alpha_f = config.alpha;
    opt.beta1 = config.beta1;
    opt.beta2 = config.beta2;
    opt.epsilon = config.epsilon;
    opt.threshold_T = config.threshold_T;
    opt.variant = UpdateVariant::standard_adam;

    std::vector<OptimizerState> states;
    states.reserve(model.layer_count());
    for (std::size_t l = 1; l <= model.layer_count(); ++l)
        states.push_back(OptimizerState::zeros_like(model.layer(l)));

    Rng rng(config.seed);
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<double> features, h_pos, h_neg, next_pos, next_neg, lp, ln;
    double label = 0.0;
    const std::size_t L = model.layer_count();

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        if (config.shuffle) {
            for (std::size_t i = order.size(); i > 1; --i) {
                const std::size_t j = rng.index(i);
                std::swap(order[i - 1], order[j]);
            }
        }
        for (std::size_t idx : order) {
            dataset.get(idx, features, label);
            if (features.size() + 1 != model.input_dim())
                throw ShapeError("sample feature length does not match model input");
            const std::size_t pos_idx = labels.index_of(label);
            std::size_t neg_idx = rng.index(labels.size() - 1);
            if (neg_idx >= pos_idx) ++neg_idx;

            h_pos = features;
            h_pos.push_back(label);
            h_neg = features;
            h_neg.push_back(labels.value(neg_idx));

            for (std::size_t l = 1; l <= L; ++l) {
                Layer& lay = model.layer(l);
                eval_layer(lay, h_pos, lp);
                eval_layer(lay, h_neg, ln);
                const Matrix grad =
                    layer_gradient_local(lp, h_pos, ln, h_neg, config.threshold_T, config.loss);
                optimizer_step(lay, grad, states[l - 1], opt);
                // feed the next layer with this layer's post-update output
                eval_layer(lay, h_pos, next_pos);
                eval_layer(lay, h_neg, next_neg);
                h_pos.swap(next_pos);
                h_neg.swap(next_neg);
            }
        }
    }
    return model;
}

MlpModel train_offline(MlpModel model, const std::vector<AugmentedSample>& dataset,
                       const LabelSet& labels, const TrainConfig& config) {
    return train_offline(std::move(model), VectorSource(dataset), labels, config);
}

}  // namespace lighttune
