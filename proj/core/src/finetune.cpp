#include "lighttune/finetune.hpp"

#include <cmath>

#include "lighttune/errors.hpp"
#include "lighttune/gradient.hpp"
#include "lighttune/loss.hpp"

namespace lighttune {

FineTuneState FineTuneState::make(const MlpModel& model, const FineTuneConfig& config) {
    config.validate();
    FineTuneState s{{}, Rng(config.seed)};
    s.layers.reserve(model.layer_count());
    for (std::size_t l = 1; l <= model.layer_count(); ++l)
        s.layers.push_back(OptimizerState::zeros_like(model.layer(l)));
    return s;
}

bool should_update(double error, double delta) {
    if (error < 0.0 || !std::isfinite(error)) throw InputError("prediction error must be >= 0");
    return error >= delta;
}

double sample_negative(double y_pos, const LabelSet& labels, NegativeSampling strategy,
                       double y_hat, Rng& rng, bool* fallback) {
    if (fallback != nullptr) *fallback = false;
    const std::size_t pos_idx = labels.index_of(y_pos);
    if (strategy == NegativeSampling::hard) {
        if (y_hat != y_pos) return y_hat;
        // the trigger can fire with y_hat == y_pos under metric error
        // definitions; Algorithm requirements still demand y_neg != y_pos
        if (fallback != nullptr) *fallback = true;
    }
    std::size_t idx = rng.index(labels.size() - 1);
    if (idx >= pos_idx) ++idx;
    return labels.value(idx);
}

StepOutcome lighttune_step(MlpModel& model, std::span<const double> x, double y_true,
                           const LabelSet& labels, const FineTuneConfig& config,
                           FineTuneState& state, std::optional<double> precomputed_prediction,
                           MacCounter* mac) {
    if (!std::isfinite(y_true)) throw InputError("ground-truth value must be finite");

    StepOutcome out;
    double y_hat_label;
    if (precomputed_prediction.has_value()) {
        out.prediction = *precomputed_prediction;
        y_hat_label = labels.nearest(*precomputed_prediction);
    } else {
        const Prediction pred = predict_label(model, x, labels, mac);
        out.prediction = pred.label;
        y_hat_label = pred.label;
    }
    out.error = std::abs(out.prediction - y_true);
    out.triggered = should_update(out.error, config.delta);
    if (!out.triggered) return out;

    const double y_pos = labels.nearest(y_true);
    bool fb = false;
    const double y_neg =
        sample_negative(y_pos, labels, config.sampling, y_hat_label, state.rng, &fb);
    out.negative_label = y_neg;
    out.hard_fallback = fb;

    std::vector<double> z_pos(x.begin(), x.end());
    z_pos.push_back(y_pos);
    std::vector<double> z_neg(x.begin(), x.end());
    z_neg.push_back(y_neg);

    const LayerActivations acts_pos = forward_pass(model, z_pos, mac);
    const LayerActivations acts_neg = forward_pass(model, z_neg, mac);

    const GoodnessReport g_pos = goodness_report(acts_pos);
    const GoodnessReport g_neg = goodness_report(acts_neg);
    out.loss = quadratic_loss(g_pos.per_layer.back(), g_neg.per_layer.back(), config.threshold_T);

    const std::vector<Matrix> grads =
        all_layer_gradients(model, acts_pos, acts_neg, config.threshold_T, LossKind::quadratic,
                            mac);
    for (std::size_t l = 1; l <= model.layer_count(); ++l)
        optimizer_step(model.layer(l), grads[l - 1], state.layers[l - 1], config, mac);
    return out;
}

}  // namespace lighttune
