#pragma once

#include <optional>
#include <span>
#include <vector>

#include "lighttune/goodness.hpp"
#include "lighttune/optimizer.hpp"
#include "lighttune/rng.hpp"

namespace lighttune {

/// Telemetry of one online step.
struct StepOutcome {
    double prediction = 0.0;
    double error = 0.0;
    bool triggered = false;
    std::optional<double> negative_label;
    std::optional<double> loss;  // terminal-layer quadratic loss when triggered
    bool hard_fallback = false;  // hard sampling fell back to uniform
};

/// All state carried across steps: per-layer optimizer moments and the
/// negative-sampling RNG. No samples are ever retained.
struct FineTuneState {
    std::vector<OptimizerState> layers;
    Rng rng;

    static FineTuneState make(const MlpModel& model, const FineTuneConfig& config);
};

/// Error-driven update indicator: true iff e >= delta (inclusive).
bool should_update(double error, double delta);

/// Draws an incorrect label. uniform: each label != y_pos with probability
/// 1/(C-1). hard: exactly y_hat; if y_hat == y_pos the draw falls back to
/// uniform and *fallback is set.
double sample_negative(double y_pos, const LabelSet& labels, NegativeSampling strategy,
                       double y_hat, Rng& rng, bool* fallback = nullptr);

/// One LightTune step. Predicts, computes e = |prediction - y_true|, and when
/// e >= delta performs a single-pair update: one forward pass per polarity,
/// closed-form per-layer gradients, one optimizer step per layer. y_true may
/// be an off-grid metric; the positive label is its nearest class.
///
/// precomputed_prediction, when provided, replaces the argmax inference (the
/// caller already predicted for these features, e.g. in a CQI back-off loop).
StepOutcome lighttune_step(MlpModel& model, std::span<const double> x, double y_true,
                           const LabelSet& labels, const FineTuneConfig& config,
                           FineTuneState& state,
                           std::optional<double> precomputed_prediction = std::nullopt,
                           MacCounter* mac = nullptr);

}  // namespace lighttune
