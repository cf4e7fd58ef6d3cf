#pragma once

#include <cstdint>

#include "lighttune/mlp.hpp"

namespace lighttune {

enum class UpdateVariant { standard_adam, one_step, sign_update };
enum class NegativeSampling { uniform, hard };

/// Configuration of the threshold-triggered online fine-tuning loop.
struct FineTuneConfig {
    double delta = 0.3;     // trigger threshold
    double alpha_f = 0.03;  // online learning rate
    double threshold_T = 9.0;
    UpdateVariant variant = UpdateVariant::one_step;
    NegativeSampling sampling = NegativeSampling::uniform;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Adam moments for one layer's augmented parameter matrix [W_l, b_l].
/// t_adam = 0 means never updated; the one-step variant resets the counter to
/// 1 and the moments to zero at every trigger.
struct OptimizerState {
    Matrix m;
    Matrix v;
    long t_adam = 0;

    static OptimizerState zeros_like(const Layer& layer);
};

/// Applies one update to [W_l, b_l] in place. grad has shape
/// M_l x (M_{l-1}+1) with the bias gradient in the last column.
///   standard_adam: t += 1, moment recursions, bias-corrected step
///   one_step:      t := 1, m := (1-b1) g, v := (1-b2) g^2, same step
///   sign_update:   theta -= alpha sgn(g), sgn(0) = 0
/// A non-finite gradient raises InputError before any mutation.
void optimizer_step(Layer& layer, const Matrix& grad, OptimizerState& state,
                    const FineTuneConfig& config, MacCounter* mac = nullptr);

}  // namespace lighttune
