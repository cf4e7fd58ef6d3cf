#include "lighttune/optimizer.hpp"

#include <cmath>

#include "lighttune/errors.hpp"

namespace lighttune {

void FineTuneConfig::validate() const {
    if (delta < 0.0) throw ConfigError("delta must be >= 0");
    if (!(alpha_f > 0.0)) throw ConfigError("alpha_f must be > 0");
    if (beta1 < 0.0 || beta1 >= 1.0) throw ConfigError("beta1 must be in [0, 1)");
    if (beta2 < 0.0 || beta2 >= 1.0) throw ConfigError("beta2 must be in [0, 1)");
    if (epsilon < 0.0) throw ConfigError("epsilon must be >= 0");
    if (!std::isfinite(threshold_T)) throw ConfigError("threshold T must be finite");
}

OptimizerState OptimizerState::zeros_like(const Layer& layer) {
    OptimizerState s;
    s.m = Matrix(layer.weights.rows(), layer.weights.cols() + 1, 0.0);
    s.v = Matrix(layer.weights.rows(), layer.weights.cols() + 1, 0.0);
    s.t_adam = 0;
    return s;
}

namespace {

inline double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

inline double& param_ref(Layer& layer, std::size_t j, std::size_t k, std::size_t n_in) {
    return k < n_in ? layer.weights(j, k) : layer.bias[j];
}

}  // namespace

void optimizer_step(Layer& layer, const Matrix& grad, OptimizerState& state,
                    const FineTuneConfig& config, MacCounter* mac) {
    const std::size_t rows = layer.weights.rows();
    const std::size_t n_in = layer.weights.cols();
    if (grad.rows() != rows || grad.cols() != n_in + 1)
        throw ShapeError("gradient shape does not match layer parameters");
    if (!state.m.same_shape(grad) || !state.v.same_shape(grad))
        throw ShapeError("optimizer state shape does not match gradient");

    for (std::size_t i = 0; i < grad.size(); ++i) {
        if (!std::isfinite(grad.data()[i]))
            throw InputError("non-finite gradient entry, update skipped");
    }

    const double alpha = config.alpha_f;

    if (config.variant == UpdateVariant::sign_update) {
        for (std::size_t j = 0; j < rows; ++j)
            for (std::size_t k = 0; k <= n_in; ++k)
                param_ref(layer, j, k, n_in) -= alpha * sgn(grad(j, k));
        mac_add(mac, static_cast<long long>(grad.size()));
        return;
    }

    if (config.variant == UpdateVariant::one_step) {
        state.t_adam = 1;
        const double c1 = 1.0 - config.beta1;
        const double c2 = 1.0 - config.beta2;
        for (std::size_t i = 0; i < grad.size(); ++i) {
            const double g = grad.data()[i];
            state.m.data()[i] = c1 * g;
            state.v.data()[i] = c2 * g * g;
        }
    } else {
        state.t_adam += 1;
        const double b1 = config.beta1;
        const double b2 = config.beta2;
        for (std::size_t i = 0; i < grad.size(); ++i) {
            const double g = grad.data()[i];
            state.m.data()[i] = b1 * state.m.data()[i] + (1.0 - b1) * g;
            state.v.data()[i] = b2 * state.v.data()[i] + (1.0 - b2) * g * g;
        }
    }

    const double corr1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t_adam));
    const double corr2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t_adam));
    for (std::size_t j = 0; j < rows; ++j) {
        for (std::size_t k = 0; k <= n_in; ++k) {
            const double mhat = state.m(j, k) / corr1;
            const double vhat = state.v(j, k) / corr2;
            const double denom = std::sqrt(vhat) + config.epsilon;
            // denom == 0 only when epsilon == 0 and vhat == 0 (zero or
            // underflowed gradient); the limit of mhat/denom is sgn(mhat)
            const double delta = denom == 0.0 ? sgn(mhat) : mhat / denom;
            param_ref(layer, j, k, n_in) -= alpha * delta;
        }
    }
    mac_add(mac, static_cast<long long>(grad.size()));
}

}  // namespace lighttune
