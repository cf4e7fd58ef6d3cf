#include <doctest.h>

#include <cmath>

#include "lighttune/errors.hpp"
#include "lighttune/optimizer.hpp"
#include "lighttune/rng.hpp"

using namespace lighttune;

namespace {

Layer make_layer(std::size_t out, std::size_t in) {
    Layer l;
    l.weights = Matrix(out, in, 0.0);
    l.bias.assign(out, 0.0);
    return l;
}

Matrix grad_from(const std::vector<double>& values, std::size_t out, std::size_t in_plus_1) {
    Matrix g(out, in_plus_1, 0.0);
    for (std::size_t i = 0; i < values.size(); ++i) g.data()[i] = values[i];
    return g;
}

}  // namespace

TEST_CASE("sign update extracts signs, with sgn(0) = 0") {
    Layer layer = make_layer(1, 2);
    OptimizerState state = OptimizerState::zeros_like(layer);
    FineTuneConfig cfg;
    cfg.variant = UpdateVariant::sign_update;
    cfg.alpha_f = 0.03;

    const Matrix g = grad_from({2.5, -0.1, 0.0}, 1, 3);
    optimizer_step(layer, g, state, cfg);
    CHECK(layer.weights(0, 0) == doctest::Approx(-0.03));
    CHECK(layer.weights(0, 1) == doctest::Approx(+0.03));
    CHECK(layer.bias[0] == 0.0);
    CHECK(state.t_adam == 0);  // sign update keeps no moments
}

TEST_CASE("one-step with zero betas and epsilon equals the sign update bit for bit") {
    Rng rng(41);
    for (int trial = 0; trial < 500; ++trial) {
        Layer a = make_layer(2, 3);
        Layer b = make_layer(2, 3);
        for (std::size_t j = 0; j < 2; ++j) {
            for (std::size_t k = 0; k < 3; ++k) {
                const double w = rng.uniform(-1.0, 1.0);
                a.weights(j, k) = w;
                b.weights(j, k) = w;
            }
            const double bias = rng.uniform(-1.0, 1.0);
            a.bias[j] = bias;
            b.bias[j] = bias;
        }
        Matrix g(2, 4, 0.0);
        for (std::size_t i = 0; i < g.size(); ++i) {
            // magnitudes across many orders, zeros included
            const double mag = std::pow(10.0, rng.uniform(-12.0, 6.0));
            const double r = rng.uniform();
            g.data()[i] = r < 0.1 ? 0.0 : (r < 0.55 ? mag : -mag);
        }

        OptimizerState sa = OptimizerState::zeros_like(a);
        OptimizerState sb = OptimizerState::zeros_like(b);
        FineTuneConfig one_step;
        one_step.variant = UpdateVariant::one_step;
        one_step.beta1 = 0.0;
        one_step.beta2 = 0.0;
        one_step.epsilon = 0.0;
        FineTuneConfig sign;
        sign.variant = UpdateVariant::sign_update;

        optimizer_step(a, g, sa, one_step);
        optimizer_step(b, g, sb, sign);
        CHECK(a == b);
    }
}

TEST_CASE("standard adam matches a scalar hand trace after two identical gradients") {
    Layer layer = make_layer(1, 1);
    layer.weights(0, 0) = 1.0;
    layer.bias[0] = 0.0;
    OptimizerState state = OptimizerState::zeros_like(layer);
    FineTuneConfig cfg;
    cfg.variant = UpdateVariant::standard_adam;
    cfg.alpha_f = 0.1;
    cfg.beta1 = 0.9;
    cfg.beta2 = 0.999;
    cfg.epsilon = 1e-8;

    const double gval = 0.5;
    const Matrix g = grad_from({gval, 0.0}, 1, 2);
    optimizer_step(layer, g, state, cfg);
    optimizer_step(layer, g, state, cfg);
    CHECK(state.t_adam == 2);

    // hand recursion
    double m = 0.0, v = 0.0, theta = 1.0;
    for (int t = 1; t <= 2; ++t) {
        m = 0.9 * m + 0.1 * gval;
        v = 0.999 * v + 0.001 * gval * gval;
        const double mhat = m / (1.0 - std::pow(0.9, t));
        const double vhat = v / (1.0 - std::pow(0.999, t));
        theta -= 0.1 * mhat / (std::sqrt(vhat) + 1e-8);
    }
    CHECK(layer.weights(0, 0) == doctest::Approx(theta).epsilon(1e-15));
}

TEST_CASE("one-step variant resets the counter and moments at every trigger") {
    Layer layer = make_layer(1, 1);
    OptimizerState state = OptimizerState::zeros_like(layer);
    FineTuneConfig cfg;
    cfg.variant = UpdateVariant::one_step;
    cfg.beta1 = 0.9;
    cfg.beta2 = 0.999;

    const Matrix g = grad_from({0.5, 0.25}, 1, 2);
    optimizer_step(layer, g, state, cfg);
    CHECK(state.t_adam == 1);
    CHECK(state.m(0, 0) == doctest::Approx(0.1 * 0.5));
    CHECK(state.v(0, 0) == doctest::Approx(0.001 * 0.25));
    optimizer_step(layer, g, state, cfg);
    CHECK(state.t_adam == 1);
    CHECK(state.m(0, 0) == doctest::Approx(0.1 * 0.5));  // reset, not accumulated
}

TEST_CASE("non-finite gradients are rejected before any mutation") {
    Layer layer = make_layer(1, 1);
    layer.weights(0, 0) = 2.0;
    OptimizerState state = OptimizerState::zeros_like(layer);
    FineTuneConfig cfg;
    const Matrix g = grad_from({std::nan(""), 0.0}, 1, 2);
    CHECK_THROWS_AS(optimizer_step(layer, g, state, cfg), InputError);
    CHECK(layer.weights(0, 0) == 2.0);
    CHECK(state.t_adam == 0);
}

TEST_CASE("config validation") {
    FineTuneConfig cfg;
    cfg.beta1 = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = FineTuneConfig{};
    cfg.delta = -0.1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = FineTuneConfig{};
    cfg.alpha_f = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
