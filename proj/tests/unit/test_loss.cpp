#include <doctest.h>

#include <cmath>

#include "lighttune/errors.hpp"
#include "lighttune/loss.hpp"
#include "lighttune/rng.hpp"

using namespace lighttune;

TEST_CASE("softplus loss at the threshold is 2 ln 2") {
    const std::vector<double> g = {3.0};
    CHECK(softplus_loss(g, g, 3.0) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("softplus loss saturates without overflow") {
    const double T = 10.0;
    const std::vector<double> gp = {T + 50.0};
    const std::vector<double> gn = {T - 50.0};
    const double v = softplus_loss(gp, gn, T);
    CHECK(std::isfinite(v));
    CHECK(v >= 0.0);
    CHECK(v <= 1e-12);
    // extreme magnitudes still finite
    const std::vector<double> huge = {1e308};
    const std::vector<double> zero = {0.0};
    CHECK(std::isfinite(softplus_loss(huge, zero, 0.0)));
}

TEST_CASE("softplus loss equals the unguarded formula where that is finite") {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t m = 1 + rng.index(6);
        std::vector<double> gp(m), gn(m);
        for (double& g : gp) g = rng.uniform(0.0, 30.0);
        for (double& g : gn) g = rng.uniform(0.0, 30.0);
        const double T = rng.uniform(-5.0, 15.0);

        long double direct = 0.0L;
        for (double g : gp) direct += std::log(1.0L + std::exp(-(long double)(g - T)));
        for (double g : gn) direct += std::log(1.0L + std::exp((long double)(g - T)));
        direct /= static_cast<long double>(m);
        if (!std::isfinite(static_cast<double>(direct))) continue;

        CHECK(softplus_loss(gp, gn, T) ==
              doctest::Approx(static_cast<double>(direct)).epsilon(1e-12));
    }
}

TEST_CASE("quadratic loss vanishes when both goodness values sit at T") {
    for (std::size_t m : {1u, 3u, 17u}) {
        const std::vector<double> g(m, 4.0);
        CHECK(quadratic_loss(g, g, 4.0) == 0.0);
    }
}

TEST_CASE("quadratic loss positive-branch vertex") {
    const std::vector<double> gp = {5.0};  // T + 2
    const std::vector<double> gn = {3.0};  // T
    CHECK(quadratic_loss(gp, gn, 3.0) == doctest::Approx(-4.0));
}

TEST_CASE("quadratic loss penalizes negative goodness above T") {
    const std::vector<double> gp = {3.0};
    const std::vector<double> gn = {4.0};  // T + 1
    CHECK(quadratic_loss(gp, gn, 3.0) == doctest::Approx(5.0));
}

TEST_CASE("loss input validation") {
    const std::vector<double> a = {1.0};
    const std::vector<double> b = {1.0, 2.0};
    CHECK_THROWS_AS(quadratic_loss(a, b, 0.0), ShapeError);
    CHECK_THROWS_AS(softplus_loss(a, a, std::nan("")), InputError);
}

TEST_CASE("quadratic loss tracks the scaled shifted softplus within a cubic envelope") {
    // per-neuron branch comparison on x = g - T in [-0.5, 0.5]:
    // |(x^2 - 4x) - 8 (ln(1+e^{-x}) - ln 2)| <= (8/6) 0.0963 |x|^3 + float slack
    const double ln2 = std::log(2.0);
    const double envelope_c = (8.0 / 6.0) * 0.0963;
    double max_gap = 0.0;
    for (int i = 0; i <= 20000; ++i) {
        const double x = -0.5 + i * (1.0 / 20000.0);
        const double gap = std::abs((x * x - 4.0 * x) - 8.0 * (stable_softplus(-x) - ln2));
        CHECK(gap <= envelope_c * std::abs(x) * std::abs(x) * std::abs(x) + 5e-15);
        max_gap = std::max(max_gap, gap);
    }
    CHECK(max_gap <= 0.02);
    CHECK(max_gap > 1e-4);  // the sweep is not degenerate
}
