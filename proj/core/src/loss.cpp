#include "lighttune/loss.hpp"

#include <cmath>

#include "lighttune/errors.hpp"

namespace lighttune {

double stable_softplus(double u) {
    const double m = u > 0.0 ? u : 0.0;
    return m + std::log1p(std::exp(-std::abs(u)));
}

double stable_sigmoid(double u) {
    if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
    const double e = std::exp(u);
    return e / (1.0 + e);
}

namespace {

void check_loss_inputs(std::span<const double> g_pos, std::span<const double> g_neg,
                       double threshold) {
    if (g_pos.size() != g_neg.size())
        throw ShapeError("positive and negative goodness vectors differ in length");
    if (g_pos.empty()) throw ShapeError("goodness vectors must be non-empty");
    if (!std::isfinite(threshold)) throw InputError("threshold T must be finite");
}

}  // namespace

double softplus_loss(std::span<const double> g_pos, std::span<const double> g_neg,
                     double threshold) {
    check_loss_inputs(g_pos, g_neg, threshold);
    const double inv_m = 1.0 / static_cast<double>(g_pos.size());
    double pos = 0.0;
    for (double g : g_pos) pos += stable_softplus(-(g - threshold));
    double neg = 0.0;
    for (double g : g_neg) neg += stable_softplus(g - threshold);
    return inv_m * pos + inv_m * neg;
}

double quadratic_loss(std::span<const double> g_pos, std::span<const double> g_neg,
                      double threshold) {
    check_loss_inputs(g_pos, g_neg, threshold);
    const double inv_m = 1.0 / static_cast<double>(g_pos.size());
    double pos = 0.0;
    for (double g : g_pos) {
        const double x = g - threshold;
        pos += x * x - 4.0 * x;
    }
    double neg = 0.0;
    for (double g : g_neg) {
        const double x = g - threshold;
        neg += x * x + 4.0 * x;
    }
    return inv_m * pos + inv_m * neg;
}

}  // namespace lighttune
