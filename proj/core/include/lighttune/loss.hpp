#pragma once

#include <span>

namespace lighttune {

enum class LossKind { softplus, quadratic };

/// ln(1 + e^u) evaluated as max(u, 0) + log1p(exp(-|u|)) so large |u| cannot
/// overflow.
double stable_softplus(double u);

/// Logistic sigmoid 1 / (1 + e^{-u}), overflow safe.
double stable_sigmoid(double u);

/// Per-layer Softplus loss for one positive and one negative sample:
/// (1/M) sum ln(1 + e^{-(g+ - T)}) + (1/M) sum ln(1 + e^{g- - T}).
double softplus_loss(std::span<const double> g_pos, std::span<const double> g_neg,
                     double threshold);

/// Per-layer quadratic loss:
/// (1/M) sum [(g+ - T)^2 - 4(g+ - T)] + (1/M) sum [(g- - T)^2 + 4(g- - T)].
double quadratic_loss(std::span<const double> g_pos, std::span<const double> g_neg,
                      double threshold);

}  // namespace lighttune
