#pragma once

#include <cstdint>
#include <vector>

#include "lighttune/mlp.hpp"
#include "lighttune/rng.hpp"

namespace lighttune::verify {

/// Constants of the boundedness analysis: per-layer activation bounds B_l,
/// their maximum B_h, and the derived gradient/loss/smoothness constants.
struct BoundConstants {
    double b_z = 0.0;
    double b_theta = 0.0;
    std::vector<double> b_l;  // B_0 .. B_L
    double b_h = 0.0;
};

/// B_0 = B_z, B_l = sqrt(M_l) B_theta (B_{l-1} + 1), B_h = max_l B_l.
BoundConstants activation_bound(const std::vector<std::size_t>& dims, double b_z,
                                double b_theta);

/// Per-neuron gradient norm bound 8 (B_h^2 + T + 2) B_h (B_h + 1) / M_l.
double gradient_bound(double b_h, double threshold, std::size_t m_l);

/// Loss magnitude bound M = (B_h^2 + T + 2)^2 + 4 (B_h^2 + T + 2).
double loss_bound(double b_h, double threshold);

/// Smoothness constant rho_l = 8 (3 B_h^2 + T + 2) (B_h + 1)^2 / M_l.
double smoothness_const(double b_h, double threshold, std::size_t m_l);

/// Central finite differences of the layer-local quadratic loss with respect
/// to the layer's augmented parameters [W_l, b_l]. kink_flag (optional) is
/// set when some pre-activation of the layer lies within 10*step of zero at
/// the evaluation point, where the two-sided difference may straddle the
/// ReLU kink.
Matrix finite_diff_gradient(const MlpModel& model, std::span<const double> z_pos,
                            std::span<const double> z_neg, std::size_t layer, double step,
                            double threshold, bool* kink_flag = nullptr);

/// One-sided (forward) difference, used to cross-validate the central one.
Matrix forward_diff_gradient(const MlpModel& model, std::span<const double> z_pos,
                             std::span<const double> z_neg, std::size_t layer, double step,
                             double threshold);

enum class Algorithm { bler_predict, cqi_tune, ri_cqi_tune };

/// Worst-case MAC budgets: Q = sum M_l M_{l-1}, N_total = sum M_l (M_{l-1}+1),
/// BLER-Predict = C Q, CQI-Tune = (C+2) Q + 4 N_total,
/// RI-CQI-Tune = (3C+2) Q + 4 N_total.
struct MacBudget {
    long long q = 0;
    long long n_total = 0;
    int classes = 0;
    long long bler_predict = 0;
    long long cqi_tune = 0;
    long long ri_cqi_tune = 0;

    long long total_for(Algorithm a) const {
        switch (a) {
            case Algorithm::bler_predict: return bler_predict;
            case Algorithm::cqi_tune: return cqi_tune;
            case Algorithm::ri_cqi_tune: return ri_cqi_tune;
        }
        return 0;
    }
};

MacBudget mac_budget(const std::vector<std::size_t>& dims, int classes);

/// Gap between the quadratic loss branch and the scaled-shifted Softplus it
/// approximates, swept over x = g - T.
struct TaylorGapSample {
    double x = 0.0;
    double gap = 0.0;
};

struct TaylorGapReport {
    double max_gap = 0.0;
    double argmax_x = 0.0;
    double max_gap_over_cube = 0.0;  // sup gap(x)/|x|^3
    double fitted_exponent = 0.0;    // log-log least squares slope
    std::vector<TaylorGapSample> samples;
};

/// Dense sweep of |(x^2 - 4x) - 8 (ln(1+e^{-x}) - ln 2)| and the mirrored
/// negative branch over [x_lo, x_hi] in [-2, 2].
TaylorGapReport taylor_gap_sweep(double x_lo, double x_hi, int n_points);

/// Windowed trigger-rate statistics of an online run.
struct DecayReport {
    std::vector<double> window_rates;    // non-overlapping windows
    std::vector<long> cumulative;        // cumulative count per window end
    long window = 100;
    long total = 0;
    long triggered = 0;
    double first_window_rate = 0.0;
    double final_window_rate = 0.0;
    /// count(N) / count(N/2) at the largest even prefix; 2.0 for a linearly
    /// growing count, below for sublinear growth. 0 when count(N/2) == 0.
    double sublinearity_ratio = 0.0;

    long count_at(long n) const;  // triggers among the first n entries
};

DecayReport decay_monitor(const std::vector<std::uint8_t>& trigger_log, long window = 100);

/// Assumption-2 helpers: models with per-neuron parameter rows clipped to
/// norm <= b_theta and inputs scaled to norm <= b_z.
MlpModel random_bounded_model(const std::vector<std::size_t>& dims, double b_theta, Rng& rng);
std::vector<double> random_bounded_input(std::size_t dim, double b_z, Rng& rng);
/// Clips every neuron row [w_j, b_j] of every layer to norm <= b_theta.
void clip_model(MlpModel& model, double b_theta);

/// Never-exceed sweep for the four bound constants over random models and
/// inputs respecting the boundedness assumption. Ratios are measured/bound;
/// a ratio above 1 is a violation.
struct BoundSweepResult {
    long trials = 0;
    long violations = 0;
    double max_activation_ratio = 0.0;
    double max_gradient_ratio = 0.0;
    double max_loss_ratio = 0.0;
    double max_lipschitz_ratio = 0.0;
    double rho_terminal = 0.0;  // rho_L for the swept dims
};

BoundSweepResult bound_sweep(const std::vector<std::size_t>& dims, double b_z, double b_theta,
                             double threshold, long trials, std::uint64_t seed);

/// Finite-difference agreement sweep at kink-free points.
struct FdSweepResult {
    long points = 0;
    long resampled_kink = 0;   // draws rejected by the kink margin
    long within_tolerance = 0; // rel. error <= 1e-5
    double max_rel_error = 0.0;
    double fraction_ok = 0.0;
};

FdSweepResult fd_sweep(const std::vector<std::size_t>& dims, double threshold, long points,
                       double step, std::uint64_t seed);

/// Relative Frobenius distance ||a-b|| / max(||a||, ||b||); 0 when both are 0.
double relative_error(const Matrix& a, const Matrix& b);

}  // namespace lighttune::verify
