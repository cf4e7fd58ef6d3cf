#include "lighttune/verify.hpp"

#include <algorithm>
#include <cmath>

#include "lighttune/errors.hpp"
#include "lighttune/goodness.hpp"
#include "lighttune/gradient.hpp"
#include "lighttune/loss.hpp"

namespace lighttune::verify {

BoundConstants activation_bound(const std::vector<std::size_t>& dims, double b_z,
                                double b_theta) {
    if (dims.size() < 2) throw InputError("dims must describe at least one layer");
    if (!(b_z > 0.0) || b_theta < 0.0) throw InputError("bounds must be positive");
    BoundConstants out;
    out.b_z = b_z;
    out.b_theta = b_theta;
    out.b_l.resize(dims.size());
    out.b_l[0] = b_z;
    for (std::size_t l = 1; l < dims.size(); ++l) {
        out.b_l[l] = std::sqrt(static_cast<double>(dims[l])) * b_theta * (out.b_l[l - 1] + 1.0);
    }
    out.b_h = *std::max_element(out.b_l.begin(), out.b_l.end());
    return out;
}

double gradient_bound(double b_h, double threshold, std::size_t m_l) {
    return 8.0 * (b_h * b_h + threshold + 2.0) * b_h * (b_h + 1.0) /
           static_cast<double>(m_l);
}

double loss_bound(double b_h, double threshold) {
    const double a = b_h * b_h + threshold + 2.0;
    return a * a + 4.0 * a;
}

double smoothness_const(double b_h, double threshold, std::size_t m_l) {
    return 8.0 * (3.0 * b_h * b_h + threshold + 2.0) * (b_h + 1.0) * (b_h + 1.0) /
           static_cast<double>(m_l);
}

namespace {

/// Layer-l quadratic loss of the full forward composition.
double layer_loss(const MlpModel& model, std::span<const double> z_pos,
                  std::span<const double> z_neg, std::size_t layer, double threshold) {
    const LayerActivations ap = forward_pass(model, z_pos);
    const LayerActivations an = forward_pass(model, z_neg);
    const std::vector<double>& hp = ap.act(layer);
    const std::vector<double>& hn = an.act(layer);
    std::vector<double> gp(hp.size()), gn(hn.size());
    for (std::size_t j = 0; j < hp.size(); ++j) gp[j] = hp[j] * hp[j];
    for (std::size_t j = 0; j < hn.size(); ++j) gn[j] = hn[j] * hn[j];
    return quadratic_loss(gp, gn, threshold);
}

double& model_param(MlpModel& model, std::size_t layer, std::size_t j, std::size_t k) {
    Layer& lay = model.layer(layer);
    return k < lay.weights.cols() ? lay.weights(j, k) : lay.bias[j];
}

bool near_kink(const MlpModel& model, std::span<const double> z_pos,
               std::span<const double> z_neg, std::size_t layer, double margin) {
    const LayerActivations ap = forward_pass(model, z_pos);
    const LayerActivations an = forward_pass(model, z_neg);
    for (double p : ap.pre(layer))
        if (std::abs(p) <= margin) return true;
    for (double p : an.pre(layer))
        if (std::abs(p) <= margin) return true;
    return false;
}

}  // namespace

Matrix finite_diff_gradient(const MlpModel& model, std::span<const double> z_pos,
                            std::span<const double> z_neg, std::size_t layer, double step,
                            double threshold, bool* kink_flag) {
    if (!(step > 0.0)) throw InputError("finite-difference step must be > 0");
    if (layer < 1 || layer > model.layer_count()) throw InputError("layer index out of range");
    if (kink_flag != nullptr)
        *kink_flag = near_kink(model, z_pos, z_neg, layer, 10.0 * step);

    MlpModel work = model;
    const std::size_t m = model.width(layer);
    const std::size_t n = model.width(layer - 1);
    Matrix grad(m, n + 1, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t k = 0; k <= n; ++k) {
            double& p = model_param(work, layer, j, k);
            const double saved = p;
            p = saved + step;
            const double up = layer_loss(work, z_pos, z_neg, layer, threshold);
            p = saved - step;
            const double down = layer_loss(work, z_pos, z_neg, layer, threshold);
            p = saved;
            grad(j, k) = (up - down) / (2.0 * step);
        }
    }
    return grad;
}

Matrix forward_diff_gradient(const MlpModel& model, std::span<const double> z_pos,
                             std::span<const double> z_neg, std::size_t layer, double step,
                             double threshold) {
    if (!(step > 0.0)) throw InputError("finite-difference step must be > 0");
    MlpModel work = model;
    const std::size_t m = model.width(layer);
    const std::size_t n = model.width(layer - 1);
    const double base = layer_loss(work, z_pos, z_neg, layer, threshold);
    Matrix grad(m, n + 1, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t k = 0; k <= n; ++k) {
            double& p = model_param(work, layer, j, k);
            const double saved = p;
            p = saved + step;
            const double up = layer_loss(work, z_pos, z_neg, layer, threshold);
            p = saved;
            grad(j, k) = (up - base) / step;
        }
    }
    return grad;
}

MacBudget mac_budget(const std::vector<std::size_t>& dims, int classes) {
    if (dims.size() < 2) throw InputError("dims must describe at least one layer");
    if (classes < 2) throw InputError("class count must be >= 2");
    MacBudget b;
    for (std::size_t l = 1; l < dims.size(); ++l) {
        b.q += static_cast<long long>(dims[l] * dims[l - 1]);
        b.n_total += static_cast<long long>(dims[l] * (dims[l - 1] + 1));
    }
    b.classes = classes;
    b.bler_predict = static_cast<long long>(classes) * b.q;
    b.cqi_tune = static_cast<long long>(classes + 2) * b.q + 4 * b.n_total;
    b.ri_cqi_tune = static_cast<long long>(3 * classes + 2) * b.q + 4 * b.n_total;
    return b;
}

TaylorGapReport taylor_gap_sweep(double x_lo, double x_hi, int n_points) {
    if (!(x_lo >= -2.0 && x_hi <= 2.0 && x_lo < x_hi))
        throw InputError("sweep range must lie within [-2, 2]");
    if (n_points < 2) throw InputError("need at least two sweep points");

    const double ln2 = 0.69314718055994530941723212145818;
    TaylorGapReport rep;
    rep.samples.reserve(static_cast<std::size_t>(n_points));

    double sum_lx = 0.0, sum_lg = 0.0, sum_lx2 = 0.0, sum_lxlg = 0.0;
    long fit_n = 0;

    for (int i = 0; i < n_points; ++i) {
        const double x = x_lo + (x_hi - x_lo) * static_cast<double>(i) /
                                    static_cast<double>(n_points - 1);
        // positive branch: quadratic (x^2 - 4x) vs 8 (ln(1+e^{-x}) - ln 2)
        const double gap_pos = std::abs((x * x - 4.0 * x) -
                                        8.0 * (stable_softplus(-x) - ln2));
        // mirrored negative branch: (x^2 + 4x) vs 8 (ln(1+e^{x}) - ln 2)
        const double gap_neg = std::abs((x * x + 4.0 * x) -
                                        8.0 * (stable_softplus(x) - ln2));
        const double gap = std::max(gap_pos, gap_neg);
        rep.samples.push_back(TaylorGapSample{x, gap});
        if (gap > rep.max_gap) {
            rep.max_gap = gap;
            rep.argmax_x = x;
        }
        // points below |x| = 1e-3 sit near the double rounding floor of the
        // softplus evaluation and would contaminate the ratio and the fit
        const double ax = std::abs(x);
        if (ax >= 1e-3 && gap > 0.0) {
            rep.max_gap_over_cube = std::max(rep.max_gap_over_cube, gap / (ax * ax * ax));
            const double lx = std::log(ax);
            const double lg = std::log(gap);
            sum_lx += lx;
            sum_lg += lg;
            sum_lx2 += lx * lx;
            sum_lxlg += lx * lg;
            ++fit_n;
        }
    }
    if (fit_n >= 2) {
        const double nd = static_cast<double>(fit_n);
        const double denom = nd * sum_lx2 - sum_lx * sum_lx;
        if (denom != 0.0) rep.fitted_exponent = (nd * sum_lxlg - sum_lx * sum_lg) / denom;
    }
    return rep;
}

long DecayReport::count_at(long n) const {
    if (n <= 0 || cumulative.empty()) return 0;
    // cumulative[i] counts triggers among the first (i+1)*window entries
    const long idx = std::min<long>(n / window, static_cast<long>(cumulative.size())) - 1;
    return idx >= 0 ? cumulative[static_cast<std::size_t>(idx)] : 0;
}

DecayReport decay_monitor(const std::vector<std::uint8_t>& trigger_log, long window) {
    if (trigger_log.empty()) throw InputError("trigger log is empty");
    if (window < 1) throw InputError("window must be >= 1");

    DecayReport rep;
    rep.window = window;
    rep.total = static_cast<long>(trigger_log.size());

    const long n = rep.total - (rep.total % 2);
    long in_window = 0;
    long cum = 0;
    long count_half = 0, count_full = 0;
    for (std::size_t i = 0; i < trigger_log.size(); ++i) {
        if (trigger_log[i]) {
            ++in_window;
            ++cum;
        }
        if (static_cast<long>(i + 1) == n / 2) count_half = cum;
        if (static_cast<long>(i + 1) == n) count_full = cum;
        if ((i + 1) % static_cast<std::size_t>(window) == 0) {
            rep.window_rates.push_back(static_cast<double>(in_window) /
                                       static_cast<double>(window));
            rep.cumulative.push_back(cum);
            in_window = 0;
        }
    }
    rep.triggered = cum;
    if (!rep.window_rates.empty()) {
        rep.first_window_rate = rep.window_rates.front();
        rep.final_window_rate = rep.window_rates.back();
    } else {
        const double r = static_cast<double>(cum) / static_cast<double>(trigger_log.size());
        rep.first_window_rate = rep.final_window_rate = r;
    }
    rep.sublinearity_ratio = count_half > 0 ? static_cast<double>(count_full) /
                                                  static_cast<double>(count_half)
                                            : 0.0;
    return rep;
}

MlpModel random_bounded_model(const std::vector<std::size_t>& dims, double b_theta, Rng& rng) {
    MlpModel m = MlpModel::zeros(dims);
    for (std::size_t l = 1; l <= m.layer_count(); ++l) {
        Layer& lay = m.layer(l);
        for (std::size_t j = 0; j < lay.weights.rows(); ++j) {
            for (std::size_t k = 0; k < lay.weights.cols(); ++k)
                lay.weights(j, k) = rng.uniform(-1.0, 1.0);
            lay.bias[j] = rng.uniform(-1.0, 1.0);
        }
    }
    clip_model(m, b_theta);
    return m;
}

void clip_model(MlpModel& model, double b_theta) {
    if (!(b_theta >= 0.0)) throw InputError("b_theta must be >= 0");
    for (std::size_t l = 1; l <= model.layer_count(); ++l) {
        Layer& lay = model.layer(l);
        for (std::size_t j = 0; j < lay.weights.rows(); ++j) {
            double norm2 = lay.bias[j] * lay.bias[j];
            for (std::size_t k = 0; k < lay.weights.cols(); ++k)
                norm2 += lay.weights(j, k) * lay.weights(j, k);
            const double norm = std::sqrt(norm2);
            if (norm > b_theta && norm > 0.0) {
                const double f = b_theta / norm;
                for (std::size_t k = 0; k < lay.weights.cols(); ++k) lay.weights(j, k) *= f;
                lay.bias[j] *= f;
            }
        }
    }
}

std::vector<double> random_bounded_input(std::size_t dim, double b_z, Rng& rng) {
    if (dim == 0) throw InputError("input dimension must be > 0");
    std::vector<double> v(dim);
    double norm2 = 0.0;
    for (double& x : v) {
        x = rng.normal(0.0, 1.0);
        norm2 += x * x;
    }
    const double norm = std::sqrt(norm2);
    const double radius = b_z * rng.uniform();  // uniform radius within the ball
    if (norm > 0.0) {
        for (double& x : v) x *= radius / norm;
    }
    return v;
}

double relative_error(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw ShapeError("matrices differ in shape");
    double diff2 = 0.0, na2 = 0.0, nb2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        diff2 += d * d;
        na2 += a.data()[i] * a.data()[i];
        nb2 += b.data()[i] * b.data()[i];
    }
    const double denom = std::sqrt(std::max(na2, nb2));
    if (denom == 0.0) return 0.0;
    return std::sqrt(diff2) / denom;
}

namespace {

double row_norm(const Matrix& m, std::size_t j) {
    double s = 0.0;
    for (std::size_t k = 0; k < m.cols(); ++k) s += m(j, k) * m(j, k);
    return std::sqrt(s);
}

double vec_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

/// Flattened-gradient distance between two parameter settings of one layer,
/// with the layer inputs held fixed.
double layer_gradient_distance(const MlpModel& a, const MlpModel& b, std::size_t layer,
                               std::span<const double> z_pos, std::span<const double> z_neg,
                               double threshold, double* param_dist) {
    const LayerActivations ap = forward_pass(a, z_pos);
    const LayerActivations an = forward_pass(a, z_neg);
    const LayerActivations bp = forward_pass(b, z_pos);
    const LayerActivations bn = forward_pass(b, z_neg);
    const Matrix ga = layer_gradient(a, layer, ap, an, threshold);
    const Matrix gb = layer_gradient(b, layer, bp, bn, threshold);
    double d2 = 0.0;
    for (std::size_t i = 0; i < ga.size(); ++i) {
        const double d = ga.data()[i] - gb.data()[i];
        d2 += d * d;
    }
    const Layer& la = a.layer(layer);
    const Layer& lb = b.layer(layer);
    double p2 = 0.0;
    for (std::size_t i = 0; i < la.weights.size(); ++i) {
        const double d = la.weights.data()[i] - lb.weights.data()[i];
        p2 += d * d;
    }
    for (std::size_t j = 0; j < la.bias.size(); ++j) {
        const double d = la.bias[j] - lb.bias[j];
        p2 += d * d;
    }
    *param_dist = std::sqrt(p2);
    return std::sqrt(d2);
}

}  // namespace

BoundSweepResult bound_sweep(const std::vector<std::size_t>& dims, double b_z, double b_theta,
                             double threshold, long trials, std::uint64_t seed) {
    const BoundConstants bc = activation_bound(dims, b_z, b_theta);
    const std::size_t L = dims.size() - 1;
    BoundSweepResult res;
    res.trials = trials;
    res.rho_terminal = smoothness_const(bc.b_h, threshold, dims.back());
    Rng rng(seed);

    const double loss_m = loss_bound(bc.b_h, threshold);
    for (long t = 0; t < trials; ++t) {
        const MlpModel model = random_bounded_model(dims, b_theta, rng);
        const std::vector<double> z_pos = random_bounded_input(dims[0], b_z, rng);
        const std::vector<double> z_neg = random_bounded_input(dims[0], b_z, rng);
        const LayerActivations ap = forward_pass(model, z_pos);
        const LayerActivations an = forward_pass(model, z_neg);

        bool violated = false;
        for (std::size_t l = 1; l <= L; ++l) {
            const double bound_l = bc.b_l[l];
            const double r = std::max(vec_norm(ap.act(l)), vec_norm(an.act(l))) / bound_l;
            res.max_activation_ratio = std::max(res.max_activation_ratio, r);
            if (r > 1.0) violated = true;

            const Matrix grad = layer_gradient(model, l, ap, an, threshold);
            const double gb = gradient_bound(bc.b_h, threshold, dims[l]);
            for (std::size_t j = 0; j < grad.rows(); ++j) {
                const double gr = row_norm(grad, j) / gb;
                res.max_gradient_ratio = std::max(res.max_gradient_ratio, gr);
                if (gr > 1.0) violated = true;
            }

            std::vector<double> gp(ap.act(l).size()), gn(an.act(l).size());
            for (std::size_t j = 0; j < gp.size(); ++j) gp[j] = ap.act(l)[j] * ap.act(l)[j];
            for (std::size_t j = 0; j < gn.size(); ++j) gn[j] = an.act(l)[j] * an.act(l)[j];
            const double lr = std::abs(quadratic_loss(gp, gn, threshold)) / loss_m;
            res.max_loss_ratio = std::max(res.max_loss_ratio, lr);
            if (lr > 1.0) violated = true;
        }

        // Lipschitz pair check on a random layer within the bounded ball
        const std::size_t l = 1 + rng.index(L);
        MlpModel other = model;
        {
            Layer& lay = other.layer(l);
            for (std::size_t j = 0; j < lay.weights.rows(); ++j) {
                for (std::size_t k = 0; k < lay.weights.cols(); ++k)
                    lay.weights(j, k) += rng.uniform(-0.2, 0.2);
                lay.bias[j] += rng.uniform(-0.2, 0.2);
            }
            clip_model(other, b_theta);
        }
        double param_dist = 0.0;
        const double grad_dist =
            layer_gradient_distance(model, other, l, z_pos, z_neg, threshold, &param_dist);
        if (param_dist > 1e-12) {
            const double rho = smoothness_const(bc.b_h, threshold, dims[l]);
            const double r = grad_dist / (rho * param_dist);
            res.max_lipschitz_ratio = std::max(res.max_lipschitz_ratio, r);
            if (r > 1.0) violated = true;
        }

        if (violated) ++res.violations;
    }
    return res;
}

FdSweepResult fd_sweep(const std::vector<std::size_t>& dims, double threshold, long points,
                       double step, std::uint64_t seed) {
    FdSweepResult res;
    Rng rng(seed);
    const std::size_t L = dims.size() - 1;
    const double margin = 1e-3;

    for (long t = 0; t < points; ++t) {
        MlpModel model = MlpModel::random_init(dims, rng);
        std::vector<double> z_pos(dims[0]), z_neg(dims[0]);
        for (double& x : z_pos) x = rng.uniform(-1.5, 1.5);
        z_neg = z_pos;
        z_neg.back() = rng.uniform(-1.5, 1.5);
        const std::size_t layer = 1 + rng.index(L);

        // kink-free evaluation points only: every |p_l| must clear the margin
        bool kink = false;
        {
            const LayerActivations ap = forward_pass(model, z_pos);
            const LayerActivations an = forward_pass(model, z_neg);
            for (double p : ap.pre(layer))
                if (std::abs(p) <= margin) kink = true;
            for (double p : an.pre(layer))
                if (std::abs(p) <= margin) kink = true;
        }
        if (kink) {
            ++res.resampled_kink;
            --t;  // resample
            continue;
        }

        const LayerActivations ap = forward_pass(model, z_pos);
        const LayerActivations an = forward_pass(model, z_neg);
        const Matrix closed = layer_gradient(model, layer, ap, an, threshold);
        const Matrix fd = finite_diff_gradient(model, z_pos, z_neg, layer, step, threshold);
        const double rel = relative_error(closed, fd);
        res.max_rel_error = std::max(res.max_rel_error, rel);
        if (rel <= 1e-5) ++res.within_tolerance;
        ++res.points;
    }
    res.fraction_ok = res.points > 0
                          ? static_cast<double>(res.within_tolerance) /
                                static_cast<double>(res.points)
                          : 0.0;
    return res;
}

}  // namespace lighttune::verify
