#include "lighttune/gradient.hpp"

#include <string>

#include "lighttune/errors.hpp"

namespace lighttune {

namespace {

/// d(per-neuron loss)/dh for an active neuron (h > 0), without the 1/M_l
/// factor. Quadratic positive branch: 4 (g - T - 2) h; negative: 4 (g - T + 2) h.
/// Softplus positive: -2 sigmoid(T - g) h; negative: 2 sigmoid(g - T) h.
double neuron_coeff(double h, double threshold, LossKind kind, bool positive) {
    const double g = h * h;
    if (kind == LossKind::quadratic) {
        return positive ? 4.0 * (g - threshold - 2.0) * h : 4.0 * (g - threshold + 2.0) * h;
    }
    return positive ? -2.0 * stable_sigmoid(threshold - g) * h
                    : 2.0 * stable_sigmoid(g - threshold) * h;
}

}  // namespace

Matrix layer_gradient_local(std::span<const double> h_pos, std::span<const double> h_pos_prev,
                            std::span<const double> h_neg, std::span<const double> h_neg_prev,
                            double threshold, LossKind kind, MacCounter* mac) {
    if (h_pos.size() != h_neg.size())
        throw ShapeError("positive/negative layer activations differ in length");
    if (h_pos_prev.size() != h_neg_prev.size())
        throw ShapeError("positive/negative input activations differ in length");
    if (h_pos.empty() || h_pos_prev.empty()) throw ShapeError("empty activation vector");

    const std::size_t m = h_pos.size();
    const std::size_t n = h_pos_prev.size();
    const double inv_m = 1.0 / static_cast<double>(m);
    Matrix grad(m, n + 1, 0.0);

    for (std::size_t j = 0; j < m; ++j) {
        // the indicator 1(h > 0) uses strict inequality: derivative 0 at the kink
        const double cp = h_pos[j] > 0.0 ? inv_m * neuron_coeff(h_pos[j], threshold, kind, true)
                                         : 0.0;
        const double cn = h_neg[j] > 0.0 ? inv_m * neuron_coeff(h_neg[j], threshold, kind, false)
                                         : 0.0;
        double* row = grad.data() + j * (n + 1);
        for (std::size_t k = 0; k < n; ++k) row[k] = cp * h_pos_prev[k] + cn * h_neg_prev[k];
        row[n] = cp + cn;  // bias column, htilde entry is 1
    }
    // two outer products plus their combination
    mac_add(mac, static_cast<long long>(3 * m * (n + 1)));
    return grad;
}

Matrix layer_gradient(const MlpModel& model, std::size_t layer, const LayerActivations& pos,
                      const LayerActivations& neg, double threshold, LossKind kind,
                      MacCounter* mac) {
    const std::size_t L = model.layer_count();
    if (layer < 1 || layer > L) throw InputError("layer index out of range");
    if (pos.activations.size() != L + 1 || neg.activations.size() != L + 1)
        throw ShapeError("activations do not match the model depth");
    if (pos.act(layer).size() != model.width(layer) ||
        pos.act(layer - 1).size() != model.width(layer - 1))
        throw ShapeError("activation widths do not match layer " + std::to_string(layer));
    return layer_gradient_local(pos.act(layer), pos.act(layer - 1), neg.act(layer),
                                neg.act(layer - 1), threshold, kind, mac);
}

std::vector<Matrix> all_layer_gradients(const MlpModel& model, const LayerActivations& pos,
                                        const LayerActivations& neg, double threshold,
                                        LossKind kind, MacCounter* mac) {
    std::vector<Matrix> grads;
    grads.reserve(model.layer_count());
    for (std::size_t l = 1; l <= model.layer_count(); ++l)
        grads.push_back(layer_gradient(model, l, pos, neg, threshold, kind, mac));
    return grads;
}

}  // namespace lighttune
