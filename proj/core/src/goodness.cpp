#include "lighttune/goodness.hpp"

#include <cmath>

#include "lighttune/errors.hpp"

namespace lighttune {

GoodnessReport goodness_report(const LayerActivations& acts) {
    GoodnessReport rep;
    const std::size_t L = acts.activations.size() - 1;
    rep.per_layer.resize(L);
    for (std::size_t l = 1; l <= L; ++l) {
        const std::vector<double>& h = acts.activations[l];
        std::vector<double>& g = rep.per_layer[l - 1];
        g.resize(h.size());
        for (std::size_t j = 0; j < h.size(); ++j) g[j] = h[j] * h[j];
    }
    double total = 0.0;
    for (double gj : rep.per_layer.back()) total += gj;
    rep.total = total;
    return rep;
}

GoodnessReport goodness(const MlpModel& model, std::span<const double> x, double label,
                        MacCounter* mac) {
    if (!std::isfinite(label)) throw InputError("label must be finite");
    std::vector<double> z(x.begin(), x.end());
    z.push_back(label);
    return goodness_report(forward_pass(model, z, mac));
}

Prediction predict_label(const MlpModel& model, std::span<const double> x, const LabelSet& labels,
                         MacCounter* mac) {
    std::vector<double> z(x.begin(), x.end());
    z.push_back(0.0);

    Prediction pred;
    pred.goodness_per_label.resize(labels.size());
    double best = -1.0;  // any goodness is >= 0, first label always wins the init
    std::size_t best_idx = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        z.back() = labels.value(i);
        const LayerActivations acts = forward_pass(model, z, mac);
        double g = 0.0;
        for (double h : acts.output()) g += h * h;
        pred.goodness_per_label[i] = g;
        if (g > best) {
            best = g;
            best_idx = i;
        }
    }
    pred.label_index = best_idx;
    pred.label = labels.value(best_idx);
    return pred;
}

}  // namespace lighttune
