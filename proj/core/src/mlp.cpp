#include "lighttune/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lighttune/errors.hpp"

namespace lighttune {

LabelSet::LabelSet(std::vector<double> values) : values_(std::move(values)) {
    if (values_.size() < 2) throw InputError("label set needs at least two classes");
    for (std::size_t i = 0; i + 1 < values_.size(); ++i) {
        if (!(values_[i] < values_[i + 1]))
            throw InputError("label set values must be strictly increasing");
    }
    for (double v : values_) {
        if (!std::isfinite(v)) throw InputError("label set values must be finite");
    }
}

LabelSet LabelSet::bler_classes() {
    std::vector<double> v(10);
    for (int i = 0; i < 10; ++i) v[i] = 0.1 * i;
    return LabelSet(v);
}

LabelSet LabelSet::mnist_classes() { return bler_classes(); }

std::size_t LabelSet::index_of(double label) const {
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (values_[i] == label) return i;
    }
    throw InputError("label " + std::to_string(label) + " is not in the label set");
}

bool LabelSet::contains(double label) const {
    return std::find(values_.begin(), values_.end(), label) != values_.end();
}

double LabelSet::nearest(double v) const {
    std::size_t best = 0;
    double best_dist = std::abs(v - values_[0]);
    for (std::size_t i = 1; i < values_.size(); ++i) {
        const double d = std::abs(v - values_[i]);
        if (d < best_dist) {  // strict: midpoints keep the lower class
            best_dist = d;
            best = i;
        }
    }
    return values_[best];
}

namespace {

void check_dims(const std::vector<std::size_t>& dims) {
    if (dims.size() < 2) throw InputError("model needs at least one layer (dims >= 2 entries)");
    for (std::size_t m : dims) {
        if (m < 1) throw InputError("every layer width must be >= 1");
    }
}

}  // namespace

MlpModel MlpModel::zeros(const std::vector<std::size_t>& dims) {
    check_dims(dims);
    MlpModel m;
    m.dims_ = dims;
    m.layers_.resize(dims.size() - 1);
    for (std::size_t l = 0; l < m.layers_.size(); ++l) {
        m.layers_[l].weights = Matrix(dims[l + 1], dims[l], 0.0);
        m.layers_[l].bias.assign(dims[l + 1], 0.0);
    }
    return m;
}

MlpModel MlpModel::random_init(const std::vector<std::size_t>& dims, std::uint64_t seed) {
    Rng rng(seed);
    return random_init(dims, rng);
}

MlpModel MlpModel::random_init(const std::vector<std::size_t>& dims, Rng& rng) {
    MlpModel m = zeros(dims);
    for (std::size_t l = 1; l <= m.layer_count(); ++l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(dims[l - 1]));
        Matrix& w = m.layer(l).weights;
        for (std::size_t r = 0; r < w.rows(); ++r)
            for (std::size_t c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-bound, bound);
    }
    return m;
}

void MlpModel::validate() const {
    check_dims(dims_);
    if (layers_.size() != dims_.size() - 1) throw ShapeError("layer count does not match dims");
    for (std::size_t l = 1; l <= layer_count(); ++l) {
        const Layer& lay = layers_[l - 1];
        if (lay.weights.rows() != dims_[l] || lay.weights.cols() != dims_[l - 1])
            throw ShapeError("weight matrix of layer " + std::to_string(l) +
                             " does not match dims");
        if (lay.bias.size() != dims_[l])
            throw ShapeError("bias vector of layer " + std::to_string(l) + " does not match dims");
    }
    if (!all_finite()) throw NumericalError("model contains non-finite parameters");
}

bool MlpModel::all_finite() const {
    for (const Layer& lay : layers_) {
        for (std::size_t i = 0; i < lay.weights.size(); ++i)
            if (!std::isfinite(lay.weights.data()[i])) return false;
        for (double b : lay.bias)
            if (!std::isfinite(b)) return false;
    }
    return true;
}

std::size_t MlpModel::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 1; l < dims_.size(); ++l) n += dims_[l] * (dims_[l - 1] + 1);
    return n;
}

std::size_t MlpModel::forward_macs() const {
    std::size_t q = 0;
    for (std::size_t l = 1; l < dims_.size(); ++l) q += dims_[l] * dims_[l - 1];
    return q;
}

LayerActivations forward_pass(const MlpModel& model, std::span<const double> z, MacCounter* mac) {
    if (z.size() != model.input_dim())
        throw ShapeError("input length " + std::to_string(z.size()) + " does not match M_0 = " +
                         std::to_string(model.input_dim()));
    for (double v : z) {
        if (!std::isfinite(v)) throw InputError("non-finite entry in forward-pass input");
    }

    LayerActivations out;
    const std::size_t L = model.layer_count();
    out.activations.resize(L + 1);
    out.pre_activations.resize(L);
    out.activations[0].assign(z.begin(), z.end());

    for (std::size_t l = 1; l <= L; ++l) {
        const Layer& lay = model.layer(l);
        const std::vector<double>& h_prev = out.activations[l - 1];
        std::vector<double>& p = out.pre_activations[l - 1];
        std::vector<double>& h = out.activations[l];
        const std::size_t m = lay.weights.rows();
        const std::size_t n = lay.weights.cols();
        p.resize(m);
        h.resize(m);
        for (std::size_t j = 0; j < m; ++j) {
            const double* wr = lay.weights.data() + j * n;
            double acc = 0.0;
            for (std::size_t k = 0; k < n; ++k) acc += wr[k] * h_prev[k];
            acc += lay.bias[j];
            p[j] = acc;
            h[j] = acc > 0.0 ? acc : 0.0;
        }
        mac_add(mac, static_cast<long long>(m * n));
    }
    return out;
}

}  // namespace lighttune
