#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lighttune/mac.hpp"
#include "lighttune/rng.hpp"

namespace lighttune {

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), a_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return a_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return a_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return a_[r * cols_ + c]; }

    double* data() { return a_.data(); }
    const double* data() const { return a_.data(); }

    std::span<const double> row(std::size_t r) const {
        return std::span<const double>(a_.data() + r * cols_, cols_);
    }
    std::span<double> row(std::size_t r) {
        return std::span<double>(a_.data() + r * cols_, cols_);
    }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }
    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.a_ == b.a_;
    }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> a_;
};

/// One fully connected layer: weights of shape M_l x M_{l-1} plus bias.
struct Layer {
    Matrix weights;
    std::vector<double> bias;

    friend bool operator==(const Layer& a, const Layer& b) {
        return a.weights == b.weights && a.bias == b.bias;
    }
};

/// Ordered finite set of scalar class labels.
class LabelSet {
public:
    LabelSet() = default;
    explicit LabelSet(std::vector<double> values);

    /// The quantized BLER classes {0, 0.1, ..., 0.9}.
    static LabelSet bler_classes();
    /// MNIST digit labels encoded as digit / 10.
    static LabelSet mnist_classes();

    std::size_t size() const { return values_.size(); }
    double value(std::size_t i) const { return values_[i]; }
    const std::vector<double>& values() const { return values_; }

    /// Index of an exact member value; throws InputError if absent.
    std::size_t index_of(double label) const;
    bool contains(double label) const;

    /// Nearest class to v; exact midpoints resolve to the lower class.
    double nearest(double v) const;

private:
    std::vector<double> values_;
};

/// Feature vector plus scalar class label; augmented() yields z = [x^T, y]^T.
struct AugmentedSample {
    std::vector<double> features;
    double label = 0.0;

    std::vector<double> augmented() const {
        std::vector<double> z(features);
        z.push_back(label);
        return z;
    }
};

/// ReLU multilayer perceptron. dims = [M_0, M_1, ..., M_L] with M_0 the
/// augmented input width d+1.
class MlpModel {
public:
    MlpModel() = default;

    static MlpModel zeros(const std::vector<std::size_t>& dims);
    /// Fan-in scaled init: weights uniform in [-1/sqrt(M_{l-1}), +1/sqrt(M_{l-1})],
    /// biases zero.
    static MlpModel random_init(const std::vector<std::size_t>& dims, std::uint64_t seed);
    static MlpModel random_init(const std::vector<std::size_t>& dims, Rng& rng);

    const std::vector<std::size_t>& dims() const { return dims_; }
    std::size_t input_dim() const { return dims_.front(); }
    std::size_t feature_dim() const { return dims_.front() - 1; }
    std::size_t layer_count() const { return layers_.size(); }
    std::size_t width(std::size_t layer) const { return dims_[layer]; }

    /// 1-based layer access, matching the math indexing.
    Layer& layer(std::size_t l) { return layers_[l - 1]; }
    const Layer& layer(std::size_t l) const { return layers_[l - 1]; }

    /// Throws if shapes are inconsistent or any entry is non-finite.
    void validate() const;
    bool all_finite() const;

    /// Total parameter count including biases: sum M_l (M_{l-1} + 1).
    std::size_t parameter_count() const;
    /// Forward-pass multiplies: sum M_l M_{l-1}.
    std::size_t forward_macs() const;

    friend bool operator==(const MlpModel& a, const MlpModel& b) {
        return a.dims_ == b.dims_ && a.layers_ == b.layers_;
    }

private:
    std::vector<std::size_t> dims_;
    std::vector<Layer> layers_;
};

/// Activations of one forward pass. activations[l] is h_l (h_0 = z);
/// pre_activations[l-1] is p_l for l >= 1.
struct LayerActivations {
    std::vector<std::vector<double>> activations;
    std::vector<std::vector<double>> pre_activations;

    const std::vector<double>& output() const { return activations.back(); }
    const std::vector<double>& act(std::size_t l) const { return activations[l]; }
    const std::vector<double>& pre(std::size_t l) const { return pre_activations[l - 1]; }
};

/// h_0 = z, p_l = W_l h_{l-1} + b_l, h_l = max(0, p_l). Summation runs in
/// ascending index order for reproducibility.
LayerActivations forward_pass(const MlpModel& model, std::span<const double> z,
                              MacCounter* mac = nullptr);

}  // namespace lighttune
