#pragma once

#include <span>

#include "lighttune/loss.hpp"
#include "lighttune/mlp.hpp"

namespace lighttune {

/// Layer-local gradient of the quadratic loss with respect to the augmented
/// parameter matrix [W_l, b_l], for one positive and one negative sample:
///
///   (4/M_l) [(g+ - T - 2) h+ 1(h+ > 0)] htilde+^T
/// + (4/M_l) [(g- - T + 2) h- 1(h- > 0)] htilde-^T
///
/// where htilde = [h_{l-1}^T, 1]^T. The result has shape M_l x (M_{l-1}+1);
/// the last column is the bias gradient. Strictly layer-local: only the
/// activations of layer l and its input are read.
Matrix layer_gradient_local(std::span<const double> h_pos, std::span<const double> h_pos_prev,
                            std::span<const double> h_neg, std::span<const double> h_neg_prev,
                            double threshold, LossKind kind = LossKind::quadratic,
                            MacCounter* mac = nullptr);

/// Same gradient, reading layer l from full forward-pass activations. The
/// activations must have been computed from the parameters being
/// differentiated.
Matrix layer_gradient(const MlpModel& model, std::size_t layer, const LayerActivations& pos,
                      const LayerActivations& neg, double threshold,
                      LossKind kind = LossKind::quadratic, MacCounter* mac = nullptr);

/// Gradients for every layer, all evaluated at the current parameters.
std::vector<Matrix> all_layer_gradients(const MlpModel& model, const LayerActivations& pos,
                                        const LayerActivations& neg, double threshold,
                                        LossKind kind = LossKind::quadratic,
                                        MacCounter* mac = nullptr);

}  // namespace lighttune
