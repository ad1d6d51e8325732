#pragma once

#include <functional>
#include <span>
#include <vector>

#include "pet/grid.hpp"

namespace pet {

// Channel-wise softmax of logits / temperature at every pixel, stabilized by
// max subtraction. Channel 0 is the non-edge channel. Throws
// NonPositiveTemperature.
Volume ada_softmax(const Volume& logits, double temperature);

struct SemanticLossResult {
  double loss = 0.0;
  Volume grad_logits;            // exact derivative of the clamped expression
  double grad_temperature = 0.0;
  double gamma = 0.0;            // non-edge pixel fraction of the ground truth
};

// Reweighted per-channel cross entropy against the one-hot ground truth:
//   sum_k sum_p { -gamma * t_k(p) * log(y_k(p))
//                 - (1-gamma) * (1 - t_k(p)) * log(1 - y_k(p)) }
// where y = ada_softmax(logits, T), t is one-hot over K+1 channels with
// channel 0 = non-edge, and gamma is the fraction of non-edge ground-truth
// pixels. Probabilities are clamped to [1e-12, 1 - 1e-12] before the logs.
// Throws ShapeMismatch, CategoryOutOfRange, NonPositiveTemperature.
SemanticLossResult semantic_edge_loss(const Volume& logits, const CategoryGrid& gt,
                                      double temperature);

struct CenterLossResult {
  double loss = 0.0;
  ScalarGrid grad;  // 2 * (pred - gt)
};

// Sum of squared per-pixel differences between heatmaps.
CenterLossResult center_loss(const ScalarGrid& pred, const ScalarGrid& gt);

struct OffsetLossResult {
  double loss = 0.0;
  OffsetField grad;  // sign(pred - gt) on the mask, 0 at exact ties
};

// L1 distance between offset fields, summed over pixels where mask != 0.
OffsetLossResult offset_loss(const OffsetField& pred, const OffsetField& gt,
                             const ScalarGrid& mask);

struct LossWeights {
  double semantic = 1.0;
  double center = 200.0;
  double offset = 0.01;
};

struct LossValue {
  double total = 0.0;
  double semantic = 0.0;
  double center = 0.0;
  double offset = 0.0;
  double gamma = 0.0;
};

// total = semantic_weight * l_s + center_weight * l_c + offset_weight * l_o.
// Throws NegativeComponent when a component is negative or not finite.
LossValue total_loss(double semantic, double center, double offset,
                     const LossWeights& weights, double gamma = 0.0);

// Central finite differences (f(x + eps e_i) - f(x - eps e_i)) / (2 eps) per
// coordinate. The verification oracle the analytic gradients are checked
// against. Throws NonPositiveEps.
std::vector<double> finite_diff_gradient(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> x, double eps);

}  // namespace pet
