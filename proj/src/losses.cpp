#include "pet/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pet/errors.hpp"

namespace pet {

namespace {
constexpr double kProbClamp = 1e-12;

double clamp_prob(double p) {
  return std::min(std::max(p, kProbClamp), 1.0 - kProbClamp);
}
}  // namespace

Volume ada_softmax(const Volume& logits, double temperature) {
  if (!(temperature > 0.0)) {
    throw NonPositiveTemperature("temperature must be > 0");
  }
  Volume out(logits.channels(), logits.height(), logits.width());
  const int kc = logits.channels();
  std::vector<double> s(kc);
  for (int y = 0; y < logits.height(); ++y) {
    for (int x = 0; x < logits.width(); ++x) {
      double m = -std::numeric_limits<double>::infinity();
      for (int c = 0; c < kc; ++c) {
        s[c] = logits.at(c, y, x) / temperature;
        m = std::max(m, s[c]);
      }
      double sum = 0.0;
      for (int c = 0; c < kc; ++c) {
        s[c] = std::exp(s[c] - m);
        sum += s[c];
      }
      for (int c = 0; c < kc; ++c) {
        out.at(c, y, x) = s[c] / sum;
      }
    }
  }
  return out;
}

SemanticLossResult semantic_edge_loss(const Volume& logits, const CategoryGrid& gt,
                                      double temperature) {
  if (logits.height() != gt.height() || logits.width() != gt.width()) {
    throw ShapeMismatch("logits and ground truth differ in spatial shape");
  }
  const int kc = logits.channels();
  for (size_t i = 0; i < gt.size(); ++i) {
    if (gt[i] < 0 || gt[i] >= kc) {
      throw CategoryOutOfRange("ground-truth category " + std::to_string(gt[i]) +
                               " outside 0.." + std::to_string(kc - 1));
    }
  }

  const Volume probs = ada_softmax(logits, temperature);

  size_t non_edge = 0;
  for (size_t i = 0; i < gt.size(); ++i) {
    non_edge += gt[i] == 0 ? 1 : 0;
  }
  const double gamma = gt.size() ? double(non_edge) / double(gt.size()) : 0.0;

  SemanticLossResult result;
  result.gamma = gamma;
  result.grad_logits = Volume(kc, logits.height(), logits.width());

  double loss = 0.0;
  double grad_t = 0.0;
  std::vector<double> dldp(kc);
  for (int y = 0; y < logits.height(); ++y) {
    for (int x = 0; x < logits.width(); ++x) {
      const int target = gt.at(y, x);
      for (int c = 0; c < kc; ++c) {
        const double p = probs.at(c, y, x);
        const double u = clamp_prob(p);
        const bool interior = p > kProbClamp && p < 1.0 - kProbClamp;
        if (c == target) {
          loss -= gamma * std::log(u);
          dldp[c] = interior ? -gamma / u : 0.0;
        } else {
          loss -= (1.0 - gamma) * std::log(1.0 - u);
          dldp[c] = interior ? (1.0 - gamma) / (1.0 - u) : 0.0;
        }
      }
      // backprop through softmax(z / T): dL/dz_j = p_j (g_j - sum_k g_k p_k) / T
      double dot = 0.0;
      for (int c = 0; c < kc; ++c) {
        dot += dldp[c] * probs.at(c, y, x);
      }
      double hz = 0.0;  // sum_j h_j z_j, feeds the temperature gradient
      for (int c = 0; c < kc; ++c) {
        const double h = probs.at(c, y, x) * (dldp[c] - dot);
        result.grad_logits.at(c, y, x) = h / temperature;
        hz += h * logits.at(c, y, x);
      }
      grad_t -= hz / (temperature * temperature);
    }
  }
  result.loss = loss;
  result.grad_temperature = grad_t;
  return result;
}

CenterLossResult center_loss(const ScalarGrid& pred, const ScalarGrid& gt) {
  if (!pred.same_shape(gt)) {
    throw ShapeMismatch("heatmap shapes differ");
  }
  CenterLossResult result;
  result.grad = ScalarGrid(pred.height(), pred.width(), 0.0);
  double loss = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - gt[i];
    loss += d * d;
    result.grad[i] = 2.0 * d;
  }
  result.loss = loss;
  return result;
}

OffsetLossResult offset_loss(const OffsetField& pred, const OffsetField& gt,
                             const ScalarGrid& mask) {
  if (!pred.same_shape(gt) || !pred.dy.same_shape(mask)) {
    throw ShapeMismatch("offset field shapes differ");
  }
  OffsetLossResult result;
  result.grad = OffsetField(pred.height(), pred.width());
  double loss = 0.0;
  for (size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] == 0.0) continue;
    const double ddy = pred.dy[i] - gt.dy[i];
    const double ddx = pred.dx[i] - gt.dx[i];
    loss += std::abs(ddy) + std::abs(ddx);
    result.grad.dy[i] = ddy > 0.0 ? 1.0 : (ddy < 0.0 ? -1.0 : 0.0);
    result.grad.dx[i] = ddx > 0.0 ? 1.0 : (ddx < 0.0 ? -1.0 : 0.0);
  }
  result.loss = loss;
  return result;
}

LossValue total_loss(double semantic, double center, double offset,
                     const LossWeights& weights, double gamma) {
  for (double v : {semantic, center, offset}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw NegativeComponent("loss components must be finite and >= 0");
    }
  }
  if (weights.semantic == 0.0 && weights.center == 0.0 && weights.offset == 0.0) {
    throw NegativeComponent("loss weights must not all be zero");
  }
  LossValue value;
  value.semantic = semantic;
  value.center = center;
  value.offset = offset;
  value.gamma = gamma;
  value.total = weights.semantic * semantic + weights.center * center +
                weights.offset * offset;
  return value;
}

std::vector<double> finite_diff_gradient(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> x, double eps) {
  if (!(eps > 0.0)) {
    throw NonPositiveEps("eps must be > 0");
  }
  std::vector<double> point(x.begin(), x.end());
  std::vector<double> grad(point.size(), 0.0);
  for (size_t i = 0; i < point.size(); ++i) {
    const double saved = point[i];
    point[i] = saved + eps;
    const double hi = f(point);
    point[i] = saved - eps;
    const double lo = f(point);
    point[i] = saved;
    grad[i] = (hi - lo) / (2.0 * eps);
  }
  return grad;
}

}  // namespace pet
