#include "pet/attention.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pet/errors.hpp"

namespace pet {

namespace {

// proj = W f at every position; W is rows x cols, f has cols channels.
Volume project(const Volume& f, const std::vector<double>& w, int rows, int cols) {
  Volume out(rows, f.height(), f.width());
  for (int y = 0; y < f.height(); ++y) {
    for (int x = 0; x < f.width(); ++x) {
      for (int r = 0; r < rows; ++r) {
        double s = 0.0;
        for (int c = 0; c < cols; ++c) {
          s += w[size_t(r) * cols + c] * f.at(c, y, x);
        }
        out.at(r, y, x) = s;
      }
    }
  }
  return out;
}

Volume one_pass(const Volume& f, const AttentionWeights& w) {
  const int cp = w.proj_channels, cc = w.channels;
  const int h = f.height(), wd = f.width();
  const Volume q = project(f, w.wq, cp, cc);
  const Volume k = project(f, w.wk, cp, cc);
  const Volume v = project(f, w.wv, cc, cc);

  Volume out(cc, h, wd);
  // criss-cross set of (i, j): the row positions, then the off-row column
  // positions; size h + wd - 1 with (i, j) counted once
  std::vector<double> scores(size_t(h) + wd - 1);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < wd; ++j) {
      int n = 0;
      for (int jj = 0; jj < wd; ++jj, ++n) {
        double s = 0.0;
        for (int c = 0; c < cp; ++c) {
          s += q.at(c, i, j) * k.at(c, i, jj);
        }
        scores[n] = s;
      }
      for (int ii = 0; ii < h; ++ii) {
        if (ii == i) continue;
        double s = 0.0;
        for (int c = 0; c < cp; ++c) {
          s += q.at(c, i, j) * k.at(c, ii, j);
        }
        scores[n++] = s;
      }
      double m = -std::numeric_limits<double>::infinity();
      for (int u = 0; u < n; ++u) m = std::max(m, scores[u]);
      double sum = 0.0;
      for (int u = 0; u < n; ++u) {
        scores[u] = std::exp(scores[u] - m);
        sum += scores[u];
      }
      for (int c = 0; c < cc; ++c) {
        double acc = 0.0;
        int u = 0;
        for (int jj = 0; jj < wd; ++jj, ++u) {
          acc += scores[u] * v.at(c, i, jj);
        }
        for (int ii = 0; ii < h; ++ii) {
          if (ii == i) continue;
          acc += scores[u++] * v.at(c, ii, j);
        }
        out.at(c, i, j) = acc / sum + f.at(c, i, j);
      }
    }
  }
  return out;
}

}  // namespace

Volume criss_cross_attention(const Volume& features, const AttentionWeights& weights,
                             int recursions) {
  if (recursions != 1 && recursions != 2) {
    throw DimensionMismatch("recursions must be 1 or 2");
  }
  if (weights.channels != features.channels() || weights.proj_channels < 1) {
    throw DimensionMismatch("weight channel counts do not match the feature map");
  }
  const size_t qeln = size_t(weights.proj_channels) * weights.channels;
  if (weights.wq.size() != qeln || weights.wk.size() != qeln ||
      weights.wv.size() != size_t(weights.channels) * weights.channels) {
    throw DimensionMismatch("weight matrix sizes do not match the channel counts");
  }
  Volume out = one_pass(features, weights);
  if (recursions == 2) {
    out = one_pass(out, weights);
  }
  return out;
}

}  // namespace pet
