#include "pet/fusion.hpp"

#include <algorithm>
#include <limits>
#include <map>

#include "pet/errors.hpp"

namespace pet {

namespace {

void check_params(const FusionParams& params, const Taxonomy& taxonomy) {
  if (!(params.center_threshold > 0.0 && params.center_threshold < 1.0)) {
    throw InfeasibleParams("center threshold must lie in (0, 1)");
  }
  if (params.nms_window < 1 || params.nms_window % 2 == 0) {
    throw InfeasibleParams("suppression window must be an odd positive integer");
  }
  if (params.max_instances < 1 ||
      uint32_t(params.max_instances) > taxonomy.id_stride()) {
    throw InfeasibleParams("max_instances must lie in 1..D");
  }
}

}  // namespace

std::vector<ScoredCenter> extract_centers(const ScalarGrid& heatmap,
                                          const FusionParams& params) {
  if (!(params.center_threshold > 0.0 && params.center_threshold < 1.0)) {
    throw InfeasibleParams("center threshold must lie in (0, 1)");
  }
  if (params.nms_window < 1 || params.nms_window % 2 == 0) {
    throw InfeasibleParams("suppression window must be an odd positive integer");
  }
  if (params.max_instances < 1) {
    throw InfeasibleParams("max_instances must be positive");
  }
  const int radius = params.nms_window / 2;
  const int h = heatmap.height(), w = heatmap.width();
  std::vector<ScoredCenter> centers;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v = heatmap.at(y, x);
      if (v < params.center_threshold) continue;
      bool keep = true;
      const int y0 = std::max(0, y - radius), y1 = std::min(h - 1, y + radius);
      const int x0 = std::max(0, x - radius), x1 = std::min(w - 1, x + radius);
      for (int yy = y0; yy <= y1 && keep; ++yy) {
        for (int xx = x0; xx <= x1 && keep; ++xx) {
          if (yy == y && xx == x) continue;
          const double o = heatmap.at(yy, xx);
          // equal values collapse onto the earlier pixel in row-major order
          if (o > v || (o == v && (yy < y || (yy == y && xx < x)))) {
            keep = false;
          }
        }
      }
      if (keep) {
        centers.push_back({y, x, v});
      }
    }
  }
  std::stable_sort(centers.begin(), centers.end(),
                   [](const ScoredCenter& a, const ScoredCenter& b) {
                     if (a.score != b.score) return a.score > b.score;
                     if (a.cy != b.cy) return a.cy < b.cy;
                     return a.cx < b.cx;
                   });
  if (centers.size() > size_t(params.max_instances)) {
    centers.resize(params.max_instances);
  }
  return centers;
}

Grid<int> assign_instances(const CategoryGrid& semantic, const OffsetField& offsets,
                           const std::vector<ScoredCenter>& centers,
                           const Taxonomy& taxonomy) {
  if (semantic.height() != offsets.height() || semantic.width() != offsets.width()) {
    throw ShapeMismatch("semantic map and offset field differ in shape");
  }
  Grid<int> assignment(semantic.height(), semantic.width(), kNoInstance);
  for (int y = 0; y < semantic.height(); ++y) {
    for (int x = 0; x < semantic.width(); ++x) {
      const int category = semantic.at(y, x);
      if (category == 0 || !taxonomy.is_thing(category)) continue;
      if (centers.empty()) {
        assignment.at(y, x) = 0;  // shared fallback instance
        continue;
      }
      const double qy = y + offsets.dy.at(y, x);
      const double qx = x + offsets.dx.at(y, x);
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (size_t i = 0; i < centers.size(); ++i) {
        const double dy = qy - centers[i].cy, dx = qx - centers[i].cx;
        const double d = dy * dy + dx * dx;
        // the list is sorted by descending score, so strict < keeps the
        // higher-scoring center on distance ties
        if (d < best_d) {
          best_d = d;
          best = int(i);
        }
      }
      assignment.at(y, x) = best;
    }
  }
  return assignment;
}

LabelGrid fuse_panoptic(const CategoryGrid& semantic, const ScalarGrid& heatmap,
                        const OffsetField& offsets, const FusionParams& params,
                        const Taxonomy& taxonomy) {
  check_params(params, taxonomy);
  if (semantic.height() != heatmap.height() || semantic.width() != heatmap.width() ||
      semantic.height() != offsets.height() || semantic.width() != offsets.width()) {
    throw ShapeMismatch("semantic map, heatmap and offsets differ in shape");
  }
  for (size_t i = 0; i < semantic.size(); ++i) {
    if (semantic[i] != 0 && !taxonomy.is_valid_category(semantic[i])) {
      throw CategoryOutOfRange("semantic category " + std::to_string(semantic[i]) +
                               " outside 0.." +
                               std::to_string(taxonomy.num_categories()));
    }
  }

  const std::vector<ScoredCenter> centers = extract_centers(heatmap, params);
  const Grid<int> assignment = assign_instances(semantic, offsets, centers, taxonomy);

  LabelGrid fused(semantic.height(), semantic.width(), kNonEdge);
  // (category, center index) -> canonical instance ID, first-occurrence order
  std::map<std::pair<int, int>, uint32_t> renumber;
  std::map<int, uint32_t> next_id;
  for (int y = 0; y < semantic.height(); ++y) {
    for (int x = 0; x < semantic.width(); ++x) {
      const int category = semantic.at(y, x);
      if (category == 0) continue;
      if (taxonomy.is_stuff(category)) {
        fused.at(y, x) = encode_label(category, 0, taxonomy);
        continue;
      }
      const auto key = std::make_pair(category, assignment.at(y, x));
      auto it = renumber.find(key);
      if (it == renumber.end()) {
        it = renumber.emplace(key, ++next_id[category]).first;
      }
      fused.at(y, x) = encode_label(category, it->second, taxonomy);
    }
  }
  return fused;
}

}  // namespace pet
