#pragma once

#include <vector>

#include "pet/grid.hpp"
#include "pet/taxonomy.hpp"

namespace pet {

struct FusionParams {
  double center_threshold = 0.1;  // minimum heatmap value a center needs
  int nms_window = 7;             // odd side length of the suppression window
  int max_instances = 200;        // centers kept after suppression
};

struct ScoredCenter {
  int cy = 0;
  int cx = 0;
  double score = 0.0;
};

// No pixel assigned to an instance.
inline constexpr int kNoInstance = -1;

// Clusters the heatmap into discrete centers: keeps pixels that clear the
// threshold and strictly dominate their nms_window x nms_window
// neighborhood (value ties broken toward the smaller row, then column),
// sorted by descending score and truncated to max_instances.
std::vector<ScoredCenter> extract_centers(const ScalarGrid& heatmap,
                                          const FusionParams& params);

// For every pixel with a thing category: follows the offset to the endpoint
// q = p + offset(p) and picks the center nearest to q (ties toward the
// higher-scoring center). Stuff and non-edge pixels get kNoInstance. With an
// empty center list every thing pixel shares one fallback instance.
// The taxonomy drives the thing/stuff split. Throws ShapeMismatch.
Grid<int> assign_instances(const CategoryGrid& semantic, const OffsetField& offsets,
                           const std::vector<ScoredCenter>& centers,
                           const Taxonomy& taxonomy);

// Merges the semantic edge prediction with the clustered centers and offsets
// into a panoptic edge map: stuff pixels become category * D, thing pixels
// category * D + instance ID with center indices renumbered per category to
// 1..n in row-major first-occurrence order, non-edge pixels stay 0.
LabelGrid fuse_panoptic(const CategoryGrid& semantic, const ScalarGrid& heatmap,
                        const OffsetField& offsets, const FusionParams& params,
                        const Taxonomy& taxonomy);

}  // namespace pet
