#pragma once

#include <vector>

#include "pet/grid.hpp"
#include "pet/taxonomy.hpp"

namespace pet {

// Geometric center of one thing instance's edge pixels, kept at real-valued
// coordinates.
struct InstanceCenter {
  int category = 0;
  uint32_t instance_id = 0;
  double cy = 0.0;
  double cx = 0.0;
};

// Converts a fully-labeled panoptic segmentation map into a panoptic edge
// map: for each segment, the pixels removed by eroding the segment's binary
// mask with a (2r+1)x(2r+1) square window become edge pixels and keep the
// segment's label; everything else is 0. The window is clamped at the image
// border, so pixels adjacent only to the border are not edges.
// Throws InvalidSegmentLabel when a pixel does not decode under the taxonomy.
LabelGrid panoptic_to_edges(const LabelGrid& seg, int radius, const Taxonomy& taxonomy);

// One center per thing instance present in `edges`; (cy, cx) is the
// arithmetic mean of the instance's edge-pixel coordinates. Sorted by
// (category, instance_id).
std::vector<InstanceCenter> instance_centers(const LabelGrid& edges,
                                             const Taxonomy& taxonomy);

// value(p) = max over centers of exp(-((py-cy)^2 + (px-cx)^2) / (2 sigma^2)).
// Empty center list gives the all-zero map. Throws NonPositiveSigma.
ScalarGrid make_center_heatmap(const std::vector<InstanceCenter>& centers,
                               int height, int width, double sigma);

// (dy, dx) = center - pixel at every thing-edge pixel, (0, 0) elsewhere.
// Throws MissingCenter when a thing instance in `edges` has no entry in
// `centers`.
OffsetField make_offset_field(const LabelGrid& edges,
                              const std::vector<InstanceCenter>& centers,
                              const Taxonomy& taxonomy);

// 1 at thing-edge pixels, 0 elsewhere. The mask the offset loss sums over.
ScalarGrid thing_edge_mask(const LabelGrid& edges, const Taxonomy& taxonomy);

}  // namespace pet
