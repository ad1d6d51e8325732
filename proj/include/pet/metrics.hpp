#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pet/grid.hpp"
#include "pet/taxonomy.hpp"

namespace pet {

// All pixels sharing one nonzero label. Segments are label-equivalence
// classes, not connectivity components; pixels are sorted linear indices
// (y * width + x).
struct EdgeSegment {
  Label label = 0;
  std::vector<int32_t> pixels;
};

// One segment per distinct nonzero label, ordered by label value.
std::vector<EdgeSegment> segments_of(const LabelGrid& map);

// |a intersect b| / |a union b| over sorted index vectors; 0 when both empty.
double edge_iou(const std::vector<int32_t>& a, const std::vector<int32_t>& b);

struct MatchedPair {
  size_t pred_index = 0;
  size_t gt_index = 0;
  double iou = 0.0;
};

struct MatchResult {
  std::vector<MatchedPair> true_positives;
  std::vector<size_t> false_positives;  // unmatched pred indices
  std::vector<size_t> false_negatives;  // unmatched gt indices
};

// Greedy matching of pred segments to gt segments of the same decoded
// category with IoU strictly above the threshold, by descending IoU; ties
// break toward the smaller gt label, then the smaller pred label. Each
// segment is used at most once. Throws InvalidThreshold unless
// 0 < threshold <= 1.
MatchResult match_segments(const std::vector<EdgeSegment>& pred,
                           const std::vector<EdgeSegment>& gt, double threshold,
                           const Taxonomy& taxonomy);

struct CategoryStats {
  double pq = 0.0;
  double sq = 0.0;
  double rq = 0.0;
  int64_t tp = 0;
  int64_t fp = 0;
  int64_t fn = 0;
  double sum_iou = 0.0;
};

struct PQTriple {
  double pq = 0.0;
  double sq = 0.0;
  double rq = 0.0;
};

struct PQReport {
  std::map<int, CategoryStats> per_category;
  PQTriple overall;
  PQTriple things;
  PQTriple stuff;
  double iou_threshold = 0.1;
};

// Accumulates matched-segment statistics over any number of map pairs, then
// finalizes the panoptic quality report. Per category:
//   PQ = sum IoU / (TP + FP/2 + FN/2),  SQ = sum IoU / TP,  RQ = TP / (TP + FP/2 + FN/2)
// Overall, things and stuff rows are unweighted means over the categories
// with at least one gt or pred segment.
class PQAccumulator {
 public:
  explicit PQAccumulator(double threshold, int dilation = 0);

  // Throws ShapeMismatch when pred and gt dimensions differ, and
  // TaxonomyMismatch when a map holds labels outside the taxonomy. Pixels
  // with a nonzero ignore-mask value are dropped from both maps before
  // segment extraction (unlabeled regions in real datasets).
  void add(const LabelGrid& pred, const LabelGrid& gt, const Taxonomy& taxonomy,
           const Grid<uint8_t>* ignore = nullptr);

  // Folds another accumulator in; integer counts and exact IoU sums, so the
  // aggregate is independent of how pairs were distributed over workers.
  void merge(const PQAccumulator& other);

  PQReport report(const Taxonomy& taxonomy) const;

 private:
  struct Counts {
    int64_t tp = 0, fp = 0, fn = 0;
    double sum_iou = 0.0;
  };
  double threshold_;
  int dilation_;
  std::map<int, Counts> counts_;
};

// Single-pair convenience wrapper around PQAccumulator. The optional
// dilation widens both pixel sets by a Chebyshev radius before the IoU
// (0 keeps the plain set IoU).
PQReport edge_pq(const LabelGrid& pred, const LabelGrid& gt, double threshold,
                 const Taxonomy& taxonomy, int dilation = 0,
                 const Grid<uint8_t>* ignore = nullptr);

// Stable JSON rendering with the fixed field names pq, sq, rq, pq_th, sq_th,
// rq_th, pq_st, sq_st, rq_st, per_category.
std::string serialize_report(const PQReport& report);

// Chebyshev dilation of a sorted pixel-index set, clipped to the image.
std::vector<int32_t> dilate_pixels(const std::vector<int32_t>& pixels, int radius,
                                   int height, int width);

}  // namespace pet
