#include "pet/metrics.hpp"

#include <gtest/gtest.h>

#include "naive_pq.hpp"
#include "pet/edgegen.hpp"
#include "pet/rng.hpp"

namespace pet {
namespace {

Taxonomy tax() { return Taxonomy::cityscapes(); }

LabelGrid square_edges() {
  const Taxonomy t = tax();
  LabelGrid seg(8, 8, encode_label(11, 0, t));
  for (int y = 2; y <= 5; ++y) {
    for (int x = 2; x <= 5; ++x) seg.at(y, x) = encode_label(12, 1, t);
  }
  return panoptic_to_edges(seg, 1, t);
}

TEST(SegmentsOf, LabelEquivalenceClasses) {
  const std::vector<EdgeSegment> segments = segments_of(square_edges());
  ASSERT_EQ(segments.size(), 2u);
  EXPECT_EQ(segments[0].label, 11000u);
  EXPECT_EQ(segments[0].pixels.size(), 20u);
  EXPECT_EQ(segments[1].label, 12001u);
  EXPECT_EQ(segments[1].pixels.size(), 12u);

  EXPECT_TRUE(segments_of(LabelGrid(8, 8, 0)).empty());
}

TEST(SegmentsOf, RelabelingKeepsPixelSets) {
  const Taxonomy t = tax();
  LabelGrid map(6, 6, 0);
  map.at(1, 1) = encode_label(12, 9, t);
  map.at(2, 2) = encode_label(12, 9, t);
  map.at(4, 4) = encode_label(12, 5, t);
  const auto raw = segments_of(map);
  const auto canon = segments_of(canonicalize_instance_ids(map, t));
  ASSERT_EQ(raw.size(), canon.size());
  // same pixel sets, possibly under new labels
  std::multiset<std::vector<int32_t>> raw_sets, canon_sets;
  for (const auto& s : raw) raw_sets.insert(s.pixels);
  for (const auto& s : canon) canon_sets.insert(s.pixels);
  EXPECT_EQ(raw_sets, canon_sets);
}

TEST(EdgeIou, CountingCases) {
  const std::vector<int32_t> a{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(edge_iou(a, a), 1.0);
  EXPECT_DOUBLE_EQ(edge_iou(a, {9, 10}), 0.0);
  EXPECT_DOUBLE_EQ(edge_iou({}, {}), 0.0);
  // |inter| = 10, |union| = 12
  std::vector<int32_t> b, c;
  for (int i = 0; i < 11; ++i) b.push_back(i);
  for (int i = 1; i < 12; ++i) c.push_back(i);
  EXPECT_DOUBLE_EQ(edge_iou(b, c), 10.0 / 12.0);
}

TEST(MatchSegments, SingleCandidate) {
  const Taxonomy t = tax();
  std::vector<EdgeSegment> gt{{12001u, {0, 1, 2, 3, 4}}};
  std::vector<EdgeSegment> pred{{12003u, {2, 3, 4, 5, 6, 7}}};
  // IoU = 3 / 8
  const MatchResult m = match_segments(pred, gt, 0.1, t);
  ASSERT_EQ(m.true_positives.size(), 1u);
  EXPECT_DOUBLE_EQ(m.true_positives[0].iou, 3.0 / 8.0);
  EXPECT_TRUE(m.false_positives.empty());
  EXPECT_TRUE(m.false_negatives.empty());
}

TEST(MatchSegments, BelowThresholdSplitsIntoFpFn) {
  const Taxonomy t = tax();
  // IoU = 9/100 = 0.09
  std::vector<int32_t> gt_px, pred_px;
  for (int i = 0; i < 50; ++i) gt_px.push_back(i);
  for (int i = 41; i < 100; ++i) pred_px.push_back(i);  // 9 shared
  std::vector<EdgeSegment> gt{{12001u, gt_px}};
  std::vector<EdgeSegment> pred{{12001u, pred_px}};
  const MatchResult m = match_segments(pred, gt, 0.1, t);
  EXPECT_TRUE(m.true_positives.empty());
  EXPECT_EQ(m.false_positives.size(), 1u);
  EXPECT_EQ(m.false_negatives.size(), 1u);
}

TEST(MatchSegments, CategoriesNeverCrossMatch) {
  const Taxonomy t = tax();
  std::vector<EdgeSegment> gt{{12001u, {0, 1, 2}}};
  std::vector<EdgeSegment> pred{{13001u, {0, 1, 2}}};  // perfect overlap, wrong class
  const MatchResult m = match_segments(pred, gt, 0.1, t);
  EXPECT_TRUE(m.true_positives.empty());
  EXPECT_EQ(m.false_positives.size(), 1u);
  EXPECT_EQ(m.false_negatives.size(), 1u);
}

TEST(MatchSegments, GreedyPrefersTheHigherIou) {
  const Taxonomy t = tax();
  std::vector<int32_t> gt_px;
  for (int i = 0; i < 10; ++i) gt_px.push_back(i);
  std::vector<EdgeSegment> gt{{12001u, gt_px}};
  std::vector<EdgeSegment> pred{
      {12001u, {0, 1, 2, 3, 4, 10, 11, 12, 13, 14}},  // IoU = 5/15
      {12002u, {0, 1, 2, 3, 4, 5, 6, 20, 21}},        // IoU = 7/12
  };
  const MatchResult m = match_segments(pred, gt, 0.1, t);
  ASSERT_EQ(m.true_positives.size(), 1u);
  EXPECT_EQ(m.true_positives[0].pred_index, 1u);
  ASSERT_EQ(m.false_positives.size(), 1u);
  EXPECT_EQ(m.false_positives[0], 0u);
}

TEST(MatchSegments, ThresholdValidation) {
  const Taxonomy t = tax();
  EXPECT_THROW(match_segments({}, {}, 0.0, t), InvalidThreshold);
  EXPECT_THROW(match_segments({}, {}, 1.5, t), InvalidThreshold);
}

TEST(EdgePq, PerfectPrediction) {
  const Taxonomy t = tax();
  const LabelGrid edges = square_edges();
  const PQReport report = edge_pq(edges, edges, 0.1, t);
  EXPECT_DOUBLE_EQ(report.overall.pq, 1.0);
  EXPECT_DOUBLE_EQ(report.overall.sq, 1.0);
  EXPECT_DOUBLE_EQ(report.overall.rq, 1.0);
  EXPECT_DOUBLE_EQ(report.things.pq, 1.0);
  EXPECT_DOUBLE_EQ(report.stuff.pq, 1.0);
}

TEST(EdgePq, SinglePairDirectEvaluation) {
  const Taxonomy t = tax();
  // one category, one gt and one pred segment with IoU 0.6 = 6/10
  LabelGrid gt(1, 12, 0), pred(1, 12, 0);
  for (int x = 0; x < 8; ++x) gt.at(0, x) = 12001u;
  for (int x = 2; x < 10; ++x) pred.at(0, x) = 12001u;
  const PQReport report = edge_pq(pred, gt, 0.1, t);
  const CategoryStats& row = report.per_category.at(12);
  EXPECT_DOUBLE_EQ(row.pq, 0.6);
  EXPECT_DOUBLE_EQ(row.sq, 0.6);
  EXPECT_DOUBLE_EQ(row.rq, 1.0);
  EXPECT_EQ(row.tp, 1);
}

TEST(EdgePq, EmptyPredictionIsAllMisses) {
  const Taxonomy t = tax();
  LabelGrid gt(4, 4, 0);
  gt.at(1, 1) = 12001u;
  const PQReport report = edge_pq(LabelGrid(4, 4, 0), gt, 0.1, t);
  const CategoryStats& row = report.per_category.at(12);
  EXPECT_DOUBLE_EQ(row.pq, 0.0);
  EXPECT_DOUBLE_EQ(row.rq, 0.0);
  EXPECT_EQ(row.fn, 1);
  EXPECT_EQ(row.tp, 0);
}

TEST(EdgePq, ShapeMismatchThrows) {
  const Taxonomy t = tax();
  EXPECT_THROW(edge_pq(LabelGrid(2, 2, 0), LabelGrid(2, 3, 0), 0.1, t),
               ShapeMismatch);
}

TEST(EdgePq, ForeignLabelsAreTaxonomyMismatch) {
  const Taxonomy t = tax();
  LabelGrid bad(2, 2, 0);
  bad.at(0, 0) = 25000u;  // category 25 > K
  EXPECT_THROW(edge_pq(bad, LabelGrid(2, 2, 0), 0.1, t), TaxonomyMismatch);
}

TEST(EdgePq, IdentityPqEqualsSqTimesRq) {
  const Taxonomy t = tax();
  Rng rng(61);
  for (int trial = 0; trial < 50; ++trial) {
    const auto [pred, gt] = pet_test::random_map_pair(rng, t, 32, 4);
    const PQReport report = edge_pq(pred, gt, 0.1, t);
    for (const auto& [category, row] : report.per_category) {
      if (row.tp > 0) {
        ASSERT_NEAR(row.pq, row.sq * row.rq, 1e-12);
      }
    }
  }
}

TEST(EdgePq, SwappingSidesSwapsFpAndFn) {
  const Taxonomy t = tax();
  Rng rng(62);
  for (int trial = 0; trial < 30; ++trial) {
    const auto [pred, gt] = pet_test::random_map_pair(rng, t, 24, 4);
    const PQReport ab = edge_pq(pred, gt, 0.1, t);
    const PQReport ba = edge_pq(gt, pred, 0.1, t);
    ASSERT_EQ(ab.per_category.size(), ba.per_category.size());
    for (const auto& [category, row] : ab.per_category) {
      const CategoryStats& mirrored = ba.per_category.at(category);
      ASSERT_EQ(row.tp, mirrored.tp);
      ASSERT_EQ(row.fp, mirrored.fn);
      ASSERT_EQ(row.fn, mirrored.fp);
      ASSERT_DOUBLE_EQ(row.sum_iou, mirrored.sum_iou);
    }
  }
}

TEST(EdgePq, InvariantUnderCanonicalization) {
  const Taxonomy t = tax();
  Rng rng(63);
  for (int trial = 0; trial < 30; ++trial) {
    const auto [pred, gt] = pet_test::random_map_pair(rng, t, 24, 4);
    const std::string base = serialize_report(edge_pq(pred, gt, 0.1, t));
    const std::string canon = serialize_report(edge_pq(
        canonicalize_instance_ids(pred, t), canonicalize_instance_ids(gt, t), 0.1, t));
    ASSERT_EQ(base, canon);
  }
}

TEST(EdgePq, MatchesTheNaiveReimplementation) {
  const Taxonomy t = tax();
  Rng rng(64);
  for (int trial = 0; trial < 60; ++trial) {
    const auto [pred, gt] = pet_test::random_map_pair(rng, t, 32, 4);
    const std::string ours = serialize_report(edge_pq(pred, gt, 0.1, t));
    const std::string naive =
        serialize_report(pet_test::naive_edge_pq(pred, gt, 0.1, t));
    ASSERT_EQ(ours, naive) << "trial " << trial;
  }
}

TEST(EdgePq, DeletingPredPixelsFromASubsetNeverRaisesIou) {
  // start from pred = gt; deleting pred pixels keeps pred inside gt, so the
  // IoU of each surviving segment can only fall
  const Taxonomy t = tax();
  Rng rng(65);
  LabelGrid gt(16, 16, 0);
  for (int y = 4; y < 12; ++y) {
    for (int x = 4; x < 12; ++x) gt.at(y, x) = 12001u;
  }
  LabelGrid pred = gt;
  double prev = 1.0;
  for (int step = 0; step < 40; ++step) {
    // delete one random remaining pred pixel
    std::vector<size_t> candidates;
    for (size_t i = 0; i < pred.size(); ++i) {
      if (pred[i] != 0) candidates.push_back(i);
    }
    if (candidates.empty()) break;
    pred[candidates[size_t(rng.below(candidates.size()))]] = 0;
    const auto segments = segments_of(pred);
    if (segments.empty()) break;
    const double iou = edge_iou(segments[0].pixels, segments_of(gt)[0].pixels);
    ASSERT_LE(iou, prev);
    prev = iou;
  }
}

TEST(EdgePq, DilationWidensTolerance) {
  const Taxonomy t = tax();
  // pred shifted one pixel off gt: plain IoU 0, dilated IoU well above 0
  LabelGrid gt(8, 8, 0), pred(8, 8, 0);
  for (int x = 1; x < 7; ++x) {
    gt.at(3, x) = 5000u;
    pred.at(4, x) = 5000u;
  }
  const PQReport plain = edge_pq(pred, gt, 0.1, t, 0);
  const PQReport dilated = edge_pq(pred, gt, 0.1, t, 1);
  EXPECT_DOUBLE_EQ(plain.overall.pq, 0.0);
  EXPECT_GT(dilated.overall.pq, 0.4);
}

TEST(Accumulator, MergeMatchesSequentialAdds) {
  const Taxonomy t = tax();
  Rng rng(66);
  PQAccumulator sequential(0.1);
  PQAccumulator left(0.1), right(0.1);
  for (int trial = 0; trial < 10; ++trial) {
    const auto [pred, gt] = pet_test::random_map_pair(rng, t, 24, 3);
    sequential.add(pred, gt, t);
    (trial % 2 ? left : right).add(pred, gt, t);
  }
  PQAccumulator merged(0.1);
  merged.merge(right);
  merged.merge(left);
  EXPECT_EQ(serialize_report(sequential.report(t)), serialize_report(merged.report(t)));
}

TEST(EdgePq, IgnoreMaskDropsPixelsFromBothSides) {
  const Taxonomy t = tax();
  LabelGrid gt(8, 8, 0), pred(8, 8, 0);
  for (int x = 1; x < 7; ++x) {
    gt.at(3, x) = 12001u;
    pred.at(3, x) = 12001u;
  }
  pred.at(3, 6) = 13001u;  // disagreement confined to one pixel
  gt.at(3, 6) = 12001u;
  Grid<uint8_t> ignore(8, 8, 0);
  ignore.at(3, 6) = 1;
  const PQReport masked = edge_pq(pred, gt, 0.1, t, 0, &ignore);
  EXPECT_DOUBLE_EQ(masked.overall.pq, 1.0);
  const PQReport unmasked = edge_pq(pred, gt, 0.1, t);
  EXPECT_LT(unmasked.overall.pq, 1.0);
  Grid<uint8_t> wrong_shape(8, 9, 0);
  EXPECT_THROW(edge_pq(pred, gt, 0.1, t, 0, &wrong_shape), ShapeMismatch);
}

TEST(Report, SerializationCarriesTheFixedKeys) {
  const Taxonomy t = tax();
  const LabelGrid edges = square_edges();
  const std::string text = serialize_report(edge_pq(edges, edges, 0.1, t));
  for (const char* key : {"\"pq\"", "\"sq\"", "\"rq\"", "\"pq_th\"", "\"sq_th\"",
                          "\"rq_th\"", "\"pq_st\"", "\"sq_st\"", "\"rq_st\"",
                          "\"per_category\"", "\"iou_threshold\""}) {
    EXPECT_NE(text.find(key), std::string::npos) << key;
  }
}

}  // namespace
}  // namespace pet
