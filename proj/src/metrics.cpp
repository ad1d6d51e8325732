#include "pet/metrics.hpp"

#include <algorithm>
#include <set>

#include "json.hpp"
#include "pet/errors.hpp"

namespace pet {

std::vector<EdgeSegment> segments_of(const LabelGrid& map) {
  std::map<Label, std::vector<int32_t>> by_label;
  int32_t idx = 0;
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x, ++idx) {
      const Label v = map.at(y, x);
      if (v != kNonEdge) {
        by_label[v].push_back(idx);
      }
    }
  }
  std::vector<EdgeSegment> segments;
  segments.reserve(by_label.size());
  for (auto& [label, pixels] : by_label) {
    segments.push_back({label, std::move(pixels)});
  }
  return segments;
}

double edge_iou(const std::vector<int32_t>& a, const std::vector<int32_t>& b) {
  size_t i = 0, j = 0, inter = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++inter;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  const size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 0.0 : double(inter) / double(uni);
}

MatchResult match_segments(const std::vector<EdgeSegment>& pred,
                           const std::vector<EdgeSegment>& gt, double threshold,
                           const Taxonomy& taxonomy) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw InvalidThreshold("matching threshold must lie in (0, 1]");
  }
  struct Candidate {
    double iou;
    Label gt_label;
    Label pred_label;
    size_t pred_index;
    size_t gt_index;
  };
  std::vector<Candidate> candidates;
  for (size_t p = 0; p < pred.size(); ++p) {
    const int pc = decode_label(pred[p].label, taxonomy).category;
    for (size_t g = 0; g < gt.size(); ++g) {
      if (decode_label(gt[g].label, taxonomy).category != pc) continue;
      const double iou = edge_iou(pred[p].pixels, gt[g].pixels);
      if (iou > threshold) {
        candidates.push_back({iou, gt[g].label, pred[p].label, p, g});
      }
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) {
              if (a.iou != b.iou) return a.iou > b.iou;
              if (a.gt_label != b.gt_label) return a.gt_label < b.gt_label;
              return a.pred_label < b.pred_label;
            });

  MatchResult result;
  std::vector<bool> pred_used(pred.size(), false), gt_used(gt.size(), false);
  for (const Candidate& c : candidates) {
    if (pred_used[c.pred_index] || gt_used[c.gt_index]) continue;
    pred_used[c.pred_index] = true;
    gt_used[c.gt_index] = true;
    result.true_positives.push_back({c.pred_index, c.gt_index, c.iou});
  }
  for (size_t p = 0; p < pred.size(); ++p) {
    if (!pred_used[p]) result.false_positives.push_back(p);
  }
  for (size_t g = 0; g < gt.size(); ++g) {
    if (!gt_used[g]) result.false_negatives.push_back(g);
  }
  return result;
}

std::vector<int32_t> dilate_pixels(const std::vector<int32_t>& pixels, int radius,
                                   int height, int width) {
  if (radius <= 0) return pixels;
  std::set<int32_t> out;
  for (int32_t idx : pixels) {
    const int y = idx / width, x = idx % width;
    const int y0 = std::max(0, y - radius), y1 = std::min(height - 1, y + radius);
    const int x0 = std::max(0, x - radius), x1 = std::min(width - 1, x + radius);
    for (int yy = y0; yy <= y1; ++yy) {
      for (int xx = x0; xx <= x1; ++xx) {
        out.insert(yy * width + xx);
      }
    }
  }
  return {out.begin(), out.end()};
}

PQAccumulator::PQAccumulator(double threshold, int dilation)
    : threshold_(threshold), dilation_(dilation) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw InvalidThreshold("matching threshold must lie in (0, 1]");
  }
  if (dilation < 0) {
    throw InvalidThreshold("dilation must be >= 0");
  }
}

void PQAccumulator::add(const LabelGrid& pred, const LabelGrid& gt,
                        const Taxonomy& taxonomy, const Grid<uint8_t>* ignore) {
  if (!pred.same_shape(gt)) {
    throw ShapeMismatch("prediction and ground truth differ in shape");
  }
  std::vector<EdgeSegment> pred_segments, gt_segments;
  if (ignore != nullptr) {
    if (ignore->height() != pred.height() || ignore->width() != pred.width()) {
      throw ShapeMismatch("ignore mask differs in shape");
    }
    LabelGrid pred_kept = pred, gt_kept = gt;
    for (size_t i = 0; i < pred.size(); ++i) {
      if ((*ignore)[i] != 0) {
        pred_kept[i] = kNonEdge;
        gt_kept[i] = kNonEdge;
      }
    }
    pred_segments = segments_of(pred_kept);
    gt_segments = segments_of(gt_kept);
  } else {
    pred_segments = segments_of(pred);
    gt_segments = segments_of(gt);
  }
  if (dilation_ > 0) {
    for (auto& s : pred_segments) {
      s.pixels = dilate_pixels(s.pixels, dilation_, pred.height(), pred.width());
    }
    for (auto& s : gt_segments) {
      s.pixels = dilate_pixels(s.pixels, dilation_, gt.height(), gt.width());
    }
  }
  auto category_of = [&](Label label) {
    try {
      return decode_label(label, taxonomy).category;
    } catch (const MalformedLabel& e) {
      throw TaxonomyMismatch(e.what());
    }
  };
  // touch every present category so empty-count rows still appear
  for (const auto& s : pred_segments) counts_[category_of(s.label)];
  for (const auto& s : gt_segments) counts_[category_of(s.label)];

  const MatchResult match =
      match_segments(pred_segments, gt_segments, threshold_, taxonomy);
  for (const MatchedPair& tp : match.true_positives) {
    Counts& c = counts_[category_of(gt_segments[tp.gt_index].label)];
    c.tp += 1;
    c.sum_iou += tp.iou;
  }
  for (size_t p : match.false_positives) {
    counts_[category_of(pred_segments[p].label)].fp += 1;
  }
  for (size_t g : match.false_negatives) {
    counts_[category_of(gt_segments[g].label)].fn += 1;
  }
}

void PQAccumulator::merge(const PQAccumulator& other) {
  for (const auto& [category, c] : other.counts_) {
    Counts& mine = counts_[category];
    mine.tp += c.tp;
    mine.fp += c.fp;
    mine.fn += c.fn;
    mine.sum_iou += c.sum_iou;
  }
}

PQReport PQAccumulator::report(const Taxonomy& taxonomy) const {
  PQReport report;
  report.iou_threshold = threshold_;
  struct Mean {
    double pq = 0.0, sq = 0.0, rq = 0.0;
    int n = 0;
    PQTriple value() const {
      return n == 0 ? PQTriple{} : PQTriple{pq / n, sq / n, rq / n};
    }
  };
  Mean overall, things, stuff;
  for (const auto& [category, c] : counts_) {
    CategoryStats stats;
    stats.tp = c.tp;
    stats.fp = c.fp;
    stats.fn = c.fn;
    stats.sum_iou = c.sum_iou;
    const double denom = double(c.tp) + 0.5 * double(c.fp) + 0.5 * double(c.fn);
    if (denom > 0.0) {
      stats.pq = c.sum_iou / denom;
      stats.rq = double(c.tp) / denom;
    }
    stats.sq = c.tp > 0 ? c.sum_iou / double(c.tp) : 0.0;
    report.per_category[category] = stats;

    overall.pq += stats.pq;
    overall.sq += stats.sq;
    overall.rq += stats.rq;
    overall.n += 1;
    Mean& side = taxonomy.is_thing(category) ? things : stuff;
    side.pq += stats.pq;
    side.sq += stats.sq;
    side.rq += stats.rq;
    side.n += 1;
  }
  report.overall = overall.value();
  report.things = things.value();
  report.stuff = stuff.value();
  return report;
}

PQReport edge_pq(const LabelGrid& pred, const LabelGrid& gt, double threshold,
                 const Taxonomy& taxonomy, int dilation,
                 const Grid<uint8_t>* ignore) {
  PQAccumulator acc(threshold, dilation);
  acc.add(pred, gt, taxonomy, ignore);
  return acc.report(taxonomy);
}

std::string serialize_report(const PQReport& report) {
  nlohmann::json j;
  j["iou_threshold"] = report.iou_threshold;
  j["pq"] = report.overall.pq;
  j["sq"] = report.overall.sq;
  j["rq"] = report.overall.rq;
  j["pq_th"] = report.things.pq;
  j["sq_th"] = report.things.sq;
  j["rq_th"] = report.things.rq;
  j["pq_st"] = report.stuff.pq;
  j["sq_st"] = report.stuff.sq;
  j["rq_st"] = report.stuff.rq;
  nlohmann::json per;
  for (const auto& [category, stats] : report.per_category) {
    nlohmann::json row;
    row["pq"] = stats.pq;
    row["sq"] = stats.sq;
    row["rq"] = stats.rq;
    row["tp"] = stats.tp;
    row["fp"] = stats.fp;
    row["fn"] = stats.fn;
    row["sum_iou"] = stats.sum_iou;
    per[std::to_string(category)] = row;
  }
  j["per_category"] = per;
  return j.dump(2) + "\n";
}

}  // namespace pet
