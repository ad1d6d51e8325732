#include "pet/edgegen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "pet/errors.hpp"

namespace pet {

namespace {

// Separable min filter with a (2r+1) window, clamped at the ends.
// Operates on 0/1 masks; out(i) = min over the in-bounds window around i.
void min_filter_rows(const Grid<uint8_t>& in, Grid<uint8_t>& out, int radius) {
  const int h = in.height(), w = in.width();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      uint8_t m = 1;
      const int x0 = std::max(0, x - radius), x1 = std::min(w - 1, x + radius);
      for (int xx = x0; xx <= x1 && m; ++xx) {
        m = std::min(m, in.at(y, xx));
      }
      out.at(y, x) = m;
    }
  }
}

void min_filter_cols(const Grid<uint8_t>& in, Grid<uint8_t>& out, int radius) {
  const int h = in.height(), w = in.width();
  for (int y = 0; y < h; ++y) {
    const int y0 = std::max(0, y - radius), y1 = std::min(h - 1, y + radius);
    for (int x = 0; x < w; ++x) {
      uint8_t m = 1;
      for (int yy = y0; yy <= y1 && m; ++yy) {
        m = std::min(m, in.at(yy, x));
      }
      out.at(y, x) = m;
    }
  }
}

}  // namespace

LabelGrid panoptic_to_edges(const LabelGrid& seg, int radius, const Taxonomy& taxonomy) {
  if (radius < 1) {
    throw InfeasibleParams("edge radius must be >= 1");
  }
  const int h = seg.height(), w = seg.width();

  std::set<Label> labels;
  for (size_t i = 0; i < seg.size(); ++i) {
    labels.insert(seg[i]);
  }
  for (Label v : labels) {
    try {
      const DecodedLabel d = decode_label(v, taxonomy);
      if (!d.is_edge()) {
        throw MalformedLabel("segmentation maps may not contain label 0");
      }
      if (taxonomy.is_stuff(d.category) && d.instance_id != 0) {
        throw MalformedLabel("stuff segment with nonzero instance ID");
      }
    } catch (const MalformedLabel& e) {
      throw InvalidSegmentLabel(std::string("segment label ") + std::to_string(v) +
                                ": " + e.what());
    }
  }

  LabelGrid edges(h, w, kNonEdge);
  Grid<uint8_t> mask(h, w, 0), tmp(h, w, 0), eroded(h, w, 0);
  for (Label v : labels) {
    for (size_t i = 0; i < seg.size(); ++i) {
      mask[i] = seg[i] == v ? 1 : 0;
    }
    min_filter_rows(mask, tmp, radius);
    min_filter_cols(tmp, eroded, radius);
    // mask XOR eroded(mask): the ring the erosion strips off
    for (size_t i = 0; i < seg.size(); ++i) {
      if (mask[i] && !eroded[i]) {
        edges[i] = v;
      }
    }
  }
  return edges;
}

std::vector<InstanceCenter> instance_centers(const LabelGrid& edges,
                                             const Taxonomy& taxonomy) {
  struct Acc {
    double sy = 0.0, sx = 0.0;
    uint64_t n = 0;
  };
  std::map<std::pair<int, uint32_t>, Acc> acc;
  for (int y = 0; y < edges.height(); ++y) {
    for (int x = 0; x < edges.width(); ++x) {
      const Label v = edges.at(y, x);
      if (v == kNonEdge) continue;
      const DecodedLabel d = decode_label(v, taxonomy);
      if (!taxonomy.is_thing(d.category)) continue;
      Acc& a = acc[{d.category, d.instance_id}];
      a.sy += y;
      a.sx += x;
      a.n += 1;
    }
  }
  std::vector<InstanceCenter> centers;
  centers.reserve(acc.size());
  for (const auto& [key, a] : acc) {
    centers.push_back({key.first, key.second, a.sy / double(a.n), a.sx / double(a.n)});
  }
  return centers;
}

ScalarGrid make_center_heatmap(const std::vector<InstanceCenter>& centers,
                               int height, int width, double sigma) {
  if (!(sigma > 0.0)) {
    throw NonPositiveSigma("sigma must be > 0");
  }
  ScalarGrid heat(height, width, 0.0);
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double best = 0.0;
      for (const InstanceCenter& c : centers) {
        const double dy = y - c.cy, dx = x - c.cx;
        best = std::max(best, std::exp(-(dy * dy + dx * dx) * inv));
      }
      heat.at(y, x) = best;
    }
  }
  return heat;
}

OffsetField make_offset_field(const LabelGrid& edges,
                              const std::vector<InstanceCenter>& centers,
                              const Taxonomy& taxonomy) {
  std::map<std::pair<int, uint32_t>, const InstanceCenter*> by_key;
  for (const InstanceCenter& c : centers) {
    by_key[{c.category, c.instance_id}] = &c;
  }
  OffsetField field(edges.height(), edges.width());
  for (int y = 0; y < edges.height(); ++y) {
    for (int x = 0; x < edges.width(); ++x) {
      const Label v = edges.at(y, x);
      if (v == kNonEdge) continue;
      const DecodedLabel d = decode_label(v, taxonomy);
      if (!taxonomy.is_thing(d.category)) continue;
      auto it = by_key.find({d.category, d.instance_id});
      if (it == by_key.end()) {
        throw MissingCenter("no center for category " + std::to_string(d.category) +
                            " instance " + std::to_string(d.instance_id));
      }
      field.dy.at(y, x) = it->second->cy - y;
      field.dx.at(y, x) = it->second->cx - x;
    }
  }
  return field;
}

ScalarGrid thing_edge_mask(const LabelGrid& edges, const Taxonomy& taxonomy) {
  ScalarGrid mask(edges.height(), edges.width(), 0.0);
  for (size_t i = 0; i < edges.size(); ++i) {
    if (edges[i] == kNonEdge) continue;
    if (taxonomy.is_thing(decode_label(edges[i], taxonomy).category)) {
      mask[i] = 1.0;
    }
  }
  return mask;
}

}  // namespace pet
