#include "pet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "pet/edgegen.hpp"
#include "pet/errors.hpp"
#include "pet/rng.hpp"

namespace pet {

namespace {

struct Shape {
  bool is_rect = true;
  int category = 0;
  uint32_t instance_id = 0;
  // rectangle: inclusive bounds; ellipse: center and semi-axes
  int y0 = 0, x0 = 0, y1 = 0, x1 = 0;
  double cy = 0.0, cx = 0.0, ay = 1.0, ax = 1.0;

  bool covers(int y, int x) const {
    if (is_rect) {
      return y >= y0 && y <= y1 && x >= x0 && x <= x1;
    }
    const double ry = (y - cy) / ay, rx = (x - cx) / ax;
    return ry * ry + rx * rx <= 1.0;
  }
};

LabelGrid render(int height, int width, const std::vector<Label>& band_labels,
                 const std::vector<int>& band_starts, const std::vector<Shape>& shapes,
                 const Taxonomy& taxonomy) {
  LabelGrid canvas(height, width, kNonEdge);
  for (size_t b = 0; b < band_labels.size(); ++b) {
    const int lo = band_starts[b];
    const int hi = b + 1 < band_starts.size() ? band_starts[b + 1] : height;
    for (int y = lo; y < hi; ++y) {
      for (int x = 0; x < width; ++x) {
        canvas.at(y, x) = band_labels[b];
      }
    }
  }
  for (const Shape& s : shapes) {
    const Label v = encode_label(s.category, s.instance_id, taxonomy);
    const int lo_y = s.is_rect ? s.y0 : int(std::floor(s.cy - s.ay));
    const int hi_y = s.is_rect ? s.y1 : int(std::ceil(s.cy + s.ay));
    const int lo_x = s.is_rect ? s.x0 : int(std::floor(s.cx - s.ax));
    const int hi_x = s.is_rect ? s.x1 : int(std::ceil(s.cx + s.ax));
    for (int y = std::max(0, lo_y); y <= std::min(height - 1, hi_y); ++y) {
      for (int x = std::max(0, lo_x); x <= std::min(width - 1, hi_x); ++x) {
        if (s.covers(y, x)) {
          canvas.at(y, x) = v;
        }
      }
    }
  }
  return canvas;
}

// Drops shapes whose visible area fell below the minimum, repeatedly, since
// removing an occluder can only grow what is left.
void remove_small(std::vector<Shape>& shapes, int height, int width,
                  const std::vector<Label>& band_labels,
                  const std::vector<int>& band_starts, int min_size,
                  const Taxonomy& taxonomy) {
  for (;;) {
    if (shapes.empty()) return;
    const LabelGrid canvas =
        render(height, width, band_labels, band_starts, shapes, taxonomy);
    std::map<Label, int> visible;
    for (size_t i = 0; i < canvas.size(); ++i) {
      visible[canvas[i]] += 1;
    }
    std::vector<Shape> kept;
    for (const Shape& s : shapes) {
      const Label v = encode_label(s.category, s.instance_id, taxonomy);
      if (visible[v] >= min_size) {
        kept.push_back(s);
      }
    }
    if (kept.size() == shapes.size()) return;
    shapes = std::move(kept);
  }
}

}  // namespace

LabelGrid generate_scene(const SynthParams& params, const Taxonomy& taxonomy) {
  if (params.height < 4 || params.width < 4) {
    throw InfeasibleParams("canvas must be at least 4x4");
  }
  if (params.edge_radius < 1) {
    throw InfeasibleParams("edge radius must be >= 1");
  }
  if (params.min_instance_size < 2 * (params.edge_radius + 1)) {
    throw InfeasibleParams("min_instance_size must be >= 2*(edge_radius+1)");
  }
  if (params.max_instances < 0 ||
      uint32_t(params.max_instances) >= taxonomy.id_stride()) {
    throw InfeasibleParams("max_instances must lie in 0..D-1");
  }
  if (taxonomy.stuff().empty()) {
    throw InfeasibleParams("taxonomy has no stuff category for the background");
  }
  if (params.max_instances > 0 && taxonomy.things().empty()) {
    throw InfeasibleParams("taxonomy has no thing categories");
  }
  if (params.max_instances > 0 && !params.rectangles && !params.ellipses) {
    throw InfeasibleParams("no shape kind enabled");
  }

  const int side_min =
      std::max(3, int(std::ceil(std::sqrt(double(params.min_instance_size)))));
  const int side_max_y = std::max(side_min, params.height / 2);
  const int side_max_x = std::max(side_min, params.width / 2);
  if (params.max_instances > 0 &&
      (side_max_y >= params.height || side_max_x >= params.width)) {
    throw InfeasibleParams("canvas too small for the requested instance size");
  }

  Rng rng(params.seed);

  // stuff background: 1..3 horizontal bands with distinct stuff categories
  std::vector<int> stuff_pool(taxonomy.stuff().begin(), taxonomy.stuff().end());
  const int max_bands = int(std::min<size_t>({3, stuff_pool.size(),
                                              size_t(params.height)}));
  const int n_bands = 1 + int(rng.below(uint64_t(max_bands)));
  std::vector<Label> band_labels;
  for (int b = 0; b < n_bands; ++b) {
    const size_t pick = size_t(rng.below(stuff_pool.size()));
    band_labels.push_back(encode_label(stuff_pool[pick], 0, taxonomy));
    stuff_pool.erase(stuff_pool.begin() + pick);
  }
  std::vector<int> band_starts{0};
  if (n_bands > 1) {
    std::vector<int> cuts;
    while (int(cuts.size()) < n_bands - 1) {
      const int cut = 1 + int(rng.below(uint64_t(params.height - 1)));
      if (std::find(cuts.begin(), cuts.end(), cut) == cuts.end()) {
        cuts.push_back(cut);
      }
    }
    std::sort(cuts.begin(), cuts.end());
    band_starts.insert(band_starts.end(), cuts.begin(), cuts.end());
  }

  // thing shapes, placement order doubles as z-order
  const std::vector<int> thing_pool(taxonomy.things().begin(),
                                    taxonomy.things().end());
  const int n_shapes = int(rng.below(uint64_t(params.max_instances) + 1));
  std::vector<Shape> shapes;
  std::map<int, uint32_t> next_instance;
  for (int i = 0; i < n_shapes; ++i) {
    Shape s;
    const bool can_rect = params.rectangles, can_ellipse = params.ellipses;
    s.is_rect = can_rect && (!can_ellipse || rng.below(2) == 0);
    s.category = thing_pool[size_t(rng.below(thing_pool.size()))];
    s.instance_id = ++next_instance[s.category];
    if (s.is_rect) {
      const int sy = int(rng.range(side_min, side_max_y));
      const int sx = int(rng.range(side_min, side_max_x));
      s.y0 = int(rng.range(0, params.height - sy));
      s.x0 = int(rng.range(0, params.width - sx));
      s.y1 = s.y0 + sy - 1;
      s.x1 = s.x0 + sx - 1;
    } else {
      const int a_min = std::max(2, (side_min + 1) / 2);
      const int ay = int(rng.range(a_min, std::max(a_min, side_max_y / 2)));
      const int ax = int(rng.range(a_min, std::max(a_min, side_max_x / 2)));
      s.ay = ay;
      s.ax = ax;
      s.cy = double(rng.range(ay, params.height - 1 - ay));
      s.cx = double(rng.range(ax, params.width - 1 - ax));
    }
    shapes.push_back(s);
  }

  remove_small(shapes, params.height, params.width, band_labels, band_starts,
               params.min_instance_size, taxonomy);

  if (params.min_center_distance > 0.0) {
    const double min_sq = params.min_center_distance * params.min_center_distance;
    for (;;) {
      const LabelGrid canvas = render(params.height, params.width, band_labels,
                                      band_starts, shapes, taxonomy);
      const LabelGrid edges = panoptic_to_edges(canvas, params.edge_radius, taxonomy);
      const std::vector<InstanceCenter> centers = instance_centers(edges, taxonomy);
      int drop_index = -1;
      for (size_t a = 0; a < centers.size() && drop_index < 0; ++a) {
        for (size_t b = a + 1; b < centers.size() && drop_index < 0; ++b) {
          const double dy = centers[a].cy - centers[b].cy;
          const double dx = centers[a].cx - centers[b].cx;
          if (dy * dy + dx * dx < min_sq) {
            // drop the later-placed shape of the offending pair
            for (size_t s = 0; s < shapes.size(); ++s) {
              const auto matches = [&](const InstanceCenter& c) {
                return shapes[s].category == c.category &&
                       shapes[s].instance_id == c.instance_id;
              };
              if (matches(centers[a]) || matches(centers[b])) {
                drop_index = int(s);  // keeps updating; the last match wins
              }
            }
          }
        }
      }
      if (drop_index < 0) break;
      shapes.erase(shapes.begin() + drop_index);
      remove_small(shapes, params.height, params.width, band_labels, band_starts,
                   params.min_instance_size, taxonomy);
    }
  }

  return render(params.height, params.width, band_labels, band_starts, shapes,
                taxonomy);
}

Prediction perturb_prediction(const Prediction& input, const PerturbParams& params,
                              const Taxonomy& taxonomy) {
  const int h = input.semantic.height(), w = input.semantic.width();
  if (input.heatmap.height() != h || input.heatmap.width() != w ||
      input.offsets.height() != h || input.offsets.width() != w) {
    throw ShapeMismatch("prediction components differ in shape");
  }
  Rng rng(params.seed);
  Prediction out = input;

  if (params.semantic_flip_rate > 0.0) {
    const int kc = taxonomy.num_categories();
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int cur = input.semantic.at(y, x);
        if (cur == 0) continue;
        if (rng.unit() < params.semantic_flip_rate && kc > 1) {
          int pick = 1 + int(rng.below(uint64_t(kc - 1)));
          if (pick >= cur) pick += 1;
          out.semantic.at(y, x) = pick;
        }
      }
    }
  }

  if (params.center_jitter > 0.0) {
    // peaks of a rendered heatmap: strict 3x3 maxima above half height
    std::vector<InstanceCenter> jittered;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double v = input.heatmap.at(y, x);
        if (v < 0.5) continue;
        bool peak = true;
        for (int dy = -1; dy <= 1 && peak; ++dy) {
          for (int dx = -1; dx <= 1 && peak; ++dx) {
            if (dy == 0 && dx == 0) continue;
            const int yy = y + dy, xx = x + dx;
            if (!input.heatmap.in_bounds(yy, xx)) continue;
            const double o = input.heatmap.at(yy, xx);
            if (o > v || (o == v && (yy < y || (yy == y && xx < x)))) {
              peak = false;
            }
          }
        }
        if (!peak) continue;
        InstanceCenter c;
        c.cy = std::clamp(y + rng.normal() * params.center_jitter, 0.0, double(h - 1));
        c.cx = std::clamp(x + rng.normal() * params.center_jitter, 0.0, double(w - 1));
        jittered.push_back(c);
      }
    }
    out.heatmap = make_center_heatmap(jittered, h, w, params.heatmap_sigma);
  }

  if (params.offset_noise > 0.0) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int category = input.semantic.at(y, x);
        if (category == 0 || !taxonomy.is_thing(category)) continue;
        out.offsets.dy.at(y, x) += rng.normal() * params.offset_noise;
        out.offsets.dx.at(y, x) += rng.normal() * params.offset_noise;
      }
    }
  }

  return out;
}

}  // namespace pet
