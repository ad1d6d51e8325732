#pragma once

#include <cstdint>

#include "pet/grid.hpp"
#include "pet/taxonomy.hpp"

namespace pet {

struct SynthParams {
  int height = 64;
  int width = 64;
  int max_instances = 8;
  int min_instance_size = 12;    // visible pixels an instance must keep
  bool rectangles = true;
  bool ellipses = true;
  int edge_radius = 2;           // the edge width the scene will be used with
  double min_center_distance = 0.0;  // 0 disables the separation constraint
  uint64_t seed = 0;
};

// Generates a random panoptic scene: a stuff background split into 1-3
// horizontal bands with distinct stuff categories, overlaid with up to
// max_instances thing shapes painted in placement order. Instances whose
// visible area drops below min_instance_size are removed, and when
// min_center_distance > 0 the centers of the instance edge rings (computed
// at edge_radius) keep at least that Euclidean distance, dropping the
// later-placed shape of an offending pair. Fully deterministic in the seed.
// Throws InfeasibleParams when the canvas cannot satisfy the constraints.
LabelGrid generate_scene(const SynthParams& params, const Taxonomy& taxonomy);

struct PerturbParams {
  double semantic_flip_rate = 0.0;  // chance an edge pixel changes category
  double center_jitter = 0.0;      // Gaussian displacement of heatmap peaks, px
  double offset_noise = 0.0;       // Gaussian noise on thing-edge offsets, px
  double heatmap_sigma = 8.0;      // sigma used to re-render jittered peaks
  uint64_t seed = 0;
};

struct Prediction {
  CategoryGrid semantic;
  ScalarGrid heatmap;
  OffsetField offsets;
};

// Degrades a prediction triple in controlled, seed-deterministic ways. Any
// component whose knob is 0 is returned bit-identical. Throws ShapeMismatch.
Prediction perturb_prediction(const Prediction& input, const PerturbParams& params,
                              const Taxonomy& taxonomy);

}  // namespace pet
