#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "pet/grid.hpp"

namespace pet {

// The class universe a panoptic edge map is defined over: K semantic
// categories indexed 1..K (0 is reserved for non-edge), partitioned into
// "thing" categories (countable, carry instance IDs) and "stuff" categories
// (amorphous, fixed instance ID 0), plus the instance-ID stride D used to
// pack (category, instance) pairs into a single integer label.
class Taxonomy {
 public:
  Taxonomy(int num_categories, std::set<int> things, std::set<int> stuff,
           uint32_t id_stride = 1000);

  int num_categories() const { return num_categories_; }  // K
  uint32_t id_stride() const { return id_stride_; }        // D

  bool is_valid_category(int category) const {
    return category >= 1 && category <= num_categories_;
  }
  bool is_thing(int category) const { return things_.count(category) > 0; }
  bool is_stuff(int category) const { return stuff_.count(category) > 0; }

  const std::set<int>& things() const { return things_; }
  const std::set<int>& stuff() const { return stuff_; }

  // 19 categories in the Cityscapes convention: 1..11 stuff, 12..19 thing.
  static Taxonomy cityscapes(uint32_t id_stride = 1000);

  static Taxonomy load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

 private:
  int num_categories_;
  std::set<int> things_;
  std::set<int> stuff_;
  uint32_t id_stride_;
};

struct DecodedLabel {
  int category = 0;          // 0 = non-edge
  uint32_t instance_id = 0;

  bool is_edge() const { return category != 0; }
  friend bool operator==(const DecodedLabel&, const DecodedLabel&) = default;
};

// Packs (category, instance_id) into category * D + instance_id.
// Throws CategoryOutOfRange, InstanceIdOverflow, StuffWithNonzeroInstance.
Label encode_label(int category, uint32_t instance_id, const Taxonomy& taxonomy);

// Inverse of encode_label; 0 decodes to the non-edge sentinel {0, 0}.
// Throws MalformedLabel when the category component falls outside 1..K.
DecodedLabel decode_label(Label encoded, const Taxonomy& taxonomy);

// One entry per violated invariant, anchored at the first offending pixel
// in row-major order.
struct Violation {
  int y = 0;
  int x = 0;
  std::string what;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

// Checks every nonzero pixel of `map` against the taxonomy: the category
// component must decode to 1..K and stuff labels must carry instance ID 0.
// Violations are report entries, never exceptions.
ValidationReport validate_map(const LabelGrid& map, const Taxonomy& taxonomy);

// Renumbers instance IDs of each thing category to 1..n in order of first
// pixel occurrence (row-major). Stuff and non-edge pixels are untouched.
// Idempotent; preserves the partition of pixels into segments.
LabelGrid canonicalize_instance_ids(const LabelGrid& map, const Taxonomy& taxonomy);

// Drops instance IDs, keeping the category component per pixel.
CategoryGrid to_semantic(const LabelGrid& map, const Taxonomy& taxonomy);

}  // namespace pet
