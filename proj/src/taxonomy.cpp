#include "pet/taxonomy.hpp"

#include <fstream>
#include <map>

#include "json.hpp"
#include "pet/errors.hpp"

namespace pet {

Taxonomy::Taxonomy(int num_categories, std::set<int> things, std::set<int> stuff,
                   uint32_t id_stride)
    : num_categories_(num_categories),
      things_(std::move(things)),
      stuff_(std::move(stuff)),
      id_stride_(id_stride) {
  if (num_categories_ < 1) {
    throw CategoryOutOfRange("taxonomy needs at least one category");
  }
  if (id_stride_ < 1) {
    throw InstanceIdOverflow("instance-ID stride must be positive");
  }
  for (int c = 1; c <= num_categories_; ++c) {
    const bool thing = things_.count(c) > 0;
    const bool stuff_c = stuff_.count(c) > 0;
    if (thing && stuff_c) {
      throw CategoryOutOfRange("category " + std::to_string(c) +
                               " listed as both thing and stuff");
    }
    if (!thing && !stuff_c) {
      throw CategoryOutOfRange("category " + std::to_string(c) +
                               " missing from the thing/stuff partition");
    }
  }
  for (int c : things_) {
    if (c < 1 || c > num_categories_) {
      throw CategoryOutOfRange("thing category " + std::to_string(c) +
                               " outside 1..K");
    }
  }
  for (int c : stuff_) {
    if (c < 1 || c > num_categories_) {
      throw CategoryOutOfRange("stuff category " + std::to_string(c) +
                               " outside 1..K");
    }
  }
}

Taxonomy Taxonomy::cityscapes(uint32_t id_stride) {
  std::set<int> stuff, things;
  for (int c = 1; c <= 11; ++c) stuff.insert(c);
  for (int c = 12; c <= 19; ++c) things.insert(c);
  return Taxonomy(19, std::move(things), std::move(stuff), id_stride);
}

Taxonomy Taxonomy::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoFailure("cannot open taxonomy file: " + path.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoFailure("cannot parse taxonomy file " + path.string() + ": " + e.what());
  }
  if (!j.contains("K") || !j.contains("D") || !j.contains("thing") ||
      !j.contains("stuff")) {
    throw IoFailure("taxonomy file must define K, D, thing, stuff");
  }
  std::set<int> things(j["thing"].begin(), j["thing"].end());
  std::set<int> stuff(j["stuff"].begin(), j["stuff"].end());
  return Taxonomy(j["K"].get<int>(), std::move(things), std::move(stuff),
                  j["D"].get<uint32_t>());
}

void Taxonomy::save(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["K"] = num_categories_;
  j["D"] = id_stride_;
  j["thing"] = things_;
  j["stuff"] = stuff_;
  std::ofstream out(path);
  if (!out) {
    throw IoFailure("cannot write taxonomy file: " + path.string());
  }
  out << j.dump(2) << "\n";
}

Label encode_label(int category, uint32_t instance_id, const Taxonomy& taxonomy) {
  if (!taxonomy.is_valid_category(category)) {
    throw CategoryOutOfRange("category " + std::to_string(category) +
                             " outside 1.." + std::to_string(taxonomy.num_categories()));
  }
  if (instance_id >= taxonomy.id_stride()) {
    throw InstanceIdOverflow("instance ID " + std::to_string(instance_id) +
                             " >= stride " + std::to_string(taxonomy.id_stride()));
  }
  if (taxonomy.is_stuff(category) && instance_id != 0) {
    throw StuffWithNonzeroInstance("stuff category " + std::to_string(category) +
                                   " with instance ID " + std::to_string(instance_id));
  }
  return Label(category) * taxonomy.id_stride() + instance_id;
}

DecodedLabel decode_label(Label encoded, const Taxonomy& taxonomy) {
  if (encoded == kNonEdge) {
    return {0, 0};
  }
  const uint32_t d = taxonomy.id_stride();
  const uint32_t category = encoded / d;
  if (category < 1 || category > uint32_t(taxonomy.num_categories())) {
    throw MalformedLabel("label " + std::to_string(encoded) +
                         " decodes to category " + std::to_string(category));
  }
  return {int(category), encoded % d};
}

ValidationReport validate_map(const LabelGrid& map, const Taxonomy& taxonomy) {
  ValidationReport report;
  bool seen_malformed = false;
  bool seen_stuff_instance = false;
  const uint32_t d = taxonomy.id_stride();
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      const Label v = map.at(y, x);
      if (v == kNonEdge) continue;
      const uint32_t category = v / d;
      if (category < 1 || category > uint32_t(taxonomy.num_categories())) {
        if (!seen_malformed) {
          report.violations.push_back(
              {y, x, "label " + std::to_string(v) + " decodes to category " +
                         std::to_string(category) + " outside 1.." +
                         std::to_string(taxonomy.num_categories())});
          seen_malformed = true;
        }
        continue;
      }
      if (taxonomy.is_stuff(int(category)) && v % d != 0) {
        if (!seen_stuff_instance) {
          report.violations.push_back(
              {y, x, "stuff category " + std::to_string(category) +
                         " carries nonzero instance ID " + std::to_string(v % d)});
          seen_stuff_instance = true;
        }
      }
    }
  }
  return report;
}

LabelGrid canonicalize_instance_ids(const LabelGrid& map, const Taxonomy& taxonomy) {
  LabelGrid out(map.height(), map.width(), kNonEdge);
  // (category, raw id) -> canonical id, assigned in row-major first-occurrence order
  std::map<std::pair<uint32_t, uint32_t>, uint32_t> renumber;
  std::map<uint32_t, uint32_t> next_id;
  const uint32_t d = taxonomy.id_stride();
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      const Label v = map.at(y, x);
      if (v == kNonEdge) {
        continue;
      }
      const uint32_t category = v / d;
      if (!taxonomy.is_thing(int(category))) {
        out.at(y, x) = v;
        continue;
      }
      const uint32_t raw = v % d;
      auto key = std::make_pair(category, raw);
      auto it = renumber.find(key);
      if (it == renumber.end()) {
        it = renumber.emplace(key, ++next_id[category]).first;
      }
      out.at(y, x) = category * d + it->second;
    }
  }
  return out;
}

CategoryGrid to_semantic(const LabelGrid& map, const Taxonomy& taxonomy) {
  CategoryGrid out(map.height(), map.width(), 0);
  for (size_t i = 0; i < map.size(); ++i) {
    out[i] = decode_label(map[i], taxonomy).category;
  }
  return out;
}

}  // namespace pet
