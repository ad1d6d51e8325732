#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "json.hpp"
#include "pet/edgegen.hpp"
#include "pet/synth.hpp"
#include "pet/taxonomy.hpp"
#include "pet/tensor_io.hpp"

namespace pet {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / "pet_cli_test";
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args) const {
    const std::string cmd = std::string(PET_CLI_PATH) + " " + args + " >" +
                            (dir_ / "stdout.txt").string() + " 2>" +
                            (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
  }

  std::string stdout_text() const {
    std::ifstream in(dir_ / "stdout.txt");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path path(const std::string& name) const { return dir_ / name; }

  fs::path write_scene(uint64_t seed) const {
    SynthParams params;
    params.seed = seed;
    const LabelGrid scene = generate_scene(params, Taxonomy::cityscapes());
    const fs::path p = path("scene.pet");
    write_tensor(p, to_tensor(scene));
    return p;
  }

  fs::path dir_;
};

TEST_F(CliTest, GtGenHappyPath) {
  const fs::path scene = write_scene(3);
  const fs::path out = path("edges.pet");
  EXPECT_EQ(run("gt-gen --input " + scene.string() + " --radius 2 --out " +
                out.string()),
            0);
  EXPECT_TRUE(fs::exists(out));
  const LabelGrid edges = label_grid_from(read_tensor(out));
  EXPECT_TRUE(validate_map(edges, Taxonomy::cityscapes()).ok());
}

TEST_F(CliTest, GtGenExportsAGraymap) {
  const fs::path scene = write_scene(14);
  ASSERT_EQ(run("gt-gen --input " + scene.string() + " --radius 2 --out " +
                path("edges.pet").string() + " --out-pgm " +
                path("edges.pgm").string()),
            0);
  const LabelGrid from_tensor = label_grid_from(read_tensor(path("edges.pet")));
  EXPECT_EQ(read_label_pgm(path("edges.pgm")), from_tensor);
}

TEST_F(CliTest, GtGenMissingInputIsUsageError) {
  EXPECT_EQ(run("gt-gen --input " + path("nope.pet").string() + " --out " +
                path("e.pet").string()),
            1);
}

TEST_F(CliTest, GtGenMalformedLabelsFailValidation) {
  LabelGrid seg(8, 8, 3000u);
  seg.at(2, 5) = 0;  // unassigned pixel
  write_tensor(path("bad.pet"), to_tensor(seg));
  EXPECT_EQ(run("gt-gen --input " + path("bad.pet").string() + " --out " +
                path("e.pet").string()),
            2);
  std::ifstream err(path("stderr.txt"));
  std::stringstream ss;
  ss << err.rdbuf();
  EXPECT_NE(ss.str().find("(2, 5)"), std::string::npos);
}

TEST_F(CliTest, TargetsEmitsPeaksPerInstance) {
  const Taxonomy t = Taxonomy::cityscapes();
  SynthParams params;
  params.seed = 21;
  params.min_center_distance = 12.0;  // >= 3 sigma at sigma 4
  const LabelGrid scene = generate_scene(params, t);
  const LabelGrid edges = panoptic_to_edges(scene, 2, t);
  write_tensor(path("edges.pet"), to_tensor(edges));
  ASSERT_EQ(run("targets --edges " + path("edges.pet").string() +
                " --sigma 4 --out-heatmap " + path("h.pet").string() +
                " --out-offsets " + path("o.pet").string()),
            0);
  const ScalarGrid heat = scalar_grid_from(read_tensor(path("h.pet")));
  const size_t n_instances = instance_centers(edges, t).size();
  // count strict 3x3 local maxima above the guaranteed peak height
  size_t peaks = 0;
  const double floor = std::exp(-0.5 / (4.0 * 4.0));
  for (int y = 0; y < heat.height(); ++y) {
    for (int x = 0; x < heat.width(); ++x) {
      const double v = heat.at(y, x);
      if (v < floor) continue;
      bool strict = true;
      for (int dy = -1; dy <= 1 && strict; ++dy) {
        for (int dx = -1; dx <= 1 && strict; ++dx) {
          if (dy == 0 && dx == 0) continue;
          const int yy = y + dy, xx = x + dx;
          if (!heat.in_bounds(yy, xx)) continue;
          if (heat.at(yy, xx) > v ||
              (heat.at(yy, xx) == v && (yy < y || (yy == y && xx < x)))) {
            strict = false;
          }
        }
      }
      if (strict) ++peaks;
    }
  }
  EXPECT_EQ(peaks, n_instances);
}

TEST_F(CliTest, TargetsStuffOnlySceneIsAllZero) {
  const Taxonomy t = Taxonomy::cityscapes();
  SynthParams params;
  params.max_instances = 0;
  params.seed = 4;
  const LabelGrid edges = panoptic_to_edges(generate_scene(params, t), 2, t);
  write_tensor(path("edges.pet"), to_tensor(edges));
  ASSERT_EQ(run("targets --edges " + path("edges.pet").string() +
                " --sigma 4 --out-heatmap " + path("h.pet").string() +
                " --out-offsets " + path("o.pet").string()),
            0);
  const ScalarGrid heat = scalar_grid_from(read_tensor(path("h.pet")));
  for (size_t i = 0; i < heat.size(); ++i) ASSERT_EQ(heat[i], 0.0f);
  const OffsetField offsets = offset_field_from(read_tensor(path("o.pet")));
  for (size_t i = 0; i < offsets.dy.size(); ++i) {
    ASSERT_EQ(offsets.dy[i], 0.0);
    ASSERT_EQ(offsets.dx[i], 0.0);
  }
}

TEST_F(CliTest, TargetsRejectsNonPositiveSigma) {
  const fs::path scene = write_scene(5);
  ASSERT_EQ(run("gt-gen --input " + scene.string() + " --radius 2 --out " +
                path("edges.pet").string()),
            0);
  EXPECT_EQ(run("targets --edges " + path("edges.pet").string() +
                " --sigma 0 --out-heatmap " + path("h.pet").string() +
                " --out-offsets " + path("o.pet").string()),
            1);
}

TEST_F(CliTest, FullPipelineRoundTripsAndEvaluatesToOne) {
  const fs::path scene = write_scene(33);
  ASSERT_EQ(run("gt-gen --input " + scene.string() + " --radius 2 --out " +
                path("edges.pet").string()),
            0);
  ASSERT_EQ(run("targets --edges " + path("edges.pet").string() +
                " --sigma 4 --out-heatmap " + path("h.pet").string() +
                " --out-offsets " + path("o.pet").string()),
            0);
  // semantic map from the edges
  const Taxonomy t = Taxonomy::cityscapes();
  const LabelGrid edges = label_grid_from(read_tensor(path("edges.pet")));
  write_tensor(path("sem.pet"), to_tensor(to_semantic(edges, t)));
  ASSERT_EQ(run("fuse --semantic " + path("sem.pet").string() + " --heatmap " +
                path("h.pet").string() + " --offsets " + path("o.pet").string() +
                " --out " + path("fused.pet").string() + " --visualize " +
                path("fused.ppm").string()),
            0);
  EXPECT_TRUE(fs::exists(path("fused.ppm")));

  ASSERT_EQ(run("eval --pred " + path("fused.pet").string() + " --gt " +
                path("edges.pet").string() + " --report " +
                path("report.json").string() + " --visualize " +
                path("viz").string()),
            0);
  EXPECT_TRUE(fs::exists(path("viz.pred.ppm")));
  EXPECT_TRUE(fs::exists(path("viz.gt.ppm")));
  const std::string line = stdout_text();
  EXPECT_NE(line.find("pq 1 sq 1 rq 1"), std::string::npos) << line;

  std::ifstream in(path("report.json"));
  nlohmann::json j;
  in >> j;
  EXPECT_DOUBLE_EQ(j["pq"].get<double>(), 1.0);
  for (const char* key : {"pq_th", "sq_th", "rq_th", "pq_st", "sq_st", "rq_st"}) {
    ASSERT_TRUE(j.contains(key)) << key;
  }
}

TEST_F(CliTest, FuseEmptyMapsSucceedWithAllZeroOutput) {
  write_tensor(path("sem.pet"), to_tensor(CategoryGrid(8, 8, 0)));
  write_tensor(path("h.pet"), to_tensor(ScalarGrid(8, 8, 0.0)));
  write_tensor(path("o.pet"), to_tensor(OffsetField(8, 8)));
  ASSERT_EQ(run("fuse --semantic " + path("sem.pet").string() + " --heatmap " +
                path("h.pet").string() + " --offsets " + path("o.pet").string() +
                " --out " + path("fused.pet").string()),
            0);
  const LabelGrid fused = label_grid_from(read_tensor(path("fused.pet")));
  for (size_t i = 0; i < fused.size(); ++i) ASSERT_EQ(fused[i], kNonEdge);
}

TEST_F(CliTest, FuseShapeMismatchIsUsageError) {
  write_tensor(path("sem.pet"), to_tensor(CategoryGrid(8, 8, 0)));
  write_tensor(path("h.pet"), to_tensor(ScalarGrid(8, 9, 0.0)));
  write_tensor(path("o.pet"), to_tensor(OffsetField(8, 8)));
  EXPECT_EQ(run("fuse --semantic " + path("sem.pet").string() + " --heatmap " +
                path("h.pet").string() + " --offsets " + path("o.pet").string() +
                " --out " + path("fused.pet").string()),
            1);
}

TEST_F(CliTest, FuseAcceptsLogitsVolume) {
  // 3-channel logits with channel 5 dominant inside a band
  const Taxonomy t = Taxonomy::cityscapes();
  const int h = 8, w = 8;
  Volume logits(t.num_categories() + 1, h, w, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      logits.at(0, y, x) = 5.0;  // non-edge wins by default
      if (y == 3) {
        logits.at(5, y, x) = 10.0;
      }
    }
  }
  write_tensor(path("logits.pet"), to_tensor(logits));
  write_tensor(path("h.pet"), to_tensor(ScalarGrid(h, w, 0.0)));
  write_tensor(path("o.pet"), to_tensor(OffsetField(h, w)));
  ASSERT_EQ(run("fuse --semantic " + path("logits.pet").string() + " --heatmap " +
                path("h.pet").string() + " --offsets " + path("o.pet").string() +
                " --out " + path("fused.pet").string()),
            0);
  const LabelGrid fused = label_grid_from(read_tensor(path("fused.pet")));
  EXPECT_EQ(fused.at(3, 4), 5000u);
  EXPECT_EQ(fused.at(0, 0), 0u);
}

TEST_F(CliTest, EvalRejectsZeroThreshold) {
  const fs::path scene = write_scene(6);
  ASSERT_EQ(run("gt-gen --input " + scene.string() + " --radius 1 --out " +
                path("edges.pet").string()),
            0);
  EXPECT_EQ(run("eval --pred " + path("edges.pet").string() + " --gt " +
                path("edges.pet").string() + " --threshold 0"),
            1);
}

TEST_F(CliTest, EvalDirectoryModeAggregates) {
  const Taxonomy t = Taxonomy::cityscapes();
  fs::create_directories(path("pred"));
  fs::create_directories(path("gt"));
  for (uint64_t seed = 0; seed < 4; ++seed) {
    SynthParams params;
    params.seed = seed;
    const LabelGrid edges = panoptic_to_edges(generate_scene(params, t), 2, t);
    const std::string name = "s" + std::to_string(seed) + ".pet";
    write_tensor(path("pred") / name, to_tensor(edges));
    write_tensor(path("gt") / name, to_tensor(edges));
  }
  ASSERT_EQ(run("eval --pred " + path("pred").string() + " --gt " +
                path("gt").string()),
            0);
  EXPECT_NE(stdout_text().find("pq 1 sq 1 rq 1"), std::string::npos);
}

TEST_F(CliTest, SynthIsByteDeterministic) {
  ASSERT_EQ(run("synth --seed 42 --out-dir " + path("a").string()), 0);
  ASSERT_EQ(run("synth --seed 42 --out-dir " + path("b").string()), 0);
  for (const char* name : {"scene.pet", "edges.pet", "semantic.pet", "heatmap.pet",
                           "offsets.pet"}) {
    std::ifstream fa(path("a") / name, std::ios::binary);
    std::ifstream fb(path("b") / name, std::ios::binary);
    ASSERT_TRUE(fa && fb) << name;
    const std::string ba((std::istreambuf_iterator<char>(fa)),
                         std::istreambuf_iterator<char>());
    const std::string bb((std::istreambuf_iterator<char>(fb)),
                         std::istreambuf_iterator<char>());
    ASSERT_EQ(ba, bb) << name;
  }
}

TEST_F(CliTest, GradcheckPassesAndRejectsZeroTolerance) {
  EXPECT_EQ(run("gradcheck --trials 20 --tolerance 1e-4"), 0);
  EXPECT_EQ(run("gradcheck --trials 5 --tolerance 0"), 1);
}

TEST_F(CliTest, TaxonomyFileDrivesTheRun) {
  const Taxonomy custom(3, {3}, {1, 2}, 100);
  custom.save(path("tax.json"));
  LabelGrid seg(8, 8, 1 * 100);
  for (int y = 2; y <= 5; ++y) {
    for (int x = 2; x <= 5; ++x) seg.at(y, x) = 3 * 100 + 1;
  }
  write_tensor(path("seg.pet"), to_tensor(seg));
  ASSERT_EQ(run("gt-gen --input " + path("seg.pet").string() +
                " --radius 1 --out " + path("edges.pet").string() +
                " --taxonomy " + path("tax.json").string()),
            0);
  const LabelGrid edges = label_grid_from(read_tensor(path("edges.pet")));
  EXPECT_TRUE(validate_map(edges, custom).ok());
  int square_edge = 0;
  for (size_t i = 0; i < edges.size(); ++i) {
    if (edges[i] == 301u) ++square_edge;
  }
  EXPECT_EQ(square_edge, 12);
}

}  // namespace
}  // namespace pet
