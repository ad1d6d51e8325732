// Command-line front end: chains scene synthesis, edge ground-truth
// generation, training-target generation, center/offset fusion and panoptic
// quality evaluation through bit-exact tensor files.
//
// Exit codes: 0 success, 1 usage or input error, 2 validation failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pet/attention.hpp"
#include "pet/edgegen.hpp"
#include "pet/errors.hpp"
#include "pet/fusion.hpp"
#include "pet/losses.hpp"
#include "pet/metrics.hpp"
#include "pet/rng.hpp"
#include "pet/synth.hpp"
#include "pet/taxonomy.hpp"
#include "pet/tensor_io.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;

pet::Taxonomy load_taxonomy(const std::string& path) {
  return path.empty() ? pet::Taxonomy::cityscapes() : pet::Taxonomy::load(path);
}

// Checks a segmentation map: every pixel assigned and decodable, stuff
// segments with instance ID 0. Prints the first offending pixel.
bool report_seg_problems(const pet::LabelGrid& seg, const pet::Taxonomy& taxonomy) {
  for (int y = 0; y < seg.height(); ++y) {
    for (int x = 0; x < seg.width(); ++x) {
      const pet::Label v = seg.at(y, x);
      std::string what;
      if (v == pet::kNonEdge) {
        what = "unassigned pixel (label 0)";
      } else {
        try {
          const pet::DecodedLabel d = pet::decode_label(v, taxonomy);
          if (taxonomy.is_stuff(d.category) && d.instance_id != 0) {
            what = "stuff label with nonzero instance ID";
          }
        } catch (const pet::MalformedLabel& e) {
          what = e.what();
        }
      }
      if (!what.empty()) {
        std::cerr << "invalid segmentation at pixel (" << y << ", " << x
                  << "): " << what << "\n";
        return true;
      }
    }
  }
  return false;
}

bool report_map_problems(const pet::LabelGrid& map, const pet::Taxonomy& taxonomy) {
  const pet::ValidationReport report = pet::validate_map(map, taxonomy);
  for (const pet::Violation& v : report.violations) {
    std::cerr << "invalid map at pixel (" << v.y << ", " << v.x << "): " << v.what
              << "\n";
  }
  return !report.ok();
}

pet::CategoryGrid semantic_from_tensor(const pet::Tensor& tensor, double temperature) {
  if (tensor.dims.size() == 2) {
    return pet::category_grid_from(tensor);
  }
  // logits volume: softmax with temperature, then per-pixel argmax
  const pet::Volume probs =
      pet::ada_softmax(pet::volume_from(tensor), temperature);
  pet::CategoryGrid semantic(probs.height(), probs.width(), 0);
  for (int y = 0; y < probs.height(); ++y) {
    for (int x = 0; x < probs.width(); ++x) {
      int best = 0;
      double best_p = probs.at(0, y, x);
      for (int c = 1; c < probs.channels(); ++c) {
        if (probs.at(c, y, x) > best_p) {
          best_p = probs.at(c, y, x);
          best = c;
        }
      }
      semantic.at(y, x) = best;
    }
  }
  return semantic;
}

struct GtGenOpts {
  std::string input, out, out_pgm, taxonomy;
  int radius = 2;
};

int cmd_gt_gen(const GtGenOpts& opt) {
  const pet::Taxonomy taxonomy = load_taxonomy(opt.taxonomy);
  const pet::LabelGrid seg = pet::label_grid_from(pet::read_tensor(opt.input));
  if (report_seg_problems(seg, taxonomy)) {
    return kExitValidation;
  }
  const pet::LabelGrid edges = pet::panoptic_to_edges(seg, opt.radius, taxonomy);
  pet::write_tensor(opt.out, pet::to_tensor(edges));
  if (!opt.out_pgm.empty()) {
    pet::write_label_pgm(opt.out_pgm, edges);
  }
  return kExitOk;
}

struct TargetsOpts {
  std::string edges, out_heatmap, out_offsets, taxonomy;
  double sigma = 8.0;
};

int cmd_targets(const TargetsOpts& opt) {
  const pet::Taxonomy taxonomy = load_taxonomy(opt.taxonomy);
  const pet::LabelGrid edges = pet::label_grid_from(pet::read_tensor(opt.edges));
  if (report_map_problems(edges, taxonomy)) {
    return kExitValidation;
  }
  const std::vector<pet::InstanceCenter> centers =
      pet::instance_centers(edges, taxonomy);
  const pet::ScalarGrid heatmap =
      pet::make_center_heatmap(centers, edges.height(), edges.width(), opt.sigma);
  const pet::OffsetField offsets = pet::make_offset_field(edges, centers, taxonomy);
  pet::write_tensor(opt.out_heatmap, pet::to_tensor(heatmap));
  pet::write_tensor(opt.out_offsets, pet::to_tensor(offsets));
  return kExitOk;
}

struct FuseOpts {
  std::string semantic, heatmap, offsets, out, out_pgm, taxonomy, visualize;
  double center_threshold = 0.1;
  int nms_window = 7;
  int max_instances = 200;
  double temperature = 1.0;
};

int cmd_fuse(const FuseOpts& opt) {
  const pet::Taxonomy taxonomy = load_taxonomy(opt.taxonomy);
  const pet::CategoryGrid semantic =
      semantic_from_tensor(pet::read_tensor(opt.semantic), opt.temperature);
  const pet::ScalarGrid heatmap =
      pet::scalar_grid_from(pet::read_tensor(opt.heatmap));
  const pet::OffsetField offsets =
      pet::offset_field_from(pet::read_tensor(opt.offsets));
  pet::FusionParams params;
  params.center_threshold = opt.center_threshold;
  params.nms_window = opt.nms_window;
  params.max_instances = opt.max_instances;
  const pet::LabelGrid fused =
      pet::fuse_panoptic(semantic, heatmap, offsets, params, taxonomy);
  if (report_map_problems(fused, taxonomy)) {
    return kExitValidation;
  }
  pet::write_tensor(opt.out, pet::to_tensor(fused));
  if (!opt.out_pgm.empty()) {
    pet::write_label_pgm(opt.out_pgm, fused);
  }
  if (!opt.visualize.empty()) {
    pet::write_label_visualization(opt.visualize, fused);
  }
  return kExitOk;
}

struct EvalOpts {
  std::string pred, gt, report, taxonomy, visualize;
  double threshold = 0.1;
  int dilation = 0;
};

int cmd_eval(const EvalOpts& opt) {
  const pet::Taxonomy taxonomy = load_taxonomy(opt.taxonomy);
  pet::PQAccumulator acc(opt.threshold, opt.dilation);

  if (fs::is_directory(opt.pred) != fs::is_directory(opt.gt)) {
    throw pet::IoFailure("--pred and --gt must both be files or both directories");
  }
  if (fs::is_directory(opt.pred)) {
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(opt.gt)) {
      if (entry.path().extension() == ".pet" &&
          fs::exists(fs::path(opt.pred) / entry.path().filename())) {
        names.push_back(entry.path().filename().string());
      }
    }
    std::sort(names.begin(), names.end());
    if (names.empty()) {
      throw pet::IoFailure("no matching .pet files between the two directories");
    }
    std::vector<std::future<pet::PQAccumulator>> futures;
    for (const std::string& name : names) {
      futures.push_back(std::async(std::launch::async, [&, name]() {
        pet::PQAccumulator local(opt.threshold, opt.dilation);
        const auto pred =
            pet::label_grid_from(pet::read_tensor(fs::path(opt.pred) / name));
        const auto gt =
            pet::label_grid_from(pet::read_tensor(fs::path(opt.gt) / name));
        local.add(pred, gt, taxonomy);
        return local;
      }));
    }
    // merge in sorted-name order so the aggregate never depends on timing
    for (auto& f : futures) {
      acc.merge(f.get());
    }
  } else {
    const pet::LabelGrid pred = pet::label_grid_from(pet::read_tensor(opt.pred));
    const pet::LabelGrid gt = pet::label_grid_from(pet::read_tensor(opt.gt));
    acc.add(pred, gt, taxonomy);
    if (!opt.visualize.empty()) {
      pet::write_label_visualization(opt.visualize + ".pred.ppm", pred);
      pet::write_label_visualization(opt.visualize + ".gt.ppm", gt);
    }
  }

  const pet::PQReport report = acc.report(taxonomy);
  if (!opt.report.empty()) {
    std::ofstream out(opt.report);
    if (!out) {
      throw pet::IoFailure("cannot write report: " + opt.report);
    }
    out << pet::serialize_report(report);
  }
  std::printf("pq %.12g sq %.12g rq %.12g\n", report.overall.pq, report.overall.sq,
              report.overall.rq);
  return kExitOk;
}

struct SynthOpts {
  std::string out_dir, taxonomy;
  int height = 64, width = 64, max_instances = 8, min_size = 12, radius = 2;
  double sigma = 4.0, min_center_distance = 0.0;
  uint64_t seed = 0;
};

int cmd_synth(const SynthOpts& opt) {
  const pet::Taxonomy taxonomy = load_taxonomy(opt.taxonomy);
  pet::SynthParams params;
  params.height = opt.height;
  params.width = opt.width;
  params.max_instances = opt.max_instances;
  params.min_instance_size = opt.min_size;
  params.edge_radius = opt.radius;
  params.min_center_distance = opt.min_center_distance;
  params.seed = opt.seed;
  const pet::LabelGrid scene = pet::generate_scene(params, taxonomy);
  const pet::LabelGrid edges = pet::panoptic_to_edges(scene, opt.radius, taxonomy);
  const pet::CategoryGrid semantic = pet::to_semantic(edges, taxonomy);
  const std::vector<pet::InstanceCenter> centers =
      pet::instance_centers(edges, taxonomy);
  const pet::ScalarGrid heatmap =
      pet::make_center_heatmap(centers, opt.height, opt.width, opt.sigma);
  const pet::OffsetField offsets = pet::make_offset_field(edges, centers, taxonomy);

  fs::create_directories(opt.out_dir);
  const fs::path dir(opt.out_dir);
  pet::write_tensor(dir / "scene.pet", pet::to_tensor(scene));
  pet::write_tensor(dir / "edges.pet", pet::to_tensor(edges));
  pet::write_tensor(dir / "semantic.pet", pet::to_tensor(semantic));
  pet::write_tensor(dir / "heatmap.pet", pet::to_tensor(heatmap));
  pet::write_tensor(dir / "offsets.pet", pet::to_tensor(offsets));
  return kExitOk;
}

struct GradcheckOpts {
  int trials = 100;
  double tolerance = 1e-4;
  uint64_t seed = 7;
};

double rel_error(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

int cmd_gradcheck(const GradcheckOpts& opt) {
  if (!(opt.tolerance > 0.0)) {
    throw pet::NonPositiveEps("tolerance must be > 0");
  }
  if (opt.trials < 1) {
    throw pet::NonPositiveEps("trials must be >= 1");
  }
  pet::Rng rng(opt.seed);
  const double eps = 1e-6;
  double worst_semantic = 0.0, worst_temperature = 0.0, worst_center = 0.0,
         worst_offset = 0.0;

  for (int trial = 0; trial < opt.trials; ++trial) {
    const int kc = 2 + int(rng.below(3));  // channels, K+1
    const int h = 2 + int(rng.below(4));
    const int w = 2 + int(rng.below(4));
    const double temperature = 0.5 + 1.5 * rng.unit();

    pet::Volume logits(kc, h, w);
    for (size_t i = 0; i < logits.size(); ++i) {
      logits[i] = 2.0 * rng.normal();
    }
    pet::CategoryGrid gt(h, w, 0);
    for (size_t i = 0; i < gt.size(); ++i) {
      gt[i] = int(rng.below(uint64_t(kc)));
    }

    const pet::SemanticLossResult res =
        pet::semantic_edge_loss(logits, gt, temperature);
    const auto loss_at = [&](std::span<const double> x) {
      pet::Volume probe = logits;
      std::copy(x.begin(), x.end(), probe.data().begin());
      return pet::semantic_edge_loss(probe, gt, temperature).loss;
    };
    const std::vector<double> fd =
        pet::finite_diff_gradient(loss_at, logits.data(), eps);
    for (size_t i = 0; i < fd.size(); ++i) {
      worst_semantic = std::max(worst_semantic, rel_error(res.grad_logits[i], fd[i]));
    }

    const auto loss_at_t = [&](std::span<const double> x) {
      return pet::semantic_edge_loss(logits, gt, x[0]).loss;
    };
    const std::vector<double> t_vec{temperature};
    const std::vector<double> fd_t = pet::finite_diff_gradient(loss_at_t, t_vec, eps);
    worst_temperature =
        std::max(worst_temperature, rel_error(res.grad_temperature, fd_t[0]));

    pet::ScalarGrid pred_heat(h, w), gt_heat(h, w);
    for (size_t i = 0; i < pred_heat.size(); ++i) {
      pred_heat[i] = rng.unit();
      gt_heat[i] = rng.unit();
    }
    const pet::CenterLossResult cres = pet::center_loss(pred_heat, gt_heat);
    const auto closs_at = [&](std::span<const double> x) {
      pet::ScalarGrid probe = pred_heat;
      std::copy(x.begin(), x.end(), probe.data().begin());
      return pet::center_loss(probe, gt_heat).loss;
    };
    const std::vector<double> fd_c =
        pet::finite_diff_gradient(closs_at, pred_heat.data(), eps);
    for (size_t i = 0; i < fd_c.size(); ++i) {
      worst_center = std::max(worst_center, rel_error(cres.grad[i], fd_c[i]));
    }

    pet::OffsetField pred_off(h, w), gt_off(h, w);
    pet::ScalarGrid mask(h, w, 0.0);
    for (size_t i = 0; i < mask.size(); ++i) {
      pred_off.dy[i] = 4.0 * rng.normal();
      pred_off.dx[i] = 4.0 * rng.normal();
      gt_off.dy[i] = 4.0 * rng.normal();
      gt_off.dx[i] = 4.0 * rng.normal();
      mask[i] = rng.below(2) ? 1.0 : 0.0;
    }
    const pet::OffsetLossResult ores = pet::offset_loss(pred_off, gt_off, mask);
    // flat layout: dy plane then dx plane
    std::vector<double> flat(pred_off.dy.data());
    flat.insert(flat.end(), pred_off.dx.data().begin(), pred_off.dx.data().end());
    const size_t plane = pred_off.dy.size();
    const auto oloss_at = [&](std::span<const double> x) {
      pet::OffsetField probe = pred_off;
      std::copy(x.begin(), x.begin() + plane, probe.dy.data().begin());
      std::copy(x.begin() + plane, x.end(), probe.dx.data().begin());
      return pet::offset_loss(probe, gt_off, mask).loss;
    };
    const std::vector<double> fd_o = pet::finite_diff_gradient(oloss_at, flat, eps);
    for (size_t i = 0; i < fd_o.size(); ++i) {
      const double diff = i < plane ? pred_off.dy[i] - gt_off.dy[i]
                                    : pred_off.dx[i - plane] - gt_off.dx[i - plane];
      if (std::abs(diff) <= 1e-3) continue;  // skip the subgradient kink
      const double analytic = i < plane ? ores.grad.dy[i] : ores.grad.dx[i - plane];
      worst_offset = std::max(worst_offset, rel_error(analytic, fd_o[i]));
    }
  }

  const bool ok = worst_semantic <= opt.tolerance &&
                  worst_temperature <= opt.tolerance &&
                  worst_center <= opt.tolerance && worst_offset <= opt.tolerance;
  std::printf("semantic-loss grad: max rel err %.3e\n", worst_semantic);
  std::printf("temperature grad:   max rel err %.3e\n", worst_temperature);
  std::printf("center-loss grad:   max rel err %.3e\n", worst_center);
  std::printf("offset-loss grad:   max rel err %.3e\n", worst_offset);
  std::printf("%s (tolerance %.3e, %d trials)\n", ok ? "PASS" : "FAIL",
              opt.tolerance, opt.trials);
  return ok ? kExitOk : kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"panoptic edge toolkit"};
  app.require_subcommand(1);

  GtGenOpts gt_gen;
  CLI::App* gt_gen_cmd =
      app.add_subcommand("gt-gen", "convert a segmentation map to edge labels");
  gt_gen_cmd->add_option("--input", gt_gen.input, "segmentation tensor")->required();
  gt_gen_cmd->add_option("--radius", gt_gen.radius, "edge half-width in pixels")
      ->check(CLI::PositiveNumber);
  gt_gen_cmd->add_option("--out", gt_gen.out, "edge tensor to write")->required();
  gt_gen_cmd->add_option("--out-pgm", gt_gen.out_pgm, "16-bit graymap to write");
  gt_gen_cmd->add_option("--taxonomy", gt_gen.taxonomy, "taxonomy JSON file");

  TargetsOpts targets;
  CLI::App* targets_cmd =
      app.add_subcommand("targets", "emit center heatmap and offset targets");
  targets_cmd->add_option("--edges", targets.edges, "edge tensor")->required();
  targets_cmd->add_option("--sigma", targets.sigma, "heatmap Gaussian sigma");
  targets_cmd->add_option("--out-heatmap", targets.out_heatmap, "heatmap tensor")
      ->required();
  targets_cmd->add_option("--out-offsets", targets.out_offsets, "offset tensor")
      ->required();
  targets_cmd->add_option("--taxonomy", targets.taxonomy, "taxonomy JSON file");

  FuseOpts fuse;
  CLI::App* fuse_cmd =
      app.add_subcommand("fuse", "fuse semantic, center and offset predictions");
  fuse_cmd->add_option("--semantic", fuse.semantic,
                       "category map (2-D) or logits volume (3-D)")
      ->required();
  fuse_cmd->add_option("--heatmap", fuse.heatmap, "center heatmap tensor")->required();
  fuse_cmd->add_option("--offsets", fuse.offsets, "offset tensor")->required();
  fuse_cmd->add_option("--out", fuse.out, "fused panoptic edge tensor")->required();
  fuse_cmd->add_option("--out-pgm", fuse.out_pgm, "16-bit graymap to write");
  fuse_cmd->add_option("--center-threshold", fuse.center_threshold,
                       "minimum peak value");
  fuse_cmd->add_option("--nms-window", fuse.nms_window, "suppression window (odd)");
  fuse_cmd->add_option("--max-instances", fuse.max_instances, "center cap");
  fuse_cmd->add_option("--temperature", fuse.temperature,
                       "softmax temperature for logits input");
  fuse_cmd->add_option("--taxonomy", fuse.taxonomy, "taxonomy JSON file");
  fuse_cmd->add_option("--visualize", fuse.visualize, "color raster to write (PPM)");

  EvalOpts eval;
  CLI::App* eval_cmd =
      app.add_subcommand("eval", "panoptic quality of predicted edges");
  eval_cmd->add_option("--pred", eval.pred, "prediction tensor or directory")
      ->required();
  eval_cmd->add_option("--gt", eval.gt, "ground-truth tensor or directory")
      ->required();
  eval_cmd->add_option("--threshold", eval.threshold, "IoU matching threshold");
  eval_cmd->add_option("--dilation", eval.dilation,
                       "Chebyshev tolerance applied to both sides before IoU");
  eval_cmd->add_option("--report", eval.report, "JSON report to write");
  eval_cmd->add_option("--taxonomy", eval.taxonomy, "taxonomy JSON file");
  eval_cmd->add_option("--visualize", eval.visualize,
                       "prefix for pred/gt color rasters (single-pair mode)");

  SynthOpts synth;
  CLI::App* synth_cmd =
      app.add_subcommand("synth", "generate a synthetic scene with targets");
  synth_cmd->add_option("--height", synth.height, "canvas height");
  synth_cmd->add_option("--width", synth.width, "canvas width");
  synth_cmd->add_option("--max-instances", synth.max_instances, "instance cap");
  synth_cmd->add_option("--min-size", synth.min_size, "minimum visible pixels");
  synth_cmd->add_option("--radius", synth.radius, "edge half-width");
  synth_cmd->add_option("--sigma", synth.sigma, "heatmap sigma");
  synth_cmd->add_option("--min-center-distance", synth.min_center_distance,
                        "minimum distance between instance centers");
  synth_cmd->add_option("--seed", synth.seed, "random seed");
  synth_cmd->add_option("--out-dir", synth.out_dir, "output directory")->required();
  synth_cmd->add_option("--taxonomy", synth.taxonomy, "taxonomy JSON file");

  GradcheckOpts gradcheck;
  CLI::App* gradcheck_cmd = app.add_subcommand(
      "gradcheck", "verify analytic loss gradients against finite differences");
  gradcheck_cmd->add_option("--trials", gradcheck.trials, "random instances per loss");
  gradcheck_cmd->add_option("--tolerance", gradcheck.tolerance,
                            "maximum relative error");
  gradcheck_cmd->add_option("--seed", gradcheck.seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gt_gen_cmd) return cmd_gt_gen(gt_gen);
    if (*targets_cmd) return cmd_targets(targets);
    if (*fuse_cmd) return cmd_fuse(fuse);
    if (*eval_cmd) return cmd_eval(eval);
    if (*synth_cmd) return cmd_synth(synth);
    if (*gradcheck_cmd) return cmd_gradcheck(gradcheck);
  } catch (const pet::MalformedLabel& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const pet::TaxonomyMismatch& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const pet::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
