// Command-line front end: synthesize labeled scenes, detect enveloping-grasp
// affordances in PCD clouds, evaluate detections against ground truth, and
// benchmark the detector variants.
//
// Exit codes: 0 success, 2 unreadable or invalid input data, 3 bad
// configuration (flags, scene specs, truth/detections documents).

#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ega/ega.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitConfig = 3;

struct DetectorFlags {
  double capture_radius = 0.026;
  double finger_thickness = 0.008;
  int samples = 4000;
  std::string variant = "taubin";
  int knn = 0;          // 0 = radius mode
  double radius = 0.0;  // 0 = capture radius
  bool no_occlusion = false;
  int occluder_threshold = 20;
  std::uint64_t seed = 0;
  int threads = 0;
  double radius_step = 0.001;
  int max_gap_points = -1;

  void attach(CLI::App* cmd) {
    cmd->add_option("--capture-radius", capture_radius, "capture radius in meters")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--finger-thickness", finger_thickness,
                    "required shell gap in meters")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--samples", samples, "neighborhoods sampled per run")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--variant", variant, "taubin|pca|normals")
        ->check(CLI::IsMember({"taubin", "pca", "normals"}));
    cmd->add_option("--knn", knn, "use k-nearest neighborhoods of this size");
    cmd->add_option("--radius", radius,
                    "neighborhood radius in meters (default: capture radius)");
    cmd->add_flag("--no-occlusion-filter", no_occlusion, "disable the occlusion filter");
    cmd->add_option("--occluder-threshold", occluder_threshold,
                    "closer-pixel count that marks a neighborhood occluded");
    cmd->add_option("--seed", seed, "run seed");
    cmd->add_option("--threads", threads, "worker threads (0 = hardware)");
    cmd->add_option("--radius-step", radius_step, "shell search radius step (m)");
    cmd->add_option("--max-gap-points", max_gap_points,
                    "points tolerated inside the shell (-1: auto)");
  }

  ega::DetectorConfig config() const {
    ega::DetectorConfig cfg;
    cfg.hand.capture_radius = capture_radius;
    cfg.hand.finger_thickness = finger_thickness;
    cfg.n_samples = samples;
    cfg.variant = ega::variant_from_name(variant);
    if (knn > 0) {
      cfg.use_knn = true;
      cfg.knn_k = knn;
    }
    cfg.occlusion_filtering = !no_occlusion;
    cfg.occluder_threshold = occluder_threshold;
    cfg.seed = seed;
    cfg.threads = threads;
    cfg.shell.radius_step = radius_step;
    cfg.shell.max_gap_points = max_gap_points;
    return cfg;
  }
};

std::string timestamp_utc() {
  char buf[32];
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

int run_synth(const std::string& scene_path, std::uint64_t seed,
              const std::string& out_pcd, const std::string& out_truth, int threads) {
  ega::SceneSpec spec;
  try {
    spec = ega::parse_scene_file(scene_path);
  } catch (const ega::ParseError& e) {
    std::cerr << "ega synth: " << e.what() << "\n";
    return kExitConfig;
  }
  try {
    const ega::PointCloud cloud = ega::render_range_image(spec, seed, threads);
    ega::save_pcd(out_pcd, cloud);
    if (!out_truth.empty()) {
      const auto truth =
          ega::truth_in_camera_frame(ega::label_scene(spec), spec.camera);
      ega::write_json_file(out_truth, ega::truth_to_json(truth, spec.labeling));
    }
    std::cerr << "ega synth: " << cloud.size() << " points -> " << out_pcd << "\n";
  } catch (const ega::Error& e) {
    std::cerr << "ega synth: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitOk;
}

int run_detect(const std::string& input, const std::string& output,
               const DetectorFlags& flags, const std::string& ply_out) {
  ega::PointCloud cloud;
  try {
    cloud = ega::load_pcd(input);
    if (cloud.points.empty()) throw ega::EmptyCloud(input + ": cloud has no valid points");
  } catch (const ega::Error& e) {
    std::cerr << "ega detect: " << e.what() << "\n";
    return kExitInput;
  }

  const ega::DetectorConfig cfg = flags.config();
  const auto t0 = std::chrono::steady_clock::now();
  ega::RunStats stats;
  std::vector<ega::Detection> dets;
  try {
    dets = ega::detect_affordances(cloud, cfg, &stats);
  } catch (const ega::Error& e) {
    std::cerr << "ega detect: " << e.what() << "\n";
    return kExitInput;
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  nlohmann::json timing;
  timing["seconds"] = seconds;
  timing["timestamp"] = timestamp_utc();
  timing["stats"] = {{"sampled", stats.sampled},
                     {"too_small", stats.too_small},
                     {"occlusion_rejected", stats.occlusion_rejected},
                     {"fit_failed", stats.fit_failed},
                     {"gate_rejected", stats.gate_rejected},
                     {"shell_searches", stats.shell_searches}};
  try {
    ega::write_json_file(output, ega::detections_to_json(cfg, dets, timing));
    if (!ply_out.empty()) ega::write_detections_ply(ply_out, cloud, dets);
  } catch (const ega::Error& e) {
    std::cerr << "ega detect: " << e.what() << "\n";
    return kExitInput;
  }
  std::cerr << "ega detect: " << dets.size() << " detections in " << seconds
            << " s -> " << output << "\n";
  return kExitOk;
}

int run_eval(const std::string& detections_path, const std::string& truth_path,
             const std::string& input, int runs, const DetectorFlags& flags,
             const ega::MatchTolerance& tol, const std::string& report_path,
             const std::string& csv_path, const std::string& scene_name) {
  std::vector<ega::TruthAffordance> truth;
  try {
    truth = ega::load_truth(truth_path);
  } catch (const ega::Error& e) {
    std::cerr << "ega eval: " << e.what() << "\n";
    return kExitConfig;
  }

  ega::EvalReport report;
  report.scene = scene_name;

  if (runs > 0) {
    ega::PointCloud cloud;
    try {
      cloud = ega::load_pcd(input);
      if (cloud.points.empty()) throw ega::EmptyCloud(input + ": cloud has no valid points");
    } catch (const ega::Error& e) {
      std::cerr << "ega eval: " << e.what() << "\n";
      return kExitInput;
    }
    const ega::KdTree index(cloud.points);
    report = ega::evaluate_runs(cloud, index, truth, flags.config(), runs, tol, scene_name);
  } else {
    ega::DetectionDocument doc;
    try {
      doc = ega::load_detections(detections_path);
    } catch (const ega::Error& e) {
      std::cerr << "ega eval: " << e.what() << "\n";
      return kExitConfig;
    }
    report.variant = doc.detections.empty() ? ega::Variant::Taubin
                                            : doc.detections.front().variant;
    report.per_run.push_back(ega::match_detections(doc.detections, truth, tol));
    report.precision = ega::summarize({report.per_run[0].precision});
    report.recall = ega::summarize({report.per_run[0].recall});
  }

  const nlohmann::json j = ega::eval_report_to_json(report);
  if (report_path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    ega::write_json_file(report_path, j);
  }
  if (!csv_path.empty()) {
    std::ofstream csv(csv_path);
    csv << ega::eval_report_csv_header() << "\n";
    ega::append_eval_report_csv(csv, report);
  }
  std::cerr << "ega eval: precision " << report.precision.mean << " recall "
            << report.recall.mean << " over " << report.per_run.size() << " run(s)\n";
  return kExitOk;
}

int run_bench(const std::string& input, const DetectorFlags& flags,
              const std::vector<std::string>& variant_names,
              const std::vector<int>& samples_grid, int runs,
              const std::string& csv_path) {
  ega::PointCloud cloud;
  try {
    cloud = ega::load_pcd(input);
    if (cloud.points.empty()) throw ega::EmptyCloud(input + ": cloud has no valid points");
  } catch (const ega::Error& e) {
    std::cerr << "ega bench: " << e.what() << "\n";
    return kExitInput;
  }
  std::vector<ega::Variant> variants;
  for (const std::string& name : variant_names) {
    variants.push_back(ega::variant_from_name(name));
  }
  const ega::KdTree index(cloud.points);
  const ega::BenchmarkReport rep =
      ega::run_benchmark(cloud, index, flags.config(), variants, samples_grid, runs);

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!csv_path.empty()) {
    file.open(csv_path);
    out = &file;
  }
  *out << ega::bench_csv_header() << "\n";
  ega::append_bench_csv(*out, rep);
  for (const auto& [variant, mean] : rep.variant_means) {
    std::cerr << "ega bench: " << ega::variant_name(variant) << " mean "
              << mean.mean << " s +/- " << mean.ci_half << "\n";
  }
  std::cerr << "ega bench: ordering holds: " << (rep.ordering_holds ? "yes" : "no")
            << ", linear fit R^2 " << rep.taubin_r2 << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Enveloping grasp affordance detection in 3-D point clouds"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "render a labeled synthetic scene to PCD");
  std::string scene_path, synth_pcd = "cloud.pcd", synth_truth;
  std::uint64_t synth_seed = 0;
  int synth_threads = 0;
  synth->add_option("--scene", scene_path, "scene description file")->required();
  synth->add_option("--out", synth_pcd, "output PCD path");
  synth->add_option("--truth", synth_truth, "ground-truth JSON path");
  synth->add_option("--seed", synth_seed, "render seed");
  synth->add_option("--threads", synth_threads, "render threads");

  // detect
  auto* detect = app.add_subcommand("detect", "find grasp affordances in a PCD cloud");
  std::string det_in, det_out = "detections.json", det_ply;
  DetectorFlags det_flags;
  detect->add_option("--input", det_in, "input PCD")->required();
  detect->add_option("--output", det_out, "output detections JSON");
  detect->add_option("--ply-out", det_ply, "colored PLY visualization path");
  det_flags.attach(detect);

  // eval
  auto* eval = app.add_subcommand("eval", "score detections against ground truth");
  std::string eval_dets, eval_truth, eval_in, eval_report, eval_csv, eval_scene;
  int eval_runs = 0;
  DetectorFlags eval_flags;
  ega::MatchTolerance tol;
  eval->add_option("--detections", eval_dets, "detections JSON (single-shot mode)");
  eval->add_option("--truth", eval_truth, "ground-truth JSON")->required();
  eval->add_option("--input", eval_in, "input PCD (required with --runs)");
  eval->add_option("--runs", eval_runs, "re-run detection this many times");
  eval->add_option("--report", eval_report, "output report JSON (default stdout)");
  eval->add_option("--csv", eval_csv, "output CSV rows");
  eval->add_option("--scene-name", eval_scene, "scene label for the report");
  eval->add_option("--tol-position", tol.position, "match position tolerance (m)");
  eval->add_option("--tol-angle", tol.angle_deg, "match angle tolerance (deg)");
  eval->add_option("--tol-radius", tol.radius, "match radius tolerance (m)");
  eval_flags.attach(eval);

  // bench
  auto* bench = app.add_subcommand("bench", "time the detector variants");
  std::string bench_in, bench_csv;
  std::vector<std::string> bench_variants = {"taubin", "pca", "normals"};
  std::vector<int> bench_samples = {1000, 2000, 4000};
  int bench_runs = 10;
  DetectorFlags bench_flags;
  bench->add_option("--input", bench_in, "input PCD")->required();
  bench->add_option("--variants", bench_variants, "variants to time")->delimiter(',');
  bench->add_option("--samples", bench_samples, "sample-count grid")->delimiter(',');
  bench->add_option("--runs", bench_runs, "repetitions per cell");
  bench->add_option("--csv", bench_csv, "output CSV path (default stdout)");
  bench_flags.attach(bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (synth->parsed()) {
      return run_synth(scene_path, synth_seed, synth_pcd, synth_truth, synth_threads);
    }
    if (detect->parsed()) {
      return run_detect(det_in, det_out, det_flags, det_ply);
    }
    if (eval->parsed()) {
      if (eval_runs > 0 && eval_in.empty()) {
        std::cerr << "ega eval: --runs requires --input\n";
        return kExitConfig;
      }
      if (eval_runs <= 0 && eval_dets.empty()) {
        std::cerr << "ega eval: need --detections or --runs with --input\n";
        return kExitConfig;
      }
      return run_eval(eval_dets, eval_truth, eval_in, eval_runs, eval_flags, tol,
                      eval_report, eval_csv, eval_scene);
    }
    if (bench->parsed()) {
      if (bench_variants.empty() || bench_samples.empty() || bench_runs <= 0) {
        std::cerr << "ega bench: empty variant/sample grid\n";
        return kExitConfig;
      }
      return run_bench(bench_in, bench_flags, bench_variants, bench_samples,
                       bench_runs, bench_csv);
    }
  } catch (const ega::ParseError& e) {
    std::cerr << "ega: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ega::Error& e) {
    std::cerr << "ega: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitOk;
}
