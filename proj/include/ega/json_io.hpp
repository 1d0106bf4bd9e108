#pragma once

// JSON serialization of detections, ground truth and evaluation reports.
// Detection documents keep all deterministic content under "params" and
// "detections"; wall-clock data lives in the separate "timing" object so two
// runs with the same seed compare byte-identical after dropping it.

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ega/eval.hpp"
#include "ega/pipeline.hpp"
#include "ega/scene.hpp"

namespace ega {

using nlohmann::json;

inline json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline Vec3 vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ParseError("expected a 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

inline json detection_to_json(const Detection& d) {
  json j;
  j["centroid"] = to_json(d.shell.centroid);
  j["axis"] = to_json(d.shell.axis);
  j["inner_radius"] = d.shell.inner_radius;
  j["thickness"] = d.shell.thickness;
  j["extent"] = d.shell.extent;
  j["support"] = d.shell.support;
  j["variant"] = variant_name(d.variant);
  j["seed_index"] = d.seed_index;
  j["sample_ordinal"] = d.sample_ordinal;
  j["gap_allowance"] = d.gap_allowance;
  if (d.curvature) {
    j["median_kappa_max"] = d.curvature->median_kappa_max;
  }
  return j;
}

inline Variant variant_from_name(const std::string& s) {
  if (s == "taubin") return Variant::Taubin;
  if (s == "pca") return Variant::PCA;
  if (s == "normals") return Variant::Normals;
  throw ParseError("unknown variant '" + s + "'");
}

inline Detection detection_from_json(const json& j) {
  Detection d;
  d.shell.centroid = vec3_from_json(j.at("centroid"));
  d.shell.axis = vec3_from_json(j.at("axis"));
  d.shell.inner_radius = j.at("inner_radius").get<double>();
  d.shell.thickness = j.at("thickness").get<double>();
  d.shell.extent = j.at("extent").get<double>();
  d.shell.support = j.at("support").get<int>();
  d.variant = variant_from_name(j.at("variant").get<std::string>());
  d.seed_index = j.at("seed_index").get<int>();
  d.sample_ordinal = j.at("sample_ordinal").get<int>();
  d.gap_allowance = j.at("gap_allowance").get<int>();
  if (j.contains("median_kappa_max")) {
    CurvatureEstimate est;
    est.median_kappa_max = j["median_kappa_max"].get<double>();
    d.curvature = est;
  }
  return d;
}

inline json config_to_json(const DetectorConfig& cfg) {
  json j;
  j["n_samples"] = cfg.n_samples;
  j["capture_radius"] = cfg.hand.capture_radius;
  j["finger_thickness"] = cfg.hand.finger_thickness;
  j["variant"] = variant_name(cfg.variant);
  j["neighborhood"] = cfg.use_knn ? json{{"knn", cfg.knn_k}}
                                  : json{{"radius", cfg.hand.capture_radius}};
  j["occlusion_filtering"] = cfg.occlusion_filtering;
  j["occluder_threshold"] = cfg.occluder_threshold;
  j["radius_step"] = cfg.shell.radius_step;
  j["max_gap_points"] = cfg.shell.max_gap_points;
  j["seed"] = cfg.seed;
  j["curvature_samples"] = cfg.curvature_samples;
  j["min_neighborhood"] = cfg.min_neighborhood;
  j["normals_radius"] = cfg.normals_radius;
  return j;
}

struct DetectionDocument {
  json params;
  std::vector<Detection> detections;
  json timing;  // volatile; excluded from determinism comparisons
};

inline json detections_to_json(const DetectorConfig& cfg,
                               const std::vector<Detection>& dets,
                               const json& timing) {
  json j;
  j["params"] = config_to_json(cfg);
  j["detections"] = json::array();
  for (const Detection& d : dets) j["detections"].push_back(detection_to_json(d));
  j["timing"] = timing;
  return j;
}

inline DetectionDocument load_detections(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  DetectionDocument doc;
  try {
    doc.params = j.at("params");
    for (const json& dj : j.at("detections")) {
      doc.detections.push_back(detection_from_json(dj));
    }
    doc.timing = j.value("timing", json::object());
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return doc;
}

inline json truth_to_json(const std::vector<TruthAffordance>& truth,
                          const LabelingParams& lp) {
  json j;
  j["labeling"] = {{"capture_radius", lp.capture_radius},
                   {"clearance", lp.clearance},
                   {"min_length", lp.min_length}};
  j["affordances"] = json::array();
  for (const TruthAffordance& aff : truth) {
    json a;
    a["id"] = aff.id;
    a["radius"] = aff.radius;
    a["graspable"] = aff.graspable;
    a["segments"] = json::array();
    for (const TruthSegment& s : aff.segments) {
      a["segments"].push_back({{"p0", to_json(s.p0)}, {"p1", to_json(s.p1)}});
    }
    j["affordances"].push_back(std::move(a));
  }
  return j;
}

inline std::vector<TruthAffordance> truth_from_json(const json& j) {
  std::vector<TruthAffordance> out;
  for (const json& a : j.at("affordances")) {
    TruthAffordance aff;
    aff.id = a.at("id").get<std::string>();
    aff.radius = a.at("radius").get<double>();
    aff.graspable = a.at("graspable").get<bool>();
    for (const json& s : a.at("segments")) {
      aff.segments.push_back({vec3_from_json(s.at("p0")), vec3_from_json(s.at("p1"))});
    }
    out.push_back(std::move(aff));
  }
  return out;
}

inline std::vector<TruthAffordance> load_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  json j;
  try {
    in >> j;
    return truth_from_json(j);
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline json match_report_to_json(const MatchReport& rep) {
  json j;
  j["precision"] = rep.precision;
  j["recall"] = rep.recall;
  j["precision_vacuous"] = rep.precision_vacuous;
  j["recall_vacuous"] = rep.recall_vacuous;
  j["detections"] = rep.detections;
  j["matched"] = rep.matched;
  j["per_affordance_hits"] = json::object();
  for (size_t i = 0; i < rep.affordance_ids.size(); ++i) {
    j["per_affordance_hits"][rep.affordance_ids[i]] = rep.per_affordance_hits[i];
  }
  j["false_positive_ordinals"] = rep.false_positive_ordinals;
  return j;
}

inline json eval_report_to_json(const EvalReport& rep) {
  json j;
  j["scene"] = rep.scene;
  j["variant"] = variant_name(rep.variant);
  j["runs"] = static_cast<int>(rep.per_run.size());
  j["precision"] = {{"mean", rep.precision.mean}, {"ci95_half", rep.precision.ci_half}};
  j["recall"] = {{"mean", rep.recall.mean}, {"ci95_half", rep.recall.ci_half}};
  j["per_run"] = json::array();
  for (const MatchReport& r : rep.per_run) j["per_run"].push_back(match_report_to_json(r));
  j["run_seconds"] = rep.run_seconds;
  return j;
}

// CSV rows suitable for external plotting.
inline std::string eval_report_csv_header() {
  return "scene,variant,run,precision,recall,detections,matched,seconds";
}

inline void append_eval_report_csv(std::ostream& out, const EvalReport& rep) {
  for (size_t r = 0; r < rep.per_run.size(); ++r) {
    out << rep.scene << "," << variant_name(rep.variant) << "," << r << ","
        << rep.per_run[r].precision << "," << rep.per_run[r].recall << ","
        << rep.per_run[r].detections << "," << rep.per_run[r].matched << ","
        << (r < rep.run_seconds.size() ? rep.run_seconds[r] : 0.0) << "\n";
  }
}

inline std::string bench_csv_header() { return "variant,n_samples,run,seconds"; }

inline void append_bench_csv(std::ostream& out, const BenchmarkReport& rep) {
  for (const BenchRow& row : rep.rows) {
    out << variant_name(row.variant) << "," << row.n_samples << "," << row.run << ","
        << row.seconds << "\n";
  }
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open file for writing");
  out << j.dump(2) << "\n";
}

}  // namespace ega
