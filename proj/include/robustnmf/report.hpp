#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "robustnmf/corruption.hpp"
#include "robustnmf/errors.hpp"
#include "robustnmf/target_polish.hpp"
#include "robustnmf/weights.hpp"

namespace robustnmf {

enum class Method { kPlainNmf, kWeightedNmf, kTargetPolish };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::kPlainNmf: return "plain-nmf";
    case Method::kWeightedNmf: return "weighted-nmf";
    case Method::kTargetPolish: return "target-polish";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  if (s == "plain-nmf") return Method::kPlainNmf;
  if (s == "weighted-nmf") return Method::kWeightedNmf;
  if (s == "target-polish") return Method::kTargetPolish;
  throw std::invalid_argument("unknown method: " + s);
}

struct RepeatResult {
  std::uint64_t seed = 0;
  double rre = 0.0;
  double acc = 0.0;
  double nmi = 0.0;
  double time_sec = 0.0;
  std::string trajectory_file;  // empty when trajectories were not emitted
};

struct MetricAggregate {
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation over repeats
};

struct ReportAggregate {
  MetricAggregate rre, acc, nmi, time_sec;
};

// Knobs echoed into every report so a run is reproducible from its JSON.
struct ExperimentConfig {
  std::size_t rank = 0;
  std::size_t repeats = 0;
  std::size_t n_iter_max = 200;
  double tol = 1e-6;
  std::uint64_t base_seed = 0;
  CorruptionSpec noise;
  CimSigmaSource cim_sigma_source = CimSigmaSource::kResidual;
  RefineDirection refine_direction = RefineDirection::kDirect;
};

struct DatasetInfo {
  std::string name;
  std::size_t pixels = 0;
  std::size_t images = 0;
  std::size_t subjects = 0;
  std::size_t image_height = 0;
  std::size_t image_width = 0;
};

struct RunReport {
  Method method = Method::kPlainNmf;
  WeightKind weight = WeightKind::kNone;
  ExperimentConfig config;
  DatasetInfo dataset;
  std::vector<RepeatResult> repeats;
  ReportAggregate aggregate;
};

namespace detail {

inline MetricAggregate aggregate_of(const std::vector<RepeatResult>& repeats,
                                    double RepeatResult::*field) {
  MetricAggregate a;
  if (repeats.empty()) return a;
  const double n = static_cast<double>(repeats.size());
  for (const auto& r : repeats) a.mean += r.*field;
  a.mean /= n;
  double var = 0.0;
  for (const auto& r : repeats) {
    const double d = r.*field - a.mean;
    var += d * d;
  }
  a.stddev = std::sqrt(var / n);
  return a;
}

}  // namespace detail

inline void recompute_aggregate(RunReport& report) {
  report.aggregate.rre = detail::aggregate_of(report.repeats, &RepeatResult::rre);
  report.aggregate.acc = detail::aggregate_of(report.repeats, &RepeatResult::acc);
  report.aggregate.nmi = detail::aggregate_of(report.repeats, &RepeatResult::nmi);
  report.aggregate.time_sec = detail::aggregate_of(report.repeats, &RepeatResult::time_sec);
}

inline nlohmann::json report_to_json(const RunReport& r) {
  nlohmann::json noise{{"kind", to_string(r.config.noise.kind)},
                       {"block_size", r.config.noise.block_size},
                       {"block_w", r.config.noise.block_w},
                       {"block_h", r.config.noise.block_h},
                       {"salt_fraction", r.config.noise.salt_fraction},
                       {"intensity", r.config.noise.intensity},
                       {"seed", r.config.noise.seed}};
  nlohmann::json config{
      {"rank", r.config.rank},
      {"repeats", r.config.repeats},
      {"n_iter_max", r.config.n_iter_max},
      {"tol", r.config.tol},
      {"base_seed", r.config.base_seed},
      {"noise", std::move(noise)},
      {"cim_sigma_source",
       r.config.cim_sigma_source == CimSigmaSource::kResidual ? "residual" : "data"},
      {"refine_direction",
       r.config.refine_direction == RefineDirection::kDirect ? "direct" : "reflected"}};
  nlohmann::json dataset{{"name", r.dataset.name},           {"pixels", r.dataset.pixels},
                         {"images", r.dataset.images},       {"subjects", r.dataset.subjects},
                         {"image_height", r.dataset.image_height},
                         {"image_width", r.dataset.image_width}};
  nlohmann::json repeats = nlohmann::json::array();
  for (const auto& rep : r.repeats) {
    repeats.push_back({{"seed", rep.seed},
                       {"method", to_string(r.method)},
                       {"weight", to_string(r.weight)},
                       {"rre", rep.rre},
                       {"acc", rep.acc},
                       {"nmi", rep.nmi},
                       {"time_sec", rep.time_sec},
                       {"trajectory_file", rep.trajectory_file}});
  }
  auto agg = [](const MetricAggregate& a) {
    return nlohmann::json{{"mean", a.mean}, {"std", a.stddev}};
  };
  return nlohmann::json{{"method", to_string(r.method)},
                        {"weight", to_string(r.weight)},
                        {"config", std::move(config)},
                        {"dataset", std::move(dataset)},
                        {"repeats", std::move(repeats)},
                        {"aggregate",
                         {{"rre", agg(r.aggregate.rre)},
                          {"acc", agg(r.aggregate.acc)},
                          {"nmi", agg(r.aggregate.nmi)},
                          {"time_sec", agg(r.aggregate.time_sec)}}}};
}

inline RunReport report_from_json(const nlohmann::json& j) {
  RunReport r;
  r.method = parse_method(j.at("method").get<std::string>());
  r.weight = parse_weight_kind(j.at("weight").get<std::string>());
  const auto& c = j.at("config");
  r.config.rank = c.at("rank").get<std::size_t>();
  r.config.repeats = c.at("repeats").get<std::size_t>();
  r.config.n_iter_max = c.at("n_iter_max").get<std::size_t>();
  r.config.tol = c.at("tol").get<double>();
  r.config.base_seed = c.at("base_seed").get<std::uint64_t>();
  const auto& noise = c.at("noise");
  r.config.noise.kind = parse_noise_kind(noise.at("kind").get<std::string>());
  r.config.noise.block_size = noise.at("block_size").get<std::size_t>();
  r.config.noise.block_w = noise.at("block_w").get<std::size_t>();
  r.config.noise.block_h = noise.at("block_h").get<std::size_t>();
  r.config.noise.salt_fraction = noise.at("salt_fraction").get<double>();
  r.config.noise.intensity = noise.at("intensity").get<double>();
  r.config.noise.seed = noise.at("seed").get<std::uint64_t>();
  r.config.cim_sigma_source = c.at("cim_sigma_source").get<std::string>() == "data"
                                  ? CimSigmaSource::kData
                                  : CimSigmaSource::kResidual;
  r.config.refine_direction = c.at("refine_direction").get<std::string>() == "reflected"
                                  ? RefineDirection::kReflected
                                  : RefineDirection::kDirect;
  const auto& d = j.at("dataset");
  r.dataset.name = d.at("name").get<std::string>();
  r.dataset.pixels = d.at("pixels").get<std::size_t>();
  r.dataset.images = d.at("images").get<std::size_t>();
  r.dataset.subjects = d.at("subjects").get<std::size_t>();
  r.dataset.image_height = d.at("image_height").get<std::size_t>();
  r.dataset.image_width = d.at("image_width").get<std::size_t>();
  for (const auto& rep : j.at("repeats")) {
    RepeatResult rr;
    rr.seed = rep.at("seed").get<std::uint64_t>();
    rr.rre = rep.at("rre").get<double>();
    rr.acc = rep.at("acc").get<double>();
    rr.nmi = rep.at("nmi").get<double>();
    rr.time_sec = rep.at("time_sec").get<double>();
    rr.trajectory_file = rep.at("trajectory_file").get<std::string>();
    r.repeats.push_back(std::move(rr));
  }
  recompute_aggregate(r);
  return r;
}

inline void save_report(const RunReport& report, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open for writing: " + path.string());
  os << report_to_json(report).dump(2) << '\n';
  if (!os) throw DataError("write failed: " + path.string());
}

inline RunReport load_report(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open: " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("JSON parse error in " + path.string() + ": " + e.what());
  }
  return report_from_json(j);
}

// Per-sweep trajectory CSV. Columns: iter,<objective_name>[,rre_clean][,refresh].
inline void save_trajectory_csv(const std::filesystem::path& path, const char* objective_name,
                                const std::vector<double>& objective,
                                const std::vector<double>* clean_rre = nullptr,
                                const std::vector<std::uint8_t>* refresh = nullptr) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open for writing: " + path.string());
  os << "iter," << objective_name;
  if (clean_rre && !clean_rre->empty()) os << ",rre_clean";
  if (refresh) os << ",refresh";
  os << '\n';
  char buf[40];
  for (std::size_t i = 0; i < objective.size(); ++i) {
    os << (i + 1);
    std::snprintf(buf, sizeof(buf), "%.17g", objective[i]);
    os << ',' << buf;
    if (clean_rre && !clean_rre->empty()) {
      std::snprintf(buf, sizeof(buf), "%.17g", (*clean_rre)[i]);
      os << ',' << buf;
    }
    if (refresh) os << ',' << static_cast<int>((*refresh)[i]);
    os << '\n';
  }
  if (!os) throw DataError("write failed: " + path.string());
}

// Mean table in Table-1 shape (noise,weight,method,rre,acc,nmi,time_sec) plus
// a companion <stem>_std<ext> file with the standard deviations.
inline void emit_table(const std::vector<RunReport>& reports, const std::filesystem::path& path) {
  std::filesystem::path std_path = path;
  std_path.replace_filename(path.stem().string() + "_std" + path.extension().string());

  auto write = [&](const std::filesystem::path& p, bool stddev) {
    std::ofstream os(p);
    if (!os) throw DataError("cannot open for writing: " + p.string());
    os << "noise,weight,method,rre,acc,nmi,time_sec\n";
    char buf[40];
    for (const auto& r : reports) {
      os << to_string(r.config.noise.kind) << ',' << to_string(r.weight) << ','
         << to_string(r.method);
      const MetricAggregate* metrics[4] = {&r.aggregate.rre, &r.aggregate.acc, &r.aggregate.nmi,
                                           &r.aggregate.time_sec};
      for (const auto* m : metrics) {
        std::snprintf(buf, sizeof(buf), "%.6f", stddev ? m->stddev : m->mean);
        os << ',' << buf;
      }
      os << '\n';
    }
    if (!os) throw DataError("write failed: " + p.string());
  };
  write(path, false);
  write(std_path, true);
}

}  // namespace robustnmf
