#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "robustnmf/corruption.hpp"
#include "robustnmf/dataset.hpp"
#include "robustnmf/metrics.hpp"
#include "robustnmf/report.hpp"
#include "robustnmf/solver.hpp"
#include "robustnmf/target_polish.hpp"

namespace robustnmf {

struct ExperimentOptions {
  std::size_t n_iter_max = 200;
  double tol = 1e-6;
  InitMethod init = InitMethod::kRandomUniform;
  CimSigmaSource cim_sigma_source = CimSigmaSource::kResidual;
  RefineDirection refine_direction = RefineDirection::kDirect;
  std::size_t max_step_iter = 100;
  double slope = 10.0;
  double inflexion_point = 0.01;
  std::size_t refine_max_iter = 20;
  bool emit_trajectories = false;
  std::filesystem::path out_dir;  // trajectory destination when emitting
  std::size_t threads = 1;        // parallelism across (repeat, method, weight) cells
};

namespace detail {

struct Cell {
  Method method;
  WeightKind weight;
};

// Row order follows the tables: weight-major, method within. plain-nmf takes
// no weight; it appears once, under "none".
inline std::vector<Cell> experiment_cells(const std::vector<Method>& methods,
                                          const std::vector<WeightKind>& weights) {
  std::vector<Cell> cells;
  bool plain_added = false;
  for (WeightKind w : weights) {
    for (Method m : methods) {
      if (m == Method::kPlainNmf) {
        if (w == WeightKind::kNone && !plain_added) {
          cells.push_back({m, WeightKind::kNone});
          plain_added = true;
        }
        continue;
      }
      cells.push_back({m, w});
    }
  }
  if (!plain_added) {
    for (Method m : methods) {
      if (m == Method::kPlainNmf) {
        cells.push_back({m, WeightKind::kNone});
        break;
      }
    }
  }
  return cells;
}

inline std::string trajectory_filename(const CorruptionSpec& noise, const Cell& cell,
                                       std::size_t repeat) {
  return std::string("traj_") + to_string(noise.kind) + "_" + to_string(cell.weight) + "_" +
         to_string(cell.method) + "_rep" + std::to_string(repeat) + ".csv";
}

}  // namespace detail

// The repeated-corruption protocol: for repeat i the dataset is corrupted
// with seed base_seed + i and every (method, weight) cell consumes that same
// corrupted matrix. RRE is computed against the clean matrix; clustering
// runs k-means on the rows of H with k = number of subjects. time_sec covers
// the solve only. Cells may run on several threads (contention then shows in
// time_sec); all numeric outputs are independent of the thread count.
inline std::vector<RunReport> run_experiment(const Dataset& dataset,
                                             const std::vector<Method>& methods,
                                             const std::vector<WeightKind>& weights,
                                             const CorruptionSpec& noise, std::size_t repeats,
                                             std::size_t rank, std::uint64_t base_seed,
                                             const ExperimentOptions& opts = {}) {
  if (repeats < 1) throw std::invalid_argument("run_experiment: repeats must be >= 1");
  if (methods.empty() || weights.empty()) {
    throw std::invalid_argument("run_experiment: methods and weights must be non-empty");
  }
  const std::vector<detail::Cell> cells = detail::experiment_cells(methods, weights);
  if (cells.empty()) throw std::invalid_argument("run_experiment: no runnable (method, weight) cells");
  if (rank < 1 || rank > std::min(dataset.x.rows(), dataset.x.cols())) {
    throw std::invalid_argument("run_experiment: rank out of range for this dataset");
  }
  const std::size_t n_subjects = dataset.n_subjects();
  if (n_subjects < 1) throw DataError("run_experiment: dataset has no labels");

  ExperimentConfig config;
  config.rank = rank;
  config.repeats = repeats;
  config.n_iter_max = opts.n_iter_max;
  config.tol = opts.tol;
  config.base_seed = base_seed;
  config.noise = noise;
  config.cim_sigma_source = opts.cim_sigma_source;
  config.refine_direction = opts.refine_direction;

  DatasetInfo info;
  info.name = dataset.name;
  info.pixels = dataset.x.rows();
  info.images = dataset.x.cols();
  info.subjects = n_subjects;
  info.image_height = dataset.image_height;
  info.image_width = dataset.image_width;

  std::vector<RunReport> reports(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    reports[c].method = cells[c].method;
    reports[c].weight = cells[c].weight;
    reports[c].config = config;
    reports[c].dataset = info;
    reports[c].repeats.resize(repeats);
  }

  const std::size_t n_jobs = cells.size() * repeats;
  std::atomic<std::size_t> next_job{0};
  std::atomic<bool> failed{false};
  std::string first_error;
  std::mutex error_mutex;

  auto worker = [&]() {
    for (;;) {
      const std::size_t job = next_job.fetch_add(1);
      if (job >= n_jobs || failed.load()) return;
      const std::size_t c = job / repeats;
      const std::size_t rep = job % repeats;
      try {
        const detail::Cell& cell = cells[c];
        CorruptionSpec rep_noise = noise;
        rep_noise.seed = base_seed + rep;
        const DenseMatrix corrupted =
            corrupt(dataset.x, dataset.image_height, dataset.image_width, rep_noise);

        WeightScheme scheme;
        scheme.kind = cell.weight;
        scheme.cim_sigma_source = opts.cim_sigma_source;

        SolveConfig scfg;
        scfg.rank = rank;
        scfg.n_iter_max = opts.n_iter_max;
        scfg.tol = opts.tol;
        scfg.seed = base_seed + rep;
        scfg.init = opts.init;

        const DenseMatrix* clean_traj = opts.emit_trajectories ? &dataset.x : nullptr;

        RepeatResult& out = reports[c].repeats[rep];
        out.seed = base_seed + rep;

        FactorPair factors;
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<double> objective;
        std::vector<double> clean_rre_traj;
        std::vector<std::uint8_t> refresh_flags;
        bool has_refresh = false;
        switch (cell.method) {
          case Method::kPlainNmf: {
            SolveResult r = solve_nmf(corrupted, scfg, nullptr, clean_traj);
            factors = std::move(r.factors);
            objective = std::move(r.objective);
            clean_rre_traj = std::move(r.clean_rre);
            break;
          }
          case Method::kWeightedNmf: {
            SolveResult r = solve_weighted_nmf(corrupted, scheme, scfg, nullptr, clean_traj);
            factors = std::move(r.factors);
            objective = std::move(r.objective);
            clean_rre_traj = std::move(r.clean_rre);
            break;
          }
          case Method::kTargetPolish: {
            PolishConfig pcfg;
            pcfg.scheme = scheme;
            pcfg.max_step_iter = opts.max_step_iter;
            pcfg.slope = opts.slope;
            pcfg.inflexion_point = opts.inflexion_point;
            pcfg.refine_max_iter = opts.refine_max_iter;
            pcfg.refine_direction = opts.refine_direction;
            pcfg.solve = scfg;
            PolishResult r = solve_target_polish(corrupted, pcfg, clean_traj);
            factors = std::move(r.factors);
            objective = std::move(r.objective);
            clean_rre_traj = std::move(r.clean_rre);
            refresh_flags = std::move(r.refresh);
            has_refresh = true;
            break;
          }
        }
        const auto t1 = std::chrono::steady_clock::now();
        out.time_sec = std::chrono::duration<double>(t1 - t0).count();

        out.rre = rre(dataset.x, factors);
        const LabelVector pred = cluster_assign(factors.h, n_subjects, base_seed + rep);
        out.acc = accuracy(pred, dataset.labels);
        out.nmi = nmi(pred, dataset.labels);

        if (opts.emit_trajectories) {
          const std::string fname = detail::trajectory_filename(noise, cell, rep);
          save_trajectory_csv(opts.out_dir / fname,
                              has_refresh ? "objective_polished" : "objective", objective,
                              &clean_rre_traj, has_refresh ? &refresh_flags : nullptr);
          out.trajectory_file = fname;
        }
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!failed.exchange(true)) first_error = e.what();
        return;
      }
    }
  };

  const std::size_t n_threads = std::max<std::size_t>(1, std::min(opts.threads, n_jobs));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failed.load()) throw NumericError("run_experiment: " + first_error);

  for (auto& report : reports) recompute_aggregate(report);
  return reports;
}

}  // namespace robustnmf
