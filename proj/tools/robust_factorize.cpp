// robust-factorize: benchmark and factorization CLI.
//
// Subcommands:
//   bench      repeated corrupted-factorization runs, JSON reports + CSV tables
//   factorize  one solve on a matrix or image dataset, factors out
//   corrupt    corruption preview (corrupted matrix + optional PGM previews)
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric error.
// RF_THREADS caps bench parallelism across (repeat, method, weight) cells.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "robustnmf/robustnmf.hpp"

namespace fs = std::filesystem;
using namespace robustnmf;

namespace {

std::size_t threads_from_env() {
  const char* env = std::getenv("RF_THREADS");
  if (!env) return 1;
  const long v = std::atol(env);
  return v > 0 ? static_cast<std::size_t>(v) : 1;
}

struct NoiseFlags {
  std::string kind = "none";
  std::size_t block_size = 10;
  std::size_t block_w = 0;
  std::size_t block_h = 0;
  double salt_frac = 0.10;
  double intensity = 1.0;
  std::uint64_t seed = 0;

  CorruptionSpec spec() const {
    CorruptionSpec s;
    s.kind = parse_noise_kind(kind);
    s.block_size = block_size;
    s.block_w = block_w;
    s.block_h = block_h;
    s.salt_fraction = salt_frac;
    s.intensity = intensity;
    s.seed = seed;
    return s;
  }
};

void add_noise_flags(CLI::App* cmd, NoiseFlags& flags) {
  cmd->add_option("--noise", flags.kind, "Corruption type: block|salt|none")
      ->check(CLI::IsMember({"block", "salt", "none"}));
  cmd->add_option("--block-size", flags.block_size, "Block edge length in pixels");
  cmd->add_option("--block-w", flags.block_w, "Block width override");
  cmd->add_option("--block-h", flags.block_h, "Block height override");
  cmd->add_option("--salt-frac", flags.salt_frac, "Fraction of salted pixels per image");
  cmd->add_option("--intensity", flags.intensity, "Corruption intensity (1.0 = white)");
}

int run_bench(const std::string& dataset_path, const std::string& layout_str,
              const NoiseFlags& noise, const std::vector<std::string>& method_names,
              const std::vector<std::string>& weight_names, std::size_t rank_opt,
              std::size_t repeats, std::uint64_t seed, const std::string& out_dir,
              bool emit_traj, const ExperimentOptions& opts_in) {
  Dataset ds = load_image_dir(dataset_path, parse_layout(layout_str));

  std::vector<Method> methods;
  for (const auto& m : method_names) methods.push_back(parse_method(m));
  std::vector<WeightKind> weights;
  for (const auto& w : weight_names) weights.push_back(parse_weight_kind(w));

  const std::size_t rank = rank_opt ? rank_opt : ds.n_subjects();

  ExperimentOptions opts = opts_in;
  opts.emit_trajectories = emit_traj;
  opts.out_dir = out_dir;
  opts.threads = threads_from_env();

  fs::create_directories(out_dir);

  const auto reports =
      run_experiment(ds, methods, weights, noise.spec(), repeats, rank, seed, opts);

  for (const auto& r : reports) {
    const std::string name = std::string("report_") + to_string(r.config.noise.kind) + "_" +
                             to_string(r.weight) + "_" + to_string(r.method) + ".json";
    save_report(r, fs::path(out_dir) / name);
  }
  emit_table(reports, fs::path(out_dir) / "table.csv");

  std::printf("%-6s %-6s %-13s %8s %8s %8s %10s\n", "noise", "weight", "method", "rre", "acc",
              "nmi", "time_sec");
  for (const auto& r : reports) {
    std::printf("%-6s %-6s %-13s %8.4f %8.4f %8.4f %10.3f\n", to_string(r.config.noise.kind),
                to_string(r.weight), to_string(r.method), r.aggregate.rre.mean,
                r.aggregate.acc.mean, r.aggregate.nmi.mean, r.aggregate.time_sec.mean);
  }
  std::printf("reports written to %s\n", out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust nonnegative matrix factorization benchmark toolkit"};
  app.require_subcommand(1);

  // ---- bench ----
  auto* bench = app.add_subcommand("bench", "Run the repeated corrupted-factorization benchmark");
  std::string dataset_path, layout = "orl", out_dir = "bench_out";
  NoiseFlags noise;
  std::vector<std::string> methods{"weighted-nmf", "target-polish"};
  std::vector<std::string> weights{"none", "cim", "huber"};
  std::size_t rank = 0, repeats = 10;
  std::uint64_t seed = 0;
  bool emit_traj = false;
  ExperimentOptions opts;
  std::string sigma_source = "residual", refine_direction = "direct", init = "random-uniform";

  bench->add_option("--dataset", dataset_path, "Image dataset directory")->required();
  bench->add_option("--layout", layout, "Dataset layout: orl|yaleb|flat")
      ->check(CLI::IsMember({"orl", "yaleb", "flat"}));
  add_noise_flags(bench, noise);
  bench->add_option("--methods", methods, "Comma-separated methods")->delimiter(',');
  bench->add_option("--weights", weights, "Comma-separated weight schemes")->delimiter(',');
  bench->add_option("--rank", rank, "Factorization rank (default: number of subjects)");
  bench->add_option("--repeats", repeats, "Number of repeats");
  bench->add_option("--seed", seed, "Base seed; repeat i corrupts with seed+i");
  bench->add_option("--out", out_dir, "Output directory");
  bench->add_flag("--emit-trajectories", emit_traj, "Write per-sweep trajectory CSVs");
  bench->add_option("--iters", opts.n_iter_max, "Max sweeps/iterations per solve");
  bench->add_option("--tol", opts.tol, "Relative objective-change stopping threshold");
  bench->add_option("--cim-sigma-source", sigma_source, "CIM variance source: residual|data")
      ->check(CLI::IsMember({"residual", "data"}));
  bench->add_option("--refine-direction", refine_direction,
                    "Refinement count mapping: direct|reflected")
      ->check(CLI::IsMember({"direct", "reflected"}));
  bench->add_option("--init", init, "Initialization: random-uniform|nndsvd")
      ->check(CLI::IsMember({"random-uniform", "nndsvd"}));
  bench->add_option("--max-step-iter", opts.max_step_iter, "Target refresh schedule ceiling");
  bench->add_option("--slope", opts.slope, "Refresh schedule slope");
  bench->add_option("--inflexion-point", opts.inflexion_point, "Refresh schedule inflexion point");
  bench->add_option("--refine-max-iter", opts.refine_max_iter, "Refinement iteration cap");

  // ---- factorize ----
  auto* fact = app.add_subcommand("factorize", "Factorize one matrix or dataset");
  std::string f_input, f_dataset, f_layout = "orl", f_method = "target-polish",
              f_weight = "cim", f_out = "factorize_out", f_format = "rfm1";
  SolveConfig f_cfg;
  std::string f_init = "random-uniform", f_sigma = "residual", f_refdir = "direct";
  fact->add_option("--input", f_input, "Input matrix file (CSV or RFM1)");
  fact->add_option("--dataset", f_dataset, "Image dataset directory (alternative to --input)");
  fact->add_option("--layout", f_layout, "Dataset layout: orl|yaleb|flat")
      ->check(CLI::IsMember({"orl", "yaleb", "flat"}));
  fact->add_option("--method", f_method, "plain-nmf|weighted-nmf|target-polish")
      ->check(CLI::IsMember({"plain-nmf", "weighted-nmf", "target-polish"}));
  fact->add_option("--weight", f_weight, "Weight scheme: none|cim|huber|l1|l21")
      ->check(CLI::IsMember({"none", "cim", "huber", "l1", "l21"}));
  fact->add_option("--rank", f_cfg.rank, "Factorization rank")->required();
  fact->add_option("--iters", f_cfg.n_iter_max, "Max sweeps/iterations");
  fact->add_option("--tol", f_cfg.tol, "Stopping threshold");
  fact->add_option("--seed", f_cfg.seed, "Seed");
  fact->add_option("--init", f_init, "random-uniform|nndsvd")
      ->check(CLI::IsMember({"random-uniform", "nndsvd"}));
  fact->add_option("--cim-sigma-source", f_sigma, "CIM variance source")
      ->check(CLI::IsMember({"residual", "data"}));
  fact->add_option("--refine-direction", f_refdir, "direct|reflected")
      ->check(CLI::IsMember({"direct", "reflected"}));
  fact->add_option("--out", f_out, "Output directory");
  fact->add_option("--format", f_format, "Factor output format: rfm1|csv")
      ->check(CLI::IsMember({"rfm1", "csv"}));

  // ---- corrupt ----
  auto* corr = app.add_subcommand("corrupt", "Corrupt a dataset and save the result");
  std::string c_input, c_dataset, c_layout = "orl", c_shape, c_out = "corrupt_out";
  NoiseFlags c_noise;
  std::size_t c_previews = 0;
  corr->add_option("--input", c_input, "Input matrix file (columns are images)");
  corr->add_option("--dataset", c_dataset, "Image dataset directory (alternative to --input)");
  corr->add_option("--layout", c_layout, "Dataset layout: orl|yaleb|flat")
      ->check(CLI::IsMember({"orl", "yaleb", "flat"}));
  corr->add_option("--image-shape", c_shape, "HxW image shape (required with --input)");
  add_noise_flags(corr, c_noise);
  corr->add_option("--noise-seed", c_noise.seed, "Corruption seed");
  corr->add_option("--out", c_out, "Output directory");
  corr->add_option("--previews", c_previews, "Number of corrupted images to save as PGM");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*bench) {
      opts.cim_sigma_source =
          sigma_source == "data" ? CimSigmaSource::kData : CimSigmaSource::kResidual;
      opts.refine_direction = refine_direction == "reflected" ? RefineDirection::kReflected
                                                              : RefineDirection::kDirect;
      opts.init = init == "nndsvd" ? InitMethod::kNndsvd : InitMethod::kRandomUniform;
      return run_bench(dataset_path, layout, noise, methods, weights, rank, repeats, seed,
                       out_dir, emit_traj, opts);
    }

    if (*fact) {
      DenseMatrix x;
      if (!f_input.empty()) {
        x = load_matrix(f_input, /*require_nonneg=*/true);
      } else if (!f_dataset.empty()) {
        x = load_image_dir(f_dataset, parse_layout(f_layout)).x;
      } else {
        throw std::invalid_argument("factorize: provide --input or --dataset");
      }
      f_cfg.init = f_init == "nndsvd" ? InitMethod::kNndsvd : InitMethod::kRandomUniform;
      WeightScheme scheme;
      scheme.kind = parse_weight_kind(f_weight);
      scheme.cim_sigma_source = f_sigma == "data" ? CimSigmaSource::kData : CimSigmaSource::kResidual;

      fs::create_directories(f_out);
      const std::string ext = f_format == "csv" ? ".csv" : ".rfm1";
      const Method method = parse_method(f_method);
      FactorPair factors;
      if (method == Method::kPlainNmf) {
        SolveResult r = solve_nmf(x, f_cfg);
        factors = std::move(r.factors);
        save_trajectory_csv(fs::path(f_out) / "trajectory.csv", "objective", r.objective);
        std::printf("plain-nmf: %zu sweeps, final objective %.6e\n", r.sweeps,
                    r.objective.empty() ? 0.0 : r.objective.back());
      } else if (method == Method::kWeightedNmf) {
        SolveResult r = solve_weighted_nmf(x, scheme, f_cfg);
        factors = std::move(r.factors);
        save_trajectory_csv(fs::path(f_out) / "trajectory.csv", "objective", r.objective);
        std::printf("weighted-nmf: %zu iterations, final objective %.6e\n", r.sweeps,
                    r.objective.empty() ? 0.0 : r.objective.back());
      } else {
        PolishConfig pcfg;
        pcfg.scheme = scheme;
        pcfg.refine_direction =
            f_refdir == "reflected" ? RefineDirection::kReflected : RefineDirection::kDirect;
        pcfg.solve = f_cfg;
        PolishResult r = solve_target_polish(x, pcfg);
        factors = std::move(r.factors);
        save_trajectory_csv(fs::path(f_out) / "trajectory.csv", "objective_polished", r.objective,
                            nullptr, &r.refresh);
        std::printf("target-polish: %zu sweeps + %zu refinement iterations\n", r.state.iter,
                    r.refine_iters);
      }
      save_matrix(fs::path(f_out) / ("w" + ext), factors.w);
      save_matrix(fs::path(f_out) / ("h" + ext), factors.h);
      std::printf("factors written to %s\n", f_out.c_str());
      return 0;
    }

    if (*corr) {
      DenseMatrix x;
      std::size_t height = 0, width = 0;
      if (!c_input.empty()) {
        if (c_shape.empty()) throw std::invalid_argument("corrupt: --input needs --image-shape HxW");
        const std::size_t xpos = c_shape.find('x');
        if (xpos == std::string::npos) throw std::invalid_argument("corrupt: bad --image-shape");
        height = std::stoull(c_shape.substr(0, xpos));
        width = std::stoull(c_shape.substr(xpos + 1));
        x = load_matrix(c_input, /*require_nonneg=*/true);
      } else if (!c_dataset.empty()) {
        Dataset ds = load_image_dir(c_dataset, parse_layout(c_layout));
        height = ds.image_height;
        width = ds.image_width;
        x = std::move(ds.x);
      } else {
        throw std::invalid_argument("corrupt: provide --input or --dataset");
      }
      const DenseMatrix corrupted = corrupt(x, height, width, c_noise.spec());
      fs::create_directories(c_out);
      save_matrix(fs::path(c_out) / "corrupted.rfm1", corrupted);
      for (std::size_t j = 0; j < std::min(c_previews, corrupted.cols()); ++j) {
        save_pgm(fs::path(c_out) / ("corrupted_" + std::to_string(j) + ".pgm"),
                 column_image(corrupted, j, height, width));
      }
      std::printf("corrupted matrix (%zux%zu) written to %s\n", corrupted.rows(),
                  corrupted.cols(), c_out.c_str());
      return 0;
    }
  } catch (const ShapeError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 1;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
