#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "robustnmf/errors.hpp"
#include "robustnmf/matrix.hpp"
#include "robustnmf/solver.hpp"
#include "robustnmf/weights.hpp"

namespace robustnmf {

// Direction of the logistic mapping from ||X - X~||/||X~|| to the number of
// refinement iterations. kDirect applies the schedule formula as written
// (larger distance -> fewer iterations); kReflected mirrors it.
enum class RefineDirection { kDirect, kReflected };

struct PolishConfig {
  WeightScheme scheme;
  std::size_t max_step_iter = 100;
  double slope = 10.0;
  double inflexion_point = 0.01;
  std::size_t refine_max_iter = 20;
  RefineDirection refine_direction = RefineDirection::kDirect;
  SolveConfig solve;
};

struct PolishState {
  DenseMatrix target;             // current polished matrix X~
  std::size_t step_iter = 1;      // sweeps until the next target refresh
  double last_target_change = 0;  // ||X~_new - X~_old||_F / ||X~_old||_F
  std::size_t iter = 0;           // total Fast-HALS sweeps performed
};

// X~_ij = (1 - G_ij) med(X) + G_ij X_ij, with G computed from the residual
// x - approx (never from a previous X~). For the l1/l21 schemes G is scaled
// by its maximum entry first so the blend stays a convex combination.
inline DenseMatrix polish_target(const DenseMatrix& x, const DenseMatrix& approx,
                                 const WeightScheme& scheme) {
  if (!x.same_shape(approx)) throw ShapeError("polish_target: shape mismatch");
  DenseMatrix g = compute_weights(scheme, x, approx);
  if (scheme.kind == WeightKind::kL1 || scheme.kind == WeightKind::kL21) {
    const double maxg = *std::max_element(g.values().begin(), g.values().end());
    if (maxg > 0.0) {
      for (double& v : g.values()) v /= maxg;
    }
  }
  const double med = global_median(x);
  DenseMatrix target(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double gi = g.values()[i];
    target.values()[i] = (1.0 - gi) * med + gi * x.values()[i];
  }
  return target;
}

// ||next - prev||_F / ||prev||_F.
inline double target_change(const DenseMatrix& prev, const DenseMatrix& next) {
  if (!prev.same_shape(next)) throw ShapeError("target_change: shape mismatch");
  const double denom = frobenius_norm(prev);
  if (denom == 0.0) throw NumericError("target_change: zero reference norm");
  detail::CompensatedSum s;
  for (std::size_t i = 0; i < prev.size(); ++i) {
    const double d = next.values()[i] - prev.values()[i];
    s.add(d * d);
  }
  return std::sqrt(s.value()) / denom;
}

// round(1 + max_step_iter / (1 + exp(slope * (change - inflexion_point)))),
// nearest integer with ties away from zero; always in [1, 1 + max_step_iter].
inline std::size_t schedule_step(double change, const PolishConfig& cfg) {
  if (!(change >= 0.0)) throw std::invalid_argument("schedule_step: change must be >= 0");
  const double raw =
      1.0 + static_cast<double>(cfg.max_step_iter) /
                (1.0 + std::exp(cfg.slope * (change - cfg.inflexion_point)));
  const long long rounded = std::llround(raw);
  const long long hi = 1 + static_cast<long long>(cfg.max_step_iter);
  return static_cast<std::size_t>(std::clamp(rounded, 1LL, hi));
}

namespace detail {

// Refinement budget: the schedule formula evaluated with refine_max_iter in
// place of max_step_iter and the X-to-target distance as the change, minus
// the baseline 1, clamped to [0, refine_max_iter].
inline std::size_t refine_iteration_count(double distance, const PolishConfig& cfg) {
  const double arg = cfg.slope * (distance - cfg.inflexion_point);
  const double e = cfg.refine_direction == RefineDirection::kDirect ? std::exp(arg) : std::exp(-arg);
  const double raw = 1.0 + static_cast<double>(cfg.refine_max_iter) / (1.0 + e);
  const long long n = std::llround(raw) - 1;
  const long long hi = static_cast<long long>(cfg.refine_max_iter);
  return static_cast<std::size_t>(std::clamp(n, 0LL, hi));
}

}  // namespace detail

struct PolishResult {
  FactorPair factors;
  std::vector<double> objective;       // ||X~ - W H^T||_F^2 per sweep, vs the sweep's target
  std::vector<std::uint8_t> refresh;   // 1 = first sweep against a freshly refreshed target
  std::vector<double> clean_rre;       // RRE vs clean reference per sweep, when supplied
  std::vector<double> refine_objective;   // weighted objective per refinement iteration
  std::vector<double> refine_clean_rre;   // RRE vs clean reference per refinement iteration
  std::size_t refine_iters = 0;
  PolishState state;
};

// Fast-HALS against the polished target X~. The target is re-polished from
// the current factorization every step_iter sweeps, where step_iter follows
// the logistic schedule on the relative target change; it starts at 1 and
// widens as the target settles. When the inner objective change and the
// target change both fall below tol the loop stops. A short weighted-NMF
// refinement against the original x, warm-started from the polish factors,
// finishes the run.
inline PolishResult solve_target_polish(const DenseMatrix& x, const PolishConfig& cfg,
                                        const DenseMatrix* clean_ref = nullptr) {
  detail::check_nonneg(x, "solve_target_polish");
  detail::check_config(x, cfg.solve);
  if (cfg.max_step_iter < 1) throw std::invalid_argument("max_step_iter must be >= 1");
  if (cfg.slope <= 0.0) throw std::invalid_argument("slope must be > 0");
  if (clean_ref && !clean_ref->same_shape(x)) throw ShapeError("solve_target_polish: clean_ref shape");

  PolishResult res;
  res.factors = init_factors(x, cfg.solve);
  DenseMatrix& w = res.factors.w;
  DenseMatrix& h = res.factors.h;

  const std::uint64_t reseed_base = mix_seed(cfg.solve.seed, seed_tag::kColumnReseed);
  detail::normalize_or_reseed_columns(w, reseed_base);

  const double cnorm = clean_ref ? frobenius_norm(*clean_ref) : 0.0;
  const double cnorm2 = cnorm * cnorm;
  const double tol = cfg.solve.tol;

  PolishState& st = res.state;
  {
    DenseMatrix approx0 = matmul_nt(w, h);
    st.target = polish_target(x, approx0, cfg.scheme);
  }
  st.step_iter = 1;

  double tnorm2 = sum_squares(st.target);
  DenseMatrix cross = matmul_tn(st.target, w);
  DenseMatrix gram = matmul_tn(w, w);

  double prev_obj = std::numeric_limits<double>::quiet_NaN();
  std::size_t phase_sweeps = 0;
  bool fresh_target = false;  // flags the sweep that follows a refresh

  while (st.iter < cfg.solve.n_iter_max) {
    res.factors = fast_hals_step(st.target, std::move(res.factors), gram, cross,
                                 mix_seed(reseed_base, st.iter));
    ++st.iter;
    ++phase_sweeps;
    res.refresh.push_back(fresh_target ? 1 : 0);
    fresh_target = false;

    cross = matmul_tn(st.target, w);
    gram = matmul_tn(w, w);
    DenseMatrix gramh = matmul_tn(h, h);
    const double obj = detail::objective_from_grams(tnorm2, h, cross, gram, gramh);
    res.objective.push_back(obj);
    if (clean_ref) {
      DenseMatrix crossc = matmul_tn(*clean_ref, w);
      const double err2 = detail::objective_from_grams(cnorm2, h, crossc, gram, gramh);
      res.clean_rre.push_back(std::sqrt(err2) / cnorm);
    }

    const bool inner_converged =
        st.iter > 1 && detail::rel_change_below(prev_obj, obj, tol);
    prev_obj = obj;

    if (phase_sweeps >= st.step_iter || inner_converged) {
      DenseMatrix approx = matmul_nt(w, h);
      DenseMatrix next_target = polish_target(x, approx, cfg.scheme);
      st.last_target_change = target_change(st.target, next_target);
      st.step_iter = schedule_step(st.last_target_change, cfg);
      st.target = std::move(next_target);
      tnorm2 = sum_squares(st.target);
      cross = matmul_tn(st.target, w);
      phase_sweeps = 0;
      fresh_target = true;
      if (inner_converged && st.last_target_change < tol) break;
    }
  }

  // Refinement: a few weighted-NMF iterations on the original x, counted from
  // the distance between x and the final target.
  const double target_norm = frobenius_norm(st.target);
  if (target_norm == 0.0) throw NumericError("solve_target_polish: zero polished target");
  double dist_acc = 0.0;
  {
    detail::CompensatedSum s;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x.values()[i] - st.target.values()[i];
      s.add(d * d);
    }
    dist_acc = std::sqrt(s.value()) / target_norm;
  }
  res.refine_iters = detail::refine_iteration_count(dist_acc, cfg);
  if (res.refine_iters > 0) {
    SolveConfig wcfg = cfg.solve;
    wcfg.n_iter_max = res.refine_iters;
    SolveResult refined = solve_weighted_nmf(x, cfg.scheme, wcfg, &res.factors, clean_ref);
    res.factors = std::move(refined.factors);
    res.refine_objective = std::move(refined.objective);
    res.refine_clean_rre = std::move(refined.clean_rre);
  }
  return res;
}

}  // namespace robustnmf
