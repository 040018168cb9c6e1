#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "robustnmf/errors.hpp"
#include "robustnmf/matrix.hpp"
#include "robustnmf/rng.hpp"
#include "robustnmf/weights.hpp"

namespace robustnmf {

// Factor matrices of X ~ W H^T. W is m x r, H is n x r; every entry stays
// nonnegative after every update. After a Fast-HALS W pass each nonzero
// column of W has unit L2 norm.
struct FactorPair {
  DenseMatrix w;
  DenseMatrix h;

  std::size_t rank() const { return w.cols(); }
};

enum class InitMethod { kRandomUniform, kNndsvd };

struct SolveConfig {
  std::size_t rank = 2;
  std::size_t n_iter_max = 200;
  double tol = 1e-6;
  std::uint64_t seed = 0;
  InitMethod init = InitMethod::kRandomUniform;
};

namespace detail {

inline void check_nonneg(const DenseMatrix& x, const char* who) {
  for (double v : x.values()) {
    if (v < 0.0) throw NumericError(std::string(who) + ": input matrix has negative entries");
  }
}

inline void check_config(const DenseMatrix& x, const SolveConfig& cfg) {
  const std::size_t max_rank = std::min(x.rows(), x.cols());
  if (cfg.rank < 1 || cfg.rank > max_rank) {
    throw std::invalid_argument("rank " + std::to_string(cfg.rank) + " out of range [1, " +
                                std::to_string(max_rank) + "]");
  }
  if (cfg.n_iter_max < 1) throw std::invalid_argument("n_iter_max must be >= 1");
  if (cfg.tol < 0.0) throw std::invalid_argument("tol must be >= 0");
}

inline double matrix_mean(const DenseMatrix& x) {
  CompensatedSum s;
  for (double v : x.values()) s.add(v);
  return s.value() / static_cast<double>(x.size());
}

inline double column_sumsq(const DenseMatrix& m, std::size_t k) {
  CompensatedSum s;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double v = m(i, k);
    s.add(v * v);
  }
  return s.value();
}

inline constexpr double kZeroColumnNorm = 1e-12;

// A component that [.]_+ zeroed out gets restarted with small positives drawn
// from a seed derived deterministically from (reseed_seed, column);
// normalization is skipped for that column this sweep.
inline void reseed_column(DenseMatrix& w, std::size_t k, std::uint64_t reseed_seed) {
  Rng rng(mix_seed(reseed_seed, seed_tag::kColumnReseed ^ (k + 1)));
  for (std::size_t i = 0; i < w.rows(); ++i) {
    w(i, k) = 1e-6 * (1.0 + rng.next_double());
  }
}

// Unit-normalize every column; zero columns are reseeded instead.
inline void normalize_or_reseed_columns(DenseMatrix& w, std::uint64_t reseed_seed) {
  for (std::size_t k = 0; k < w.cols(); ++k) {
    const double norm = std::sqrt(column_sumsq(w, k));
    if (norm < kZeroColumnNorm) {
      reseed_column(w, k, reseed_seed);
    } else {
      const double inv = 1.0 / norm;
      for (std::size_t i = 0; i < w.rows(); ++i) w(i, k) *= inv;
    }
  }
}

// h_k <- [h_k + [X^T W]_k - H [W^T W]_k]_+ for k = 1..r, sequential in k.
inline void fast_hals_update_h(DenseMatrix& h, const DenseMatrix& cross, const DenseMatrix& gram) {
  const std::size_t n = h.rows();
  const std::size_t r = h.cols();
  for (std::size_t k = 0; k < r; ++k) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t l = 0; l < r; ++l) acc += h(j, l) * gram(l, k);
      const double v = h(j, k) + cross(j, k) - acc;
      h(j, k) = v > 0.0 ? v : 0.0;
    }
  }
}

// w_k <- [w_k [H^T H]_kk + [X H]_k - W [H^T H]_k]_+, then unit-normalize.
inline void fast_hals_update_w(DenseMatrix& w, const DenseMatrix& crossw,
                               const DenseMatrix& gramh, std::uint64_t reseed_seed) {
  const std::size_t m = w.rows();
  const std::size_t r = w.cols();
  for (std::size_t k = 0; k < r; ++k) {
    const double gkk = gramh(k, k);
    for (std::size_t i = 0; i < m; ++i) {
      double acc = 0.0;
      for (std::size_t l = 0; l < r; ++l) acc += w(i, l) * gramh(l, k);
      const double v = w(i, k) * gkk + crossw(i, k) - acc;
      w(i, k) = v > 0.0 ? v : 0.0;
    }
    const double norm = std::sqrt(column_sumsq(w, k));
    if (norm < kZeroColumnNorm) {
      reseed_column(w, k, reseed_seed);
    } else {
      const double inv = 1.0 / norm;
      for (std::size_t i = 0; i < m; ++i) w(i, k) *= inv;
    }
  }
}

inline void matmul_into(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& out) {
  eigen_view(out).noalias() = eigen_view(a) * eigen_view(b);
}

inline void matmul_tn_into(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& out) {
  eigen_view(out).noalias() = eigen_view(a).transpose() * eigen_view(b);
}

inline void matmul_nt_into(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& out) {
  eigen_view(out).noalias() = eigen_view(a) * eigen_view(b).transpose();
}

}  // namespace detail

// W, H >= 0 with deterministic seeding. random-uniform draws in [0,1) scaled
// by sqrt(mean(x)/r); nndsvd is the SVD-based nonnegative initialization of
// Boutsidis & Gallopoulos (zero-filled variant).
inline FactorPair init_factors(const DenseMatrix& x, const SolveConfig& cfg) {
  detail::check_config(x, cfg);
  const std::size_t m = x.rows();
  const std::size_t n = x.cols();
  const std::size_t r = cfg.rank;
  FactorPair f{DenseMatrix(m, r), DenseMatrix(n, r)};

  if (cfg.init == InitMethod::kRandomUniform) {
    Rng rng(mix_seed(cfg.seed, seed_tag::kFactorInit));
    const double scale = std::sqrt(std::max(detail::matrix_mean(x), 0.0) / static_cast<double>(r));
    for (double& v : f.w.values()) v = rng.next_double() * scale;
    for (double& v : f.h.values()) v = rng.next_double() * scale;
    return f;
  }

  // nndsvd
  Eigen::BDCSVD<detail::EigenRowMajor> svd(detail::eigen_view(x),
                                           Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& u = svd.matrixU();
  const auto& v = svd.matrixV();
  const auto& s = svd.singularValues();

  for (std::size_t i = 0; i < m; ++i) f.w(i, 0) = std::sqrt(s(0)) * std::abs(u(i, 0));
  for (std::size_t j = 0; j < n; ++j) f.h(j, 0) = std::sqrt(s(0)) * std::abs(v(j, 0));

  for (std::size_t k = 1; k < r; ++k) {
    double xp_norm = 0.0, xn_norm = 0.0, yp_norm = 0.0, yn_norm = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double e = u(i, k);
      (e > 0.0 ? xp_norm : xn_norm) += e * e;
    }
    for (std::size_t j = 0; j < n; ++j) {
      const double e = v(j, k);
      (e > 0.0 ? yp_norm : yn_norm) += e * e;
    }
    xp_norm = std::sqrt(xp_norm);
    xn_norm = std::sqrt(xn_norm);
    yp_norm = std::sqrt(yp_norm);
    yn_norm = std::sqrt(yn_norm);
    const double mp = xp_norm * yp_norm;
    const double mn = xn_norm * yn_norm;
    if (std::max(mp, mn) <= 0.0 || s(k) <= 0.0) continue;  // dead component, solver reseeds
    const bool positive = mp >= mn;
    const double sigma = std::sqrt(s(k) * (positive ? mp : mn));
    const double wu = sigma / (positive ? xp_norm : xn_norm);
    const double wv = sigma / (positive ? yp_norm : yn_norm);
    for (std::size_t i = 0; i < m; ++i) {
      const double e = u(i, k);
      f.w(i, k) = positive ? (e > 0.0 ? wu * e : 0.0) : (e < 0.0 ? -wu * e : 0.0);
    }
    for (std::size_t j = 0; j < n; ++j) {
      const double e = v(j, k);
      f.h(j, k) = positive ? (e > 0.0 ? wv * e : 0.0) : (e < 0.0 ? -wv * e : 0.0);
    }
  }
  return f;
}

// One full HALS sweep (reference route): every h_k, then every w_k, via the
// explicitly materialized X_k = X - W H^T + w_k h_k^T. Kept deliberately
// literal; fast_hals_step must reproduce it.
inline FactorPair hals_step(const DenseMatrix& x, FactorPair f, std::uint64_t reseed_seed = 0) {
  const std::size_t m = x.rows();
  const std::size_t n = x.cols();
  const std::size_t r = f.rank();
  if (f.w.rows() != m || f.h.rows() != n) throw ShapeError("hals_step: factor shape mismatch");

  DenseMatrix xk(m, n);
  for (std::size_t k = 0; k < r; ++k) {
    detail::matmul_nt_into(f.w, f.h, xk);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        xk(i, j) = x(i, j) - xk(i, j) + f.w(i, k) * f.h(j, k);
      }
    }
    const double denom = std::max(detail::column_sumsq(f.w, k), kDivisionGuard);
    for (std::size_t j = 0; j < n; ++j) {
      double num = 0.0;
      for (std::size_t i = 0; i < m; ++i) num += xk(i, j) * f.w(i, k);
      const double v = num / denom;
      f.h(j, k) = v > 0.0 ? v : 0.0;
    }
  }
  for (std::size_t k = 0; k < r; ++k) {
    detail::matmul_nt_into(f.w, f.h, xk);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        xk(i, j) = x(i, j) - xk(i, j) + f.w(i, k) * f.h(j, k);
      }
    }
    const double denom = std::max(detail::column_sumsq(f.h, k), kDivisionGuard);
    for (std::size_t i = 0; i < m; ++i) {
      double num = 0.0;
      for (std::size_t j = 0; j < n; ++j) num += xk(i, j) * f.h(j, k);
      const double v = num / denom;
      f.w(i, k) = v > 0.0 ? v : 0.0;
    }
    const double norm = std::sqrt(detail::column_sumsq(f.w, k));
    if (norm < detail::kZeroColumnNorm) {
      detail::reseed_column(f.w, k, reseed_seed);
    } else {
      const double inv = 1.0 / norm;
      for (std::size_t i = 0; i < m; ++i) f.w(i, k) *= inv;
    }
  }
  return f;
}

// One full Fast-HALS sweep. gram_w = W^T W and cross = X^T W must be computed
// from the incoming factors; X H and H^T H for the W pass are formed here
// after the H pass. Mathematically identical to hals_step when W comes in
// with unit columns.
inline FactorPair fast_hals_step(const DenseMatrix& x, FactorPair f, const DenseMatrix& gram_w,
                                 const DenseMatrix& cross, std::uint64_t reseed_seed = 0) {
  if (f.w.rows() != x.rows() || f.h.rows() != x.cols()) {
    throw ShapeError("fast_hals_step: factor shape mismatch");
  }
  if (gram_w.rows() != f.rank() || gram_w.cols() != f.rank() || cross.rows() != x.cols() ||
      cross.cols() != f.rank()) {
    throw ShapeError("fast_hals_step: gram/cross shape mismatch");
  }
  detail::fast_hals_update_h(f.h, cross, gram_w);
  DenseMatrix crossw = matmul(x, f.h);
  DenseMatrix gramh = matmul_tn(f.h, f.h);
  detail::fast_hals_update_w(f.w, crossw, gramh, reseed_seed);
  return f;
}

// Frobenius objective sum_ij (x - (W H^T))_ij^2, computed directly.
inline double nmf_objective(const DenseMatrix& x, const FactorPair& f) {
  DenseMatrix approx = matmul_nt(f.w, f.h);
  detail::CompensatedSum s;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x.values()[i] - approx.values()[i];
    s.add(d * d);
  }
  return s.value();
}

// Weighted objective sum_ij g_ij (x - (W H^T))_ij^2.
inline double weighted_nmf_objective(const DenseMatrix& x, const DenseMatrix& g,
                                     const FactorPair& f) {
  DenseMatrix approx = matmul_nt(f.w, f.h);
  detail::CompensatedSum s;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x.values()[i] - approx.values()[i];
    s.add(g.values()[i] * d * d);
  }
  return s.value();
}

struct SolveResult {
  FactorPair factors;
  std::vector<double> objective;  // objective value after each sweep/iteration
  std::vector<double> clean_rre;  // RRE vs a reference matrix, when supplied
  std::size_t sweeps = 0;
};

namespace detail {

// Objective via ||X||^2 - 2<H, X^T W> + <W^T W, H^T H>. Avoids an extra
// m x n product per sweep; clamped at zero since the cancellation can dip a
// hair below for near-exact fits.
inline double objective_from_grams(double xnorm2, const DenseMatrix& h, const DenseMatrix& cross,
                                   const DenseMatrix& gram_w, const DenseMatrix& gram_h) {
  const double v = xnorm2 - 2.0 * dot(h, cross) + dot(gram_w, gram_h);
  return v > 0.0 ? v : 0.0;
}

inline bool rel_change_below(double prev, double cur, double tol) {
  return std::abs(cur - prev) / std::max(prev, kDivisionGuard) < tol;
}

}  // namespace detail

// Fast-HALS driver: sweeps until the relative objective change drops below
// cfg.tol or n_iter_max sweeps. `warm` overrides the initialization; if
// `clean_ref` is given, the RRE against it is recorded after every sweep.
inline SolveResult solve_nmf(const DenseMatrix& x, const SolveConfig& cfg,
                             const FactorPair* warm = nullptr,
                             const DenseMatrix* clean_ref = nullptr) {
  detail::check_nonneg(x, "solve_nmf");
  detail::check_config(x, cfg);
  if (clean_ref && !clean_ref->same_shape(x)) throw ShapeError("solve_nmf: clean_ref shape");

  SolveResult res;
  res.factors = warm ? *warm : init_factors(x, cfg);
  DenseMatrix& w = res.factors.w;
  DenseMatrix& h = res.factors.h;
  if (w.rows() != x.rows() || h.rows() != x.cols() || w.cols() != h.cols()) {
    throw ShapeError("solve_nmf: warm factor shape mismatch");
  }

  const std::uint64_t reseed_base = mix_seed(cfg.seed, seed_tag::kColumnReseed);
  detail::normalize_or_reseed_columns(w, reseed_base);

  const double xnorm2 = sum_squares(x);
  const double cnorm = clean_ref ? frobenius_norm(*clean_ref) : 0.0;
  const double cnorm2 = cnorm * cnorm;

  DenseMatrix cross = matmul_tn(x, w);
  DenseMatrix gram = matmul_tn(w, w);
  double prev_obj = std::numeric_limits<double>::quiet_NaN();

  while (res.sweeps < cfg.n_iter_max) {
    res.factors = fast_hals_step(x, std::move(res.factors), gram, cross,
                                 mix_seed(reseed_base, res.sweeps));
    ++res.sweeps;

    cross = matmul_tn(x, w);
    gram = matmul_tn(w, w);
    DenseMatrix gramh = matmul_tn(h, h);
    const double obj = detail::objective_from_grams(xnorm2, h, cross, gram, gramh);
    res.objective.push_back(obj);
    if (clean_ref) {
      DenseMatrix crossc = matmul_tn(*clean_ref, w);
      const double err2 = detail::objective_from_grams(cnorm2, h, crossc, gram, gramh);
      res.clean_rre.push_back(std::sqrt(err2) / cnorm);
    }

    if (res.sweeps > 1 && detail::rel_change_below(prev_obj, obj, cfg.tol)) break;
    prev_obj = obj;
  }
  return res;
}

// Weighted multiplicative solver for sum_ij g_ij (x - W H^T)_ij^2:
//   W <- W .* [(G.*X) H] ./ [(G.*(W H^T)) H + eps]
//   H <- H .* [(G.*X)^T W] ./ [(G.*(W H^T))^T W + eps]
// G is recomputed from the residual at the top of every iteration (full
// IRLS); W H^T is refreshed between the two updates. With scheme none this
// is exactly the Lee–Seung Frobenius update.
inline SolveResult solve_weighted_nmf(const DenseMatrix& x, const WeightScheme& scheme,
                                      const SolveConfig& cfg, const FactorPair* warm = nullptr,
                                      const DenseMatrix* clean_ref = nullptr) {
  detail::check_nonneg(x, "solve_weighted_nmf");
  detail::check_config(x, cfg);
  if (clean_ref && !clean_ref->same_shape(x)) throw ShapeError("solve_weighted_nmf: clean_ref shape");

  SolveResult res;
  res.factors = warm ? *warm : init_factors(x, cfg);
  DenseMatrix& w = res.factors.w;
  DenseMatrix& h = res.factors.h;
  if (w.rows() != x.rows() || h.rows() != x.cols() || w.cols() != h.cols()) {
    throw ShapeError("solve_weighted_nmf: warm factor shape mismatch");
  }

  const std::size_t m = x.rows();
  const std::size_t n = x.cols();
  const std::size_t r = w.cols();
  const double eps = scheme.epsilon;
  const double cnorm = clean_ref ? frobenius_norm(*clean_ref) : 0.0;

  DenseMatrix approx(m, n), gx(m, n), ga(m, n);
  DenseMatrix num_w(m, r), den_w(m, r), num_h(n, r), den_h(n, r);
  double prev_obj = std::numeric_limits<double>::quiet_NaN();

  auto record = [&](const DenseMatrix& g) {
    detail::CompensatedSum s;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x.values()[i] - approx.values()[i];
      s.add(g.values()[i] * d * d);
    }
    res.objective.push_back(s.value());
    if (clean_ref) {
      detail::CompensatedSum c;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = clean_ref->values()[i] - approx.values()[i];
        c.add(d * d);
      }
      res.clean_rre.push_back(std::sqrt(c.value()) / cnorm);
    }
  };

  while (res.sweeps < cfg.n_iter_max) {
    detail::matmul_nt_into(w, h, approx);
    DenseMatrix g = compute_weights(scheme, x, approx);

    if (res.sweeps > 0) {
      record(g);  // objective after the previous iteration, with current weights
      const double obj = res.objective.back();
      if (res.sweeps > 1 && detail::rel_change_below(prev_obj, obj, cfg.tol)) break;
      prev_obj = obj;
    }

    for (std::size_t i = 0; i < x.size(); ++i) {
      gx.values()[i] = g.values()[i] * x.values()[i];
      ga.values()[i] = g.values()[i] * approx.values()[i];
    }
    detail::matmul_into(gx, h, num_w);
    detail::matmul_into(ga, h, den_w);
    for (std::size_t i = 0; i < w.size(); ++i) {
      w.values()[i] *= num_w.values()[i] / (den_w.values()[i] + eps);
    }

    detail::matmul_nt_into(w, h, approx);
    for (std::size_t i = 0; i < x.size(); ++i) {
      ga.values()[i] = g.values()[i] * approx.values()[i];
    }
    detail::matmul_tn_into(gx, w, num_h);
    detail::matmul_tn_into(ga, w, den_h);
    for (std::size_t i = 0; i < h.size(); ++i) {
      h.values()[i] *= num_h.values()[i] / (den_h.values()[i] + eps);
    }
    ++res.sweeps;
  }

  // objective for the final iteration
  if (res.sweeps > 0 && res.objective.size() < res.sweeps) {
    detail::matmul_nt_into(w, h, approx);
    DenseMatrix g = compute_weights(scheme, x, approx);
    record(g);
  }
  return res;
}

}  // namespace robustnmf
