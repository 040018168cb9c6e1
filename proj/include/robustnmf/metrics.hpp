#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <vector>

#include "robustnmf/errors.hpp"
#include "robustnmf/matrix.hpp"
#include "robustnmf/rng.hpp"
#include "robustnmf/solver.hpp"

namespace robustnmf {

// One class id per sample (per column of X).
using LabelVector = std::vector<int>;

// Relative reconstruction error ||x_clean - W H^T||_F / ||x_clean||_F,
// evaluated against the uncorrupted matrix.
inline double rre(const DenseMatrix& x_clean, const FactorPair& f) {
  if (f.w.rows() != x_clean.rows() || f.h.rows() != x_clean.cols()) {
    throw ShapeError("rre: factor shape mismatch");
  }
  const double denom = frobenius_norm(x_clean);
  if (denom == 0.0) throw NumericError("rre: zero reference matrix");
  return std::sqrt(nmf_objective(x_clean, f)) / denom;
}

namespace detail {

inline double sq_dist(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double diff = a[i] - b[i];
    s += diff * diff;
  }
  return s;
}

// Map arbitrary integer ids to dense [0, k) in first-appearance order.
inline std::vector<int> compact_labels(const LabelVector& labels, std::size_t& k_out) {
  std::unordered_map<int, int> remap;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = remap.try_emplace(labels[i], static_cast<int>(remap.size()));
    out[i] = it->second;
  }
  k_out = remap.size();
  return out;
}

inline std::vector<std::vector<std::int64_t>> contingency(const std::vector<int>& a, std::size_t ka,
                                                          const std::vector<int>& b,
                                                          std::size_t kb) {
  std::vector<std::vector<std::int64_t>> c(ka, std::vector<std::int64_t>(kb, 0));
  for (std::size_t i = 0; i < a.size(); ++i) ++c[a[i]][b[i]];
  return c;
}

// Hungarian algorithm (potentials / augmenting paths, O(n^3)) on a square
// cost matrix; returns the column matched to each row.
inline std::vector<std::size_t> min_cost_assignment(
    const std::vector<std::vector<std::int64_t>>& cost) {
  const std::size_t n = cost.size();
  const std::int64_t inf = std::numeric_limits<std::int64_t>::max() / 4;
  std::vector<std::int64_t> u(n + 1, 0), v(n + 1, 0);
  std::vector<std::size_t> match(n + 1, n);  // match[col] = row
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::int64_t> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    std::vector<std::size_t> way(n + 1, n);
    std::size_t j0 = n;  // virtual start column
    match[n] = i;
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      std::int64_t delta = inf;
      std::size_t j1 = n;
      for (std::size_t j = 0; j < n; ++j) {
        if (used[j]) continue;
        const std::int64_t cur = cost[i0][j] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != n);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != n);
  }
  std::vector<std::size_t> row_to_col(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    if (match[j] != n) row_to_col[match[j]] = j;
  }
  return row_to_col;
}

}  // namespace detail

// k-means over the rows of h (one row per sample) with k-means++ seeding.
// Deterministic given the seed: ties in nearest-centroid assignment go to the
// lowest index and empty clusters are re-anchored at the farthest point.
inline LabelVector cluster_assign(const DenseMatrix& h, std::size_t k, std::uint64_t seed) {
  const std::size_t n = h.rows();
  const std::size_t d = h.cols();
  if (k < 1 || k > n) {
    throw std::invalid_argument("cluster_assign: k must be in [1, n_samples]");
  }
  constexpr std::size_t kMaxIter = 300;
  constexpr double kMoveTol = 1e-6;

  Rng rng(mix_seed(seed, seed_tag::kKmeans));
  std::vector<double> centroids(k * d, 0.0);
  std::vector<char> is_center(n, 0);

  // k-means++ seeding
  {
    std::size_t first = static_cast<std::size_t>(rng.next_index(n));
    std::copy_n(h.data() + first * d, d, centroids.begin());
    is_center[first] = 1;
    std::vector<double> dist2(n);
    for (std::size_t i = 0; i < n; ++i) {
      dist2[i] = detail::sq_dist(h.data() + i * d, centroids.data(), d);
    }
    for (std::size_t c = 1; c < k; ++c) {
      double total = 0.0;
      for (double v : dist2) total += v;
      std::size_t chosen = n;
      if (total > 0.0) {
        const double t = rng.next_double() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          acc += dist2[i];
          if (acc > t) {
            chosen = i;
            break;
          }
        }
        if (chosen == n) {  // fp slack on the last positive entry
          for (std::size_t i = n; i-- > 0;) {
            if (dist2[i] > 0.0) {
              chosen = i;
              break;
            }
          }
        }
      }
      if (chosen == n) {  // all points coincide with chosen centers
        for (std::size_t i = 0; i < n; ++i) {
          if (!is_center[i]) {
            chosen = i;
            break;
          }
        }
        if (chosen == n) chosen = 0;
      }
      std::copy_n(h.data() + chosen * d, d, centroids.begin() + c * d);
      is_center[chosen] = 1;
      for (std::size_t i = 0; i < n; ++i) {
        const double nd = detail::sq_dist(h.data() + i * d, centroids.data() + c * d, d);
        if (nd < dist2[i]) dist2[i] = nd;
      }
    }
  }

  LabelVector labels(n, 0);
  std::vector<double> sums(k * d);
  std::vector<std::size_t> counts(k);
  std::vector<double> next(k * d);

  for (std::size_t iter = 0; iter < kMaxIter; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_c = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const double dd = detail::sq_dist(h.data() + i * d, centroids.data() + c * d, d);
        if (dd < best) {
          best = dd;
          best_c = c;
        }
      }
      labels[i] = static_cast<int>(best_c);
    }

    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = static_cast<std::size_t>(labels[i]);
      ++counts[c];
      const double* p = h.data() + i * d;
      double* s = sums.data() + c * d;
      for (std::size_t j = 0; j < d; ++j) s[j] += p[j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        for (std::size_t j = 0; j < d; ++j) {
          next[c * d + j] = sums[c * d + j] / static_cast<double>(counts[c]);
        }
      } else {
        // re-anchor the empty cluster at the point farthest from its centroid
        double far_d = -1.0;
        std::size_t far_i = 0;
        for (std::size_t i = 0; i < n; ++i) {
          const std::size_t ci = static_cast<std::size_t>(labels[i]);
          const double dd = detail::sq_dist(h.data() + i * d, centroids.data() + ci * d, d);
          if (dd > far_d) {
            far_d = dd;
            far_i = i;
          }
        }
        std::copy_n(h.data() + far_i * d, d, next.begin() + c * d);
      }
    }

    double max_move = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      max_move = std::max(
          max_move, std::sqrt(detail::sq_dist(next.data() + c * d, centroids.data() + c * d, d)));
    }
    centroids.swap(next);
    if (max_move < kMoveTol) break;
  }

  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_c = 0;
    for (std::size_t c = 0; c < k; ++c) {
      const double dd = detail::sq_dist(h.data() + i * d, centroids.data() + c * d, d);
      if (dd < best) {
        best = dd;
        best_c = c;
      }
    }
    labels[i] = static_cast<int>(best_c);
  }
  return labels;
}

// Clustering accuracy under the best one-to-one cluster/class matching
// (Hungarian on the contingency matrix). Symmetric in its arguments and
// invariant under relabeling.
inline double accuracy(const LabelVector& pred, const LabelVector& truth) {
  if (pred.size() != truth.size()) throw ShapeError("accuracy: length mismatch");
  if (pred.empty()) throw ShapeError("accuracy: empty labels");
  std::size_t kp = 0, kt = 0;
  const std::vector<int> a = detail::compact_labels(pred, kp);
  const std::vector<int> b = detail::compact_labels(truth, kt);
  const std::size_t k = std::max(kp, kt);
  const auto c = detail::contingency(a, kp, b, kt);
  std::vector<std::vector<std::int64_t>> cost(k, std::vector<std::int64_t>(k, 0));
  for (std::size_t i = 0; i < kp; ++i) {
    for (std::size_t j = 0; j < kt; ++j) cost[i][j] = -c[i][j];
  }
  const auto assign = detail::min_cost_assignment(cost);
  std::int64_t matched = 0;
  for (std::size_t i = 0; i < kp; ++i) {
    if (assign[i] < kt) matched += c[i][assign[i]];
  }
  return static_cast<double>(matched) / static_cast<double>(pred.size());
}

// Normalized mutual information I(a;b)/sqrt(H(a) H(b)) with natural-log
// entropies. Degenerate single-cluster cases: 1 if both partitions are the
// single trivial cluster, 0 if only one is.
inline double nmi(const LabelVector& a_in, const LabelVector& b_in) {
  if (a_in.size() != b_in.size()) throw ShapeError("nmi: length mismatch");
  if (a_in.empty()) throw ShapeError("nmi: empty labels");
  std::size_t ka = 0, kb = 0;
  const std::vector<int> a = detail::compact_labels(a_in, ka);
  const std::vector<int> b = detail::compact_labels(b_in, kb);
  const auto c = detail::contingency(a, ka, b, kb);
  const double n = static_cast<double>(a.size());

  std::vector<double> pa(ka, 0.0), pb(kb, 0.0);
  for (std::size_t i = 0; i < ka; ++i) {
    for (std::size_t j = 0; j < kb; ++j) pa[i] += static_cast<double>(c[i][j]);
  }
  for (std::size_t j = 0; j < kb; ++j) {
    for (std::size_t i = 0; i < ka; ++i) pb[j] += static_cast<double>(c[i][j]);
  }
  double ha = 0.0, hb = 0.0, mi = 0.0;
  for (std::size_t i = 0; i < ka; ++i) {
    const double p = pa[i] / n;
    if (p > 0.0) ha -= p * std::log(p);
  }
  for (std::size_t j = 0; j < kb; ++j) {
    const double p = pb[j] / n;
    if (p > 0.0) hb -= p * std::log(p);
  }
  if (ha == 0.0 && hb == 0.0) return 1.0;
  if (ha == 0.0 || hb == 0.0) return 0.0;
  for (std::size_t i = 0; i < ka; ++i) {
    for (std::size_t j = 0; j < kb; ++j) {
      if (c[i][j] == 0) continue;
      const double pij = static_cast<double>(c[i][j]) / n;
      mi += pij * std::log(pij * n * n / (pa[i] * pb[j]));
    }
  }
  return std::clamp(mi / std::sqrt(ha * hb), 0.0, 1.0);
}

}  // namespace robustnmf
