#pragma once

#include <cmath>
#include <string>

#include "robustnmf/errors.hpp"
#include "robustnmf/matrix.hpp"

namespace robustnmf {

enum class WeightKind { kNone, kCim, kHuber, kL1, kL21 };

// Which matrix the CIM bandwidth sigma^2 is the variance of. The residual
// reading keeps the bandwidth adaptive across iterations and is the default;
// the data reading is kept selectable.
enum class CimSigmaSource { kResidual, kData };

struct WeightScheme {
  WeightKind kind = WeightKind::kNone;
  double epsilon = 1e-12;
  CimSigmaSource cim_sigma_source = CimSigmaSource::kResidual;
};

inline const char* to_string(WeightKind k) {
  switch (k) {
    case WeightKind::kNone: return "none";
    case WeightKind::kCim: return "cim";
    case WeightKind::kHuber: return "huber";
    case WeightKind::kL1: return "l1";
    case WeightKind::kL21: return "l21";
  }
  return "?";
}

inline WeightKind parse_weight_kind(const std::string& s) {
  if (s == "none") return WeightKind::kNone;
  if (s == "cim") return WeightKind::kCim;
  if (s == "huber") return WeightKind::kHuber;
  if (s == "l1") return WeightKind::kL1;
  if (s == "l21") return WeightKind::kL21;
  throw std::invalid_argument("unknown weight scheme: " + s);
}

namespace detail {

// Two-pass population variance; stable against cancellation.
inline double population_variance(const DenseMatrix& m) {
  CompensatedSum mean_acc;
  for (double v : m.values()) mean_acc.add(v);
  const double mean = mean_acc.value() / static_cast<double>(m.size());
  CompensatedSum var_acc;
  for (double v : m.values()) {
    const double d = v - mean;
    var_acc.add(d * d);
  }
  return var_acc.value() / static_cast<double>(m.size());
}

}  // namespace detail

// Weight matrix G from the residual x - approx under the selected scheme.
//   none  : G = 1
//   cim   : G = exp(-r^2 / sigma^2), sigma^2 the variance of the residual
//           (or of x, per cim_sigma_source); sigma^2 = 0 degenerates to 1.
//   huber : G = 1 for |r| <= delta, delta/|r| beyond; delta = median |r|.
//   l1    : G = 1 / max(|r|, eps)
//   l21   : G = 1 / max(||r_col||_2, eps), constant within each column.
// For none/cim/huber every entry lies in (0, 1]; l1/l21 are positive finite.
inline DenseMatrix compute_weights(const WeightScheme& scheme, const DenseMatrix& x,
                                   const DenseMatrix& approx) {
  if (!x.same_shape(approx)) throw ShapeError("compute_weights: shape mismatch");
  const std::size_t rows = x.rows();
  const std::size_t cols = x.cols();
  DenseMatrix g(rows, cols, 1.0);
  if (scheme.kind == WeightKind::kNone) return g;

  DenseMatrix resid = elementwise(x, approx, ElementOp::kSub);
  const double eps = scheme.epsilon;

  switch (scheme.kind) {
    case WeightKind::kCim: {
      const double sigma2 = scheme.cim_sigma_source == CimSigmaSource::kResidual
                                ? detail::population_variance(resid)
                                : detail::population_variance(x);
      if (sigma2 <= 0.0) return g;  // perfect fit: exp(-0/0+) limit
      for (std::size_t i = 0; i < resid.size(); ++i) {
        const double r = resid.values()[i];
        const double t = std::min(r * r / sigma2, 700.0);  // keep exp() > 0
        g.values()[i] = std::exp(-t);
      }
      break;
    }
    case WeightKind::kHuber: {
      DenseMatrix absr(rows, cols);
      for (std::size_t i = 0; i < resid.size(); ++i) absr.values()[i] = std::abs(resid.values()[i]);
      const double delta = global_median(absr);
      if (delta > 0.0) {
        for (std::size_t i = 0; i < absr.size(); ++i) {
          const double a = absr.values()[i];
          g.values()[i] = a <= delta ? 1.0 : delta / a;
        }
      } else {
        // majority-perfect fit: exact zeros keep weight 1, the rest decay
        for (std::size_t i = 0; i < absr.size(); ++i) {
          const double a = absr.values()[i];
          g.values()[i] = a == 0.0 ? 1.0 : std::min(1.0, eps / a);
        }
      }
      break;
    }
    case WeightKind::kL1: {
      for (std::size_t i = 0; i < resid.size(); ++i) {
        g.values()[i] = 1.0 / std::max(std::abs(resid.values()[i]), eps);
      }
      break;
    }
    case WeightKind::kL21: {
      for (std::size_t j = 0; j < cols; ++j) {
        detail::CompensatedSum s;
        for (std::size_t i = 0; i < rows; ++i) {
          const double r = resid(i, j);
          s.add(r * r);
        }
        const double w = 1.0 / std::max(std::sqrt(s.value()), eps);
        for (std::size_t i = 0; i < rows; ++i) g(i, j) = w;
      }
      break;
    }
    case WeightKind::kNone:
      break;
  }
  return g;
}

}  // namespace robustnmf
