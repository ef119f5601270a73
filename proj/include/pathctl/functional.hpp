/**
 * @file functional.hpp
 * @brief Finite-difference functional derivatives on sampled paths.
 *
 * Time derivatives use a one-sided flat extension; space derivatives bump the
 * last value with central stencils. The discrete functional Itô defect and a
 * predictability test are built on top of them.
 */
#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "pathctl/path.hpp"

namespace pathctl {

using Functional = std::function<double(const SampledPath&)>;
using PairFunctional = std::function<double(const PathPair&)>;

enum class DerivativeMethod { forward_time, central_space };

struct DerivativeEstimate {
  double value;
  double step;
  DerivativeMethod method;
};

/// 1e-4 * max(1, ||p||_inf).
inline double default_space_step(const SampledPath& p) { return 1e-4 * std::max(1.0, sup_norm(p)); }

/// True when |a - b| <= max(rel * max(|a|,|b|), abs).
inline bool nearly_equal(double a, double b, double rel = 1e-8, double abs = 1e-10) {
  return std::abs(a - b) <= std::max(rel * std::max(std::abs(a), std::abs(b)), abs);
}

/// (f(Y_{t,delta}) - f(Y_t)) / delta. A zero step means one grid step.
inline DerivativeEstimate delta_t(const Functional& f, const SampledPath& p, double step = 0.0) {
  if (step == 0.0) step = p.dt();
  if (!(step > 0.0)) throw std::invalid_argument("delta_t: step must be positive");
  return {(f(flat_extend(p, step)) - f(p)) / step, step, DerivativeMethod::forward_time};
}

/// One-sided Richardson extrapolation 2 D(step) - D(2 step).
inline DerivativeEstimate delta_t_richardson(const Functional& f, const SampledPath& p, double step = 0.0) {
  if (step == 0.0) step = p.dt();
  const double base = f(p);
  const double d1 = (f(flat_extend(p, step)) - base) / step;
  const double d2 = (f(flat_extend(p, 2.0 * step)) - base) / (2.0 * step);
  return {2.0 * d1 - d2, step, DerivativeMethod::forward_time};
}

inline DerivativeEstimate delta_x(const Functional& f, const SampledPath& p, double h = 0.0,
                                  std::size_t coord = 0) {
  if (h == 0.0) h = default_space_step(p);
  if (!(h > 0.0)) throw std::invalid_argument("delta_x: step must be positive");
  const double up = f(bump_coordinate(p, coord, h));
  const double down = f(bump_coordinate(p, coord, -h));
  return {(up - down) / (2.0 * h), h, DerivativeMethod::central_space};
}

inline DerivativeEstimate delta_xx(const Functional& f, const SampledPath& p, double h = 0.0,
                                   std::size_t coord = 0) {
  if (h == 0.0) h = default_space_step(p);
  if (!(h > 0.0)) throw std::invalid_argument("delta_xx: step must be positive");
  const double up = f(bump_coordinate(p, coord, h));
  const double mid = f(p);
  const double down = f(bump_coordinate(p, coord, -h));
  return {(up - 2.0 * mid + down) / (h * h), h, DerivativeMethod::central_space};
}

inline std::vector<double> gradient(const Functional& f, const SampledPath& p, double h = 0.0) {
  std::vector<double> g(p.dim());
  for (std::size_t d = 0; d < p.dim(); ++d) g[d] = delta_x(f, p, h, d).value;
  return g;
}

/// Row-major dim x dim Hessian of the last-value bump response.
inline std::vector<double> hessian(const Functional& f, const SampledPath& p, double h = 0.0) {
  if (h == 0.0) h = default_space_step(p);
  const std::size_t n = p.dim();
  std::vector<double> hess(n * n);
  for (std::size_t a = 0; a < n; ++a) {
    hess[a * n + a] = delta_xx(f, p, h, a).value;
    for (std::size_t b = a + 1; b < n; ++b) {
      auto shifted = [&](double sa, double sb) {
        std::vector<double> e(n, 0.0);
        e[a] = sa;
        e[b] = sb;
        return f(bump(p, e));
      };
      const double v = (shifted(h, h) - shifted(h, -h) - shifted(-h, h) + shifted(-h, -h)) / (4.0 * h * h);
      hess[a * n + b] = v;
      hess[b * n + a] = v;
    }
  }
  return hess;
}

// Reference functionals used throughout the tests and the CLI.

inline double last_value(const SampledPath& p) { return p.last_scalar(); }

inline double elapsed_time(const SampledPath& p) { return p.end_time(); }

/// Left-endpoint Riemann sum of the first coordinate over [t0, t). The node at
/// t carries no weight, so the functional ignores the last value.
inline double running_integral(const SampledPath& p) {
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < p.size(); ++k) sum += p[k];
  return sum * p.dt();
}

/**
 * Discrete defect of the functional Itô formula along `x`:
 *
 *   f(X_T) - f(X_0) - sum_k [ Dt f dt + Dx f dx_k + 1/2 Dxx f d<x>_k ]
 *
 * with every derivative taken numerically on the prefix X_{t_k}. `qv` holds
 * the accumulated quadratic variation of each coordinate on the same grid;
 * coordinates are treated as uncorrelated.
 */
inline double ito_residual(const Functional& f, const SampledPath& x, const SampledPath& qv) {
  if (x.size() != qv.size() || x.dim() != qv.dim() || !detail::same_step(x.dt(), qv.dt()) ||
      std::abs(x.t0() - qv.t0()) > detail::kGridTolerance * x.dt()) {
    throw GridAlignmentError("ito_residual: path and quadratic variation grids differ");
  }
  const std::size_t n = x.size();
  double expansion = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const SampledPath head = prefix(x, k);
    double term = delta_t(f, head).value * x.dt();
    for (std::size_t d = 0; d < x.dim(); ++d) {
      const double dx = x.at(k + 1)[d] - x.at(k)[d];
      const double dq = qv.at(k + 1)[d] - qv.at(k)[d];
      term += delta_x(f, head, 0.0, d).value * dx + 0.5 * delta_xx(f, head, 0.0, d).value * dq;
    }
    expansion += term;
  }
  return f(x) - f(prefix(x, 0)) - expansion;
}

/// Checks numerically that bumping the last control value by each h leaves
/// `f` unchanged (relative 1e-8 or absolute 1e-10).
inline bool predictability_check(const PairFunctional& f, const PathPair& p, std::span<const double> h_set) {
  if (h_set.empty()) throw std::invalid_argument("predictability_check: empty bump set");
  const double base = f(p);
  for (double h : h_set) {
    if (h == 0.0) throw std::invalid_argument("predictability_check: bumps must be nonzero");
    for (std::size_t d = 0; d < p.control.dim(); ++d) {
      const PathPair bumped(p.state, bump_coordinate(p.control, d, h));
      if (!nearly_equal(f(bumped), base)) return false;
    }
  }
  return true;
}

}  // namespace pathctl
