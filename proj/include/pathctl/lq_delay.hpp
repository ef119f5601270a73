/**
 * @file lq_delay.hpp
 * @brief Value functional of the delayed linear-quadratic control problem.
 *
 * The value functional is quadratic in the current state and in the control
 * history over the last tau time units:
 *
 *   V(t, y, Z) = F0(t) y^2/2 + y int F1(t, th) z_{t+th} dth
 *              + int int F2(t, th1, th2) z_{t+th1} z_{t+th2} dth1 dth2 + F3(t)
 *
 * with th in [-tau, 0). The coefficient surfaces solve a backward system of
 * transport equations with Riccati-type reaction terms; solve_f_system()
 * integrates it on a characteristic-aligned grid.
 */
#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pathctl/detail/ansatz.hpp"
#include "pathctl/detail/transport.hpp"
#include "pathctl/lq_params.hpp"
#include "pathctl/path.hpp"

namespace pathctl {

inline constexpr const char* kSolverVersion = "pathctl-solver 1.0";

/// Factor on the cross reaction term of the F1 equation. `one` is what the
/// coefficient matching gives; `half` is kept runnable for comparison.
enum class CrossFactor { half, one };

inline double cross_factor_value(CrossFactor k) { return k == CrossFactor::half ? 0.5 : 1.0; }

struct Surfaces {
  LQParams params;
  double cross_factor = 1.0;
  AnsatzTables tables;
  std::vector<std::string> warnings;

  const SolverGrid& grid() const noexcept { return tables.grid; }
  double f0(std::size_t n) const { return tables.c0[n]; }
  double f1(std::size_t n, std::size_t j) const { return tables.at1(n, j); }
  double f2(std::size_t n, std::size_t i, std::size_t j) const { return tables.at2(n, i, j); }
  double f3(std::size_t n) const { return tables.c3[n]; }
};

inline Surfaces solve_f_system(const LQParams& params, const SolverGrid& grid, double cross_factor = 1.0) {
  params.validate();
  if (!(grid == SolverGrid::make(params, grid.dt))) throw GridAlignmentError("solver grid does not match parameters");
  Surfaces s{params, cross_factor, detail::march_backward(params, grid, detail::CouplingModel{0.0}, cross_factor), {}};
  if (params.c != 0.0) {
    s.warnings.emplace_back(
        "c != 0: final condition F1(T,-tau) = 0 conflicts with boundary F1(T,-tau) = -c; final condition kept at t = T");
  }
  return s;
}

inline Surfaces solve_f_system(const LQParams& params, const SolverGrid& grid, CrossFactor k) {
  return solve_f_system(params, grid, cross_factor_value(k));
}

struct ValueDerivatives {
  double dx;          // d/dy V
  double dxx;         // d^2/dy^2 V
  double dt_removed;  // time derivative with the current control set to zero
};

struct HamiltonianInputs {
  double p;
  double gamma;
  double alpha;
};

/// sigma^2/2 gamma + (alpha - z_{t-tau}) p + alpha^2/2 + q alpha y + eps/2 y^2.
inline double hamiltonian(const LQParams& prm, double y, double delayed_control, const HamiltonianInputs& in) {
  return 0.5 * prm.sigma * prm.sigma * in.gamma + (in.alpha - delayed_control) * in.p + 0.5 * in.alpha * in.alpha +
         prm.q * in.alpha * y + 0.5 * prm.eps * y * y;
}

// Window-based evaluation at a time index. These are the fast paths used by
// the simulator; the SampledPath overloads below resolve (t, z) into them.

inline double eval_value(const Surfaces& s, std::size_t n, double y, ControlWindow w) {
  return detail::AnsatzEvaluator(s.tables, n).value(y, w);
}

inline ValueDerivatives eval_derivatives(const Surfaces& s, std::size_t n, double y, ControlWindow w) {
  detail::AnsatzEvaluator ev(s.tables, n);
  return {ev.space_derivative(y, w), ev.c0(), ev.time_derivative(y, w, 0.0)};
}

inline double optimal_control(const Surfaces& s, std::size_t n, double y, ControlWindow w) {
  detail::AnsatzEvaluator ev(s.tables, n);
  ev.check(w);
  return -(ev.c0() + ev.c1_at_zero() + s.params.q) * y - ev.kernel_integral(w);
}

inline double hjb_residual(const Surfaces& s, std::size_t n, double y, ControlWindow w) {
  if (n + 1 >= s.grid().n_t) throw std::domain_error("hjb_residual: t must be interior (t < T)");
  const auto d = eval_derivatives(s, n, y, w);
  const double a = optimal_control(s, n, y, w);
  const double delayed = w.empty() ? 0.0 : w[0];
  const auto& p = s.params;
  return d.dt_removed + 0.5 * p.sigma * p.sigma * d.dxx - delayed * d.dx - 0.5 * a * a + 0.5 * p.eps * y * y;
}

/// Time derivative with the last control substituted by alpha, plus the
/// Hamiltonian at alpha: the quantity minimised by the HJB equation.
inline double hamiltonian_objective(const Surfaces& s, std::size_t n, double y, ControlWindow w, double alpha) {
  detail::AnsatzEvaluator ev(s.tables, n);
  const double p = ev.space_derivative(y, w);
  const double delayed = w.empty() ? 0.0 : w[0];
  return ev.time_derivative(y, w, alpha) + hamiltonian(s.params, y, delayed, {p, ev.c0(), alpha});
}

struct HamiltonianMinimum {
  double min_value;
  double argmin;
};

inline HamiltonianMinimum modified_hamiltonian(const Surfaces& s, std::size_t n, double y, ControlWindow w,
                                               std::span<const double> alpha_grid) {
  if (alpha_grid.empty()) throw std::invalid_argument("modified_hamiltonian: empty action grid");
  HamiltonianMinimum best{std::numeric_limits<double>::infinity(), alpha_grid.front()};
  for (double a : alpha_grid) {
    const double v = hamiltonian_objective(s, n, y, w, a);
    if (v < best.min_value) best = {v, a};
  }
  return best;
}

// Path-based overloads: t must be a grid node, z a scalar control path on the
// solver step covering at least up to t - dt.

inline double eval_value(const Surfaces& s, double t, double y, const SampledPath& z) {
  const auto n = detail::time_index(s.grid(), t);
  return eval_value(s, n, y, detail::extract_window(z, s.grid(), t));
}

inline ValueDerivatives eval_derivatives(const Surfaces& s, double t, double y, const SampledPath& z) {
  const auto n = detail::time_index(s.grid(), t);
  return eval_derivatives(s, n, y, detail::extract_window(z, s.grid(), t));
}

inline double optimal_control(const Surfaces& s, double t, double y, const SampledPath& z) {
  const auto n = detail::time_index(s.grid(), t);
  return optimal_control(s, n, y, detail::extract_window(z, s.grid(), t));
}

inline double hjb_residual(const Surfaces& s, double t, double y, const SampledPath& z) {
  const auto n = detail::time_index(s.grid(), t);
  return hjb_residual(s, n, y, detail::extract_window(z, s.grid(), t));
}

inline HamiltonianMinimum modified_hamiltonian(const Surfaces& s, double t, double y, const SampledPath& z,
                                               std::span<const double> alpha_grid) {
  const auto n = detail::time_index(s.grid(), t);
  return modified_hamiltonian(s, n, y, detail::extract_window(z, s.grid(), t), alpha_grid);
}

/// Evenly spaced action grid lo, lo+step, ..., hi.
inline std::vector<double> action_grid(double lo, double hi, double step) {
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> g(count);
  for (std::size_t k = 0; k < count; ++k) g[k] = lo + static_cast<double>(k) * step;
  return g;
}

}  // namespace pathctl
