#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "pathctl/detail/transport.hpp"
#include "pathctl/path.hpp"

namespace pathctl {

/// Control history on [t - tau, t): window[k] = z(t - tau + k dt), k < tau/dt.
using ControlWindow = std::span<const double>;

namespace detail {

inline std::size_t time_index(const SolverGrid& g, double t) {
  const auto n = grid_steps(t, g.dt, "time");
  if (n < 0 || n >= static_cast<std::int64_t>(g.n_t)) throw std::out_of_range("time outside [0, T]");
  return static_cast<std::size_t>(n);
}

/// Samples `z` on [t - tau, t) at the solver step. Nodes before z.t0() read as
/// zero; the path must reach at least t - dt.
inline std::vector<double> extract_window(const SampledPath& z, const SolverGrid& g, double t) {
  if (z.dim() != 1) throw DimensionError("control history must be scalar");
  if (!same_step(z.dt(), g.dt)) throw GridAlignmentError("control history step differs from solver step");
  const std::size_t m = g.delay_steps();
  if (z.end_time() < t - g.dt - kGridTolerance * g.dt) {
    throw std::invalid_argument("insufficient control history: path ends before t - dt");
  }
  z.index_of(t);  // alignment check
  std::vector<double> w(m);
  const double start = t - static_cast<double>(m) * g.dt;
  for (std::size_t k = 0; k < m; ++k) w[k] = z.scalar_at(start + static_cast<double>(k) * g.dt);
  return w;
}

/// Quadratic-ansatz evaluation at one time node. All theta integrals are
/// left-endpoint Riemann sums over the window, so the current control value
/// never enters them.
class AnsatzEvaluator {
 public:
  AnsatzEvaluator(const AnsatzTables& tables, std::size_t n) : tab_(tables), n_(n) {
    if (n >= tables.grid.n_t) throw std::out_of_range("time index outside grid");
  }

  std::size_t window_size() const noexcept { return tab_.grid.delay_steps(); }

  void check(ControlWindow w) const {
    if (w.size() != window_size()) throw std::invalid_argument("control window has the wrong length");
  }

  double c0() const { return tab_.c0[n_]; }
  double c1_at_zero() const { return tab_.at1(n_, window_size()); }

  double linear(ControlWindow w) const {
    double s = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) s += tab_.at1(n_, k) * w[k];
    return s * tab_.grid.dt;
  }

  double kernel_integral(ControlWindow w) const {
    double s = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) s += tab_.feedback_kernel(n_, k) * w[k];
    return s * tab_.grid.dt;
  }

  /// int C2(t, th, col) z dth for a fixed second argument column.
  double column_integral(ControlWindow w, std::size_t col) const {
    double s = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) s += tab_.at2(n_, k, col) * w[k];
    return s * tab_.grid.dt;
  }

  double quadratic(ControlWindow w) const {
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < w.size(); ++j) row += tab_.at2(n_, i, j) * w[j];
      s += row * w[i];
    }
    return s * tab_.grid.dt * tab_.grid.dt;
  }

  double value(double y, ControlWindow w) const {
    check(w);
    return 0.5 * c0() * y * y + y * linear(w) + quadratic(w) + tab_.c3[n_];
  }

  double space_derivative(double y, ControlWindow w) const {
    check(w);
    return c0() * y + linear(w);
  }

  /// Time derivative of the ansatz along a flat extension with the current
  /// control set to `current`.
  double time_derivative(double y, ControlWindow w, double current) const {
    check(w);
    const std::size_t m = window_size();
    const double dt = tab_.grid.dt;
    double transport1 = 0.0;
    for (std::size_t k = 0; k < m; ++k) transport1 += rate1(k) * w[k];
    transport1 *= dt;
    double transport2 = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < m; ++j) row += rate2(i, j) * w[j];
      transport2 += row * w[i];
    }
    transport2 *= dt * dt;
    const double delayed = w.empty() ? 0.0 : w[0];
    return 0.5 * rate0() * y * y + y * (c1_at_zero() * current - tab_.at1(n_, 0) * delayed + transport1) +
           2.0 * current * column_integral(w, m) - 2.0 * delayed * column_integral(w, 0) + transport2 +
           rate3();
  }

  // Discrete time derivatives. Interior nodes difference forward to the next
  // level along the characteristic; the final node differences backward.

  double rate0() const { return scalar_rate(tab_.c0); }
  double rate3() const { return scalar_rate(tab_.c3); }

  /// (d_t - d_th) C1 at (t_n, th_j), j < m.
  double rate1(std::size_t j) const {
    const double dt = tab_.grid.dt;
    if (n_ + 1 < tab_.grid.n_t) {
      if (j >= 1) return (tab_.at1(n_ + 1, j - 1) - tab_.at1(n_, j)) / dt;
      return (tab_.at1(n_ + 1, 0) - tab_.at1(n_, 1)) / dt;
    }
    return (tab_.at1(n_, j) - tab_.at1(n_ - 1, j + 1)) / dt;
  }

  /// (d_t - d_th1 - d_th2) C2 at (t_n, th_i, th_j), i, j < m.
  double rate2(std::size_t i, std::size_t j) const {
    const double dt = tab_.grid.dt;
    if (n_ + 1 < tab_.grid.n_t) {
      if (i >= 1 && j >= 1) return (tab_.at2(n_ + 1, i - 1, j - 1) - tab_.at2(n_, i, j)) / dt;
      return (tab_.at2(n_ + 1, i, j) - tab_.at2(n_, i + 1, j + 1)) / dt;
    }
    return (tab_.at2(n_, i, j) - tab_.at2(n_ - 1, i + 1, j + 1)) / dt;
  }

 private:
  double scalar_rate(const std::vector<double>& v) const {
    const double dt = tab_.grid.dt;
    if (n_ + 1 < tab_.grid.n_t) return (v[n_ + 1] - v[n_]) / dt;
    return (v[n_] - v[n_ - 1]) / dt;
  }

  const AnsatzTables& tab_;
  std::size_t n_;
};

}  // namespace detail
}  // namespace pathctl
