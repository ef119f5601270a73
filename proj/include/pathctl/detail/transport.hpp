#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "pathctl/detail/numeric.hpp"
#include "pathctl/lq_params.hpp"

namespace pathctl {

/// Coefficient tables of the quadratic ansatz
///   V = C0(t) y^2/2 + y int C1(t,th) z + int int C2(t,th1,th2) z z + C3(t)
/// sampled on a SolverGrid. Shared by the single-agent and game solvers.
struct AnsatzTables {
  SolverGrid grid;
  std::vector<double> c0;  // [n]
  std::vector<double> c1;  // [n][j]
  std::vector<double> c2;  // [n][i][j]
  std::vector<double> c3;  // [n]

  explicit AnsatzTables(const SolverGrid& g)
      : grid(g),
        c0(g.n_t, 0.0),
        c1(g.n_t * g.n_theta, 0.0),
        c2(g.n_t * g.n_theta * g.n_theta, 0.0),
        c3(g.n_t, 0.0) {}

  double& at1(std::size_t n, std::size_t j) { return c1[n * grid.n_theta + j]; }
  double at1(std::size_t n, std::size_t j) const { return c1[n * grid.n_theta + j]; }
  double& at2(std::size_t n, std::size_t i, std::size_t j) {
    return c2[(n * grid.n_theta + i) * grid.n_theta + j];
  }
  double at2(std::size_t n, std::size_t i, std::size_t j) const {
    return c2[(n * grid.n_theta + i) * grid.n_theta + j];
  }

  /// G(t, th) = C1(t, th) + 2 C2(t, th, 0); the kernel of the feedback law.
  double feedback_kernel(std::size_t n, std::size_t j) const {
    return at1(n, j) + 2.0 * at2(n, j, grid.delay_steps());
  }

  friend bool operator==(const AnsatzTables&, const AnsatzTables&) = default;
};

namespace detail {

/**
 * Reaction terms of the coefficient system for N symmetric players, with
 * B = C0 + C1(t,0) and share = 1 - 1/N:
 *
 *   C0' = K^2 + 2 K B / N - eps,           K = q + share * B
 *   (d_t - d_th) C1 = kappa (K + share B / N) G
 *   (d_t - d_th1 - d_th2) C2 = (1 - 1/N^2)/2 G G
 *   C3' = -share sigma^2/2 C0
 *
 * inv_n = 0 recovers the single-agent system.
 */
struct CouplingModel {
  double inv_n = 0.0;

  double share() const noexcept { return 1.0 - inv_n; }
  double gain(double q, double b) const noexcept { return q + share() * b; }
  double riccati_rate(const LQParams& p, double b) const noexcept {
    const double k = gain(p.q, b);
    return k * k + 2.0 * k * b * inv_n - p.eps;
  }
  double cross_rate(double q, double b) const noexcept { return gain(q, b) + share() * b * inv_n; }
  double quadratic_rate() const noexcept { return 0.5 * (1.0 - inv_n * inv_n); }
  double diffusion_share() const noexcept { return share(); }
};

inline void check_finite(double v, const char* what, double t) {
  if (!std::isfinite(v)) throw NumericalBlowUp(std::string("non-finite ") + what + " during backward march", t);
}

/**
 * Backward march from T to 0. C1 and C2 are advected exactly one cell per
 * step along their characteristics (dth/dt = -1), with reaction terms taken
 * at the foot of the characteristic on the known later level. Rows at
 * th = -tau are boundary data from the same-time C0 and C1. C0 uses explicit
 * midpoint, C3 the trapezoid rule on the solved C0.
 */
inline AnsatzTables march_backward(const LQParams& p, const SolverGrid& g, const CouplingModel& model,
                                   double kappa) {
  AnsatzTables s(g);
  const std::size_t last = g.n_t - 1;
  const std::size_t m = g.delay_steps();
  const double dt = g.dt;

  // Final conditions; C1(T, -tau) = 0 even when c != 0.
  s.c0[last] = p.c;

  std::vector<double> kernel(g.n_theta);
  for (std::size_t step = last; step-- > 0;) {
    const std::size_t n = step;
    const std::size_t up = n + 1;
    const double t = g.time(n);

    const double b_up = s.c0[up] + s.at1(up, m);
    const double cross = kappa * model.cross_rate(p.q, b_up);
    const double quad = model.quadratic_rate();
    for (std::size_t j = 0; j < g.n_theta; ++j) kernel[j] = s.feedback_kernel(up, j);

    for (std::size_t j = 1; j <= m; ++j) {
      s.at1(n, j) = s.at1(up, j - 1) - dt * cross * kernel[j - 1];
    }
    for (std::size_t i = 1; i <= m; ++i) {
      for (std::size_t j = i; j <= m; ++j) {
        const double v = s.at2(up, i - 1, j - 1) - dt * quad * kernel[i - 1] * kernel[j - 1];
        s.at2(n, i, j) = v;
        s.at2(n, j, i) = v;
      }
    }

    const double rate_up = model.riccati_rate(p, b_up);
    const double c0_half = s.c0[up] - 0.5 * dt * rate_up;
    const double c1_half = 0.5 * (s.at1(n, m) + s.at1(up, m));
    s.c0[n] = s.c0[up] - dt * model.riccati_rate(p, c0_half + c1_half);
    check_finite(s.c0[n], "C0", t);

    s.at1(n, 0) = -s.c0[n];
    for (std::size_t j = 0; j <= m; ++j) {
      check_finite(s.at1(n, j), "C1", t);
      s.at2(n, j, 0) = -0.5 * s.at1(n, j);
      s.at2(n, 0, j) = -0.5 * s.at1(n, j);
    }
    for (std::size_t i = 1; i <= m; ++i) check_finite(s.at2(n, i, m), "C2", t);

    s.c3[n] = s.c3[up] + dt * model.diffusion_share() * 0.5 * p.sigma * p.sigma * 0.5 * (s.c0[n] + s.c0[up]);
  }
  return s;
}

}  // namespace detail
}  // namespace pathctl
