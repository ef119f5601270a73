/**
 * @file oracle.hpp
 * @brief Exact optimum of the noise-free delayed LQ problem on a grid.
 *
 * With sigma = 0 the discretised state is an affine map of the control vector,
 *   x = x_free + A a,
 * so the discrete cost is a convex quadratic in a and its minimiser solves the
 * normal equations H a = -g directly.
 */
#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "pathctl/simulation.hpp"

namespace pathctl {

struct OracleResult {
  double optimum = 0.0;
  SampledPath control;  // a_0 .. a_{N-1} on [0, T - dt]
};

/// Discrete cost of an open-loop control sequence when sigma = 0.
inline double discrete_cost(const LQParams& params, const SimConfig& cfg, std::span<const double> controls) {
  const auto layout = detail::sim_layout(params, cfg);
  if (controls.size() != layout.steps) throw std::invalid_argument("discrete_cost: wrong number of controls");
  const std::size_t m = layout.delay_cells;
  const double dt = cfg.dt_sim;
  double x = cfg.y0;
  double running = 0.0;
  for (std::size_t k = 0; k < controls.size(); ++k) {
    const double a = controls[k];
    running += 0.5 * a * a + params.q * a * x + 0.5 * params.eps * x * x;
    const double delayed = k >= m ? controls[k - m] : layout.prehistory[k];
    x += (a - delayed) * dt;
  }
  return running * dt + 0.5 * params.c * x * x;
}

inline OracleResult deterministic_oracle(const LQParams& params, const SimConfig& cfg) {
  if (params.sigma != 0.0) throw std::invalid_argument("deterministic_oracle: requires sigma = 0");
  const auto layout = detail::sim_layout(params, cfg);
  const std::size_t n = layout.steps;
  const std::size_t m = layout.delay_cells;
  if (n > 400) throw std::invalid_argument("deterministic_oracle: more than 400 control unknowns");
  const double dt = cfg.dt_sim;

  // Rows 0..n of the state map: x_k = free[k] + A.row(k) a.
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n + 1), static_cast<Eigen::Index>(n));
  Eigen::VectorXd free = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n + 1));
  free[0] = cfg.y0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    A.row(r + 1) = A.row(r);
    free[r + 1] = free[r];
    A(r + 1, r) += dt;
    if (k >= m) {
      A(r + 1, static_cast<Eigen::Index>(k - m)) -= dt;
    } else {
      free[r + 1] -= layout.prehistory[k] * dt;
    }
  }
  const auto N = static_cast<Eigen::Index>(n);
  const Eigen::MatrixXd Ar = A.topRows(N);
  const Eigen::VectorXd fr = free.head(N);
  const Eigen::RowVectorXd aT = A.row(N);
  const double fT = free[N];

  // cost = dt [ a'a/2 + q a'(Ar a + fr) + eps/2 |Ar a + fr|^2 ] + c/2 (aT a + fT)^2
  Eigen::MatrixXd H = dt * (Eigen::MatrixXd::Identity(N, N) + params.q * (Ar + Ar.transpose()) +
                            params.eps * Ar.transpose() * Ar) +
                      params.c * aT.transpose() * aT;
  Eigen::VectorXd g = dt * (params.q * fr + params.eps * Ar.transpose() * fr) + params.c * fT * aT.transpose();

  Eigen::LLT<Eigen::MatrixXd> llt(H);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("deterministic_oracle: normal matrix is not positive definite");
  }
  const Eigen::VectorXd a = llt.solve(-g);
  std::vector<double> controls(a.data(), a.data() + a.size());
  const double optimum = discrete_cost(params, cfg, controls);
  return {optimum, SampledPath::scalar(0.0, dt, std::move(controls))};
}

}  // namespace pathctl
