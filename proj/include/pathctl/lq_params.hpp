#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "pathctl/detail/numeric.hpp"

namespace pathctl {

/// Scalar data of the delayed linear-quadratic problem
///   dx = (a_t - a_{t-tau}) dt + sigma dw,
///   running cost a^2/2 + q a x + eps/2 x^2, terminal cost c x^2/2.
struct LQParams {
  double q = 1.0;
  double eps = 2.0;
  double c = 0.0;
  double horizon = 1.0;
  double tau = 0.05;
  double sigma = 1.0;

  void validate() const {
    if (!(horizon > 0.0)) throw std::invalid_argument("LQParams: horizon must be positive");
    if (!(tau > 0.0) || tau > horizon * (1.0 + detail::kGridTolerance)) {
      throw std::invalid_argument("LQParams: tau must lie in (0, horizon]");
    }
    if (!(sigma >= 0.0)) throw std::invalid_argument("LQParams: sigma must be nonnegative");
    if (!(eps >= 0.0)) throw std::invalid_argument("LQParams: eps must be nonnegative");
    if (!std::isfinite(q) || !std::isfinite(c)) throw std::invalid_argument("LQParams: q and c must be finite");
  }

  friend bool operator==(const LQParams&, const LQParams&) = default;
};

/// Aligned (t, theta) grid: theta spans [-tau, 0] with the same step as time.
struct SolverGrid {
  double dt = 0.0;
  std::size_t n_t = 0;      // nodes on [0, T]
  std::size_t n_theta = 0;  // nodes on [-tau, 0]

  /// Number of delay cells, tau / dt.
  std::size_t delay_steps() const noexcept { return n_theta - 1; }
  std::size_t time_steps() const noexcept { return n_t - 1; }
  double time(std::size_t n) const noexcept { return static_cast<double>(n) * dt; }
  double theta(std::size_t j) const noexcept { return -static_cast<double>(delay_steps() - j) * dt; }

  static SolverGrid make(const LQParams& params, double dt) {
    params.validate();
    const auto delay = detail::grid_steps(params.tau, dt, "tau");
    const auto steps = detail::grid_steps(params.horizon, dt, "horizon");
    if (delay < 1 || steps < 1) throw GridAlignmentError("SolverGrid: dt larger than tau or horizon");
    return {dt, static_cast<std::size_t>(steps) + 1, static_cast<std::size_t>(delay) + 1};
  }

  /// Grid with dt = tau / delay_cells.
  static SolverGrid with_delay_cells(const LQParams& params, std::size_t delay_cells) {
    if (delay_cells == 0) throw GridAlignmentError("SolverGrid: need at least one delay cell");
    return make(params, params.tau / static_cast<double>(delay_cells));
  }

  friend bool operator==(const SolverGrid&, const SolverGrid&) = default;
};

}  // namespace pathctl
