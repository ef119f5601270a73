/**
 * @file game.hpp
 * @brief Symmetric N-player delayed game with mean-reverting costs.
 *
 * Player i controls dx^i = (a^i_t - a^i_{t-tau}) dt + sigma dw^i and pays
 *   f^i = (a^i)^2/2 - q a^i u_i + eps/2 u_i^2,   g^i = c/2 u_i(T)^2,
 * with u_i = mean(y) - y^i. The value of player i is the quadratic ansatz in
 * u_i and w_i = mean(z) - z^i with coefficients E0..E3. Matching monomials in
 * the player-i HJB equation (with every player on the feedback law) gives the
 * same transport/Riccati structure as the single-agent system with 1/N
 * corrections; see detail::CouplingModel.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pathctl/detail/ansatz.hpp"
#include "pathctl/detail/transport.hpp"
#include "pathctl/lq_delay.hpp"
#include "pathctl/simulation.hpp"

namespace pathctl {

struct GameParams {
  std::size_t n_players = 10;
  double q = 1.0;
  double eps = 2.0;
  double c = 0.0;
  double horizon = 1.0;
  double tau = 0.05;
  double sigma = 1.0;

  LQParams scalar() const { return {q, eps, c, horizon, tau, sigma}; }

  static GameParams from_scalar(const LQParams& p, std::size_t n_players) {
    return {n_players, p.q, p.eps, p.c, p.horizon, p.tau, p.sigma};
  }

  void validate() const {
    if (n_players < 2) throw std::invalid_argument("GameParams: need at least two players");
    scalar().validate();
  }

  friend bool operator==(const GameParams&, const GameParams&) = default;
};

struct GameSurfaces {
  GameParams params;
  double cross_factor = 1.0;
  AnsatzTables tables;
  std::vector<std::string> warnings;

  const SolverGrid& grid() const noexcept { return tables.grid; }
  std::size_t n_players() const noexcept { return params.n_players; }
  double e0(std::size_t n) const { return tables.c0[n]; }
  double e1(std::size_t n, std::size_t j) const { return tables.at1(n, j); }
  double e2(std::size_t n, std::size_t i, std::size_t j) const { return tables.at2(n, i, j); }
  double e3(std::size_t n) const { return tables.c3[n]; }
};

inline GameSurfaces solve_e_system(const GameParams& params, const SolverGrid& grid, double cross_factor = 1.0) {
  params.validate();
  const auto scalar = params.scalar();
  if (!(grid == SolverGrid::make(scalar, grid.dt))) throw GridAlignmentError("solver grid does not match parameters");
  const detail::CouplingModel model{1.0 / static_cast<double>(params.n_players)};
  GameSurfaces s{params, cross_factor, detail::march_backward(scalar, grid, model, cross_factor), {}};
  if (params.c != 0.0) {
    s.warnings.emplace_back(
        "c != 0: final condition E1(T,-tau) = 0 conflicts with boundary E1(T,-tau) = -c; final condition kept at t = T");
  }
  return s;
}

/// Control histories of all players on [t - tau, t): player-major, N x m.
struct GameWindows {
  std::size_t n_players = 0;
  std::size_t cells = 0;
  std::vector<double> values;

  GameWindows(std::size_t n, std::size_t m) : n_players(n), cells(m), values(n * m, 0.0) {}

  std::span<double> player(std::size_t j) { return {values.data() + j * cells, cells}; }
  ControlWindow player(std::size_t j) const { return {values.data() + j * cells, cells}; }
};

namespace detail {

/// Relative coordinates u_j = mean(y) - y_j and w_j = mean(z) - z_j.
struct RelativeState {
  std::vector<double> u;
  GameWindows w;

  RelativeState(std::span<const double> y, const GameWindows& z) : u(y.size()), w(z.n_players, z.cells) {
    const std::size_t n = y.size();
    if (z.n_players != n) throw DimensionError("state and history player counts differ");
    double ybar = 0.0;
    for (double v : y) ybar += v;
    ybar /= static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) u[j] = ybar - y[j];
    for (std::size_t k = 0; k < z.cells; ++k) {
      double zbar = 0.0;
      for (std::size_t j = 0; j < n; ++j) zbar += z.player(j)[k];
      zbar /= static_cast<double>(n);
      for (std::size_t j = 0; j < n; ++j) w.player(j)[k] = zbar - z.player(j)[k];
    }
  }
};

inline void check_game_inputs(const GameSurfaces& s, std::size_t i, std::span<const double> y, const GameWindows& z) {
  if (y.size() != s.n_players()) throw DimensionError("state vector must have one entry per player");
  if (z.n_players != s.n_players() || z.cells != s.grid().delay_steps()) {
    throw DimensionError("histories must cover [t - tau, t) for every player");
  }
  if (i >= s.n_players()) throw std::out_of_range("player index out of range");
}

/// P_j = E0 u_j + int E1 w_j, so that d V^j / d x_k = (1/N - [j == k]) P_j.
inline double relative_gradient(const AnsatzEvaluator& ev, double u, ControlWindow w) {
  return ev.space_derivative(u, w);
}

/// Q_j = E1(t,0) u_j + 2 int E2(t,th,0) w_j: the coefficient of the current
/// relative control in the time derivative of V^j.
inline double current_control_weight(const AnsatzEvaluator& ev, double u, ControlWindow w) {
  return ev.c1_at_zero() * u + 2.0 * ev.column_integral(w, ev.window_size());
}

inline double feedback_from_relative(const GameSurfaces& s, const AnsatzEvaluator& ev, double u, ControlWindow w) {
  const double share = 1.0 - 1.0 / static_cast<double>(s.n_players());
  const double p_own = -share * relative_gradient(ev, u, w);  // d V^i / d x_i
  return s.params.q * u - p_own + share * current_control_weight(ev, u, w);
}

}  // namespace detail

/// Feedback action of player i at time index n.
inline double game_feedback(const GameSurfaces& s, std::size_t i, std::size_t n, std::span<const double> y,
                            const GameWindows& z) {
  detail::check_game_inputs(s, i, y, z);
  const detail::RelativeState rel(y, z);
  const detail::AnsatzEvaluator ev(s.tables, n);
  return detail::feedback_from_relative(s, ev, rel.u[i], rel.w.player(i));
}

/// Feedback actions of every player at once.
inline std::vector<double> game_feedback_all(const GameSurfaces& s, std::size_t n, std::span<const double> y,
                                             const GameWindows& z) {
  detail::check_game_inputs(s, 0, y, z);
  const detail::RelativeState rel(y, z);
  const detail::AnsatzEvaluator ev(s.tables, n);
  std::vector<double> a(s.n_players());
  for (std::size_t j = 0; j < a.size(); ++j) a[j] = detail::feedback_from_relative(s, ev, rel.u[j], rel.w.player(j));
  return a;
}

inline double game_value(const GameSurfaces& s, std::size_t i, std::size_t n, std::span<const double> y,
                         const GameWindows& z) {
  detail::check_game_inputs(s, i, y, z);
  const detail::RelativeState rel(y, z);
  return detail::AnsatzEvaluator(s.tables, n).value(rel.u[i], rel.w.player(i));
}

/**
 * Left side of player i's HJB equation with every player on the feedback law:
 *
 *   Dt V^i(current controls = feedback) + sum_j [ sigma^2/2 d_jj V^i
 *     + (a_j - z^j_{t-tau}) d_j V^i ] + f^i(a_i)
 *
 * Derivatives of V^i are taken from the ansatz directly, so this check does
 * not depend on how the E-system was derived.
 */
inline double game_hjb_residual(const GameSurfaces& s, std::size_t i, std::size_t n, std::span<const double> y,
                                const GameWindows& z) {
  detail::check_game_inputs(s, i, y, z);
  if (n + 1 >= s.grid().n_t) throw std::domain_error("game_hjb_residual: t must be interior (t < T)");
  const std::size_t players = s.n_players();
  const double inv_n = 1.0 / static_cast<double>(players);
  const detail::RelativeState rel(y, z);
  const detail::AnsatzEvaluator ev(s.tables, n);

  std::vector<double> a(players);
  double abar = 0.0;
  for (std::size_t j = 0; j < players; ++j) {
    a[j] = detail::feedback_from_relative(s, ev, rel.u[j], rel.w.player(j));
    abar += a[j];
  }
  abar *= inv_n;

  const double u = rel.u[i];
  const ControlWindow w = rel.w.player(i);
  const double grad = detail::relative_gradient(ev, u, w);
  double total = ev.time_derivative(u, w, abar - a[i]);
  for (std::size_t j = 0; j < players; ++j) {
    const double d = inv_n - (j == i ? 1.0 : 0.0);
    const double delayed = z.cells ? z.player(j)[0] : 0.0;
    total += 0.5 * s.params.sigma * s.params.sigma * d * d * ev.c0() + (a[j] - delayed) * d * grad;
  }
  total += 0.5 * a[i] * a[i] - s.params.q * a[i] * u + 0.5 * s.params.eps * u * u;
  return total;
}

// Path-based overloads: one scalar control path per player.

inline GameWindows game_windows(const GameSurfaces& s, double t, std::span<const SampledPath> z) {
  if (z.size() != s.n_players()) throw DimensionError("need one control history per player");
  GameWindows out(s.n_players(), s.grid().delay_steps());
  for (std::size_t j = 0; j < z.size(); ++j) {
    const auto w = detail::extract_window(z[j], s.grid(), t);
    std::copy(w.begin(), w.end(), out.player(j).begin());
  }
  return out;
}

inline double game_feedback(const GameSurfaces& s, std::size_t i, double t, std::span<const double> y,
                            std::span<const SampledPath> z) {
  return game_feedback(s, i, detail::time_index(s.grid(), t), y, game_windows(s, t, z));
}

inline double game_hjb_residual(const GameSurfaces& s, std::size_t i, double t, std::span<const double> y,
                                std::span<const SampledPath> z) {
  return game_hjb_residual(s, i, detail::time_index(s.grid(), t), y, game_windows(s, t, z));
}

/// Largest absolute difference between the game and single-agent coefficient
/// tables over all four surfaces.
inline double sup_gap(const GameSurfaces& g, const Surfaces& s) {
  if (!(g.grid() == s.grid())) throw GridAlignmentError("sup_gap: surfaces live on different grids");
  double gap = 0.0;
  auto scan = [&gap](const std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t k = 0; k < a.size(); ++k) gap = std::max(gap, std::abs(a[k] - b[k]));
  };
  scan(g.tables.c0, s.tables.c0);
  scan(g.tables.c1, s.tables.c1);
  scan(g.tables.c2, s.tables.c2);
  scan(g.tables.c3, s.tables.c3);
  return gap;
}

// ---------------------------------------------------------------------------
// Simulation of the N-player system.

/// View of one simulated game path at step k.
class GameContext {
 public:
  GameContext(std::size_t step, double dt, std::size_t players, std::size_t cells, std::span<const double> states,
              std::span<const double> controls)
      : step_(step), dt_(dt), players_(players), cells_(cells), states_(states), controls_(controls) {}

  std::size_t step() const noexcept { return step_; }
  double time() const noexcept { return static_cast<double>(step_) * dt_; }
  std::size_t players() const noexcept { return players_; }

  /// Current states of all players.
  std::span<const double> states() const { return states_.subspan(step_ * players_, players_); }

  /// Control of player j at time s < t.
  double control_at(std::size_t j, double s) const {
    const auto k = detail::grid_steps(s, dt_, "time");
    if (k >= static_cast<std::int64_t>(step_)) throw AdaptednessViolation("policy read the current or a future control");
    const auto row = static_cast<std::int64_t>(cells_) + k;
    return row < 0 ? 0.0 : controls_[static_cast<std::size_t>(row) * players_ + j];
  }

  /// All players' controls over [t - tau, t).
  GameWindows windows() const {
    GameWindows w(players_, cells_);
    for (std::size_t k = 0; k < cells_; ++k) {
      const std::size_t row = step_ + k;
      for (std::size_t j = 0; j < players_; ++j) w.player(j)[k] = controls_[row * players_ + j];
    }
    return w;
  }

 private:
  std::size_t step_;
  double dt_;
  std::size_t players_;
  std::size_t cells_;
  std::span<const double> states_;    // rows 0..step, N per row
  std::span<const double> controls_;  // rows 0..cells+step-1, N per row
};

/// A unilateral strategy for the deviating player, given the context and the
/// action the feedback law would take.
struct GameDeviation {
  std::string name;
  std::function<double(const GameContext&, double equilibrium_action)> rule;
};

inline GameDeviation equilibrium_deviation() {
  return {"equilibrium", [](const GameContext&, double a) { return a; }};
}
inline GameDeviation zero_deviation() {
  return {"zero", [](const GameContext&, double) { return 0.0; }};
}
inline GameDeviation shifted_deviation(double delta) {
  return {"equilibrium + " + detail::format_double(delta), [delta](const GameContext&, double a) { return a + delta; }};
}
inline GameDeviation scaled_deviation(double factor) {
  return {detail::format_double(factor) + " * equilibrium", [factor](const GameContext&, double a) { return factor * a; }};
}

struct GameSimConfig {
  std::size_t n_paths = 10000;
  std::uint64_t seed = 42;
  double dt_sim = 0.005;
  std::vector<double> y0;  // one initial state per player; zero control history
  std::size_t threads = 1;
};

/// Per-path costs of every player (path-major, N per path) when `deviator`
/// plays `deviation` and everyone else plays the feedback law.
inline std::vector<double> simulate_game_samples(const GameSurfaces& s, const GameSimConfig& cfg, std::size_t deviator,
                                                 const GameDeviation& deviation) {
  const auto& prm = s.params;
  const std::size_t players = prm.n_players;
  if (cfg.y0.size() != players) throw DimensionError("GameSimConfig: y0 needs one entry per player");
  if (deviator >= players) throw std::out_of_range("deviating player out of range");
  if (cfg.n_paths == 0) throw std::invalid_argument("GameSimConfig: n_paths must be at least 1");
  if (!detail::same_step(cfg.dt_sim, s.grid().dt)) throw GridAlignmentError("dt_sim must equal the solver grid step");
  const std::size_t m = s.grid().delay_steps();
  const std::size_t steps = s.grid().time_steps();
  const double dt = cfg.dt_sim;
  const double sq = prm.sigma * std::sqrt(dt);
  const double inv_n = 1.0 / static_cast<double>(players);

  std::vector<double> out(cfg.n_paths * players);
  detail::parallel_for(cfg.n_paths, cfg.threads, [&](std::size_t path) {
    auto rng = detail::substream(cfg.seed, path);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> states((steps + 1) * players);
    std::vector<double> controls((m + steps) * players, 0.0);
    std::vector<double> running(players, 0.0);
    std::copy(cfg.y0.begin(), cfg.y0.end(), states.begin());
    for (std::size_t k = 0; k < steps; ++k) {
      const GameContext ctx(k, dt, players, m, std::span<const double>(states.data(), (k + 1) * players),
                            std::span<const double>(controls.data(), (m + k) * players));
      const auto y = ctx.states();
      auto a = game_feedback_all(s, k, y, ctx.windows());
      a[deviator] = deviation.rule(ctx, a[deviator]);
      double ybar = 0.0;
      for (double v : y) ybar += v;
      ybar *= inv_n;
      for (std::size_t j = 0; j < players; ++j) {
        if (!std::isfinite(a[j])) throw NumericalBlowUp("non-finite game action", ctx.time());
        const double u = ybar - y[j];
        running[j] += 0.5 * a[j] * a[j] - prm.q * a[j] * u + 0.5 * prm.eps * u * u;
        controls[(m + k) * players + j] = a[j];
      }
      for (std::size_t j = 0; j < players; ++j) {
        const double delayed = controls[k * players + j];
        states[(k + 1) * players + j] = y[j] + (a[j] - delayed) * dt + sq * normal(rng);
      }
    }
    const auto yT = std::span<const double>(states).subspan(steps * players, players);
    double ybar = 0.0;
    for (double v : yT) ybar += v;
    ybar *= inv_n;
    for (std::size_t j = 0; j < players; ++j) {
      const double u = ybar - yT[j];
      out[path * players + j] = running[j] * dt + 0.5 * prm.c * u * u;
    }
  });
  return out;
}

/// Cost estimate of each player from path-major samples.
inline std::vector<CostEstimate> per_player_estimates(std::span<const double> samples, std::size_t players) {
  const std::size_t paths = samples.size() / players;
  std::vector<CostEstimate> est(players);
  std::vector<double> column(paths);
  for (std::size_t j = 0; j < players; ++j) {
    for (std::size_t p = 0; p < paths; ++p) column[p] = samples[p * players + j];
    est[j] = summarize(column);
  }
  return est;
}

struct NashReport {
  std::size_t player = 0;
  std::size_t n_players = 0;
  double value = 0.0;  // V^i(0) from the ansatz
  CostEstimate equilibrium;
  std::vector<CostEstimate> equilibrium_all_players;
  std::vector<NamedEstimate> deviations;
  std::vector<bool> deviation_dominated;  // J^i(dev) >= J^i(eq) - 2 combined stderr

  bool all_pass() const {
    for (bool b : deviation_dominated)
      if (!b) return false;
    return true;
  }
};

inline NashReport nash_deviation_check(const GameSurfaces& s, const GameSimConfig& cfg, std::size_t player,
                                       const std::vector<GameDeviation>& deviations) {
  NashReport r;
  r.player = player;
  r.n_players = s.n_players();
  const GameWindows zero_history(s.n_players(), s.grid().delay_steps());
  r.value = game_value(s, player, 0, cfg.y0, zero_history);
  const auto eq = simulate_game_samples(s, cfg, player, equilibrium_deviation());
  r.equilibrium_all_players = per_player_estimates(eq, s.n_players());
  r.equilibrium = r.equilibrium_all_players[player];
  for (const auto& d : deviations) {
    const auto est = per_player_estimates(simulate_game_samples(s, cfg, player, d), s.n_players())[player];
    r.deviations.push_back({d.name, est});
    r.deviation_dominated.push_back(est.mean >= r.equilibrium.mean - 2.0 * combined_std_error(est, r.equilibrium));
  }
  return r;
}

}  // namespace pathctl
