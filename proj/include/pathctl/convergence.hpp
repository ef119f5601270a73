/**
 * @file convergence.hpp
 * @brief Grid-refinement studies of the HJB residual and cross-factor selection.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "pathctl/game.hpp"
#include "pathctl/lq_delay.hpp"

namespace pathctl {

/// Smooth control history z(s) = offset + amplitude sin(frequency s + phase).
struct HistoryShape {
  double offset = 0.0;
  double amplitude = 0.0;
  double frequency = 0.0;
  double phase = 0.0;

  double operator()(double s) const { return offset + amplitude * std::sin(frequency * s + phase); }

  std::vector<double> window(const SolverGrid& g, double t) const {
    const std::size_t m = g.delay_steps();
    std::vector<double> w(m);
    for (std::size_t k = 0; k < m; ++k) w[k] = (*this)(t - static_cast<double>(m - k) * g.dt);
    return w;
  }
};

struct ResidualProbe {
  double t = 0.0;
  double y = 0.0;
  HistoryShape history;
};

struct GameResidualProbe {
  double t = 0.0;
  std::vector<double> y;
  std::vector<HistoryShape> histories;
};

namespace detail {

inline HistoryShape random_shape(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> freq(1.0, 20.0);
  std::uniform_real_distribution<double> phase(0.0, 6.283185307179586);
  return {unit(rng), unit(rng), freq(rng), phase(rng)};
}

/// Probe times are nodes of the coarsest grid strictly before T, so they lie
/// on every finer grid of the ladder too.
inline double random_probe_time(std::mt19937_64& rng, const LQParams& p, double coarse_dt) {
  const auto nodes = static_cast<std::uint64_t>(grid_steps(p.horizon, coarse_dt, "horizon"));
  std::uniform_int_distribution<std::uint64_t> pick(0, nodes - 1);
  return static_cast<double>(pick(rng)) * coarse_dt;
}

}  // namespace detail

inline std::vector<ResidualProbe> make_probes(const LQParams& p, std::size_t count, std::uint64_t seed,
                                              double coarse_dt) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> state(-2.0, 2.0);
  std::vector<ResidualProbe> probes(count);
  for (auto& pr : probes) {
    pr.t = detail::random_probe_time(rng, p, coarse_dt);
    pr.y = state(rng);
    pr.history = detail::random_shape(rng);
  }
  return probes;
}

inline std::vector<GameResidualProbe> make_game_probes(const GameParams& p, std::size_t count, std::uint64_t seed,
                                                       double coarse_dt) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> state(-2.0, 2.0);
  std::vector<GameResidualProbe> probes(count);
  for (auto& pr : probes) {
    pr.t = detail::random_probe_time(rng, p.scalar(), coarse_dt);
    pr.y.resize(p.n_players);
    for (auto& v : pr.y) v = state(rng);
    pr.histories.resize(p.n_players);
    for (auto& h : pr.histories) h = detail::random_shape(rng);
  }
  return probes;
}

/// Signed residual of each probe on one solved grid.
inline std::vector<double> probe_residuals(const Surfaces& s, const std::vector<ResidualProbe>& probes) {
  std::vector<double> r;
  r.reserve(probes.size());
  for (const auto& pr : probes) {
    const auto w = pr.history.window(s.grid(), pr.t);
    r.push_back(hjb_residual(s, detail::time_index(s.grid(), pr.t), pr.y, w));
  }
  return r;
}

/// Residual of every player at every probe, probe-major.
inline std::vector<double> probe_residuals(const GameSurfaces& s, const std::vector<GameResidualProbe>& probes) {
  std::vector<double> r;
  r.reserve(probes.size() * s.n_players());
  for (const auto& pr : probes) {
    GameWindows z(s.n_players(), s.grid().delay_steps());
    for (std::size_t j = 0; j < s.n_players(); ++j) {
      const auto w = pr.histories[j].window(s.grid(), pr.t);
      std::copy(w.begin(), w.end(), z.player(j).begin());
    }
    const auto n = detail::time_index(s.grid(), pr.t);
    for (std::size_t i = 0; i < s.n_players(); ++i) r.push_back(game_hjb_residual(s, i, n, pr.y, z));
  }
  return r;
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need two or more points");
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += std::log(x[k]);
    my += std::log(y[k]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double dx = std::log(x[k]) - mx;
    sxy += dx * (std::log(y[k]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

struct LadderLevel {
  std::size_t delay_cells = 0;
  double dt = 0.0;
  double max_residual = 0.0;
};

struct ResidualLadder {
  double cross_factor = 1.0;
  std::vector<LadderLevel> levels;
  double slope = std::numeric_limits<double>::quiet_NaN();  // NaN when the residual is zero on every level
  double limit_defect = 0.0;  // max over probes of |2 r(finest) - r(next finest)|

  /// Residual below this on every level counts as exactly zero.
  static constexpr double kExactFloor = 1e-12;

  bool exact() const {
    return std::all_of(levels.begin(), levels.end(), [](const LadderLevel& l) { return l.max_residual <= kExactFloor; });
  }
  bool converges(double min_slope) const { return exact() || slope >= min_slope; }
};

namespace detail {

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

template <typename Residuals>
ResidualLadder run_ladder(double tau, double kappa, const std::vector<std::size_t>& cells, Residuals&& residuals) {
  if (cells.size() < 2) throw std::invalid_argument("refinement ladder needs two or more grids");
  ResidualLadder out;
  out.cross_factor = kappa;
  std::vector<std::vector<double>> signed_res;
  std::vector<double> dts, maxes;
  for (std::size_t c : cells) {
    signed_res.push_back(residuals(c));
    const double dt = tau / static_cast<double>(c);
    out.levels.push_back({c, dt, max_abs(signed_res.back())});
    dts.push_back(dt);
    maxes.push_back(out.levels.back().max_residual);
  }
  if (!out.exact() && std::all_of(maxes.begin(), maxes.end(), [](double v) { return v > 0.0; })) {
    out.slope = loglog_slope(dts, maxes);
  }
  const auto& fine = signed_res[signed_res.size() - 1];
  const auto& coarse = signed_res[signed_res.size() - 2];
  for (std::size_t k = 0; k < fine.size(); ++k) {
    out.limit_defect = std::max(out.limit_defect, std::abs(2.0 * fine[k] - coarse[k]));
  }
  return out;
}

}  // namespace detail

inline ResidualLadder residual_ladder(const LQParams& p, double kappa, const std::vector<std::size_t>& cells,
                                      const std::vector<ResidualProbe>& probes) {
  return detail::run_ladder(p.tau, kappa, cells, [&](std::size_t c) {
    const auto g = SolverGrid::with_delay_cells(p, c);
    return probe_residuals(solve_f_system(p, g, kappa), probes);
  });
}

inline ResidualLadder game_residual_ladder(const GameParams& p, double kappa, const std::vector<std::size_t>& cells,
                                           const std::vector<GameResidualProbe>& probes) {
  return detail::run_ladder(p.tau, kappa, cells, [&](std::size_t c) {
    const auto g = SolverGrid::with_delay_cells(p.scalar(), c);
    return probe_residuals(solve_e_system(p, g, kappa), probes);
  });
}

struct CrossFactorSelection {
  double cross_factor = 1.0;
  ResidualLadder half;
  ResidualLadder one;
  std::string reason;
};

struct LadderSettings {
  std::vector<std::size_t> delay_cells{5, 10, 20};
  std::size_t probes = 50;
  std::uint64_t seed = 20240601;
};

namespace detail {

/// Picks the factor whose residual extrapolates closer to zero in the dt -> 0
/// limit. Plain slopes cannot tell the variants apart when the cross term is
/// small, since both residuals then shrink at first order for a while.
inline CrossFactorSelection choose(ResidualLadder half, ResidualLadder one) {
  CrossFactorSelection s{1.0, std::move(half), std::move(one), {}};
  if (s.half.limit_defect <= ResidualLadder::kExactFloor && s.one.limit_defect <= ResidualLadder::kExactFloor) {
    s.reason = "both variants solve the discrete equation exactly; defaulting to 1";
  } else if (s.half.limit_defect < s.one.limit_defect) {
    s.cross_factor = 0.5;
    s.reason = "extrapolated residual smaller with factor 1/2";
  } else {
    s.reason = "extrapolated residual smaller with factor 1";
  }
  return s;
}

inline double coarse_step(double tau, const LadderSettings& ls) {
  return tau / static_cast<double>(*std::min_element(ls.delay_cells.begin(), ls.delay_cells.end()));
}

}  // namespace detail

inline CrossFactorSelection select_cross_factor(const LQParams& p, const LadderSettings& ls = {}) {
  const auto probes = make_probes(p, ls.probes, ls.seed, detail::coarse_step(p.tau, ls));
  return detail::choose(residual_ladder(p, 0.5, ls.delay_cells, probes), residual_ladder(p, 1.0, ls.delay_cells, probes));
}

inline CrossFactorSelection select_game_cross_factor(const GameParams& p, const LadderSettings& ls = {}) {
  const auto probes = make_game_probes(p, ls.probes, ls.seed, detail::coarse_step(p.tau, ls));
  return detail::choose(game_residual_ladder(p, 0.5, ls.delay_cells, probes),
                        game_residual_ladder(p, 1.0, ls.delay_cells, probes));
}

struct NLadderEntry {
  std::size_t n_players = 0;
  double gap = 0.0;
};

/// Sup-norm gap between game and single-agent surfaces for each N.
inline std::vector<NLadderEntry> n_ladder(const LQParams& p, const SolverGrid& g, double kappa,
                                          const std::vector<std::size_t>& players) {
  const auto single = solve_f_system(p, g, kappa);
  std::vector<NLadderEntry> out;
  for (std::size_t n : players) {
    out.push_back({n, sup_gap(solve_e_system(GameParams::from_scalar(p, n), g, kappa), single)});
  }
  return out;
}

}  // namespace pathctl
