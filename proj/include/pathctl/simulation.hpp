/**
 * @file simulation.hpp
 * @brief Monte Carlo simulation of the delayed controlled diffusion.
 *
 * Euler-Maruyama on the grid dt_sim:
 *   x_{k+1} = x_k + (a_k - a_{k-m}) dt + sigma sqrt(dt) xi_k,   m = tau/dt,
 * running cost a^2/2 + q a x + eps/2 x^2 by left-endpoint sums and terminal
 * cost c x_N^2/2. Each path draws from its own generator keyed by
 * (seed, path id), and per-path costs are reduced in path order, so results do
 * not depend on the number of worker threads.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <span>
#include <mutex>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "pathctl/lq_delay.hpp"
#include "pathctl/path.hpp"

namespace pathctl {

struct SimConfig {
  std::size_t n_paths = 10000;
  std::uint64_t seed = 42;
  double dt_sim = 0.005;
  double y0 = 1.0;
  /// Control history on [-tau, 0); nodes it does not cover read as zero.
  std::optional<SampledPath> z_hist;
  std::size_t threads = 1;
};

struct CostEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

/// Sample mean and standard error (sample std / sqrt n), summed in index order.
inline CostEstimate summarize(std::span<const double> samples) {
  CostEstimate e;
  e.n = samples.size();
  if (e.n == 0) return e;
  double sum = 0.0;
  for (double v : samples) sum += v;
  e.mean = sum / static_cast<double>(e.n);
  if (e.n > 1) {
    double ss = 0.0;
    for (double v : samples) ss += (v - e.mean) * (v - e.mean);
    e.std_error = std::sqrt(ss / static_cast<double>(e.n - 1) / static_cast<double>(e.n));
  }
  return e;
}

inline double combined_std_error(const CostEstimate& a, const CostEstimate& b) {
  return std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
}

/// Raised when a policy reads the state or control history beyond the
/// current time.
class AdaptednessViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Generator for substream `stream` of `seed`.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{splitmix64(seed), splitmix64(seed ^ splitmix64(stream + 1)), stream};
  return std::mt19937_64(seq);
}

/// Runs body(i) for i in [0, count) on `threads` workers with static
/// contiguous chunks. The first exception thrown is rethrown.
template <typename Body>
void parallel_for(std::size_t count, std::size_t threads, Body&& body) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  const std::size_t chunk = (count + threads - 1) / threads;
  for (std::size_t w = 0; w < threads; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(count, lo + chunk);
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

/// Read-only view of one simulated path at step k, handed to policies.
class PolicyContext {
 public:
  PolicyContext(std::size_t step, double dt, std::span<const double> states, std::span<const double> controls,
                std::size_t history_cells)
      : step_(step), dt_(dt), states_(states), controls_(controls), offset_(history_cells) {}

  std::size_t step() const noexcept { return step_; }
  double time() const noexcept { return static_cast<double>(step_) * dt_; }
  double dt() const noexcept { return dt_; }
  double state() const { return states_[step_]; }

  double state_at(double s) const {
    const auto k = detail::grid_steps(s, dt_, "time");
    if (k > static_cast<std::int64_t>(step_)) throw AdaptednessViolation("policy read a future state");
    return k < 0 ? 0.0 : states_[static_cast<std::size_t>(k)];
  }

  /// Control at time s < t; before the stored pre-history it is zero.
  double control_at(double s) const {
    const auto k = detail::grid_steps(s, dt_, "time");
    if (k >= static_cast<std::int64_t>(step_)) throw AdaptednessViolation("policy read the current or a future control");
    const auto idx = static_cast<std::int64_t>(offset_) + k;
    return idx < 0 ? 0.0 : controls_[static_cast<std::size_t>(idx)];
  }

  /// The last `cells` controls before t, oldest first.
  ControlWindow control_window(std::size_t cells) const {
    if (cells > offset_ + step_) throw std::out_of_range("control window longer than stored history");
    return controls_.subspan(offset_ + step_ - cells, cells);
  }

 private:
  std::size_t step_;
  double dt_;
  std::span<const double> states_;
  std::span<const double> controls_;
  std::size_t offset_;
};

struct ControlPolicy {
  std::string name;
  std::function<double(const PolicyContext&)> rule;

  double operator()(const PolicyContext& ctx) const { return rule(ctx); }
};

inline ControlPolicy zero_policy() {
  return {"zero", [](const PolicyContext&) { return 0.0; }};
}

inline ControlPolicy constant_policy(double a) {
  return {"constant " + detail::format_double(a), [a](const PolicyContext&) { return a; }};
}

/// Feedback law read off the solved surfaces. `s` must outlive the policy and
/// its grid step must equal the simulation step.
inline ControlPolicy feedback_policy(const Surfaces& s) {
  const Surfaces* sp = &s;
  return {"feedback", [sp](const PolicyContext& ctx) {
            if (!detail::same_step(ctx.dt(), sp->grid().dt)) {
              throw GridAlignmentError("feedback policy: simulation step differs from solver step");
            }
            return optimal_control(*sp, ctx.step(), ctx.state(), ctx.control_window(sp->grid().delay_steps()));
          }};
}

inline ControlPolicy shifted_policy(ControlPolicy base, double delta) {
  std::string name = base.name + " + " + detail::format_double(delta);
  return {std::move(name), [base = std::move(base), delta](const PolicyContext& ctx) { return base(ctx) + delta; }};
}

inline ControlPolicy scaled_policy(ControlPolicy base, double factor) {
  std::string name = detail::format_double(factor) + " * " + base.name;
  return {std::move(name), [base = std::move(base), factor](const PolicyContext& ctx) { return factor * base(ctx); }};
}

namespace detail {

struct SimLayout {
  std::size_t delay_cells;  // m
  std::size_t steps;        // N
  std::vector<double> prehistory;
};

inline SimLayout sim_layout(const LQParams& params, const SimConfig& cfg) {
  params.validate();
  if (cfg.n_paths == 0) throw std::invalid_argument("SimConfig: n_paths must be at least 1");
  SimLayout l;
  l.delay_cells = static_cast<std::size_t>(grid_steps(params.tau, cfg.dt_sim, "tau"));
  l.steps = static_cast<std::size_t>(grid_steps(params.horizon, cfg.dt_sim, "horizon"));
  l.prehistory.assign(l.delay_cells, 0.0);
  if (cfg.z_hist) {
    const auto& z = *cfg.z_hist;
    if (z.dim() != 1) throw DimensionError("z_hist must be scalar");
    if (!same_step(z.dt(), cfg.dt_sim)) throw GridAlignmentError("z_hist step differs from dt_sim");
    z.index_of(0.0);
    if (z.end_time() > -cfg.dt_sim * (1.0 - kGridTolerance)) {
      throw GridAlignmentError("z_hist must end strictly before time 0");
    }
    for (std::size_t j = 0; j < l.delay_cells; ++j) {
      l.prehistory[j] = z.scalar_at(-params.tau + static_cast<double>(j) * cfg.dt_sim);
    }
  }
  return l;
}

/// Terminal functional evaluated at the stopping step: (step, state, window
/// of the last m controls).
using Terminal = std::function<double(std::size_t, double, ControlWindow)>;

struct PathRecord {
  double cost = 0.0;
  std::vector<double> states;
  std::vector<double> controls;  // pre-history followed by the simulated controls
};

inline PathRecord run_path(const ControlPolicy& policy, const LQParams& prm, const SimConfig& cfg,
                           const SimLayout& layout, std::size_t stop, const Terminal& terminal, std::uint64_t path) {
  auto rng = substream(cfg.seed, path);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double dt = cfg.dt_sim;
  const double sq = prm.sigma * std::sqrt(dt);
  const std::size_t m = layout.delay_cells;

  PathRecord r;
  r.states.assign(stop + 1, 0.0);
  r.controls.assign(m + stop, 0.0);
  std::copy(layout.prehistory.begin(), layout.prehistory.end(), r.controls.begin());
  r.states[0] = cfg.y0;

  double running = 0.0;
  for (std::size_t k = 0; k < stop; ++k) {
    const double x = r.states[k];
    const PolicyContext ctx(k, dt, std::span<const double>(r.states.data(), k + 1),
                            std::span<const double>(r.controls.data(), m + k), m);
    const double a = policy(ctx);
    if (!std::isfinite(a)) throw NumericalBlowUp("policy '" + policy.name + "' returned a non-finite action", ctx.time());
    r.controls[m + k] = a;
    running += 0.5 * a * a + prm.q * a * x + 0.5 * prm.eps * x * x;
    const double delayed = r.controls[k];
    const double xi = normal(rng);
    r.states[k + 1] = x + (a - delayed) * dt + sq * xi;
    if (!std::isfinite(r.states[k + 1])) throw NumericalBlowUp("state diverged", ctx.time());
  }
  r.cost = running * dt + terminal(stop, r.states[stop], std::span<const double>(r.controls).subspan(stop, m));
  return r;
}

inline std::vector<double> simulate_samples(const ControlPolicy& policy, const LQParams& prm, const SimConfig& cfg,
                                            std::size_t stop, const Terminal& terminal) {
  const auto layout = sim_layout(prm, cfg);
  if (stop > layout.steps) throw std::out_of_range("stopping step past the horizon");
  std::vector<double> costs(cfg.n_paths);
  parallel_for(cfg.n_paths, cfg.threads, [&](std::size_t p) {
    costs[p] = run_path(policy, prm, cfg, layout, stop, terminal, p).cost;
  });
  return costs;
}

}  // namespace detail

/// Per-path realised costs J = sum f dt + g(x_T), in path order.
inline std::vector<double> simulate_cost_samples(const ControlPolicy& policy, const LQParams& params,
                                                 const SimConfig& cfg) {
  const auto steps = static_cast<std::size_t>(detail::grid_steps(params.horizon, cfg.dt_sim, "horizon"));
  const double c = params.c;
  return detail::simulate_samples(policy, params, cfg, steps,
                                  [c](std::size_t, double x, ControlWindow) { return 0.5 * c * x * x; });
}

inline CostEstimate simulate_cost(const ControlPolicy& policy, const LQParams& params, const SimConfig& cfg) {
  return summarize(simulate_cost_samples(policy, params, cfg));
}

struct Trajectory {
  std::vector<double> states;    // x_0 .. x_N
  std::vector<double> controls;  // a_0 .. a_{N-1}
  double cost = 0.0;
};

/// One simulated path (path id `path`) with its full state and control record.
inline Trajectory simulate_trajectory(const ControlPolicy& policy, const LQParams& params, const SimConfig& cfg,
                                      std::uint64_t path = 0) {
  const auto layout = detail::sim_layout(params, cfg);
  const double c = params.c;
  auto rec = detail::run_path(policy, params, cfg, layout, layout.steps,
                              [c](std::size_t, double x, ControlWindow) { return 0.5 * c * x * x; }, path);
  Trajectory t;
  t.states = std::move(rec.states);
  t.controls.assign(rec.controls.begin() + static_cast<std::ptrdiff_t>(layout.delay_cells), rec.controls.end());
  t.cost = rec.cost;
  return t;
}

struct NamedEstimate {
  std::string policy;
  CostEstimate estimate;
};

struct VerificationReport {
  double value = 0.0;  // V(0, y0, z_hist)
  NamedEstimate optimal;
  std::vector<NamedEstimate> rivals;
  bool value_matches = false;           // |V - J(opt)| <= 3 stderr
  std::vector<bool> rival_dominated;    // J(rival) >= J(opt) - 2 combined stderr
  std::vector<double> rival_gap_sigmas;  // (J(rival) - J(opt)) / combined stderr

  bool all_pass() const {
    if (!value_matches) return false;
    for (bool b : rival_dominated)
      if (!b) return false;
    return true;
  }
};

namespace detail {

inline void check_surfaces_match(const Surfaces& s, const LQParams& params, const SimConfig& cfg) {
  if (!(s.params == params)) throw std::invalid_argument("surfaces were solved for different parameters");
  if (!same_step(s.grid().dt, cfg.dt_sim)) throw GridAlignmentError("dt_sim must equal the solver grid step");
}

inline SampledPath history_path(const LQParams& params, const SimConfig& cfg) {
  const auto layout = sim_layout(params, cfg);
  return SampledPath::scalar(-params.tau, cfg.dt_sim, layout.prehistory);
}

inline double gap_in_sigmas(const CostEstimate& rival, const CostEstimate& ref) {
  const double se = combined_std_error(rival, ref);
  const double diff = rival.mean - ref.mean;
  if (se > 0.0) return diff / se;
  return diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
}

}  // namespace detail

/// Monte Carlo test of the verification inequality V <= J(rival) and the
/// equality V = J(feedback).
inline VerificationReport verification_check(const Surfaces& s, const LQParams& params, const SimConfig& cfg,
                                              const std::vector<ControlPolicy>& rivals) {
  if (rivals.empty()) throw std::invalid_argument("verification_check: no rival policies");
  detail::check_surfaces_match(s, params, cfg);
  VerificationReport r;
  r.value = eval_value(s, 0.0, cfg.y0, detail::history_path(params, cfg));
  const auto fb = feedback_policy(s);
  r.optimal = {fb.name, simulate_cost(fb, params, cfg)};
  r.value_matches = std::abs(r.value - r.optimal.estimate.mean) <= 3.0 * r.optimal.estimate.std_error;
  for (const auto& rival : rivals) {
    const auto est = simulate_cost(rival, params, cfg);
    const double band = 2.0 * combined_std_error(est, r.optimal.estimate);
    r.rivals.push_back({rival.name, est});
    r.rival_dominated.push_back(est.mean >= r.optimal.estimate.mean - band);
    r.rival_gap_sigmas.push_back(detail::gap_in_sigmas(est, r.optimal.estimate));
  }
  return r;
}

struct DppReport {
  double value = 0.0;  // V(0, y0, z_hist)
  double u = 0.0;
  NamedEstimate feedback_bridge;
  std::vector<NamedEstimate> bridges;
  bool feedback_matches = false;      // |V - E[...]| <= 3 stderr for the feedback bridge
  std::vector<bool> bridge_dominated;  // other bridges >= feedback - 2 combined stderr

  bool all_pass() const {
    if (!feedback_matches) return false;
    for (bool b : bridge_dominated)
      if (!b) return false;
    return true;
  }
};

/// Per-path samples of sum_{t<u} f dt + V(u, X_u, Z_u) under `bridge` on [0, u).
inline std::vector<double> dpp_samples(const Surfaces& s, const LQParams& params, const SimConfig& cfg, double u,
                                       const ControlPolicy& bridge) {
  detail::check_surfaces_match(s, params, cfg);
  const auto k = detail::grid_steps(u, cfg.dt_sim, "u");
  if (k <= 0 || k > static_cast<std::int64_t>(s.grid().time_steps())) {
    throw std::out_of_range("dpp_check: u must lie in (0, T]");
  }
  const Surfaces* sp = &s;
  return detail::simulate_samples(bridge, params, cfg, static_cast<std::size_t>(k),
                                  [sp](std::size_t n, double x, ControlWindow w) { return eval_value(*sp, n, x, w); });
}

/// Nested estimate of the dynamic programming identity at the intermediate
/// time u. The feedback bridge is always included as the reference.
inline DppReport dpp_check(const Surfaces& s, const LQParams& params, const SimConfig& cfg, double u,
                           const std::vector<ControlPolicy>& bridges) {
  detail::check_surfaces_match(s, params, cfg);
  DppReport r;
  r.u = u;
  r.value = eval_value(s, 0.0, cfg.y0, detail::history_path(params, cfg));
  const auto fb = feedback_policy(s);
  r.feedback_bridge = {fb.name, summarize(dpp_samples(s, params, cfg, u, fb))};
  r.feedback_matches = std::abs(r.value - r.feedback_bridge.estimate.mean) <= 3.0 * r.feedback_bridge.estimate.std_error;
  for (const auto& b : bridges) {
    const auto est = summarize(dpp_samples(s, params, cfg, u, b));
    r.bridges.push_back({b.name, est});
    r.bridge_dominated.push_back(est.mean >=
                                 r.feedback_bridge.estimate.mean - 2.0 * combined_std_error(est, r.feedback_bridge.estimate));
  }
  return r;
}

}  // namespace pathctl
