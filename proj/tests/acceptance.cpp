// End-to-end acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>

#include "cli.hpp"
#include "pathctl.hpp"
#include "support.hpp"

using namespace pathctl;

namespace {

const LQParams kBaseline{1.0, 2.0, 0.0, 1.0, 0.05, 1.0};

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Report {
 public:
  void check(int id, const std::string& name, double time_limit_s, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = body();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ostringstream line;
    line.precision(3);
    line << "[" << id << "] " << name << ": " << out.detail << " (" << secs << " s";
    if (time_limit_s > 0.0) {
      line << ", limit " << time_limit_s << " s";
      if (secs >= time_limit_s) out.pass = false;
    }
    line << ")";
    std::cout << (out.pass ? "PASS " : "FAIL ") << line.str() << std::endl;
    failures_ += out.pass ? 0 : 1;
  }
  int failures() const { return failures_; }

 private:
  int failures_ = 0;
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

double max_abs(const AnsatzTables& t) {
  double m = 0.0;
  for (const auto* v : {&t.c0, &t.c1, &t.c2, &t.c3})
    for (double x : *v) m = std::max(m, std::abs(x));
  return m;
}

/// Exact boundary and final identities plus delay-argument symmetry.
bool structure_holds(const AnsatzTables& t, double terminal, double& asym) {
  const auto& g = t.grid;
  const std::size_t m = g.delay_steps(), last = g.n_t - 1;
  bool ok = t.c0[last] == terminal && t.c3[last] == 0.0;
  asym = 0.0;
  for (std::size_t j = 0; j <= m; ++j) {
    ok = ok && t.at1(last, j) == 0.0;
    for (std::size_t i = 0; i <= m; ++i) ok = ok && t.at2(last, i, j) == 0.0;
  }
  for (std::size_t n = 0; n < last; ++n) {
    ok = ok && t.at1(n, 0) + t.c0[n] == 0.0;
    for (std::size_t i = 0; i <= m; ++i) {
      ok = ok && t.at2(n, i, 0) + 0.5 * t.at1(n, i) == 0.0;
      for (std::size_t j = 0; j <= m; ++j) asym = std::max(asym, std::abs(t.at2(n, i, j) - t.at2(n, j, i)));
    }
  }
  return ok && asym <= 1e-12;
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "pathctl");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli::run(static_cast<int>(argv.size()), argv.data());
}

bool same_tree(const std::filesystem::path& a, const std::filesystem::path& b, std::size_t& files) {
  files = 0;
  for (const auto& e : std::filesystem::directory_iterator(a)) {
    const auto other = b / e.path().filename();
    if (!std::filesystem::exists(other)) return false;
    if (testing_support::slurp(e.path()) != testing_support::slurp(other)) return false;
    ++files;
  }
  return files > 0;
}

}  // namespace

int main() {
  Report report;
  // Keep the pipelines' progress output out of the criterion lines.
  std::ostringstream sink;

  report.check(1, "zero fixed point", 1.0, [] {
    const LQParams zero{0, 0, 0, 1.0, 0.05, 1.0};
    const auto g = SolverGrid::with_delay_cells(zero, 5);
    const double f = max_abs(solve_f_system(zero, g).tables);
    const double e = max_abs(solve_e_system(GameParams::from_scalar(zero, 10), g).tables);
    return Outcome{f <= 1e-12 && e <= 1e-12, "max |F| = " + fmt(f) + ", max |E| = " + fmt(e)};
  });

  report.check(2, "structural invariants", 0.0, [] {
    const auto g = SolverGrid::with_delay_cells(kBaseline, 10);
    double af = 0.0, ae = 0.0;
    const bool f = structure_holds(solve_f_system(kBaseline, g).tables, kBaseline.c, af);
    const bool e = structure_holds(solve_e_system(GameParams::from_scalar(kBaseline, 10), g).tables, kBaseline.c, ae);
    return Outcome{f && e, "F exact " + std::string(f ? "yes" : "no") + ", E exact " + (e ? "yes" : "no") +
                               ", max asymmetry " + fmt(std::max(af, ae))};
  });

  report.check(3, "HJB residual convergence", 60.0, [] {
    const auto sel = select_cross_factor(kBaseline, LadderSettings{{5, 10, 20}, 50, 20240601});
    const auto& l = sel.cross_factor == 0.5 ? sel.half : sel.one;
    std::string levels;
    for (const auto& lv : l.levels) levels += " " + fmt(lv.max_residual);
    return Outcome{l.converges(0.9), "cross factor " + fmt(sel.cross_factor) + ", residuals" + levels + ", slope " +
                                         fmt(l.slope)};
  });

  report.check(4, "deterministic oracle", 30.0, [] {
    LQParams p = kBaseline;
    p.sigma = 0.0;
    const auto g = SolverGrid::with_delay_cells(p, 5);
    const auto s = solve_f_system(p, g, select_cross_factor(p).cross_factor);
    SimConfig cfg;
    cfg.n_paths = 1;
    cfg.dt_sim = g.dt;
    const auto oracle = deterministic_oracle(p, cfg);
    const double v = eval_value(s, 0.0, 1.0, detail::history_path(p, cfg));
    const double rel = std::abs(v - oracle.optimum) / std::abs(oracle.optimum);
    const auto tr = simulate_trajectory(feedback_policy(s), p, cfg);
    double sup = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < tr.controls.size(); ++k) {
      sup = std::max(sup, std::abs(tr.controls[k] - oracle.control[k]));
      scale = std::max(scale, std::abs(oracle.control[k]));
    }
    return Outcome{rel <= 0.01 && sup / scale <= 0.05, "V = " + fmt(v) + ", optimum " + fmt(oracle.optimum) +
                                                           ", rel " + fmt(rel) + ", control sup rel " + fmt(sup / scale)};
  });

  const auto baseline_surfaces = [] {
    return solve_f_system(kBaseline, SolverGrid::with_delay_cells(kBaseline, 10), select_cross_factor(kBaseline).cross_factor);
  };

  report.check(5, "verification", 120.0, [&] {
    const auto s = baseline_surfaces();
    SimConfig cfg;  // 10^4 paths, dt = tau/10
    const auto fb = feedback_policy(s);
    const auto r = verification_check(s, kBaseline, cfg,
                                      {zero_policy(), shifted_policy(fb, 0.5), scaled_policy(fb, 1.2), constant_policy(1.0)});
    std::size_t clear = 0;
    std::string gaps;
    for (std::size_t k = 0; k < r.rivals.size(); ++k) {
      clear += r.rival_gap_sigmas[k] > 3.0 ? 1 : 0;
      gaps += " " + fmt(r.rival_gap_sigmas[k]);
    }
    return Outcome{r.value_matches && std::all_of(r.rival_dominated.begin(), r.rival_dominated.end(), [](bool b) { return b; }) &&
                       clear >= 2,
                   "V = " + fmt(r.value) + ", J = " + fmt(r.optimal.estimate.mean) + " +/- " +
                       fmt(r.optimal.estimate.std_error) + ", rival gaps (se)" + gaps};
  });

  report.check(6, "dynamic programming principle", 0.0, [&] {
    const auto s = baseline_surfaces();
    const auto r = dpp_check(s, kBaseline, SimConfig{}, 0.5, {zero_policy(), constant_policy(1.0)});
    bool exceed = true;
    std::string bridges;
    for (const auto& b : r.bridges) {
      exceed = exceed && b.estimate.mean > r.feedback_bridge.estimate.mean && b.estimate.mean > r.value;
      bridges += ", " + b.policy + " " + fmt(b.estimate.mean);
    }
    return Outcome{r.feedback_matches && exceed, "V = " + fmt(r.value) + ", feedback bridge " +
                                                     fmt(r.feedback_bridge.estimate.mean) + " +/- " +
                                                     fmt(r.feedback_bridge.estimate.std_error) + bridges};
  });

  report.check(7, "functional Ito formula", 0.0, [] {
    bool pass = true;
    std::string detail;
    for (const auto& [name, f] : ito_reference_functionals()) {
      const auto st = ito_refinement(name, f, {16, 64, 256, 1024}, 100, 42);
      pass = pass && st.pass();
      detail += (detail.empty() ? "" : "; ") + name + ":";
      for (const auto& l : st.levels) detail += " " + fmt(l.median_abs);
    }
    return Outcome{pass, detail};
  });

  report.check(8, "predictability", 0.0, [&] {
    const auto s = baseline_surfaces();
    testing_support::Gen gen(8);
    const std::vector<double> bumps{0.1, -1.0, 4.0};
    const PairFunctional value = [&](const PathPair& p) {
      return eval_value(s, p.state.end_time(), p.state.last_scalar(), p.control);
    };
    const PairFunctional current = [](const PathPair& p) { return p.control.last_scalar(); };
    std::size_t value_ok = 0, current_fails = 0;
    const std::size_t trials = 50;
    for (std::size_t k = 0; k < trials; ++k) {
      const double t = 0.005 * static_cast<double>(gen.index(0, 199));
      const std::size_t n = static_cast<std::size_t>(std::lround(t / 0.005)) + 11;
      const HistoryShape h{gen.uniform(-1, 1), gen.uniform(-1, 1), gen.uniform(1, 10), gen.uniform(0, 6)};
      const auto z = SampledPath::sample(-0.05, 0.005, n, h);
      const auto y = SampledPath::sample(-0.05, 0.005, n, [&](double) { return gen.uniform(-2, 2); });
      value_ok += predictability_check(value, PathPair(y, z), bumps) ? 1 : 0;
      current_fails += predictability_check(current, PathPair(y, z), bumps) ? 0 : 1;
    }
    return Outcome{value_ok == trials && current_fails == trials,
                   "value ansatz predictable " + std::to_string(value_ok) + "/" + std::to_string(trials) +
                       ", z_t rejected " + std::to_string(current_fails) + "/" + std::to_string(trials)};
  });

  report.check(9, "N-player game", 600.0, [] {
    GameParams p = GameParams::from_scalar(kBaseline, 10);
    const auto sel = select_game_cross_factor(p, LadderSettings{{5, 10, 20}, 50, 20240601});
    const auto& ladder = sel.cross_factor == 0.5 ? sel.half : sel.one;
    const auto g = SolverGrid::with_delay_cells(kBaseline, 10);
    const auto s = solve_e_system(p, g, sel.cross_factor);
    GameSimConfig cfg{10000, 42, g.dt, {1.0, 0.8, 0.6, 0.4, 0.2, 0.0, -0.2, -0.4, -0.6, -0.8}, 1};
    const auto nash = nash_deviation_check(s, cfg, 0, {zero_deviation(), shifted_deviation(0.5), scaled_deviation(1.5)});
    const auto gaps = n_ladder(kBaseline, g, sel.cross_factor, {2, 10, 50, 100});
    bool shrinking = true;
    for (std::size_t k = 1; k < gaps.size(); ++k) shrinking = shrinking && gaps[k].gap < gaps[k - 1].gap;
    const bool ratio = gaps.back().gap <= 0.25 * gaps.front().gap;
    std::string devs;
    for (const auto& d : nash.deviations) devs += " " + fmt(d.estimate.mean);
    std::string gap_text;
    for (const auto& e : gaps) gap_text += " " + fmt(e.gap);
    return Outcome{nash.all_pass() && ladder.converges(0.9) && shrinking && ratio,
                   "J(eq) = " + fmt(nash.equilibrium.mean) + " +/- " + fmt(nash.equilibrium.std_error) +
                       ", deviations" + devs + ", residual slope " + fmt(ladder.slope) + " (cross factor " +
                       fmt(sel.cross_factor) + "), gaps" + gap_text};
  });

  report.check(10, "determinism", 0.0, [&] {
    testing_support::TempDir dir("acceptance");
    auto* saved = std::cout.rdbuf(sink.rdbuf());
    std::size_t compared = 0;
    bool same = true;
    std::string bad;
    const std::vector<std::pair<std::string, Json>> pipelines{
        {"solve", {{"grid", {{"delay_cells", 10}}}}},
        {"simulate", {{"sim", {{"n_paths", 2000}, {"per_path_csv", true}}}}},
        {"verify", {{"sim", {{"n_paths", 2000}}}}},
        {"dpp", {{"sim", {{"n_paths", 2000}}}}},
        {"converge", {{"converge", {{"probes", 10}}}}},
        {"ito-check", {{"ito", {{"paths", 20}}}}},
        {"game", {{"params", {{"n_players", 4}}}, {"sim", {{"n_paths", 500}}}, {"converge", {{"probes", 5}}}}}};
    for (const auto& [mode, cfg] : pipelines) {
      const auto path = dir.path() / (mode + ".json");
      std::ofstream(path) << cfg.dump();
      const auto a = dir.path() / (mode + "_a"), b = dir.path() / (mode + "_b"), c = dir.path() / (mode + "_c");
      const int ra = run_cli({mode, "--config", path.string(), "--threads", "1", "--output", a.string()});
      const int rb = run_cli({mode, "--config", path.string(), "--threads", "1", "--output", b.string()});
      const int rc = run_cli({mode, "--config", path.string(), "--threads", "2", "--output", c.string()});
      std::size_t nb = 0, nc = 0;
      const bool ok = ra != cli::kUsage && ra == rb && ra == rc && same_tree(a, b, nb) && same_tree(a, c, nc);
      if (!ok) bad += " " + mode;
      same = same && ok;
      compared += nb + nc;
    }
    std::cout.rdbuf(saved);
    return Outcome{same, std::to_string(pipelines.size()) + " pipelines, " + std::to_string(compared) +
                             " artifact comparisons" + (bad.empty() ? "" : ", differing:" + bad)};
  });

  std::cout << (report.failures() == 0 ? "all criteria pass" : std::to_string(report.failures()) + " criteria FAIL")
            << std::endl;
  return report.failures() == 0 ? 0 : 1;
}
