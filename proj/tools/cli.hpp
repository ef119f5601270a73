// Experiment driver behind the `pathctl` executable.
#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pathctl.hpp"

namespace pathctl::cli {

enum ExitCode : int { kPass = 0, kFail = 1, kUsage = 2 };

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Config reading. Every lookup carries its dotted key so errors name it.

class Section {
 public:
  Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where("") + ": expected an object");
  }

  void allow(std::initializer_list<const char*> keys) const {
    const std::set<std::string> known(keys.begin(), keys.end());
    for (const auto& [k, v] : j_.items())
      if (!known.count(k)) throw ConfigError(where(k) + ": unknown key");
  }

  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  double number(const char* key, double fallback) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(where(key) + ": expected a number");
    return v.get<double>();
  }

  std::uint64_t count(const char* key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      throw ConfigError(where(key) + ": expected a nonnegative integer");
    }
    return v.get<std::uint64_t>();
  }

  bool flag(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_boolean()) throw ConfigError(where(key) + ": expected true or false");
    return j_.at(key).get<bool>();
  }

  std::string text(const char* key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_string()) throw ConfigError(where(key) + ": expected a string");
    return j_.at(key).get<std::string>();
  }

  std::vector<double> numbers(const char* key) const {
    std::vector<double> out;
    for (const auto& v : list(key)) {
      if (!v.is_number()) throw ConfigError(where(key) + ": expected an array of numbers");
      out.push_back(v.get<double>());
    }
    return out;
  }

  std::vector<std::size_t> counts(const char* key, std::vector<std::size_t> fallback) const {
    if (!has(key)) return fallback;
    std::vector<std::size_t> out;
    for (const auto& v : list(key)) {
      if (!v.is_number_unsigned() || v.get<std::size_t>() == 0) {
        throw ConfigError(where(key) + ": expected an array of positive integers");
      }
      out.push_back(v.get<std::size_t>());
    }
    return out;
  }

  std::vector<std::string> texts(const char* key, std::vector<std::string> fallback) const {
    if (!has(key)) return fallback;
    std::vector<std::string> out;
    for (const auto& v : list(key)) {
      if (!v.is_string()) throw ConfigError(where(key) + ": expected an array of strings");
      out.push_back(v.get<std::string>());
    }
    return out;
  }

  std::optional<Section> sub(const char* key) const {
    if (!has(key)) return std::nullopt;
    return Section(j_.at(key), where(key));
  }

  std::string where(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "config" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  const Json& list(const char* key) const {
    const auto& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(where(key) + ": expected an array");
    return v;
  }

  const Json& j_;
  std::string path_;
};

struct Overrides {
  std::string config_path;
  std::string output;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::string cross_factor;
};

struct Experiment {
  std::string mode;
  GameParams params;  // n_players is only used by the game pipeline
  SolverGrid grid;
  SimConfig sim;
  std::vector<double> game_y0;
  bool per_path_csv = false;
  std::filesystem::path output_dir;
  std::string cross_factor_policy = "auto";
  LadderSettings ladder;
  std::vector<std::string> rivals{"zero", "shift:0.5", "scale:1.2", "constant:1"};
  double dpp_u = 0.5;
  std::vector<std::string> bridges{"zero", "constant:1"};
  std::string simulate_policy = "feedback";
  std::size_t game_player = 0;
  std::vector<std::string> deviations{"zero", "shift:0.5", "scale:1.5"};
  std::vector<std::size_t> n_ladder{2, 10, 50, 100};
  std::vector<std::size_t> ito_levels{16, 64, 256, 1024};
  std::size_t ito_paths = 100;
  double ito_horizon = 1.0;
};

inline Json load_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path);
  const std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) return Json();
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }
}

inline Experiment parse_experiment(const Json& root, const std::string& mode, const Overrides& ov) {
  const Section top(root, "");
  top.allow({"mode", "params", "grid", "sim", "output_dir", "cross_factor_policy", "converge", "verify", "dpp",
             "simulate", "game", "ito"});
  Experiment ex;
  ex.mode = mode;
  if (top.has("mode") && top.text("mode", "") != mode) {
    throw ConfigError("mode: config says '" + top.text("mode", "") + "' but subcommand is '" + mode + "'");
  }

  auto& p = ex.params;
  if (auto s = top.sub("params")) {
    s->allow({"q", "eps", "c", "horizon", "tau", "sigma", "n_players"});
    p.q = s->number("q", p.q);
    p.eps = s->number("eps", p.eps);
    p.c = s->number("c", p.c);
    p.horizon = s->number("horizon", p.horizon);
    p.tau = s->number("tau", p.tau);
    p.sigma = s->number("sigma", p.sigma);
    p.n_players = s->count("n_players", p.n_players);
  }
  try {
    p.scalar().validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("params: ") + e.what());
  }

  std::optional<double> dt;
  if (auto s = top.sub("grid")) {
    s->allow({"dt", "delay_cells"});
    if (s->has("dt") && s->has("delay_cells")) throw ConfigError("grid: give either dt or delay_cells");
    if (s->has("dt")) dt = s->number("dt", 0.0);
    if (s->has("delay_cells")) {
      const auto cells = s->count("delay_cells", 0);
      if (cells == 0) throw ConfigError("grid.delay_cells: must be positive");
      dt = p.tau / static_cast<double>(cells);
    }
  }

  if (auto s = top.sub("sim")) {
    s->allow({"n_paths", "seed", "dt_sim", "y0", "z_hist", "threads", "per_path_csv"});
    ex.sim.n_paths = s->count("n_paths", ex.sim.n_paths);
    ex.sim.seed = s->count("seed", ex.sim.seed);
    ex.sim.threads = s->count("threads", ex.sim.threads);
    ex.per_path_csv = s->flag("per_path_csv", false);
    if (s->has("dt_sim")) {
      const double d = s->number("dt_sim", 0.0);
      if (dt && !detail::same_step(*dt, d)) throw ConfigError("sim.dt_sim: must equal the solver grid step");
      dt = d;
    }
    if (s->has("y0")) {
      const Json& y = root.at("sim").at("y0");
      if (y.is_array()) {
        ex.game_y0 = s->numbers("y0");
      } else {
        ex.sim.y0 = s->number("y0", ex.sim.y0);
      }
    }
    if (s->has("z_hist")) {
      const auto values = s->numbers("z_hist");
      if (values.empty()) throw ConfigError("sim.z_hist: must not be empty");
      ex.sim.z_hist = SampledPath::scalar(-p.tau, dt.value_or(p.tau / 10.0), values);  // dt is final here
    }
  }
  if (!dt) dt = p.tau / 10.0;
  try {
    ex.grid = SolverGrid::make(p.scalar(), *dt);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }
  ex.sim.dt_sim = *dt;
  if (ex.sim.z_hist && ex.sim.z_hist->size() > ex.grid.delay_steps()) {
    throw ConfigError("sim.z_hist: history covers [-tau, 0) and has at most tau/dt entries");
  }

  ex.output_dir = top.text("output_dir", "out");
  ex.cross_factor_policy = top.text("cross_factor_policy", "auto");

  if (auto s = top.sub("converge")) {
    s->allow({"delay_cells", "probes", "probe_seed"});
    ex.ladder.delay_cells = s->counts("delay_cells", ex.ladder.delay_cells);
    ex.ladder.probes = s->count("probes", ex.ladder.probes);
    ex.ladder.seed = s->count("probe_seed", ex.ladder.seed);
    if (ex.ladder.delay_cells.size() < 2) throw ConfigError("converge.delay_cells: need two or more grids");
  }
  if (auto s = top.sub("verify")) {
    s->allow({"rivals"});
    ex.rivals = s->texts("rivals", ex.rivals);
  }
  if (auto s = top.sub("dpp")) {
    s->allow({"u", "bridges"});
    ex.dpp_u = s->number("u", ex.dpp_u);
    ex.bridges = s->texts("bridges", ex.bridges);
  }
  if (auto s = top.sub("simulate")) {
    s->allow({"policy"});
    ex.simulate_policy = s->text("policy", ex.simulate_policy);
  }
  if (auto s = top.sub("game")) {
    s->allow({"player", "deviations", "n_ladder"});
    ex.game_player = s->count("player", 0);
    ex.deviations = s->texts("deviations", ex.deviations);
    ex.n_ladder = s->counts("n_ladder", ex.n_ladder);
  }
  if (auto s = top.sub("ito")) {
    s->allow({"levels", "paths", "horizon"});
    ex.ito_levels = s->counts("levels", ex.ito_levels);
    ex.ito_paths = s->count("paths", ex.ito_paths);
    ex.ito_horizon = s->number("horizon", ex.ito_horizon);
  }

  if (!ov.output.empty()) ex.output_dir = ov.output;
  if (ov.seed) ex.sim.seed = *ov.seed;
  if (ov.threads) ex.sim.threads = *ov.threads;
  if (!ov.cross_factor.empty()) ex.cross_factor_policy = ov.cross_factor;

  if (ex.cross_factor_policy != "auto" && ex.cross_factor_policy != "half" && ex.cross_factor_policy != "one") {
    throw ConfigError("cross_factor_policy: expected auto, half or one");
  }
  if (ex.sim.threads == 0) throw ConfigError("sim.threads: must be at least 1");
  if (ex.sim.n_paths == 0) throw ConfigError("sim.n_paths: must be at least 1");
  if (mode == "game") {
    if (p.n_players < 2) throw ConfigError("params.n_players: need at least two players");
    if (ex.game_y0.empty()) ex.game_y0.assign(p.n_players, ex.sim.y0);
    if (ex.game_y0.size() != p.n_players) throw ConfigError("sim.y0: need one initial state per player");
    if (ex.game_player >= p.n_players) throw ConfigError("game.player: out of range");
  } else if (!ex.game_y0.empty()) {
    throw ConfigError("sim.y0: a vector of initial states is only valid for the game");
  }
  return ex;
}

// ---------------------------------------------------------------------------
// Policy specs: "feedback", "zero", "constant:<a>", "shift:<d>", "scale:<k>".

inline std::pair<std::string, double> split_spec(const std::string& spec, const std::string& key) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) return {spec, 0.0};
  try {
    return {spec.substr(0, colon), detail::parse_double(spec.substr(colon + 1))};
  } catch (const std::exception&) {
    throw ConfigError(key + ": bad number in policy '" + spec + "'");
  }
}

inline ControlPolicy make_policy(const std::string& spec, const Surfaces& s, const std::string& key) {
  const auto [kind, arg] = split_spec(spec, key);
  if (kind == "feedback") return feedback_policy(s);
  if (kind == "zero") return zero_policy();
  if (kind == "constant") return constant_policy(arg);
  if (kind == "shift") return shifted_policy(feedback_policy(s), arg);
  if (kind == "scale") return scaled_policy(feedback_policy(s), arg);
  throw ConfigError(key + ": unknown policy '" + spec + "'");
}

inline GameDeviation make_deviation(const std::string& spec, const std::string& key) {
  const auto [kind, arg] = split_spec(spec, key);
  if (kind == "equilibrium") return equilibrium_deviation();
  if (kind == "zero") return zero_deviation();
  if (kind == "shift") return shifted_deviation(arg);
  if (kind == "scale") return scaled_deviation(arg);
  if (kind == "constant") {
    const double a = arg;
    return {"constant " + detail::format_double(a), [a](const GameContext&, double) { return a; }};
  }
  throw ConfigError(key + ": unknown deviation '" + spec + "'");
}

// ---------------------------------------------------------------------------
// Pipelines

struct CrossFactorChoice {
  double value = 1.0;
  Json record;
};

inline CrossFactorChoice choose_cross_factor(const Experiment& ex, bool game) {
  if (ex.cross_factor_policy == "half") return {0.5, {{"cross_factor_policy", "half"}}};
  if (ex.cross_factor_policy == "one") return {1.0, {{"cross_factor_policy", "one"}}};
  const auto sel = game ? select_game_cross_factor(ex.params, ex.ladder) : select_cross_factor(ex.params.scalar(), ex.ladder);
  return {sel.cross_factor, {{"cross_factor_policy", "auto"}, {"cross_factor_selection", to_json(sel)}}};
}

inline void log_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

inline Surfaces solve_and_write(const Experiment& ex) {
  const auto choice = choose_cross_factor(ex, false);
  auto s = solve_f_system(ex.params.scalar(), ex.grid, choice.value);
  log_warnings(s.warnings);
  write_surfaces(ex.output_dir, s, choice.record);
  std::cout << "solved surfaces on " << ex.grid.n_t << " x " << ex.grid.n_theta << " grid, cross factor "
            << detail::format_double(s.cross_factor) << ", written to " << ex.output_dir.string() << '\n';
  return s;
}

inline void write_report(const Experiment& ex, const std::string& name, const Json& j) {
  detail::write_json_file(ex.output_dir / name, j);
  std::cout << "report: " << (ex.output_dir / name).string() << '\n';
}

inline int status(bool pass) {
  std::cout << (pass ? "all flags pass" : "some flags FAIL") << '\n';
  return pass ? kPass : kFail;
}

inline int run_solve(const Experiment& ex) {
  solve_and_write(ex);
  return kPass;
}

inline int run_simulate(const Experiment& ex) {
  const auto s = solve_and_write(ex);
  const auto p = ex.params.scalar();
  const auto policy = make_policy(ex.simulate_policy, s, "simulate.policy");
  const auto samples = simulate_cost_samples(policy, p, ex.sim);
  const auto est = summarize(samples);
  const double v = eval_value(s, 0.0, ex.sim.y0, detail::history_path(p, ex.sim));
  write_report(ex, "simulate_report.json",
               {{"V", v},
                {"estimates", Json::array({to_json(policy.name, est)})},
                {"flags", {{"all_pass", true}}},
                {"seed", ex.sim.seed},
                {"params", to_json(p)},
                {"grid", to_json(ex.grid)}});
  if (ex.per_path_csv) {
    auto os = detail::open_out(ex.output_dir / "path_costs.csv");
    os << "path_id,cost\n";
    for (std::size_t k = 0; k < samples.size(); ++k) os << k << ',' << detail::format_double(samples[k]) << '\n';
  }
  std::cout << policy.name << ": mean " << est.mean << " +/- " << est.std_error << " (V = " << v << ")\n";
  return kPass;
}

inline int run_verify(const Experiment& ex) {
  const auto s = solve_and_write(ex);
  std::vector<ControlPolicy> rivals;
  for (const auto& r : ex.rivals) rivals.push_back(make_policy(r, s, "verify.rivals"));
  const auto rep = verification_check(s, ex.params.scalar(), ex.sim, rivals);
  write_report(ex, "verify_report.json", to_json(rep, ex.params.scalar(), ex.grid, ex.sim.seed));
  std::cout << "V = " << rep.value << ", J(feedback) = " << rep.optimal.estimate.mean << " +/- "
            << rep.optimal.estimate.std_error << '\n';
  return status(rep.all_pass());
}

inline int run_dpp(const Experiment& ex) {
  const auto s = solve_and_write(ex);
  std::vector<ControlPolicy> bridges;
  for (const auto& b : ex.bridges) bridges.push_back(make_policy(b, s, "dpp.bridges"));
  const auto rep = dpp_check(s, ex.params.scalar(), ex.sim, ex.dpp_u, bridges);
  write_report(ex, "dpp_report.json", to_json(rep, ex.params.scalar(), ex.grid, ex.sim.seed));
  std::cout << "V = " << rep.value << ", feedback bridge = " << rep.feedback_bridge.estimate.mean << " +/- "
            << rep.feedback_bridge.estimate.std_error << '\n';
  return status(rep.all_pass());
}

inline bool strictly_shrinking(const std::vector<NLadderEntry>& ladder) {
  for (std::size_t k = 1; k < ladder.size(); ++k)
    if (!(ladder[k].gap < ladder[k - 1].gap)) return false;
  return true;
}

inline int run_game(const Experiment& ex) {
  const auto choice = choose_cross_factor(ex, true);
  const auto s = solve_e_system(ex.params, ex.grid, choice.value);
  log_warnings(s.warnings);
  write_surfaces(ex.output_dir, s, choice.record);

  std::vector<GameDeviation> devs;
  for (const auto& d : ex.deviations) devs.push_back(make_deviation(d, "game.deviations"));
  GameSimConfig cfg{ex.sim.n_paths, ex.sim.seed, ex.sim.dt_sim, ex.game_y0, ex.sim.threads};
  const auto rep = nash_deviation_check(s, cfg, ex.game_player, devs);
  write_report(ex, "nash_report.json", to_json(rep, ex.params, ex.grid, ex.sim.seed));

  const auto probes = make_game_probes(ex.params, ex.ladder.probes, ex.ladder.seed,
                                       ex.params.tau / static_cast<double>(*std::min_element(
                                                           ex.ladder.delay_cells.begin(), ex.ladder.delay_cells.end())));
  const auto ladder = game_residual_ladder(ex.params, choice.value, ex.ladder.delay_cells, probes);
  const auto gaps = n_ladder(ex.params.scalar(), ex.grid, choice.value, ex.n_ladder);
  Json gap_rows = Json::array();
  for (const auto& g : gaps) gap_rows.push_back({{"n_players", g.n_players}, {"sup_gap", g.gap}});
  const bool converges = ladder.converges(0.9);
  const bool shrinking = strictly_shrinking(gaps);
  write_report(ex, "game_convergence.json",
               {{"residual_ladder", to_json(ladder)},
                {"n_ladder", gap_rows},
                {"flags", {{"residual_converges", converges}, {"gap_shrinks", shrinking}}},
                {"params", to_json(ex.params)},
                {"grid", to_json(ex.grid)}});
  std::cout << "player " << rep.player << " of " << rep.n_players << ": V = " << rep.value
            << ", J(eq) = " << rep.equilibrium.mean << " +/- " << rep.equilibrium.std_error << '\n';
  return status(rep.all_pass() && converges && shrinking);
}

inline int run_ito(const Experiment& ex) {
  Json studies = Json::array();
  bool pass = true;
  for (const auto& [name, f] : ito_reference_functionals()) {
    const auto st = ito_refinement(name, f, ex.ito_levels, ex.ito_paths, ex.sim.seed, ex.ito_horizon);
    studies.push_back(to_json(st));
    pass = pass && st.pass();
    std::cout << name << ":";
    for (const auto& l : st.levels) std::cout << ' ' << l.median_abs;
    std::cout << (st.pass() ? "  ok" : "  FAIL") << '\n';
  }
  write_report(ex, "ito_report.json",
               {{"studies", studies}, {"flags", {{"all_pass", pass}}}, {"seed", ex.sim.seed}, {"paths", ex.ito_paths}});
  return status(pass);
}

inline int run_converge(const Experiment& ex) {
  const auto p = ex.params.scalar();
  ResidualLadder chosen;
  Json record;
  if (ex.cross_factor_policy == "auto") {
    const auto sel = select_cross_factor(p, ex.ladder);
    chosen = sel.cross_factor == 0.5 ? sel.half : sel.one;
    record = to_json(sel);
  } else {
    const double k = ex.cross_factor_policy == "half" ? 0.5 : 1.0;
    const auto coarse = p.tau / static_cast<double>(*std::min_element(ex.ladder.delay_cells.begin(), ex.ladder.delay_cells.end()));
    chosen = residual_ladder(p, k, ex.ladder.delay_cells, make_probes(p, ex.ladder.probes, ex.ladder.seed, coarse));
    record = {{"selected", k}, {"ladder", to_json(chosen)}};
  }
  std::filesystem::create_directories(ex.output_dir);
  {
    auto os = detail::open_out(ex.output_dir / "convergence.csv");
    os << "cross_factor,delay_cells,dt,max_residual\n";
    for (const auto& l : chosen.levels) {
      os << detail::format_double(chosen.cross_factor) << ',' << l.delay_cells << ',' << detail::format_double(l.dt)
         << ',' << detail::format_double(l.max_residual) << '\n';
    }
  }
  const bool pass = chosen.converges(0.9);
  write_report(ex, "convergence.json",
               {{"cross_factor", record},
                {"slope", std::isnan(chosen.slope) ? Json(nullptr) : Json(chosen.slope)},
                {"flags", {{"slope_at_least_0.9", pass}}},
                {"params", to_json(p)},
                {"probes", ex.ladder.probes},
                {"probe_seed", ex.ladder.seed}});
  std::cout << "cross factor " << chosen.cross_factor << ", slope " << chosen.slope << '\n';
  return status(pass);
}

inline int run_mode(const Experiment& ex) {
  if (ex.mode == "solve") return run_solve(ex);
  if (ex.mode == "simulate") return run_simulate(ex);
  if (ex.mode == "verify") return run_verify(ex);
  if (ex.mode == "dpp") return run_dpp(ex);
  if (ex.mode == "game") return run_game(ex);
  if (ex.mode == "ito-check") return run_ito(ex);
  return run_converge(ex);
}

// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv) {
  CLI::App app{"Delayed linear-quadratic control: solver, simulator and checks", "pathctl"};
  app.require_subcommand(0, 1);
  Overrides ov;
  std::string surfaces_dir, slice_name, plot_output;
  std::optional<double> slice_time;

  const std::vector<std::pair<std::string, std::string>> modes{
      {"solve", "solve the coefficient system and write surfaces"},
      {"simulate", "Monte Carlo cost of one policy"},
      {"verify", "verification check against rival policies"},
      {"dpp", "dynamic programming check at an intermediate time"},
      {"game", "N-player game: surfaces, Nash deviations, convergence"},
      {"ito-check", "functional Ito defect under grid refinement"},
      {"converge", "HJB residual refinement study"}};
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : modes) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", ov.config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);
    sub->add_option("--output", ov.output, "output directory");
    sub->add_option("--seed", ov.seed, "Monte Carlo seed");
    sub->add_option("--threads", ov.threads, "worker threads");
    sub->add_option("--cross-factor", ov.cross_factor, "cross factor policy")
        ->check(CLI::IsMember({"auto", "half", "one"}));
    subs.push_back(sub);
  }
  auto* plot = app.add_subcommand("plotdata", "write a long-format CSV slice of solved surfaces");
  plot->add_option("--surfaces", surfaces_dir, "directory holding solved surfaces")->required();
  plot->add_option("--slice", slice_name, "surface file stem, e.g. f1")->required();
  plot->add_option("--time", slice_time, "keep only rows at this time");
  plot->add_option("--output", plot_output, "output CSV (default stdout)");

  if (argc <= 1) {
    std::cerr << app.help();
    return kUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e);
    return kPass;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (plot->parsed()) {
      if (plot_output.empty()) {
        emit_plotdata(surfaces_dir, {slice_name, slice_time}, std::cout);
      } else {
        std::ofstream os(plot_output, std::ios::binary);
        if (!os) throw ConfigError("cannot write " + plot_output);
        emit_plotdata(surfaces_dir, {slice_name, slice_time}, os);
      }
      return kPass;
    }
    std::string mode;
    for (std::size_t k = 0; k < subs.size(); ++k)
      if (subs[k]->parsed()) mode = modes[k].first;
    if (mode.empty()) {
      std::cerr << app.help();
      return kUsage;
    }
    const Json root = load_json(ov.config_path);
    if (root.is_null() || (root.is_object() && root.empty())) {
      std::cerr << "config error: " << ov.config_path << " is empty\n" << app.help();
      return kUsage;
    }
    const auto ex = parse_experiment(root, mode, ov);
    return run_mode(ex);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const SurfaceFileError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericalBlowUp& e) {
    std::cerr << "numerical blow-up: " << e.what() << '\n';
    return kFail;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
}

}  // namespace pathctl::cli
