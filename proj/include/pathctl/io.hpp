/**
 * @file io.hpp
 * @brief Persistence of solved surfaces and JSON reports.
 *
 * Surfaces are stored as one long-format CSV per coefficient (f0.csv ...
 * f3.csv for the single-agent problem, e0.csv ... e3.csv for the game) plus a
 * meta.json. Numbers are written in shortest round-trip form, so reloading
 * reproduces the solved tables bit for bit.
 */
#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "pathctl/convergence.hpp"
#include "pathctl/game.hpp"
#include "pathctl/ito_study.hpp"
#include "pathctl/lq_delay.hpp"
#include "pathctl/simulation.hpp"

namespace pathctl {

using Json = nlohmann::ordered_json;

class SurfaceFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw SurfaceFileError("cannot write " + p.string());
  return os;
}

inline std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw SurfaceFileError("missing surface file " + p.string());
  return is;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

inline void write_tables(const std::filesystem::path& dir, const std::string& prefix, const AnsatzTables& t) {
  std::filesystem::create_directories(dir);
  const auto& g = t.grid;
  const std::size_t m = g.n_theta;
  {
    auto os = open_out(dir / (prefix + "0.csv"));
    os << "t,value\n";
    for (std::size_t n = 0; n < g.n_t; ++n) os << format_double(g.time(n)) << ',' << format_double(t.c0[n]) << '\n';
  }
  {
    auto os = open_out(dir / (prefix + "1.csv"));
    os << "t,theta,value\n";
    for (std::size_t n = 0; n < g.n_t; ++n)
      for (std::size_t j = 0; j < m; ++j)
        os << format_double(g.time(n)) << ',' << format_double(g.theta(j)) << ',' << format_double(t.at1(n, j)) << '\n';
  }
  {
    auto os = open_out(dir / (prefix + "2.csv"));
    os << "t,theta1,theta2,value\n";
    for (std::size_t n = 0; n < g.n_t; ++n)
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
          os << format_double(g.time(n)) << ',' << format_double(g.theta(i)) << ',' << format_double(g.theta(j)) << ','
             << format_double(t.at2(n, i, j)) << '\n';
  }
  {
    auto os = open_out(dir / (prefix + "3.csv"));
    os << "t,value\n";
    for (std::size_t n = 0; n < g.n_t; ++n) os << format_double(g.time(n)) << ',' << format_double(t.c3[n]) << '\n';
  }
}

/// Reads the value column of a surface CSV, checking the row count.
inline std::vector<double> read_values(const std::filesystem::path& p, std::size_t columns, std::size_t rows) {
  auto is = open_in(p);
  std::string line;
  std::getline(is, line);
  std::vector<double> values;
  values.reserve(rows);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != columns) throw SurfaceFileError(p.string() + ": malformed row '" + line + "'");
    values.push_back(parse_double(cells.back()));
  }
  if (values.size() != rows) throw SurfaceFileError(p.string() + ": unexpected number of rows");
  return values;
}

inline AnsatzTables read_tables(const std::filesystem::path& dir, const std::string& prefix, const SolverGrid& g) {
  AnsatzTables t(g);
  t.c0 = read_values(dir / (prefix + "0.csv"), 2, g.n_t);
  t.c1 = read_values(dir / (prefix + "1.csv"), 3, g.n_t * g.n_theta);
  t.c2 = read_values(dir / (prefix + "2.csv"), 4, g.n_t * g.n_theta * g.n_theta);
  t.c3 = read_values(dir / (prefix + "3.csv"), 2, g.n_t);
  return t;
}

inline Json read_json_file(const std::filesystem::path& p) {
  auto is = open_in(p);
  try {
    return Json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw SurfaceFileError(p.string() + ": " + e.what());
  }
}

inline void write_json_file(const std::filesystem::path& p, const Json& j) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  auto os = open_out(p);
  os << j.dump(2) << '\n';
}

}  // namespace detail

// ---------------------------------------------------------------------------
// JSON fragments

inline Json to_json(const LQParams& p) {
  return {{"q", p.q}, {"eps", p.eps}, {"c", p.c}, {"horizon", p.horizon}, {"tau", p.tau}, {"sigma", p.sigma}};
}

inline Json to_json(const GameParams& p) {
  Json j = to_json(p.scalar());
  j["n_players"] = p.n_players;
  return j;
}

inline Json to_json(const SolverGrid& g) { return {{"dt", g.dt}, {"n_t", g.n_t}, {"n_theta", g.n_theta}}; }

inline Json to_json(const std::string& policy, const CostEstimate& e) {
  return {{"policy", policy}, {"mean", e.mean}, {"stderr", e.std_error}, {"n", e.n}};
}

inline Json to_json(const ResidualLadder& l) {
  Json levels = Json::array();
  for (const auto& lv : l.levels) {
    levels.push_back({{"delay_cells", lv.delay_cells}, {"dt", lv.dt}, {"max_residual", lv.max_residual}});
  }
  Json j{{"cross_factor", l.cross_factor}, {"levels", levels}};
  if (std::isnan(l.slope)) {
    j["slope"] = nullptr;
  } else {
    j["slope"] = l.slope;
  }
  j["limit_defect"] = l.limit_defect;
  j["exact"] = l.exact();
  return j;
}

inline Json to_json(const CrossFactorSelection& s) {
  return {{"selected", s.cross_factor}, {"reason", s.reason}, {"half", to_json(s.half)}, {"one", to_json(s.one)}};
}

inline Json to_json(const ItoStudy& s) {
  Json levels = Json::array();
  for (const auto& l : s.levels) levels.push_back({{"steps", l.steps}, {"median_abs", l.median_abs}, {"max_abs", l.max_abs}});
  return {{"functional", s.functional},
          {"levels", levels},
          {"strictly_decreasing", s.strictly_decreasing()},
          {"vanishes", s.vanishes()},
          {"pass", s.pass()}};
}

inline Json statistical_thresholds() { return {{"equality_band_stderr", 3.0}, {"dominance_band_stderr", 2.0}}; }

inline Json to_json(const VerificationReport& r, const LQParams& p, const SolverGrid& g, std::uint64_t seed) {
  Json estimates = Json::array({to_json(r.optimal.policy, r.optimal.estimate)});
  Json rivals = Json::array();
  for (std::size_t k = 0; k < r.rivals.size(); ++k) {
    estimates.push_back(to_json(r.rivals[k].policy, r.rivals[k].estimate));
    const double gap = r.rival_gap_sigmas[k];
    rivals.push_back({{"policy", r.rivals[k].policy},
                      {"dominated", static_cast<bool>(r.rival_dominated[k])},
                      {"gap_stderr", std::isfinite(gap) ? Json(gap) : Json(nullptr)}});
  }
  return {{"V", r.value},
          {"estimates", estimates},
          {"flags", {{"value_matches", r.value_matches}, {"rivals", rivals}, {"all_pass", r.all_pass()}}},
          {"thresholds", statistical_thresholds()},
          {"seed", seed},
          {"params", to_json(p)},
          {"grid", to_json(g)}};
}

inline Json to_json(const DppReport& r, const LQParams& p, const SolverGrid& g, std::uint64_t seed) {
  Json estimates = Json::array({to_json(r.feedback_bridge.policy, r.feedback_bridge.estimate)});
  Json bridges = Json::array();
  for (std::size_t k = 0; k < r.bridges.size(); ++k) {
    estimates.push_back(to_json(r.bridges[k].policy, r.bridges[k].estimate));
    bridges.push_back({{"policy", r.bridges[k].policy}, {"dominated", static_cast<bool>(r.bridge_dominated[k])}});
  }
  return {{"V", r.value},
          {"u", r.u},
          {"estimates", estimates},
          {"flags", {{"feedback_matches", r.feedback_matches}, {"bridges", bridges}, {"all_pass", r.all_pass()}}},
          {"thresholds", statistical_thresholds()},
          {"seed", seed},
          {"params", to_json(p)},
          {"grid", to_json(g)}};
}

inline Json to_json(const NashReport& r, const GameParams& p, const SolverGrid& g, std::uint64_t seed) {
  Json estimates = Json::array({to_json("equilibrium", r.equilibrium)});
  Json devs = Json::array();
  for (std::size_t k = 0; k < r.deviations.size(); ++k) {
    estimates.push_back(to_json(r.deviations[k].policy, r.deviations[k].estimate));
    devs.push_back({{"policy", r.deviations[k].policy}, {"dominated", static_cast<bool>(r.deviation_dominated[k])}});
  }
  Json players = Json::array();
  for (std::size_t j = 0; j < r.equilibrium_all_players.size(); ++j) {
    const auto& e = r.equilibrium_all_players[j];
    players.push_back({{"player", j}, {"mean", e.mean}, {"stderr", e.std_error}, {"n", e.n}});
  }
  return {{"V", r.value},
          {"player", r.player},
          {"n_players", r.n_players},
          {"estimates", estimates},
          {"equilibrium_costs", players},
          {"flags", {{"deviations", devs}, {"all_pass", r.all_pass()}}},
          {"thresholds", statistical_thresholds()},
          {"seed", seed},
          {"params", to_json(p)},
          {"grid", to_json(g)}};
}

// ---------------------------------------------------------------------------
// Surfaces on disk

struct SurfaceMeta {
  std::string kind;  // "single" or "game"
  LQParams params;
  std::size_t n_players = 0;
  SolverGrid grid;
  double cross_factor = 1.0;
  std::vector<std::string> warnings;

  std::string prefix() const { return kind == "game" ? "e" : "f"; }
};

inline SurfaceMeta read_meta(const std::filesystem::path& dir) {
  const Json j = detail::read_json_file(dir / "meta.json");
  try {
    SurfaceMeta m;
    m.kind = j.at("kind").get<std::string>();
    const auto& p = j.at("params");
    m.params = {p.at("q").get<double>(),       p.at("eps").get<double>(),  p.at("c").get<double>(),
                p.at("horizon").get<double>(), p.at("tau").get<double>(), p.at("sigma").get<double>()};
    if (m.kind == "game") m.n_players = p.at("n_players").get<std::size_t>();
    const auto& g = j.at("grid");
    m.grid = {g.at("dt").get<double>(), g.at("n_t").get<std::size_t>(), g.at("n_theta").get<std::size_t>()};
    m.cross_factor = j.at("cross_factor").get<double>();
    m.warnings = j.value("warnings", std::vector<std::string>{});
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw SurfaceFileError("meta.json: " + std::string(e.what()));
  }
}

/// Writes f0..f3 CSVs and meta.json; `extra` entries are merged into meta.json.
inline void write_surfaces(const std::filesystem::path& dir, const Surfaces& s, const Json& extra = Json::object()) {
  detail::write_tables(dir, "f", s.tables);
  Json meta{{"kind", "single"},
            {"params", to_json(s.params)},
            {"grid", to_json(s.grid())},
            {"cross_factor", s.cross_factor},
            {"solver_version", kSolverVersion},
            {"warnings", s.warnings}};
  for (const auto& [k, v] : extra.items()) meta[k] = v;
  detail::write_json_file(dir / "meta.json", meta);
}

inline void write_surfaces(const std::filesystem::path& dir, const GameSurfaces& s, const Json& extra = Json::object()) {
  detail::write_tables(dir, "e", s.tables);
  Json meta{{"kind", "game"},
            {"params", to_json(s.params)},
            {"grid", to_json(s.grid())},
            {"cross_factor", s.cross_factor},
            {"solver_version", kSolverVersion},
            {"warnings", s.warnings}};
  for (const auto& [k, v] : extra.items()) meta[k] = v;
  detail::write_json_file(dir / "meta.json", meta);
}

inline Surfaces read_surfaces(const std::filesystem::path& dir) {
  const auto m = read_meta(dir);
  if (m.kind != "single") throw SurfaceFileError("meta.json: expected single-agent surfaces");
  return {m.params, m.cross_factor, detail::read_tables(dir, "f", m.grid), m.warnings};
}

inline GameSurfaces read_game_surfaces(const std::filesystem::path& dir) {
  const auto m = read_meta(dir);
  if (m.kind != "game") throw SurfaceFileError("meta.json: expected game surfaces");
  return {GameParams::from_scalar(m.params, m.n_players), m.cross_factor, detail::read_tables(dir, "e", m.grid),
          m.warnings};
}

/// Slice of one surface file: the whole file, or the rows at one time node
/// with the time column dropped.
struct PlotSlice {
  std::string surface;  // file stem, e.g. "f1" or "e2"
  std::optional<double> time;
};

inline void emit_plotdata(const std::filesystem::path& dir, const PlotSlice& slice, std::ostream& os) {
  const auto path = dir / (slice.surface + ".csv");
  auto is = detail::open_in(path);
  std::string header;
  std::getline(is, header);
  const auto columns = detail::split_csv(header);
  if (columns.empty() || columns.front() != "t") throw SurfaceFileError(path.string() + ": not a surface file");
  auto join_from = [](const std::vector<std::string>& cells, std::size_t first) {
    std::string out;
    for (std::size_t k = first; k < cells.size(); ++k) {
      if (k > first) out += ',';
      out += cells[k];
    }
    return out;
  };
  if (!slice.time) {
    os << header << '\n' << is.rdbuf();
    return;
  }
  const double t = *slice.time;
  os << join_from(columns, 1) << '\n';
  std::string line;
  std::size_t matched = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_csv(line);
    const double row_t = detail::parse_double(cells.front());
    if (std::abs(row_t - t) <= detail::kGridTolerance * std::max(1.0, std::abs(t))) {
      os << join_from(cells, 1) << '\n';
      ++matched;
    }
  }
  if (matched == 0) throw SurfaceFileError(path.string() + ": no rows at t = " + detail::format_double(t));
}

}  // namespace pathctl
