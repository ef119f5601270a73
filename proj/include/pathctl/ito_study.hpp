/**
 * @file ito_study.hpp
 * @brief Refinement study of the discrete functional Itô defect on Brownian paths.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pathctl/functional.hpp"
#include "pathctl/simulation.hpp"

namespace pathctl {

struct ItoLevel {
  std::size_t steps = 0;
  double median_abs = 0.0;
  double max_abs = 0.0;
};

struct ItoStudy {
  std::string functional;
  std::vector<ItoLevel> levels;

  /// Defects at or below this on every level are treated as round-off.
  static constexpr double kRoundOff = 1e-12;

  bool strictly_decreasing() const {
    for (std::size_t k = 1; k < levels.size(); ++k)
      if (!(levels[k].median_abs < levels[k - 1].median_abs)) return false;
    return true;
  }
  bool vanishes() const {
    return std::all_of(levels.begin(), levels.end(), [](const ItoLevel& l) { return l.max_abs <= kRoundOff; });
  }
  bool pass() const { return strictly_decreasing() || vanishes(); }
};

/// Standard Brownian path on [0, horizon] with `steps` increments, obtained by
/// summing blocks of a finest-level path so all levels of one seed are nested.
inline SampledPath brownian_path(std::uint64_t seed, std::size_t path_id, double horizon, std::size_t finest,
                                 std::size_t steps) {
  if (steps == 0 || finest % steps != 0) throw std::invalid_argument("brownian_path: level must divide the finest grid");
  auto rng = detail::substream(seed, path_id);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double fine_sd = std::sqrt(horizon / static_cast<double>(finest));
  const std::size_t block = finest / steps;
  std::vector<double> v(steps + 1, 0.0);
  double x = 0.0;
  for (std::size_t k = 0; k < finest; ++k) {
    x += fine_sd * normal(rng);
    if ((k + 1) % block == 0) v[(k + 1) / block] = x;
  }
  return SampledPath::scalar(0.0, horizon / static_cast<double>(steps), std::move(v));
}

/// Quadratic variation t of a standard Brownian motion on the same grid.
inline SampledPath brownian_qv(const SampledPath& x) {
  return SampledPath::sample(x.t0(), x.dt(), x.size(), [](double t) { return t; });
}

inline ItoStudy ito_refinement(const std::string& name, const Functional& f, const std::vector<std::size_t>& levels,
                               std::size_t seeds, std::uint64_t seed, double horizon = 1.0) {
  if (levels.empty() || seeds == 0) throw std::invalid_argument("ito_refinement: empty study");
  const std::size_t finest = *std::max_element(levels.begin(), levels.end());
  ItoStudy study{name, {}};
  for (std::size_t steps : levels) {
    std::vector<double> defects(seeds);
    for (std::size_t s = 0; s < seeds; ++s) {
      const auto x = brownian_path(seed, s, horizon, finest, steps);
      defects[s] = std::abs(ito_residual(f, x, brownian_qv(x)));
    }
    const double worst = *std::max_element(defects.begin(), defects.end());
    const auto mid = defects.begin() + static_cast<std::ptrdiff_t>(seeds / 2);
    std::nth_element(defects.begin(), mid, defects.end());
    double median = *mid;
    if (seeds % 2 == 0) median = 0.5 * (median + *std::max_element(defects.begin(), mid));
    study.levels.push_back({steps, median, worst});
  }
  return study;
}

/// The three reference functionals of the study: y_t^2, int y du, y_t int y du.
inline std::vector<std::pair<std::string, Functional>> ito_reference_functionals() {
  return {
      {"y^2", [](const SampledPath& p) { return p.last_scalar() * p.last_scalar(); }},
      {"int y du", [](const SampledPath& p) { return running_integral(p); }},
      {"y * int y du", [](const SampledPath& p) { return p.last_scalar() * running_integral(p); }},
  };
}

}  // namespace pathctl
