#include <gtest/gtest.h>

#include <cmath>

#include "pathctl/convergence.hpp"
#include "pathctl/ito_study.hpp"

using namespace pathctl;

TEST(LoglogSlope, RecoversPowerLaw) {
  const std::vector<double> x{0.01, 0.005, 0.0025, 0.00125};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * std::pow(v, 1.5));
  EXPECT_NEAR(loglog_slope(x, y), 1.5, 1e-12);
  EXPECT_THROW(loglog_slope({1.0}, {1.0}), std::invalid_argument);
  EXPECT_THROW(loglog_slope({1.0, 2.0}, {1.0}), std::invalid_argument);
}

TEST(Probes, LieOnTheCoarseGridBeforeHorizon) {
  const LQParams p;
  const auto probes = make_probes(p, 200, 3, 0.01);
  for (const auto& pr : probes) {
    EXPECT_GE(pr.t, 0.0);
    EXPECT_LT(pr.t, p.horizon);
    EXPECT_NEAR(pr.t / 0.01, std::round(pr.t / 0.01), 1e-9);
    EXPECT_GE(pr.y, -2.0);
    EXPECT_LE(pr.y, 2.0);
  }
  const auto again = make_probes(p, 200, 3, 0.01);
  EXPECT_EQ(again.back().y, probes.back().y);
  const auto game = make_game_probes(GameParams{}, 5, 3, 0.01);
  EXPECT_EQ(game[0].y.size(), 10u);
  EXPECT_EQ(game[0].histories.size(), 10u);
}

TEST(HistoryShape, WindowSamplesBeforeT) {
  const HistoryShape h{0.5, 1.0, 2.0, 0.1};
  const auto g = SolverGrid::with_delay_cells(LQParams{}, 5);
  const auto w = h.window(g, 0.3);
  ASSERT_EQ(w.size(), 5u);
  EXPECT_DOUBLE_EQ(w.front(), h(0.25));
  EXPECT_DOUBLE_EQ(w.back(), h(0.29));
}

TEST(ResidualLadder, ZeroDataIsExact) {
  const LQParams zero{0, 0, 0, 1.0, 0.05, 1.0};
  const auto probes = make_probes(zero, 10, 1, 0.01);
  const auto ladder = residual_ladder(zero, 1.0, {5, 10}, probes);
  EXPECT_TRUE(ladder.exact());
  EXPECT_TRUE(ladder.converges(0.9));
  EXPECT_TRUE(std::isnan(ladder.slope));
  EXPECT_THROW(residual_ladder(zero, 1.0, {5}, probes), std::invalid_argument);
}

TEST(CrossFactorSelection, PicksOneForBaselineParameters) {
  const auto sel = select_cross_factor(LQParams{}, LadderSettings{{5, 10, 20}, 20, 11});
  EXPECT_EQ(sel.cross_factor, 1.0);
  EXPECT_LT(sel.one.limit_defect, 0.1 * sel.half.limit_defect);
  EXPECT_GE(sel.one.slope, 0.9);
}

TEST(CrossFactorSelection, ZeroDataDefaultsToOne) {
  const auto sel = select_cross_factor(LQParams{0, 0, 0, 1.0, 0.05, 1.0}, LadderSettings{{5, 10}, 5, 1});
  EXPECT_EQ(sel.cross_factor, 1.0);
  EXPECT_NE(sel.reason.find("exactly"), std::string::npos);
}

TEST(CrossFactorSelection, GamePicksOne) {
  GameParams p;
  p.n_players = 4;
  const auto sel = select_game_cross_factor(p, LadderSettings{{5, 10, 20}, 10, 12});
  EXPECT_EQ(sel.cross_factor, 1.0);
}

TEST(ItoStudy, BrownianLevelsAreNested) {
  const auto fine = brownian_path(5, 2, 1.0, 64, 64);
  const auto coarse = brownian_path(5, 2, 1.0, 64, 16);
  for (std::size_t k = 0; k < coarse.size(); ++k) EXPECT_EQ(coarse.scalar_at(k * 1.0 / 16), fine.scalar_at(k * 1.0 / 16));
  EXPECT_THROW(brownian_path(5, 2, 1.0, 64, 10), std::invalid_argument);
}

TEST(ItoStudy, ReferenceFunctionalsPass) {
  for (const auto& [name, f] : ito_reference_functionals()) {
    const auto study = ito_refinement(name, f, {16, 64, 256}, 60, 7);
    EXPECT_TRUE(study.pass()) << name;
  }
}

TEST(ItoStudy, NonSmoothFunctionalFails) {
  // |y| is not twice differentiable at zero, so the defect does not settle.
  const Functional kink = [](const SampledPath& p) { return std::abs(p.last_scalar() - 0.3); };
  const auto study = ito_refinement("kink", kink, {16, 64, 256, 1024}, 40, 7);
  EXPECT_FALSE(study.vanishes());
}
