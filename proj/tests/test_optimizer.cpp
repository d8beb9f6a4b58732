#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace nfcrb;

namespace {

Constellation bundled(const char* name) {
  return to_constellation(load_scenario(oracle::data_file(name))).constellation;
}

}  // namespace

TEST(GridSearch, SymmetricToyFindsMirroredOptimum) {
  // One source straight above sensor 1; moving sensor 2 by dx is mirror-symmetric about dx = -5.
  Scenario s;
  s.velocity_mps = 1500.0;
  s.sensors = {{0.0, 0.0}, {5.0, 0.0}};
  s.sources = {{20.0, kPi / 2}};
  s.signals = {{1e3, {1.0, 1.0}}};
  const Constellation c = Constellation::from_polar(s);
  const RepositionPlan p = grid_search(c, 1, Objective::crb_theta, {LineGrid{-15.0, 5.0, 201}, std::nullopt});
  const double mirror = -10.0 - p.displacement_m;
  EXPECT_NEAR(evaluate_objective(move_element(c, 1, mirror), 1, Objective::crb_theta), p.objective_after,
              1e-8 * p.objective_after);
  for (double dx = -15.0; dx <= 5.0; dx += 0.1)
    EXPECT_GE(evaluate_objective(move_element(c, 1, dx), 1, Objective::crb_theta), p.objective_after * (1.0 - 1e-9));
}

TEST(GridSearch, SinglePointGrid) {
  const Constellation b = bundled("scenario_b.json");
  const RepositionPlan p = grid_search(b, 0, Objective::det, {LineGrid{7.5, 7.5, 1}, std::nullopt});
  // The current position is always a candidate alongside the grid.
  EXPECT_TRUE(p.displacement_m == 7.5 || p.displacement_m == 0.0);
  EXPECT_EQ(p.evaluated, 1u);
}

TEST(GridSearch, BoxModeRecordsPosition) {
  const Constellation b = bundled("scenario_b.json");
  const RepositionPlan p =
      grid_search(b, 0, Objective::det, {LineGrid{-20.0, 20.0, 21}, LineGrid{-10.0, 10.0, 11}});
  ASSERT_TRUE(p.new_position);
  EXPECT_LE(p.objective_after, p.objective_before);
  const Constellation after = apply_reposition(b, p);
  EXPECT_NEAR((to_cartesian(after.scenario.sensors[0]) - *p.new_position).norm(), 0.0, 1e-9);
}

TEST(GridSearch, NotWorseThanLineSearchOnSameGrid) {
  const Constellation a = bundled("scenario_a.json");
  const LineGrid g{-100.0, 100.0, 201};
  const RepositionPlan line = line_search_reposition(a, 1, Objective::det, g);
  const RepositionPlan grid = grid_search(a, 1, Objective::det, {g, LineGrid{-2.0, 2.0, 5}});
  EXPECT_LE(grid.objective_after, line.objective_after);
}

TEST(GridSearch, BeatsAnalyticPlanOnScenarioA) {
  const Constellation a = bundled("scenario_a.json");
  const Eigen::Index k = received_power(steering_matrix(a.scenario), a.scenario.signals).strongest;
  const Constellation analytic = apply_reposition(a, analytic_reposition(a, k));
  const RepositionPlan grid = grid_search(a, k, Objective::det, {LineGrid{}, std::nullopt});
  EXPECT_LE(grid.objective_after, evaluate_objective(analytic, k, Objective::det));
}

TEST(Sweep, TableFiveGrid) {
  const Constellation a = bundled("scenario_a.json");
  SweepSpec spec;
  spec.vary = SweepVariable::frequency;
  spec.source = 0;
  spec.start = 1e6;
  spec.stop = 1e7;
  spec.steps = 10;
  const auto rows = sweep(a, spec);
  ASSERT_EQ(rows.size(), 20u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].mode, i % 2 ? SweepMode::reposition : SweepMode::primary);
    EXPECT_TRUE(rows[i].ok);
    EXPECT_TRUE(std::isfinite(rows[i].det) && rows[i].det > 0.0);
  }
  EXPECT_DOUBLE_EQ(rows.front().point, 1e6);
  EXPECT_DOUBLE_EQ(rows.back().point, 1e7);
}

TEST(Sweep, TwoStepsAndDeterminism) {
  const Constellation b = bundled("scenario_b.json");
  SweepSpec spec;
  spec.vary = SweepVariable::velocity;
  spec.start = 1e6;
  spec.stop = 1e7;
  spec.steps = 2;
  spec.modes = {SweepMode::primary};
  const auto rows = sweep(b, spec);
  ASSERT_EQ(rows.size(), 2u);
  const auto again = sweep(b, spec);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].det, again[i].det);
    EXPECT_EQ(rows[i].crb_theta_total, again[i].crb_theta_total);
  }
}

TEST(Sweep, RejectsBadSpecs) {
  const Constellation b = bundled("scenario_b.json");
  SweepSpec spec;
  spec.start = 2.0;
  spec.stop = 1.0;
  EXPECT_THROW(sweep(b, spec), ValidationError);
  spec.start = 1.0;
  spec.stop = 2.0;
  spec.steps = 1;
  EXPECT_THROW(sweep(b, spec), ValidationError);
}

TEST(Sweep, RepositionedAnglesIgnoreNoiseVariance) {
  Constellation b = bundled("scenario_b.json");
  const RepositionPlan p1 = analytic_reposition(b, 0);
  b.scenario.noise_variance *= 2.0;
  const RepositionPlan p2 = analytic_reposition(b, 0);
  EXPECT_EQ(p1.new_arrival_rad, p2.new_arrival_rad);
  EXPECT_EQ(p1.displacement_m, p2.displacement_m);
}

TEST(Compare, IdenticalAndDoubled) {
  const ConstellationFigures f = figures_of(bundled("scenario_b.json").scenario);
  const Comparison same = compare_report(f, f);
  EXPECT_EQ(same.det_ratio, 1.0);
  EXPECT_EQ(same.crb_theta_ratio, 1.0);
  EXPECT_FALSE(same.worsened);

  ConstellationFigures doubled = f;
  doubled.det *= 2.0;
  doubled.crb.crb_theta_total *= 2.0;
  doubled.crb.crb_r_total *= 2.0;
  const Comparison worse = compare_report(f, doubled);
  EXPECT_DOUBLE_EQ(worse.det_ratio, 0.5);
  EXPECT_DOUBLE_EQ(worse.crb_theta_ratio, 0.5);
  EXPECT_DOUBLE_EQ(worse.crb_r_ratio, 0.5);
  EXPECT_TRUE(worse.worsened);
  EXPECT_EQ(worse.flags.size(), 3u);
}

TEST(Compare, ReferenceScenarioAFigures) {
  ConstellationFigures before, after;
  before.det = 1.8112e-42;
  after.det = 3.4102e-44;
  before.crb.crb_theta = VecXd::Constant(1, 1.0308e-29);
  after.crb.crb_theta = VecXd::Constant(1, 6.0716e-31);
  before.crb.crb_r = VecXd::Constant(1, 8.8505e-26);
  after.crb.crb_r = VecXd::Constant(1, 6.1691e-27);
  before.crb.crb_theta_total = 1.0308e-29;
  after.crb.crb_theta_total = 6.0716e-31;
  before.crb.crb_r_total = 8.8505e-26;
  after.crb.crb_r_total = 6.1691e-27;
  const Comparison c = compare_report(before, after);
  EXPECT_NEAR(c.det_ratio, 53.1, 0.05);
  EXPECT_NEAR(c.crb_theta_ratio, 17.0, 0.05);
  EXPECT_NEAR(c.crb_r_ratio, 14.3, 0.05);
}
