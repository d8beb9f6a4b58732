#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using namespace nfcrb;

TEST(Steering, ZeroDelaysGiveOnes) {
  const std::vector<double> f{1e3, 2e3};
  const SteeringMatrix a = steering_matrix(MatXd::Zero(3, 2), f);
  EXPECT_LT((a - MatXcd::Ones(3, 2)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Steering, QuarterCycleIsMinusJ) {
  const std::vector<double> f{1e4};
  const SteeringMatrix a = steering_matrix(MatXd::Constant(1, 1, 2.5e-5), f);
  EXPECT_NEAR(a(0, 0).real(), 0.0, 1e-12);
  EXPECT_NEAR(a(0, 0).imag(), -1.0, 1e-12);
}

TEST(Steering, ShapeMismatchRejected) {
  const std::vector<double> f{1e3};
  EXPECT_THROW(steering_matrix(MatXd::Zero(3, 2), f), ValidationError);
}

TEST(Steering, UnitModulusOnScenarioA) {
  const auto c = to_constellation(load_scenario(oracle::data_file("scenario_a.json"))).constellation;
  const SteeringMatrix a = steering_matrix(c.scenario);
  EXPECT_LT((a.cwiseAbs().array() - 1.0).abs().maxCoeff(), 1e-12);
}

TEST(Covariances, CoherentSourceCovariance) {
  const std::vector<SourceSignal> sig{{1.0, {2.0, 2.0}}, {1.0, {1.0, 3.0}}};
  const CovarianceSet cov = covariances(MatXcd::Ones(1, 2), sig, 1.0);
  EXPECT_EQ(cov.source_cov(0, 0), cdouble(8.0, 0.0));
  EXPECT_EQ(cov.source_cov(0, 1), cdouble(8.0, -4.0));
  EXPECT_EQ(cov.source_cov(1, 0), cdouble(8.0, 4.0));
  EXPECT_EQ(cov.source_cov(1, 1), cdouble(10.0, 0.0));
  EXPECT_NEAR(cov.array_cov(0, 0).real(), 35.0, 1e-12);
  EXPECT_NEAR(cov.array_cov(0, 0).imag(), 0.0, 1e-12);
}

TEST(Covariances, SilentSourcesLeaveNoiseOnly) {
  const std::vector<SourceSignal> sig{{1.0, {0.0, 0.0}}};
  const CovarianceSet cov = covariances(MatXcd::Ones(3, 1), sig, 5.0);
  EXPECT_LT((cov.array_cov - 5.0 * MatXcd::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW(covariances(MatXcd::Ones(3, 1), sig, 0.0), ValidationError);
}

TEST(Covariances, HermitianWithEigenvaluesAboveNoise) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 50; ++i) {
    const Scenario s = oracle::random_scenario(rng);
    const CovarianceSet cov = covariances(steering_matrix(s), s.signals, s.noise_variance);
    EXPECT_LT((cov.array_cov - cov.array_cov.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
    const VecXd ev = Eigen::SelfAdjointEigenSolver<MatXcd>(cov.array_cov).eigenvalues();
    EXPECT_GE(ev.minCoeff(), s.noise_variance - 1e-10);
  }
}

TEST(Snapshots, NoiselessSnapshotsEqualCleanSignal) {
  const std::vector<SourceSignal> sig{{1.0, {2.0, 2.0}}, {1.0, {1.0, 3.0}}};
  MatXcd a(3, 2);
  a << 1.0, cdouble(0, 1), cdouble(0, -1), 1.0, -1.0, cdouble(0.6, 0.8);
  const SnapshotBatch b = synthesize_snapshots(a, sig, 0.0, 4, 1);
  const VecXcd clean = a * amplitude_vector(sig);
  for (Eigen::Index j = 0; j < 4; ++j) EXPECT_EQ(b.snapshots.col(j), clean);
  const MatXcd r = sample_covariance(synthesize_snapshots(a, sig, 0.0, 1, 1));
  EXPECT_LT((r - clean * clean.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Snapshots, DeterministicGivenSeed) {
  const std::vector<SourceSignal> sig{{1.0, {1.0, 0.0}}};
  const MatXcd a = MatXcd::Ones(2, 1);
  EXPECT_EQ(synthesize_snapshots(a, sig, 1.0, 10, 42).snapshots, synthesize_snapshots(a, sig, 1.0, 10, 42).snapshots);
  EXPECT_NE(synthesize_snapshots(a, sig, 1.0, 10, 42).snapshots, synthesize_snapshots(a, sig, 1.0, 10, 43).snapshots);
  EXPECT_THROW(synthesize_snapshots(a, sig, 1.0, 0, 42), ValidationError);
}

TEST(Snapshots, MeanConvergesToCleanSignal) {
  const std::vector<SourceSignal> sig{{1.0, {2.0, -1.0}}, {1.0, {0.5, 1.5}}};
  MatXcd a(2, 2);
  a << 1.0, cdouble(0, 1), cdouble(0.6, -0.8), -1.0;
  const double eta = 2.0;
  const SnapshotBatch b = synthesize_snapshots(a, sig, eta, 100000, 5);
  const VecXcd mean = b.snapshots.rowwise().mean();
  const VecXcd clean = a * amplitude_vector(sig);
  for (Eigen::Index m = 0; m < 2; ++m) {
    EXPECT_LT(std::abs(mean(m).real() - clean(m).real()), 5.0 * std::sqrt(eta / 1e5));
    EXPECT_LT(std::abs(mean(m).imag() - clean(m).imag()), 5.0 * std::sqrt(eta / 1e5));
  }
}

TEST(SampleCovariance, HermitianPsdAndRejectsEmpty) {
  const std::vector<SourceSignal> sig{{1.0, {1.0, 1.0}}};
  const MatXcd r = sample_covariance(synthesize_snapshots(MatXcd::Ones(3, 1), sig, 1.0, 7, 3));
  EXPECT_EQ(r, r.adjoint().eval());
  EXPECT_GE(Eigen::SelfAdjointEigenSolver<MatXcd>(r).eigenvalues().minCoeff(), -1e-12);
  EXPECT_THROW(sample_covariance(SnapshotBatch{MatXcd(3, 0), 0}), ValidationError);
}

TEST(ReceivedPower, SingleSourceIsFlat) {
  Scenario s;
  s.velocity_mps = 1500.0;
  s.sensors = {{0.0, 0.0}, {2.0, 1.0}, {3.0, 4.0}};
  s.sources = {{20.0, 1.2}};
  s.signals = {{2e3, {3.0, 4.0}}};
  const ReceivedPower p = received_power(steering_matrix(s), s.signals);
  for (Eigen::Index m = 0; m < 3; ++m) EXPECT_NEAR(p.powers(m), 25.0, 1e-12);
  EXPECT_EQ(p.strongest, 0);  // ties resolve to the lowest index
}

TEST(ReceivedPower, MatchesDirectSum) {
  std::mt19937_64 rng(22);
  for (int i = 0; i < 30; ++i) {
    const Scenario s = oracle::random_scenario(rng);
    const ReceivedPower p = received_power(steering_matrix(s), s.signals);
    for (std::size_t m = 0; m < s.sensors.size(); ++m)
      EXPECT_NEAR(p.powers(static_cast<Eigen::Index>(m)), oracle::direct_power(s, m), 1e-10 * (1.0 + p.powers.maxCoeff()));
    EXPECT_EQ(p.powers(p.strongest), p.powers.maxCoeff());
  }
}

TEST(ReceivedPower, BundledScenariosStrongestElement) {
  // Computed from the bundled tables under the documented frame convention.
  const auto a = to_constellation(load_scenario(oracle::data_file("scenario_a.json"))).constellation;
  const auto b = to_constellation(load_scenario(oracle::data_file("scenario_b.json"))).constellation;
  const ReceivedPower pa = received_power(steering_matrix(a.scenario), a.scenario.signals);
  const ReceivedPower pb = received_power(steering_matrix(b.scenario), b.scenario.signals);
  EXPECT_EQ(pa.strongest, 1);
  EXPECT_EQ(pb.strongest, 0);
  EXPECT_NEAR(pa.powers(1), 62.109, 1e-3);
  EXPECT_NEAR(pb.powers(0), 25.839, 1e-3);
}

TEST(ReceivedPower, WithinPhaseSumBound) {
  for (const char* name : {"scenario_a.json", "scenario_b.json"}) {
    const auto c = to_constellation(load_scenario(oracle::data_file(name))).constellation;
    EXPECT_GE(power_bound_slack(c).minCoeff(), 0.0) << name;
  }
}

TEST(SampleCovariance, ErrorHalvesWithFourfoldSnapshots) {
  const std::vector<SourceSignal> sig{{1.0, {2.0, 2.0}}, {1.0, {1.0, 3.0}}};
  MatXcd a(4, 2);
  a << 1.0, 1.0, cdouble(0, 1), cdouble(0.6, 0.8), -1.0, cdouble(0, -1), cdouble(0.8, -0.6), -1.0;
  const MatXcd rx = covariances(a, sig, 1.0).array_cov;
  double sum = 0.0;
  for (int seed = 0; seed < 20; ++seed) {
    const double e1 = (sample_covariance(synthesize_snapshots(a, sig, 1.0, 200, 1000 + seed)) - rx).norm();
    const double e4 = (sample_covariance(synthesize_snapshots(a, sig, 1.0, 800, 5000 + seed)) - rx).norm();
    sum += e4 / e1;
  }
  EXPECT_NEAR(sum / 20.0, 0.5, 0.15);
}
