#include <gtest/gtest.h>

#include <random>
#include <set>

#include "oracles.hpp"

using namespace nfcrb;

namespace {

Constellation bundled(const char* name) {
  return to_constellation(load_scenario(oracle::data_file(name))).constellation;
}

double max_rel(const std::vector<MatXcd>& a, const std::vector<MatXcd>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, max_relative_difference(a[i], b[i]));
  return worst;
}

}  // namespace

TEST(ParameterIndex, LayoutAndBijection) {
  for (Eigen::Index n = 1; n <= 4; ++n) {
    const ParameterIndex idx(n);
    EXPECT_EQ(idx.size(), 2 * n + n * n + 1);
    std::set<std::string> labels;
    for (Eigen::Index i = 0; i < idx.size(); ++i) labels.insert(idx.label(i));
    EXPECT_EQ(static_cast<Eigen::Index>(labels.size()), idx.size());
    EXPECT_EQ(idx.locate(idx.noise()).block, ParameterBlock::noise);
    EXPECT_EQ(idx.locate(idx.range(n - 1)).block, ParameterBlock::range);
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const auto loc = idx.locate(idx.mu_imag(p, q));
        EXPECT_EQ(loc.mu_kind, MuKind::imag_part);
        EXPECT_EQ(loc.p, p);
        EXPECT_EQ(loc.q, q);
      }
  }
  const ParameterIndex two(2);
  EXPECT_EQ(two.mu_diagonal(1), 5);
  EXPECT_EQ(two.mu_real(0, 1), 6);
  EXPECT_EQ(two.mu_imag(0, 1), 7);
  EXPECT_EQ(two.noise(), 8);
}

TEST(ParameterIndex, MuBasisIsHermitian) {
  const ParameterIndex idx(3);
  for (Eigen::Index i = 0; i < idx.mu_count(); ++i) {
    const MatXcd e = idx.mu_basis(i);
    EXPECT_EQ(e, e.adjoint().eval());
  }
}

TEST(SteeringDerivatives, OnlyOwnColumnIsNonzero) {
  std::mt19937_64 rng(31);
  const Scenario s = oracle::random_scenario(rng, 6, 3);
  for (Axis axis : {Axis::bearing, Axis::range}) {
    const auto d = steering_derivatives(s, axis);
    for (std::size_t n = 0; n < d.size(); ++n)
      for (Eigen::Index k = 0; k < d[n].cols(); ++k)
        if (k != static_cast<Eigen::Index>(n)) EXPECT_EQ(d[n].col(k).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(SteeringDerivatives, VanishOnTheSensorBearing) {
  Scenario s;
  s.velocity_mps = 1500.0;
  s.sensors = {{0.0, 0.0}, {3.0, 1.1}};
  s.sources = {{20.0, 1.1}};
  s.signals = {{2e3, 1.0}};
  const auto d = steering_derivatives(s, Axis::bearing);
  EXPECT_EQ(std::abs(d[0](1, 0)), 0.0);
  EXPECT_EQ(std::abs(d[0](0, 0)), 0.0);  // sensor at the origin
}

TEST(SteeringDerivatives, MatchFiniteDifferences) {
  std::mt19937_64 rng(32);
  for (int i = 0; i < 100; ++i) {
    const Scenario s = oracle::random_scenario(rng);
    EXPECT_LE(max_rel(steering_derivatives(s, Axis::bearing), fd_steering_derivatives(s, Axis::bearing)), 1e-6);
    EXPECT_LE(max_rel(steering_derivatives(s, Axis::range), fd_steering_derivatives(s, Axis::range)), 1e-6);
  }
}

TEST(RxDerivatives, StructureAndFiniteDifferences) {
  std::mt19937_64 rng(33);
  for (int i = 0; i < 20; ++i) {
    const Scenario s = oracle::random_scenario(rng);
    const SteeringMatrix a = steering_matrix(s);
    const CovarianceSet cov = covariances(a, s.signals, s.noise_variance);
    const auto d = rx_derivatives(s, a, cov);
    const ParameterIndex idx(a.cols());
    ASSERT_EQ(static_cast<Eigen::Index>(d.size()), idx.size());
    for (const auto& m : d) EXPECT_LE((m - m.adjoint()).cwiseAbs().maxCoeff(), 1e-12 * (1.0 + m.cwiseAbs().maxCoeff()));
    EXPECT_EQ(d.back(), MatXcd::Identity(a.rows(), a.rows()));
    for (Eigen::Index n = 0; n < a.cols(); ++n)
      EXPECT_LE((d[static_cast<std::size_t>(idx.mu_diagonal(n))] - a.col(n) * a.col(n).adjoint()).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LE(max_rel(d, fd_rx_derivatives(s, cov.source_cov)), 1e-5);
  }
}

TEST(FimGeneric, NoiseOnlyTrace) {
  const FimMatrix f = fim_generic(MatXcd::Identity(4, 4), {MatXcd::Identity(4, 4)}, 1);
  EXPECT_DOUBLE_EQ(f.entries(0, 0), 4.0);
  const FimMatrix g = fim_generic(2.0 * MatXcd::Identity(4, 4), {MatXcd::Identity(4, 4)}, 3);
  EXPECT_DOUBLE_EQ(g.entries(0, 0), 3.0 * 4.0 / 4.0);
}

TEST(FimGeneric, SingularCovarianceReportsEigenvalue) {
  MatXcd r = MatXcd::Ones(3, 3);
  try {
    fim_generic(r, {MatXcd::Identity(3, 3)}, 1);
    FAIL() << "expected SingularMatrixError";
  } catch (const SingularMatrixError& e) {
    EXPECT_NEAR(e.smallest_eigenvalue(), 0.0, 1e-12);
    EXPECT_NE(std::string(e.what()).find("smallest eigenvalue"), std::string::npos);
  }
}

TEST(FimGeneric, LinearInSnapshotsSymmetricPsd) {
  std::mt19937_64 rng(34);
  for (int i = 0; i < 20; ++i) {
    const Scenario s = oracle::random_scenario(rng);
    const SteeringMatrix a = steering_matrix(s);
    const CovarianceSet cov = covariances(a, s.signals, s.noise_variance);
    const auto d = rx_derivatives(s, a, cov);
    const FimMatrix f1 = fim_generic(cov.array_cov, d, 1);
    const FimMatrix f2 = fim_generic(cov.array_cov, d, 2);
    EXPECT_EQ(f2.entries, (2.0 * f1.entries).eval());
    const double norm = f1.entries.norm();
    EXPECT_LE(f1.max_asymmetry, 1e-8 * norm);
    EXPECT_GE(f1.min_eigenvalue, -1e-8 * norm);
  }
}

TEST(FimGeneric, ScenarioAMatchesFiniteDifferenceFim) {
  for (const char* name : {"scenario_a.json", "scenario_b.json"}) {
    const Scenario s = bundled(name).scenario;
    const SteeringMatrix a = steering_matrix(s);
    const CovarianceSet cov = covariances(a, s.signals, s.noise_variance);
    const FimMatrix f = fim_generic(cov.array_cov, rx_derivatives(s, a, cov), 1);
    const FimMatrix g = fim_generic(cov.array_cov, fd_rx_derivatives(s, cov.source_cov), 1);
    EXPECT_LE(max_normalized_difference(g.entries, f.entries), 1e-4) << name;
  }
}

TEST(SelectionMatrices, IndexVectorsForTwoSources) {
  const SelectionMatrices s = selection_matrices(2);
  EXPECT_EQ(s.j4, (std::vector<Eigen::Index>{1, 4}));
  EXPECT_EQ(s.j3_bar, (std::vector<Eigen::Index>{1, 2, 3}));
  EXPECT_EQ(s.j3, (std::vector<Eigen::Index>{1, 2, 4}));
  EXPECT_EQ(s.j1, (std::vector<Eigen::Index>{2}));
  EXPECT_EQ(s.j2, (std::vector<Eigen::Index>{3}));
  EXPECT_THROW(selection_matrices(0), ValidationError);
}

TEST(SelectionMatrices, EntriesAndShapes) {
  for (Eigen::Index n = 1; n <= 4; ++n) {
    const SelectionMatrices s = selection_matrices(n);
    EXPECT_EQ(s.qt.rows(), n * n);
    EXPECT_EQ(s.qt.cols(), n * n);
    EXPECT_EQ(s.q4.rows(), n);
    for (const MatXd* m : {&s.q1, &s.q1_bar, &s.q2, &s.q2_bar, &s.q4})
      for (Eigen::Index i = 0; i < m->size(); ++i) {
        const double v = m->data()[i];
        EXPECT_TRUE(v == 0.0 || v == 1.0 || v == -1.0);
      }
    EXPECT_TRUE(std::is_sorted(s.j1.begin(), s.j1.end()));
    EXPECT_TRUE(std::is_sorted(s.j3.begin(), s.j3.end()));
    EXPECT_TRUE(std::is_sorted(s.j4.begin(), s.j4.end()));
    // After the signed reordering, row i of Q_t is vec(E_i)^H.
    const ParameterIndex idx(n);
    const MatXcd mapped = mu_reordering(s).cast<cdouble>() * s.qt;
    for (Eigen::Index i = 0; i < idx.mu_count(); ++i) {
      const VecXcd e = detail::vec(idx.mu_basis(i));
      EXPECT_LE((mapped.row(i).transpose() - e.conjugate()).cwiseAbs().maxCoeff(), 1e-15) << "row " << i;
    }
  }
}

TEST(ClosedForm, NoiseBlockTrace) {
  Scenario s;
  s.velocity_mps = 1500.0;
  s.noise_variance = 2.0;
  s.sensors = {{0.0, 0.0}, {1.0, 0.3}, {2.0, 2.0}};
  s.sources = {{15.0, 1.0}};
  s.signals = {{2e3, 0.0}};
  const SteeringMatrix a = steering_matrix(s);
  const CovarianceSet cov = covariances(a, s.signals, s.noise_variance);
  const FimMatrix f = fim_closed_form_only(s, a, cov, 1);
  EXPECT_NEAR(f.entries(ParameterIndex(1).noise(), ParameterIndex(1).noise()), 0.75, 1e-15);
}

TEST(ClosedForm, BearingNoiseBlockVanishesWithoutBearingSensitivity) {
  Scenario s;
  s.velocity_mps = 1500.0;
  s.sensors = {{0.0, 0.0}, {3.0, 0.9}};
  s.sources = {{20.0, 0.9}};
  s.signals = {{2e3, {1.0, 2.0}}};
  const SteeringMatrix a = steering_matrix(s);
  const CovarianceSet cov = covariances(a, s.signals, s.noise_variance);
  const FimMatrix f = fim_closed_form_only(s, a, cov, 1);
  const ParameterIndex idx(1);
  EXPECT_EQ(f.entries(idx.bearing(0), idx.noise()), 0.0);
}

TEST(ClosedForm, AgreesWithTraceForm) {
  std::mt19937_64 rng(35);
  std::map<std::string, double> worst;
  for (int i = 0; i < 20; ++i) {
    const Scenario s = oracle::random_scenario(rng);
    const SteeringMatrix a = steering_matrix(s);
    const CovarianceSet cov = covariances(a, s.signals, s.noise_variance);
    for (const auto& d : fim_closed_form(s, a, cov, s.snapshots).deviations) worst[d.name] = std::max(worst[d.name], d.max_relative);
  }
  for (const char* gated : {"theta-theta", "r-r", "theta-r", "nu-nu"}) EXPECT_LE(worst[gated], 1e-8) << gated;
  // The source-covariance blocks agree to rounding as well; pinned so a regression shows up.
  for (const char* mu : {"theta-mu", "r-mu", "mu-mu", "mu-nu"}) EXPECT_LE(worst[mu], 1e-10) << mu;
}

TEST(Crb, DiagonalFim) {
  MatXd f = MatXd::Zero(2, 2);
  f.diagonal() << 4.0, 8.0;
  const CrbReport r = crb_from_fim(f, 1);
  EXPECT_DOUBLE_EQ(r.crb_theta(0), 0.25);
  EXPECT_DOUBLE_EQ(r.crb_r(0), 0.125);
  EXPECT_FALSE(r.rank_deficient);
}

TEST(Crb, DuplicateSourcesAreRankDeficient) {
  Scenario s;
  s.velocity_mps = 1500.0;
  s.sensors = {{0.0, 0.0}, {2.0, 0.5}, {3.0, 2.5}, {1.0, 4.0}};
  s.sources = {{18.0, 1.3}, {18.0, 1.3}};
  s.signals = {{2e3, {1.0, 1.0}}, {2e3, {1.0, 1.0}}};
  const BoundSummary b = evaluate_bounds(s);
  EXPECT_TRUE(b.crb.rank_deficient);
  EXPECT_LT(b.crb.rank, b.crb.dimension);
  EXPECT_TRUE(b.crb.crb_theta.allFinite());
}

TEST(Crb, HalvesWhenSnapshotsDouble) {
  std::mt19937_64 rng(36);
  for (int i = 0; i < 20; ++i) {
    Scenario s = oracle::random_scenario(rng);
    const CrbReport one = evaluate_bounds(s).crb;
    s.snapshots *= 2;
    const CrbReport two = evaluate_bounds(s).crb;
    for (Eigen::Index n = 0; n < one.crb_theta.size(); ++n) {
      EXPECT_NEAR(two.crb_theta(n), 0.5 * one.crb_theta(n), 1e-12 * one.crb_theta(n));
      EXPECT_NEAR(two.crb_r(n), 0.5 * one.crb_r(n), 1e-12 * one.crb_r(n));
    }
    EXPECT_GE(one.crb_theta.minCoeff(), 0.0);
    EXPECT_NEAR(one.crb_theta_total, one.crb_theta.sum(), 1e-15 * one.crb_theta_total);
  }
}

TEST(Crb, BundledScenarioFiguresArePinned) {
  // Frozen from the first run with eta = 1, N_s = 1.
  const BoundSummary a = evaluate_bounds(bundled("scenario_a.json").scenario);
  EXPECT_NEAR(a.det_rx, 192.99, 0.01);
  EXPECT_NEAR(a.crb.crb_theta_total / 1372.2, 1.0, 1e-3);
  EXPECT_NEAR(a.crb.crb_r_total / 11865.0, 1.0, 1e-3);
  EXPECT_TRUE(a.crb.rank_deficient);
  EXPECT_NEAR(a.det_rx, oracle::brute_determinant(covariances(steering_matrix(bundled("scenario_a.json").scenario),
                                                              bundled("scenario_a.json").scenario.signals, 1.0)
                                                      .array_cov)
                            .real(),
              1e-9 * a.det_rx);

  const BoundSummary b = evaluate_bounds(bundled("scenario_b.json").scenario);
  EXPECT_NEAR(b.det_rx, 91.946, 0.001);
  EXPECT_NEAR(b.crb.crb_theta_total / 2.7647, 1.0, 1e-3);
  EXPECT_NEAR(b.crb.crb_r_total / 47547.0, 1.0, 1e-3);
}
