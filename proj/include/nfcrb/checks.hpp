#pragma once

#include <random>
#include <string>
#include <vector>

#include "nfcrb/finite_difference.hpp"
#include "nfcrb/reposition.hpp"

namespace nfcrb {

// Self-checks behind the `validate` command.
struct CheckResult {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  bool informational = false;  // reported but never fails the run
};

struct CheckTolerances {
  double steering_fd = 1e-6;
  double rx_fd = 1e-5;
  double fim_fd = 1e-4;
  double closed_form = 1e-8;
  double symmetry = 1e-10;
  double psd = 1e-9;
  int random_matrices = 1000;
  std::uint64_t seed = 20240601;
};

struct CheckSummary {
  std::vector<CheckResult> results;
  bool all_passed() const {
    for (const auto& r : results)
      if (!r.informational && !r.passed) return false;
    return true;
  }
};

namespace detail {

inline double max_over(const std::vector<MatXcd>& a, const std::vector<MatXcd>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, max_relative_difference(a[i], b[i]));
  return worst;
}

inline CheckResult at_most(std::string name, double value, double tol, bool info = false) {
  return {std::move(name), value, tol, value <= tol, info};
}

}  // namespace detail

// Hadamard bound against the direct determinant on random complex matrices of order 1..6; returns the
// smallest bound/|det| ratio seen (>= 1 means the bound always held).
inline double hadamard_random_margin(int trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> order(1, 6);
  std::normal_distribution<double> normal;
  double worst = std::numeric_limits<double>::infinity();
  for (int t = 0; t < trials; ++t) {
    const int m = order(rng);
    MatXcd x(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) x(i, j) = {normal(rng), normal(rng)};
    const double det = std::abs(x.fullPivLu().determinant());
    if (det > 0.0) worst = std::min(worst, hadamard_bound(x) / det);
  }
  return worst;
}

// Per-element received power against |S_max|^2 (G + F); returns bound minus power for every element.
inline VecXd power_bound_slack(const Constellation& c) {
  const SteeringMatrix a = steering_matrix(c.scenario);
  const VecXd power = received_power(a, c.scenario.signals).powers;
  double smax = 0.0;
  for (const auto& s : c.scenario.signals) smax = std::max(smax, std::abs(s.amplitude));
  VecXd slack(power.size());
  for (Eigen::Index k = 0; k < power.size(); ++k) slack(k) = smax * smax * gf_objective(phase_terms(c, k)) - power(k);
  return slack;
}

inline CheckSummary run_checks(const Constellation& c, const CheckTolerances& tol = {}) {
  const Scenario& s = c.scenario;
  CheckSummary out;
  auto& res = out.results;

  const SteeringMatrix a = steering_matrix(s);
  const CovarianceSet cov = covariances(a, s.signals, s.noise_variance);

  for (Axis axis : {Axis::bearing, Axis::range}) {
    const char* what = axis == Axis::bearing ? "steering derivative dA/dtheta vs finite difference"
                                             : "steering derivative dA/dr vs finite difference";
    res.push_back(detail::at_most(what, detail::max_over(steering_derivatives(s, axis), fd_steering_derivatives(s, axis)),
                                  tol.steering_fd));
  }

  const auto analytic = rx_derivatives(s, a, cov);
  const auto numeric = fd_rx_derivatives(s, cov.source_cov);
  res.push_back(detail::at_most("covariance derivatives dR_x/dp vs finite difference", detail::max_over(analytic, numeric),
                                tol.rx_fd));

  const FimMatrix generic = fim_generic(cov.array_cov, analytic, s.snapshots);
  const FimMatrix fd_fim = fim_generic(cov.array_cov, numeric, s.snapshots);
  res.push_back(detail::at_most("FIM from finite-difference derivatives", max_normalized_difference(fd_fim.entries, generic.entries),
                                tol.fim_fd));

  const ClosedFormFim closed = fim_closed_form(s, a, cov, s.snapshots);
  for (const auto& d : closed.deviations) {
    const bool gated = d.name == "theta-theta" || d.name == "r-r" || d.name == "theta-r" || d.name == "nu-nu";
    res.push_back(detail::at_most("closed-form FIM block " + d.name, d.max_relative, tol.closed_form, !gated));
  }

  const double scale = std::max(generic.entries.cwiseAbs().maxCoeff(), 1e-300);
  res.push_back(detail::at_most("FIM asymmetry (relative)", generic.max_asymmetry / scale, tol.symmetry));
  res.push_back(detail::at_most("FIM negative eigenvalue (relative)", std::max(0.0, -generic.min_eigenvalue) / scale, tol.psd));

  const double det = hermitian_determinant(cov.array_cov);
  const double bound = hadamard_bound(cov.array_cov);
  res.push_back({"Hadamard bound on R_x (bound - det)", bound - det, 0.0, bound >= det, false});

  const double margin = hadamard_random_margin(tol.random_matrices, tol.seed);
  res.push_back({"Hadamard bound on " + std::to_string(tol.random_matrices) + " random matrices (min bound/|det|)", margin, 1.0,
                 margin >= 1.0 - 1e-12, false});

  if (c.pairwise) {
    const VecXd slack = power_bound_slack(c);
    for (Eigen::Index k = 0; k < slack.size(); ++k)
      res.push_back({"element " + std::to_string(k + 1) + " power within |S_max|^2 (G+F) (slack)", slack(k), 0.0,
                     slack(k) >= 0.0, false});
  } else {
    res.push_back({"element power bound skipped: " + c.pairwise_unavailable, 0.0, 0.0, true, true});
  }
  return out;
}

inline std::string format_checks(const CheckSummary& summary) {
  std::string out;
  for (const auto& r : summary.results) {
    char line[96];
    std::snprintf(line, sizeof line, "  value %.3e (limit %.1e)", r.value, r.tolerance);
    out += std::string(r.informational ? "[info] " : (r.passed ? "[ ok ] " : "[FAIL] ")) + r.name + line + "\n";
  }
  out += summary.all_passed() ? "all checks passed\n" : "CHECKS FAILED\n";
  return out;
}

}  // namespace nfcrb
