#pragma once

#include <vector>

#include "nfcrb/fim_crb.hpp"

namespace nfcrb {

// Central-difference counterparts of the analytic derivatives. They only ever call the forward model
// (steering_matrix / covariance_set), never the analytic derivative code.

inline double bearing_step(double rel_step) { return rel_step; }
inline double range_step(double range_m, double rel_step) { return rel_step * range_m; }

inline std::vector<MatXcd> fd_steering_derivatives(const Scenario& scenario, Axis axis, double rel_step = 1e-6) {
  std::vector<MatXcd> out;
  for (std::size_t n = 0; n < scenario.sources.size(); ++n) {
    Scenario plus = scenario, minus = scenario;
    double h = 0.0;
    if (axis == Axis::bearing) {
      h = bearing_step(rel_step);
      plus.sources[n].bearing_rad += h;
      minus.sources[n].bearing_rad -= h;
    } else {
      h = range_step(scenario.sources[n].range_m, rel_step);
      plus.sources[n].range_m += h;
      minus.sources[n].range_m -= h;
    }
    out.push_back((steering_matrix(plus) - steering_matrix(minus)) / (2.0 * h));
  }
  return out;
}

// dR_x/dp in ParameterIndex order, around the given source covariance.
inline std::vector<MatXcd> fd_rx_derivatives(const Scenario& scenario, const MatXcd& source_cov, double rel_step = 1e-6) {
  const Eigen::Index n = static_cast<Eigen::Index>(scenario.source_count());
  const ParameterIndex index(n);
  const auto rx = [&](const Scenario& s, const MatXcd& rs, double eta) {
    return covariance_set(steering_matrix(s), rs, eta).array_cov;
  };
  std::vector<MatXcd> out;
  for (Axis axis : {Axis::bearing, Axis::range}) {
    for (std::size_t k = 0; k < scenario.sources.size(); ++k) {
      Scenario plus = scenario, minus = scenario;
      double h = 0.0;
      if (axis == Axis::bearing) {
        h = bearing_step(rel_step);
        plus.sources[k].bearing_rad += h;
        minus.sources[k].bearing_rad -= h;
      } else {
        h = range_step(scenario.sources[k].range_m, rel_step);
        plus.sources[k].range_m += h;
        minus.sources[k].range_m -= h;
      }
      out.push_back((rx(plus, source_cov, scenario.noise_variance) - rx(minus, source_cov, scenario.noise_variance)) /
                    (2.0 * h));
    }
  }
  const double mu_h = rel_step * std::max(1.0, source_cov.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < index.mu_count(); ++i) {
    const MatXcd e = index.mu_basis(i);
    out.push_back((rx(scenario, source_cov + mu_h * e, scenario.noise_variance) -
                   rx(scenario, source_cov - mu_h * e, scenario.noise_variance)) /
                  (2.0 * mu_h));
  }
  const double nu_h = rel_step * std::max(1.0, scenario.noise_variance);
  out.push_back((rx(scenario, source_cov, scenario.noise_variance + nu_h) -
                 rx(scenario, source_cov, scenario.noise_variance - nu_h)) /
                (2.0 * nu_h));
  return out;
}

// max |a - b| / max |b|; zero when both vanish.
template <typename A, typename B>
double max_relative_difference(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  const double diff = (a - b).cwiseAbs().maxCoeff();
  const double scale = b.cwiseAbs().maxCoeff();
  if (diff == 0.0) return 0.0;
  return scale > 0.0 ? diff / scale : std::numeric_limits<double>::infinity();
}

// Largest |a_ij - b_ij| / sqrt(|b_ii b_jj|) over the whole matrix.
inline double max_normalized_difference(const MatXd& a, const MatXd& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const double diff = std::abs(a(i, j) - b(i, j));
      if (diff == 0.0) continue;
      const double scale = std::sqrt(std::abs(b(i, i) * b(j, j)));
      worst = std::max(worst, scale > 0.0 ? diff / scale : std::numeric_limits<double>::infinity());
    }
  return worst;
}

}  // namespace nfcrb
