#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "nfcrb/geometry.hpp"

namespace nfcrb {

// M x N matrix of unit-modulus phase factors exp(-j*2*pi*f_n*tau_mn).
using SteeringMatrix = MatXcd;

struct CovarianceSet {
  MatXcd source_cov;  // N x N
  double noise_variance = 0.0;
  MatXcd array_cov;  // M x M
};

struct SnapshotBatch {
  MatXcd snapshots;  // M x Ns, one column per snapshot
  std::uint64_t seed = 0;
  Eigen::Index count() const { return snapshots.cols(); }
};

struct ReceivedPower {
  VecXd powers;
  Eigen::Index strongest = 0;
};

inline std::vector<double> frequencies(std::span<const SourceSignal> signals) {
  std::vector<double> out;
  out.reserve(signals.size());
  for (const auto& s : signals) out.push_back(s.freq_hz);
  return out;
}

inline VecXcd amplitude_vector(std::span<const SourceSignal> signals) {
  VecXcd s(static_cast<Eigen::Index>(signals.size()));
  for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = signals[static_cast<std::size_t>(i)].amplitude;
  return s;
}

inline SteeringMatrix steering_matrix(const MatXd& delays, std::span<const double> freqs) {
  detail::require(delays.cols() == static_cast<Eigen::Index>(freqs.size()),
                  "steering matrix: delay columns must match the number of frequencies");
  SteeringMatrix a(delays.rows(), delays.cols());
  for (Eigen::Index n = 0; n < delays.cols(); ++n) {
    const double omega = kTwoPi * freqs[static_cast<std::size_t>(n)];
    for (Eigen::Index m = 0; m < delays.rows(); ++m) a(m, n) = std::polar(1.0, -omega * delays(m, n));
  }
  return a;
}

inline SteeringMatrix steering_matrix(const Scenario& scenario) {
  const auto f = frequencies(scenario.signals);
  return steering_matrix(delay_matrix(scenario), f);
}

// R_x = A R_s A^H + eta I for an arbitrary Hermitian source covariance.
inline CovarianceSet covariance_set(const SteeringMatrix& a, MatXcd source_cov, double noise_variance) {
  detail::require(noise_variance > 0.0, "noise variance must be positive");
  detail::require(source_cov.rows() == a.cols() && source_cov.cols() == a.cols(),
                  "source covariance must be N x N");
  CovarianceSet out;
  out.array_cov = a * source_cov * a.adjoint();
  out.array_cov.diagonal().array() += noise_variance;
  out.source_cov = std::move(source_cov);
  out.noise_variance = noise_variance;
  return out;
}

// Deterministic (coherent) signals: R_s = s s^H.
inline CovarianceSet covariances(const SteeringMatrix& a, std::span<const SourceSignal> signals, double noise_variance) {
  detail::require(static_cast<Eigen::Index>(signals.size()) == a.cols(), "one signal per steering column is required");
  const VecXcd s = amplitude_vector(signals);
  return covariance_set(a, s * s.adjoint(), noise_variance);
}

// X(j) = A s + v(j), v(j) circular complex Gaussian with covariance eta I.
inline SnapshotBatch synthesize_snapshots(const SteeringMatrix& a, std::span<const SourceSignal> signals,
                                          double noise_variance, Eigen::Index count, std::uint64_t seed) {
  detail::require(count >= 1, "snapshot count must be at least 1");
  detail::require(noise_variance >= 0.0, "noise variance must be nonnegative");
  detail::require(static_cast<Eigen::Index>(signals.size()) == a.cols(), "one signal per steering column is required");
  const VecXcd clean = a * amplitude_vector(signals);
  SnapshotBatch batch{MatXcd(a.rows(), count), seed};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(noise_variance / 2.0));
  for (Eigen::Index j = 0; j < count; ++j) {
    for (Eigen::Index m = 0; m < a.rows(); ++m) {
      if (noise_variance == 0.0) {
        batch.snapshots(m, j) = clean(m);
      } else {
        const double re = normal(rng);
        const double im = normal(rng);
        batch.snapshots(m, j) = clean(m) + cdouble(re, im);
      }
    }
  }
  return batch;
}

inline MatXcd sample_covariance(const SnapshotBatch& batch) {
  detail::require(batch.count() >= 1, "sample covariance needs at least one snapshot");
  MatXcd r = batch.snapshots * batch.snapshots.adjoint() / static_cast<double>(batch.count());
  // Exact Hermitian symmetry; the product is Hermitian up to rounding.
  return (r + r.adjoint()) / 2.0;
}

// Noiseless per-element power |sum_n S_n A_mn|^2; the strongest element is the argmax, lowest index on ties.
inline ReceivedPower received_power(const SteeringMatrix& a, std::span<const SourceSignal> signals) {
  detail::require(static_cast<Eigen::Index>(signals.size()) == a.cols(), "one signal per steering column is required");
  ReceivedPower out;
  out.powers = (a * amplitude_vector(signals)).cwiseAbs2();
  out.strongest = 0;
  for (Eigen::Index m = 1; m < out.powers.size(); ++m)
    if (out.powers(m) > out.powers(out.strongest)) out.strongest = m;
  return out;
}

}  // namespace nfcrb
