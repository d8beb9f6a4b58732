#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "nfcrb/signal_model.hpp"

namespace nfcrb {

enum class ParameterBlock { bearing, range, mu, noise };
enum class MuKind { diagonal, real_part, imag_part };

// Ordering of P = [theta_1..theta_N, r_1..r_N, mu_1..mu_{N^2}, nu]. The N^2 source-covariance parameters
// are the N real diagonal entries, then (real, imaginary) of R_s(p, q) for each p < q in row-major order.
class ParameterIndex {
 public:
  struct Location {
    ParameterBlock block;
    Eigen::Index position;  // source index for bearing/range, mu position for mu, 0 for noise
    MuKind mu_kind = MuKind::diagonal;
    Eigen::Index p = 0, q = 0;  // R_s entry addressed by a mu parameter
  };

  explicit ParameterIndex(Eigen::Index sources) : n_(sources) {
    detail::require(sources >= 1, "parameter index needs at least one source");
  }

  Eigen::Index sources() const { return n_; }
  Eigen::Index size() const { return 2 * n_ + n_ * n_ + 1; }
  Eigen::Index bearing(Eigen::Index n) const { return n; }
  Eigen::Index range(Eigen::Index n) const { return n_ + n; }
  Eigen::Index mu(Eigen::Index i) const { return 2 * n_ + i; }
  Eigen::Index mu_count() const { return n_ * n_; }
  Eigen::Index mu_diagonal(Eigen::Index n) const { return mu(n); }
  Eigen::Index mu_real(Eigen::Index p, Eigen::Index q) const { return mu(n_ + 2 * pair_rank(p, q)); }
  Eigen::Index mu_imag(Eigen::Index p, Eigen::Index q) const { return mu_real(p, q) + 1; }
  Eigen::Index noise() const { return 2 * n_ + n_ * n_; }

  Location locate(Eigen::Index i) const {
    detail::require(i >= 0 && i < size(), "parameter index out of range");
    if (i < n_) return {ParameterBlock::bearing, i};
    if (i < 2 * n_) return {ParameterBlock::range, i - n_};
    if (i == noise()) return {ParameterBlock::noise, 0};
    const Eigen::Index pos = i - 2 * n_;
    if (pos < n_) return {ParameterBlock::mu, pos, MuKind::diagonal, pos, pos};
    const Eigen::Index pair = (pos - n_) / 2;
    const MuKind kind = ((pos - n_) % 2 == 0) ? MuKind::real_part : MuKind::imag_part;
    Eigen::Index rank = 0;
    for (Eigen::Index p = 0; p < n_; ++p)
      for (Eigen::Index q = p + 1; q < n_; ++q, ++rank)
        if (rank == pair) return {ParameterBlock::mu, pos, kind, p, q};
    throw ValidationError("parameter index out of range");
  }

  // Hermitian basis matrix E with dR_s/dmu = E.
  MatXcd mu_basis(Eigen::Index mu_position) const {
    const Location loc = locate(mu(mu_position));
    MatXcd e = MatXcd::Zero(n_, n_);
    switch (loc.mu_kind) {
      case MuKind::diagonal:
        e(loc.p, loc.p) = 1.0;
        break;
      case MuKind::real_part:
        e(loc.p, loc.q) = 1.0;
        e(loc.q, loc.p) = 1.0;
        break;
      case MuKind::imag_part:
        e(loc.p, loc.q) = cdouble(0.0, 1.0);
        e(loc.q, loc.p) = cdouble(0.0, -1.0);
        break;
    }
    return e;
  }

  std::string label(Eigen::Index i) const {
    const Location loc = locate(i);
    const auto one = [](Eigen::Index v) { return std::to_string(v + 1); };
    switch (loc.block) {
      case ParameterBlock::bearing: return "theta_" + one(loc.position);
      case ParameterBlock::range: return "r_" + one(loc.position);
      case ParameterBlock::noise: return "nu";
      case ParameterBlock::mu: break;
    }
    switch (loc.mu_kind) {
      case MuKind::diagonal: return "mu_diag(" + one(loc.p) + ")";
      case MuKind::real_part: return "mu_re(" + one(loc.p) + "," + one(loc.q) + ")";
      case MuKind::imag_part: return "mu_im(" + one(loc.p) + "," + one(loc.q) + ")";
    }
    return {};
  }

 private:
  Eigen::Index pair_rank(Eigen::Index p, Eigen::Index q) const {
    detail::require(p >= 0 && p < q && q < n_, "mu pair must satisfy 0 <= p < q < N");
    // pairs before row p: sum_{i<p} (N-1-i)
    return p * (2 * n_ - p - 1) / 2 + (q - p - 1);
  }

  Eigen::Index n_;
};

struct FimMatrix {
  MatXd entries;
  int snapshots = 1;
  double max_asymmetry = 0.0;   // before symmetrization, absolute
  double min_eigenvalue = 0.0;  // after symmetrization
  double rx_condition = 0.0;    // condition number of the array covariance that produced it
};

struct CrbReport {
  VecXd crb_theta;  // rad^2
  VecXd crb_r;      // m^2
  double crb_theta_total = 0.0;
  double crb_r_total = 0.0;
  Eigen::Index rank = 0;
  Eigen::Index dimension = 0;
  bool rank_deficient = false;
  double condition_number = 0.0;  // over the retained spectrum
  double min_eigenvalue = 0.0;
};

enum class Axis { bearing, range };

namespace detail {

inline MatXcd kron(const MatXcd& a, const MatXcd& b) {
  MatXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline VecXcd vec(const MatXcd& m) { return Eigen::Map<const VecXcd>(m.data(), m.size()); }

struct HermitianInverse {
  MatXcd inverse;
  double condition = 0.0;
};

inline HermitianInverse invert_hermitian(const MatXcd& r, const char* what) {
  Eigen::SelfAdjointEigenSolver<MatXcd> eig(r);
  const VecXd& lambda = eig.eigenvalues();
  const double lo = lambda.minCoeff();
  const double hi = lambda.cwiseAbs().maxCoeff();
  if (!(lo > 1e-14 * hi) || !std::isfinite(lo)) {
    throw SingularMatrixError(std::string(what) + " is singular (smallest eigenvalue " + std::to_string(lo) + ")", lo);
  }
  HermitianInverse out;
  out.inverse = eig.eigenvectors() * lambda.cwiseInverse().asDiagonal() * eig.eigenvectors().adjoint();
  out.condition = hi / lo;
  return out;
}

// Partial derivatives of tau_mn with respect to theta_n or r_n.
inline double delay_derivative(const SensorGeom& sensor, const SourceGeom& source, double velocity, Axis axis) {
  const double rho = sensor.radius_m;
  const double r = source.range_m;
  const double dphi = source.bearing_rad - sensor.azimuth_rad;
  const double dist2 = r * r + rho * rho - 2.0 * rho * r * std::cos(dphi);
  if (!(dist2 > 0.0)) throw SingularGeometryError("sensor and source coincide");
  const double dist = std::sqrt(dist2);
  if (axis == Axis::bearing) return rho * r * std::sin(dphi) / (velocity * dist);
  return (r - rho * std::cos(dphi)) / (velocity * dist);
}

}  // namespace detail

// M x N matrix whose column n is d a_n / d alpha_n (the sum of the per-source derivative matrices).
inline MatXcd steering_derivative_columns(const Scenario& scenario, const SteeringMatrix& a, Axis axis) {
  MatXcd d(a.rows(), a.cols());
  for (Eigen::Index n = 0; n < a.cols(); ++n) {
    const double omega = kTwoPi * scenario.signals[static_cast<std::size_t>(n)].freq_hz;
    for (Eigen::Index m = 0; m < a.rows(); ++m) {
      const double dtau = detail::delay_derivative(scenario.sensors[static_cast<std::size_t>(m)],
                                                   scenario.sources[static_cast<std::size_t>(n)], scenario.velocity_mps, axis);
      d(m, n) = cdouble(0.0, -omega * dtau) * a(m, n);
    }
  }
  return d;
}

// dA/dalpha_n for every n; column k of the n-th matrix vanishes for k != n.
inline std::vector<MatXcd> steering_derivatives(const Scenario& scenario, Axis axis) {
  const SteeringMatrix a = steering_matrix(scenario);
  const MatXcd cols = steering_derivative_columns(scenario, a, axis);
  std::vector<MatXcd> out;
  out.reserve(static_cast<std::size_t>(a.cols()));
  for (Eigen::Index n = 0; n < a.cols(); ++n) {
    MatXcd d = MatXcd::Zero(a.rows(), a.cols());
    d.col(n) = cols.col(n);
    out.push_back(std::move(d));
  }
  return out;
}

// dR_x/dp for every parameter in ParameterIndex order.
inline std::vector<MatXcd> rx_derivatives(const Scenario& scenario, const SteeringMatrix& a, const CovarianceSet& cov) {
  const Eigen::Index n = a.cols();
  const ParameterIndex index(n);
  std::vector<MatXcd> out;
  out.reserve(static_cast<std::size_t>(index.size()));
  const MatXcd rs_ah = cov.source_cov * a.adjoint();
  for (Axis axis : {Axis::bearing, Axis::range}) {
    const MatXcd cols = steering_derivative_columns(scenario, a, axis);
    for (Eigen::Index k = 0; k < n; ++k) {
      // (dA) R_s A^H with dA nonzero only in column k
      const MatXcd term = cols.col(k) * rs_ah.row(k);
      out.push_back(term + term.adjoint());
    }
  }
  for (Eigen::Index i = 0; i < index.mu_count(); ++i) out.push_back(a * index.mu_basis(i) * a.adjoint());
  out.push_back(MatXcd::Identity(a.rows(), a.rows()));
  return out;
}

// F_ij = N_s tr(R^-1 dR/dp_i R^-1 dR/dp_j).
inline FimMatrix fim_generic(const MatXcd& array_cov, const std::vector<MatXcd>& derivs, int snapshots) {
  detail::require(snapshots >= 1, "snapshot count must be at least 1");
  const auto inv = detail::invert_hermitian(array_cov, "array covariance");
  const auto p = static_cast<Eigen::Index>(derivs.size());
  std::vector<MatXcd> y;
  y.reserve(derivs.size());
  for (const auto& d : derivs) y.push_back(inv.inverse * d);

  MatXd f(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j)
      f(i, j) = y[static_cast<std::size_t>(i)].cwiseProduct(y[static_cast<std::size_t>(j)].transpose()).sum().real();
  f *= static_cast<double>(snapshots);

  FimMatrix out;
  out.max_asymmetry = (f - f.transpose()).cwiseAbs().maxCoeff();
  out.entries = (f + f.transpose()) / 2.0;
  out.snapshots = snapshots;
  out.rx_condition = inv.condition;
  out.min_eigenvalue = p > 0 ? Eigen::SelfAdjointEigenSolver<MatXd>(out.entries, Eigen::EigenvaluesOnly).eigenvalues()(0) : 0.0;
  return out;
}

// Constant selection matrices that map vec(R_s) onto its real parameterization. Index vectors are 1-based and
// address column-major vec() positions of an N x N matrix.
struct SelectionMatrices {
  Eigen::Index sources = 0;
  std::vector<Eigen::Index> j1, j1_bar, j2, j3, j3_bar, j4, j4_bar;
  MatXd q1, q1_bar, q2, q2_bar, q, q4;
  MatXcd q_bar, qt;
};

inline SelectionMatrices selection_matrices(Eigen::Index n) {
  detail::require(n >= 1, "selection matrices need at least one source");
  SelectionMatrices s;
  s.sources = n;
  const auto at = [n](Eigen::Index row, Eigen::Index col) { return col * n + row + 1; };  // 0-based (row, col)

  // strictly-lower entries column by column, paired with their transposes
  for (Eigen::Index col = 0; col < n; ++col)
    for (Eigen::Index row = col + 1; row < n; ++row) {
      s.j1.push_back(at(row, col));
      s.j2.push_back(at(col, row));
    }
  for (Eigen::Index col = 0; col < n; ++col)
    for (Eigen::Index row = col; row < n; ++row) s.j3.push_back(at(row, col));
  for (Eigen::Index k = 0; k < n; ++k) s.j4.push_back(at(k, k));
  for (Eigen::Index i = 1; i <= n * (n - 1) / 2; ++i) s.j1_bar.push_back(i);
  for (Eigen::Index i = 1; i <= n * (n + 1) / 2; ++i) s.j3_bar.push_back(i);
  for (Eigen::Index i = 1; i <= n; ++i) s.j4_bar.push_back(i);

  const Eigen::Index nn = n * n;
  const auto ones = [](Eigen::Index rows, Eigen::Index cols, const std::vector<Eigen::Index>& r,
                       const std::vector<Eigen::Index>& c) {
    MatXd m = MatXd::Zero(rows, cols);
    for (std::size_t i = 0; i < r.size(); ++i) m(r[i] - 1, c[i] - 1) = 1.0;
    return m;
  };
  const MatXd pairs = ones(nn, nn, s.j1, s.j2);
  s.q1 = MatXd::Identity(nn, nn) + pairs;
  s.q1_bar = MatXd::Identity(nn, nn) - pairs;
  s.q2 = ones(n * (n + 1) / 2, nn, s.j3_bar, s.j3);
  s.q2_bar = ones(n * (n - 1) / 2, nn, s.j1_bar, s.j1);
  s.q = s.q2 * s.q1;
  s.q_bar = cdouble(0.0, -1.0) * (s.q2_bar * s.q1_bar).cast<cdouble>();
  s.qt.resize(nn, nn);
  s.qt << s.q.cast<cdouble>(), s.q_bar;
  s.q4 = ones(n, nn, s.j4_bar, s.j4);
  return s;
}

// Signed permutation P with rows of P * Q_t equal to vec(E_i)^H in ParameterIndex mu order. Q_t lists the
// lower-triangle real parts first and the imaginary parts of the lower entries, which carry the opposite sign
// of the upper-triangle imaginary parts used by ParameterIndex.
inline MatXd mu_reordering(const SelectionMatrices& s) {
  const Eigen::Index n = s.sources;
  const ParameterIndex index(n);
  MatXd p = MatXd::Zero(n * n, n * n);
  const auto real_rows = static_cast<Eigen::Index>(s.j3.size());
  for (Eigen::Index r = 0; r < real_rows; ++r) {
    const Eigen::Index flat = s.j3[static_cast<std::size_t>(r)] - 1;
    const Eigen::Index row = flat % n, col = flat / n;
    const Eigen::Index target = row == col ? index.mu_diagonal(col) : index.mu_real(col, row);
    p(target - index.mu(0), r) = 1.0;
  }
  for (std::size_t i = 0; i < s.j1.size(); ++i) {
    const Eigen::Index flat = s.j1[i] - 1;
    const Eigen::Index row = flat % n, col = flat / n;
    p(index.mu_imag(col, row) - index.mu(0), real_rows + static_cast<Eigen::Index>(i)) = -1.0;
  }
  return p;
}

struct BlockDeviation {
  std::string name;
  double max_relative = 0.0;
};

struct ClosedFormFim {
  FimMatrix fim;
  std::vector<BlockDeviation> deviations;  // against fim_generic
};

// Largest |a_ij - b_ij| / sqrt(|b_ii b_jj|) over each parameter block pair.
inline std::vector<BlockDeviation> block_deviations(const MatXd& a, const MatXd& b, const ParameterIndex& index) {
  const Eigen::Index n = index.sources();
  struct Range {
    const char* name;
    Eigen::Index start, len;
  };
  const Range ranges[] = {{"theta", 0, n}, {"r", n, n}, {"mu", 2 * n, n * n}, {"nu", index.noise(), 1}};
  std::vector<BlockDeviation> out;
  for (std::size_t x = 0; x < 4; ++x) {
    for (std::size_t y = x; y < 4; ++y) {
      BlockDeviation dev{std::string(ranges[x].name) + "-" + ranges[y].name, 0.0};
      for (Eigen::Index i = ranges[x].start; i < ranges[x].start + ranges[x].len; ++i)
        for (Eigen::Index j = ranges[y].start; j < ranges[y].start + ranges[y].len; ++j) {
          const double diff = std::abs(a(i, j) - b(i, j));
          const double scale = std::sqrt(std::abs(b(i, i) * b(j, j)));
          double rel = 0.0;
          if (diff > 0.0) rel = scale > 0.0 ? diff / scale : std::numeric_limits<double>::infinity();
          dev.max_relative = std::max(dev.max_relative, rel);
        }
      out.push_back(dev);
    }
  }
  return out;
}

// Block-by-block FIM built from Hadamard/Kronecker products and the selection matrices.
inline FimMatrix fim_closed_form_only(const Scenario& scenario, const SteeringMatrix& a, const CovarianceSet& cov,
                                      int snapshots) {
  detail::require(snapshots >= 1, "snapshot count must be at least 1");
  const Eigen::Index n = a.cols();
  const Eigen::Index m = a.rows();
  const ParameterIndex index(n);
  const auto inv = detail::invert_hermitian(cov.array_cov, "array covariance");
  const MatXcd& w = inv.inverse;
  const MatXcd& rs = cov.source_cov;
  const MatXcd w2 = w * w;
  const MatXcd g = a.adjoint() * w * a;
  const MatXcd rs_g_rs = rs * g * rs;

  const SelectionMatrices sel = selection_matrices(n);
  const MatXcd qt = mu_reordering(sel).cast<cdouble>() * sel.qt;
  const MatXcd q4 = sel.q4.cast<cdouble>();

  const MatXcd d_theta = steering_derivative_columns(scenario, a, Axis::bearing);
  const MatXcd d_r = steering_derivative_columns(scenario, a, Axis::range);

  const auto alpha_beta = [&](const MatXcd& da, const MatXcd& db) -> MatXd {
    const MatXcd t1 = rs_g_rs.cwiseProduct((db.adjoint() * w * da).transpose());
    const MatXcd t2 = (rs * a.adjoint() * w * db).cwiseProduct((rs * a.adjoint() * w * da).transpose());
    return 2.0 * (t1 + t2).real();
  };
  const auto alpha_mu = [&](const MatXcd& da) -> MatXd {
    const MatXcd k = detail::kron((g * rs).transpose(), da.adjoint() * w * a) +
                     detail::kron((a.adjoint() * w * da).transpose(), rs * g);
    return (q4 * k * qt.adjoint()).real();
  };
  const auto alpha_nu = [&](const MatXcd& da) -> VecXd { return 2.0 * (rs * a.adjoint() * w2 * da).diagonal().real(); };

  MatXd f = MatXd::Zero(index.size(), index.size());
  const Eigen::Index t0 = 0, r0 = n, mu0 = 2 * n, nu = index.noise();
  f.block(t0, t0, n, n) = alpha_beta(d_theta, d_theta);
  f.block(r0, r0, n, n) = alpha_beta(d_r, d_r);
  f.block(t0, r0, n, n) = alpha_beta(d_theta, d_r);
  f.block(r0, t0, n, n) = f.block(t0, r0, n, n).transpose();

  f.block(t0, mu0, n, n * n) = alpha_mu(d_theta);
  f.block(r0, mu0, n, n * n) = alpha_mu(d_r);
  f.block(mu0, t0, n * n, n) = f.block(t0, mu0, n, n * n).transpose();
  f.block(mu0, r0, n * n, n) = f.block(r0, mu0, n, n * n).transpose();

  f.block(t0, nu, n, 1) = alpha_nu(d_theta);
  f.block(r0, nu, n, 1) = alpha_nu(d_r);
  f.block(nu, t0, 1, n) = f.block(t0, nu, n, 1).transpose();
  f.block(nu, r0, 1, n) = f.block(r0, nu, n, 1).transpose();

  const MatXd mumu = (qt * detail::kron(g.conjugate(), g) * qt.adjoint()).real();
  f.block(mu0, mu0, n * n, n * n) = (mumu + mumu.transpose()) / 2.0;
  const MatXcd wa = w * a;
  const VecXd munu = (qt * detail::kron(wa.transpose(), wa.adjoint()) * detail::vec(MatXcd::Identity(m, m))).real();
  f.block(mu0, nu, n * n, 1) = munu;
  f.block(nu, mu0, 1, n * n) = munu.transpose();
  f(nu, nu) = w2.trace().real();

  f *= static_cast<double>(snapshots);
  FimMatrix out;
  out.max_asymmetry = (f - f.transpose()).cwiseAbs().maxCoeff();
  out.entries = f;
  out.snapshots = snapshots;
  out.rx_condition = inv.condition;
  out.min_eigenvalue = Eigen::SelfAdjointEigenSolver<MatXd>(f, Eigen::EigenvaluesOnly).eigenvalues()(0);
  return out;
}

// Closed-form FIM together with its per-block deviation from the trace-form FIM, which stays authoritative.
inline ClosedFormFim fim_closed_form(const Scenario& scenario, const SteeringMatrix& a, const CovarianceSet& cov,
                                     int snapshots) {
  ClosedFormFim out;
  out.fim = fim_closed_form_only(scenario, a, cov, snapshots);
  const FimMatrix generic = fim_generic(cov.array_cov, rx_derivatives(scenario, a, cov), snapshots);
  out.deviations = block_deviations(out.fim.entries, generic.entries, ParameterIndex(a.cols()));
  return out;
}

// CRB from the (pseudo-)inverse of F. The first N parameters are bearings, the next N ranges.
inline CrbReport crb_from_fim(const MatXd& f, Eigen::Index sources) {
  detail::require(f.rows() == f.cols(), "FIM must be square");
  detail::require(sources >= 1 && 2 * sources <= f.rows(), "FIM too small for the requested source count");
  const MatXd sym = (f + f.transpose()) / 2.0;
  Eigen::SelfAdjointEigenSolver<MatXd> eig(sym);
  const VecXd& lambda = eig.eigenvalues();
  const double top = lambda.cwiseAbs().maxCoeff();
  const double tol = 1e-12 * top;

  CrbReport out;
  out.dimension = f.rows();
  out.min_eigenvalue = lambda(0);
  VecXd inv_lambda = VecXd::Zero(lambda.size());
  double smallest_kept = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda(i) > tol) {
      inv_lambda(i) = 1.0 / lambda(i);
      ++out.rank;
      smallest_kept = std::min(smallest_kept, lambda(i));
    }
  }
  out.rank_deficient = out.rank < out.dimension;
  out.condition_number = out.rank > 0 ? lambda.maxCoeff() / smallest_kept : std::numeric_limits<double>::infinity();

  const MatXd& v = eig.eigenvectors();
  VecXd diag(f.rows());
  for (Eigen::Index i = 0; i < f.rows(); ++i) diag(i) = (v.row(i).array().square() * inv_lambda.transpose().array()).sum();
  out.crb_theta = diag.head(sources);
  out.crb_r = diag.segment(sources, sources);
  out.crb_theta_total = out.crb_theta.sum();
  out.crb_r_total = out.crb_r.sum();
  return out;
}

inline CrbReport crb_from_fim(const FimMatrix& f, Eigen::Index sources) { return crb_from_fim(f.entries, sources); }

// Everything the reports need for one constellation.
struct BoundSummary {
  double det_rx = 0.0;
  CrbReport crb;
  FimMatrix fim;
};

inline double hermitian_determinant(const MatXcd& r) {
  const VecXd lambda = Eigen::SelfAdjointEigenSolver<MatXcd>(r, Eigen::EigenvaluesOnly).eigenvalues();
  return lambda.prod();
}

inline BoundSummary evaluate_bounds(const Scenario& scenario) {
  const SteeringMatrix a = steering_matrix(scenario);
  const CovarianceSet cov = covariances(a, scenario.signals, scenario.noise_variance);
  BoundSummary out;
  out.det_rx = hermitian_determinant(cov.array_cov);
  out.fim = fim_generic(cov.array_cov, rx_derivatives(scenario, a, cov), scenario.snapshots);
  out.crb = crb_from_fim(out.fim, a.cols());
  return out;
}

}  // namespace nfcrb
