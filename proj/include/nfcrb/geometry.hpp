#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "nfcrb/core.hpp"

namespace nfcrb {

// Emitter position in polar coordinates about the array origin.
struct SourceGeom {
  double range_m = 0.0;
  double bearing_rad = 0.0;
  bool operator==(const SourceGeom&) const = default;
};

// Sensor position in polar coordinates about the array origin.
struct SensorGeom {
  double radius_m = 0.0;
  double azimuth_rad = 0.0;
  bool operator==(const SensorGeom&) const = default;
};

// Narrowband emitter: carrier frequency and a complex amplitude held constant across snapshots.
struct SourceSignal {
  double freq_hz = 0.0;
  cdouble amplitude{0.0, 0.0};
  bool operator==(const SourceSignal&) const = default;
};

struct Scenario {
  std::vector<SourceGeom> sources;
  std::vector<SensorGeom> sensors;
  double velocity_mps = 0.0;
  std::vector<SourceSignal> signals;
  double noise_variance = 1.0;
  int snapshots = 1;

  std::size_t source_count() const { return sources.size(); }
  std::size_t sensor_count() const { return sensors.size(); }

  bool operator==(const Scenario&) const = default;
};

// Per (element, source) pair: perpendicular offset of the source above the axis-parallel line through the
// element, and the angle between the reference axis and the element-to-source line of sight.
// Rows are elements, columns are sources.
struct PairwiseGeometry {
  MatXd vertical_m;
  MatXd arrival_rad;

  Eigen::Index sensor_count() const { return vertical_m.rows(); }
  Eigen::Index source_count() const { return vertical_m.cols(); }

  // Signed horizontal offset from element k to source n implied by (H, phi).
  double horizontal_offset(Eigen::Index k, Eigen::Index n) const {
    const double phi = arrival_rad(k, n);
    return vertical_m(k, n) * std::cos(phi) / std::sin(phi);
  }

  friend bool operator==(const PairwiseGeometry& a, const PairwiseGeometry& b) {
    return a.vertical_m.rows() == b.vertical_m.rows() && a.vertical_m.cols() == b.vertical_m.cols() &&
           a.arrival_rad.rows() == b.arrival_rad.rows() && a.arrival_rad.cols() == b.arrival_rad.cols() &&
           a.vertical_m == b.vertical_m && a.arrival_rad == b.arrival_rad;
  }
};

inline Vec2d to_cartesian(const SensorGeom& s) {
  return {s.radius_m * std::cos(s.azimuth_rad), s.radius_m * std::sin(s.azimuth_rad)};
}

inline Vec2d to_cartesian(const SourceGeom& s) {
  return {s.range_m * std::cos(s.bearing_rad), s.range_m * std::sin(s.bearing_rad)};
}

inline SensorGeom sensor_from_cartesian(const Vec2d& p) {
  const double radius = p.norm();
  return {radius, radius == 0.0 ? 0.0 : detail::wrap_two_pi(std::atan2(p.y(), p.x()))};
}

inline SourceGeom source_from_cartesian(const Vec2d& p) {
  const double range = p.norm();
  if (!(range > 0.0)) throw DegenerateGeometryError("source coincides with the array origin");
  return {range, detail::wrap_two_pi(std::atan2(p.y(), p.x()))};
}

// Propagation delay from a source to a sensor in a common plane.
inline double delay(const SensorGeom& sensor, const SourceGeom& source, double velocity_mps) {
  detail::require(velocity_mps > 0.0, "propagation velocity must be positive");
  detail::require(source.range_m > 0.0, "source range must be positive");
  detail::require(sensor.radius_m >= 0.0, "sensor radius must be nonnegative");
  const double ratio = sensor.radius_m / source.range_m;
  const double inner = 1.0 + ratio * ratio - 2.0 * ratio * std::cos(source.bearing_rad - sensor.azimuth_rad);
  return source.range_m * std::sqrt(std::max(inner, 0.0)) / velocity_mps;
}

inline double delay_from_pairwise(double vertical_m, double arrival_rad, double velocity_mps) {
  detail::require(velocity_mps > 0.0, "propagation velocity must be positive");
  const double s = std::sin(arrival_rad);
  if (!(s > 0.0) || !(arrival_rad > 0.0 && arrival_rad < kPi)) {
    throw SingularGeometryError("arrival angle must lie strictly inside (0, pi)");
  }
  return vertical_m / (velocity_mps * s);
}

// M x N matrix of delays, rows = sensors.
inline MatXd delay_matrix(const Scenario& scenario) {
  const auto m = static_cast<Eigen::Index>(scenario.sensor_count());
  const auto n = static_cast<Eigen::Index>(scenario.source_count());
  MatXd tau(m, n);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      tau(i, j) = delay(scenario.sensors[i], scenario.sources[j], scenario.velocity_mps);
  return tau;
}

// Pairwise (vertical distance, arrival angle) form of a polar scenario, in the global frame whose
// reference axis is the x-axis.
inline PairwiseGeometry pairwise_from_polar(const Scenario& scenario) {
  const auto m = static_cast<Eigen::Index>(scenario.sensor_count());
  const auto n = static_cast<Eigen::Index>(scenario.source_count());
  PairwiseGeometry out{MatXd(m, n), MatXd(m, n)};
  for (Eigen::Index k = 0; k < m; ++k) {
    const Vec2d sensor = to_cartesian(scenario.sensors[k]);
    for (Eigen::Index j = 0; j < n; ++j) {
      const Vec2d d = to_cartesian(scenario.sources[j]) - sensor;
      const double tol = 1e-12 * std::max(1.0, d.norm());
      if (std::abs(d.y()) <= tol) {
        throw SingularGeometryError("source " + std::to_string(j + 1) + " is collinear with the reference axis through sensor " +
                                    std::to_string(k + 1));
      }
      if (d.y() < 0.0) {
        throw SingularGeometryError("source " + std::to_string(j + 1) + " lies below sensor " + std::to_string(k + 1) +
                                    "; arrival angle would leave (0, pi)");
      }
      out.vertical_m(k, j) = d.y();
      out.arrival_rad(k, j) = std::atan2(d.y(), d.x());
    }
  }
  return out;
}

struct Reconstruction {
  Scenario scenario;
  double residual_m = 0.0;  // RMS inconsistency of the pairwise tables
};

// Least-squares placement of sensors and sources from pairwise tables. Sensor 1 sits at the origin and the
// reference axis is the x-axis; source n seen from sensor k lies at offset (H/tan(phi), H).
inline Reconstruction reconstruct_polar(const PairwiseGeometry& pairwise, double velocity_mps,
                                        std::vector<SourceSignal> signals, double noise_variance, int snapshots) {
  const Eigen::Index m = pairwise.sensor_count();
  const Eigen::Index n = pairwise.source_count();
  detail::require(m >= 1 && n >= 1, "pairwise geometry needs at least one sensor and one source");
  detail::require(pairwise.arrival_rad.rows() == m && pairwise.arrival_rad.cols() == n,
                  "vertical distance and arrival angle tables must have the same shape");

  MatXd dx(m, n);
  for (Eigen::Index k = 0; k < m; ++k) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double phi = pairwise.arrival_rad(k, j);
      if (!(phi > 0.0 && phi < kPi) || !(std::sin(phi) > 0.0)) {
        throw SingularGeometryError("arrival angle of element " + std::to_string(k + 1) + ", source " +
                                    std::to_string(j + 1) + " must lie strictly inside (0, pi)");
      }
      dx(k, j) = pairwise.horizontal_offset(k, j);
    }
  }

  // Unknowns: x (or y) of sensors 2..M, then of sources 1..N. One equation per pair.
  const Eigen::Index unknowns = (m - 1) + n;
  MatXd design = MatXd::Zero(m * n, unknowns);
  for (Eigen::Index k = 0; k < m; ++k) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const Eigen::Index row = k * n + j;
      design(row, (m - 1) + j) = 1.0;
      if (k > 0) design(row, k - 1) = -1.0;
    }
  }
  Eigen::ColPivHouseholderQR<MatXd> qr(design);
  if (qr.rank() < unknowns) throw DegenerateGeometryError("pairwise tables do not determine the geometry");

  VecXd rhs_x(m * n), rhs_y(m * n);
  for (Eigen::Index k = 0; k < m; ++k)
    for (Eigen::Index j = 0; j < n; ++j) {
      rhs_x(k * n + j) = dx(k, j);
      rhs_y(k * n + j) = pairwise.vertical_m(k, j);
    }
  const VecXd sol_x = qr.solve(rhs_x);
  const VecXd sol_y = qr.solve(rhs_y);
  const double ssr = (design * sol_x - rhs_x).squaredNorm() + (design * sol_y - rhs_y).squaredNorm();

  Reconstruction out;
  out.residual_m = std::sqrt(ssr / static_cast<double>(2 * m * n));
  out.scenario.velocity_mps = velocity_mps;
  out.scenario.signals = std::move(signals);
  out.scenario.noise_variance = noise_variance;
  out.scenario.snapshots = snapshots;
  out.scenario.sensors.push_back(SensorGeom{0.0, 0.0});
  for (Eigen::Index k = 1; k < m; ++k) out.scenario.sensors.push_back(sensor_from_cartesian({sol_x(k - 1), sol_y(k - 1)}));
  for (Eigen::Index j = 0; j < n; ++j)
    out.scenario.sources.push_back(source_from_cartesian({sol_x(m - 1 + j), sol_y(m - 1 + j)}));
  return out;
}

// Far-field radius in wavelengths for an aperture of D wavelengths and tolerated wavefront departure l.
inline double far_field_radius(double aperture_wavelengths, double departure_wavelengths) {
  detail::require(aperture_wavelengths > 0.0 && departure_wavelengths > 0.0,
                  "aperture and departure must be positive");
  return aperture_wavelengths * aperture_wavelengths / (8.0 * departure_wavelengths);
}

// Full consistency check applied to scenarios that enter the bound computations.
inline void validate_scenario(const Scenario& s) {
  detail::require(s.velocity_mps > 0.0, "propagation velocity must be positive");
  detail::require(s.noise_variance > 0.0, "noise variance must be positive");
  detail::require(s.snapshots >= 1, "snapshot count must be at least 1");
  detail::require(!s.sources.empty(), "scenario needs at least one source");
  detail::require(s.signals.size() == s.sources.size(), "one signal per source is required");
  detail::require(s.source_count() < s.sensor_count(),
                  "N < M required: an array of M sensors resolves at most M - 1 sources (got N=" +
                      std::to_string(s.source_count()) + ", M=" + std::to_string(s.sensor_count()) + ")");
  for (std::size_t j = 0; j < s.sources.size(); ++j) {
    detail::require(s.sources[j].range_m > 0.0, "source " + std::to_string(j + 1) + " range must be positive");
    detail::require(s.signals[j].freq_hz > 0.0, "source " + std::to_string(j + 1) + " frequency must be positive");
  }
  for (std::size_t k = 0; k < s.sensors.size(); ++k)
    detail::require(s.sensors[k].radius_m >= 0.0, "sensor " + std::to_string(k + 1) + " radius must be nonnegative");
}

// A scenario together with its pairwise tables. The polar scenario drives every signal and bound
// computation; the tables drive the repositioning rules. When built from tables the two may disagree by
// residual_m (the tables over-determine the geometry).
struct Constellation {
  Scenario scenario;
  std::optional<PairwiseGeometry> pairwise;
  double residual_m = 0.0;
  bool from_tables = false;
  std::string pairwise_unavailable;  // reason when pairwise is empty

  static Constellation from_polar(Scenario s) {
    Constellation c;
    try {
      c.pairwise = pairwise_from_polar(s);
    } catch (const SingularGeometryError& e) {
      c.pairwise_unavailable = e.what();
    }
    c.scenario = std::move(s);
    return c;
  }

  static Constellation from_pairwise(PairwiseGeometry tables, double velocity_mps, std::vector<SourceSignal> signals,
                                     double noise_variance, int snapshots) {
    Reconstruction rec = reconstruct_polar(tables, velocity_mps, std::move(signals), noise_variance, snapshots);
    Constellation c;
    c.scenario = std::move(rec.scenario);
    c.pairwise = std::move(tables);
    c.residual_m = rec.residual_m;
    c.from_tables = true;
    return c;
  }

  const PairwiseGeometry& tables() const {
    if (!pairwise) throw SingularGeometryError("pairwise geometry unavailable: " + pairwise_unavailable);
    return *pairwise;
  }
};

}  // namespace nfcrb
