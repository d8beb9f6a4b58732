#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "nfcrb/fim_crb.hpp"

namespace nfcrb {

// Hadamard-type bound (max |x_ij|)^M * M^(M/2) >= |det X| for an M x M matrix.
inline double hadamard_bound(const MatXcd& x) {
  detail::require(x.rows() == x.cols(), "Hadamard bound needs a square matrix");
  const auto m = static_cast<double>(x.rows());
  if (x.rows() == 0) return 1.0;
  return std::pow(x.cwiseAbs().maxCoeff(), m) * std::pow(m, m / 2.0);
}

// Phases T_n = omega_n tau_kn of every source at one element, written through (H, phi).
struct PhaseTerms {
  VecXd values;
  Eigen::Index element = 0;
  VecXd scale;  // g_n = omega_n H_kn / C
};

inline PhaseTerms phase_terms(const PairwiseGeometry& tables, std::span<const SourceSignal> signals, double velocity_mps,
                              Eigen::Index element) {
  detail::require(element >= 0 && element < tables.sensor_count(), "element index out of range");
  detail::require(static_cast<Eigen::Index>(signals.size()) == tables.source_count(), "one signal per source is required");
  detail::require(velocity_mps > 0.0, "propagation velocity must be positive");
  const Eigen::Index n = tables.source_count();
  PhaseTerms t{VecXd(n), element, VecXd(n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    const double phi = tables.arrival_rad(element, j);
    const double s = std::sin(phi);
    if (!(s > 0.0)) throw SingularGeometryError("arrival angle must lie strictly inside (0, pi)");
    t.scale(j) = kTwoPi * signals[static_cast<std::size_t>(j)].freq_hz * tables.vertical_m(element, j) / velocity_mps;
    t.values(j) = t.scale(j) / s;
  }
  return t;
}

inline PhaseTerms phase_terms(const Constellation& c, Eigen::Index element) {
  return phase_terms(c.tables(), c.scenario.signals, c.scenario.velocity_mps, element);
}

// G + F = (sum cos T_n)^2 + (sum sin T_n)^2.
inline double gf_objective(const PhaseTerms& terms) {
  const double g = terms.values.array().cos().sum();
  const double f = terms.values.array().sin().sum();
  return g * g + f * f;
}

enum class Objective { gf, power, det, crb_theta, crb_r };
enum class RepositionMode { analytic, linesearch, grid };

inline const char* to_string(Objective o) {
  switch (o) {
    case Objective::gf: return "gf";
    case Objective::power: return "power";
    case Objective::det: return "det";
    case Objective::crb_theta: return "crb_theta";
    case Objective::crb_r: return "crb_r";
  }
  return "?";
}

inline const char* to_string(RepositionMode m) {
  switch (m) {
    case RepositionMode::analytic: return "analytic";
    case RepositionMode::linesearch: return "linesearch";
    case RepositionMode::grid: return "grid";
  }
  return "?";
}

inline double evaluate_objective(const Constellation& c, Eigen::Index element, Objective objective) {
  switch (objective) {
    case Objective::gf: return gf_objective(phase_terms(c, element));
    case Objective::power: return received_power(steering_matrix(c.scenario), c.scenario.signals).powers(element);
    case Objective::det: {
      const SteeringMatrix a = steering_matrix(c.scenario);
      return hermitian_determinant(covariances(a, c.scenario.signals, c.scenario.noise_variance).array_cov);
    }
    case Objective::crb_theta: return evaluate_bounds(c.scenario).crb.crb_theta_total;
    case Objective::crb_r: return evaluate_bounds(c.scenario).crb.crb_r_total;
  }
  return 0.0;
}

// Per-source outcome of the analytic angle rule.
struct SourceTarget {
  bool near_zero = true;  // pi/m target, otherwise pi/2
  int m = 0;              // multiplier of the pi/m target
  double argument = 0.0;  // value whose arcsine gives the angle
  bool feasible = false;
  double acute_rad = 0.0;
  double obtuse_rad = 0.0;
  bool obtuse_chosen = false;
  std::string note;
};

struct RepositionPlan {
  Eigen::Index element = 0;
  RepositionMode mode = RepositionMode::analytic;
  Objective objective = Objective::gf;
  std::vector<double> new_arrival_rad;
  double displacement_m = 0.0;        // signed move along the reference axis
  double vertical_shift_m = 0.0;      // nonzero only for 2-D grid plans
  std::optional<Vec2d> new_position;  // Cartesian position of the element after the move (grid plans)
  double objective_before = 0.0;
  double objective_after = 0.0;
  std::vector<SourceTarget> targets;        // analytic plans
  std::vector<double> realized_arrival_rad;  // analytic plans: angles actually reached by the move
  std::optional<double> realized_objective;  // analytic plans: gf at the realized move
  std::size_t evaluated = 0;
  std::size_t skipped = 0;
  std::vector<std::string> notes;
};

// Slides element k by (dx, dy). Vertical distances of the element drop by dy; dy = 0 keeps them.
inline Constellation move_element(const Constellation& c, Eigen::Index k, double dx, double dy = 0.0) {
  const PairwiseGeometry& tables = c.tables();
  detail::require(k >= 0 && k < tables.sensor_count(), "element index out of range");
  Constellation out = c;
  if (dx == 0.0 && dy == 0.0) return out;
  PairwiseGeometry& t = *out.pairwise;
  for (Eigen::Index j = 0; j < t.source_count(); ++j) {
    const double h = tables.vertical_m(k, j) - dy;
    if (!(h > 0.0)) {
      throw SingularGeometryError("move places element " + std::to_string(k + 1) + " level with or above source " +
                                  std::to_string(j + 1));
    }
    const double offset = tables.horizontal_offset(k, j) - dx;
    t.vertical_m(k, j) = h;
    t.arrival_rad(k, j) = std::atan2(h, offset);
  }
  auto& sensor = out.scenario.sensors[static_cast<std::size_t>(k)];
  sensor = sensor_from_cartesian(to_cartesian(sensor) + Vec2d(dx, dy));
  return out;
}

// New constellation with element k's arrival angles replaced by the plan's and the element moved by the plan's
// displacement. Other elements and all sources are untouched.
inline Constellation apply_reposition(const Constellation& c, const RepositionPlan& plan) {
  const PairwiseGeometry& tables = c.tables();
  detail::require(plan.element >= 0 && plan.element < tables.sensor_count(), "plan element out of range");
  detail::require(static_cast<Eigen::Index>(plan.new_arrival_rad.size()) == tables.source_count(),
                  "plan must carry one angle per source");
  for (double phi : plan.new_arrival_rad)
    detail::require(phi > 0.0 && phi < kPi, "plan arrival angles must lie strictly inside (0, pi)");

  Constellation out = c;
  const Eigen::Index k = plan.element;
  if (plan.displacement_m != 0.0 || plan.vertical_shift_m != 0.0) {
    auto& sensor = out.scenario.sensors[static_cast<std::size_t>(k)];
    sensor = sensor_from_cartesian(to_cartesian(sensor) + Vec2d(plan.displacement_m, plan.vertical_shift_m));
    for (Eigen::Index j = 0; j < tables.source_count(); ++j) {
      const double h = tables.vertical_m(k, j) - plan.vertical_shift_m;
      detail::require(h > 0.0, "plan moves the element level with or above a source");
      out.pairwise->vertical_m(k, j) = h;
    }
  }
  for (Eigen::Index j = 0; j < tables.source_count(); ++j)
    out.pairwise->arrival_rad(k, j) = plan.new_arrival_rad[static_cast<std::size_t>(j)];
  return out;
}

namespace detail {

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Values within this relative distance of the best are ties.
inline bool ties_with(double value, double best) { return std::abs(value - best) <= 1e-12 * std::max(std::abs(best), 1e-300); }

struct Candidate {
  double dx = 0.0, dy = 0.0;
  bool ok = false;
  double value = 0.0;
  std::string error;

  static Candidate at(double dx, double dy) {
    Candidate c;
    c.dx = dx;
    c.dy = dy;
    return c;
  }
};

// Best of the evaluated candidates: lowest objective, then smallest move, then lowest dx, then lowest dy.
inline const Candidate* pick_best(const std::vector<Candidate>& cands) {
  const Candidate* best = nullptr;
  for (const auto& c : cands) {
    if (!c.ok) continue;
    if (best == nullptr) {
      best = &c;
      continue;
    }
    if (ties_with(c.value, best->value) || c.value == best->value) {
      const double dn = std::hypot(c.dx, c.dy), bn = std::hypot(best->dx, best->dy);
      if (dn < bn || (dn == bn && (c.dx < best->dx || (c.dx == best->dx && c.dy < best->dy)))) best = &c;
    } else if (c.value < best->value) {
      best = &c;
    }
  }
  return best;
}

inline std::vector<Candidate> evaluate_moves(const Constellation& c, Eigen::Index k, Objective objective,
                                             std::vector<Candidate> cands) {
  return parallel_map(cands.size(), [&](std::size_t i) {
    Candidate out = cands[i];
    try {
      out.value = evaluate_objective(move_element(c, k, out.dx, out.dy), k, objective);
      out.ok = std::isfinite(out.value);
      if (!out.ok) out.error = "objective not finite";
    } catch (const std::exception& e) {
      out.error = e.what();
    }
    return out;
  });
}

inline RepositionPlan plan_from_candidates(const Constellation& c, Eigen::Index k, Objective objective,
                                           RepositionMode mode, const std::vector<Candidate>& evaluated) {
  // evaluated[0] is the unmoved element
  if (!evaluated.front().ok) throw Error("objective fails at the current position: " + evaluated.front().error);
  RepositionPlan plan;
  plan.element = k;
  plan.mode = mode;
  plan.objective = objective;
  plan.objective_before = evaluated.front().value;
  for (std::size_t i = 1; i < evaluated.size(); ++i) {
    ++plan.evaluated;
    if (!evaluated[i].ok) {
      ++plan.skipped;
      if (plan.skipped <= 5) {
        plan.notes.push_back("skipped move (" + std::to_string(evaluated[i].dx) + ", " + std::to_string(evaluated[i].dy) +
                             "): " + evaluated[i].error);
      }
    }
  }
  if (plan.evaluated > 0 && plan.skipped == plan.evaluated) throw Error("objective failed at every grid point");
  if (plan.skipped > 5) plan.notes.push_back(std::to_string(plan.skipped - 5) + " further grid points skipped");

  const Candidate* best = pick_best(evaluated);
  const Constellation moved = move_element(c, k, best->dx, best->dy);
  plan.displacement_m = best->dx;
  plan.vertical_shift_m = best->dy;
  plan.objective_after = best->value;
  for (Eigen::Index j = 0; j < moved.tables().source_count(); ++j)
    plan.new_arrival_rad.push_back(moved.tables().arrival_rad(k, j));
  if (mode == RepositionMode::grid) plan.new_position = to_cartesian(moved.scenario.sensors[static_cast<std::size_t>(k)]);
  return plan;
}

}  // namespace detail

struct LineGrid {
  double min = -200.0;
  double max = 200.0;
  int steps = 2001;

  std::vector<double> points() const {
    detail::require(steps >= 1, "grid needs at least one point");
    detail::require(min <= max, "grid bounds must satisfy min <= max");
    if (steps == 1) return {min};
    std::vector<double> out(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i) out[static_cast<std::size_t>(i)] = min + (max - min) * i / (steps - 1);
    return out;
  }
};

// Slides element k along the reference axis over the grid (plus the current position) and keeps the best move.
inline RepositionPlan line_search_reposition(const Constellation& c, Eigen::Index k, Objective objective,
                                             const LineGrid& grid) {
  detail::require(k >= 0 && k < c.tables().sensor_count(), "element index out of range");
  std::vector<detail::Candidate> cands{detail::Candidate::at(0.0, 0.0)};
  for (double d : grid.points()) cands.push_back(detail::Candidate::at(d, 0.0));
  return detail::plan_from_candidates(c, k, objective, RepositionMode::linesearch,
                                      detail::evaluate_moves(c, k, objective, std::move(cands)));
}

// Plan that prescribes element k's arrival angles directly; the displacement is the median of the moves
// each angle implies on its own.
inline RepositionPlan plan_for_angles(const Constellation& c, Eigen::Index k, std::vector<double> angles_rad) {
  const PairwiseGeometry& tables = c.tables();
  detail::require(k >= 0 && k < tables.sensor_count(), "element index out of range");
  detail::require(static_cast<Eigen::Index>(angles_rad.size()) == tables.source_count(), "one angle per source is required");
  RepositionPlan plan;
  plan.element = k;
  plan.objective_before = gf_objective(phase_terms(c, k));
  std::vector<double> implied;
  PairwiseGeometry declared = tables;
  for (Eigen::Index j = 0; j < tables.source_count(); ++j) {
    const double phi = angles_rad[static_cast<std::size_t>(j)];
    detail::require(phi > 0.0 && phi < kPi, "arrival angles must lie strictly inside (0, pi)");
    implied.push_back(tables.horizontal_offset(k, j) - tables.vertical_m(k, j) / std::tan(phi));
    declared.arrival_rad(k, j) = phi;
  }
  plan.displacement_m = detail::median(implied);
  plan.objective_after = gf_objective(phase_terms(declared, c.scenario.signals, c.scenario.velocity_mps, k));
  const Constellation realized = move_element(c, k, plan.displacement_m);
  for (Eigen::Index j = 0; j < tables.source_count(); ++j) plan.realized_arrival_rad.push_back(realized.tables().arrival_rad(k, j));
  plan.realized_objective = gf_objective(phase_terms(realized, k));
  plan.new_arrival_rad = std::move(angles_rad);
  return plan;
}

// Angle rule: sources alternate between a pi/m phase (even positions, 0-based) and a pi/2 phase (odd positions).
// Each solved angle has an acute and an obtuse branch with identical phase; the branch combination is chosen
// so the gf objective is smallest once the element is actually slid to the median of the implied moves.
inline RepositionPlan analytic_reposition(const Constellation& c, Eigen::Index k, std::optional<int> m = std::nullopt) {
  const PairwiseGeometry& tables = c.tables();
  const Scenario& s = c.scenario;
  detail::require(k >= 0 && k < tables.sensor_count(), "element index out of range");
  if (m) detail::require(*m >= 1, "m must be a positive integer");
  const Eigen::Index n = tables.source_count();

  RepositionPlan plan;
  plan.element = k;
  plan.mode = RepositionMode::analytic;
  plan.objective = Objective::gf;
  plan.objective_before = gf_objective(phase_terms(c, k));

  std::vector<Eigen::Index> feasible;
  for (Eigen::Index j = 0; j < n; ++j) {
    SourceTarget t;
    const double f = s.signals[static_cast<std::size_t>(j)].freq_hz;
    const double h = tables.vertical_m(k, j);
    t.near_zero = (j % 2 == 0);
    if (t.near_zero) {
      const double base = 2.0 * f * h / s.velocity_mps;
      t.m = m ? *m : static_cast<int>(std::min(std::floor(1.0 / base), 1e9));
      t.argument = t.m * base;
      if (t.m < 1) t.note = "no integer m >= 1 keeps 2 m f H / C <= 1";
    } else {
      t.argument = 4.0 * f * h / s.velocity_mps;
    }
    t.feasible = t.argument <= 1.0 && (!t.near_zero || t.m >= 1);
    if (t.feasible) {
      t.acute_rad = std::asin(t.argument);
      t.obtuse_rad = kPi - t.acute_rad;
      feasible.push_back(j);
    } else {
      if (t.note.empty()) t.note = "arcsine argument " + std::to_string(t.argument) + " exceeds 1; angle kept";
      t.acute_rad = t.obtuse_rad = tables.arrival_rad(k, j);
    }
    plan.targets.push_back(t);
  }
  if (feasible.empty()) throw Error("no source admits an analytic angle at element " + std::to_string(k + 1) +
                                    "; use linesearch mode");
  detail::require(feasible.size() <= 20, "too many sources for branch enumeration");

  const auto angles_for = [&](unsigned long mask) {
    std::vector<double> a(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j) a[static_cast<std::size_t>(j)] = tables.arrival_rad(k, j);
    for (std::size_t i = 0; i < feasible.size(); ++i) {
      const SourceTarget& t = plan.targets[static_cast<std::size_t>(feasible[i])];
      a[static_cast<std::size_t>(feasible[i])] = ((mask >> i) & 1UL) ? t.obtuse_rad : t.acute_rad;
    }
    return a;
  };

  unsigned long best_mask = 0;
  double best_value = 0.0, best_shift = 0.0;
  for (unsigned long mask = 0; mask < (1UL << feasible.size()); ++mask) {
    const auto a = angles_for(mask);
    std::vector<double> implied;
    for (Eigen::Index j : feasible)
      implied.push_back(tables.horizontal_offset(k, j) - tables.vertical_m(k, j) / std::tan(a[static_cast<std::size_t>(j)]));
    const double shift = detail::median(implied);
    const double value = gf_objective(phase_terms(move_element(c, k, shift), k));
    if (mask == 0 || (value < best_value && !detail::ties_with(value, best_value))) {
      best_mask = mask;
      best_value = value;
      best_shift = shift;
    }
  }

  plan.new_arrival_rad = angles_for(best_mask);
  for (std::size_t i = 0; i < feasible.size(); ++i)
    plan.targets[static_cast<std::size_t>(feasible[i])].obtuse_chosen = (best_mask >> i) & 1UL;
  plan.displacement_m = best_shift;
  plan.realized_objective = best_value;
  const Constellation realized = move_element(c, k, best_shift);
  for (Eigen::Index j = 0; j < n; ++j) plan.realized_arrival_rad.push_back(realized.tables().arrival_rad(k, j));

  PairwiseGeometry declared = tables;
  for (Eigen::Index j = 0; j < n; ++j) declared.arrival_rad(k, j) = plan.new_arrival_rad[static_cast<std::size_t>(j)];
  plan.objective_after = gf_objective(phase_terms(declared, s.signals, s.velocity_mps, k));
  plan.notes.push_back("per-source angles are set independently; the realizable single-axis move is the median "
                       "of the implied displacements");
  return plan;
}

}  // namespace nfcrb
