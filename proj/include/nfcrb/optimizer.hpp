#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "nfcrb/reposition.hpp"

namespace nfcrb {

// Displacement region for the exhaustive search: a line along the reference axis, or a box when y is set.
struct SearchRegion {
  LineGrid x;
  std::optional<LineGrid> y;
};

// Exhaustive oracle over the region (and the current position). In box mode the vertical distances change
// and the plan records the full new position.
inline RepositionPlan grid_search(const Constellation& c, Eigen::Index k, Objective objective, const SearchRegion& region) {
  detail::require(k >= 0 && k < c.tables().sensor_count(), "element index out of range");
  std::vector<detail::Candidate> cands{detail::Candidate::at(0.0, 0.0)};
  const auto xs = region.x.points();
  const std::vector<double> ys = region.y ? region.y->points() : std::vector<double>{0.0};
  for (double dy : ys)
    for (double dx : xs) cands.push_back(detail::Candidate::at(dx, dy));
  return detail::plan_from_candidates(c, k, objective, RepositionMode::grid,
                                      detail::evaluate_moves(c, k, objective, std::move(cands)));
}

enum class SweepVariable { frequency, velocity };
enum class SweepMode { primary, reposition };

inline const char* to_string(SweepMode m) { return m == SweepMode::primary ? "primary" : "reposition"; }

struct SweepSpec {
  SweepVariable vary = SweepVariable::frequency;
  Eigen::Index source = 0;  // varied source for frequency sweeps
  double start = 0.0;
  double stop = 0.0;
  int steps = 2;
  std::vector<SweepMode> modes{SweepMode::primary, SweepMode::reposition};

  std::vector<double> points() const {
    detail::require(steps >= 2, "sweep needs at least two steps");
    detail::require(start > 0.0 && start < stop, "sweep bounds must satisfy 0 < start < stop");
    std::vector<double> out(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i) out[static_cast<std::size_t>(i)] = start + (stop - start) * i / (steps - 1);
    return out;
  }
};

struct SweepRow {
  double point = 0.0;
  SweepMode mode = SweepMode::primary;
  double det = std::numeric_limits<double>::quiet_NaN();
  double crb_theta_total = std::numeric_limits<double>::quiet_NaN();
  double crb_r_total = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> flags;  // tokens without commas, e.g. "element=3", "rank_deficient"
  bool ok = false;
};

namespace detail {

inline std::string sanitize_flag(std::string s) {
  for (char& ch : s)
    if (ch == ',' || ch == ';' || ch == '\n' || ch == '\r' || ch == '"') ch = ' ';
  return s;
}

inline void fill_bounds(SweepRow& row, const Scenario& s) {
  const BoundSummary b = evaluate_bounds(s);
  row.det = b.det_rx;
  row.crb_theta_total = b.crb.crb_theta_total;
  row.crb_r_total = b.crb.crb_r_total;
  if (b.crb.rank_deficient) row.flags.push_back("rank_deficient");
  row.ok = true;
}

}  // namespace detail

// One row per (grid point, mode), ordered by point then by the order of spec.modes. The reposition mode re-selects
// the strongest element at every point and applies the analytic plan.
inline std::vector<SweepRow> sweep(const Constellation& base, const SweepSpec& spec) {
  detail::require(!spec.modes.empty(), "sweep needs at least one mode");
  if (spec.vary == SweepVariable::frequency) {
    detail::require(spec.source >= 0 && spec.source < static_cast<Eigen::Index>(base.scenario.source_count()),
                    "swept source index out of range");
  }
  const auto pts = spec.points();
  const auto per_point = detail::parallel_map(pts.size(), [&](std::size_t i) {
    Constellation c = base;
    if (spec.vary == SweepVariable::frequency)
      c.scenario.signals[static_cast<std::size_t>(spec.source)].freq_hz = pts[i];
    else
      c.scenario.velocity_mps = pts[i];

    std::vector<SweepRow> rows;
    for (SweepMode mode : spec.modes) {
      SweepRow row;
      row.point = pts[i];
      row.mode = mode;
      try {
        if (mode == SweepMode::primary) {
          detail::fill_bounds(row, c.scenario);
        } else {
          const Eigen::Index k = received_power(steering_matrix(c.scenario), c.scenario.signals).strongest;
          row.flags.push_back("element=" + std::to_string(k + 1));
          const RepositionPlan plan = analytic_reposition(c, k);
          for (std::size_t j = 0; j < plan.targets.size(); ++j)
            if (!plan.targets[j].feasible) row.flags.push_back("infeasible_source=" + std::to_string(j + 1));
          detail::fill_bounds(row, apply_reposition(c, plan).scenario);
        }
      } catch (const std::exception& e) {
        row.ok = false;
        row.flags.push_back("error=" + detail::sanitize_flag(e.what()));
      }
      rows.push_back(std::move(row));
    }
    return rows;
  });
  std::vector<SweepRow> out;
  for (const auto& rows : per_point) out.insert(out.end(), rows.begin(), rows.end());
  return out;
}

struct ConstellationFigures {
  double det = 0.0;
  CrbReport crb;
};

inline ConstellationFigures figures_of(const Scenario& s) {
  const BoundSummary b = evaluate_bounds(s);
  return {b.det_rx, b.crb};
}

// Ratios before/after; values above 1 mean the move helped.
struct Comparison {
  double det_ratio = 1.0;
  double crb_theta_ratio = 1.0;
  double crb_r_ratio = 1.0;
  bool worsened = false;
  std::vector<std::string> flags;
};

inline Comparison compare_report(const ConstellationFigures& before, const ConstellationFigures& after) {
  detail::require(before.crb.crb_theta.size() == after.crb.crb_theta.size() &&
                      before.crb.crb_r.size() == after.crb.crb_r.size(),
                  "compared constellations must have the same number of sources");
  const auto ratio = [](double b, double a) {
    if (b == a) return 1.0;
    return a == 0.0 ? std::numeric_limits<double>::infinity() : b / a;
  };
  Comparison c;
  c.det_ratio = ratio(before.det, after.det);
  c.crb_theta_ratio = ratio(before.crb.crb_theta_total, after.crb.crb_theta_total);
  c.crb_r_ratio = ratio(before.crb.crb_r_total, after.crb.crb_r_total);
  if (c.det_ratio < 1.0) c.flags.push_back("WORSE: det(R_x) increased");
  if (c.crb_theta_ratio < 1.0) c.flags.push_back("WORSE: CRB_theta increased");
  if (c.crb_r_ratio < 1.0) c.flags.push_back("WORSE: CRB_r increased");
  c.worsened = !c.flags.empty();
  return c;
}

}  // namespace nfcrb
