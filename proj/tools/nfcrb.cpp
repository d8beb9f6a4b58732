// Command-line front end: compute, reposition, sweep, validate.
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "nfcrb.hpp"

namespace {

using namespace nfcrb;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

double to_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("cannot read " + what + " from '" + s + "'");
  }
}

int to_int(const std::string& s, const std::string& what) {
  const double v = to_double(s, what);
  if (v != std::floor(v)) throw ValidationError(what + " must be an integer, got '" + s + "'");
  return static_cast<int>(v);
}

LineGrid parse_grid(const std::string& s) {
  const auto parts = split(s, ':');
  if (parts.size() != 3) throw ValidationError("grid must be min:max:steps, got '" + s + "'");
  return {to_double(parts[0], "grid min"), to_double(parts[1], "grid max"), to_int(parts[2], "grid steps")};
}

Objective parse_objective(const std::string& s) {
  if (s == "gf") return Objective::gf;
  if (s == "power") return Objective::power;
  if (s == "det") return Objective::det;
  if (s == "crb_theta") return Objective::crb_theta;
  if (s == "crb_r") return Objective::crb_r;
  throw ValidationError("unknown objective '" + s + "'");
}

struct Common {
  std::string scenario;
  std::optional<double> eta;
  std::optional<int> snapshots;
};

LoadedScenario load(const Common& c) {
  return to_constellation(load_scenario(c.scenario), {c.eta, c.snapshots});
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--scenario", c.scenario, "scenario JSON file")->required();
  cmd->add_option("--eta", c.eta, "noise variance (overrides the file)")->check(CLI::PositiveNumber);
  cmd->add_option("--snapshots", c.snapshots, "snapshot count (overrides the file)")->check(CLI::PositiveNumber);
}

int run_compute(const Common& common, const std::string& csv) {
  const LoadedScenario ls = load(common);
  const RunReport report = make_run_report(ls.name, ls.constellation, ls.defaults_applied);
  std::cout << format_run_report(report);
  if (!csv.empty()) {
    std::ofstream out(csv, std::ios::binary);
    if (!out) throw IoError("cannot write " + csv);
    write_run_csv(report, out);
  }
  return 0;
}

struct RepositionArgs {
  std::string mode = "analytic";
  std::string element = "auto";
  std::optional<std::string> objective;
  std::string m = "auto";
  std::optional<std::string> grid;
  std::optional<std::string> grid_y;
};

int run_reposition(const Common& common, const RepositionArgs& args) {
  LoadedScenario ls = load(common);
  const Constellation& c = ls.constellation;
  std::vector<std::string> defaults = ls.defaults_applied;

  Eigen::Index k = 0;
  if (args.element == "auto") {
    const auto power = received_power(steering_matrix(c.scenario), c.scenario.signals);
    k = power.strongest;
    defaults.push_back("element = auto (strongest received power: element " + std::to_string(k + 1) + ")");
  } else {
    k = to_int(args.element, "element") - 1;
    detail::require(k >= 0 && k < static_cast<Eigen::Index>(c.scenario.sensor_count()), "element out of range");
  }

  RepositionPlan plan;
  if (args.mode == "analytic") {
    if (args.objective && *args.objective != "gf") throw ValidationError("analytic mode optimizes gf only");
    if (args.grid || args.grid_y) throw ValidationError("--grid applies to linesearch and grid modes");
    std::optional<int> m;
    if (args.m == "auto") {
      defaults.push_back("m = auto (largest integer keeping the arcsine argument <= 1)");
    } else {
      m = to_int(args.m, "m");
    }
    plan = analytic_reposition(c, k, m);
  } else if (args.mode == "linesearch" || args.mode == "grid") {
    if (args.m != "auto") throw ValidationError("--m applies to analytic mode only");
    Objective objective = Objective::det;
    if (args.objective) {
      objective = parse_objective(*args.objective);
    } else {
      defaults.push_back("objective = det (default)");
    }
    LineGrid grid;
    if (args.grid) {
      grid = parse_grid(*args.grid);
    } else {
      defaults.push_back("grid = -200:200:2001 m (default)");
    }
    if (args.mode == "linesearch") {
      if (args.grid_y) throw ValidationError("--grid-y applies to grid mode only");
      plan = line_search_reposition(c, k, objective, grid);
    } else {
      SearchRegion region{grid, std::nullopt};
      if (args.grid_y) region.y = parse_grid(*args.grid_y);
      plan = grid_search(c, k, objective, region);
    }
  } else {
    throw ValidationError("unknown mode '" + args.mode + "'");
  }

  const Constellation after = apply_reposition(c, plan);
  std::cout << format_plan(plan) << "\n";
  std::cout << "--- before ---\n" << format_run_report(make_run_report(ls.name, c, defaults)) << "\n";
  std::cout << "--- after ---\n" << format_run_report(make_run_report(ls.name + " (repositioned)", after, defaults)) << "\n";
  std::cout << format_comparison(compare_report(figures_of(c.scenario), figures_of(after.scenario)));
  return 0;
}

struct SweepArgs {
  std::string vary;
  std::string modes = "primary,reposition";
  std::string out;
  std::string format = "csv";
};

int run_sweep(const Common& common, const SweepArgs& args) {
  const LoadedScenario ls = load(common);
  for (const auto& d : ls.defaults_applied) std::cerr << "default applied: " << d << "\n";
  SweepSpec spec;
  const auto parts = split(args.vary, ':');
  if (!parts.empty() && parts[0] == "frequency" && parts.size() == 5) {
    spec.vary = SweepVariable::frequency;
    spec.source = to_int(parts[1], "source") - 1;
    spec.start = to_double(parts[2], "start");
    spec.stop = to_double(parts[3], "stop");
    spec.steps = to_int(parts[4], "steps");
  } else if (!parts.empty() && parts[0] == "velocity" && parts.size() == 4) {
    spec.vary = SweepVariable::velocity;
    spec.start = to_double(parts[1], "start");
    spec.stop = to_double(parts[2], "stop");
    spec.steps = to_int(parts[3], "steps");
  } else {
    throw ValidationError("--vary must be frequency:<source>:<start>:<stop>:<steps> or velocity:<start>:<stop>:<steps>");
  }
  spec.modes.clear();
  for (const auto& m : split(args.modes, ',')) {
    if (m == "primary") spec.modes.push_back(SweepMode::primary);
    else if (m == "reposition") spec.modes.push_back(SweepMode::reposition);
    else if (!m.empty()) throw ValidationError("unknown sweep mode '" + m + "'");
  }
  if (spec.modes.empty()) throw ValidationError("sweep needs at least one mode");

  const auto rows = sweep(ls.constellation, spec);
  write_reports(rows, args.format == "text" ? ReportFormat::text : ReportFormat::csv, args.out);
  std::cout << format_sweep_text(rows);
  return 0;
}

int run_validate(const Common& common) {
  const LoadedScenario ls = load(common);
  for (const auto& d : ls.defaults_applied) std::cout << "default applied: " << d << "\n";
  const CheckSummary summary = run_checks(ls.constellation);
  std::cout << "validate " << ls.name << "\n" << format_checks(summary);
  return summary.all_passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Near-field bearing/range Cramer-Rao bounds and single-element array repositioning"};
  app.require_subcommand(1);

  Common compute_opts, repo_opts, sweep_opts, validate_opts;
  std::string csv;
  auto* compute = app.add_subcommand("compute", "det(R_x) and CRBs for a scenario");
  add_common(compute, compute_opts);
  compute->add_option("--csv", csv, "also write the figures as CSV to this file");

  RepositionArgs repo;
  auto* reposition = app.add_subcommand("reposition", "move one element and compare before/after");
  add_common(reposition, repo_opts);
  reposition->add_option("--mode", repo.mode, "analytic|linesearch|grid")
      ->check(CLI::IsMember({"analytic", "linesearch", "grid"}));
  reposition->add_option("--element", repo.element, "auto or a 1-based element index");
  reposition->add_option("--objective", repo.objective, "gf|power|det|crb_theta|crb_r")
      ->check(CLI::IsMember({"gf", "power", "det", "crb_theta", "crb_r"}));
  reposition->add_option("--m", repo.m, "auto or the integer m of the pi/m target");
  reposition->add_option("--grid", repo.grid, "displacement grid min:max:steps (m)");
  reposition->add_option("--grid-y", repo.grid_y, "vertical grid min:max:steps (grid mode only)");

  SweepArgs sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "primary vs repositioned figures over a parameter range");
  add_common(sweep_cmd, sweep_opts);
  sweep_cmd->add_option("--vary", sw.vary, "frequency:<source>:<start>:<stop>:<steps> | velocity:<start>:<stop>:<steps>")
      ->required();
  sweep_cmd->add_option("--modes", sw.modes, "comma-separated: primary,reposition");
  sweep_cmd->add_option("--out", sw.out, "output file")->required();
  sweep_cmd->add_option("--format", sw.format, "csv|text")->check(CLI::IsMember({"csv", "text"}));

  auto* validate = app.add_subcommand("validate", "derivative, closed-form and bound self-checks");
  add_common(validate, validate_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*compute) return run_compute(compute_opts, csv);
    if (*reposition) return run_reposition(repo_opts, repo);
    if (*sweep_cmd) return run_sweep(sweep_opts, sw);
    if (*validate) return run_validate(validate_opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
