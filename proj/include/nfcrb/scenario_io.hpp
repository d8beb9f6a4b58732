#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "nfcrb/optimizer.hpp"

namespace nfcrb {

class IoError : public Error {
 public:
  using Error::Error;
};

// Scenario file contents, angles still in degrees as written.
struct PolarEncoding {
  struct Source {
    double range_m = 0.0;
    double bearing_deg = 0.0;
    bool operator==(const Source&) const = default;
  };
  struct Sensor {
    double radius_m = 0.0;
    double azimuth_deg = 0.0;
    bool operator==(const Sensor&) const = default;
  };
  std::vector<Source> sources;
  std::vector<Sensor> sensors;
  bool operator==(const PolarEncoding&) const = default;
};

// Rows are elements, columns are sources.
struct PairwiseEncoding {
  std::vector<std::vector<double>> vertical_m;
  std::vector<std::vector<double>> arrival_deg;
  bool operator==(const PairwiseEncoding&) const = default;
};

struct ScenarioFile {
  std::string name;
  std::string description;
  double velocity_mps = 0.0;
  std::optional<double> noise_variance;
  std::optional<int> snapshots;
  std::vector<SourceSignal> signals;
  std::variant<PolarEncoding, PairwiseEncoding> geometry;

  std::size_t sensor_count() const {
    if (const auto* p = std::get_if<PolarEncoding>(&geometry)) return p->sensors.size();
    return std::get<PairwiseEncoding>(geometry).vertical_m.size();
  }
  std::size_t source_count() const { return signals.size(); }

  bool operator==(const ScenarioFile&) const = default;
};

inline constexpr double kDefaultNoiseVariance = 1.0;
inline constexpr int kDefaultSnapshots = 1;

namespace detail {

using nlohmann::json;

inline const json& field(const json& obj, const std::string& path, const char* key) {
  if (!obj.contains(key)) throw SchemaError(path + "/" + key, "required field is missing");
  return obj.at(key);
}

inline double number_at(const json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError(path, "expected a number");
  return j.get<double>();
}

inline double positive_at(const json& j, const std::string& path) {
  const double v = number_at(j, path);
  if (!(v > 0.0)) throw SchemaError(path, "must be positive");
  return v;
}

inline void only_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw SchemaError(path.empty() ? "/" : path, "expected an object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || item.key() == a;
    if (!known) throw SchemaError(path + "/" + item.key(), "unknown field");
  }
}

inline const json& array_at(const json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path, "expected an array");
  return j;
}

inline std::vector<std::vector<double>> matrix_at(const json& j, const std::string& path) {
  std::vector<std::vector<double>> out;
  for (std::size_t r = 0; r < array_at(j, path).size(); ++r) {
    const std::string rp = path + "/" + std::to_string(r);
    std::vector<double> row;
    for (std::size_t c = 0; c < array_at(j[r], rp).size(); ++c) row.push_back(number_at(j[r][c], rp + "/" + std::to_string(c)));
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace detail

// Parses and validates a JSON scenario file.
inline ScenarioFile parse_scenario(std::string_view text) {
  using detail::json;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("/", std::string("invalid JSON: ") + e.what());
  }
  detail::only_keys(root, "",
                    {"name", "description", "velocity_mps", "noise_variance", "snapshots", "signals", "polar", "pairwise"});

  ScenarioFile f;
  const json& name = detail::field(root, "", "name");
  if (!name.is_string()) throw SchemaError("/name", "expected a string");
  f.name = name.get<std::string>();
  if (root.contains("description")) {
    if (!root["description"].is_string()) throw SchemaError("/description", "expected a string");
    f.description = root["description"].get<std::string>();
  }
  f.velocity_mps = detail::positive_at(detail::field(root, "", "velocity_mps"), "/velocity_mps");
  if (root.contains("noise_variance")) f.noise_variance = detail::positive_at(root["noise_variance"], "/noise_variance");
  if (root.contains("snapshots")) {
    const json& s = root["snapshots"];
    if (!s.is_number_integer() || s.get<long long>() < 1) throw SchemaError("/snapshots", "expected an integer >= 1");
    f.snapshots = s.get<int>();
  }

  const json& signals = detail::array_at(detail::field(root, "", "signals"), "/signals");
  if (signals.empty()) throw SchemaError("/signals", "at least one signal is required");
  for (std::size_t i = 0; i < signals.size(); ++i) {
    const std::string p = "/signals/" + std::to_string(i);
    detail::only_keys(signals[i], p, {"freq_hz", "amplitude"});
    SourceSignal sig;
    sig.freq_hz = detail::positive_at(detail::field(signals[i], p, "freq_hz"), p + "/freq_hz");
    const json& amp = detail::field(signals[i], p, "amplitude");
    detail::only_keys(amp, p + "/amplitude", {"re", "im"});
    sig.amplitude = {detail::number_at(detail::field(amp, p + "/amplitude", "re"), p + "/amplitude/re"),
                     detail::number_at(detail::field(amp, p + "/amplitude", "im"), p + "/amplitude/im")};
    f.signals.push_back(sig);
  }

  const bool has_polar = root.contains("polar");
  const bool has_pairwise = root.contains("pairwise");
  if (has_polar == has_pairwise) throw SchemaError("/", "exactly one of \"polar\" or \"pairwise\" geometry is required");

  const std::size_t n = f.signals.size();
  if (has_polar) {
    const json& g = root["polar"];
    detail::only_keys(g, "/polar", {"sources", "sensors"});
    PolarEncoding enc;
    const json& src = detail::array_at(detail::field(g, "/polar", "sources"), "/polar/sources");
    for (std::size_t i = 0; i < src.size(); ++i) {
      const std::string p = "/polar/sources/" + std::to_string(i);
      detail::only_keys(src[i], p, {"range_m", "bearing_deg"});
      enc.sources.push_back({detail::positive_at(detail::field(src[i], p, "range_m"), p + "/range_m"),
                             detail::number_at(detail::field(src[i], p, "bearing_deg"), p + "/bearing_deg")});
    }
    const json& sen = detail::array_at(detail::field(g, "/polar", "sensors"), "/polar/sensors");
    for (std::size_t i = 0; i < sen.size(); ++i) {
      const std::string p = "/polar/sensors/" + std::to_string(i);
      detail::only_keys(sen[i], p, {"radius_m", "azimuth_deg"});
      const double radius = detail::number_at(detail::field(sen[i], p, "radius_m"), p + "/radius_m");
      if (radius < 0.0) throw SchemaError(p + "/radius_m", "must be nonnegative");
      enc.sensors.push_back({radius, detail::number_at(detail::field(sen[i], p, "azimuth_deg"), p + "/azimuth_deg")});
    }
    if (enc.sources.size() != n) throw SchemaError("/polar/sources", "expected one source per signal");
    f.geometry = std::move(enc);
  } else {
    const json& g = root["pairwise"];
    detail::only_keys(g, "/pairwise", {"vertical_m", "arrival_deg"});
    PairwiseEncoding enc;
    enc.vertical_m = detail::matrix_at(detail::field(g, "/pairwise", "vertical_m"), "/pairwise/vertical_m");
    enc.arrival_deg = detail::matrix_at(detail::field(g, "/pairwise", "arrival_deg"), "/pairwise/arrival_deg");
    if (enc.vertical_m.size() != enc.arrival_deg.size())
      throw SchemaError("/pairwise", "vertical_m and arrival_deg must have the same number of rows");
    for (std::size_t r = 0; r < enc.vertical_m.size(); ++r) {
      const std::string p = "/pairwise/vertical_m/" + std::to_string(r);
      if (enc.vertical_m[r].size() != n) throw SchemaError(p, "expected one column per signal");
      if (enc.arrival_deg[r].size() != n)
        throw SchemaError("/pairwise/arrival_deg/" + std::to_string(r), "expected one column per signal");
      for (std::size_t c = 0; c < n; ++c) {
        if (!(enc.vertical_m[r][c] > 0.0)) throw SchemaError(p + "/" + std::to_string(c), "must be positive");
        const double a = enc.arrival_deg[r][c];
        if (!(a > 0.0 && a < 180.0))
          throw SchemaError("/pairwise/arrival_deg/" + std::to_string(r) + "/" + std::to_string(c),
                            "must lie strictly between 0 and 180 degrees");
      }
    }
    f.geometry = std::move(enc);
  }

  if (!(n < f.sensor_count())) {
    throw ValidationError("N < M required: an array of M sensors resolves at most M - 1 sources (got N=" +
                          std::to_string(n) + ", M=" + std::to_string(f.sensor_count()) + ")");
  }
  return f;
}

// Normalized JSON text (keys sorted).
inline std::string serialize_scenario(const ScenarioFile& f) {
  using detail::json;
  json root;
  root["name"] = f.name;
  if (!f.description.empty()) root["description"] = f.description;
  root["velocity_mps"] = f.velocity_mps;
  if (f.noise_variance) root["noise_variance"] = *f.noise_variance;
  if (f.snapshots) root["snapshots"] = *f.snapshots;
  root["signals"] = json::array();
  for (const auto& s : f.signals)
    root["signals"].push_back({{"freq_hz", s.freq_hz}, {"amplitude", {{"re", s.amplitude.real()}, {"im", s.amplitude.imag()}}}});
  if (const auto* p = std::get_if<PolarEncoding>(&f.geometry)) {
    json g{{"sources", json::array()}, {"sensors", json::array()}};
    for (const auto& s : p->sources) g["sources"].push_back({{"range_m", s.range_m}, {"bearing_deg", s.bearing_deg}});
    for (const auto& s : p->sensors) g["sensors"].push_back({{"radius_m", s.radius_m}, {"azimuth_deg", s.azimuth_deg}});
    root["polar"] = g;
  } else {
    const auto& q = std::get<PairwiseEncoding>(f.geometry);
    root["pairwise"] = {{"vertical_m", q.vertical_m}, {"arrival_deg", q.arrival_deg}};
  }
  return root.dump(2) + "\n";
}

inline ScenarioFile load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

struct ParameterOverrides {
  std::optional<double> noise_variance;
  std::optional<int> snapshots;
};

struct LoadedScenario {
  std::string name;
  Constellation constellation;
  std::vector<std::string> defaults_applied;
};

inline LoadedScenario to_constellation(const ScenarioFile& f, const ParameterOverrides& overrides = {}) {
  LoadedScenario out;
  out.name = f.name;
  double eta = kDefaultNoiseVariance;
  int snapshots = kDefaultSnapshots;
  if (overrides.noise_variance) {
    eta = *overrides.noise_variance;
  } else if (f.noise_variance) {
    eta = *f.noise_variance;
  } else {
    out.defaults_applied.push_back("noise_variance = " + std::to_string(eta) + " (default)");
  }
  if (overrides.snapshots) {
    snapshots = *overrides.snapshots;
  } else if (f.snapshots) {
    snapshots = *f.snapshots;
  } else {
    out.defaults_applied.push_back("snapshots = " + std::to_string(snapshots) + " (default)");
  }

  if (const auto* p = std::get_if<PolarEncoding>(&f.geometry)) {
    Scenario s;
    s.velocity_mps = f.velocity_mps;
    s.signals = f.signals;
    s.noise_variance = eta;
    s.snapshots = snapshots;
    for (const auto& src : p->sources) s.sources.push_back({src.range_m, detail::wrap_two_pi(deg_to_rad(src.bearing_deg))});
    for (const auto& sen : p->sensors) s.sensors.push_back({sen.radius_m, detail::wrap_two_pi(deg_to_rad(sen.azimuth_deg))});
    out.constellation = Constellation::from_polar(std::move(s));
  } else {
    const auto& q = std::get<PairwiseEncoding>(f.geometry);
    const auto m = static_cast<Eigen::Index>(q.vertical_m.size());
    const auto n = static_cast<Eigen::Index>(f.signals.size());
    PairwiseGeometry tables{MatXd(m, n), MatXd(m, n)};
    for (Eigen::Index k = 0; k < m; ++k)
      for (Eigen::Index j = 0; j < n; ++j) {
        tables.vertical_m(k, j) = q.vertical_m[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
        tables.arrival_rad(k, j) = deg_to_rad(q.arrival_deg[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)]);
      }
    out.constellation = Constellation::from_pairwise(std::move(tables), f.velocity_mps, f.signals, eta, snapshots);
  }
  validate_scenario(out.constellation.scenario);
  return out;
}

// Everything one `compute` run reports.
struct RunReport {
  std::string scenario_name;
  std::size_t sensors = 0;
  std::size_t sources = 0;
  double velocity_mps = 0.0;
  double noise_variance = 0.0;
  int snapshots = 1;
  std::vector<std::string> defaults_applied;
  std::optional<double> residual_m;
  BoundSummary bounds;
  VecXd received_power;
  Eigen::Index strongest_element = 0;
  std::vector<BlockDeviation> closed_form_deviations;
  std::vector<std::string> diagnostics;
};

inline RunReport make_run_report(const std::string& name, const Constellation& c, std::vector<std::string> defaults) {
  const Scenario& s = c.scenario;
  RunReport r;
  r.scenario_name = name;
  r.sensors = s.sensor_count();
  r.sources = s.source_count();
  r.velocity_mps = s.velocity_mps;
  r.noise_variance = s.noise_variance;
  r.snapshots = s.snapshots;
  r.defaults_applied = std::move(defaults);
  if (c.from_tables) r.residual_m = c.residual_m;
  r.bounds = evaluate_bounds(s);
  const SteeringMatrix a = steering_matrix(s);
  const auto power = received_power(a, s.signals);
  r.received_power = power.powers;
  r.strongest_element = power.strongest;
  const CovarianceSet cov = covariances(a, s.signals, s.noise_variance);
  r.closed_form_deviations = fim_closed_form(s, a, cov, s.snapshots).deviations;
  r.diagnostics.push_back("array covariance condition number " + std::to_string(r.bounds.fim.rx_condition));
  std::ostringstream fim;
  fim << "FIM rank " << r.bounds.crb.rank << " of " << r.bounds.crb.dimension;
  if (r.bounds.crb.rank_deficient) fim << " (rank deficient: pseudo-inverse used)";
  r.diagnostics.push_back(fim.str());
  return r;
}

namespace detail {

inline std::string sci(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*e", digits, v);
  return buf;
}

}  // namespace detail

inline std::string format_run_report(const RunReport& r) {
  std::ostringstream o;
  o << "scenario " << r.scenario_name << ": M=" << r.sensors << " sensors, N=" << r.sources << " sources\n";
  o << "  velocity " << detail::sci(r.velocity_mps) << " m/s, noise variance " << detail::sci(r.noise_variance)
    << ", snapshots " << r.snapshots << "\n";
  for (const auto& d : r.defaults_applied) o << "  default applied: " << d << "\n";
  if (r.residual_m) o << "  pairwise reconstruction residual " << detail::sci(*r.residual_m) << " m\n";
  o << "det(R_x)      " << detail::sci(r.bounds.det_rx) << "\n";
  o << "CRB_theta     " << detail::sci(r.bounds.crb.crb_theta_total) << " rad^2 (sum over sources)\n";
  o << "CRB_r         " << detail::sci(r.bounds.crb.crb_r_total) << " m^2 (sum over sources)\n";
  for (std::size_t n = 0; n < r.sources; ++n) {
    const auto i = static_cast<Eigen::Index>(n);
    o << "  source " << n + 1 << ": CRB_theta " << detail::sci(r.bounds.crb.crb_theta(i)) << ", CRB_r "
      << detail::sci(r.bounds.crb.crb_r(i)) << "\n";
  }
  o << "received power per element:";
  for (Eigen::Index m = 0; m < r.received_power.size(); ++m) o << " " << detail::sci(r.received_power(m));
  o << "  (strongest: element " << r.strongest_element + 1 << ")\n";
  o << "closed-form vs trace-form FIM, max relative deviation per block:\n";
  for (const auto& d : r.closed_form_deviations) o << "  " << d.name << " " << detail::sci(d.max_relative, 2) << "\n";
  for (const auto& d : r.diagnostics) o << "diagnostic: " << d << "\n";
  return o.str();
}

inline void write_run_csv(const RunReport& r, std::ostream& out) {
  out << "quantity,source,value\n";
  out << "det_rx,," << detail::sci(r.bounds.det_rx) << "\n";
  out << "crb_theta_total,," << detail::sci(r.bounds.crb.crb_theta_total) << "\n";
  out << "crb_r_total,," << detail::sci(r.bounds.crb.crb_r_total) << "\n";
  for (std::size_t n = 0; n < r.sources; ++n) {
    const auto i = static_cast<Eigen::Index>(n);
    out << "crb_theta," << n + 1 << "," << detail::sci(r.bounds.crb.crb_theta(i)) << "\n";
    out << "crb_r," << n + 1 << "," << detail::sci(r.bounds.crb.crb_r(i)) << "\n";
  }
}

inline std::string format_plan(const RepositionPlan& p) {
  std::ostringstream o;
  o << "reposition plan (" << to_string(p.mode) << ", objective " << to_string(p.objective) << "): element "
    << p.element + 1 << "\n";
  for (std::size_t j = 0; j < p.new_arrival_rad.size(); ++j) {
    o << "  source " << j + 1 << ": arrival angle " << rad_to_deg(p.new_arrival_rad[j]) << " deg";
    if (!p.targets.empty()) {
      const SourceTarget& t = p.targets[j];
      if (t.feasible) {
        o << " (" << (t.near_zero ? "pi/m target, m=" + std::to_string(t.m) : std::string("pi/2 target")) << ", arcsin("
          << t.argument << "), branches " << rad_to_deg(t.acute_rad) << " / " << rad_to_deg(t.obtuse_rad) << ")";
      } else {
        o << " (infeasible: " << t.note << ")";
      }
    }
    o << "\n";
  }
  o << "  displacement along reference axis " << p.displacement_m << " m";
  if (p.vertical_shift_m != 0.0) o << ", vertical shift " << p.vertical_shift_m << " m";
  o << "\n";
  if (p.new_position) o << "  new element position (" << p.new_position->x() << ", " << p.new_position->y() << ") m\n";
  if (!p.realized_arrival_rad.empty()) {
    o << "  angles reached by that move:";
    for (double a : p.realized_arrival_rad) o << " " << rad_to_deg(a);
    o << " deg\n";
  }
  o << "  objective before " << detail::sci(p.objective_before) << ", after " << detail::sci(p.objective_after);
  if (p.realized_objective) o << ", realized " << detail::sci(*p.realized_objective);
  o << "\n";
  if (p.evaluated > 0) o << "  grid points evaluated " << p.evaluated << ", skipped " << p.skipped << "\n";
  for (const auto& n : p.notes) o << "  note: " << n << "\n";
  return o.str();
}

inline std::string format_comparison(const Comparison& c) {
  std::ostringstream o;
  o << "reduction factors (before/after): det " << detail::sci(c.det_ratio) << ", CRB_theta "
    << detail::sci(c.crb_theta_ratio) << ", CRB_r " << detail::sci(c.crb_r_ratio) << "\n";
  for (const auto& f : c.flags) o << "  *** " << f << " ***\n";
  return o.str();
}

inline constexpr const char* kSweepCsvHeader = "point,mode,det,crb_theta_total,crb_r_total,flags";

inline void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
  if (rows.empty()) throw ValidationError("sweep report needs at least one row (empty mode list?)");
  out << kSweepCsvHeader << "\n";
  for (const auto& r : rows) {
    out << detail::sci(r.point) << "," << to_string(r.mode) << "," << detail::sci(r.det) << ","
        << detail::sci(r.crb_theta_total) << "," << detail::sci(r.crb_r_total) << ",";
    for (std::size_t i = 0; i < r.flags.size(); ++i) out << (i ? ";" : "") << detail::sanitize_flag(r.flags[i]);
    out << "\n";
  }
}

inline std::string format_sweep_text(const std::vector<SweepRow>& rows) {
  if (rows.empty()) throw ValidationError("sweep report needs at least one row (empty mode list?)");
  std::ostringstream o;
  o << "point        mode        det(R_x)     CRB_theta    CRB_r        flags\n";
  for (const auto& r : rows) {
    char line[256];
    std::snprintf(line, sizeof line, "%-12s %-11s %-12s %-12s %-12s ", detail::sci(r.point).c_str(), to_string(r.mode),
                  detail::sci(r.det).c_str(), detail::sci(r.crb_theta_total).c_str(), detail::sci(r.crb_r_total).c_str());
    o << line;
    for (std::size_t i = 0; i < r.flags.size(); ++i) o << (i ? ";" : "") << r.flags[i];
    o << "\n";
  }
  return o.str();
}

inline std::vector<SweepRow> parse_sweep_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kSweepCsvHeader) throw SchemaError("/0", "unexpected sweep CSV header");
  std::vector<SweepRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 6) throw SchemaError("/" + std::to_string(lineno), "expected 6 columns");
    SweepRow r;
    r.point = std::stod(cells[0]);
    if (cells[1] == "primary") r.mode = SweepMode::primary;
    else if (cells[1] == "reposition") r.mode = SweepMode::reposition;
    else throw SchemaError("/" + std::to_string(lineno) + "/mode", "unknown mode " + cells[1]);
    r.det = std::stod(cells[2]);
    r.crb_theta_total = std::stod(cells[3]);
    r.crb_r_total = std::stod(cells[4]);
    std::stringstream fs(cells[5]);
    while (std::getline(fs, cell, ';'))
      if (!cell.empty()) r.flags.push_back(cell);
    r.ok = std::isfinite(r.det);
    rows.push_back(std::move(r));
    ++lineno;
  }
  return rows;
}

enum class ReportFormat { csv, text };

inline void write_reports(const std::vector<SweepRow>& rows, ReportFormat format, const std::filesystem::path& path) {
  if (rows.empty()) throw ValidationError("sweep report needs at least one row (empty mode list?)");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  if (format == ReportFormat::csv) write_sweep_csv(rows, out);
  else out << format_sweep_text(rows);
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace nfcrb
