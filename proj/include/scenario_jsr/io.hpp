#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "scenario_jsr/blackbox.hpp"
#include "scenario_jsr/certifier.hpp"
#include "scenario_jsr/consensus.hpp"
#include "scenario_jsr/errors.hpp"
#include "scenario_jsr/qlp.hpp"

namespace sjsr {

using json = nlohmann::json;

/// Decimal with 17 significant digits ("nan" for undefined values).
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_optional(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string("nan");
}

namespace detail {

inline json to_array(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Vector from_array(const json& a, const char* what) {
  if (!a.is_array()) throw ParameterError(std::string(what) + ": expected an array");
  Vector v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  return v;
}

inline json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// QLP instances and solutions

inline json set_to_json(const ConvexSet& s) {
  if (!s.descriptor()) throw ParameterError("set '" + s.name() + "' has no serializable descriptor");
  return std::visit(
      [](const auto& d) -> json {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Ball>) {
          return {{"type", "ball"}, {"center", detail::to_array(d.center)}, {"radius", d.radius}};
        } else if constexpr (std::is_same_v<T, Box>) {
          return {{"type", "box"}, {"lo", detail::to_array(d.lo)}, {"hi", detail::to_array(d.hi)}};
        } else if constexpr (std::is_same_v<T, ShiftedPsdCone>) {
          return {{"type", "psd_shifted"}, {"n", d.n}};
        } else if constexpr (std::is_same_v<T, FrobeniusBall>) {
          return {{"type", "fro_ball"}, {"C", d.radius}};
        } else {
          return {{"type", "halfspace"}, {"normal", detail::to_array(d.normal)}, {"offset", d.offset}};
        }
      },
      *s.descriptor());
}

inline ConvexSet set_from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "ball") return ConvexSet(Ball{detail::from_array(j.at("center"), "ball.center"), j.at("radius").get<double>()});
  if (type == "box") {
    return ConvexSet(Box{detail::from_array(j.at("lo"), "box.lo"), detail::from_array(j.at("hi"), "box.hi")});
  }
  if (type == "psd_shifted") return ConvexSet(ShiftedPsdCone{j.at("n").get<int>()});
  if (type == "fro_ball") return ConvexSet(FrobeniusBall{j.at("C").get<double>()});
  if (type == "halfspace") {
    return ConvexSet(Halfspace{detail::from_array(j.at("normal"), "halfspace.normal"), j.value("offset", 0.0)});
  }
  throw ParameterError("unknown set type '" + type + "'");
}

inline json to_json(const QlpInstance& inst) {
  json cons = json::array();
  for (const SampledConstraint& c : inst.constraints()) {
    cons.push_back({{"a", detail::to_array(c.a)}, {"b", detail::to_array(c.b)}});
  }
  json sets = json::array();
  for (const ConvexSet& s : inst.common_set()) sets.push_back(set_to_json(s));
  return {{"d", inst.dim()}, {"constraints", cons}, {"common_set", sets}};
}

inline QlpInstance qlp_instance_from_json(const json& j) {
  try {
    const int d = j.at("d").get<int>();
    std::vector<SampledConstraint> cons;
    for (const json& c : j.value("constraints", json::array())) {
      cons.push_back({detail::from_array(c.at("a"), "constraint.a"), detail::from_array(c.at("b"), "constraint.b")});
    }
    std::vector<ConvexSet> sets;
    for (const json& s : j.at("common_set")) sets.push_back(set_from_json(s));
    return QlpInstance(d, std::move(cons), std::move(sets));
  } catch (const json::exception& e) {
    throw ParameterError(std::string("malformed QLP instance: ") + e.what());
  }
}

inline json to_json(const QlpSolution& s) {
  return {{"lambda_star", s.lambda_star},   {"x_star", detail::to_array(s.x_star)},
          {"cost", s.cost()},               {"max_violation", s.max_violation},
          {"set_residual", s.set_residual}, {"status", to_string(s.status)},
          {"bracket_width", s.bracket_width}};
}

// ---------------------------------------------------------------------------
// Certificates and validation reports

inline json to_json(const JsrCertificate& c) {
  return {{"n", c.n},
          {"m", c.m},
          {"N", c.N},
          {"d", c.d},
          {"beta", c.beta},
          {"eps", c.eps},
          {"eps_baseline", detail::optional_number(c.eps_baseline)},
          {"gamma_star", c.gamma_star},
          {"P_star_svec", detail::to_array(svec(c.P_star).coords())},
          {"kappa", c.kappa},
          {"bound_this_paper", detail::optional_number(c.bound)},
          {"bound_baseline", detail::optional_number(c.baseline_bound)},
          {"status", to_string(c.status)},
          {"bracket_width", c.bracket_width},
          {"cap_C", c.cap_C},
          {"suggested_min_N", c.suggested_min_N ? json(*c.suggested_min_N) : json(nullptr)},
          {"seed", c.seed}};
}

inline json to_json(const JsrBracket& b) { return {{"lower", b.lower}, {"upper", b.upper}, {"depth", b.depth}}; }

inline json to_json(const ValidationReport& r) {
  json rows = json::array();
  for (const ValidationTrial& t : r.rows) {
    rows.push_back({{"trial", t.trial},
                    {"gamma_star", t.gamma_star},
                    {"kappa", t.kappa},
                    {"bound", detail::optional_number(t.bound)},
                    {"violation", detail::optional_number(t.violation)},
                    {"bound_below_lower", t.bound_below_lower},
                    {"violation_exceeds_eps", t.violation_exceeds_eps},
                    {"status", to_string(t.status)}});
  }
  return {{"n", r.n},
          {"m", r.m},
          {"d", r.d},
          {"N", r.N},
          {"trials", r.trials},
          {"violation_samples", r.violation_samples},
          {"beta", r.beta},
          {"eps", r.eps},
          {"phi", r.phi},
          {"threshold", r.threshold},
          {"whitebox", to_json(r.bracket)},
          {"bound_failure_frequency", r.bound_failure_frequency},
          {"violation_frequency", r.violation_frequency},
          {"bound_within_threshold", r.bound_within_threshold},
          {"violation_within_threshold", r.violation_within_threshold},
          {"seed", r.seed},
          {"trials_detail", rows}};
}

// ---------------------------------------------------------------------------
// Observation CSV: "# n=<n>" header, then x_1..x_n,y_1..y_n per row.

inline void write_observations_csv(std::ostream& out, const SampleSet& s) {
  out << "# n=" << s.n << '\n';
  for (const Observation& o : s.observations) {
    for (int i = 0; i < s.n; ++i) out << format_double(o.x(i)) << ',';
    for (int i = 0; i < s.n; ++i) out << format_double(o.y(i)) << (i + 1 < s.n ? "," : "\n");
  }
}

inline SampleSet read_observations_csv(std::istream& in) {
  std::string line;
  SampleSet s;
  bool have_header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!have_header) {
      if (line.rfind("# n=", 0) != 0) throw ParameterError("observations: first line must be '# n=<n>'");
      try {
        s.n = std::stoi(line.substr(4));
      } catch (const std::exception&) {
        throw ParameterError("observations: cannot parse dimension in '" + line + "'");
      }
      if (s.n < 1) throw ParameterError("observations: n must be positive");
      have_header = true;
      continue;
    }
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        vals.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ParameterError("observations: bad number '" + cell + "' on line " + std::to_string(line_no));
      }
    }
    if (vals.size() != 2 * static_cast<std::size_t>(s.n)) {
      throw DimensionError("observations: line " + std::to_string(line_no) + " has " + std::to_string(vals.size()) +
                           " values, expected " + std::to_string(2 * s.n));
    }
    Observation o{Vector(s.n), Vector(s.n)};
    for (int i = 0; i < s.n; ++i) {
      o.x(i) = vals[static_cast<std::size_t>(i)];
      o.y(i) = vals[static_cast<std::size_t>(s.n + i)];
    }
    s.observations.push_back(std::move(o));
  }
  if (!have_header) throw ParameterError("observations: missing '# n=<n>' header");
  return s;
}

inline SampleSet read_observations_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open '" + path + "'");
  return read_observations_csv(in);
}

// ---------------------------------------------------------------------------
// System JSON: {"n": n, "m": m, "modes": [[row-major entries], ...]}

inline json to_json(const SwitchedSystem& sys) {
  json modes = json::array();
  for (const Matrix& A : sys.modes()) {
    json flat = json::array();
    for (int i = 0; i < sys.n(); ++i) {
      for (int j = 0; j < sys.n(); ++j) flat.push_back(A(i, j));
    }
    modes.push_back(flat);
  }
  return {{"n", sys.n()}, {"m", sys.m()}, {"modes", modes}};
}

inline SwitchedSystem system_from_json(const json& j) {
  try {
    const int n = j.at("n").get<int>();
    if (n < 1) throw ParameterError("system: n must be positive");
    std::vector<Matrix> modes;
    for (const json& mj : j.at("modes")) {
      std::vector<double> flat;
      if (!mj.empty() && mj.front().is_array()) {
        for (const json& row : mj) {
          for (const json& v : row) flat.push_back(v.get<double>());
        }
      } else {
        for (const json& v : mj) flat.push_back(v.get<double>());
      }
      if (flat.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n)) {
        throw DimensionError("system: mode has " + std::to_string(flat.size()) + " entries, expected n*n");
      }
      Matrix A(n, n);
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) A(r, c) = flat[static_cast<std::size_t>(r * n + c)];
      }
      modes.push_back(std::move(A));
    }
    if (j.contains("m") && j.at("m").get<std::size_t>() != modes.size()) {
      throw DimensionError("system: 'm' does not match the number of modes");
    }
    return SwitchedSystem(std::move(modes));
  } catch (const json::exception& e) {
    throw ParameterError(std::string("malformed system file: ") + e.what());
  }
}

inline json read_json_file(const std::string& path) {
  try {
    return json::parse(detail::slurp(path));
  } catch (const json::parse_error& e) {
    throw ParameterError("'" + path + "' is not valid JSON: " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Sweep CSV

inline constexpr const char* kSweepHeader = "N,bound1,bound2,gamma_star,kappa,whitebox_lower,whitebox_upper";

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << kSweepHeader << '\n';
  for (const SweepRow& r : rows) {
    out << r.N << ',' << format_optional(r.bound1) << ',' << format_optional(r.bound2) << ','
        << format_double(r.gamma_star) << ',' << format_double(r.kappa) << ',' << format_double(r.whitebox_lower)
        << ',' << format_double(r.whitebox_upper) << '\n';
  }
}

inline json to_json(const NetworkConfig& c) {
  return {{"n", c.n},          {"m", c.m},
          {"beta", c.beta},    {"N_grid", c.N_grid},
          {"seed", c.seed},    {"K", c.K},
          {"p_edge", c.p_edge}, {"identity_modes", c.identity_modes},
          {"cap_C", c.cap_C ? json(*c.cap_C) : json(nullptr)}};
}

}  // namespace sjsr
