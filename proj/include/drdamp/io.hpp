#pragma once

// File formats: JSON for configurations, surrogates and reports; CSV for
// samples, designs, traces and data series.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "drdamp/dro.hpp"
#include "drdamp/error.hpp"
#include "drdamp/pce.hpp"
#include "drdamp/sobol.hpp"
#include "drdamp/sslin.hpp"
#include "drdamp/testbed.hpp"

namespace drdamp {

using Json = nlohmann::ordered_json;

/// Fixed 17-significant-digit text, so reruns are byte-identical.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Files

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

inline Json parse_json(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(origin + ": " + e.what());
  }
}

inline Json read_json(const std::filesystem::path& path) { return parse_json(read_text(path), path.string()); }

inline void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

namespace detail {

template <class T>
T get_field(const Json& j, const char* key, const std::string& ctx) {
  if (!j.contains(key)) throw ParseError(ctx + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ParseError(ctx + ": field '" + key + "' has the wrong type");
  }
}

template <class T>
void read_opt(const Json& j, const char* key, T& out, const std::string& ctx) {
  if (j.contains(key)) out = get_field<T>(j, key, ctx);
}

inline void reject_unknown(const Json& j, std::initializer_list<const char*> keys, const std::string& ctx) {
  if (!j.is_object()) throw ParseError(ctx + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    bool known = false;
    for (const char* key : keys) known = known || k == key;
    if (!known) throw ParseError(ctx + ": unknown field '" + k + "'");
  }
}

inline Json interval_json(const Interval& i) { return Json::array({i.lo, i.hi}); }

inline Interval interval_from(const Json& j, const std::string& ctx) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ParseError(ctx + ": expected [lo, hi]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline void read_interval(const Json& j, const char* key, Interval& out, const std::string& ctx) {
  if (j.contains(key)) out = interval_from(j.at(key), ctx + "." + key);
}

inline Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Eigen::MatrixXd matrix_from(const Json& j, const std::string& ctx) {
  if (!j.is_array()) throw ParseError(ctx + ": expected an array of rows");
  const auto rows = static_cast<Index>(j.size());
  const Index cols = rows ? static_cast<Index>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const Json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) throw ParseError(ctx + ": ragged matrix");
    for (Index c = 0; c < cols; ++c) {
      if (!row[static_cast<std::size_t>(c)].is_number()) throw ParseError(ctx + ": non-numeric entry");
      m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
  }
  return m;
}

inline Json vector_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Eigen::VectorXd vector_from(const Json& j, const std::string& ctx) {
  if (!j.is_array()) throw ParseError(ctx + ": expected an array");
  Eigen::VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParseError(ctx + ": non-numeric entry");
    v(static_cast<Index>(i)) = j[i].get<double>();
  }
  return v;
}

inline Json complex_json(Complex z) { return Json::array({z.real(), z.imag()}); }

} // namespace detail

// ---------------------------------------------------------------------------
// Testbed and controller

inline Json to_json(const TestbedConfig& c) {
  return Json{{"inertia_h", c.inertia_h},
              {"damping", c.damping},
              {"x_d", c.x_d},
              {"x_d_prime", c.x_d_prime},
              {"x_q", c.x_q},
              {"x_e", c.x_e},
              {"t_d0_prime", c.t_d0_prime},
              {"exciter_gain", c.exciter_gain},
              {"exciter_time", c.exciter_time},
              {"terminal_voltage", c.terminal_voltage},
              {"bus_voltage", c.bus_voltage},
              {"nominal_frequency", c.nominal_frequency},
              {"p_ref", c.p_ref},
              {"stabilizer_gain", c.stabilizer_gain},
              {"disturbance", detail::interval_json(c.disturbance)}};
}

/// Missing fields keep their defaults; unknown fields are errors.
inline TestbedConfig testbed_from_json(const Json& j) {
  const std::string ctx = "testbed config";
  detail::reject_unknown(j,
                         {"inertia_h", "damping", "x_d", "x_d_prime", "x_q", "x_e", "t_d0_prime", "exciter_gain",
                          "exciter_time", "terminal_voltage", "bus_voltage", "nominal_frequency", "p_ref",
                          "stabilizer_gain", "disturbance"},
                         ctx);
  TestbedConfig c;
  detail::read_opt(j, "inertia_h", c.inertia_h, ctx);
  detail::read_opt(j, "damping", c.damping, ctx);
  detail::read_opt(j, "x_d", c.x_d, ctx);
  detail::read_opt(j, "x_d_prime", c.x_d_prime, ctx);
  detail::read_opt(j, "x_q", c.x_q, ctx);
  detail::read_opt(j, "x_e", c.x_e, ctx);
  detail::read_opt(j, "t_d0_prime", c.t_d0_prime, ctx);
  detail::read_opt(j, "exciter_gain", c.exciter_gain, ctx);
  detail::read_opt(j, "exciter_time", c.exciter_time, ctx);
  detail::read_opt(j, "terminal_voltage", c.terminal_voltage, ctx);
  detail::read_opt(j, "bus_voltage", c.bus_voltage, ctx);
  detail::read_opt(j, "nominal_frequency", c.nominal_frequency, ctx);
  detail::read_opt(j, "p_ref", c.p_ref, ctx);
  detail::read_opt(j, "stabilizer_gain", c.stabilizer_gain, ctx);
  detail::read_interval(j, "disturbance", c.disturbance, ctx);
  return c;
}

inline Json to_json(const ControllerParams& p) {
  Json values = Json::object(), bounds = Json::object();
  for (std::size_t i = 0; i < kParamCount; ++i) {
    values[std::string(kParamNames[i])] = p.values[i];
    bounds[std::string(kParamNames[i])] = detail::interval_json(p.bounds[i]);
  }
  return Json{{"values", values}, {"bounds", bounds}};
}

inline ControllerParams controller_from_json(const Json& j, ControllerParams p = {}) {
  const std::string ctx = "controller";
  detail::reject_unknown(j, {"values", "bounds"}, ctx);
  if (j.contains("values")) {
    for (const auto& [k, v] : j.at("values").items()) {
      if (!v.is_number()) throw ParseError(ctx + ".values." + k + ": expected a number");
      p[param_from_name(k)] = v.get<double>();
    }
  }
  if (j.contains("bounds")) {
    for (const auto& [k, v] : j.at("bounds").items()) p.bound(param_from_name(k)) = detail::interval_from(v, ctx + ".bounds." + k);
  }
  return p;
}

inline Json to_json(const StateSpaceModel& m) {
  return Json{{"a", detail::matrix_json(m.a)},          {"b", detail::matrix_json(m.b)},
              {"c", detail::matrix_json(m.c)},          {"d", detail::matrix_json(m.d)},
              {"state_names", m.state_names},           {"input_names", m.input_names},
              {"output_names", m.output_names}};
}

inline StateSpaceModel model_from_json(const Json& j) {
  const std::string ctx = "state-space model";
  auto names = [&](const char* key) {
    return j.contains(key) ? detail::get_field<std::vector<std::string>>(j, key, ctx) : std::vector<std::string>{};
  };
  for (const char* key : {"a", "b", "c", "d"})
    if (!j.contains(key)) throw ParseError(ctx + ": missing field '" + key + "'");
  return make_state_space(detail::matrix_from(j.at("a"), ctx + ".a"), detail::matrix_from(j.at("b"), ctx + ".b"),
                          detail::matrix_from(j.at("c"), ctx + ".c"), detail::matrix_from(j.at("d"), ctx + ".d"),
                          names("state_names"), names("input_names"), names("output_names"));
}

// ---------------------------------------------------------------------------
// Samples

struct SampleLoad {
  std::vector<double> values;
  std::size_t clipped = 0;
};

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& field, const std::string& ctx) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(field, &used);
  } catch (const std::exception&) {
    throw ParseError(ctx + ": '" + field + "' is not a number");
  }
  if (used != field.size()) throw ParseError(ctx + ": '" + field + "' is not a number");
  if (!std::isfinite(v)) throw ParseError(ctx + ": non-finite value");
  return v;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(trim(f));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

} // namespace detail

/// Single-column CSV with header `e_pu`; values outside `support` are clipped
/// and counted.
inline SampleLoad parse_samples(const std::string& text, const Interval& support, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  SampleLoad out;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    if (!header) {
      if (t != "e_pu") throw ParseError(origin + " line " + std::to_string(line_no) + ": expected header 'e_pu'");
      header = true;
      continue;
    }
    const double v = detail::parse_double(t, origin + " line " + std::to_string(line_no));
    const double c = support.clamp(v);
    if (c != v) ++out.clipped;
    out.values.push_back(c);
  }
  if (!header) throw ParseError(origin + ": empty file");
  if (out.values.empty()) throw ParseError(origin + ": no samples");
  return out;
}

inline SampleLoad load_samples(const std::filesystem::path& path, const Interval& support) {
  return parse_samples(read_text(path), support, path.string());
}

inline std::string samples_csv(const std::vector<double>& v) {
  std::string s = "e_pu\n";
  for (double x : v) s += format_number(x) + "\n";
  return s;
}

// ---------------------------------------------------------------------------
// Sobol designs and rankings

inline std::string design_csv(const SobolDesign& d, const std::vector<double>& f) {
  if (f.size() != d.size()) throw Error("design_csv: evaluation count mismatch");
  std::string s;
  for (const auto& n : d.names) s += n + ",";
  s += "f\n";
  for (std::size_t r = 0; r < d.size(); ++r) {
    for (std::size_t k = 0; k < d.dimension(); ++k)
      s += format_number(d.points(static_cast<Index>(r), static_cast<Index>(k))) + ",";
    s += format_number(f[r]) + "\n";
  }
  return s;
}

struct DesignTable {
  std::vector<std::string> names;
  Eigen::MatrixXd points;
  std::vector<double> f;
};

inline DesignTable parse_design_csv(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  DesignTable t;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split_csv(line);
    if (t.names.empty()) {
      if (fields.size() < 2 || fields.back() != "f")
        throw ParseError(origin + " line " + std::to_string(line_no) + ": header must end with 'f'");
      t.names.assign(fields.begin(), fields.end() - 1);
      continue;
    }
    if (fields.size() != t.names.size() + 1)
      throw ParseError(origin + " line " + std::to_string(line_no) + ": expected " +
                       std::to_string(t.names.size() + 1) + " fields");
    std::vector<double> row;
    for (std::size_t k = 0; k < fields.size(); ++k) {
      const std::string ctx = origin + " line " + std::to_string(line_no);
      if (k + 1 == fields.size() && fields[k] == "nan") {
        row.push_back(std::numeric_limits<double>::quiet_NaN());
      } else {
        row.push_back(detail::parse_double(fields[k], ctx));
      }
    }
    rows.push_back(std::move(row));
  }
  if (t.names.empty()) throw ParseError(origin + ": empty file");
  t.points.resize(static_cast<Index>(rows.size()), static_cast<Index>(t.names.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t k = 0; k < t.names.size(); ++k) t.points(static_cast<Index>(r), static_cast<Index>(k)) = rows[r][k];
    t.f.push_back(rows[r].back());
  }
  return t;
}

inline std::string ranking_csv(const SobolRanking& r) {
  std::string s = "rank,parameter,first_order,total\n";
  for (std::size_t i = 0; i < r.order.size(); ++i) {
    const std::size_t k = r.order[i];
    s += std::to_string(i + 1) + "," + r.result.names[k] + "," + format_number(r.result.first[k]) + "," +
         format_number(r.result.total[k]) + "\n";
  }
  return s;
}

// ---------------------------------------------------------------------------
// Surrogates

inline Json to_json(const PceSurrogate& s) {
  Json terms = Json::array();
  for (const auto& t : s.basis.terms) terms.push_back(t);
  Json st{{"mean", detail::vector_json(s.transform.mean)}, {"std", detail::vector_json(s.transform.std)}};
  st["correlation"] = s.transform.correlation ? detail::matrix_json(*s.transform.correlation) : Json(nullptr);
  return Json{{"dimension", s.basis.dimension},
              {"order", s.basis.order},
              {"multi_indices", terms},
              {"coefficients", detail::vector_json(s.coefficients)},
              {"standardization", st},
              {"diagnostics",
               {{"condition", s.diagnostics.condition},
                {"residual_norm", s.diagnostics.residual_norm},
                {"n_samples", s.diagnostics.n_samples},
                {"warnings", s.diagnostics.warnings}}}};
}

inline PceSurrogate surrogate_from_json(const Json& j) {
  const std::string ctx = "surrogate";
  PceSurrogate s;
  s.basis.dimension = detail::get_field<int>(j, "dimension", ctx);
  s.basis.order = detail::get_field<int>(j, "order", ctx);
  s.basis.terms = detail::get_field<std::vector<std::vector<int>>>(j, "multi_indices", ctx);
  const auto expected = make_multi_index_set(s.basis.dimension, s.basis.order);
  if (expected.terms != s.basis.terms) throw ParseError(ctx + ": multi-index list does not match dimension/order");
  s.coefficients = detail::vector_from(j.at("coefficients"), ctx + ".coefficients");
  if (s.coefficients.size() != static_cast<Index>(s.basis.size()))
    throw ParseError(ctx + ": coefficient count does not match the basis");
  const Json& st = j.at("standardization");
  s.transform.mean = detail::vector_from(st.at("mean"), ctx + ".standardization.mean");
  s.transform.std = detail::vector_from(st.at("std"), ctx + ".standardization.std");
  if (st.contains("correlation") && !st.at("correlation").is_null())
    s.transform.correlation = detail::matrix_from(st.at("correlation"), ctx + ".standardization.correlation");
  s.transform.validate();
  if (j.contains("diagnostics")) {
    const Json& d = j.at("diagnostics");
    detail::read_opt(d, "condition", s.diagnostics.condition, ctx);
    detail::read_opt(d, "residual_norm", s.diagnostics.residual_norm, ctx);
    detail::read_opt(d, "n_samples", s.diagnostics.n_samples, ctx);
    detail::read_opt(d, "warnings", s.diagnostics.warnings, ctx);
  }
  return s;
}

inline Json to_json(const ErrorReport& e) {
  return Json{{"rmse", e.rmse}, {"aae", e.aae}, {"n_validation", e.n_validation}};
}

inline std::string pdf_csv(const PdfEstimate& p) {
  std::string s = "bin_center,mass,density\n";
  for (std::size_t b = 0; b < p.bin_centers.size(); ++b) {
    const double width = p.bin_width > 0.0 ? p.bin_width : 1.0;
    s += format_number(p.bin_centers[b]) + "," + format_number(p.mass[b]) + "," +
         format_number(p.bin_width > 0.0 ? p.mass[b] / width : 0.0) + "\n";
  }
  return s;
}

inline std::string kde_csv(const PdfEstimate& p) {
  std::string s = "damping,density\n";
  for (std::size_t i = 0; i < p.grid.size(); ++i) s += format_number(p.grid[i]) + "," + format_number(p.density[i]) + "\n";
  return s;
}

// ---------------------------------------------------------------------------
// Tuning reports

namespace detail {

inline Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline double number_or_nan(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.at(key).get<double>();
}

} // namespace detail

/// Infeasible reports carry the constraint audit and no parameter fields.
inline Json to_json(const TuningReport& r) {
  Json j{{"method", method_name(r.method)}, {"status", r.status}, {"decision", r.decision_names}};
  if (r.method == Method::ro) j["range"] = detail::interval_json(r.range);
  if (r.status == "infeasible") {
    j["violated"] = r.violated;
    j["least_violating"] = {{"critical_damping", r.critical_damping},
                            {"max_shift", r.max_shift},
                            {"min_damping", detail::number_or_null(r.min_damping)}};
  } else {
    j["initial"] = to_json(r.initial)["values"];
    j["params"] = to_json(r.params)["values"];
    j["objective"] = r.objective;
    j["worst_case"] = r.worst_case;
    j["nominal"] = r.nominal;
    j["empirical_mean"] = r.empirical_mean;
    j["radius"] = r.radius;
    j["lambda"] = r.lambda;
    j["critical_damping"] = r.critical_damping;
    j["max_shift"] = r.max_shift;
    j["min_damping"] = detail::number_or_null(r.min_damping);
    j["worst_e"] = detail::number_or_null(r.worst_e);
    j["binding"] = r.binding;
    j["flat_objective"] = r.flat_objective;
  }
  j["scenario_rate"] = r.scenario_rate ? Json(*r.scenario_rate) : Json(nullptr);
  j["iterations"] = r.iterations;
  j["evaluations"] = r.evaluations;
  j["warnings"] = r.warnings;
  Json trace = Json::array();
  for (const auto& t : r.trace)
    trace.push_back({{"evaluation", t.evaluation},
                     {"phase", t.phase},
                     {"decision", t.decision},
                     {"objective", detail::number_or_null(t.objective)},
                     {"feasible", t.feasible},
                     {"violation", t.violation}});
  j["trace"] = trace;
  return j;
}

inline TuningReport report_from_json(const Json& j) {
  const std::string ctx = "tuning report";
  TuningReport r;
  r.method = method_from_name(detail::get_field<std::string>(j, "method", ctx));
  r.status = detail::get_field<std::string>(j, "status", ctx);
  r.decision_names = detail::get_field<std::vector<std::string>>(j, "decision", ctx);
  if (j.contains("range")) r.range = detail::interval_from(j.at("range"), ctx + ".range");
  if (r.status == "infeasible") {
    r.violated = detail::get_field<std::vector<std::string>>(j, "violated", ctx);
    const Json& lv = j.at("least_violating");
    r.critical_damping = lv.at("critical_damping").get<double>();
    r.max_shift = lv.at("max_shift").get<double>();
    r.min_damping = detail::number_or_nan(lv, "min_damping");
  } else {
    r.initial = controller_from_json(Json{{"values", j.at("initial")}});
    r.params = controller_from_json(Json{{"values", j.at("params")}});
    r.objective = detail::get_field<double>(j, "objective", ctx);
    r.worst_case = detail::get_field<double>(j, "worst_case", ctx);
    r.nominal = detail::get_field<double>(j, "nominal", ctx);
    r.empirical_mean = detail::get_field<double>(j, "empirical_mean", ctx);
    r.radius = detail::get_field<double>(j, "radius", ctx);
    r.lambda = detail::get_field<double>(j, "lambda", ctx);
    r.critical_damping = detail::get_field<double>(j, "critical_damping", ctx);
    r.max_shift = detail::get_field<double>(j, "max_shift", ctx);
    r.min_damping = detail::number_or_nan(j, "min_damping");
    r.worst_e = detail::number_or_nan(j, "worst_e");
    r.binding = detail::get_field<std::vector<std::string>>(j, "binding", ctx);
    r.flat_objective = detail::get_field<bool>(j, "flat_objective", ctx);
  }
  if (j.contains("scenario_rate") && !j.at("scenario_rate").is_null()) r.scenario_rate = j.at("scenario_rate").get<double>();
  r.iterations = detail::get_field<std::size_t>(j, "iterations", ctx);
  r.evaluations = detail::get_field<std::size_t>(j, "evaluations", ctx);
  r.warnings = detail::get_field<std::vector<std::string>>(j, "warnings", ctx);
  for (const auto& t : j.at("trace")) {
    TraceRow row;
    row.evaluation = t.at("evaluation").get<std::size_t>();
    row.phase = t.at("phase").get<std::string>();
    row.decision = t.at("decision").get<std::vector<double>>();
    row.objective = detail::number_or_nan(t, "objective");
    row.feasible = t.at("feasible").get<bool>();
    row.violation = t.at("violation").get<double>();
    r.trace.push_back(std::move(row));
  }
  return r;
}

inline std::string trace_csv(const TuningReport& r) {
  std::string s = "evaluation,phase";
  for (const auto& n : r.decision_names) s += "," + n;
  s += ",objective,feasible,violation\n";
  for (const auto& t : r.trace) {
    s += std::to_string(t.evaluation) + "," + t.phase;
    for (double v : t.decision) s += "," + format_number(v);
    s += "," + format_number(t.objective) + "," + (t.feasible ? "1" : "0") + "," + format_number(t.violation) + "\n";
  }
  return s;
}

/// Flat one-row summary of a report.
inline std::string report_csv(const TuningReport& r) {
  std::string head = "method,status", row = method_name(r.method) + "," + r.status;
  if (r.status != "infeasible") {
    for (std::size_t i = 0; i < kParamCount; ++i) {
      head += "," + std::string(kParamNames[i]);
      row += "," + format_number(r.params.values[i]);
    }
    head += ",objective,worst_case,nominal,critical_damping,max_shift,min_damping";
    row += "," + format_number(r.objective) + "," + format_number(r.worst_case) + "," + format_number(r.nominal) + "," +
           format_number(r.critical_damping) + "," + format_number(r.max_shift) + "," + format_number(r.min_damping);
  }
  head += ",scenario_rate,evaluations\n";
  row += "," + (r.scenario_rate ? format_number(*r.scenario_rate) : std::string("nan")) + "," +
         std::to_string(r.evaluations) + "\n";
  return head + row;
}

// ---------------------------------------------------------------------------
// Modes

inline Json modes_json(const StateSpaceModel& m, const ModeSet& modes, Index input, Index output) {
  const auto pf = participation_factors(modes, m.state_names);
  Json list = Json::array();
  for (Index i = 0; i < modes.size(); ++i) {
    Json pfj = Json::object();
    for (Index s = 0; s < modes.size(); ++s) pfj[m.state_names[static_cast<std::size_t>(s)]] = pf.values(s, i);
    Json entry{{"index", i},
               {"eigenvalue", detail::complex_json(modes.eigenvalues(i))},
               {"damping", modes.damping_ratios[static_cast<std::size_t>(i)]},
               {"frequency_hz", modes.frequencies_hz[static_cast<std::size_t>(i)]},
               {"participation", pfj}};
    try {
      entry["residue"] = detail::complex_json(residue(m, modes, i, input, output));
    } catch (const Error&) {
      entry["residue"] = nullptr;
    }
    list.push_back(std::move(entry));
  }
  return Json{{"states", m.state_names},
              {"input", m.input_names[static_cast<std::size_t>(input)]},
              {"output", m.output_names[static_cast<std::size_t>(output)]},
              {"condition", modes.condition},
              {"warnings", modes.warnings},
              {"modes", list}};
}

inline std::string step_csv(const StepResponse& r, const std::vector<std::string>& output_names) {
  std::string s = "time";
  for (const auto& n : output_names) s += "," + n;
  s += "\n";
  for (std::size_t k = 0; k < r.time.size(); ++k) {
    s += format_number(r.time[k]);
    for (Index c = 0; c < r.outputs.cols(); ++c) s += "," + format_number(r.outputs(static_cast<Index>(k), c));
    s += "\n";
  }
  return s;
}

} // namespace drdamp
