#pragma once

// Command-line front end: drdamp <analyze|sobol|pce|tune|validate|simulate>.
// All artifacts go to the output directory; a failing command removes what it
// wrote and prints one line "error: <message>" on stderr.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "drdamp/dro.hpp"
#include "drdamp/error.hpp"
#include "drdamp/io.hpp"
#include "drdamp/pce.hpp"
#include "drdamp/seed.hpp"
#include "drdamp/sobol.hpp"
#include "drdamp/sslin.hpp"
#include "drdamp/testbed.hpp"

namespace drdamp::cli {

namespace fs = std::filesystem;

struct RunConfig {
  fs::path testbed_path;  ///< empty: built-in defaults
  fs::path samples_path;
  fs::path output_dir{"out"};
  std::optional<std::uint64_t> seed;
  ControllerParams controller;
  std::string method = "all";
  std::string format = "json";
  double nominal_e = 0.0;

  std::size_t sobol_n_base = 1024;
  std::size_t top_k = 2;
  std::vector<std::string> decision;  ///< empty: take the Sobol top-k

  int pce_order = 4;
  std::size_t design_size = 40;
  double design_spread = 2.0;
  std::size_t n_validation = 1000;
  std::size_t pdf_samples = 100000;
  std::size_t pdf_bins = 50;

  double beta = 0.03;
  ConstraintSpec constraints;
  SearchSettings search;
  Interval ro_range{-0.25, 0.25};
  std::vector<Interval> ro_ranges;  ///< optional widening study

  std::size_t n_scenarios = 500;
  ScenarioMix mix;

  double horizon = 10.0;
  double dt = 0.01;
  double step_e = 0.0;

  void validate() const {
    if (!seed) throw Error("run config: a seed is required (config 'seed' or --seed)");
    if (method != "drdoc" && method != "so" && method != "ro" && method != "all")
      throw Error("run config: method must be drdoc, so, ro or all");
    if (format != "json" && format != "csv") throw Error("run config: format must be json or csv");
    if (sobol_n_base < 2) throw Error("run config: sobol.n_base must be at least 2");
    if (top_k < 1 || top_k > 3) throw Error("run config: sobol.top_k must be 1..3");
    if (pce_order < 1 || pce_order > 8) throw Error("run config: pce.order must be 1..8");
    if (n_validation < 2) throw Error("run config: pce.n_validation must be at least 2");
    if (pdf_samples < 1000) throw Error("run config: pce.pdf_samples must be at least 1000");
    if (!(beta > 0.0 && beta <= 0.5)) throw Error("run config: dro.beta must lie in (0, 0.5]");
    if (n_scenarios < 1) throw Error("run config: scenarios.count must be positive");
    if (!(dt > 0.0) || !(horizon >= dt)) throw Error("run config: simulate needs 0 < dt <= horizon");
  }
};

namespace detail {

inline fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

} // namespace detail

/// Reads a run configuration; relative paths are taken from the config file's
/// directory.
inline RunConfig load_run_config(const fs::path& path) {
  const Json j = read_json(path);
  const std::string ctx = path.string();
  drdamp::detail::reject_unknown(
      j, {"testbed", "samples", "output", "seed", "controller", "method", "format", "nominal_e", "sobol", "pce", "dro",
          "ro", "scenarios", "simulate"},
      ctx);
  const fs::path base = path.parent_path();
  RunConfig c;
  using drdamp::detail::read_opt;
  using drdamp::detail::reject_unknown;
  if (j.contains("testbed")) c.testbed_path = detail::resolve(base, j.at("testbed").get<std::string>());
  if (j.contains("samples")) c.samples_path = detail::resolve(base, j.at("samples").get<std::string>());
  if (j.contains("output")) c.output_dir = detail::resolve(base, j.at("output").get<std::string>());
  else c.output_dir = base / "out";
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) throw ParseError(ctx + ": seed must be a non-negative integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("controller")) c.controller = controller_from_json(j.at("controller"));
  read_opt(j, "method", c.method, ctx);
  read_opt(j, "format", c.format, ctx);
  read_opt(j, "nominal_e", c.nominal_e, ctx);
  if (j.contains("sobol")) {
    const Json& s = j.at("sobol");
    reject_unknown(s, {"n_base", "top_k", "decision"}, ctx + ".sobol");
    read_opt(s, "n_base", c.sobol_n_base, ctx);
    read_opt(s, "top_k", c.top_k, ctx);
    read_opt(s, "decision", c.decision, ctx);
    for (const auto& d : c.decision) (void)param_from_name(d);
  }
  if (j.contains("pce")) {
    const Json& s = j.at("pce");
    reject_unknown(s, {"order", "design_size", "design_spread", "n_validation", "pdf_samples", "pdf_bins"}, ctx + ".pce");
    read_opt(s, "order", c.pce_order, ctx);
    read_opt(s, "design_size", c.design_size, ctx);
    read_opt(s, "design_spread", c.design_spread, ctx);
    read_opt(s, "n_validation", c.n_validation, ctx);
    read_opt(s, "pdf_samples", c.pdf_samples, ctx);
    read_opt(s, "pdf_bins", c.pdf_bins, ctx);
  }
  if (j.contains("dro")) {
    const Json& s = j.at("dro");
    reject_unknown(s, {"beta", "zeta_min", "zeta_max", "shift_cap", "grid_points", "tolerance", "max_evaluations"},
                   ctx + ".dro");
    read_opt(s, "beta", c.beta, ctx);
    read_opt(s, "zeta_min", c.constraints.zeta_min, ctx);
    read_opt(s, "zeta_max", c.constraints.zeta_max, ctx);
    read_opt(s, "shift_cap", c.constraints.shift_cap, ctx);
    read_opt(s, "grid_points", c.search.grid_points, ctx);
    read_opt(s, "tolerance", c.search.tolerance, ctx);
    read_opt(s, "max_evaluations", c.search.max_evaluations, ctx);
  }
  if (j.contains("ro")) {
    const Json& s = j.at("ro");
    reject_unknown(s, {"range", "ranges", "min_damping"}, ctx + ".ro");
    drdamp::detail::read_interval(s, "range", c.ro_range, ctx + ".ro");
    read_opt(s, "min_damping", c.constraints.ro_min_damping, ctx);
    if (s.contains("ranges"))
      for (const auto& r : s.at("ranges")) c.ro_ranges.push_back(drdamp::detail::interval_from(r, ctx + ".ro.ranges"));
  }
  if (j.contains("scenarios")) {
    const Json& s = j.at("scenarios");
    reject_unknown(s, {"count", "fraction", "inner", "outer"}, ctx + ".scenarios");
    read_opt(s, "count", c.n_scenarios, ctx);
    read_opt(s, "fraction", c.mix.fraction, ctx);
    drdamp::detail::read_interval(s, "inner", c.mix.inner, ctx + ".scenarios");
    drdamp::detail::read_interval(s, "outer", c.mix.outer, ctx + ".scenarios");
  }
  if (j.contains("simulate")) {
    const Json& s = j.at("simulate");
    reject_unknown(s, {"horizon", "dt", "e"}, ctx + ".simulate");
    read_opt(s, "horizon", c.horizon, ctx);
    read_opt(s, "dt", c.dt, ctx);
    read_opt(s, "e", c.step_e, ctx);
  }
  return c;
}

// ---------------------------------------------------------------------------
// Output handling

/// Holds the output-directory lock and removes everything written when the
/// command does not commit.
class OutputDir {
public:
  explicit OutputDir(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error("cannot create output directory " + dir_.string() + ": " + ec.message());
    lock_ = dir_ / ".drdamp.lock";
    std::FILE* f = std::fopen(lock_.c_str(), "wx");
    if (!f) throw Error("output directory " + dir_.string() + " is locked by another run (" + lock_.string() + ")");
    std::fclose(f);
  }
  OutputDir(const OutputDir&) = delete;
  OutputDir& operator=(const OutputDir&) = delete;

  ~OutputDir() {
    std::error_code ec;
    if (!committed_)
      for (const auto& p : written_) fs::remove(p, ec);
    fs::remove(lock_, ec);
  }

  void write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    written_.push_back(p);
    write_text(p, text);
  }
  void write(const std::string& name, const Json& j) { write(name, j.dump(2) + "\n"); }

  fs::path path(const std::string& name) const { return dir_ / name; }
  void commit() { committed_ = true; }

private:
  fs::path dir_;
  fs::path lock_;
  std::vector<fs::path> written_;
  bool committed_ = false;
};

// ---------------------------------------------------------------------------
// Pipeline stages

struct Context {
  RunConfig run;
  TestbedConfig testbed;
  std::uint64_t seed = 0;
  std::ostream& out;
};

inline TestbedConfig load_testbed(const RunConfig& c) {
  TestbedConfig t = c.testbed_path.empty() ? TestbedConfig{} : testbed_from_json(read_json(c.testbed_path));
  validate(t);
  return t;
}

inline std::vector<double> load_ambiguity_samples(const Context& ctx) {
  if (ctx.run.samples_path.empty()) throw Error("run config: 'samples' path is required for this command");
  const SampleLoad s = load_samples(ctx.run.samples_path, ctx.testbed.disturbance);
  if (s.clipped > 0)
    ctx.out << "warning: clipped " << s.clipped << " samples to the disturbance bounds\n";
  return s.values;
}

inline SobolRanking run_ranking(const Context& ctx) {
  return rank_parameters(ctx.testbed, ctx.run.controller, ctx.run.sobol_n_base, derive_seed(ctx.seed, "sobol"),
                         ctx.run.top_k, ctx.run.nominal_e);
}

inline TuningProblem make_problem(const Context& ctx, const std::vector<double>& samples) {
  TuningProblem pr;
  pr.base = ctx.run.controller;
  if (!ctx.run.decision.empty()) {
    pr.decision.clear();
    for (const auto& d : ctx.run.decision) pr.decision.push_back(param_from_name(d));
  } else {
    const SobolRanking r = run_ranking(ctx);
    pr.decision.clear();
    for (const auto& d : r.top) pr.decision.push_back(param_from_name(d));
  }
  pr.ambiguity = make_ambiguity_set(samples, ctx.run.beta, ctx.testbed.disturbance);
  pr.constraints = ctx.run.constraints;
  pr.pce.order = ctx.run.pce_order;
  pr.pce.design_size = ctx.run.design_size;
  pr.pce.design_spread = ctx.run.design_spread;
  pr.pce.seed = derive_seed(ctx.seed, "pce_design");
  pr.search = ctx.run.search;
  pr.nominal_e = ctx.run.nominal_e;
  return pr;
}

inline std::string describe_mode(Complex lambda, double zeta) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%.6g %+.6gj, damping %.5f, %.4f Hz", lambda.real(), lambda.imag(), zeta,
                std::abs(lambda.imag()) / (2.0 * M_PI));
  return buf;
}

inline void cmd_analyze(Context& ctx, OutputDir& out) {
  const StateSpaceModel plant = linearize(ctx.testbed, ctx.run.nominal_e);
  const ModeSet open = eigendecompose(plant);
  const StateSpaceModel closed = closed_loop_model(plant, ctx.run.controller);
  const ModeSet cl = eigendecompose(closed);
  ModeTracker tracker;
  const CriticalMode cm = critical_mode(plant, ctx.run.controller, tracker);
  const OperatingPoint op = solve_operating_point(ctx.testbed, ctx.run.nominal_e);

  Json k = Json::array();
  for (double v : op.k) k.push_back(v);
  Json j{{"e", ctx.run.nominal_e},
         {"operating_point", {{"power", op.power}, {"delta", op.delta}, {"eq_prime", op.eq_prime}, {"efd", op.efd}, {"k", k}}},
         {"controller", to_json(ctx.run.controller)["values"]},
         {"open_loop", modes_json(plant, open, kStabilizerInput, kSpeedOutput)},
         {"closed_loop", modes_json(closed, cl, kStabilizerInput, kSpeedOutput)},
         {"critical_mode",
          {{"index", cm.index}, {"eigenvalue", drdamp::detail::complex_json(cm.eigenvalue)}, {"damping", cm.damping}}}};
  out.write("modes.json", j);
  const Index oc = lowest_oscillatory_mode(open);
  ctx.out << "open-loop critical mode: "
          << describe_mode(open.eigenvalues(oc), open.damping_ratios[static_cast<std::size_t>(oc)]) << "\n";
  ctx.out << "closed-loop critical mode: " << describe_mode(cm.eigenvalue, cm.damping) << "\n";
}

inline void cmd_sobol(Context& ctx, OutputDir& out) {
  const SobolRanking r = run_ranking(ctx);
  out.write("sobol_ranking.csv", ranking_csv(r));
  for (const auto& w : r.result.warnings) ctx.out << "warning: " << w << "\n";
  ctx.out << "top parameters:";
  for (const auto& t : r.top) ctx.out << " " << t;
  ctx.out << "\n";
}

struct PceStudy {
  std::vector<PceSurrogate> surrogates;  ///< orders 1..m that the design supports
  std::vector<ErrorReport> errors;       ///< on the shared validation set
  Eigen::MatrixXd validation_points;     ///< raw disturbance values
  Eigen::VectorXd validation_damping;
};

/// Fits the damping map at every order up to the configured one on one
/// shared design and scores each fit on one shared validation set drawn from
/// the reference measure.
inline PceStudy run_pce_study(const Context& ctx, const std::vector<double>& samples) {
  const AmbiguitySet set{samples, 0.0, ctx.run.beta, 0.0, ctx.testbed.disturbance};
  PceSettings ps;
  ps.order = ctx.run.pce_order;
  ps.design_size = ctx.run.design_size;
  ps.design_spread = ctx.run.design_spread;
  ps.seed = derive_seed(ctx.seed, "pce_design");
  const SurrogateDesign design = make_surrogate_design(set, ps);

  PceSettings vs = ps;
  vs.design_size = ctx.run.n_validation;
  vs.design_spread = 1.0;
  vs.seed = derive_seed(ctx.seed, "pce_validation");
  const SurrogateDesign val = make_surrogate_design(set, vs);
  PceStudy study;
  study.validation_points.resize(val.xi.rows(), 1);
  study.validation_damping.resize(val.xi.rows());
  for (Index r = 0; r < val.xi.rows(); ++r) {
    study.validation_points(r, 0) = val.transform.to_raw(val.xi.row(r).transpose())(0);
    study.validation_damping(r) = damping_map(ctx.testbed, ctx.run.controller, study.validation_points(r, 0));
  }
  for (int m = 1; m <= ctx.run.pce_order; ++m) {
    if (static_cast<double>(design.xi.rows()) < kDefaultOversampling * static_cast<double>(m + 1)) continue;
    study.surrogates.push_back(
        fit_damping_surrogate(ctx.testbed, ctx.run.controller, design.transform, design.xi, m));
    study.errors.push_back(error_metrics(study.surrogates.back(), study.validation_points, study.validation_damping));
  }
  if (study.surrogates.empty() || study.surrogates.back().order() != ctx.run.pce_order)
    throw Error("pce: design too small for the requested order");
  return study;
}

inline void cmd_pce(Context& ctx, OutputDir& out) {
  const PceStudy study = run_pce_study(ctx, load_ambiguity_samples(ctx));
  Json by_order = Json::array();
  for (std::size_t i = 0; i < study.surrogates.size(); ++i) {
    Json row = to_json(study.errors[i]);
    row["order"] = study.surrogates[i].order();
    by_order.push_back(row);
  }
  const PceSurrogate& chosen = study.surrogates.back();
  const ErrorReport& err = study.errors.back();
  const Moments mom = moments(chosen);
  const PdfEstimate pdf = pdf_mc(chosen, ctx.run.pdf_samples, derive_seed(ctx.seed, "pce_pdf"), ctx.run.pdf_bins);

  out.write("surrogate.json", to_json(chosen));
  Json ej = to_json(err);
  ej["order"] = chosen.order();
  ej["by_order"] = by_order;
  ej["mean"] = mom.mean;
  ej["variance"] = mom.variance;
  ej["pdf"] = {{"support", {pdf.support_lo, pdf.support_hi}},
               {"negative_mass", pdf.negative_mass},
               {"sample_mean", pdf.sample_mean},
               {"sample_std", pdf.sample_std},
               {"bandwidth", pdf.bandwidth}};
  out.write("pce_error.json", ej);
  out.write("damping_pdf.csv", pdf_csv(pdf));
  out.write("damping_kde.csv", kde_csv(pdf));
  for (const auto& w : chosen.diagnostics.warnings) ctx.out << "warning: " << w << "\n";
  ctx.out << "pce order " << chosen.order() << ": mean " << format_number(mom.mean) << ", rmse "
          << format_number(err.rmse) << ", negative-damping mass " << format_number(pdf.negative_mass) << "\n";
}

inline std::vector<Method> selected_methods(const std::string& m) {
  if (m == "all") return {Method::drdoc, Method::so, Method::ro};
  return {method_from_name(m)};
}

inline void emit_report(OutputDir& out, const TuningReport& r, const std::string& format) {
  const std::string name = "report_" + method_name(r.method);
  if (format == "json") out.write(name + ".json", to_json(r));
  else out.write(name + ".csv", report_csv(r));
  out.write("trace_" + method_name(r.method) + ".csv", trace_csv(r));
}

inline void cmd_tune(Context& ctx, OutputDir& out) {
  const auto samples = load_ambiguity_samples(ctx);
  const TuningProblem pr = make_problem(ctx, samples);
  ctx.out << "decision:";
  for (Param p : pr.decision) ctx.out << " " << param_name(p);
  ctx.out << "; radius " << format_number(pr.ambiguity.radius) << "\n";
  for (Method m : selected_methods(ctx.run.method)) {
    TuningReport r;
    if (m == Method::drdoc) r = solve_drdoc(pr, ctx.testbed);
    else if (m == Method::so) r = solve_so(pr, ctx.testbed);
    else r = solve_ro(pr, ctx.testbed, ctx.run.ro_range);
    if (m != Method::ro) throw_if_infeasible(r);
    emit_report(out, r, ctx.run.format);
    ctx.out << method_name(m) << ": " << r.status;
    if (r.status != "infeasible") {
      for (Param p : pr.decision) ctx.out << " " << param_name(p) << "=" << format_number(r.params[p]);
      ctx.out << " objective " << format_number(r.objective);
    }
    ctx.out << "\n";
  }
  if (!ctx.run.ro_ranges.empty() && (ctx.run.method == "ro" || ctx.run.method == "all")) {
    std::string table = "range_lo,range_hi,status";
    for (Param p : pr.decision) table += "," + std::string(param_name(p));
    table += ",min_damping\n";
    for (const Interval& range : ctx.run.ro_ranges) {
      const TuningReport r = solve_ro(pr, ctx.testbed, range);
      table += format_number(range.lo) + "," + format_number(range.hi) + "," + r.status;
      for (Param p : pr.decision) table += "," + (r.status == "infeasible" ? "" : format_number(r.params[p]));
      table += "," + (r.status == "infeasible" ? "" : format_number(r.min_damping)) + "\n";
    }
    out.write("ro_ranges.csv", table);
  }
}

/// Reports present in the output directory, in method order.
inline std::vector<TuningReport> read_reports(const OutputDir& out) {
  std::vector<TuningReport> reports;
  for (Method m : {Method::drdoc, Method::so, Method::ro}) {
    const fs::path p = out.path("report_" + method_name(m) + ".json");
    if (fs::exists(p)) reports.push_back(report_from_json(read_json(p)));
  }
  return reports;
}

inline void cmd_validate(Context& ctx, OutputDir& out) {
  const auto reports = read_reports(out);
  if (reports.empty()) throw Error("validate: no JSON tuning reports in " + ctx.run.output_dir.string() + "; run tune first");
  const auto scenarios =
      scenario_generate(ctx.testbed, ctx.run.n_scenarios, ctx.run.mix, derive_seed(ctx.seed, "scenarios"));
  ControllerParams untuned = ctx.run.controller;
  untuned[Param::k_m] = 0.0;

  std::vector<std::string> labels{"untuned"};
  std::vector<ScenarioValidation> results{validate_scenarios(untuned, ctx.testbed, scenarios)};
  for (const auto& r : reports) {
    if (r.status == "infeasible") continue;
    labels.push_back(method_name(r.method));
    results.push_back(validate_scenarios(r.params, ctx.testbed, scenarios));
  }
  std::string table = "method,rate,scenarios,infeasible\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    table += labels[i] + "," + format_number(results[i].rate) + "," + std::to_string(scenarios.size()) + "," +
             std::to_string(results[i].n_infeasible) + "\n";
    ctx.out << labels[i] << ": positive-damping rate " << format_number(results[i].rate) << "\n";
  }
  out.write("validation.csv", table);
  std::string detail_csv = "e_pu";
  for (const auto& l : labels) detail_csv += "," + l;
  detail_csv += "\n";
  for (std::size_t k = 0; k < scenarios.size(); ++k) {
    detail_csv += format_number(scenarios[k]);
    for (const auto& res : results) detail_csv += "," + format_number(res.damping[k]);
    detail_csv += "\n";
  }
  out.write("scenario_damping.csv", detail_csv);
}

inline void cmd_simulate(Context& ctx, OutputDir& out) {
  const StateSpaceModel plant = linearize(ctx.testbed, ctx.run.step_e);
  std::vector<std::string> labels{"open_loop"};
  std::vector<StepResponse> responses{step_response(plant, kDisturbanceInput, ctx.run.horizon, ctx.run.dt)};
  std::vector<ControllerParams> params;
  for (const auto& r : read_reports(out)) {
    if (r.status == "infeasible") continue;
    labels.push_back(method_name(r.method));
    params.push_back(r.params);
  }
  if (params.empty()) {
    labels.push_back("configured");
    params.push_back(ctx.run.controller);
  }
  for (const auto& p : params)
    responses.push_back(step_response(closed_loop_model(plant, p), kDisturbanceInput, ctx.run.horizon, ctx.run.dt));

  std::string csv = "time";
  for (const auto& l : labels) csv += ",omega_" + l;
  csv += "\n";
  for (std::size_t k = 0; k < responses[0].time.size(); ++k) {
    csv += format_number(responses[0].time[k]);
    for (const auto& r : responses) csv += "," + format_number(r.outputs(static_cast<Index>(k), kSpeedOutput));
    csv += "\n";
  }
  out.write("step_response.csv", csv);
  for (std::size_t i = 0; i < labels.size(); ++i)
    ctx.out << labels[i] << ": " << (responses[i].diverging ? "diverging" : "bounded") << " speed response\n";
}

// ---------------------------------------------------------------------------
// Entry point

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Damping-controller tuning under disturbance uncertainty", "drdamp"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir, format, method;
  for (const char* name : {"analyze", "sobol", "pce", "tune", "validate", "simulate"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "run configuration JSON")->required();
    sub->add_option("--seed", seed, "master seed (overrides the config)");
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
    sub->add_option("--format", format, "report format")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--method", method, "tuning method")->check(CLI::IsMember({"drdoc", "so", "ro", "all"}));
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    for (auto& ch : msg)
      if (ch == '\n') ch = ' ';
    err << "error: " << msg << "\n";
    return 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    RunConfig rc = load_run_config(config_path);
    if (seed) rc.seed = seed;
    if (!out_dir.empty()) rc.output_dir = out_dir;
    if (!format.empty()) rc.format = format;
    if (!method.empty()) rc.method = method;
    rc.validate();
    Context ctx{rc, load_testbed(rc), *rc.seed, out};
    OutputDir dir(rc.output_dir);
    if (command == "analyze") cmd_analyze(ctx, dir);
    else if (command == "sobol") cmd_sobol(ctx, dir);
    else if (command == "pce") cmd_pce(ctx, dir);
    else if (command == "tune") cmd_tune(ctx, dir);
    else if (command == "validate") cmd_validate(ctx, dir);
    else cmd_simulate(ctx, dir);
    dir.commit();
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (auto& ch : msg)
      if (ch == '\n') ch = ' ';
    err << "error: " << command << ": " << msg << "\n";
    return 1;
  }
  return 0;
}

} // namespace drdamp::cli
