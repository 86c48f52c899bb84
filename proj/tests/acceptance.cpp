// Acceptance suite: one PASS/FAIL line per criterion, exit code 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "drdamp/cli.hpp"
#include "test_support.hpp"

using namespace drdamp;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

struct Check {
  Verdict v;
  std::ostringstream notes;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      v.pass = false;
      notes << "[failed: " << what << "] ";
    }
  }
  void note(const std::string& s) { notes << s << " "; }
  Verdict done() {
    v.detail = notes.str();
    return v;
  }
};

std::string fmt(double x, const char* pattern = "%.4g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, x);
  return buf;
}

std::vector<double> normal_samples(std::size_t n, double sd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sd);
  std::vector<double> out(n);
  for (auto& x : out) x = std::clamp(g(rng), -1.0, 1.0);
  return out;
}

double eval_poly(const std::vector<double>& c, double x) {
  double v = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) v = v * x + c[k];
  return v;
}

// Loaded once: the calibrated testbed run shared by criteria 5 and 10-12.
struct Calibrated {
  cli::RunConfig run;
  TestbedConfig testbed;
  std::vector<double> samples;
};

const Calibrated& calibrated() {
  static const Calibrated c = [] {
    Calibrated out;
    out.run = cli::load_run_config(std::filesystem::path(DRDAMP_DATA_DIR) / "run.json");
    out.run.validate();
    out.testbed = cli::load_testbed(out.run);
    out.samples = load_samples(out.run.samples_path, out.testbed.disturbance).values;
    return out;
  }();
  return c;
}

cli::Context context(std::ostream& sink) {
  const Calibrated& c = calibrated();
  return cli::Context{c.run, c.testbed, *c.run.seed, sink};
}

const TuningProblem& calibrated_problem() {
  static const TuningProblem pr = [] {
    std::ostringstream sink;
    return cli::make_problem(context(sink), calibrated().samples);
  }();
  return pr;
}

// ---------------------------------------------------------------------------

Verdict c1_damping_ratio() {
  Check c;
  const double z = damping_ratio(Complex(-2.14, 137.84));
  c.note("zeta=" + fmt(z, "%.6f"));
  c.require(std::abs(z - 0.0155) <= 0.0005, "0.0155 +/- 0.0005");
  return c.done();
}

Verdict c2_eigen_suite() {
  Check c;
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> size(4, 12);
  double worst_res = 0.0, worst_bi = 0.0, worst_pf = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Index n = size(rng);
    const Eigen::MatrixXd a = testing::random_stable(n, rng);
    const ModeSet m = eigendecompose(a);
    const Eigen::MatrixXcd ac = a.cast<Complex>();
    for (Index i = 0; i < n; ++i)
      worst_res = std::max(worst_res, (ac * m.right.col(i) - m.eigenvalues(i) * m.right.col(i)).norm() / a.norm());
    worst_bi = std::max(worst_bi, (m.left * m.right - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff());
    const auto pf = participation_factors(m);
    worst_pf = std::max(worst_pf, (pf.values.colwise().sum().array() - 1.0).abs().maxCoeff());
  }
  c.note("residual=" + fmt(worst_res) + " biorth=" + fmt(worst_bi) + " pf_sum=" + fmt(worst_pf));
  c.require(worst_res < 1e-10, "residual < 1e-10");
  c.require(worst_bi < 1e-8, "biorthonormality < 1e-8");
  c.require(worst_pf < 1e-10, "participation sums 1 +/- 1e-10");
  return c.done();
}

Verdict c3_residue_shift() {
  Check c;
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd a = testing::random_stable(8, rng);
  const Eigen::MatrixXd b = testing::random_matrix(8, 1, rng);
  const Eigen::MatrixXd cm = testing::random_matrix(1, 8, rng);
  const auto sys = make_state_space(a, b, cm, Eigen::MatrixXd::Zero(1, 1));
  const ModeSet modes = eigendecompose(sys);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const Complex s(u(rng), u(rng) * 3.0);
    Complex sum = 0.0;
    for (Index i = 0; i < modes.size(); ++i) sum += residue(sys, modes, i, 0, 0) / (s - modes.eigenvalues(i));
    const Complex direct = testing::direct_transfer(a, b.col(0), cm.row(0), s);
    worst = std::max(worst, std::abs(sum - direct) / std::abs(direct));
  }
  c.note("reconstruction=" + fmt(worst));
  c.require(worst < 1e-8, "partial fractions to 1e-8");

  const TestbedConfig cfg;
  const auto plant = linearize(cfg, 0.0);
  const ModeSet open = eigendecompose(plant);
  const Index crit = lowest_oscillatory_mode(open);
  const Complex lam = open.eigenvalues(crit);
  const Complex r = residue(plant, open, crit, kStabilizerInput, kSpeedOutput);
  double rel[2];
  int idx = 0;
  for (double gain : {1e-2, 1e-3}) {
    const ControllerParams p = ControllerParams{}.with(Param::k_m, gain);
    const Complex predicted = predict_shift(r, p, lam);
    const Complex actual = testing::nearest_eigenvalue(closed_loop_model(plant, p).a, lam + predicted) - lam;
    rel[idx++] = std::abs(actual - predicted) / std::abs(predicted);
  }
  const double ratio = rel[0] / rel[1];
  c.note("shift error ratio=" + fmt(ratio));
  c.require(ratio >= 5.0 && ratio <= 40.0, "ratio in [5, 40]");
  return c.done();
}

Verdict c4_pce_exactness() {
  Check c;
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  auto points = [&](Index n, Index dim) {
    Eigen::MatrixXd x(n, dim);
    for (Index r = 0; r < n; ++r)
      for (Index k = 0; k < dim; ++k) x(r, k) = g(rng);
    return x;
  };
  auto poly = [](const Eigen::VectorXd& x) {
    const double a = x(0), b = x.size() > 1 ? x(1) : 0.0;
    return 0.2 - 0.7 * a + 0.4 * b + 0.3 * a * b - 0.2 * a * a * a + 0.05 * a * a * b * b + 0.1 * std::pow(b, 4) +
           0.08 * std::pow(a, 4);
  };
  double worst = 0.0;
  bool mean_exact = true;
  for (Index dim : {1, 2}) {
    const Eigen::MatrixXd xi = points(80, dim);
    Eigen::VectorXd d(xi.rows());
    for (Index r = 0; r < xi.rows(); ++r) d(r) = poly(xi.row(r).transpose());
    const auto s = fit(xi, d, 4);
    const Eigen::MatrixXd val = points(1000, dim);
    Eigen::VectorXd dv(val.rows());
    for (Index r = 0; r < val.rows(); ++r) dv(r) = poly(val.row(r).transpose());
    worst = std::max(worst, error_metrics(s, val, dv).rmse);
    mean_exact = mean_exact && moments(s).mean == s.coefficients(0);
  }
  c.note("rmse=" + fmt(worst));
  c.require(worst < 1e-8, "validation rmse < 1e-8");
  c.require(mean_exact, "mean equals c_0");

  const Eigen::MatrixXd xi = points(60, 1);
  const Eigen::VectorXd d = (0.04 - 0.01 * xi.col(0).array() + 0.003 * xi.col(0).array().square()).matrix();
  const auto s = fit(xi, d, 2);
  const Moments m = moments(s);
  const std::size_t n = 100000;
  const PdfEstimate p = pdf_mc(s, n, 44);
  const double gap = std::abs(p.sample_mean - m.mean), bound = 3.0 * std::sqrt(m.variance / n);
  c.note("|mc-c0|=" + fmt(gap) + " bound=" + fmt(bound));
  c.require(gap < bound, "MC mean within 3 sigma");
  return c.done();
}

Verdict c5_pce_order_trend() {
  Check c;
  std::ostringstream sink;
  cli::Context ctx = context(sink);
  ctx.run.pce_order = 4;
  const cli::PceStudy study = cli::run_pce_study(ctx, calibrated().samples);
  double rmse[5] = {0, 0, 0, 0, 0};
  for (std::size_t i = 0; i < study.surrogates.size(); ++i) rmse[study.surrogates[i].order()] = study.errors[i].rmse;
  c.note("n_val=" + std::to_string(study.validation_damping.size()) + " rmse(2,3,4)=" + fmt(rmse[2]) + "," +
         fmt(rmse[3]) + "," + fmt(rmse[4]) + " ratio=" + fmt(rmse[4] / rmse[2]));
  c.require(study.validation_damping.size() == 1000, "1000-point validation set");
  c.require(rmse[2] > rmse[3] && rmse[3] > rmse[4], "rmse decreasing over orders 2,3,4");
  c.require(rmse[4] < 0.2 * rmse[2], "rmse(4) < 0.2 rmse(2)");
  return c.done();
}

Verdict c6_sobol_oracle() {
  Check c;
  const double pi = M_PI;
  const auto d = saltelli_sample({"x1", "x2", "x3"}, {{-pi, pi}, {-pi, pi}, {-pi, pi}}, 16384, 6);
  const auto r = indices(d, evaluate_design(d, [](const Eigen::VectorXd& x) {
                           return std::sin(x(0)) + 7.0 * std::pow(std::sin(x(1)), 2) +
                                  0.1 * std::pow(x(2), 4) * std::sin(x(0));
                         }));
  // analytic totals for a = 7, b = 0.1
  const double a = 7.0, b = 0.1;
  const double v1 = 0.5 * std::pow(1.0 + b * std::pow(pi, 4) / 5.0, 2), v2 = a * a / 8.0;
  const double v13 = b * b * std::pow(pi, 8) * (1.0 / 18.0 - 1.0 / 50.0), v = v1 + v2 + v13;
  const double st[3] = {(v1 + v13) / v, v2 / v, v13 / v};
  double worst = 0.0;
  for (int i = 0; i < 3; ++i) worst = std::max(worst, std::abs(r.total[static_cast<std::size_t>(i)] - st[i]));
  c.note("ishigami max|dST|=" + fmt(worst));
  c.require(worst <= 0.05, "Ishigami totals +/- 0.05");

  const auto d1 = saltelli_sample({"z1", "z2", "z3"}, {{0, 1}, {0, 1}, {0, 1}}, 4096, 7);
  const auto r1 = indices(d1, evaluate_design(d1, [](const Eigen::VectorXd& x) { return std::exp(x(0)); }));
  const double dev = std::max({std::abs(r1.total[0] - 1.0), std::abs(r1.total[1]), std::abs(r1.total[2])});
  c.note("single-variable max dev=" + fmt(dev));
  c.require(dev <= 0.05, "single-variable S_T = (1,0,0) +/- 0.05");
  return c.done();
}

Verdict c7_wasserstein() {
  Check c;
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> len(1, 60);
  std::normal_distribution<double> g;
  double worst = 0.0, worst_shift = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = static_cast<std::size_t>(len(rng));
    std::vector<double> p(n), q(n);
    for (auto& x : p) x = g(rng);
    for (auto& x : q) x = 0.5 + 2.0 * g(rng);
    std::vector<double> ps = p, qs = q;
    std::sort(ps.begin(), ps.end());
    std::sort(qs.begin(), qs.end());
    double closed = 0.0;
    for (std::size_t i = 0; i < n; ++i) closed += std::abs(ps[i] - qs[i]);
    closed /= static_cast<double>(n);
    worst = std::max(worst, std::abs(w1_distance(p, q) - closed));
    const double shift = g(rng);
    std::vector<double> moved = p;
    for (auto& x : moved) x += shift;
    worst_shift = std::max(worst_shift, std::abs(w1_distance(p, moved) - std::abs(shift)));
  }
  c.note("order-statistics=" + fmt(worst) + " translation=" + fmt(worst_shift));
  c.require(worst <= 1e-12, "closed form to 1e-12");
  c.require(worst_shift <= 1e-12, "W1(P, P+c) = |c| to 1e-12");
  return c.done();
}

Verdict c8_dual() {
  Check c;
  AmbiguitySet set;
  set.samples = normal_samples(80, 0.2, 8);
  set.support = {-1.0, 1.0};
  double mean_x = 0.0;
  for (double x : set.samples) mean_x += x;
  mean_x /= static_cast<double>(set.samples.size());
  double worst_lin = 0.0;
  for (double slope : {-0.3, -0.05, 0.02, 0.2}) {
    for (double delta : {0.01, 0.05, 0.1, 0.3}) {
      set.radius = delta;
      const double expected = 0.04 + slope * mean_x - delta * std::abs(slope);
      worst_lin = std::max(worst_lin, std::abs(worst_case_expectation({0.04, slope}, set).value - expected));
    }
  }
  c.note("linear=" + fmt(worst_lin));
  c.require(worst_lin <= 1e-9, "linear closed form to 1e-9");

  const std::vector<double> poly{0.03, -0.02, -0.04, 0.01, 0.02};
  set.radius = 0.0;
  double emp = 0.0;
  for (double x : set.samples) emp += eval_poly(poly, x);
  emp /= static_cast<double>(set.samples.size());
  const double zero_gap = std::abs(worst_case_expectation(poly, set).value - emp);
  c.note("delta0=" + fmt(zero_gap));
  c.require(zero_gap <= 1e-10, "delta = 0 gives the empirical mean to 1e-10");

  bool monotone = true;
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 10; ++k) {
    set.radius = 0.04 * k;
    const double v = worst_case_expectation(poly, set).value;
    monotone = monotone && v <= prev;
    prev = v;
  }
  c.require(monotone, "non-increasing over the delta grid");
  return c.done();
}

Verdict c9_radius() {
  Check c;
  const auto s = calibrated().samples;
  const double d03 = calibrate_radius(s, 0.03).radius, d30 = calibrate_radius(s, 0.3).radius;
  c.note("delta(0.03)=" + fmt(d03) + " delta(0.3)=" + fmt(d30));
  c.require(d03 > d30, "delta(0.03) > delta(0.3)");
  const auto big = normal_samples(200, 0.2, 9);
  const double half = calibrate_radius(std::vector<double>(big.begin(), big.begin() + 100), 0.03).radius;
  const double full = calibrate_radius(big, 0.03).radius;
  const double ratio = half / full;
  c.note("N->2N ratio=" + fmt(ratio));
  c.require(std::abs(ratio / std::sqrt(2.0) - 1.0) <= 0.2, "sqrt(2) +/- 20%");
  return c.done();
}

Verdict c10_coherence() {
  Check c;
  const TuningProblem& pr = calibrated_problem();
  const TestbedConfig& cfg = calibrated().testbed;
  TuningProblem collapsed = pr;
  collapsed.ambiguity.radius = 0.0;
  const auto so = solve_so(pr, cfg);
  const auto dr0 = solve_drdoc(collapsed, cfg);
  const auto dr = solve_drdoc(pr, cfg);
  c.require(so.status == "optimal" && dr0.status == "optimal" && dr.status == "optimal", "all optimal");
  const double gap = std::abs(dr0.objective - so.objective);
  c.note("|drdoc(0)-so|=" + fmt(gap));
  c.require(gap <= 1e-6, "objectives agree to 1e-6");
  for (const auto* r : {&so, &dr0, &dr}) {
    c.note(method_name(r->method) + ": worst=" + fmt(r->worst_case) + " nominal=" + fmt(r->nominal));
    c.require(r->worst_case <= r->nominal, "worst-case <= nominal");
  }
  return c.done();
}

Verdict c11_ordering() {
  Check c;
  const TuningProblem& pr = calibrated_problem();
  const Calibrated& cal = calibrated();
  const auto dr = solve_drdoc(pr, cal.testbed);
  const auto so = solve_so(pr, cal.testbed);
  c.require(dr.status == "optimal" && so.status == "optimal", "both optimal");
  const auto scenarios =
      scenario_generate(cal.testbed, cal.run.n_scenarios, cal.run.mix, derive_seed(*cal.run.seed, "scenarios"));
  ControllerParams untuned = cal.run.controller;
  untuned[Param::k_m] = 0.0;
  const double base = validate_scenarios(untuned, cal.testbed, scenarios).rate;
  const double rdr = validate_scenarios(dr.params, cal.testbed, scenarios).rate;
  const double rso = validate_scenarios(so.params, cal.testbed, scenarios).rate;
  c.note("n=" + std::to_string(scenarios.size()) + " drdoc=" + fmt(rdr) + " so=" + fmt(rso) + " untuned=" + fmt(base));
  c.require(scenarios.size() == 500, "500 scenarios");
  c.require(rdr >= rso, "rate(drdoc) >= rate(so)");
  c.require(rso > base && rdr > base, "both beat the untuned baseline");
  return c.done();
}

Verdict c12_ro() {
  Check c;
  const TuningProblem& pr = calibrated_problem();
  const Calibrated& cal = calibrated();
  std::vector<Interval> ranges = cal.run.ro_ranges;
  c.require(ranges.size() >= 2, "configured range ladder");
  double prev = std::numeric_limits<double>::infinity();
  bool monotone = true;
  std::string ladder;
  for (std::size_t i = 0; i + 1 < ranges.size(); ++i) {
    const auto r = solve_ro(pr, cal.testbed, ranges[i]);
    if (r.status != "optimal") {
      ladder += "[" + fmt(ranges[i].lo) + "," + fmt(ranges[i].hi) + "]:infeasible ";
      continue;
    }
    ladder += "[" + fmt(ranges[i].lo) + "," + fmt(ranges[i].hi) + "]:" + fmt(r.min_damping) + " ";
    monotone = monotone && r.min_damping <= prev;
    prev = r.min_damping;
  }
  c.note(ladder);
  c.require(monotone, "inner minimum non-increasing as the range widens");
  bool structured = false;
  try {
    const auto widest = solve_ro(pr, cal.testbed, ranges.back());
    structured = widest.status == "infeasible" && !widest.violated.empty();
    c.note("widest=" + widest.status);
  } catch (const std::exception& e) {
    c.note(std::string("widest threw: ") + e.what());
  }
  c.require(structured, "widest range reports status infeasible");
  return c.done();
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Verdict()> run;
};

} // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "damping ratio formula", 1.0, c1_damping_ratio},
      {2, "eigen suite", 10.0, c2_eigen_suite},
      {3, "residue and shift prediction", 10.0, c3_residue_shift},
      {4, "PCE exactness and moments", 30.0, c4_pce_exactness},
      {5, "PCE order trend", 120.0, c5_pce_order_trend},
      {6, "Sobol oracle", 60.0, c6_sobol_oracle},
      {7, "Wasserstein exactness", 10.0, c7_wasserstein},
      {8, "dual correctness", 10.0, c8_dual},
      {9, "radius calibration", 5.0, c9_radius},
      {10, "solver coherence", 300.0, c10_coherence},
      {11, "scenario-rate ordering", 300.0, c11_ordering},
      {12, "range-robust ladder", 300.0, c12_ro},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = cr.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > cr.budget_s) {
      v.pass = false;
      v.detail += "[failed: runtime budget " + fmt(cr.budget_s) + " s] ";
    }
    if (!v.pass) ++failed;
    std::printf("%s %2d %s (%.2f s): %s\n", v.pass ? "PASS" : "FAIL", cr.id, cr.name, secs, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
