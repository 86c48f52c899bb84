#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "drdamp/io.hpp"

using namespace drdamp;
using Catch::Approx;

namespace {

TuningReport sample_report() {
  TuningReport r;
  r.method = Method::drdoc;
  r.decision_names = {"k_m", "t_1"};
  r.params[Param::k_m] = 11.5;
  r.params[Param::t_1] = 0.1 / 3.0;
  r.objective = 0.0597123456789;
  r.worst_case = 0.061;
  r.nominal = 0.07;
  r.empirical_mean = 0.072;
  r.radius = 0.0813;
  r.lambda = 0.25;
  r.critical_damping = 0.0612;
  r.max_shift = 4.999;
  r.binding = {"shift_cap"};
  r.scenario_rate = 0.98;
  r.iterations = 7;
  r.evaluations = 180;
  r.warnings = {"condition 1e9"};
  r.trace.push_back({1, "grid", {0.0, 0.1}, std::numeric_limits<double>::quiet_NaN(), false, 0.02});
  r.trace.push_back({2, "pattern", {11.5, 0.1 / 3.0}, 0.0597123456789, true, 0.0});
  return r;
}

} // namespace

TEST_CASE("format_number round-trips and spells non-finite values", "[io]") {
  for (double v : {0.0, -0.0, 1.0 / 3.0, 1e-300, 6.02214076e23, -2.5}) {
    CHECK(std::stod(format_number(v)) == v);
  }
  CHECK(format_number(std::nan("")) == "nan");
  CHECK(format_number(INFINITY) == "inf");
  CHECK(format_number(-INFINITY) == "-inf");
  CHECK(format_number(0.1) == format_number(0.1));
}

TEST_CASE("sample files: single row, clipping and malformed lines", "[io]") {
  const Interval support{-1.0, 1.0};
  const auto one = parse_samples("e_pu\n0.25\n", support, "s.csv");
  REQUIRE(one.values.size() == 1);
  CHECK(one.values[0] == 0.25);
  CHECK(one.clipped == 0);

  const auto clip = parse_samples("e_pu\n0.5\n1.7\n-0.2\n", support, "s.csv");
  CHECK(clip.clipped == 1);
  CHECK(clip.values[1] == 1.0);

  try {
    parse_samples("e_pu\n0.1\nabc\n", support, "s.csv");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_samples("x\n0.1\n", support, "s.csv"), ParseError);
  CHECK_THROWS_AS(parse_samples("e_pu\n", support, "s.csv"), ParseError);
  CHECK_THROWS_AS(parse_samples("", support, "s.csv"), ParseError);
}

TEST_CASE("large normal sample file preserves its moments", "[io]") {
  const std::size_t n = 10000;
  const double sd = 0.2;
  std::mt19937_64 rng(77);
  std::normal_distribution<double> g(0.0, sd);
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  const auto loaded = parse_samples(samples_csv(v), Interval{-1.0, 1.0}, "big.csv");
  REQUIRE(loaded.values == v);
  double mean = 0.0;
  for (double x : loaded.values) mean += x;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double x : loaded.values) var += (x - mean) * (x - mean);
  var /= static_cast<double>(n - 1);
  // 3-sigma bands for the sample mean and sample standard deviation
  CHECK(std::abs(mean) < 3.0 * sd / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(std::sqrt(var) - sd) < 3.0 * sd / std::sqrt(2.0 * static_cast<double>(n - 1)));
}

TEST_CASE("tuning report JSON round-trip", "[io]") {
  const TuningReport r = sample_report();
  const Json j = to_json(r);
  const TuningReport back = report_from_json(parse_json(j.dump(2), "report"));
  CHECK(back.method == r.method);
  CHECK(back.decision_names == r.decision_names);
  CHECK(back.params.values == r.params.values);
  CHECK(back.objective == r.objective);
  CHECK(back.radius == r.radius);
  CHECK(back.binding == r.binding);
  REQUIRE(back.scenario_rate.has_value());
  CHECK(*back.scenario_rate == *r.scenario_rate);
  REQUIRE(back.trace.size() == 2);
  CHECK(std::isnan(back.trace[0].objective));
  CHECK(back.trace[1].decision == r.trace[1].decision);
  CHECK(std::isnan(back.min_damping));
  CHECK(to_json(back).dump() == j.dump());
}

TEST_CASE("infeasible report carries no parameters", "[io]") {
  TuningReport r;
  r.method = Method::ro;
  r.status = "infeasible";
  r.decision_names = {"k_m", "t_1"};
  r.range = {-1.0, 1.0};
  r.violated = {"min_damping"};
  r.min_damping = 0.0112;
  const Json j = to_json(r);
  CHECK_FALSE(j.contains("params"));
  CHECK(j.at("violated") == Json::array({"min_damping"}));
  const TuningReport back = report_from_json(j);
  CHECK(back.status == "infeasible");
  CHECK(back.min_damping == 0.0112);
  CHECK(back.range.lo == -1.0);
  CHECK(back.trace.empty());
  CHECK(trace_csv(back) == "evaluation,phase,k_m,t_1,objective,feasible,violation\n");
}

TEST_CASE("surrogate JSON round-trip reproduces evaluations", "[io]") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Eigen::MatrixXd xi(30, 1);
  Eigen::VectorXd d(30);
  for (Index r = 0; r < 30; ++r) {
    xi(r, 0) = g(rng);
    d(r) = std::sin(xi(r, 0));
  }
  Standardization st{Eigen::VectorXd::Constant(1, 0.1), Eigen::VectorXd::Constant(1, 0.3), std::nullopt};
  const PceSurrogate s = fit(xi, d, 4, st);
  const PceSurrogate back = surrogate_from_json(parse_json(to_json(s).dump(), "s"));
  for (double e : {-0.5, 0.0, 0.37}) CHECK(evaluate(back, e) == evaluate(s, e));
  Json bad = to_json(s);
  bad["order"] = 3;
  CHECK_THROWS_AS(surrogate_from_json(bad), ParseError);
}

TEST_CASE("testbed and controller configuration round-trip", "[io]") {
  TestbedConfig c;
  c.inertia_h = 4.25;
  c.disturbance = {-0.8, 0.6};
  const TestbedConfig back = testbed_from_json(to_json(c));
  CHECK(to_json(back).dump() == to_json(c).dump());
  Json bad = to_json(c);
  bad["inertia"] = 3.0;
  CHECK_THROWS_AS(testbed_from_json(bad), ParseError);

  ControllerParams p;
  p[Param::t_3] = 0.07;
  p.bound(Param::k_m) = {0.0, 30.0};
  const ControllerParams pb = controller_from_json(to_json(p));
  CHECK(pb.values == p.values);
  CHECK(pb.bound(Param::k_m).hi == 30.0);
  CHECK_THROWS(controller_from_json(Json{{"values", {{"k_x", 1.0}}}}));
}

TEST_CASE("Sobol design CSV round-trip", "[io]") {
  const auto d = saltelli_sample({"a", "b"}, {Interval{0.0, 1.0}, Interval{-2.0, 2.0}}, 8, 11);
  std::vector<double> f(d.size());
  for (std::size_t r = 0; r < d.size(); ++r) f[r] = d.points(static_cast<Index>(r), 0) - d.points(static_cast<Index>(r), 1);
  f[3] = std::numeric_limits<double>::quiet_NaN();
  const DesignTable t = parse_design_csv(design_csv(d, f), "design.csv");
  CHECK(t.names == d.names);
  CHECK(t.points == d.points);
  CHECK(std::isnan(t.f[3]));
  CHECK(t.f[4] == f[4]);
  CHECK_THROWS_AS(parse_design_csv("a,b,f\n1,2\n", "d.csv"), ParseError);
}
