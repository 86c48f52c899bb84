#pragma once

// Wasserstein ambiguity sets, the exact worst-case expectation of a 1-D
// polynomial surrogate over a W1 ball, and the three tuning solvers
// (distributionally robust, sample-average, range-robust).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "drdamp/error.hpp"
#include "drdamp/pce.hpp"
#include "drdamp/seed.hpp"
#include "drdamp/sslin.hpp"
#include "drdamp/testbed.hpp"

namespace drdamp {

// ---------------------------------------------------------------------------
// Wasserstein distance

/// W1 between two equal-weight empirical distributions. Unequal sample counts
/// are handled exactly by integrating |F_p^-1(u) - F_q^-1(u)| over the merged
/// quantile breakpoints.
inline double w1_distance(std::vector<double> p, std::vector<double> q) {
  if (p.empty() || q.empty()) throw Error("w1_distance: empty sample");
  std::sort(p.begin(), p.end());
  std::sort(q.begin(), q.end());
  if (p.size() == q.size()) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
    return s / static_cast<double>(p.size());
  }
  const auto n = static_cast<double>(p.size());
  const auto m = static_cast<double>(q.size());
  std::size_t i = 0, j = 0;
  double u = 0.0, total = 0.0;
  while (i < p.size() && j < q.size()) {
    const double next_p = static_cast<double>(i + 1) / n;
    const double next_q = static_cast<double>(j + 1) / m;
    const double next = std::min(next_p, next_q);
    total += (next - u) * std::abs(p[i] - q[j]);
    u = next;
    if (next_p <= next) ++i;
    if (next_q <= next) ++j;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Ambiguity set

struct AmbiguitySet {
  std::vector<double> samples;
  double radius = 0.0;
  double beta = 0.03;
  double d_constant = 0.0;
  Interval support{-1.0, 1.0};

  void validate() const {
    if (samples.empty()) throw Error("ambiguity set has no samples");
    if (!(radius >= 0.0) || !std::isfinite(radius)) throw Error("ambiguity radius must be non-negative");
    if (!(support.lo < support.hi)) throw Error("ambiguity support is empty");
    for (double s : samples)
      if (!support.contains(s))
        throw Error("sample " + std::to_string(s) + " lies outside the support [" + std::to_string(support.lo) +
                    ", " + std::to_string(support.hi) + "]");
  }

  double sample_mean() const {
    return std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
  }
};

struct RadiusCalibration {
  double radius = 0.0;
  double d_constant = 0.0;
  double alpha = 0.0; ///< minimizing alpha (0 for degenerate samples)
};

namespace detail {

/// Golden-section maximization of a unimodal function on [a, b].
template <class F>
std::pair<double, double> golden_max(F&& f, double a, double b, double tol, int max_iter = 200) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < max_iter && (b - a) > tol; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return fc >= fd ? std::pair{c, fc} : std::pair{d, fd};
}

inline double log_mean_exp(const std::vector<double>& s, double alpha) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : s) mx = std::max(mx, alpha * v);
  double acc = 0.0;
  for (double v : s) acc += std::exp(alpha * v - mx);
  return mx + std::log(acc / static_cast<double>(s.size()));
}

} // namespace detail

/// D = 2 inf_alpha sqrt((1/(2 alpha)) (1 + ln mean exp(alpha (x - mu)^2))),
/// radius = D sqrt(ln(1/beta) / N).
inline RadiusCalibration calibrate_radius(const std::vector<double>& samples, double beta) {
  if (samples.size() < 2) throw Error("calibrate_radius: need at least two samples");
  if (!(beta > 0.0 && beta <= 0.5)) throw Error("calibrate_radius: beta must lie in (0, 0.5]");
  for (double v : samples)
    if (!std::isfinite(v)) throw Error("calibrate_radius: non-finite sample");
  const auto n = static_cast<double>(samples.size());
  const double mu = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  std::vector<double> sq(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) sq[i] = (samples[i] - mu) * (samples[i] - mu);
  const double smax = *std::max_element(sq.begin(), sq.end());
  const double tiny = 1e-12 * std::max(1.0, std::abs(mu));
  if (smax <= tiny * tiny) return {};

  auto objective = [&](double log_alpha) {
    const double alpha = std::exp(log_alpha);
    const double v = (1.0 + detail::log_mean_exp(sq, alpha)) / (2.0 * alpha);
    return std::isfinite(v) ? -v : -std::numeric_limits<double>::infinity();
  };
  // alpha * max (x - mu)^2 spans [1e-4, 1e6] on the grid.
  constexpr int kGrid = 201;
  const double lo = std::log(1e-4 / smax), hi = std::log(1e6 / smax);
  int best = -1;
  double best_v = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < kGrid; ++k) {
    const double v = objective(lo + (hi - lo) * k / (kGrid - 1));
    if (v > best_v) {
      best_v = v;
      best = k;
    }
  }
  if (best < 0) throw Error("calibrate_radius: exponential moment is not finite for any alpha");
  const double step = (hi - lo) / (kGrid - 1);
  const double a = lo + step * std::max(0, best - 1);
  const double b = lo + step * std::min(kGrid - 1, best + 1);
  const auto [la, val] = detail::golden_max(objective, a, b, 1e-10);
  RadiusCalibration out;
  out.alpha = std::exp(la);
  out.d_constant = 2.0 * std::sqrt(-std::max(val, best_v));
  out.radius = out.d_constant * std::sqrt(std::log(1.0 / beta) / n);
  return out;
}

inline AmbiguitySet make_ambiguity_set(std::vector<double> samples, double beta, Interval support) {
  const RadiusCalibration cal = calibrate_radius(samples, beta);
  AmbiguitySet s{std::move(samples), cal.radius, beta, cal.d_constant, support};
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// Polynomials (ascending coefficients)

namespace detail {

inline double poly_eval(const std::vector<double>& c, double x) {
  double v = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) v = v * x + c[k];
  return v;
}

inline std::vector<double> poly_derivative(const std::vector<double>& c) {
  if (c.size() <= 1) return {0.0};
  std::vector<double> d(c.size() - 1);
  for (std::size_t k = 1; k < c.size(); ++k) d[k - 1] = static_cast<double>(k) * c[k];
  return d;
}

inline std::string poly_string(const std::vector<double>& c) {
  std::string s = "[";
  for (std::size_t k = 0; k < c.size(); ++k) s += (k ? ", " : "") + std::to_string(c[k]);
  return s + "]";
}

/// Real roots via the companion matrix, polished by Newton steps.
inline std::vector<double> real_roots(std::vector<double> c) {
  double scale = 0.0;
  for (double v : c) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return {};
  while (c.size() > 1 && std::abs(c.back()) <= 1e-14 * scale) c.pop_back();
  const auto deg = static_cast<Index>(c.size()) - 1;
  if (deg < 1) return {};
  if (deg == 1) return {-c[0] / c[1]};
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(deg, deg);
  for (Index i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
  for (Index i = 0; i < deg; ++i) comp(i, deg - 1) = -c[static_cast<std::size_t>(i)] / c.back();
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
  if (es.info() != Eigen::Success)
    throw Error("polynomial root finding failed for coefficients " + poly_string(c));
  const auto dc = poly_derivative(c);
  std::vector<double> out;
  for (Index i = 0; i < deg; ++i) {
    const Complex z = es.eigenvalues()(i);
    if (std::abs(z.imag()) > 1e-7 * (1.0 + std::abs(z.real()))) continue;
    double x = z.real();
    for (int it = 0; it < 3; ++it) {
      const double dv = poly_eval(dc, x);
      if (dv == 0.0) break;
      const double nx = x - poly_eval(c, x) / dv;
      if (!std::isfinite(nx)) break;
      x = nx;
    }
    out.push_back(x);
  }
  return out;
}

struct InnerMin {
  double value;
  double argmin;
};

// min over xi in [lo, hi] of p(xi) + lambda |xi - x0|
inline InnerMin inner_min(const std::vector<double>& p, const std::vector<double>& dp, double lambda, double x0,
                          const Interval& support) {
  InnerMin best{std::numeric_limits<double>::infinity(), x0};
  auto consider = [&](double x) {
    if (!(x >= support.lo && x <= support.hi)) return;
    const double v = poly_eval(p, x) + lambda * std::abs(x - x0);
    if (v < best.value || (v == best.value && std::abs(x - x0) < std::abs(best.argmin - x0)))
      best = {v, x};
  };
  consider(x0);
  consider(support.lo);
  consider(support.hi);
  std::vector<double> shifted = dp;
  shifted[0] += lambda;
  for (double r : real_roots(shifted))
    if (r > x0) consider(r);
  shifted[0] = dp[0] - lambda;
  for (double r : real_roots(shifted))
    if (r < x0) consider(r);
  return best;
}

} // namespace detail

struct WorstCase {
  double value = 0.0;          ///< worst-case expectation over the ball
  double empirical_mean = 0.0; ///< mean of the surrogate at the samples
  double lambda = 0.0;         ///< dual multiplier
  double transport = 0.0;      ///< mean |xi* - xi_hat| of the worst-case distribution
  std::vector<double> near;    ///< per-sample minimizers just above lambda
  std::vector<double> far;     ///< per-sample minimizers just below lambda
  double weight_far = 0.0;     ///< mixing weight on `far`
};

/// Exact dual of inf { E_Q[d] : W1(Q, P_N) <= radius, supp Q in support } for a
/// polynomial d given by ascending coefficients in the raw variable.
inline WorstCase worst_case_expectation(const std::vector<double>& poly, const AmbiguitySet& set) {
  set.validate();
  if (poly.empty()) throw Error("worst_case_expectation: empty polynomial");
  const auto n = static_cast<double>(set.samples.size());
  const auto dp = detail::poly_derivative(poly);

  WorstCase out;
  for (double x : set.samples) out.empirical_mean += detail::poly_eval(poly, x);
  out.empirical_mean /= n;
  if (set.radius == 0.0) {
    out.value = out.empirical_mean;
    out.near = out.far = set.samples;
    return out;
  }

  // lambda_hi = max |p'| over the support
  double lambda_hi = std::max(std::abs(detail::poly_eval(dp, set.support.lo)),
                              std::abs(detail::poly_eval(dp, set.support.hi)));
  for (double r : detail::real_roots(detail::poly_derivative(dp)))
    if (set.support.contains(r)) lambda_hi = std::max(lambda_hi, std::abs(detail::poly_eval(dp, r)));

  auto mean_inner = [&](double lambda, std::vector<double>* arg) {
    double acc = 0.0;
    for (std::size_t i = 0; i < set.samples.size(); ++i) {
      const auto m = detail::inner_min(poly, dp, lambda, set.samples[i], set.support);
      acc += m.value;
      if (arg) (*arg)[i] = m.argmin;
    }
    return acc / n;
  };
  auto dual = [&](double lambda) { return -lambda * set.radius + mean_inner(lambda, nullptr); };

  double lam = 0.0, val = dual(0.0);
  if (lambda_hi > 0.0) {
    const auto [l, v] = detail::golden_max(dual, 0.0, lambda_hi, 1e-13 * (1.0 + lambda_hi), 400);
    if (v > val) {
      lam = l;
      val = v;
    }
    const double v_hi = dual(lambda_hi);
    if (v_hi > val) {
      lam = lambda_hi;
      val = v_hi;
    }
  }
  out.value = val;
  out.lambda = lam;

  out.near.assign(set.samples.size(), 0.0);
  out.far.assign(set.samples.size(), 0.0);
  const double eta = 1e-7 * (1.0 + lam);
  mean_inner(lam + eta, &out.near);
  mean_inner(std::max(0.0, lam - eta), &out.far);
  auto cost = [&](const std::vector<double>& x) {
    double c = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) c += std::abs(x[i] - set.samples[i]);
    return c / n;
  };
  const double t_near = cost(out.near), t_far = cost(out.far);
  if (lam > 0.0 && t_far > t_near) {
    out.weight_far = std::clamp((set.radius - t_near) / (t_far - t_near), 0.0, 1.0);
  }
  out.transport = out.weight_far * t_far + (1.0 - out.weight_far) * t_near;
  return out;
}

// ---------------------------------------------------------------------------
// Tuning problem

struct ConstraintSpec {
  double zeta_min = 0.03;       ///< lower bound on nominal critical damping
  double zeta_max = 0.08;       ///< upper bound on nominal critical damping
  double shift_cap = 5.0;       ///< bound on |predicted shift| of every other plant mode, 1/s
  double ro_min_damping = 0.015; ///< range-robust requirement on the inner minimum
};

struct PceSettings {
  int order = 4;
  std::size_t design_size = 40;
  double design_spread = 2.0;   ///< std of design points in standardized units
  bool stratified = true;       ///< Latin-hypercube draws instead of plain rejection sampling
  std::uint64_t seed = 1;
};

struct SearchSettings {
  int grid_points = 12;
  double tolerance = 1e-3;      ///< final pattern step, normalized units
  std::size_t max_evaluations = 2000;
};

struct TuningProblem {
  std::vector<Param> decision{Param::k_m, Param::t_1};
  ControllerParams base;
  AmbiguitySet ambiguity;
  ConstraintSpec constraints;
  PceSettings pce;
  SearchSettings search;
  double nominal_e = 0.0;

  void validate(const TestbedConfig& config) const {
    if (decision.empty() || decision.size() > 3)
      throw Error("tuning problem: decision dimension must be 1..3");
    for (std::size_t i = 0; i < decision.size(); ++i)
      for (std::size_t j = i + 1; j < decision.size(); ++j)
        if (decision[i] == decision[j]) throw Error("tuning problem: repeated decision parameter");
    base.validate();
    for (std::size_t i = 0; i < kParamCount; ++i) {
      const Interval& b = base.bounds[i];
      if (!(b.lo <= b.hi)) throw Error("tuning problem: empty box for " + std::string(kParamNames[i]));
    }
    for (Param p : decision) {
      const Interval& b = base.bound(p);
      if (b.lo < 0.0 || (p != Param::k_m && !(b.lo > 0.0)))
        throw Error("tuning problem: box for " + std::string(param_name(p)) + " admits invalid values");
    }
    if (!(constraints.zeta_min < constraints.zeta_max))
      throw Error("tuning problem: zeta_min must be below zeta_max");
    if (!(constraints.shift_cap > 0.0)) throw Error("tuning problem: shift cap must be positive");
    if (pce.order < 1) throw Error("tuning problem: PCE order must be at least 1");
    if (!(pce.design_spread > 0.0)) throw Error("tuning problem: design spread must be positive");
    if (search.grid_points < 2) throw Error("tuning problem: grid needs at least two points per axis");
    if (!(search.tolerance > 0.0)) throw Error("tuning problem: search tolerance must be positive");
    ambiguity.validate();
    if (ambiguity.support.lo < config.disturbance.lo || ambiguity.support.hi > config.disturbance.hi)
      throw Error("tuning problem: ambiguity support exceeds the disturbance bounds");
  }
};

enum class Method { drdoc, so, ro };

inline std::string method_name(Method m) {
  switch (m) {
  case Method::drdoc: return "drdoc";
  case Method::so: return "so";
  case Method::ro: return "ro";
  }
  return "unknown";
}

inline Method method_from_name(const std::string& s) {
  if (s == "drdoc") return Method::drdoc;
  if (s == "so") return Method::so;
  if (s == "ro") return Method::ro;
  throw Error("unknown method '" + s + "'");
}

struct TraceRow {
  std::size_t evaluation = 0;
  std::string phase;               ///< grid | pattern
  std::vector<double> decision;    ///< decision parameter values
  double objective = 0.0;
  bool feasible = false;
  double violation = 0.0;
};

struct TuningReport {
  Method method = Method::drdoc;
  std::string status = "optimal";  ///< optimal | infeasible
  std::vector<std::string> decision_names;
  ControllerParams initial;
  ControllerParams params;
  double objective = 0.0;
  double worst_case = 0.0;          ///< worst-case expected damping
  double nominal = 0.0;             ///< surrogate c_0
  double empirical_mean = 0.0;
  double radius = 0.0;
  double lambda = 0.0;
  double critical_damping = 0.0;    ///< closed-loop critical damping at the nominal point
  double max_shift = 0.0;
  double min_damping = std::numeric_limits<double>::quiet_NaN(); ///< range-robust inner minimum
  double worst_e = std::numeric_limits<double>::quiet_NaN();     ///< where the inner minimum sits
  Interval range{};                 ///< range-robust disturbance range
  std::vector<std::string> binding;
  std::vector<std::string> violated;
  std::optional<double> scenario_rate;
  bool flat_objective = false;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  std::vector<TraceRow> trace;
  std::vector<std::string> warnings;
};

// ---------------------------------------------------------------------------
// Candidate evaluation

/// PCE of e -> damping_map(config, params, e) on the given standard-space design.
inline PceSurrogate fit_damping_surrogate(const TestbedConfig& config, const ControllerParams& params,
                                          const Standardization& st, const Eigen::MatrixXd& xi, int order) {
  Eigen::VectorXd d(xi.rows());
  for (Index r = 0; r < xi.rows(); ++r) {
    const double e = st.to_raw(xi.row(r).transpose())(0);
    d(r) = damping_map(config, params, e);
  }
  return fit(xi, d, order, st);
}

/// Standardization from the empirical samples and the shared design points.
struct SurrogateDesign {
  Standardization transform;
  Eigen::MatrixXd xi;
};

inline SurrogateDesign make_surrogate_design(const AmbiguitySet& set, const PceSettings& s) {
  const auto n = static_cast<double>(set.samples.size());
  const double mu = set.sample_mean();
  double var = 0.0;
  for (double v : set.samples) var += (v - mu) * (v - mu);
  const double sd = set.samples.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
  if (!(sd > 1e-12)) throw Error("surrogate design: empirical samples have zero spread");
  SurrogateDesign out{{Eigen::VectorXd::Constant(1, mu), Eigen::VectorXd::Constant(1, sd), std::nullopt}, {}};
  // Draw wider than the reference measure so the fit covers the support.
  const Standardization wide{Eigen::VectorXd::Constant(1, mu), Eigen::VectorXd::Constant(1, sd * s.design_spread),
                             std::nullopt};
  const Eigen::MatrixXd z = s.stratified ? stratified_design(wide, s.design_size, s.seed, {set.support})
                                         : sample_design(wide, s.design_size, s.seed, {set.support});
  out.xi = z * s.design_spread;
  return out;
}

struct CandidateResult {
  ControllerParams params;
  bool feasible = false;
  double violation = 0.0;
  std::vector<std::string> violated;
  double objective = -std::numeric_limits<double>::infinity();
  double worst_case = 0.0, nominal = 0.0, empirical_mean = 0.0, lambda = 0.0;
  double critical_damping = 0.0, max_shift = 0.0;
  double min_damping = 0.0, worst_e = 0.0;
  std::vector<std::string> warnings;
};

namespace detail {

struct NominalCheck {
  double critical_damping = 0.0;
  double max_shift = 0.0;
};

// Critical damping at the nominal point and the largest first-order shift of
// every other open-loop mode (the critical pair excluded).
inline NominalCheck nominal_check(const StateSpaceModel& plant, const ModeSet& open, Index critical,
                                  const ControllerParams& p) {
  NominalCheck out;
  ModeTracker tracker;
  out.critical_damping = critical_mode(plant, p, tracker).damping;
  const Complex lc = open.eigenvalues(critical);
  for (Index i = 0; i < open.size(); ++i) {
    const Complex li = open.eigenvalues(i);
    if (i == critical || std::abs(li - std::conj(lc)) < 1e-9 * (1.0 + std::abs(lc))) continue;
    const Complex r = residue(plant, open, i, kStabilizerInput, kSpeedOutput);
    out.max_shift = std::max(out.max_shift, std::abs(predict_shift(r, p, li)));
  }
  return out;
}

inline void check_constraints(const ConstraintSpec& c, CandidateResult& r) {
  auto add = [&](double amount, const std::string& what) {
    if (amount > 0.0) {
      r.violation += amount;
      r.violated.push_back(what);
    }
  };
  add((c.zeta_min - r.critical_damping) / c.zeta_min,
      "critical damping " + std::to_string(r.critical_damping) + " below zeta_min " + std::to_string(c.zeta_min));
  add((r.critical_damping - c.zeta_max) / c.zeta_max,
      "critical damping " + std::to_string(r.critical_damping) + " above zeta_max " + std::to_string(c.zeta_max));
  add((r.max_shift - c.shift_cap) / c.shift_cap,
      "other-mode shift " + std::to_string(r.max_shift) + " exceeds cap " + std::to_string(c.shift_cap));
  r.feasible = r.violated.empty();
}

// Minimum of the true damping map over a range: tracked grid then golden
// refinement around the lowest grid point.
inline std::pair<double, double> range_minimum(const TestbedConfig& config, const ControllerParams& p,
                                               const Interval& range, int grid = 201) {
  if (range.width() == 0.0) return {damping_map(config, p, range.lo), range.lo};
  std::vector<double> e(static_cast<std::size_t>(grid)), z(static_cast<std::size_t>(grid));
  ModeTracker tracker;
  for (int k = 0; k < grid; ++k) {
    e[static_cast<std::size_t>(k)] = range.lo + range.width() * k / (grid - 1);
    z[static_cast<std::size_t>(k)] = damping_map(config, p, e[static_cast<std::size_t>(k)], tracker);
  }
  const auto k = static_cast<std::size_t>(std::min_element(z.begin(), z.end()) - z.begin());
  double best = z[k], best_e = e[k];
  const double a = e[k == 0 ? 0 : k - 1];
  const double b = e[std::min(k + 1, e.size() - 1)];
  if (b > a) {
    auto neg = [&](double x) { return -damping_map(config, p, x); };
    const auto [x, v] = golden_max(neg, a, b, 1e-9 * (1.0 + range.width()), 100);
    if (-v < best) {
      best = -v;
      best_e = x;
    }
  }
  return {best, best_e};
}

} // namespace detail

/// Shared state of one solver run: plant at the nominal point and PCE design.
class CandidateEvaluator {
public:
  CandidateEvaluator(const TuningProblem& problem, const TestbedConfig& config, Method method,
                     std::optional<Interval> range = std::nullopt)
      : problem_(problem), config_(config), method_(method), range_(range),
        plant_(linearize(config, problem.nominal_e)), open_(eigendecompose(plant_)),
        critical_(lowest_oscillatory_mode(open_)) {
    if (method_ != Method::ro) design_ = make_surrogate_design(problem.ambiguity, problem.pce);
    if (method_ == Method::ro && !range_) throw Error("range-robust evaluation needs a range");
  }

  CandidateResult operator()(const ControllerParams& p) const {
    CandidateResult r;
    r.params = p;
    const auto nc = detail::nominal_check(plant_, open_, critical_, p);
    r.critical_damping = nc.critical_damping;
    r.max_shift = nc.max_shift;
    detail::check_constraints(problem_.constraints, r);

    if (method_ == Method::ro) {
      const auto [mn, at] = detail::range_minimum(config_, p, *range_);
      r.min_damping = mn;
      r.worst_e = at;
      r.objective = mn;
      const double need = problem_.constraints.ro_min_damping;
      if (mn < need) {
        r.violation += (need - mn) / std::max(std::abs(need), 1e-6);
        r.violated.push_back("minimum damping " + std::to_string(mn) + " over the range below requirement " +
                             std::to_string(need));
        r.feasible = false;
      }
      return r;
    }

    const PceSurrogate s = fit_damping_surrogate(config_, p, design_.transform, design_.xi, problem_.pce.order);
    for (const auto& w : s.diagnostics.warnings) r.warnings.push_back(w);
    AmbiguitySet set = problem_.ambiguity;
    if (method_ == Method::so) set.radius = 0.0;
    const WorstCase wc = worst_case_expectation(power_series(s), set);
    r.nominal = moments(s).mean;
    r.empirical_mean = wc.empirical_mean;
    r.lambda = wc.lambda;
    // Expected damping c_0 degraded by the worst-case loss over the ball.
    r.worst_case = r.nominal - std::max(0.0, wc.empirical_mean - wc.value);
    r.objective = r.worst_case;
    return r;
  }

  const StateSpaceModel& plant() const noexcept { return plant_; }

private:
  const TuningProblem& problem_;
  const TestbedConfig& config_;
  Method method_;
  std::optional<Interval> range_;
  StateSpaceModel plant_;
  ModeSet open_;
  Index critical_;
  SurrogateDesign design_;
};

namespace detail {

inline bool better(const CandidateResult& a, const CandidateResult& b) {
  if (a.feasible != b.feasible) return a.feasible;
  if (a.feasible) return a.objective > b.objective + 1e-12;
  return a.violation < b.violation - 1e-12;
}

inline ControllerParams at_unit(const TuningProblem& pr, const std::vector<double>& u) {
  ControllerParams p = pr.base;
  for (std::size_t i = 0; i < pr.decision.size(); ++i) {
    const Interval& b = pr.base.bound(pr.decision[i]);
    p[pr.decision[i]] = b.lo + std::clamp(u[i], 0.0, 1.0) * b.width();
  }
  return p;
}

inline std::vector<std::string> binding_constraints(const TuningProblem& pr, const CandidateResult& r) {
  std::vector<std::string> out;
  const auto& c = pr.constraints;
  if (std::abs(r.critical_damping - c.zeta_min) <= 1e-2 * c.zeta_min)
    out.push_back("zeta_min");
  if (std::abs(r.critical_damping - c.zeta_max) <= 1e-2 * c.zeta_max) out.push_back("zeta_max");
  if (r.max_shift >= 0.99 * c.shift_cap) out.push_back("shift_cap");
  for (Param p : pr.decision) {
    const Interval& b = pr.base.bound(p);
    const double v = r.params[p];
    const double tol = 1e-3 * b.width();
    if (v <= b.lo + tol) out.push_back(std::string(param_name(p)) + "_lower");
    if (v >= b.hi - tol) out.push_back(std::string(param_name(p)) + "_upper");
  }
  return out;
}

inline TuningReport search(const TuningProblem& pr, const CandidateEvaluator& eval, Method method) {
  const std::size_t k = pr.decision.size();
  TuningReport rep;
  rep.method = method;
  rep.initial = pr.base;
  for (Param p : pr.decision) rep.decision_names.emplace_back(param_name(p));
  rep.radius = method == Method::drdoc ? pr.ambiguity.radius : 0.0;

  auto record = [&](const CandidateResult& c, const char* phase) {
    TraceRow row;
    row.evaluation = ++rep.evaluations;
    row.phase = phase;
    for (Param p : pr.decision) row.decision.push_back(c.params[p]);
    row.objective = c.objective;
    row.feasible = c.feasible;
    row.violation = c.violation;
    rep.trace.push_back(std::move(row));
  };

  // coarse grid
  const int g = pr.search.grid_points;
  std::vector<double> u(k, 0.0);
  std::vector<int> idx(k, 0);
  CandidateResult best;
  std::vector<double> best_u(k, 0.0);
  bool have = false;
  double obj_min = std::numeric_limits<double>::infinity(), obj_max = -obj_min;
  while (true) {
    for (std::size_t i = 0; i < k; ++i) u[i] = static_cast<double>(idx[i]) / (g - 1);
    const CandidateResult c = eval(at_unit(pr, u));
    record(c, "grid");
    if (c.feasible) {
      obj_min = std::min(obj_min, c.objective);
      obj_max = std::max(obj_max, c.objective);
    }
    if (!have || better(c, best)) {
      best = c;
      best_u = u;
      have = true;
    }
    std::size_t d = 0;
    while (d < k && ++idx[d] == g) idx[d++] = 0;
    if (d == k) break;
  }

  // compass search from the best grid point
  double step = 1.0 / (g - 1);
  if (best.feasible) {
    while (step >= pr.search.tolerance && rep.evaluations < pr.search.max_evaluations) {
      ++rep.iterations;
      bool improved = false;
      for (std::size_t i = 0; i < k && !improved; ++i) {
        for (double sgn : {1.0, -1.0}) {
          std::vector<double> trial = best_u;
          trial[i] = std::clamp(trial[i] + sgn * step, 0.0, 1.0);
          if (trial[i] == best_u[i]) continue;
          const CandidateResult c = eval(at_unit(pr, trial));
          record(c, "pattern");
          if (better(c, best)) {
            best = c;
            best_u = trial;
            improved = true;
            break;
          }
        }
      }
      if (!improved) step *= 0.5;
    }
  }

  for (const auto& w : best.warnings) rep.warnings.push_back(w);
  rep.params = best.params;
  rep.objective = best.objective;
  rep.worst_case = best.worst_case;
  rep.nominal = best.nominal;
  rep.empirical_mean = best.empirical_mean;
  rep.lambda = best.lambda;
  rep.critical_damping = best.critical_damping;
  rep.max_shift = best.max_shift;
  rep.min_damping = best.min_damping;
  rep.worst_e = best.worst_e;
  rep.flat_objective = std::isfinite(obj_min) && obj_max - obj_min <= 1e-12 * std::max(1.0, std::abs(obj_max));
  if (best.feasible) {
    rep.status = "optimal";
    rep.binding = binding_constraints(pr, best);
  } else {
    rep.status = "infeasible";
    rep.violated = best.violated;
  }
  return rep;
}

} // namespace detail

/// Maximizes the worst-case expected damping over the Wasserstein ball.
/// Returns status "infeasible" with the least-violating point's audit when no
/// grid point satisfies the constraints; throw_if_infeasible turns that into an error.
inline TuningReport solve_drdoc(const TuningProblem& problem, const TestbedConfig& config) {
  problem.validate(config);
  const CandidateEvaluator eval(problem, config, Method::drdoc);
  return detail::search(problem, eval, Method::drdoc);
}

/// Sample-average tuning: the same search with the ball collapsed to the
/// empirical distribution.
inline TuningReport solve_so(const TuningProblem& problem, const TestbedConfig& config) {
  problem.validate(config);
  const CandidateEvaluator eval(problem, config, Method::so);
  return detail::search(problem, eval, Method::so);
}

/// Maximizes min over e in `range` of the true damping map.
inline TuningReport solve_ro(const TuningProblem& problem, const TestbedConfig& config, const Interval& range) {
  problem.validate(config);
  if (!(range.lo <= range.hi)) throw Error("solve_ro: empty range");
  if (range.lo < config.disturbance.lo || range.hi > config.disturbance.hi)
    throw Error("solve_ro: range exceeds the disturbance bounds");
  const CandidateEvaluator eval(problem, config, Method::ro, range);
  TuningReport rep = detail::search(problem, eval, Method::ro);
  rep.range = range;
  return rep;
}

inline void throw_if_infeasible(const TuningReport& r) {
  if (r.status != "infeasible") return;
  std::string what = "infeasible";
  for (const auto& v : r.violated) what += "; " + v;
  throw InfeasibleError(what);
}

// ---------------------------------------------------------------------------
// Out-of-sample validation

struct ScenarioValidation {
  double rate = 0.0;               ///< share of scenarios with damping > 0
  std::vector<double> damping;     ///< NaN where the operating point is infeasible
  std::vector<bool> infeasible;
  std::size_t n_infeasible = 0;
};

inline ScenarioValidation validate_scenarios(const ControllerParams& params, const TestbedConfig& config,
                                             const std::vector<double>& scenarios) {
  if (scenarios.empty()) throw Error("validate_scenarios: empty scenario set");
  for (double e : scenarios)
    if (!config.disturbance.contains(e))
      throw Error("validate_scenarios: scenario " + std::to_string(e) + " outside the disturbance bounds");
  ScenarioValidation v;
  v.damping.resize(scenarios.size());
  v.infeasible.assign(scenarios.size(), false);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    try {
      v.damping[i] = damping_map(config, params, scenarios[i]);
      if (v.damping[i] > 0.0) ++ok;
    } catch (const InfeasibleError&) {
      v.damping[i] = std::numeric_limits<double>::quiet_NaN();
      v.infeasible[i] = true;
      ++v.n_infeasible;
    }
  }
  v.rate = static_cast<double>(ok) / static_cast<double>(scenarios.size());
  return v;
}

} // namespace drdamp
