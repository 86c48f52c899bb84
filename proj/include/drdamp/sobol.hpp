#pragma once

// Variance-based sensitivity analysis: Saltelli sampling, first-order indices
// (Saltelli 2010 estimator) and total indices (Jansen estimator).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "drdamp/error.hpp"
#include "drdamp/sslin.hpp"
#include "drdamp/testbed.hpp"

namespace drdamp {

/// Rows are laid out in blocks of n_base: A, B, then A_B^(i) for i = 0..d-1,
/// where A_B^(i) is A with column i taken from B.
struct SobolDesign {
  std::vector<std::string> names;
  std::vector<Interval> bounds;
  std::size_t n_base = 0;
  Eigen::MatrixXd unit;   ///< points on the unit cube
  Eigen::MatrixXd points; ///< points mapped to the bounds

  std::size_t dimension() const noexcept { return names.size(); }
  std::size_t size() const noexcept { return static_cast<std::size_t>(points.rows()); }
  Index row_a(std::size_t j) const noexcept { return static_cast<Index>(j); }
  Index row_b(std::size_t j) const noexcept { return static_cast<Index>(n_base + j); }
  Index row_ab(std::size_t i, std::size_t j) const noexcept {
    return static_cast<Index>((2 + i) * n_base + j);
  }
};

struct SobolResult {
  std::vector<std::string> names;
  std::vector<double> first;
  std::vector<double> total;
  std::size_t n_base = 0;       ///< rows actually used
  std::size_t dropped_rows = 0; ///< base rows removed for non-finite evaluations
  double variance = 0.0;
  std::vector<std::string> warnings;
};

inline SobolDesign saltelli_sample(std::vector<std::string> names, std::vector<Interval> bounds,
                                   std::size_t n_base, std::uint64_t seed) {
  if (names.size() != bounds.size()) throw Error("saltelli_sample: names and bounds differ in length");
  if (names.empty()) throw Error("saltelli_sample: no parameters");
  if (n_base < 2) throw Error("saltelli_sample: n_base must be at least 2");
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    const Interval& b = bounds[i];
    if (!std::isfinite(b.lo) || !std::isfinite(b.hi))
      throw Error("saltelli_sample: bounds of " + names[i] + " are not finite");
    if (!(b.hi > b.lo)) throw Error("saltelli_sample: degenerate bounds for parameter " + names[i]);
  }
  const std::size_t d = names.size();
  SobolDesign design;
  design.names = std::move(names);
  design.bounds = std::move(bounds);
  design.n_base = n_base;
  design.unit.resize(static_cast<Index>(n_base * (d + 2)), static_cast<Index>(d));

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t j = 0; j < n_base; ++j)
    for (std::size_t k = 0; k < d; ++k) design.unit(design.row_a(j), static_cast<Index>(k)) = u(rng);
  for (std::size_t j = 0; j < n_base; ++j)
    for (std::size_t k = 0; k < d; ++k) design.unit(design.row_b(j), static_cast<Index>(k)) = u(rng);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < n_base; ++j) {
      design.unit.row(design.row_ab(i, j)) = design.unit.row(design.row_a(j));
      design.unit(design.row_ab(i, j), static_cast<Index>(i)) =
          design.unit(design.row_b(j), static_cast<Index>(i));
    }

  design.points = design.unit;
  for (std::size_t k = 0; k < d; ++k) {
    const Interval& b = design.bounds[k];
    design.points.col(static_cast<Index>(k)) =
        (design.unit.col(static_cast<Index>(k)).array() * b.width() + b.lo).matrix();
  }
  return design;
}

inline constexpr double kConstantOutputVariance = 1e-14;

/// Base rows with any non-finite evaluation (in A, B or any A_B^(i)) are
/// dropped whole; more than `max_drop_fraction` of them is an error.
inline SobolResult indices(const SobolDesign& design, const std::vector<double>& f,
                           double max_drop_fraction = 0.0) {
  if (f.size() != design.size())
    throw Error("sobol indices: " + std::to_string(f.size()) + " evaluations for a design of " +
                std::to_string(design.size()) + " points");
  const std::size_t d = design.dimension();
  const std::size_t n = design.n_base;

  std::vector<std::size_t> rows;
  rows.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    bool ok = std::isfinite(f[static_cast<std::size_t>(design.row_a(j))]) &&
              std::isfinite(f[static_cast<std::size_t>(design.row_b(j))]);
    for (std::size_t i = 0; ok && i < d; ++i) ok = std::isfinite(f[static_cast<std::size_t>(design.row_ab(i, j))]);
    if (ok) rows.push_back(j);
  }
  SobolResult out;
  out.names = design.names;
  out.dropped_rows = n - rows.size();
  if (out.dropped_rows > 0) {
    const double frac = static_cast<double>(out.dropped_rows) / static_cast<double>(n);
    if (frac > max_drop_fraction)
      throw Error("sobol indices: " + std::to_string(out.dropped_rows) + " of " + std::to_string(n) +
                  " design rows have infeasible evaluations; tighten the parameter bounds");
    out.warnings.push_back("dropped " + std::to_string(out.dropped_rows) +
                           " design rows with infeasible evaluations");
  }
  const double m = static_cast<double>(rows.size());
  if (rows.size() < 2) throw Error("sobol indices: fewer than two usable design rows");

  double mean = 0.0;
  for (std::size_t j : rows)
    mean += f[static_cast<std::size_t>(design.row_a(j))] + f[static_cast<std::size_t>(design.row_b(j))];
  mean /= 2.0 * m;
  double var = 0.0;
  for (std::size_t j : rows) {
    const double da = f[static_cast<std::size_t>(design.row_a(j))] - mean;
    const double db = f[static_cast<std::size_t>(design.row_b(j))] - mean;
    var += da * da + db * db;
  }
  var /= 2.0 * m - 1.0;
  if (var < kConstantOutputVariance) throw Error("constant output, indices undefined");

  out.variance = var;
  out.n_base = rows.size();
  out.first.resize(d);
  out.total.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    double s1 = 0.0, st = 0.0;
    for (std::size_t j : rows) {
      const double fa = f[static_cast<std::size_t>(design.row_a(j))];
      const double fb = f[static_cast<std::size_t>(design.row_b(j))];
      const double fab = f[static_cast<std::size_t>(design.row_ab(i, j))];
      s1 += fb * (fab - fa);
      st += (fa - fab) * (fa - fab);
    }
    out.first[i] = s1 / m / var;
    out.total[i] = st / (2.0 * m) / var;
  }
  return out;
}

/// Evaluates `f` on every design point; drdamp::Error from `f` becomes NaN.
inline std::vector<double> evaluate_design(const SobolDesign& design,
                                           const std::function<double(const Eigen::VectorXd&)>& f) {
  std::vector<double> out(design.size());
  for (std::size_t r = 0; r < design.size(); ++r) {
    const Eigen::VectorXd x = design.points.row(static_cast<Index>(r)).transpose();
    try {
      out[r] = f(x);
    } catch (const Error&) {
      out[r] = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return out;
}

struct SobolRanking {
  SobolResult result;
  std::vector<std::size_t> order; ///< parameter indices by descending total index
  std::vector<std::string> top;   ///< names of the first k
};

inline constexpr double kMaxInfeasibleFraction = 0.01;

/// Ranks the inputs of an arbitrary black-box function.
inline SobolRanking rank(std::vector<std::string> names, std::vector<Interval> bounds,
                         const std::function<double(const Eigen::VectorXd&)>& f, std::size_t n_base,
                         std::uint64_t seed, std::size_t top_k = 2) {
  const SobolDesign design = saltelli_sample(std::move(names), std::move(bounds), n_base, seed);
  SobolRanking r;
  r.result = indices(design, evaluate_design(design, f), kMaxInfeasibleFraction);
  r.order.resize(design.dimension());
  std::iota(r.order.begin(), r.order.end(), std::size_t{0});
  std::stable_sort(r.order.begin(), r.order.end(),
                   [&](std::size_t a, std::size_t b) { return r.result.total[a] > r.result.total[b]; });
  for (std::size_t i = 0; i < std::min(top_k, r.order.size()); ++i)
    r.top.push_back(r.result.names[r.order[i]]);
  return r;
}

/// Sensitivity of the closed-loop critical damping at disturbance `e` to every
/// controller parameter over its box in `base.bounds`.
inline SobolRanking rank_parameters(const TestbedConfig& config, const ControllerParams& base,
                                    std::size_t n_base, std::uint64_t seed, std::size_t top_k = 2,
                                    double e = 0.0) {
  std::vector<std::string> names;
  std::vector<Interval> bounds;
  for (std::size_t i = 0; i < kParamCount; ++i) {
    names.emplace_back(kParamNames[i]);
    bounds.push_back(base.bounds[i]);
  }
  const StateSpaceModel plant = linearize(config, e);
  auto f = [&](const Eigen::VectorXd& x) {
    ControllerParams p = base;
    for (std::size_t i = 0; i < kParamCount; ++i) p.values[i] = x(static_cast<Index>(i));
    ModeTracker tracker;
    return critical_mode(plant, p, tracker).damping;
  };
  return rank(std::move(names), std::move(bounds), f, n_base, seed, top_k);
}

} // namespace drdamp
