#pragma once

// Hermite polynomial-chaos surrogates fitted by least-squares regression on
// standard-normal design points.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>

#include "drdamp/error.hpp"
#include "drdamp/sslin.hpp"

namespace drdamp {

/// Probabilists' Hermite polynomial He_k(x).
inline double hermite(int k, double x) {
  if (k < 0) throw Error("hermite: negative order");
  if (k == 0) return 1.0;
  double prev = 1.0, cur = x;
  for (int j = 1; j < k; ++j) {
    const double next = x * cur - j * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

/// psi_k = He_k / sqrt(k!), orthonormal under N(0, 1).
inline double hermite_normalized(int k, double x) {
  return hermite(k, x) / std::sqrt(std::tgamma(static_cast<double>(k) + 1.0));
}

// ---------------------------------------------------------------------------
// Multi-indices

struct MultiIndexSet {
  int dimension = 0;
  int order = 0;
  std::vector<std::vector<int>> terms; ///< graded lexicographic, terms[0] = 0

  std::size_t size() const noexcept { return terms.size(); }
};

inline std::size_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::size_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::size_t>(n - k + i) / static_cast<std::size_t>(i);
  return r;
}

namespace detail {
inline void compositions(int dim, int pos, int left, std::vector<int>& cur,
                         std::vector<std::vector<int>>& out) {
  if (pos == dim - 1) {
    cur[static_cast<std::size_t>(pos)] = left;
    out.push_back(cur);
    return;
  }
  for (int v = left; v >= 0; --v) {
    cur[static_cast<std::size_t>(pos)] = v;
    compositions(dim, pos + 1, left - v, cur, out);
  }
}
} // namespace detail

/// Total-degree set {alpha : |alpha| <= order}, ordered by degree and then
/// lexicographically (larger leading exponent first).
inline MultiIndexSet make_multi_index_set(int dimension, int order) {
  if (dimension < 1) throw Error("multi-index set needs dimension >= 1");
  if (order < 0) throw Error("multi-index set needs order >= 0");
  MultiIndexSet s{dimension, order, {}};
  std::vector<int> cur(static_cast<std::size_t>(dimension), 0);
  for (int deg = 0; deg <= order; ++deg) detail::compositions(dimension, 0, deg, cur, s.terms);
  return s;
}

inline double basis_value(const std::vector<int>& alpha, const Eigen::VectorXd& xi) {
  double v = 1.0;
  for (std::size_t j = 0; j < alpha.size(); ++j)
    if (alpha[j] != 0) v *= hermite_normalized(alpha[j], xi(static_cast<Index>(j)));
  return v;
}

/// Rows = points (one per row of `xi`), columns = basis terms.
inline Eigen::MatrixXd basis_matrix(const MultiIndexSet& set, const Eigen::MatrixXd& xi) {
  if (xi.cols() != set.dimension) throw Error("basis_matrix: point dimension mismatch");
  Eigen::MatrixXd psi(xi.rows(), static_cast<Index>(set.size()));
  for (Index r = 0; r < xi.rows(); ++r) {
    const Eigen::VectorXd x = xi.row(r).transpose();
    for (std::size_t k = 0; k < set.size(); ++k) psi(r, static_cast<Index>(k)) = basis_value(set.terms[k], x);
  }
  return psi;
}

// ---------------------------------------------------------------------------
// Standardization

/// x = mean + std .* (L xi) with L the Cholesky factor of the correlation
/// (identity when uncorrelated).
struct Standardization {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;
  std::optional<Eigen::MatrixXd> correlation;

  Index dimension() const noexcept { return mean.size(); }

  static Standardization identity(Index n) {
    return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Ones(n), std::nullopt};
  }

  void validate() const {
    if (mean.size() != std.size()) throw Error("standardization: mean and std differ in length");
    for (Index i = 0; i < std.size(); ++i)
      if (!(std(i) > 0.0) || !std::isfinite(std(i)) || !std::isfinite(mean(i)))
        throw Error("standardization: std must be positive and finite in dimension " + std::to_string(i));
    if (correlation) (void)factor();
  }

  Eigen::MatrixXd factor() const {
    const Index n = dimension();
    if (!correlation) return Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd& r = *correlation;
    if (r.rows() != n || r.cols() != n) throw Error("correlation matrix has the wrong size");
    if ((r - r.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw Error("correlation matrix is not symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(r);
    if (llt.info() != Eigen::Success) throw Error("correlation matrix is not positive definite");
    return llt.matrixL();
  }

  Eigen::VectorXd to_standard(const Eigen::VectorXd& x) const {
    Eigen::VectorXd z = (x - mean).cwiseQuotient(std);
    if (correlation) z = factor().triangularView<Eigen::Lower>().solve(z);
    return z;
  }

  Eigen::VectorXd to_raw(const Eigen::VectorXd& xi) const {
    Eigen::VectorXd z = correlation ? Eigen::VectorXd(factor() * xi) : xi;
    return mean + std.cwiseProduct(z);
  }
};

struct StandardizedSamples {
  Eigen::MatrixXd xi;
  Standardization transform;
};

/// Per-dimension (x - mean)/std, then decorrelation when a correlation matrix
/// is supplied (Gaussian copula with normal marginals).
inline StandardizedSamples standardize(const Eigen::MatrixXd& samples,
                                       std::optional<Eigen::MatrixXd> correlation = std::nullopt) {
  if (samples.rows() < 2) throw Error("standardize: need at least two samples");
  const Index n = samples.cols();
  Standardization st{samples.colwise().mean().transpose(), Eigen::VectorXd(n), std::move(correlation)};
  for (Index j = 0; j < n; ++j) {
    const double s = std::sqrt((samples.col(j).array() - st.mean(j)).square().sum() /
                               static_cast<double>(samples.rows() - 1));
    if (!(s > 1e-12)) throw Error("standardize: dimension " + std::to_string(j) + " has zero spread");
    st.std(j) = s;
  }
  st.validate();
  StandardizedSamples out{Eigen::MatrixXd(samples.rows(), n), st};
  for (Index r = 0; r < samples.rows(); ++r) out.xi.row(r) = st.to_standard(samples.row(r).transpose()).transpose();
  return out;
}

// ---------------------------------------------------------------------------
// Surrogate

struct FitDiagnostics {
  double condition = 1.0;
  double residual_norm = 0.0;
  std::size_t n_samples = 0;
  std::vector<std::string> warnings;
};

struct PceSurrogate {
  MultiIndexSet basis;
  Eigen::VectorXd coefficients;
  Standardization transform;
  FitDiagnostics diagnostics;

  int dimension() const noexcept { return basis.dimension; }
  int order() const noexcept { return basis.order; }
};

inline constexpr double kPceConditionWarning = 1e8;
inline constexpr double kDefaultOversampling = 2.0;

/// Least-squares fit of responses `d` on standard-space points `xi`.
inline PceSurrogate fit(const Eigen::MatrixXd& xi, const Eigen::VectorXd& d, int order,
                        std::optional<Standardization> transform = std::nullopt,
                        double oversampling = kDefaultOversampling) {
  const int n = static_cast<int>(xi.cols());
  if (xi.rows() != d.size()) throw Error("pce fit: design and response lengths differ");
  if (!d.allFinite()) throw Error("pce fit: responses contain non-finite values");
  PceSurrogate s;
  s.basis = make_multi_index_set(n, order);
  const auto na = static_cast<double>(s.basis.size());
  if (static_cast<double>(xi.rows()) < oversampling * na)
    throw Error("pce fit: " + std::to_string(xi.rows()) + " samples for " + std::to_string(s.basis.size()) +
                " terms; need at least " + std::to_string(static_cast<long>(std::ceil(oversampling * na))));
  s.transform = transform ? *transform : Standardization::identity(n);
  s.transform.validate();
  if (s.transform.dimension() != n) throw Error("pce fit: standardization dimension mismatch");

  const Eigen::MatrixXd psi = basis_matrix(s.basis, xi);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(psi, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  if (!(smin > smax * 1e-12))
    throw Error("pce fit: rank-deficient design; use more samples or a lower order");
  s.coefficients = svd.solve(d);
  s.diagnostics.condition = smax / smin;
  s.diagnostics.residual_norm = (psi * s.coefficients - d).norm();
  s.diagnostics.n_samples = static_cast<std::size_t>(xi.rows());
  if (s.diagnostics.condition > kPceConditionWarning)
    s.diagnostics.warnings.push_back("regression condition estimate " + std::to_string(s.diagnostics.condition) +
                                     " exceeds 1e8");
  return s;
}

inline double evaluate_standard(const PceSurrogate& s, const Eigen::VectorXd& xi) {
  double v = 0.0;
  for (std::size_t k = 0; k < s.basis.size(); ++k)
    v += s.coefficients(static_cast<Index>(k)) * basis_value(s.basis.terms[k], xi);
  return v;
}

/// Evaluates at a raw (unstandardized) point.
inline double evaluate(const PceSurrogate& s, const Eigen::VectorXd& x) {
  return evaluate_standard(s, s.transform.to_standard(x));
}

inline double evaluate(const PceSurrogate& s, double x) {
  return evaluate(s, Eigen::VectorXd::Constant(1, x));
}

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

inline Moments moments(const PceSurrogate& s) {
  return {s.coefficients(0), s.coefficients.tail(s.coefficients.size() - 1).squaredNorm()};
}

// ---------------------------------------------------------------------------
// Distribution of the surrogate output

struct PdfEstimate {
  std::vector<double> bin_centers;
  std::vector<double> mass;       ///< sums to 1
  double bin_width = 0.0;
  std::vector<double> grid;
  std::vector<double> density;    ///< Gaussian KDE on `grid`
  double bandwidth = 0.0;
  double sample_mean = 0.0;
  double sample_std = 0.0;
  double support_lo = 0.0;
  double support_hi = 0.0;
  double negative_mass = 0.0;     ///< share of samples with damping < 0
  std::size_t n_samples = 0;
};

inline constexpr std::size_t kKdeGridPoints = 1024;

/// Pushes n standard-normal draws through the surrogate.
inline PdfEstimate pdf_mc(const PceSurrogate& s, std::size_t n_samples, std::uint64_t seed,
                          std::size_t n_bins = 50) {
  if (n_samples < 1000) throw Error("pdf_mc: need at least 1000 samples");
  if (n_bins < 1) throw Error("pdf_mc: need at least one bin");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> y(n_samples);
  Eigen::VectorXd xi(s.dimension());
  for (auto& v : y) {
    for (Index j = 0; j < xi.size(); ++j) xi(j) = g(rng);
    v = evaluate_standard(s, xi);
  }

  PdfEstimate p;
  p.n_samples = n_samples;
  const auto [mn, mx] = std::minmax_element(y.begin(), y.end());
  p.support_lo = *mn;
  p.support_hi = *mx;
  double sum = 0.0;
  for (double v : y) sum += v;
  p.sample_mean = sum / static_cast<double>(n_samples);
  double ss = 0.0;
  std::size_t neg = 0;
  for (double v : y) {
    ss += (v - p.sample_mean) * (v - p.sample_mean);
    if (v < 0.0) ++neg;
  }
  p.sample_std = std::sqrt(ss / static_cast<double>(n_samples - 1));
  p.negative_mass = static_cast<double>(neg) / static_cast<double>(n_samples);

  const double span = p.support_hi - p.support_lo;
  const double scale = std::max(1.0, std::abs(p.sample_mean));
  if (span <= 1e-12 * scale) {
    p.bin_centers = {p.sample_mean};
    p.mass = {1.0};
    p.bin_width = 0.0;
  } else {
    p.bin_width = span / static_cast<double>(n_bins);
    p.bin_centers.resize(n_bins);
    p.mass.assign(n_bins, 0.0);
    for (std::size_t b = 0; b < n_bins; ++b)
      p.bin_centers[b] = p.support_lo + (static_cast<double>(b) + 0.5) * p.bin_width;
    for (double v : y) {
      auto b = static_cast<std::size_t>((v - p.support_lo) / p.bin_width);
      p.mass[std::min(b, n_bins - 1)] += 1.0;
    }
    for (auto& m : p.mass) m /= static_cast<double>(n_samples);
  }

  // Silverman's rule; a tiny floor keeps the degenerate case integrable.
  const double q_sigma = p.sample_std;
  p.bandwidth = std::max(1.06 * q_sigma * std::pow(static_cast<double>(n_samples), -0.2), 1e-9 * scale);
  const double h = p.bandwidth;
  const double lo = p.support_lo - 5.0 * h;
  const double hi = p.support_hi + 5.0 * h;
  const double step = (hi - lo) / static_cast<double>(kKdeGridPoints - 1);
  p.grid.resize(kKdeGridPoints);
  p.density.assign(kKdeGridPoints, 0.0);
  for (std::size_t i = 0; i < kKdeGridPoints; ++i) p.grid[i] = lo + step * static_cast<double>(i);

  // Bin the samples on the grid and convolve with the kernel.
  std::vector<double> counts(kKdeGridPoints, 0.0);
  for (double v : y) {
    const double pos = (v - lo) / step;
    const auto i = std::min(static_cast<std::size_t>(pos), kKdeGridPoints - 2);
    const double w = pos - static_cast<double>(i);
    counts[i] += 1.0 - w;
    counts[i + 1] += w;
  }
  const auto reach = static_cast<long>(std::ceil(6.0 * h / step));
  const double norm = 1.0 / (static_cast<double>(n_samples) * h * std::sqrt(2.0 * M_PI));
  for (std::size_t i = 0; i < kKdeGridPoints; ++i) {
    if (counts[i] == 0.0) continue;
    const long ii = static_cast<long>(i);
    for (long j = std::max(0L, ii - reach); j <= std::min<long>(kKdeGridPoints - 1, ii + reach); ++j) {
      const double u = (p.grid[static_cast<std::size_t>(j)] - p.grid[i]) / h;
      p.density[static_cast<std::size_t>(j)] += counts[i] * norm * std::exp(-0.5 * u * u);
    }
  }
  return p;
}

/// Trapezoid integral of the density curve.
inline double density_integral(const PdfEstimate& p) {
  double total = 0.0;
  for (std::size_t i = 1; i < p.grid.size(); ++i)
    total += 0.5 * (p.density[i] + p.density[i - 1]) * (p.grid[i] - p.grid[i - 1]);
  return total;
}

// ---------------------------------------------------------------------------
// Validation

struct ErrorReport {
  double rmse = 0.0;
  double aae = 0.0;
  std::size_t n_validation = 0;
};

/// `points` holds one raw point per row.
inline ErrorReport error_metrics(const PceSurrogate& s, const Eigen::MatrixXd& points,
                                 const Eigen::VectorXd& responses) {
  if (points.rows() == 0) throw Error("error_metrics: empty validation set");
  if (points.rows() < 2) throw Error("error_metrics: need at least two validation points");
  if (points.rows() != responses.size()) throw Error("error_metrics: point and response counts differ");
  double se = 0.0, ae = 0.0;
  for (Index r = 0; r < points.rows(); ++r) {
    const double err = evaluate(s, Eigen::VectorXd(points.row(r).transpose())) - responses(r);
    se += err * err;
    ae += std::abs(err);
  }
  const auto n = static_cast<double>(points.rows());
  return {std::sqrt(se / n), ae / n, static_cast<std::size_t>(points.rows())};
}

// ---------------------------------------------------------------------------
// Design points and 1-D helpers

/// n standard-normal points whose raw images fall inside `support`
/// (rejection sampling); returns the standard-space points.
inline Eigen::MatrixXd sample_design(const Standardization& st, std::size_t n, std::uint64_t seed,
                                     const std::vector<Interval>& support = {}) {
  st.validate();
  const Index dim = st.dimension();
  if (!support.empty() && static_cast<Index>(support.size()) != dim)
    throw Error("sample_design: support dimension mismatch");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd xi(static_cast<Index>(n), dim);
  Eigen::VectorXd z(dim);
  std::size_t filled = 0, tries = 0;
  const std::size_t max_tries = 1000 * n + 1000;
  while (filled < n) {
    if (++tries > max_tries) throw Error("sample_design: support captures too little probability mass");
    for (Index j = 0; j < dim; ++j) z(j) = g(rng);
    const Eigen::VectorXd x = st.to_raw(z);
    bool inside = true;
    for (std::size_t j = 0; j < support.size(); ++j)
      inside = inside && support[j].contains(x(static_cast<Index>(j)));
    if (!inside) continue;
    xi.row(static_cast<Index>(filled++)) = z.transpose();
  }
  return xi;
}

/// Latin-hypercube variant of sample_design: each coordinate takes one draw
/// from each of n equal-probability strata of the standard normal truncated to
/// the support, with independently shuffled columns. Needs uncorrelated inputs.
inline Eigen::MatrixXd stratified_design(const Standardization& st, std::size_t n, std::uint64_t seed,
                                         const std::vector<Interval>& support = {}) {
  st.validate();
  const Index dim = st.dimension();
  if (st.correlation) throw Error("stratified_design: correlated inputs are not supported");
  if (!support.empty() && static_cast<Index>(support.size()) != dim)
    throw Error("stratified_design: support dimension mismatch");
  if (n == 0) throw Error("stratified_design: need at least one point");
  const boost::math::normal nd;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd xi(static_cast<Index>(n), dim);
  std::vector<std::size_t> order(n);
  for (Index j = 0; j < dim; ++j) {
    double plo = 0.0, phi = 1.0;
    if (!support.empty()) {
      const Interval& b = support[static_cast<std::size_t>(j)];
      plo = boost::math::cdf(nd, (b.lo - st.mean(j)) / st.std(j));
      phi = boost::math::cdf(nd, (b.hi - st.mean(j)) / st.std(j));
      if (!(phi - plo > 1e-12)) throw Error("stratified_design: support captures too little probability mass");
    }
    for (std::size_t k = 0; k < n; ++k) order[k] = k;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t k = 0; k < n; ++k) {
      const double q = (static_cast<double>(order[k]) + u(rng)) / static_cast<double>(n);
      const double p = std::clamp(plo + (phi - plo) * q, 1e-300, 1.0 - 1e-16);
      xi(static_cast<Index>(k), j) = boost::math::quantile(nd, p);
    }
  }
  return xi;
}

/// Monomial coefficients (ascending powers of the raw variable) of a 1-D
/// surrogate.
inline std::vector<double> power_series(const PceSurrogate& s) {
  if (s.dimension() != 1) throw Error("power_series: surrogate is not one-dimensional");
  const int m = s.order();
  // He_k in powers of xi
  std::vector<std::vector<double>> he(static_cast<std::size_t>(m) + 1);
  he[0] = {1.0};
  if (m >= 1) he[1] = {0.0, 1.0};
  for (int k = 1; k < m; ++k) {
    std::vector<double> next(static_cast<std::size_t>(k) + 2, 0.0);
    for (std::size_t i = 0; i < he[static_cast<std::size_t>(k)].size(); ++i)
      next[i + 1] += he[static_cast<std::size_t>(k)][i];
    for (std::size_t i = 0; i < he[static_cast<std::size_t>(k) - 1].size(); ++i)
      next[i] -= k * he[static_cast<std::size_t>(k) - 1][i];
    he[static_cast<std::size_t>(k) + 1] = std::move(next);
  }
  std::vector<double> in_xi(static_cast<std::size_t>(m) + 1, 0.0);
  for (std::size_t t = 0; t < s.basis.size(); ++t) {
    const int k = s.basis.terms[t][0];
    const double c = s.coefficients(static_cast<Index>(t)) / std::sqrt(std::tgamma(k + 1.0));
    for (std::size_t i = 0; i < he[static_cast<std::size_t>(k)].size(); ++i)
      in_xi[i] += c * he[static_cast<std::size_t>(k)][i];
  }
  // xi = a + b x with a = -mu/sigma, b = 1/sigma
  const double b = 1.0 / s.transform.std(0);
  const double a = -s.transform.mean(0) * b;
  std::vector<double> out(static_cast<std::size_t>(m) + 1, 0.0);
  for (int k = 0; k <= m; ++k) {
    const double ck = in_xi[static_cast<std::size_t>(k)];
    if (ck == 0.0) continue;
    for (int j = 0; j <= k; ++j)
      out[static_cast<std::size_t>(j)] +=
          ck * static_cast<double>(binomial(k, j)) * std::pow(b, j) * std::pow(a, k - j);
  }
  return out;
}

} // namespace drdamp
