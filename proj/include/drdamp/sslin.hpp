#pragma once

// Linear small-signal analysis: modes, participation factors, residues,
// first-order eigenvalue-shift prediction, the lead-lag damping controller and
// its feedback interconnection with a plant.
//
// Feedback sign convention: every loop closed here is NEGATIVE feedback,
//   u_plant[input] = r - y_ctrl,   u_ctrl = y_plant[output].
// predict_shift() follows the same convention, so a positive residue times a
// positive controller response moves the eigenvalue to the left.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "drdamp/error.hpp"

namespace drdamp {

using Complex = std::complex<double>;
using Index = Eigen::Index;

// ---------------------------------------------------------------------------
// State-space models

struct StateSpaceModel {
  Eigen::MatrixXd a;
  Eigen::MatrixXd b;
  Eigen::MatrixXd c;
  Eigen::MatrixXd d;
  std::vector<std::string> state_names;
  std::vector<std::string> input_names;
  std::vector<std::string> output_names;

  Index n_states() const noexcept { return a.rows(); }
  Index n_inputs() const noexcept { return b.cols(); }
  Index n_outputs() const noexcept { return c.rows(); }

  void validate() const {
    const Index n = a.rows();
    if (a.cols() != n)
      throw Error("state matrix must be square, got " + std::to_string(a.rows()) +
                  "x" + std::to_string(a.cols()));
    if (b.rows() != n)
      throw Error("input matrix has " + std::to_string(b.rows()) +
                  " rows, expected " + std::to_string(n));
    if (c.cols() != n)
      throw Error("output matrix has " + std::to_string(c.cols()) +
                  " columns, expected " + std::to_string(n));
    if (d.rows() != c.rows() || d.cols() != b.cols())
      throw Error("feedthrough matrix must be " + std::to_string(c.rows()) + "x" +
                  std::to_string(b.cols()));
    if (!a.allFinite() || !b.allFinite() || !c.allFinite() || !d.allFinite())
      throw Error("state-space matrices contain non-finite entries");
    if (static_cast<Index>(state_names.size()) != n)
      throw Error("state_names has " + std::to_string(state_names.size()) +
                  " labels for " + std::to_string(n) + " states");
    if (static_cast<Index>(input_names.size()) != b.cols())
      throw Error("input_names does not match input count");
    if (static_cast<Index>(output_names.size()) != c.rows())
      throw Error("output_names does not match output count");
  }
};

namespace detail {
inline std::vector<std::string> default_labels(std::string_view prefix, Index n) {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) out.push_back(std::string(prefix) + std::to_string(i));
  return out;
}
} // namespace detail

/// Builds and validates a model; empty label lists get x0.., u0.., y0...
inline StateSpaceModel make_state_space(Eigen::MatrixXd a, Eigen::MatrixXd b,
                                        Eigen::MatrixXd c, Eigen::MatrixXd d,
                                        std::vector<std::string> state_names = {},
                                        std::vector<std::string> input_names = {},
                                        std::vector<std::string> output_names = {}) {
  StateSpaceModel m{std::move(a), std::move(b), std::move(c), std::move(d),
                    std::move(state_names), std::move(input_names),
                    std::move(output_names)};
  if (m.state_names.empty()) m.state_names = detail::default_labels("x", m.a.rows());
  if (m.input_names.empty()) m.input_names = detail::default_labels("u", m.b.cols());
  if (m.output_names.empty()) m.output_names = detail::default_labels("y", m.c.rows());
  m.validate();
  return m;
}

// ---------------------------------------------------------------------------
// Controller parameters

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x) const noexcept { return x >= lo && x <= hi; }
  double width() const noexcept { return hi - lo; }
  double clamp(double x) const noexcept { return std::clamp(x, lo, hi); }
};

enum class Param : std::size_t { k_m = 0, t_1, t_2, t_3, t_4, t_w };

inline constexpr std::size_t kParamCount = 6;
inline constexpr std::array<std::string_view, kParamCount> kParamNames{
    "k_m", "t_1", "t_2", "t_3", "t_4", "t_w"};

inline std::string_view param_name(Param p) {
  return kParamNames[static_cast<std::size_t>(p)];
}

inline Param param_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kParamCount; ++i)
    if (kParamNames[i] == name) return static_cast<Param>(i);
  throw Error("unknown controller parameter '" + std::string(name) + "'");
}

/// Tunable vector p = (K_m, T_1..T_4, T_w) of the washout + two lead-lag
/// damping controller, with per-parameter boxes.
///
/// Defaults: K_m = 9.6 and T_1 = 0.415 s; T_2 = T_3 = T_4 = 0.1 s so the second
/// lead-lag stage is neutral; washout T_w = 5 s. K_m = 0 is accepted and
/// means the controller is disconnected.
struct ControllerParams {
  std::array<double, kParamCount> values{9.6, 0.415, 0.1, 0.1, 0.1, 5.0};
  std::array<Interval, kParamCount> bounds{
      Interval{1.0, 30.0}, Interval{0.1, 1.0}, Interval{0.01, 0.1},
      Interval{0.1, 1.0},  Interval{0.01, 0.1}, Interval{1.0, 20.0}};

  double operator[](Param p) const noexcept { return values[static_cast<std::size_t>(p)]; }
  double& operator[](Param p) noexcept { return values[static_cast<std::size_t>(p)]; }
  const Interval& bound(Param p) const noexcept { return bounds[static_cast<std::size_t>(p)]; }
  Interval& bound(Param p) noexcept { return bounds[static_cast<std::size_t>(p)]; }

  double k_m() const noexcept { return (*this)[Param::k_m]; }
  double t_1() const noexcept { return (*this)[Param::t_1]; }
  double t_2() const noexcept { return (*this)[Param::t_2]; }
  double t_3() const noexcept { return (*this)[Param::t_3]; }
  double t_4() const noexcept { return (*this)[Param::t_4]; }
  double t_w() const noexcept { return (*this)[Param::t_w]; }

  ControllerParams with(Param p, double v) const {
    ControllerParams out = *this;
    out[p] = v;
    return out;
  }

  void validate() const {
    for (std::size_t i = 0; i < kParamCount; ++i)
      if (!std::isfinite(values[i]))
        throw Error("controller parameter " + std::string(kParamNames[i]) + " is not finite");
    if (k_m() < 0.0) throw Error("controller gain k_m must be non-negative");
    for (std::size_t i = 1; i < kParamCount; ++i)
      if (values[i] <= 0.0)
        throw Error("controller time constant " + std::string(kParamNames[i]) +
                    " must be positive, got " + std::to_string(values[i]));
  }

  void check_bounds() const {
    validate();
    for (std::size_t i = 0; i < kParamCount; ++i) {
      const auto& b = bounds[i];
      if (!(b.lo <= b.hi))
        throw Error("bound for " + std::string(kParamNames[i]) + " is empty");
      if (!b.contains(values[i]))
        throw Error("controller parameter " + std::string(kParamNames[i]) + " = " +
                    std::to_string(values[i]) + " outside [" + std::to_string(b.lo) +
                    ", " + std::to_string(b.hi) + "]");
    }
  }
};

/// G(s) = K_m * sT_w/(1+sT_w) * (1+sT_1)/(1+sT_2) * (1+sT_3)/(1+sT_4)
inline Complex controller_response(const ControllerParams& p, Complex s) {
  const Complex one{1.0, 0.0};
  return p.k_m() * (s * p.t_w() / (one + s * p.t_w())) *
         ((one + s * p.t_1()) / (one + s * p.t_2())) *
         ((one + s * p.t_3()) / (one + s * p.t_4()));
}

/// Three-state series realization: washout -> lead-lag 1 -> lead-lag 2 -> gain.
inline StateSpaceModel realize_controller(const ControllerParams& p) {
  p.validate();
  const double tw = p.t_w();
  const double t2 = p.t_2();
  const double t4 = p.t_4();
  const double a1 = p.t_1() / t2;
  const double a2 = p.t_3() / t4;
  const double k = p.k_m();

  // washout: x1' = (u - x1)/Tw, y1 = u - x1
  // stage i: x' = (y_prev - x)/T_lag, y = a*y_prev + (1 - a)*x
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 3);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(3, 1);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(1, 3);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(1, 1);

  a(0, 0) = -1.0 / tw;
  b(0, 0) = 1.0 / tw;

  a(1, 0) = -1.0 / t2;
  a(1, 1) = -1.0 / t2;
  b(1, 0) = 1.0 / t2;

  a(2, 0) = -a1 / t4;
  a(2, 1) = (1.0 - a1) / t4;
  a(2, 2) = -1.0 / t4;
  b(2, 0) = a1 / t4;

  c(0, 0) = -k * a2 * a1;
  c(0, 1) = k * a2 * (1.0 - a1);
  c(0, 2) = k * (1.0 - a2);
  d(0, 0) = k * a1 * a2;

  return make_state_space(std::move(a), std::move(b), std::move(c), std::move(d),
                          {"ctrl_washout", "ctrl_lead_lag_1", "ctrl_lead_lag_2"},
                          {"ctrl_in"}, {"ctrl_out"});
}

// ---------------------------------------------------------------------------
// Modes

/// zeta = -Re(lambda)/|lambda|.
inline double damping_ratio(Complex lambda) {
  const double mag = std::abs(lambda);
  if (mag == 0.0) throw Error("undamped zero eigenvalue");
  return -lambda.real() / mag;
}

struct ModeSet {
  Eigen::VectorXcd eigenvalues;
  Eigen::MatrixXcd right; ///< column i is t_i
  Eigen::MatrixXcd left;  ///< row i is v_i, left * right = I
  std::vector<double> damping_ratios;
  std::vector<double> frequencies_hz;
  double condition = 1.0; ///< 2-norm condition number of `right`
  std::vector<std::string> warnings;

  Index size() const noexcept { return eigenvalues.size(); }
};

inline constexpr double kDefectiveCondition = 1e12;

/// Eigen-decomposition sorted by ascending damping ratio (ties by ascending
/// |Im|, then positive imaginary part first), so index 0 is the critical mode.
/// A zero eigenvalue is given damping 0 in the sorted set.
inline ModeSet eigendecompose(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw Error("eigendecompose: state matrix must be square");
  if (!a.allFinite()) throw Error("eigendecompose: state matrix has non-finite entries");
  const Index n = a.rows();
  ModeSet out;
  if (n == 0) return out;

  Eigen::EigenSolver<Eigen::MatrixXd> solver(a, true);
  if (solver.info() != Eigen::Success)
    throw Error("eigen iteration did not converge for " + std::to_string(n) + "x" +
                std::to_string(n) + " state matrix");

  Eigen::VectorXcd lambda = solver.eigenvalues();
  Eigen::MatrixXcd t = solver.eigenvectors();
  for (Index i = 0; i < n; ++i) {
    const double nrm = t.col(i).norm();
    if (nrm > 0.0) t.col(i) /= nrm;
  }

  std::vector<double> zeta(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i)
    zeta[static_cast<std::size_t>(i)] = std::abs(lambda(i)) == 0.0 ? 0.0 : damping_ratio(lambda(i));

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index i, Index j) {
    const double zi = zeta[static_cast<std::size_t>(i)];
    const double zj = zeta[static_cast<std::size_t>(j)];
    if (zi != zj) return zi < zj;
    const double wi = std::abs(lambda(i).imag());
    const double wj = std::abs(lambda(j).imag());
    if (wi != wj) return wi < wj;
    return lambda(i).imag() > lambda(j).imag();
  });

  out.eigenvalues.resize(n);
  out.right.resize(n, n);
  out.damping_ratios.resize(static_cast<std::size_t>(n));
  out.frequencies_hz.resize(static_cast<std::size_t>(n));
  for (Index k = 0; k < n; ++k) {
    const Index src = order[static_cast<std::size_t>(k)];
    out.eigenvalues(k) = lambda(src);
    out.right.col(k) = t.col(src);
    out.damping_ratios[static_cast<std::size_t>(k)] = zeta[static_cast<std::size_t>(src)];
    out.frequencies_hz[static_cast<std::size_t>(k)] = std::abs(lambda(src).imag()) / (2.0 * M_PI);
  }

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(out.right);
  const auto& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  out.condition = smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity();
  if (out.condition > kDefectiveCondition) {
    out.warnings.push_back("near-defective state matrix: eigenvector condition " +
                           std::to_string(out.condition) + " exceeds 1e12");
    out.left = out.right.completeOrthogonalDecomposition().pseudoInverse();
  } else {
    out.left = out.right.partialPivLu().inverse();
  }
  return out;
}

inline ModeSet eigendecompose(const StateSpaceModel& model) { return eigendecompose(model.a); }

struct ParticipationMatrix {
  Eigen::MatrixXd values; ///< state x mode, columns sum to 1
  std::vector<std::string> labels;
};

/// p(s, i) = |t_si * v_is| normalized so each mode's column sums to one.
inline ParticipationMatrix participation_factors(const ModeSet& modes,
                                                 std::vector<std::string> labels = {}) {
  const Index n = modes.size();
  ParticipationMatrix pm;
  pm.values.resize(n, n);
  for (Index i = 0; i < n; ++i) {
    double total = 0.0;
    for (Index s = 0; s < n; ++s) {
      const double v = std::abs(modes.right(s, i) * modes.left(i, s));
      pm.values(s, i) = v;
      total += v;
    }
    if (total > 0.0) pm.values.col(i) /= total;
  }
  pm.labels = labels.empty() ? detail::default_labels("x", n) : std::move(labels);
  return pm;
}

inline constexpr double kSimpleModeGap = 1e-9;

/// Residue of mode `mode` in the transfer function output <- input:
/// r_i = (c_out . t_i)(v_i . b_in). Refuses repeated eigenvalues.
inline Complex residue(const StateSpaceModel& model, const ModeSet& modes, Index mode,
                       Index input, Index output) {
  if (mode < 0 || mode >= modes.size()) throw Error("residue: mode index out of range");
  if (input < 0 || input >= model.n_inputs()) throw Error("residue: input index out of range");
  if (output < 0 || output >= model.n_outputs()) throw Error("residue: output index out of range");
  const Complex li = modes.eigenvalues(mode);
  for (Index j = 0; j < modes.size(); ++j) {
    if (j == mode) continue;
    if (std::abs(modes.eigenvalues(j) - li) <= kSimpleModeGap * std::max(1.0, std::abs(li)))
      throw Error("residue undefined for non-simple mode");
  }
  const Complex ct = (model.c.row(output).cast<Complex>() * modes.right.col(mode))(0);
  const Complex vb = (modes.left.row(mode) * model.b.col(input).cast<Complex>())(0);
  return ct * vb;
}

inline Complex residue(const StateSpaceModel& model, Index mode, Index input, Index output) {
  return residue(model, eigendecompose(model.a), mode, input, output);
}

inline constexpr double kPoleTolerance = 1e-9;

/// First-order shift of eigenvalue `lambda` when the controller closes a
/// negative-feedback loop around the channel with the given residue:
/// d_lambda = -r * G(lambda).
inline Complex predict_shift(Complex r, const ControllerParams& params, Complex lambda) {
  params.validate();
  for (double tc : {params.t_w(), params.t_2(), params.t_4()}) {
    const Complex pole{-1.0 / tc, 0.0};
    if (std::abs(lambda - pole) < kPoleTolerance)
      throw Error("eigenvalue coincides with a controller pole at " + std::to_string(pole.real()));
  }
  return -r * controller_response(params, lambda);
}

// ---------------------------------------------------------------------------
// Interconnection

/// Negative-feedback interconnection of a SISO controller between plant output
/// `output_channel` and plant input `input_channel`. External plant inputs and
/// outputs are kept; state order is plant states then controller states.
inline StateSpaceModel close_loop(const StateSpaceModel& plant, const StateSpaceModel& controller,
                                  Index input_channel, Index output_channel) {
  plant.validate();
  controller.validate();
  if (controller.n_inputs() != 1 || controller.n_outputs() != 1)
    throw Error("close_loop: controller must be single-input single-output");
  if (input_channel < 0 || input_channel >= plant.n_inputs())
    throw Error("close_loop: input channel " + std::to_string(input_channel) + " out of range");
  if (output_channel < 0 || output_channel >= plant.n_outputs())
    throw Error("close_loop: output channel " + std::to_string(output_channel) + " out of range");

  const Index np = plant.n_states();
  const Index nc = controller.n_states();
  const Index nu = plant.n_inputs();
  const Index ny = plant.n_outputs();

  const double dp = plant.d(output_channel, input_channel);
  const double dc = controller.d(0, 0);
  const double loop = 1.0 + dp * dc;
  if (std::abs(loop) < 1e-12)
    throw Error("ill-posed algebraic loop on input channel " +
                plant.input_names[static_cast<std::size_t>(input_channel)] + " / output channel " +
                plant.output_names[static_cast<std::size_t>(output_channel)]);
  const double g = 1.0 / loop;

  const Eigen::VectorXd bi = plant.b.col(input_channel);
  const Eigen::RowVectorXd cj = plant.c.row(output_channel);
  const Eigen::RowVectorXd dj = plant.d.row(output_channel);
  const Eigen::VectorXd di = plant.d.col(input_channel);

  // y_c = g*(Cc xc + dc*cj xp + dc*dj r),  y_j = cj xp + dj r - dp*y_c
  const Eigen::MatrixXd yc_xp = g * dc * cj;
  const Eigen::MatrixXd yc_xc = g * controller.c;
  const Eigen::MatrixXd yc_r = g * dc * dj;
  const Eigen::MatrixXd yj_xp = cj - dp * yc_xp;
  const Eigen::MatrixXd yj_xc = -dp * yc_xc;
  const Eigen::MatrixXd yj_r = dj - dp * yc_r;

  Eigen::MatrixXd a(np + nc, np + nc);
  a.topLeftCorner(np, np) = plant.a - bi * yc_xp;
  a.topRightCorner(np, nc) = -bi * yc_xc;
  a.bottomLeftCorner(nc, np) = controller.b * yj_xp;
  a.bottomRightCorner(nc, nc) = controller.a + controller.b * yj_xc;

  Eigen::MatrixXd b(np + nc, nu);
  b.topRows(np) = plant.b - bi * yc_r;
  b.bottomRows(nc) = controller.b * yj_r;

  Eigen::MatrixXd c(ny, np + nc);
  c.leftCols(np) = plant.c - di * yc_xp;
  c.rightCols(nc) = -di * yc_xc;

  Eigen::MatrixXd d = plant.d - di * yc_r;

  std::vector<std::string> states = plant.state_names;
  states.insert(states.end(), controller.state_names.begin(), controller.state_names.end());
  return make_state_space(std::move(a), std::move(b), std::move(c), std::move(d),
                          std::move(states), plant.input_names, plant.output_names);
}

// ---------------------------------------------------------------------------
// Time response

struct StepResponse {
  std::vector<double> time;
  Eigen::MatrixXd outputs; ///< one row per time sample, one column per output
  bool diverging = false;
};

inline constexpr double kDivergenceLevel = 1e6;

/// Unit step on `input_index`, exact zero-order-hold discretization
/// (matrix exponential of [A b; 0 0] dt). Samples t = 0, dt, ..., <= horizon.
inline StepResponse step_response(const StateSpaceModel& model, Index input_index,
                                  double horizon_s, double dt_s) {
  model.validate();
  if (!(dt_s > 0.0)) throw Error("step_response: dt must be positive");
  if (!(horizon_s >= dt_s)) throw Error("step_response: horizon must be at least dt");
  if (input_index < 0 || input_index >= model.n_inputs())
    throw Error("step_response: input index out of range");

  const Index n = model.n_states();
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + 1, n + 1);
  aug.topLeftCorner(n, n) = model.a * dt_s;
  aug.topRightCorner(n, 1) = model.b.col(input_index) * dt_s;
  const Eigen::MatrixXd e = aug.exp();
  const Eigen::MatrixXd phi = e.topLeftCorner(n, n);
  const Eigen::VectorXd gamma = e.topRightCorner(n, 1);

  const auto steps = static_cast<Index>(std::floor(horizon_s / dt_s + 1e-9));
  StepResponse out;
  out.time.reserve(static_cast<std::size_t>(steps + 1));
  out.outputs.resize(steps + 1, model.n_outputs());
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  const Eigen::VectorXd dcol = model.d.col(input_index);
  for (Index k = 0; k <= steps; ++k) {
    out.time.push_back(static_cast<double>(k) * dt_s);
    const Eigen::VectorXd y = model.c * x + dcol;
    out.outputs.row(k) = y.transpose();
    if (!out.diverging && (!y.allFinite() || y.cwiseAbs().maxCoeff() > kDivergenceLevel))
      out.diverging = true;
    x = phi * x + gamma;
  }
  return out;
}

/// Earliest time after which |y - final_value| stays below band*|step|
/// (unit step); returns the horizon if the band is never entered for good.
inline double settling_time(const StepResponse& r, Index output, double final_value,
                            double band = 0.02) {
  const Index n = r.outputs.rows();
  for (Index k = n - 1; k >= 0; --k) {
    if (std::abs(r.outputs(k, output) - final_value) >= band)
      return k + 1 < n ? r.time[static_cast<std::size_t>(k + 1)] : r.time.back();
  }
  return 0.0;
}

} // namespace drdamp
