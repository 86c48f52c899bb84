#pragma once

// Single-machine infinite-bus plant (Heffron-Phillips flux-decay model with a
// static exciter). The disturbance e shifts the injected power P = p_ref + e,
// which moves the equilibrium and therefore the linearization constants K1..K6.
//
// States  : delta (rad), omega (pu speed deviation), eq_prime (pu), efd (pu)
// Inputs  : u_stab  stabilizer injection (the feedback channel, index 0)
//           p_m     mechanical power step (disturbance channel, index 1)
// Outputs : omega (feedback signal, index 0), delta (index 1)
//
// The stabilizer injection enters the AVR summing junction with a negative sign,
// so the negative-feedback loop u_stab = -G(s)*omega applies
// dVref = +stabilizer_gain * G(s) * omega, the usual PSS polarity.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "drdamp/sslin.hpp"

namespace drdamp {

struct TestbedConfig {
  double inertia_h = 3.5;          ///< H, s
  double damping = 1.0;            ///< D, pu torque / pu speed
  double x_d = 1.4;                ///< pu
  double x_d_prime = 0.3;          ///< pu
  double x_q = 1.0;                ///< pu
  double x_e = 0.1;                ///< external reactance, pu
  double t_d0_prime = 8.0;         ///< s
  double exciter_gain = 100.0;     ///< K_A
  double exciter_time = 0.05;      ///< T_A, s
  double terminal_voltage = 1.0;   ///< regulated terminal voltage, pu
  double bus_voltage = 1.0;        ///< infinite-bus voltage, pu
  double nominal_frequency = 50.0; ///< Hz
  double p_ref = 1.0;              ///< reference injected power, pu
  double stabilizer_gain = 0.1;    ///< pu exciter reference per pu stabilizer output
  Interval disturbance{-1.0, 1.0}; ///< support of e, pu

  void validate_parameters() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v))
        throw Error(std::string("testbed: ") + name + " must be positive");
    };
    positive(inertia_h, "inertia_h");
    positive(x_d, "x_d");
    positive(x_d_prime, "x_d_prime");
    positive(x_q, "x_q");
    positive(x_e, "x_e");
    positive(t_d0_prime, "t_d0_prime");
    positive(exciter_gain, "exciter_gain");
    positive(exciter_time, "exciter_time");
    positive(terminal_voltage, "terminal_voltage");
    positive(bus_voltage, "bus_voltage");
    positive(nominal_frequency, "nominal_frequency");
    positive(stabilizer_gain, "stabilizer_gain");
    if (!(damping >= 0.0)) throw Error("testbed: damping must be non-negative");
    if (!(x_d >= x_d_prime)) throw Error("testbed: x_d must not be below x_d_prime");
    if (!(disturbance.lo < disturbance.hi))
      throw Error("testbed: disturbance bounds must satisfy e_min < e_max");
  }
};

struct OperatingPoint {
  double power = 0.0;     ///< P = p_ref + e, pu
  double delta = 0.0;     ///< rotor angle against the infinite bus, rad
  double eq_prime = 0.0;  ///< E'_q, pu
  double efd = 0.0;       ///< field voltage, pu
  double i_d = 0.0, i_q = 0.0, v_d = 0.0, v_q = 0.0;
  std::array<double, 6> k{}; ///< K1..K6
  double residual = 0.0;  ///< |P_e(delta) - P|
};

inline constexpr double kEquilibriumResidual = 1e-10;

namespace detail {

struct RotorQuantities {
  double i_q, i_d, v_d, v_q, eq_prime;
  bool valid;
};

// Steady state at rotor angle delta with the terminal voltage held at its
// setpoint (the AVR reference absorbs the finite-gain offset).
inline RotorQuantities rotor_quantities(const TestbedConfig& c, double delta) {
  RotorQuantities q{};
  q.i_q = c.bus_voltage * std::sin(delta) / (c.x_q + c.x_e);
  q.v_d = c.x_q * q.i_q;
  const double vq2 = c.terminal_voltage * c.terminal_voltage - q.v_d * q.v_d;
  q.valid = vq2 > 0.0;
  q.v_q = std::sqrt(std::max(vq2, 0.0));
  q.i_d = (q.v_q - c.bus_voltage * std::cos(delta)) / c.x_e;
  q.eq_prime = q.v_q + c.x_d_prime * q.i_d;
  return q;
}

// Electrical power from the flux-decay model at (delta, E'_q).
inline double electrical_power(const TestbedConfig& c, double delta, double eq_prime) {
  const double iq = c.bus_voltage * std::sin(delta) / (c.x_q + c.x_e);
  const double id = (eq_prime - c.bus_voltage * std::cos(delta)) / (c.x_d_prime + c.x_e);
  return eq_prime * iq + (c.x_q - c.x_d_prime) * id * iq;
}

} // namespace detail

/// Solves the power-angle relation P_e(delta) = p_ref + e for |delta| < 90 deg.
inline OperatingPoint solve_operating_point(const TestbedConfig& c, double e) {
  c.validate_parameters();
  const double power = c.p_ref + e;
  auto infeasible = [&] {
    return InfeasibleError("operating point infeasible at e = " + std::to_string(e) +
                           " pu (P = " + std::to_string(power) + " pu)");
  };
  if (!std::isfinite(power)) throw infeasible();

  auto mismatch = [&](double delta) {
    const auto q = detail::rotor_quantities(c, delta);
    return q.v_d * q.i_d + q.v_q * q.i_q - power;
  };

  double root = 0.0;
  if (power != 0.0) {
    const double sign = power > 0.0 ? 1.0 : -1.0;
    constexpr int kScan = 400;
    constexpr double kLimit = M_PI / 2.0 - 1e-9;
    double prev_delta = 0.0;
    double prev_f = mismatch(0.0);
    bool bracketed = false;
    double lo = 0.0, hi = 0.0;
    for (int i = 1; i <= kScan; ++i) {
      const double delta = sign * kLimit * i / kScan;
      if (!detail::rotor_quantities(c, delta).valid) break;
      const double f = mismatch(delta);
      if (f == 0.0) {
        lo = hi = delta;
        bracketed = true;
        break;
      }
      if ((prev_f < 0.0) != (f < 0.0)) {
        lo = std::min(prev_delta, delta);
        hi = std::max(prev_delta, delta);
        bracketed = true;
        break;
      }
      prev_delta = delta;
      prev_f = f;
    }
    if (!bracketed) throw infeasible();
    if (lo == hi) {
      root = lo;
    } else {
      boost::uintmax_t iters = 200;
      const auto r = boost::math::tools::toms748_solve(
          mismatch, lo, hi, boost::math::tools::eps_tolerance<double>(52), iters);
      root = 0.5 * (r.first + r.second);
    }
  }

  const auto q = detail::rotor_quantities(c, root);
  OperatingPoint op;
  op.power = power;
  op.delta = root;
  op.eq_prime = q.eq_prime;
  op.i_d = q.i_d;
  op.i_q = q.i_q;
  op.v_d = q.v_d;
  op.v_q = q.v_q;
  op.efd = q.eq_prime + (c.x_d - c.x_d_prime) * q.i_d;
  op.residual = std::abs(detail::electrical_power(c, root, q.eq_prime) - power);
  if (!(op.residual < kEquilibriumResidual)) throw infeasible();

  const double s = std::sin(root), co = std::cos(root);
  const double xqe = c.x_q + c.x_e;
  const double xde = c.x_d_prime + c.x_e;
  const double diq = c.bus_voltage * co / xqe; // d i_q / d delta
  const double did = c.bus_voltage * s / xde;  // d i_d / d delta
  const double vt = std::hypot(q.v_d, q.v_q);
  op.k[0] = q.eq_prime * diq + (c.x_q - c.x_d_prime) * (did * q.i_q + q.i_d * diq);
  op.k[1] = q.i_q * xqe / xde;
  op.k[2] = xde / (c.x_d + c.x_e);
  op.k[3] = (c.x_d - c.x_d_prime) * did;
  op.k[4] = (q.v_d * c.x_q * diq - q.v_q * c.x_d_prime * did) / vt;
  op.k[5] = (q.v_q / vt) * c.x_e / xde;
  return op;
}

/// Heffron-Phillips state-space model around the equilibrium for disturbance e.
inline StateSpaceModel linearize(const TestbedConfig& c, double e) {
  const OperatingPoint op = solve_operating_point(c, e);
  const auto& k = op.k;
  const double wb = 2.0 * M_PI * c.nominal_frequency;
  const double m = 2.0 * c.inertia_h;
  const double td = c.t_d0_prime;
  const double ka = c.exciter_gain;
  const double ta = c.exciter_time;

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(4, 4);
  a(0, 1) = wb;
  a(1, 0) = -k[0] / m;
  a(1, 1) = -c.damping / m;
  a(1, 2) = -k[1] / m;
  a(2, 0) = -k[3] / td;
  a(2, 2) = -1.0 / (k[2] * td);
  a(2, 3) = 1.0 / td;
  a(3, 0) = -ka * k[4] / ta;
  a(3, 2) = -ka * k[5] / ta;
  a(3, 3) = -1.0 / ta;

  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(4, 2);
  b(3, 0) = -ka * c.stabilizer_gain / ta;
  b(1, 1) = 1.0 / m;

  Eigen::MatrixXd cm = Eigen::MatrixXd::Zero(2, 4);
  cm(0, 1) = 1.0;
  cm(1, 0) = 1.0;

  return make_state_space(std::move(a), std::move(b), std::move(cm), Eigen::MatrixXd::Zero(2, 2),
                          {"delta", "omega", "eq_prime", "efd"}, {"u_stab", "p_m"},
                          {"omega", "delta"});
}

inline constexpr Index kStabilizerInput = 0;
inline constexpr Index kDisturbanceInput = 1;
inline constexpr Index kSpeedOutput = 0;
inline constexpr Index kAngleOutput = 1;

/// Checks parameter sanity and that every e in the disturbance support has an
/// equilibrium with |delta| < 90 deg. P_e is monotone in delta on the branch we
/// solve, so both ends of the support suffice.
inline void validate(const TestbedConfig& c) {
  c.validate_parameters();
  (void)solve_operating_point(c, c.disturbance.lo);
  (void)solve_operating_point(c, c.disturbance.hi);
}

// ---------------------------------------------------------------------------
// Critical-mode tracking

/// Caller-owned tracking state: the eigenvector of the last critical mode.
/// An empty tracker seeds itself from the open-loop lowest-damped oscillatory
/// mode and follows it while the controller gain is ramped up from zero.
struct ModeTracker {
  std::optional<Eigen::VectorXcd> reference;
  int continuation_steps = 8;

  void reset() { reference.reset(); }
};

struct CriticalMode {
  Complex eigenvalue;
  double damping = 0.0;
  Index index = 0;  ///< position in the closed-loop ModeSet
};

namespace detail {

inline double overlap(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::abs(a.dot(b)) / (na * nb);
}

// Oscillatory mode (Im > 0) with the largest overlap; the real mode with the
// largest overlap only if the closed loop has no oscillatory mode left.
inline CriticalMode best_overlap(const ModeSet& modes, const Eigen::VectorXcd& ref,
                                 Eigen::VectorXcd& vec_out) {
  Index best = -1;
  double best_ov = -1.0;
  for (int pass = 0; pass < 2 && best < 0; ++pass) {
    for (Index i = 0; i < modes.size(); ++i) {
      const double im = modes.eigenvalues(i).imag();
      const bool eligible = pass == 0 ? im > 0.0 : im == 0.0;
      if (!eligible) continue;
      const double ov = overlap(ref, modes.right.col(i));
      if (ov > best_ov) {
        best_ov = ov;
        best = i;
      }
    }
  }
  if (best < 0) throw Error("critical-mode tracking found no candidate mode");
  vec_out = modes.right.col(best);
  return {modes.eigenvalues(best), modes.damping_ratios[static_cast<std::size_t>(best)], best};
}

} // namespace detail

/// Index of the lowest-damped oscillatory mode (positive imaginary part).
inline Index lowest_oscillatory_mode(const ModeSet& modes) {
  for (Index i = 0; i < modes.size(); ++i)
    if (modes.eigenvalues(i).imag() > 0.0) return i;
  throw Error("model has no oscillatory mode");
}

inline StateSpaceModel closed_loop_model(const StateSpaceModel& plant, const ControllerParams& p) {
  return close_loop(plant, realize_controller(p), kStabilizerInput, kSpeedOutput);
}

/// Critical mode of the plant with controller `params` attached.
inline CriticalMode critical_mode(const StateSpaceModel& plant, const ControllerParams& params,
                                  ModeTracker& tracker) {
  const Index np = plant.n_states();
  if (tracker.reference && tracker.reference->size() == np + 3) {
    const ModeSet modes = eigendecompose(closed_loop_model(plant, params));
    Eigen::VectorXcd vec;
    const CriticalMode cm = detail::best_overlap(modes, *tracker.reference, vec);
    tracker.reference = vec;
    return cm;
  }

  const ModeSet open = eigendecompose(plant);
  const Index i0 = lowest_oscillatory_mode(open);
  Eigen::VectorXcd ref = Eigen::VectorXcd::Zero(np + 3);
  ref.head(np) = open.right.col(i0);

  const int steps = std::max(1, tracker.continuation_steps);
  CriticalMode cm{};
  for (int s = 1; s <= steps; ++s) {
    const ControllerParams ps =
        params.with(Param::k_m, params.k_m() * static_cast<double>(s) / steps);
    const ModeSet modes = eigendecompose(closed_loop_model(plant, ps));
    Eigen::VectorXcd vec;
    cm = detail::best_overlap(modes, ref, vec);
    ref = vec;
  }
  tracker.reference = ref;
  return cm;
}

/// Damping ratio of the closed-loop critical mode at disturbance e.
inline double damping_map(const TestbedConfig& c, const ControllerParams& params, double e,
                          ModeTracker& tracker) {
  return critical_mode(linearize(c, e), params, tracker).damping;
}

/// Stateless form: a fresh tracker per call, so the result depends only on the
/// arguments.
inline double damping_map(const TestbedConfig& c, const ControllerParams& params, double e) {
  ModeTracker tracker;
  return damping_map(c, params, e, tracker);
}

/// Open-loop critical damping (no controller attached).
inline double open_loop_damping(const TestbedConfig& c, double e) {
  const ModeSet modes = eigendecompose(linearize(c, e));
  return modes.damping_ratios[static_cast<std::size_t>(lowest_oscillatory_mode(modes))];
}

// ---------------------------------------------------------------------------
// Scenarios

struct ScenarioMix {
  double fraction = 0.6;          ///< share of draws from the inner range
  Interval inner{-0.3, 0.3};
  Interval outer{-1.0, 1.0};
};

/// Stratified mixture: round(n*fraction) uniform draws on the inner range and
/// the rest uniform on the outer range, shuffled. Deterministic in the seed.
inline std::vector<double> scenario_generate(const TestbedConfig& c, std::size_t n,
                                             const ScenarioMix& mix, std::uint64_t seed) {
  if (!(mix.fraction >= 0.0 && mix.fraction <= 1.0))
    throw Error("scenario mixture fraction must lie in [0, 1]");
  for (const Interval* r : {&mix.inner, &mix.outer}) {
    if (!(r->lo <= r->hi)) throw Error("scenario range is empty");
    if (r->lo < c.disturbance.lo || r->hi > c.disturbance.hi)
      throw Error("scenario range [" + std::to_string(r->lo) + ", " + std::to_string(r->hi) +
                  "] exceeds disturbance bounds");
  }
  const auto n_inner = static_cast<std::size_t>(std::llround(mix.fraction * static_cast<double>(n)));
  std::mt19937_64 rng(seed);
  std::vector<double> out;
  out.reserve(n);
  std::uniform_real_distribution<double> inner(mix.inner.lo, mix.inner.hi);
  std::uniform_real_distribution<double> outer(mix.outer.lo, mix.outer.hi);
  for (std::size_t i = 0; i < n_inner; ++i) out.push_back(inner(rng));
  for (std::size_t i = n_inner; i < n; ++i) out.push_back(outer(rng));
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

} // namespace drdamp
