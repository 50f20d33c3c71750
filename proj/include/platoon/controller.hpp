#pragma once

// Feedback-linearizing controllers in the space domain and closed-form
// solutions of the resulting linear error dynamics.
//
// With location s as independent variable a vehicle obeys
//     dt/ds = 1/v,  dv/ds = u/v.
// The lead control makes de0/ds = -p e0; the follower control makes
// d2(Delta)/ds2 = -p0 Delta - p1 dDelta/ds.

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <string>

#include "platoon/error.hpp"

namespace platoon {

/// Below this speed 1/v and v^3 terms are numerically unusable.
inline constexpr double kVelocityFloor = 0.5;

struct ControllerGains {
  double p = 0.1;    ///< lead gain [1/m]
  double p0 = 0.01;  ///< follower position gain [1/m^2]
  double p1 = 0.2;   ///< follower rate gain [1/m]

  void validate() const {
    if (!(p > 0.0 && p0 > 0.0 && p1 > 0.0) || !std::isfinite(p) || !std::isfinite(p0) || !std::isfinite(p1))
      throw Error(ErrorKind::domain, "controller gains must be positive and finite");
  }
};

struct VehicleState {
  double t = 0.0;  ///< passage time at the current location [s]
  double v = 0.0;  ///< velocity [m/s]
};

struct ErrorState {
  double e = 0.0;            ///< 1/v - 1/v_des [s/m]
  double delta = 0.0;        ///< time-gap error [s]
  double delta_slope = 0.0;  ///< dDelta/ds [s/m]
};

inline double velocity_error(double v, double v_des) {
  if (!(v > 0.0 && v_des > 0.0)) throw Error(ErrorKind::domain, "velocities must be positive");
  return 1.0 / v - 1.0 / v_des;
}

inline double time_gap_error(double t_i, double t_pred, double tau_des) noexcept { return t_i - t_pred - tau_des; }

/// dDelta/ds from the two velocities and the profile slope.
inline double time_gap_error_slope(double v_i, double v_pred, double dtau_ds) noexcept {
  return 1.0 / v_i - 1.0 / v_pred - dtau_ds;
}

namespace detail {
inline void require_moving(double v, const char* who) {
  if (!(v > kVelocityFloor) || !std::isfinite(v))
    throw Error(ErrorKind::stall, std::string(who) + " velocity " + std::to_string(v) + " m/s is at or below the floor");
}
}  // namespace detail

/// u0 = v0^3 (p e0 - d(1/v_des)/ds).
inline double lead_control(double v0, double e0, double d_inv_vdes_ds, const ControllerGains& gains) {
  detail::require_moving(v0, "lead");
  return v0 * v0 * v0 * (gains.p * e0 - d_inv_vdes_ds);
}

/// ui = vi^3 (p0 Delta + p1 Delta' + u_pred / v_pred^3 - tau''), with the
/// predecessor's control passed forward along the chain.
inline double follower_control(const VehicleState& state, double pred_v, double pred_u, const ErrorState& err,
                               double d2tau_ds2, const ControllerGains& gains) {
  detail::require_moving(state.v, "follower");
  detail::require_moving(pred_v, "predecessor");
  const double v3 = state.v * state.v * state.v;
  const double feed_forward = pred_u / (pred_v * pred_v * pred_v);
  return v3 * (gains.p0 * err.delta + gains.p1 * err.delta_slope + feed_forward - d2tau_ds2);
}

enum class RootKind { real_distinct, repeated, complex_pair };

struct CharacteristicRoots {
  std::complex<double> r1;  ///< (-p1 - sqrt(p1^2 - 4 p0)) / 2
  std::complex<double> r2;  ///< (-p1 + sqrt(p1^2 - 4 p0)) / 2
  RootKind kind = RootKind::real_distinct;
};

/// Roots of r^2 + p1 r + p0 = 0.
inline CharacteristicRoots characteristic_roots(const ControllerGains& gains) {
  const double disc = gains.p1 * gains.p1 - 4.0 * gains.p0;
  const double half = -gains.p1 / 2.0;
  if (std::abs(disc) < 1e-10 * std::max(1.0, gains.p1 * gains.p1)) return {half, half, RootKind::repeated};
  if (disc > 0.0) {
    const double r = std::sqrt(disc) / 2.0;
    return {half - r, half + r, RootKind::real_distinct};
  }
  const double w = std::sqrt(-disc) / 2.0;
  return {{half, -w}, {half, w}, RootKind::complex_pair};
}

struct ModeCoefficients {
  std::complex<double> a;
  std::complex<double> b;
};

/// Cramer's-rule weights of exp(r1 s) and exp(r2 s) for distinct roots.
inline ModeCoefficients cramer_coefficients(double delta0, double delta_slope0, const CharacteristicRoots& roots) {
  if (roots.kind == RootKind::repeated)
    throw Error(ErrorKind::domain, "exponential-mode coefficients need distinct roots");
  const auto det = roots.r2 - roots.r1;
  return {(roots.r2 * delta0 - delta_slope0) / det, (delta_slope0 - roots.r1 * delta0) / det};
}

/// Time-gap error of a follower whose dynamics are exactly linear, from its
/// initial value and slope at s = 0.
class DeltaSolution {
 public:
  DeltaSolution(double delta0, double delta_slope0, const ControllerGains& gains)
      : roots_(characteristic_roots(gains)) {
    const double sigma = roots_.r1.real();
    switch (roots_.kind) {
      case RootKind::real_distinct: {
        const auto ab = cramer_coefficients(delta0, delta_slope0, roots_);
        c1_ = ab.a.real();
        c2_ = ab.b.real();
        break;
      }
      case RootKind::repeated:
        c1_ = delta0;
        c2_ = delta_slope0 - sigma * delta0;
        break;
      case RootKind::complex_pair:
        c1_ = delta0;
        c2_ = (delta_slope0 - sigma * delta0) / roots_.r2.imag();
        break;
    }
  }

  [[nodiscard]] const CharacteristicRoots& roots() const noexcept { return roots_; }

  [[nodiscard]] double value(double s) const {
    const double sigma = roots_.r1.real();
    switch (roots_.kind) {
      case RootKind::real_distinct:
        return c1_ * std::exp(roots_.r1.real() * s) + c2_ * std::exp(roots_.r2.real() * s);
      case RootKind::repeated:
        return (c1_ + c2_ * s) * std::exp(sigma * s);
      case RootKind::complex_pair: {
        const double w = roots_.r2.imag();
        return std::exp(sigma * s) * (c1_ * std::cos(w * s) + c2_ * std::sin(w * s));
      }
    }
    return 0.0;
  }

  [[nodiscard]] double slope(double s) const {
    const double sigma = roots_.r1.real();
    switch (roots_.kind) {
      case RootKind::real_distinct: {
        const double r1 = roots_.r1.real();
        const double r2 = roots_.r2.real();
        return r1 * c1_ * std::exp(r1 * s) + r2 * c2_ * std::exp(r2 * s);
      }
      case RootKind::repeated:
        return (c2_ + sigma * (c1_ + c2_ * s)) * std::exp(sigma * s);
      case RootKind::complex_pair: {
        const double w = roots_.r2.imag();
        const double c = std::cos(w * s);
        const double sn = std::sin(w * s);
        return std::exp(sigma * s) * ((sigma * c1_ + w * c2_) * c + (sigma * c2_ - w * c1_) * sn);
      }
    }
    return 0.0;
  }

 private:
  CharacteristicRoots roots_;
  double c1_ = 0.0;
  double c2_ = 0.0;
};

inline double delta_solution(double delta0, double delta_slope0, const ControllerGains& gains, double s) {
  return DeltaSolution(delta0, delta_slope0, gains).value(s);
}

/// e0(s) = e0(0) exp(-p s).
inline double lead_error_solution(double e0_initial, double p, double s) { return e0_initial * std::exp(-p * s); }

/// Velocity error of follower i obtained by unrolling
/// e_i = dDelta_i/ds + e_{i-1} + dtau_i/ds down to the lead:
///     e_i = e0 + r1 e^{r1 s} sum A_j + r2 e^{r2 s} sum B_j + sum dtau_j/ds.
inline double follower_error_induction(double e0_at_s, std::span<const std::complex<double>> a_list,
                                       std::span<const std::complex<double>> b_list,
                                       const CharacteristicRoots& roots, std::span<const double> dtau_ds_list,
                                       double s) {
  if (roots.kind == RootKind::repeated)
    throw Error(ErrorKind::domain, "induction formula needs distinct roots");
  if (a_list.size() != b_list.size() || a_list.size() != dtau_ds_list.size())
    throw Error(ErrorKind::input, "coefficient and slope lists must have equal length");
  std::complex<double> sum_a{};
  std::complex<double> sum_b{};
  double sum_slope = 0.0;
  for (std::size_t j = 0; j < a_list.size(); ++j) {
    sum_a += a_list[j];
    sum_b += b_list[j];
    sum_slope += dtau_ds_list[j];
  }
  const auto modes = roots.r1 * std::exp(roots.r1 * s) * sum_a + roots.r2 * std::exp(roots.r2 * s) * sum_b;
  return e0_at_s + modes.real() + sum_slope;
}

}  // namespace platoon
