#pragma once

// Desired time-gap and velocity profiles as functions of roadway location.
//
// The shaping term T(s) = alpha + beta * tanh(gamma * (s - center_s)) rises
// from 0 upstream to 2 alpha downstream. Even vehicles (the lead included)
// track tau0 + T, odd vehicles track tau0 - T. Odd vehicles ride the safety
// boundary; the common desired velocity follows from zero-error tracking:
//
//     1/v_des = 1/v_odd + T'(s).

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "platoon/error.hpp"
#include "platoon/safety.hpp"

namespace platoon {

enum class Parity { even, odd };

constexpr Parity parity_of(int index) noexcept { return index % 2 == 0 ? Parity::even : Parity::odd; }
constexpr double parity_sign(Parity p) noexcept { return p == Parity::even ? 1.0 : -1.0; }
constexpr const char* to_string(Parity p) noexcept { return p == Parity::even ? "even" : "odd"; }

/// A value with its first and second derivative in s.
struct Sample2 {
  double value = 0.0;
  double slope = 0.0;      ///< d/ds
  double curvature = 0.0;  ///< d2/ds2
};

class ShapingProfile {
 public:
  enum class Kind { tanh, constant };

  [[nodiscard]] Kind kind() const noexcept { return kind_; }
  [[nodiscard]] double tau0() const noexcept { return tau0_; }
  [[nodiscard]] double alpha() const noexcept { return alpha_; }
  [[nodiscard]] double beta() const noexcept { return beta_; }
  [[nodiscard]] double gamma() const noexcept { return gamma_; }
  [[nodiscard]] double center_s() const noexcept { return center_s_; }
  [[nodiscard]] const SafetyParams& params() const noexcept { return params_; }

  /// Downstream limit of the odd time-gap.
  [[nodiscard]] double tau_odd_end() const noexcept { return tau0_ - alpha_ - beta_; }
  /// Downstream limit of the even time-gap.
  [[nodiscard]] double tau_even_end() const noexcept { return tau0_ + alpha_ + beta_; }
  /// Largest |T'(s)|, reached at center_s.
  [[nodiscard]] double max_shaping_slope() const noexcept { return beta_ * gamma_; }

  /// T(s) and its derivatives.
  [[nodiscard]] Sample2 shaping(double s) const noexcept {
    if (kind_ == Kind::constant) return {};
    const double th = std::tanh(gamma_ * (s - center_s_));
    const double sech2 = 1.0 - th * th;
    return {alpha_ + beta_ * th, beta_ * gamma_ * sech2, -2.0 * beta_ * gamma_ * gamma_ * sech2 * th};
  }

  [[nodiscard]] Sample2 time_gap(Parity parity, double s) const noexcept {
    const double sign = parity_sign(parity);
    const Sample2 T = shaping(s);
    return {tau0_ + sign * T.value, sign * T.slope, sign * T.curvature};
  }

  [[nodiscard]] double odd_velocity(double s) const {
    return velocity_for_time_gap(time_gap(Parity::odd, s).value, params_);
  }

  [[nodiscard]] double desired_velocity(double s) const;

  /// d(1/v_des)/ds, the feed-forward term of the lead controller.
  [[nodiscard]] double inverse_desired_velocity_slope(double s) const;

  friend ShapingProfile design_profile(double, double, double, double, const SafetyParams&);
  friend ShapingProfile constant_profile(double, const SafetyParams&);

 private:
  ShapingProfile() = default;

  Kind kind_ = Kind::tanh;
  double tau0_ = 0.0;
  double alpha_ = 0.0;
  double beta_ = 0.0;
  double gamma_ = 0.0;
  double center_s_ = 0.0;
  SafetyParams params_{};
};

/// Rejects shaping targets that are degenerate or end outside the safe region.
inline void validate_targets(double tau0, double tau_odd_end, const SafetyParams& params) {
  params.validate();
  if (!(tau0 > tau_odd_end)) {
    throw Error(ErrorKind::degenerate_profile,
                "tau0 (" + std::to_string(tau0) + ") must exceed tau_odd_end (" + std::to_string(tau_odd_end) + ")");
  }
  const double tau_min = min_time_gap_point(params).time_gap;
  if (tau_odd_end < tau_min - kBoundaryTolerance) {
    throw Error(ErrorKind::infeasible_target, "tau_odd_end " + std::to_string(tau_odd_end) +
                                                  " s is below the minimum safe time-gap " + std::to_string(tau_min));
  }
}

inline ShapingProfile design_profile(double tau0, double tau_odd_end, double gamma, double center_s,
                                     const SafetyParams& params) {
  validate_targets(tau0, tau_odd_end, params);
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw Error(ErrorKind::domain, "gamma must be positive");
  if (!std::isfinite(center_s)) throw Error(ErrorKind::domain, "center_s must be finite");
  ShapingProfile p;
  p.kind_ = ShapingProfile::Kind::tanh;
  p.tau0_ = tau0;
  p.alpha_ = p.beta_ = (tau0 - tau_odd_end) / 2.0;
  p.gamma_ = gamma;
  p.center_s_ = center_s;
  p.params_ = params;
  return p;
}

/// No-shaping profile (T == 0): every vehicle holds tau0 on the boundary velocity.
inline ShapingProfile constant_profile(double tau0, const SafetyParams& params) {
  params.validate();
  if (tau0 < min_time_gap_point(params).time_gap - kBoundaryTolerance)
    throw Error(ErrorKind::infeasible_target, "tau0 is below the minimum safe time-gap");
  ShapingProfile p;
  p.kind_ = ShapingProfile::Kind::constant;
  p.tau0_ = tau0;
  p.params_ = params;
  return p;
}

/// v_des from the boundary velocity and the shaping slope.
inline double desired_velocity_from(double odd_velocity, double shaping_slope) {
  const double denom = 1.0 + odd_velocity * shaping_slope;
  if (!(denom > 0.0)) {
    throw Error(ErrorKind::profile_inconsistency,
                "1 + v_odd * T' = " + std::to_string(denom) + " is not positive");
  }
  return odd_velocity / denom;
}

inline double ShapingProfile::desired_velocity(double s) const {
  return desired_velocity_from(odd_velocity(s), shaping(s).slope);
}

inline double ShapingProfile::inverse_desired_velocity_slope(double s) const {
  if (kind_ == Kind::constant) return 0.0;
  const Sample2 T = shaping(s);
  const double tau_odd = tau0_ - T.value;
  const double v_odd = velocity_for_time_gap(tau_odd, params_);
  const double dv_odd = velocity_for_time_gap_slope(tau_odd, params_) * (-T.slope);
  return -dv_odd / (v_odd * v_odd) + T.curvature;
}

// Free-function spellings of the profile queries.

inline Sample2 time_gap_at(const ShapingProfile& profile, Parity parity, double s) {
  return profile.time_gap(parity, s);
}
inline double odd_velocity(const ShapingProfile& profile, double s) { return profile.odd_velocity(s); }
inline double desired_velocity(const ShapingProfile& profile, double s) { return profile.desired_velocity(s); }

struct AccelerationProfiles {
  std::vector<double> odd;
  std::vector<double> even;
};

/// a = v dv/ds for a sampled velocity; central differences inside, one-sided at the ends.
inline std::vector<double> chain_rule_acceleration(std::span<const double> s, std::span<const double> v) {
  const std::size_t n = s.size();
  if (n < 3) throw Error(ErrorKind::grid, "need at least 3 grid points");
  if (v.size() != n) throw Error(ErrorKind::grid, "velocity and grid sizes differ");
  std::vector<double> a(n);
  a[0] = v[0] * (v[1] - v[0]) / (s[1] - s[0]);
  for (std::size_t k = 1; k + 1 < n; ++k) a[k] = v[k] * (v[k + 1] - v[k - 1]) / (s[k + 1] - s[k - 1]);
  a[n - 1] = v[n - 1] * (v[n - 1] - v[n - 2]) / (s[n - 1] - s[n - 2]);
  return a;
}

inline AccelerationProfiles acceleration_profiles(const ShapingProfile& profile, std::span<const double> s_grid) {
  if (s_grid.size() < 3) throw Error(ErrorKind::grid, "need at least 3 grid points");
  for (std::size_t k = 1; k < s_grid.size(); ++k)
    if (!(s_grid[k] > s_grid[k - 1])) throw Error(ErrorKind::grid, "grid must be strictly increasing");
  std::vector<double> v_odd(s_grid.size());
  std::vector<double> v_even(s_grid.size());
  for (std::size_t k = 0; k < s_grid.size(); ++k) {
    v_odd[k] = profile.odd_velocity(s_grid[k]);
    v_even[k] = profile.desired_velocity(s_grid[k]);
  }
  return {chain_rule_acceleration(s_grid, v_odd), chain_rule_acceleration(s_grid, v_even)};
}

/// Sampling grid for the deceleration constraint: +-8/gamma around the
/// center (tanh is within 3e-7 of its limit beyond) at step min(0.1, 0.01/gamma).
inline std::vector<double> constraint_grid(double gamma, double center_s) {
  const double half = 8.0 / gamma;
  const double step = std::min(0.1, 0.01 / gamma);
  const auto n = static_cast<std::size_t>(std::ceil(2.0 * half / step)) + 1;
  std::vector<double> grid(n);
  for (std::size_t k = 0; k < n; ++k) grid[k] = center_s - half + static_cast<double>(k) * step;
  return grid;
}

/// Smallest acceleration either parity needs to follow the profile.
inline double min_profile_acceleration(const ShapingProfile& profile) {
  const auto grid = constraint_grid(profile.gamma(), profile.center_s());
  const auto acc = acceleration_profiles(profile, grid);
  double lowest = 0.0;
  for (double a : acc.odd) lowest = std::min(lowest, a);
  for (double a : acc.even) lowest = std::min(lowest, a);
  return lowest;
}

inline constexpr double kAccelerationSlack = 1e-6;

struct GammaSearch {
  double lower = 1e-4;
  double upper = 10.0;
  /// Deceleration bound for the constraint; defaults to the safety a_min.
  std::optional<double> accel_limit;
};

inline bool gamma_is_feasible(double tau0, double tau_odd_end, const SafetyParams& params, double gamma,
                              double accel_limit) {
  const auto profile = design_profile(tau0, tau_odd_end, gamma, 0.0, params);
  return min_profile_acceleration(profile) >= -accel_limit - kAccelerationSlack;
}

/// Largest gamma whose profiles keep both parities' deceleration within the
/// limit. Feasibility is monotone in gamma, so bisection applies.
inline double optimize_gamma(double tau0, double tau_odd_end, const SafetyParams& params, double tol,
                             const GammaSearch& search = {}) {
  validate_targets(tau0, tau_odd_end, params);
  if (!(tol > 0.0)) throw Error(ErrorKind::domain, "tolerance must be positive");
  const double limit = search.accel_limit.value_or(params.a_min);
  if (!(limit > 0.0)) throw Error(ErrorKind::domain, "acceleration limit must be positive");

  double lo = search.lower;
  double hi = search.upper;
  if (!gamma_is_feasible(tau0, tau_odd_end, params, lo, limit)) {
    throw Error(ErrorKind::optimization_failure,
                "no feasible gamma in (" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  if (gamma_is_feasible(tau0, tau_odd_end, params, hi, limit)) return hi;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (gamma_is_feasible(tau0, tau_odd_end, params, mid, limit))
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

}  // namespace platoon
