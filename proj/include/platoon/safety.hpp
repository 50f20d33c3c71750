#pragma once

// Safety region of a platoon in the (velocity, time-gap) plane.
//
// A follower is safe when it can stop behind a predecessor that stops
// instantaneously. At constant speed v the kinematic relation
// v * tau = d_min + l with d_min = v^2 / (2 a_min) gives the boundary
//
//     tau(v) = v / (2 a_min) + l / v,
//
// a convex curve with a unique minimum at v* = sqrt(2 l a_min).

#include <cmath>
#include <string>

#include "platoon/error.hpp"

namespace platoon {

/// Absolute tolerance on the time-gap axis when testing boundary points.
inline constexpr double kBoundaryTolerance = 1e-9;

struct SafetyParams {
  double vehicle_length = 6.0;  ///< l [m]: vehicle length plus standstill spacing
  double a_min = 4.0;           ///< |max deceleration| [m/s^2]

  void validate() const {
    if (!(vehicle_length > 0.0) || !std::isfinite(vehicle_length))
      throw Error(ErrorKind::domain, "vehicle length must be positive, got " + std::to_string(vehicle_length));
    if (!(a_min > 0.0) || !std::isfinite(a_min))
      throw Error(ErrorKind::domain, "a_min must be positive, got " + std::to_string(a_min));
  }
};

struct OperatingPoint {
  double velocity = 0.0;  ///< m/s
  double time_gap = 0.0;  ///< s
};

struct SafetyVerdict {
  bool safe = false;
  double margin = 0.0;  ///< time_gap - safe_time_gap(velocity); positive is safe
};

/// Braking distance v^2 / (2 a_min).
inline double min_safe_distance(double v, const SafetyParams& params) {
  if (!(v >= 0.0)) throw Error(ErrorKind::domain, "velocity must be non-negative");
  return v * v / (2.0 * params.a_min);
}

/// Smallest time-gap that is safe at velocity v.
inline double safe_time_gap(double v, const SafetyParams& params) {
  if (!(v > 0.0)) throw Error(ErrorKind::domain, "velocity must be positive");
  return v / (2.0 * params.a_min) + params.vehicle_length / v;
}

/// Global minimum of the safe time-gap curve.
inline OperatingPoint min_time_gap_point(const SafetyParams& params) {
  return {std::sqrt(2.0 * params.vehicle_length * params.a_min),
          std::sqrt(2.0 * params.vehicle_length / params.a_min)};
}

/// Velocity on the high-speed branch of the boundary for a given time-gap.
inline double velocity_for_time_gap(double tau, const SafetyParams& params) {
  const double ta = tau * params.a_min;
  const double disc = ta * ta - 2.0 * params.vehicle_length * params.a_min;
  if (!(disc >= 0.0)) {
    throw Error(ErrorKind::infeasible_time_gap,
                "time-gap " + std::to_string(tau) + " s is below the minimum " +
                    std::to_string(min_time_gap_point(params).time_gap) + " s");
  }
  return ta + std::sqrt(disc);
}

/// d(velocity_for_time_gap)/d(tau); infinite at tau_min.
inline double velocity_for_time_gap_slope(double tau, const SafetyParams& params) {
  const double ta = tau * params.a_min;
  const double disc = ta * ta - 2.0 * params.vehicle_length * params.a_min;
  if (!(disc > 0.0)) throw Error(ErrorKind::infeasible_time_gap, "slope undefined at or below tau_min");
  return params.a_min * (1.0 + ta / std::sqrt(disc));
}

inline SafetyVerdict is_safe(const OperatingPoint& point, const SafetyParams& params) {
  const double margin = point.time_gap - safe_time_gap(point.velocity, params);
  return {margin >= -kBoundaryTolerance, margin};
}

}  // namespace platoon
