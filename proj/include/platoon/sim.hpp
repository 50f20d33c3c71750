#pragma once

// Space-domain simulation of a platoon under the shaping controllers.
//
// The state is (t_i, v_i) for every vehicle, advanced together over a
// uniform location grid by classical RK4. Within one right-hand-side
// evaluation the controls are computed front to back, so each follower
// sees its predecessor's same-stage velocity and control.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "platoon/controller.hpp"
#include "platoon/error.hpp"
#include "platoon/profiles.hpp"
#include "platoon/safety.hpp"

namespace platoon {

struct LocationGrid {
  double s_start = 0.0;
  double s_end = 100.0;
  double step = 0.01;

  void validate() const {
    if (!(s_start < s_end) || !std::isfinite(s_start) || !std::isfinite(s_end))
      throw Error(ErrorKind::grid, "grid needs s_start < s_end");
    if (!(step > 0.0) || step > s_end - s_start) throw Error(ErrorKind::grid, "grid step must be in (0, s_end - s_start]");
  }

  /// Number of points s_start + k h that do not pass s_end.
  [[nodiscard]] std::size_t size() const noexcept {
    return static_cast<std::size_t>(std::floor((s_end - s_start) / step + 1e-9)) + 1;
  }
  [[nodiscard]] double at(std::size_t k) const noexcept { return s_start + static_cast<double>(k) * step; }

  /// The default domain: +-10/gamma around the profile center, where the
  /// profile slope has decayed below 1e-8.
  static LocationGrid around(const ShapingProfile& profile, double step = 0.01) {
    const double half = 10.0 / profile.gamma();
    return {profile.center_s() - half, profile.center_s() + half, step};
  }
};

struct Perturbation {
  int vehicle = 0;
  double dt0 = 0.0;  ///< added to the entry time [s]
  double dv0 = 0.0;  ///< added to the entry velocity [m/s]
};

/// Explicit entry times and velocities at s_start. When absent the platoon
/// enters exactly on its profiles (zero tracking errors).
struct EntryConditions {
  std::vector<double> times;
  std::vector<double> velocities;
};

struct ScenarioConfig {
  std::string name = "scenario";
  int n_vehicles = 10;
  ShapingProfile profile;
  ControllerGains gains{};
  LocationGrid grid{};
  std::optional<EntryConditions> entry{};
  std::vector<Perturbation> perturbations{};
  std::optional<double> u_max{};  ///< symmetric control clamp; off by default
};

struct VehicleTrace {
  int index = 0;
  Parity parity = Parity::even;
  std::vector<double> t;
  std::vector<double> v;
  std::vector<double> u;
  std::vector<double> e;
  // NaN for the lead, which has no predecessor.
  std::vector<double> delta;
  std::vector<double> delta_slope;
  std::vector<double> tau_realized;
  std::vector<double> tau_desired;
  std::vector<double> safety_margin;
};

struct VehicleSummary {
  double sup_abs_e = 0.0;
  double sup_abs_delta = 0.0;
  double min_u = 0.0;
  double min_safety_margin = std::numeric_limits<double>::infinity();
};

struct TraceSummary {
  std::vector<VehicleSummary> vehicles;
  double min_acceleration = 0.0;
  double min_safety_margin = std::numeric_limits<double>::infinity();
  /// First location after which every |e_i| and |Delta_i| stays below the threshold.
  std::optional<double> convergence_s;
  double convergence_threshold = 1e-3;
};

struct PlatoonTrace {
  std::vector<double> s;
  std::vector<VehicleTrace> vehicles;
  TraceSummary summary;
};

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Entry state that puts every vehicle exactly on its profile at s_start.
inline std::vector<VehicleState> ideal_entry(const ShapingProfile& profile, int n_vehicles, double s_start) {
  std::vector<VehicleState> out(static_cast<std::size_t>(n_vehicles));
  out[0] = {0.0, profile.desired_velocity(s_start)};
  for (int i = 1; i < n_vehicles; ++i) {
    const Sample2 tau = profile.time_gap(parity_of(i), s_start);
    const auto& pred = out[static_cast<std::size_t>(i - 1)];
    out[static_cast<std::size_t>(i)] = {pred.t + tau.value, 1.0 / (1.0 / pred.v + tau.slope)};
  }
  return out;
}

inline std::vector<VehicleState> entry_state(const ScenarioConfig& config) {
  std::vector<VehicleState> state;
  const auto n = static_cast<std::size_t>(config.n_vehicles);
  if (config.entry) {
    if (config.entry->times.size() != n || config.entry->velocities.size() != n)
      throw Error(ErrorKind::input, "entry times and velocities need one value per vehicle");
    for (std::size_t i = 0; i < n; ++i) state.push_back({config.entry->times[i], config.entry->velocities[i]});
  } else {
    state = ideal_entry(config.profile, config.n_vehicles, config.grid.s_start);
  }
  for (const auto& p : config.perturbations) {
    if (p.vehicle < 0 || p.vehicle >= config.n_vehicles)
      throw Error(ErrorKind::input, "perturbation names vehicle " + std::to_string(p.vehicle) + " outside the platoon");
    state[static_cast<std::size_t>(p.vehicle)].t += p.dt0;
    state[static_cast<std::size_t>(p.vehicle)].v += p.dv0;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(state[i].v > kVelocityFloor))
      throw Error(ErrorKind::input, "entry velocity of vehicle " + std::to_string(i) + " is at or below the floor");
    if (i > 0 && !(state[i].t > state[i - 1].t))
      throw Error(ErrorKind::input, "entry times must be strictly increasing (vehicle " + std::to_string(i) + ")");
  }
  return state;
}

namespace detail {

/// Closed-loop right-hand side of the whole platoon at one location.
class PlatoonDynamics {
 public:
  explicit PlatoonDynamics(const ScenarioConfig& config) : config_(config) {}

  /// Fills u with the controls and dt/ds, dv/ds with the derivatives.
  void evaluate(double s, std::span<const double> t, std::span<const double> v, std::span<double> u,
                std::span<double> dt, std::span<double> dv) const {
    const auto& profile = config_.profile;
    const Sample2 T = profile.shaping(s);
    const double v_des = desired_velocity_from(profile.odd_velocity(s), T.slope);
    const double inv_slope = profile.inverse_desired_velocity_slope(s);
    const std::size_t n = t.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (!(v[i] > kVelocityFloor) || !std::isfinite(v[i])) {
        throw SimulationAbort(ErrorKind::stall,
                              "vehicle " + std::to_string(i) + " velocity " + std::to_string(v[i]) + " m/s at s = " +
                                  std::to_string(s) + " m",
                              s, static_cast<int>(i));
      }
      double control = 0.0;
      if (i == 0) {
        control = lead_control(v[0], 1.0 / v[0] - 1.0 / v_des, inv_slope, config_.gains);
      } else {
        const double sign = parity_sign(parity_of(static_cast<int>(i)));
        const ErrorState err{0.0, time_gap_error(t[i], t[i - 1], profile.tau0() + sign * T.value),
                             time_gap_error_slope(v[i], v[i - 1], sign * T.slope)};
        control = follower_control({t[i], v[i]}, v[i - 1], u[i - 1], err, sign * T.curvature, config_.gains);
      }
      if (config_.u_max) control = std::clamp(control, -*config_.u_max, *config_.u_max);
      u[i] = control;
      dt[i] = 1.0 / v[i];
      dv[i] = control / v[i];
    }
  }

 private:
  const ScenarioConfig& config_;
};

inline void summarize(PlatoonTrace& trace, double threshold) {
  TraceSummary& sum = trace.summary;
  sum = {};
  sum.convergence_threshold = threshold;
  sum.min_acceleration = std::numeric_limits<double>::infinity();
  std::size_t last_violation = 0;
  bool violated = false;
  for (const auto& veh : trace.vehicles) {
    VehicleSummary vs;
    vs.min_u = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < trace.s.size(); ++k) {
      vs.sup_abs_e = std::max(vs.sup_abs_e, std::abs(veh.e[k]));
      vs.min_u = std::min(vs.min_u, veh.u[k]);
      bool bad = std::abs(veh.e[k]) >= threshold;
      if (veh.index > 0) {
        vs.sup_abs_delta = std::max(vs.sup_abs_delta, std::abs(veh.delta[k]));
        vs.min_safety_margin = std::min(vs.min_safety_margin, veh.safety_margin[k]);
        bad = bad || std::abs(veh.delta[k]) >= threshold;
      }
      if (bad && (!violated || k > last_violation)) {
        last_violation = k;
        violated = true;
      }
    }
    sum.min_acceleration = std::min(sum.min_acceleration, vs.min_u);
    sum.min_safety_margin = std::min(sum.min_safety_margin, vs.min_safety_margin);
    sum.vehicles.push_back(vs);
  }
  if (!violated)
    sum.convergence_s = trace.s.front();
  else if (last_violation + 1 < trace.s.size())
    sum.convergence_s = trace.s[last_violation + 1];
}

}  // namespace detail

/// Integrates the closed-loop platoon over config.grid.
/// Throws SimulationAbort on a stall (v <= floor) or when a vehicle's
/// passage time no longer trails its predecessor's.
inline PlatoonTrace simulate_platoon(const ScenarioConfig& config) {
  if (config.n_vehicles < 1) throw Error(ErrorKind::input, "need at least one vehicle");
  config.gains.validate();
  config.grid.validate();
  if (config.u_max && !(*config.u_max > 0.0)) throw Error(ErrorKind::input, "u_max must be positive");

  const auto n = static_cast<std::size_t>(config.n_vehicles);
  const std::size_t points = config.grid.size();
  const double h = config.grid.step;
  const detail::PlatoonDynamics dynamics(config);
  const ShapingProfile& profile = config.profile;
  const SafetyParams& safety = profile.params();

  PlatoonTrace trace;
  trace.s.resize(points);
  for (std::size_t k = 0; k < points; ++k) trace.s[k] = config.grid.at(k);
  trace.vehicles.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& veh = trace.vehicles[i];
    veh.index = static_cast<int>(i);
    veh.parity = parity_of(veh.index);
    for (auto* col : {&veh.t, &veh.v, &veh.u, &veh.e, &veh.delta, &veh.delta_slope, &veh.tau_realized,
                      &veh.tau_desired, &veh.safety_margin})
      col->assign(points, kNaN);
  }

  std::vector<double> t(n), v(n), u(n), k1t(n), k1v(n), k2t(n), k2v(n), k3t(n), k3v(n), k4t(n), k4v(n), tt(n), vv(n),
      scratch(n);
  {
    const auto entry = entry_state(config);
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = entry[i].t;
      v[i] = entry[i].v;
    }
  }

  auto record = [&](std::size_t k, double s) {
    const Sample2 T = profile.shaping(s);
    const double v_des = desired_velocity_from(profile.odd_velocity(s), T.slope);
    for (std::size_t i = 0; i < n; ++i) {
      auto& veh = trace.vehicles[i];
      veh.t[k] = t[i];
      veh.v[k] = v[i];
      veh.u[k] = u[i];
      veh.e[k] = velocity_error(v[i], v_des);
      if (i == 0) continue;
      if (!(t[i] > t[i - 1])) {
        throw SimulationAbort(ErrorKind::ordering_violation,
                              "vehicle " + std::to_string(i) + " reaches s = " + std::to_string(s) +
                                  " m no later than vehicle " + std::to_string(i - 1),
                              s, static_cast<int>(i));
      }
      const Sample2 tau = profile.time_gap(veh.parity, s);
      veh.tau_realized[k] = t[i] - t[i - 1];
      veh.tau_desired[k] = tau.value;
      veh.delta[k] = time_gap_error(t[i], t[i - 1], tau.value);
      veh.delta_slope[k] = time_gap_error_slope(v[i], v[i - 1], tau.slope);
      veh.safety_margin[k] = veh.tau_realized[k] - safe_time_gap(v[i], safety);
    }
  };

  for (std::size_t k = 0;; ++k) {
    const double s = trace.s[k];
    dynamics.evaluate(s, t, v, u, k1t, k1v);
    record(k, s);
    if (k + 1 == points) break;

    for (std::size_t i = 0; i < n; ++i) {
      tt[i] = t[i] + 0.5 * h * k1t[i];
      vv[i] = v[i] + 0.5 * h * k1v[i];
    }
    dynamics.evaluate(s + 0.5 * h, tt, vv, scratch, k2t, k2v);
    for (std::size_t i = 0; i < n; ++i) {
      tt[i] = t[i] + 0.5 * h * k2t[i];
      vv[i] = v[i] + 0.5 * h * k2v[i];
    }
    dynamics.evaluate(s + 0.5 * h, tt, vv, scratch, k3t, k3v);
    for (std::size_t i = 0; i < n; ++i) {
      tt[i] = t[i] + h * k3t[i];
      vv[i] = v[i] + h * k3v[i];
    }
    dynamics.evaluate(s + h, tt, vv, scratch, k4t, k4v);
    for (std::size_t i = 0; i < n; ++i) {
      t[i] += h / 6.0 * (k1t[i] + 2.0 * k2t[i] + 2.0 * k3t[i] + k4t[i]);
      v[i] += h / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
    }
  }

  detail::summarize(trace, 1e-3);
  return trace;
}

}  // namespace platoon
