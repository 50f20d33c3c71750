#pragma once

// Lagrangian view of a simulated platoon: position s_i(t) recovered by
// inverting each vehicle's monotone passage-time curve t_i(s).

#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "platoon/error.hpp"
#include "platoon/sim.hpp"

namespace platoon {

/// Position over time of one vehicle; empty entries mark times at which the
/// vehicle is outside the simulated stretch of road.
using Trajectory = std::vector<std::optional<double>>;

/// Monotone cubic inverse of one passage-time curve: piecewise cubic
/// Hermite with Fritsch-Carlson slopes (weighted harmonic mean of adjacent
/// secants, zero at local extrema), so s(t) never overshoots the samples.
class PassageInverse {
 public:
  PassageInverse(std::span<const double> s, std::span<const double> t) : x_(t.begin(), t.end()), y_(s.begin(), s.end()) {
    if (s.size() != t.size() || s.size() < 2) throw Error(ErrorKind::input, "need at least two samples");
    for (std::size_t k = 1; k < t.size(); ++k) {
      if (!(t[k] > t[k - 1]))
        throw Error(ErrorKind::invariant_violation,
                    "passage time is not strictly increasing at s = " + std::to_string(s[k]));
    }
    const std::size_t n = x_.size();
    std::vector<double> secant(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) secant[k] = (y_[k + 1] - y_[k]) / (x_[k + 1] - x_[k]);
    slope_.assign(n, 0.0);
    slope_.front() = secant.front();
    slope_.back() = secant.back();
    for (std::size_t k = 1; k + 1 < n; ++k) {
      const double d0 = secant[k - 1];
      const double d1 = secant[k];
      if (d0 * d1 <= 0.0) continue;
      const double h0 = x_[k] - x_[k - 1];
      const double h1 = x_[k + 1] - x_[k];
      const double w1 = 2.0 * h1 + h0;
      const double w2 = h1 + 2.0 * h0;
      slope_[k] = (w1 + w2) / (w1 / d0 + w2 / d1);
    }
  }

  [[nodiscard]] std::optional<double> operator()(double time) const {
    if (time < x_.front() || time > x_.back()) return std::nullopt;
    auto it = std::upper_bound(x_.begin(), x_.end(), time);
    std::size_t k = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
    if (k + 1 >= x_.size()) k = x_.size() - 2;
    const double h = x_[k + 1] - x_[k];
    const double u = (time - x_[k]) / h;
    const double u2 = u * u;
    const double u3 = u2 * u;
    return (2 * u3 - 3 * u2 + 1) * y_[k] + (u3 - 2 * u2 + u) * h * slope_[k] + (-2 * u3 + 3 * u2) * y_[k + 1] +
           (u3 - u2) * h * slope_[k + 1];
  }

 private:
  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> slope_;
};

inline std::vector<Trajectory> reconstruct_time_domain(const PlatoonTrace& trace, std::span<const double> t_grid) {
  std::vector<Trajectory> out;
  out.reserve(trace.vehicles.size());
  for (const auto& veh : trace.vehicles) {
    const PassageInverse inverse(trace.s, veh.t);
    Trajectory traj;
    traj.reserve(t_grid.size());
    for (double time : t_grid) traj.push_back(inverse(time));
    out.push_back(std::move(traj));
  }
  return out;
}

}  // namespace platoon
