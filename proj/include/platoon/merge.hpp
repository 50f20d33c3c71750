#pragma once

// Merge feasibility: interleave a substream into the gaps of a shaped
// mainstream at the merge location and check every resulting time-gap
// against the safe time-gap of the following vehicle.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "platoon/error.hpp"
#include "platoon/safety.hpp"
#include "platoon/sim.hpp"

namespace platoon {

enum class Stream { main, sub };

constexpr const char* to_string(Stream s) noexcept { return s == Stream::main ? "main" : "sub"; }

/// A vehicle passing the merge location.
struct Arrival {
  double time = 0.0;
  double velocity = 0.0;
};

struct MergeSlot {
  Stream stream = Stream::main;
  int index = 0;  ///< position within its own stream
  Arrival arrival;
};

struct MergeGap {
  std::size_t leader = 0;  ///< positions in the merged sequence
  std::size_t follower = 0;
  double gap = 0.0;
  double velocity = 0.0;  ///< follower speed the gap is judged at
  double required = 0.0;
  double margin = 0.0;
  bool safe = false;
};

struct MergeReport {
  std::vector<MergeSlot> sequence;
  std::vector<MergeGap> gaps;
  double worst_margin = std::numeric_limits<double>::infinity();
  bool feasible = true;
  bool main_converged = true;
  double tolerance = 0.0;
};

struct MergeOptions {
  /// Margin accepted as safe; covers integration noise in simulated traces.
  double tolerance = 1e-6;
  /// |e|, |Delta| bound for calling the mainstream downstream-converged.
  double convergence_threshold = 1e-3;
};

inline MergeReport audit_merge(std::span<const Arrival> main, std::span<const double> sub_times, double sub_velocity,
                               const SafetyParams& params, const MergeOptions& options = {}) {
  params.validate();
  if (main.empty()) throw Error(ErrorKind::input, "mainstream is empty");
  if (!sub_times.empty() && !(sub_velocity > 0.0)) throw Error(ErrorKind::input, "substream velocity must be positive");
  for (std::size_t k = 1; k < main.size(); ++k)
    if (main[k].time < main[k - 1].time) throw Error(ErrorKind::input, "mainstream passage times are not sorted");
  for (std::size_t k = 1; k < sub_times.size(); ++k)
    if (sub_times[k] < sub_times[k - 1]) throw Error(ErrorKind::input, "substream passage times are not sorted");

  MergeReport report;
  report.tolerance = options.tolerance;
  std::size_t im = 0;
  std::size_t is = 0;
  while (im < main.size() || is < sub_times.size()) {
    // Ties go to the mainstream vehicle, which is already in the lane.
    if (is == sub_times.size() || (im < main.size() && main[im].time <= sub_times[is])) {
      report.sequence.push_back({Stream::main, static_cast<int>(im), main[im]});
      ++im;
    } else {
      report.sequence.push_back({Stream::sub, static_cast<int>(is), {sub_times[is], sub_velocity}});
      ++is;
    }
  }
  for (std::size_t k = 1; k < report.sequence.size(); ++k) {
    const auto& follower = report.sequence[k].arrival;
    MergeGap g;
    g.leader = k - 1;
    g.follower = k;
    g.gap = follower.time - report.sequence[k - 1].arrival.time;
    g.velocity = follower.velocity;
    g.required = safe_time_gap(follower.velocity, params);
    g.margin = g.gap - g.required;
    g.safe = g.margin >= -options.tolerance;
    report.worst_margin = std::min(report.worst_margin, g.margin);
    report.feasible = report.feasible && g.safe;
    report.gaps.push_back(g);
  }
  return report;
}

/// Mainstream arrivals at the downstream end of a simulated trace.
inline std::vector<Arrival> downstream_arrivals(const PlatoonTrace& trace) {
  std::vector<Arrival> out;
  for (const auto& veh : trace.vehicles) out.push_back({veh.t.back(), veh.v.back()});
  return out;
}

inline bool downstream_converged(const PlatoonTrace& trace, double threshold) {
  for (const auto& veh : trace.vehicles) {
    if (std::abs(veh.e.back()) >= threshold) return false;
    if (veh.index > 0 && std::abs(veh.delta.back()) >= threshold) return false;
  }
  return true;
}

inline MergeReport audit_merge(const PlatoonTrace& main, std::span<const double> sub_times, double sub_velocity,
                               const SafetyParams& params, const MergeOptions& options = {}) {
  const auto arrivals = downstream_arrivals(main);
  MergeReport report = audit_merge(arrivals, sub_times, sub_velocity, params, options);
  report.main_converged = downstream_converged(main, options.convergence_threshold);
  return report;
}

/// One substream vehicle at the midpoint of every gap between sub-platoons
/// (the gap ahead of each even-indexed mainstream vehicle).
inline std::vector<double> centered_insertion(std::span<const Arrival> main) {
  std::vector<double> out;
  for (std::size_t i = 2; i < main.size(); i += 2) out.push_back(0.5 * (main[i - 1].time + main[i].time));
  return out;
}

/// One substream vehicle a fixed offset behind the tail of every pair that
/// has another pair ahead of it.
inline std::vector<double> insertion_after_tail(std::span<const Arrival> main, double offset) {
  std::vector<double> out;
  for (std::size_t i = 2; i < main.size(); i += 2) out.push_back(main[i - 1].time + offset);
  return out;
}

}  // namespace platoon
