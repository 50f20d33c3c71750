#pragma once

// CSV form of a platoon trace: one row per (vehicle, grid point), vehicles
// in index order, locations ascending. Lead rows leave the predecessor
// columns empty.

#include <array>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "platoon/error.hpp"
#include "platoon/io/format.hpp"
#include "platoon/merge.hpp"
#include "platoon/sim.hpp"

namespace platoon::io {

inline constexpr std::string_view kTraceHeader =
    "s,i,parity,t,v,u,e,delta,delta_slope,tau_realized,tau_desired,safety_margin";

/// Writes every `every`-th grid point plus the last one.
inline void write_trace_csv(std::ostream& os, const PlatoonTrace& trace, std::size_t every = 1) {
  if (every == 0) every = 1;
  os << kTraceHeader << '\n';
  const std::size_t n = trace.s.size();
  for (const auto& veh : trace.vehicles) {
    for (std::size_t k = 0; k < n; ++k) {
      if (k % every != 0 && k + 1 != n) continue;
      os << format_number(trace.s[k]) << ',' << veh.index << ',' << to_string(veh.parity) << ','
         << format_number(veh.t[k]) << ',' << format_number(veh.v[k]) << ',' << format_number(veh.u[k]) << ','
         << format_number(veh.e[k]) << ',' << format_number(veh.delta[k]) << ','
         << format_number(veh.delta_slope[k]) << ',' << format_number(veh.tau_realized[k]) << ','
         << format_number(veh.tau_desired[k]) << ',' << format_number(veh.safety_margin[k]) << '\n';
    }
  }
}

/// The downstream-most row of one vehicle in a trace file.
struct TraceEndpoint {
  int index = 0;
  double s = 0.0;
  double t = 0.0;
  double v = 0.0;
  double e = 0.0;
  double delta = 0.0;  ///< NaN for the lead
};

/// Reads a trace CSV and keeps the last location of each vehicle.
inline std::vector<TraceEndpoint> read_trace_endpoints(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorKind::input, "trace file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceHeader) throw Error(ErrorKind::input, "unexpected trace header: " + line);

  std::map<int, TraceEndpoint> last;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::array<std::string_view, 12> fields{};
    std::size_t count = 0;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      if (count == fields.size()) throw Error(ErrorKind::input, "too many fields on row " + std::to_string(row));
      fields[count++] = rest.substr(0, comma);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (count != fields.size()) throw Error(ErrorKind::input, "expected 12 fields on row " + std::to_string(row));
    auto number = [&](std::size_t col) {
      const auto x = parse_number(fields[col]);
      if (!x) throw Error(ErrorKind::input, "bad number on row " + std::to_string(row) + ": " + std::string(fields[col]));
      return *x;
    };
    const double idx = number(1);
    if (!(idx >= 0.0) || idx != static_cast<int>(idx)) throw Error(ErrorKind::input, "bad vehicle index on row " + std::to_string(row));
    TraceEndpoint ep{static_cast<int>(idx), number(0), number(3), number(4), number(6), number(7)};
    if (std::isnan(ep.s) || std::isnan(ep.t) || std::isnan(ep.v))
      throw Error(ErrorKind::input, "missing s, t or v on row " + std::to_string(row));
    auto it = last.find(ep.index);
    if (it == last.end() || ep.s >= it->second.s) last[ep.index] = ep;
  }
  if (last.empty()) throw Error(ErrorKind::input, "trace has no rows");
  std::vector<TraceEndpoint> out;
  int expected = 0;
  for (const auto& [index, ep] : last) {
    if (index != expected++) throw Error(ErrorKind::input, "trace vehicle indices are not contiguous");
    out.push_back(ep);
  }
  return out;
}

inline std::vector<Arrival> arrivals_from(const std::vector<TraceEndpoint>& endpoints) {
  std::vector<Arrival> out;
  for (const auto& ep : endpoints) out.push_back({ep.t, ep.v});
  return out;
}

inline bool endpoints_converged(const std::vector<TraceEndpoint>& endpoints, double threshold) {
  for (const auto& ep : endpoints) {
    if (std::abs(ep.e) >= threshold) return false;
    if (ep.index > 0 && std::abs(ep.delta) >= threshold) return false;
  }
  return true;
}

}  // namespace platoon::io
