#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace platoon {

enum class ErrorKind {
  domain,
  infeasible_time_gap,
  infeasible_target,
  degenerate_profile,
  profile_inconsistency,
  grid,
  optimization_failure,
  stall,
  ordering_violation,
  invariant_violation,
  input,
};

/// Machine-readable name, used as the "reason" field in CLI diagnostics.
constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::domain: return "domain";
    case ErrorKind::infeasible_time_gap: return "infeasible-time-gap";
    case ErrorKind::infeasible_target: return "infeasible-target";
    case ErrorKind::degenerate_profile: return "degenerate-profile";
    case ErrorKind::profile_inconsistency: return "profile-inconsistency";
    case ErrorKind::grid: return "grid";
    case ErrorKind::optimization_failure: return "optimization-failure";
    case ErrorKind::stall: return "stall";
    case ErrorKind::ordering_violation: return "ordering-violation";
    case ErrorKind::invariant_violation: return "invariant-violation";
    case ErrorKind::input: return "input";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised when the simulation cannot continue; carries where and who.
class SimulationAbort : public Error {
 public:
  SimulationAbort(ErrorKind kind, const std::string& what, double location, int vehicle)
      : Error(kind, what), location_(location), vehicle_(vehicle) {}

  [[nodiscard]] double location() const noexcept { return location_; }
  [[nodiscard]] int vehicle() const noexcept { return vehicle_; }

 private:
  double location_;
  int vehicle_;
};

}  // namespace platoon
