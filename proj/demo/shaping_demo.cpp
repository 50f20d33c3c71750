// Shapes a ten-vehicle platoon into pairs ahead of a merge and prints what
// arrives downstream.

#include <cstdio>
#include <vector>

#include "platoon/platoon.hpp"

int main() {
  using namespace platoon;

  const SafetyParams safety{6.0, 4.0};
  const double tau0 = 2.6;
  const double tau_end = 1.74;

  const double gamma = optimize_gamma(tau0, tau_end, safety, 1e-4);
  const auto profile = design_profile(tau0, tau_end, gamma, 0.0, safety);
  std::printf("gamma* = %.4f 1/m, max |T'| = %.5f s/m\n", gamma, profile.max_shaping_slope());
  std::printf("upstream v = %.3f m/s, downstream v = %.3f m/s\n", profile.desired_velocity(-1e4),
              profile.desired_velocity(1e4));

  ScenarioConfig config{.name = "demo", .n_vehicles = 10, .profile = profile};
  config.grid = LocationGrid::around(profile);
  const auto trace = simulate_platoon(config);

  std::printf("\nvehicle  t(s_end)   v(s_end)   gap\n");
  for (const auto& veh : trace.vehicles) {
    std::printf("%5d  %9.3f  %9.4f", veh.index, veh.t.back(), veh.v.back());
    if (veh.index > 0) std::printf("  %6.3f", veh.tau_realized.back());
    std::printf("\n");
  }
  std::printf("\nmin acceleration %.3f m/s^2, min safety margin %.2e s\n", trace.summary.min_acceleration,
              trace.summary.min_safety_margin);

  const std::vector<double> times{0.0, 20.0, 40.0, 60.0};
  const auto positions = reconstruct_time_domain(trace, times);
  std::printf("\npositions at t = 0, 20, 40, 60 s (blank: off the grid)\n");
  for (std::size_t i = 0; i < positions.size(); ++i) {
    std::printf("%5zu", i);
    for (const auto& s : positions[i]) {
      if (s)
        std::printf("  %8.1f", *s);
      else
        std::printf("  %8s", "");
    }
    std::printf("\n");
  }
  return 0;
}
