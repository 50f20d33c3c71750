// Acceptance checks for the shaping pipeline. Prints one PASS/FAIL line per
// criterion; with an argument, runs only the named criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "platoon/platoon.hpp"

using namespace platoon;

namespace {

const SafetyParams kParams{6.0, 4.0};
constexpr double kTau0 = 2.6;
constexpr double kTauEnd = 1.74;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double merge_gamma() {
  static const double gamma = optimize_gamma(kTau0, kTauEnd, kParams, 1e-4);
  return gamma;
}

ScenarioConfig merge_scenario(int n = 10, double step = 0.01) {
  const auto profile = design_profile(kTau0, kTauEnd, merge_gamma(), 0.0, kParams);
  ScenarioConfig c{.name = "merge-shaping", .n_vehicles = n, .profile = profile};
  c.grid = LocationGrid::around(profile, step);
  return c;
}

const PlatoonTrace& merge_trace() {
  static const PlatoonTrace trace = simulate_platoon(merge_scenario());
  return trace;
}

Outcome gamma_reproduction() {
  const auto start = std::chrono::steady_clock::now();
  const double gamma = optimize_gamma(kTau0, kTauEnd, kParams, 1e-4);
  const double elapsed = seconds_since(start);
  const bool ok = std::abs(gamma - 0.057) <= 0.005 && elapsed < 5.0;
  return {ok, fmt("gamma* = %.5f 1/m (0.057 +- 0.005), %.2f s (< 5 s)", gamma, elapsed)};
}

Outcome boundary_velocities() {
  const double v1 = velocity_for_time_gap(kTau0, kParams);
  const double v2 = velocity_for_time_gap(kTauEnd, kParams);
  const auto best = min_time_gap_point(kParams);
  const double dv = std::abs(best.velocity - std::sqrt(48.0));
  const double dtau = std::abs(best.time_gap - std::sqrt(3.0));
  const bool ok = std::abs(v1 - 18.156) <= 0.01 && std::abs(v2 - 7.625) <= 0.01 && dv <= 1e-6 && dtau <= 1e-6;
  return {ok, fmt("v(2.6) = %.4f (18.156 +- 0.01), v(1.74) = %.4f (7.625 +- 0.01), minimum (%.6f, %.6f) off by "
                  "(%.1e, %.1e)",
                  v1, v2, best.velocity, best.time_gap, dv, dtau)};
}

Outcome tau0_ratio() {
  const double tau_min = min_time_gap_point(kParams).time_gap;
  const double rel = std::abs(kTau0 / (1.5 * tau_min) - 1.0);
  return {rel <= 0.003, fmt("2.6 / (1.5 tau_min) - 1 = %.4f%% (|.| <= 0.3%%)", 100.0 * rel)};
}

Outcome oracle_agreement() {
  struct Case {
    const char* name;
    double p0, p1;
  };
  const Case cases[] = {{"distinct", 0.02, 0.3}, {"repeated", 0.01, 0.2}, {"complex", 0.02, 0.2}};
  bool ok = true;
  std::string detail;
  for (const auto& c : cases) {
    auto config = merge_scenario();
    config.gains = {0.1, c.p0, c.p1};
    // Vehicle 3 enters 0.5 s late; everyone behind it shifts with it.
    for (int i = 3; i < config.n_vehicles; ++i) config.perturbations.push_back({i, 0.5, 0.0});
    const auto trace = simulate_platoon(config);
    const auto& veh = trace.vehicles[3];
    const DeltaSolution exact(veh.delta.front(), veh.delta_slope.front(), config.gains);
    double worst = 0.0;
    for (std::size_t k = 0; k < trace.s.size(); ++k)
      worst = std::max(worst, std::abs(veh.delta[k] - exact.value(trace.s[k] - trace.s.front())));
    ok = ok && worst <= 1e-6 && std::abs(veh.delta.front() - 0.5) < 1e-12;
    detail += fmt("%s %.1e, ", c.name, worst);
  }

  auto config = merge_scenario();
  config.perturbations = {{0, 0.0, 1.0}};
  const auto trace = simulate_platoon(config);
  const auto& lead = trace.vehicles[0];
  double worst = 0.0;
  for (std::size_t k = 0; k < trace.s.size(); ++k)
    worst = std::max(worst,
                     std::abs(lead.e[k] - lead_error_solution(lead.e.front(), config.gains.p, trace.s[k] - trace.s.front())));
  ok = ok && worst <= 1e-8;
  detail += fmt("lead e0 %.1e (Delta <= 1e-6, e0 <= 1e-8)", worst);
  return {ok, "max |sim - analytic|: " + detail};
}

Outcome plant_stability() {
  std::vector<std::vector<Perturbation>> sets;
  std::mt19937 rng(20240611);
  std::uniform_real_distribution<double> dt(-0.2, 0.2), dv(-2.0, 2.0);
  for (int rep = 0; rep < 3; ++rep) {
    std::vector<Perturbation> set;
    for (int i = 0; i < 10; ++i) set.push_back({i, i == 0 ? 0.0 : dt(rng), dv(rng)});
    sets.push_back(set);
  }
  std::vector<Perturbation> alternating, squeeze;
  for (int i = 0; i < 10; ++i) {
    alternating.push_back({i, i % 2 ? 0.2 : -0.2, i % 2 ? -2.0 : 2.0});
    squeeze.push_back({i, i == 0 ? 0.0 : 0.2, i == 0 ? 2.0 : -2.0});
  }
  sets.push_back(alternating);
  sets.push_back(squeeze);

  bool ok = true;
  double slowest = 0.0;
  double latest = -1e300;
  double s_end = 0.0;
  for (const auto& set : sets) {
    auto config = merge_scenario();
    config.perturbations = set;
    const auto start = std::chrono::steady_clock::now();
    const auto trace = simulate_platoon(config);
    slowest = std::max(slowest, seconds_since(start));
    s_end = trace.s.back();
    const auto& conv = trace.summary.convergence_s;
    ok = ok && conv.has_value() && *conv < trace.s.back();
    if (conv) latest = std::max(latest, *conv);
  }
  ok = ok && slowest < 10.0;
  return {ok, fmt("%zu perturbation sets (|dt| <= 0.2 s, |dv| <= 2 m/s): all |e|, |Delta| < 1e-3 from s = %.1f m "
                  "(grid end %.1f m); slowest run %.2f s (< 10 s)",
                  sets.size(), latest, s_end, slowest)};
}

Outcome string_stability() {
  constexpr int n = 21;
  auto config = merge_scenario(n);
  const double s0 = config.grid.s_start;
  const double v_des = config.profile.desired_velocity(s0);
  // e0(0) = 0.01 s/m, followers on their profiles relative to the lead.
  double inv = 1.0 / v_des + 0.01;
  const auto ideal = ideal_entry(config.profile, n, s0);
  EntryConditions entry;
  for (int i = 0; i < n; ++i) {
    if (i > 0) inv += config.profile.time_gap(parity_of(i), s0).slope;
    entry.times.push_back(ideal[static_cast<std::size_t>(i)].t);
    entry.velocities.push_back(1.0 / inv);
  }
  config.entry = entry;
  const auto trace = simulate_platoon(config);
  const double bound = trace.summary.vehicles[0].sup_abs_e + config.profile.max_shaping_slope() + 1e-6;
  double worst = 0.0;
  for (const auto& vs : trace.summary.vehicles) worst = std::max(worst, vs.sup_abs_e);

  const auto& ideal_trace = merge_trace();
  double odd_dev = 0.0;
  for (const auto& veh : ideal_trace.vehicles) {
    if (veh.parity != Parity::odd) continue;
    for (std::size_t k = 0; k < ideal_trace.s.size(); ++k)
      odd_dev = std::max(odd_dev, std::abs(veh.e[k] + config.profile.shaping(ideal_trace.s[k]).slope));
  }
  const bool ok = worst <= bound && odd_dev <= 1e-3 && std::abs(trace.vehicles[0].e.front() - 0.01) < 1e-12;
  return {ok, fmt("max_i sup|e_i| = %.6f <= sup|e0| + beta gamma + 1e-6 = %.6f (i <= 20); sup|e_odd + T'| = %.1e "
                  "(<= 1e-3)",
                  worst, bound, odd_dev)};
}

Outcome safety_comfort() {
  const auto& sum = merge_trace().summary;
  const bool ok = sum.min_safety_margin >= -1e-6 && sum.min_acceleration >= -4.05;
  return {ok, fmt("min safety margin %.2e s (>= -1e-6), min acceleration %.4f m/s^2 (>= -4.05)", sum.min_safety_margin,
                  sum.min_acceleration)};
}

Outcome downstream_convergence() {
  const auto& trace = merge_trace();
  double gap_err = 0.0;
  double vel_err = 0.0;
  for (const auto& veh : trace.vehicles) {
    vel_err = std::max(vel_err, std::abs(veh.v.back() - 7.625));
    if (veh.index > 0)
      gap_err = std::max(gap_err, std::abs(veh.tau_realized.back() - (veh.parity == Parity::odd ? 1.74 : 3.46)));
  }
  return {gap_err <= 1e-3 && vel_err <= 0.01,
          fmt("max |gap - 1.74/3.46| = %.2e s (<= 1e-3), max |v - 7.625| = %.4f m/s (<= 0.01)", gap_err, vel_err)};
}

// With the default gains the closed loop varies on a tens-of-metres scale and
// RK4 is already at roundoff for h = 0.01, so the order is measured with the
// faster gains (0.5, 0.25, 1.0), whose truncation error is resolvable.
Outcome rk4_order() {
  auto run = [](double h) {
    auto config = merge_scenario(10, h);
    config.gains = {0.5, 0.25, 1.0};
    config.perturbations = {{0, 0.0, 1.0}, {3, 0.1, -1.0}, {6, -0.1, 1.0}};
    return simulate_platoon(config);
  };
  const auto reference = run(0.0025);
  auto deviation = [&](double h) {
    const auto trace = run(h);
    const auto stride = static_cast<std::size_t>(std::lround(h / 0.0025));
    double worst = 0.0;
    for (std::size_t k = 0; k < trace.s.size(); ++k) {
      const std::size_t r = k * stride;
      for (std::size_t i = 0; i < trace.vehicles.size(); ++i) {
        worst = std::max(worst, std::abs(trace.vehicles[i].t[k] - reference.vehicles[i].t[r]));
        worst = std::max(worst, std::abs(trace.vehicles[i].v[k] - reference.vehicles[i].v[r]));
      }
    }
    return worst;
  };
  const double coarse = deviation(0.02);
  const double fine = deviation(0.01);
  const double ratio = coarse / fine;
  return {ratio >= 12.0, fmt("gains (0.5, 0.25, 1.0): max deviation %.2e (h = 0.02) / %.2e (h = 0.01) = %.1f (>= 12)", coarse,
                           fine, ratio)};
}

Outcome merge_audit() {
  const auto& trace = merge_trace();
  const auto arrivals = downstream_arrivals(trace);
  const auto clean = audit_merge(trace, {}, 0.0, kParams);
  double pattern_err = 0.0;
  for (std::size_t k = 0; k < clean.gaps.size(); ++k)
    pattern_err = std::max(pattern_err, std::abs(clean.gaps[k].gap - (k % 2 ? 3.46 : 1.74)));
  const auto centered = audit_merge(trace, centered_insertion(arrivals), arrivals.back().velocity, kParams);
  const bool pattern_ok = clean.feasible && pattern_err <= 1e-3;
  const bool margin_ok = std::abs(centered.worst_margin - (-0.002)) <= 0.001;
  return {pattern_ok && margin_ok,
          fmt("empty substream %s, gap pattern error %.1e s; centered insertion worst margin %.4f s "
              "(expected -0.002 +- 0.001; halving the 3.46 s gap leaves 1.73 s against 1.74 s required)",
              clean.feasible ? "feasible" : "infeasible", pattern_err, centered.worst_margin)};
}

struct Criterion {
  std::string_view name;
  std::function<Outcome()> check;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {"gamma", gamma_reproduction},
      {"boundary_velocities", boundary_velocities},
      {"tau0_ratio", tau0_ratio},
      {"oracle_agreement", oracle_agreement},
      {"plant_stability", plant_stability},
      {"string_stability", string_stability},
      {"safety_comfort", safety_comfort},
      {"downstream_convergence", downstream_convergence},
      {"rk4_order", rk4_order},
      {"merge_audit", merge_audit},
  };
  const std::string_view only = argc > 1 ? argv[1] : "";
  int failures = 0;
  int ran = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && c.name != only) continue;
    ++ran;
    Outcome outcome;
    try {
      outcome = c.check();
    } catch (const std::exception& ex) {
      outcome = {false, std::string("threw: ") + ex.what()};
    }
    std::printf("%s %-24s %s\n", outcome.pass ? "PASS" : "FAIL", std::string(c.name).c_str(), outcome.detail.c_str());
    std::fflush(stdout);
    failures += outcome.pass ? 0 : 1;
  }
  if (ran == 0) {
    std::fprintf(stderr, "unknown criterion %s\n", std::string(only).c_str());
    return 2;
  }
  std::printf("%d/%d criteria passed\n", ran - failures, ran);
  return failures == 0 ? 0 : 1;
}
