#pragma once

// Command-line front end: safety-curve, design, simulate, audit-merge, sweep.
//
// Exit codes: 0 success, 2 usage or input error, 3 design infeasibility
// (including an infeasible merge), 4 simulation abort.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "platoon/error.hpp"
#include "platoon/io/format.hpp"
#include "platoon/io/scenario.hpp"
#include "platoon/io/trace_csv.hpp"
#include "platoon/merge.hpp"
#include "platoon/profiles.hpp"
#include "platoon/safety.hpp"
#include "platoon/sim.hpp"

namespace platoon::cli {

namespace fs = std::filesystem;
using nlohmann::json;

enum ExitCode : int { kOk = 0, kUsage = 2, kInfeasible = 3, kAbort = 4 };

inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::infeasible_target:
    case ErrorKind::infeasible_time_gap:
    case ErrorKind::degenerate_profile:
    case ErrorKind::profile_inconsistency:
    case ErrorKind::optimization_failure:
      return kInfeasible;
    case ErrorKind::stall:
    case ErrorKind::ordering_violation:
      return kAbort;
    default:
      return kUsage;
  }
}

/// One JSON line on stderr so scripts can read the reason.
inline void report_error(std::ostream& err, const Error& ex) {
  json diag = {{"error", std::string(to_string(ex.kind()))}, {"message", ex.what()}};
  if (const auto* abort = dynamic_cast<const SimulationAbort*>(&ex)) {
    diag["location"] = abort->location();
    diag["vehicle"] = abort->vehicle();
  }
  err << diag.dump() << '\n';
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

/// PLATOON_OUT wins over --out.
inline fs::path resolve_out_dir(const std::string& flag) {
  if (const char* env = std::getenv("PLATOON_OUT"); env != nullptr && *env != '\0') return env;
  return flag.empty() ? fs::path("out") : fs::path(flag);
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.flush();
  if (!out) throw Error(ErrorKind::input, "cannot write " + path.string());
}

/// The manifest goes last, after every other output is on disk.
inline void write_manifest(const fs::path& dir, json manifest) {
  manifest["timestamp"] = utc_timestamp();
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

struct SafetyCurveOptions {
  SafetyParams params{};
  double v_min = 2.0;
  double v_max = 30.0;
  int n_samples = 100;
  std::string out;
};

struct ScenarioOptions {
  std::string config;
  std::string out;
  std::optional<double> gamma;
  std::optional<double> h;
  std::optional<long> seed;
};

struct AuditOptions {
  std::string trace;
  std::string sub;
  std::string pattern;
  std::optional<double> offset;
  std::optional<double> velocity;
  std::string config;
  SafetyParams params{};
  double tolerance = 1e-6;
  std::string out;
};

struct SweepOptions {
  std::vector<std::string> configs;
  std::string out;
  std::optional<double> gamma;
  std::optional<double> h;
};

inline std::string safety_curve_csv(const SafetyCurveOptions& opt) {
  const OperatingPoint best = min_time_gap_point(opt.params);
  std::ostringstream os;
  os << "v,tau_min,is_minimum\n";
  bool minimum_written = !(best.velocity >= opt.v_min && best.velocity <= opt.v_max);
  for (int k = 0; k < opt.n_samples; ++k) {
    const double v = opt.v_min + (opt.v_max - opt.v_min) * static_cast<double>(k) / (opt.n_samples - 1);
    if (!minimum_written && best.velocity <= v) {
      os << io::format_number(best.velocity) << ',' << io::format_number(best.time_gap) << ",1\n";
      minimum_written = true;
    }
    os << io::format_number(v) << ',' << io::format_number(safe_time_gap(v, opt.params)) << ",0\n";
  }
  return os.str();
}

inline int cmd_safety_curve(const SafetyCurveOptions& opt, std::ostream& err) {
  try {
    opt.params.validate();
    if (opt.n_samples < 2) throw Error(ErrorKind::input, "need at least 2 samples");
    if (!(opt.v_min > 0.0) || !(opt.v_max >= opt.v_min) || !std::isfinite(opt.v_max))
      throw Error(ErrorKind::input, "velocity range must satisfy 0 < v_min <= v_max");
    const fs::path dir = resolve_out_dir(opt.out);
    fs::create_directories(dir);
    write_text(dir / "safety_curve.csv", safety_curve_csv(opt));
    const OperatingPoint best = min_time_gap_point(opt.params);
    write_manifest(dir, {{"command", "safety-curve"},
                         {"safety", {{"l", opt.params.vehicle_length}, {"a_min", opt.params.a_min}}},
                         {"v_range", {opt.v_min, opt.v_max}},
                         {"n_samples", opt.n_samples},
                         {"minimum", {{"v", best.velocity}, {"tau", best.time_gap}}},
                         {"outputs", {{"curve", (dir / "safety_curve.csv").string()}}}});
    return kOk;
  } catch (const Error& ex) {
    report_error(err, ex);
    return kUsage;
  }
}

namespace detail {

inline io::ScenarioSpec load_with_overrides(const ScenarioOptions& opt) {
  if (opt.config.empty()) throw Error(ErrorKind::input, "--config is required");
  auto spec = io::load_scenario(opt.config);
  if (opt.gamma) spec.profile.gamma = *opt.gamma;
  if (opt.h) spec.h = *opt.h;
  return spec;
}

inline json profile_json(const ShapingProfile& p, const io::ResolvedProfile& resolved, double accel_limit) {
  json doc = {{"kind", p.kind() == ShapingProfile::Kind::tanh ? "tanh" : "constant"},
              {"tau0", p.tau0()},
              {"gamma_source", resolved.gamma_source},
              {"safety", {{"l", p.params().vehicle_length}, {"a_min", p.params().a_min}}}};
  if (p.kind() == ShapingProfile::Kind::tanh) {
    doc["tau_odd_end"] = p.tau_odd_end();
    doc["tau_even_end"] = p.tau_even_end();
    doc["alpha"] = p.alpha();
    doc["beta"] = p.beta();
    doc["gamma"] = p.gamma();
    doc["center_s"] = p.center_s();
    doc["max_shaping_slope"] = p.max_shaping_slope();
    doc["accel_limit"] = accel_limit;
    doc["min_acceleration"] = min_profile_acceleration(p);
  }
  return doc;
}

inline std::string profile_csv(const ShapingProfile& profile, const LocationGrid& grid, std::size_t every) {
  const LocationGrid coarse{grid.s_start, grid.s_end, grid.step * static_cast<double>(every)};
  std::vector<double> s(coarse.size());
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = coarse.at(k);
  if (s.size() < 3) throw Error(ErrorKind::grid, "profile grid needs at least 3 points");
  const auto acc = acceleration_profiles(profile, s);
  std::ostringstream os;
  os << "s,tau_odd,tau_even,v_odd,v_des,a_odd,a_even\n";
  for (std::size_t k = 0; k < s.size(); ++k) {
    os << io::format_number(s[k]) << ',' << io::format_number(profile.time_gap(Parity::odd, s[k]).value) << ','
       << io::format_number(profile.time_gap(Parity::even, s[k]).value) << ','
       << io::format_number(profile.odd_velocity(s[k])) << ',' << io::format_number(profile.desired_velocity(s[k]))
       << ',' << io::format_number(acc.odd[k]) << ',' << io::format_number(acc.even[k]) << '\n';
  }
  return os.str();
}

inline json summary_json(const PlatoonTrace& trace) {
  const auto& sum = trace.summary;
  json vehicles = json::array();
  for (std::size_t i = 0; i < sum.vehicles.size(); ++i) {
    const auto& v = sum.vehicles[i];
    json entry = {{"index", i}, {"sup_abs_e", v.sup_abs_e}, {"min_u", v.min_u}};
    if (i > 0) {
      entry["sup_abs_delta"] = v.sup_abs_delta;
      entry["min_safety_margin"] = v.min_safety_margin;
    }
    vehicles.push_back(entry);
  }
  json doc = {{"min_acceleration", sum.min_acceleration},
              {"convergence_threshold", sum.convergence_threshold},
              {"convergence_s", sum.convergence_s ? json(*sum.convergence_s) : json(nullptr)},
              {"vehicles", vehicles}};
  if (trace.vehicles.size() > 1) doc["min_safety_margin"] = sum.min_safety_margin;
  return doc;
}

}  // namespace detail

inline int cmd_design(const ScenarioOptions& opt, std::ostream& err) {
  try {
    const auto spec = detail::load_with_overrides(opt);
    const auto resolved = io::resolve_profile(spec);
    const auto& profile = resolved.profile;
    const auto grid = io::resolve_grid(spec, profile);
    const double accel_limit = spec.profile.accel_limit.value_or(spec.safety.a_min);
    const fs::path dir = resolve_out_dir(opt.out);
    fs::create_directories(dir);
    write_text(dir / "profile.json", detail::profile_json(profile, resolved, accel_limit).dump(2) + "\n");
    write_text(dir / "profile.csv", detail::profile_csv(profile, grid, spec.output_every));
    json manifest = {{"command", "design"},
                     {"scenario", spec.name},
                     {"config", io::to_json(spec)},
                     {"gamma_source", resolved.gamma_source},
                     {"outputs", {{"profile", (dir / "profile.json").string()}, {"samples", (dir / "profile.csv").string()}}}};
    manifest["gamma"] = profile.kind() == ShapingProfile::Kind::tanh ? json(profile.gamma()) : json(nullptr);
    if (opt.seed) manifest["seed"] = *opt.seed;
    if (profile.kind() == ShapingProfile::Kind::tanh) {
      const double min_a = min_profile_acceleration(profile);
      manifest["checks"] = {{"acceleration", min_a >= -accel_limit - kAccelerationSlack}};
    }
    write_manifest(dir, manifest);
    return kOk;
  } catch (const Error& ex) {
    report_error(err, ex);
    return exit_code_for(ex.kind());
  }
}

/// simulate with the output directory already resolved.
inline int run_simulate(const ScenarioOptions& opt, const fs::path& dir, std::ostream& err) {
  try {
    const auto spec = detail::load_with_overrides(opt);
    const auto resolved = io::resolve_profile(spec);
    const auto config = io::build_config(spec, resolved.profile);
    fs::create_directories(dir);
    json manifest = {{"command", "simulate"},
                     {"scenario", spec.name},
                     {"config", io::to_json(spec)},
                     {"gamma_source", resolved.gamma_source},
                     {"grid", {{"s_start", config.grid.s_start}, {"s_end", config.grid.s_end}, {"h", config.grid.step}}}};
    manifest["gamma"] = resolved.profile.kind() == ShapingProfile::Kind::tanh ? json(resolved.profile.gamma()) : json(nullptr);
    if (opt.seed) manifest["seed"] = *opt.seed;

    PlatoonTrace trace;
    try {
      trace = simulate_platoon(config);
    } catch (const SimulationAbort& ex) {
      manifest["status"] = "aborted";
      manifest["abort"] = {{"reason", std::string(to_string(ex.kind()))},
                           {"message", ex.what()},
                           {"location", ex.location()},
                           {"vehicle", ex.vehicle()}};
      write_manifest(dir, manifest);
      throw;
    }

    const fs::path trace_path = dir / "trace.csv";
    {
      std::ofstream out(trace_path, std::ios::binary);
      io::write_trace_csv(out, trace, spec.output_every);
      out.flush();
      if (!out) throw Error(ErrorKind::input, "cannot write " + trace_path.string());
    }
    const double accel_limit = spec.profile.accel_limit.value_or(spec.safety.a_min);
    const auto& sum = trace.summary;
    manifest["status"] = "ok";
    manifest["summary"] = detail::summary_json(trace);
    manifest["checks"] = {
        {"safety", trace.vehicles.size() < 2 || sum.min_safety_margin >= -1e-6},
        {"acceleration", sum.min_acceleration >= -accel_limit - 0.05},
        {"convergence", sum.convergence_s.has_value() && *sum.convergence_s < config.grid.s_end}};
    manifest["outputs"] = {{"trace", trace_path.string()}};
    write_manifest(dir, manifest);
    return kOk;
  } catch (const Error& ex) {
    report_error(err, ex);
    return exit_code_for(ex.kind());
  }
}

inline int cmd_simulate(const ScenarioOptions& opt, std::ostream& err) {
  return run_simulate(opt, resolve_out_dir(opt.out), err);
}

namespace detail {

struct SubSpec {
  std::string pattern;  ///< "", "none", "centered", "after-tail"
  std::vector<double> times;
  std::optional<double> offset;
  std::optional<double> velocity;
};

inline SubSpec load_sub_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::input, "cannot open substream spec " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& ex) {
    throw Error(ErrorKind::input, "substream spec is not valid JSON: " + std::string(ex.what()));
  }
  io::detail::reject_unknown(doc, "substream", {"times", "pattern", "offset", "velocity"});
  SubSpec spec;
  if (doc.contains("times")) spec.times = io::detail::number_list(doc["times"], "substream.times");
  if (doc.contains("pattern")) {
    if (!doc["pattern"].is_string()) throw Error(ErrorKind::input, "substream.pattern must be a string");
    spec.pattern = doc["pattern"].get<std::string>();
  }
  io::detail::read_number(doc, "offset", "substream", spec.offset);
  io::detail::read_number(doc, "velocity", "substream", spec.velocity);
  return spec;
}

inline json report_json(const MergeReport& report) {
  json sequence = json::array();
  for (const auto& slot : report.sequence)
    sequence.push_back({{"stream", to_string(slot.stream)},
                        {"index", slot.index},
                        {"time", slot.arrival.time},
                        {"velocity", slot.arrival.velocity}});
  json gaps = json::array();
  for (const auto& g : report.gaps)
    gaps.push_back({{"leader", g.leader},
                    {"follower", g.follower},
                    {"gap", g.gap},
                    {"velocity", g.velocity},
                    {"required", g.required},
                    {"margin", g.margin},
                    {"safe", g.safe}});
  return {{"feasible", report.feasible},
          {"worst_margin", report.gaps.empty() ? json(nullptr) : json(report.worst_margin)},
          {"tolerance", report.tolerance},
          {"main_converged", report.main_converged},
          {"sequence", sequence},
          {"gaps", gaps}};
}

}  // namespace detail

inline int cmd_audit_merge(const AuditOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    SafetyParams params = opt.params;
    if (!opt.config.empty()) params = io::load_scenario(opt.config).safety;
    params.validate();

    std::ifstream in(opt.trace);
    if (opt.trace.empty() || !in) throw Error(ErrorKind::input, "cannot open trace " + opt.trace);
    const auto endpoints = io::read_trace_endpoints(in);
    const auto main = io::arrivals_from(endpoints);

    detail::SubSpec sub;
    if (!opt.sub.empty()) sub = detail::load_sub_spec(opt.sub);
    if (!opt.pattern.empty()) sub.pattern = opt.pattern;
    if (opt.offset) sub.offset = opt.offset;
    if (opt.velocity) sub.velocity = opt.velocity;

    std::vector<double> times = sub.times;
    if (sub.pattern == "centered") {
      times = centered_insertion(main);
    } else if (sub.pattern == "after-tail" || sub.pattern == "after_tail") {
      if (!sub.offset) throw Error(ErrorKind::input, "after-tail insertion needs an offset");
      times = insertion_after_tail(main, *sub.offset);
    } else if (sub.pattern == "none") {
      times.clear();
    } else if (!sub.pattern.empty()) {
      throw Error(ErrorKind::input, "unknown substream pattern " + sub.pattern);
    }
    const double velocity = sub.velocity.value_or(main.back().velocity);

    MergeOptions options;
    options.tolerance = opt.tolerance;
    MergeReport report = audit_merge(main, times, velocity, params, options);
    report.main_converged = io::endpoints_converged(endpoints, options.convergence_threshold);

    const fs::path dir = resolve_out_dir(opt.out);
    fs::create_directories(dir);
    write_text(dir / "merge_report.json", detail::report_json(report).dump(2) + "\n");
    out << (report.feasible ? "feasible" : "infeasible") << " worst_margin="
        << (report.gaps.empty() ? std::string("n/a") : io::format_number(report.worst_margin)) << '\n';
    return report.feasible ? kOk : kInfeasible;
  } catch (const Error& ex) {
    report_error(err, ex);
    return kUsage;
  }
}

/// Runs independent simulate jobs in parallel, one output directory per
/// scenario name under the sweep root. Returns the worst job exit code.
inline int cmd_sweep(const SweepOptions& opt, std::ostream& err) {
  std::vector<std::string> names;
  fs::path root;
  try {
    if (opt.configs.empty()) throw Error(ErrorKind::input, "sweep needs at least one --config");
    root = resolve_out_dir(opt.out);
    std::set<std::string> seen;
    for (const auto& path : opt.configs) {
      const auto name = io::load_scenario(path).name;
      if (!seen.insert(name).second) throw Error(ErrorKind::input, "duplicate scenario name " + name);
      names.push_back(name);
    }
    fs::create_directories(root);
  } catch (const Error& ex) {
    report_error(err, ex);
    return kUsage;
  }

  struct JobResult {
    int code = kOk;
    std::string diagnostics;
  };
  std::vector<std::future<JobResult>> jobs;
  for (std::size_t k = 0; k < opt.configs.size(); ++k) {
    ScenarioOptions job{opt.configs[k], {}, opt.gamma, opt.h, std::nullopt};
    jobs.push_back(std::async(std::launch::async, [job, dir = root / names[k]] {
      std::ostringstream job_err;
      const int code = run_simulate(job, dir, job_err);
      return JobResult{code, job_err.str()};
    }));
  }
  int worst = kOk;
  json runs = json::array();
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    const auto result = jobs[k].get();
    err << result.diagnostics;
    worst = std::max(worst, result.code);
    runs.push_back({{"scenario", names[k]}, {"config", opt.configs[k]}, {"exit_code", result.code},
                    {"out", (root / names[k]).string()}});
  }
  try {
    write_manifest(root, {{"command", "sweep"}, {"runs", runs}});
  } catch (const Error& ex) {
    report_error(err, ex);
    return std::max(worst, static_cast<int>(kUsage));
  }
  return worst;
}

/// Parses argv and dispatches to a subcommand.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Traffic shaping of automated-vehicle platoons"};
  app.require_subcommand(1);
  // --h is the grid step, so help is long-form only.
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_help_all_flag("--help-all", "Print help for every subcommand and exit");

  SafetyCurveOptions curve;
  auto* c_curve = app.add_subcommand("safety-curve", "Sample the minimum safe time-gap over velocity");
  c_curve->add_option("--l", curve.params.vehicle_length, "Vehicle length plus standstill spacing [m]");
  c_curve->add_option("--a-min", curve.params.a_min, "Maximum deceleration magnitude [m/s^2]");
  c_curve->add_option("--v-min", curve.v_min, "Lowest velocity [m/s]");
  c_curve->add_option("--v-max", curve.v_max, "Highest velocity [m/s]");
  c_curve->add_option("--n", curve.n_samples, "Number of samples");
  std::string curve_config;
  c_curve->add_option("--config", curve_config, "Take safety parameters from a scenario file");
  c_curve->add_option("--out", curve.out, "Output directory");

  ScenarioOptions scenario;
  auto add_scenario_flags = [&scenario](CLI::App* cmd) {
    cmd->add_option("--config", scenario.config, "Scenario JSON")->required();
    cmd->add_option("--out", scenario.out, "Output directory");
    cmd->add_option("--gamma", scenario.gamma, "Override the profile gamma [1/m]");
    cmd->add_option("--h", scenario.h, "Grid step [m]");
    cmd->add_option("--seed", scenario.seed, "Reserved; recorded in the manifest");
  };
  auto* c_design = app.add_subcommand("design", "Design the time-gap and velocity profiles");
  add_scenario_flags(c_design);
  auto* c_sim = app.add_subcommand("simulate", "Simulate the platoon and write its trace");
  add_scenario_flags(c_sim);

  AuditOptions audit;
  auto* c_audit = app.add_subcommand("audit-merge", "Check a substream merge against a simulated trace");
  c_audit->add_option("--trace", audit.trace, "Mainstream trace CSV")->required();
  c_audit->add_option("--sub", audit.sub, "Substream spec JSON");
  c_audit->add_option("--pattern", audit.pattern, "none | centered | after-tail");
  c_audit->add_option("--offset", audit.offset, "Offset behind each pair's tail for after-tail [s]");
  c_audit->add_option("--velocity", audit.velocity, "Substream velocity [m/s]");
  c_audit->add_option("--config", audit.config, "Take safety parameters from a scenario file");
  c_audit->add_option("--l", audit.params.vehicle_length, "Vehicle length plus standstill spacing [m]");
  c_audit->add_option("--a-min", audit.params.a_min, "Maximum deceleration magnitude [m/s^2]");
  c_audit->add_option("--tolerance", audit.tolerance, "Accepted negative margin [s]");
  c_audit->add_option("--out", audit.out, "Output directory");

  SweepOptions sweep;
  auto* c_sweep = app.add_subcommand("sweep", "Simulate several scenarios in parallel");
  c_sweep->add_option("--config", sweep.configs, "Scenario JSON (repeatable)")->required();
  c_sweep->add_option("--out", sweep.out, "Root output directory");
  c_sweep->add_option("--gamma", sweep.gamma, "Override gamma in every scenario [1/m]");
  c_sweep->add_option("--h", sweep.h, "Grid step for every scenario [m]");
  long sweep_seed = 0;
  c_sweep->add_option("--seed", sweep_seed, "Reserved");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  if (c_curve->parsed()) {
    if (!curve_config.empty()) {
      try {
        curve.params = io::load_scenario(curve_config).safety;
      } catch (const Error& ex) {
        report_error(err, ex);
        return kUsage;
      }
    }
    return cmd_safety_curve(curve, err);
  }
  if (c_design->parsed()) return cmd_design(scenario, err);
  if (c_sim->parsed()) return cmd_simulate(scenario, err);
  if (c_audit->parsed()) return cmd_audit_merge(audit, out, err);
  if (c_sweep->parsed()) return cmd_sweep(sweep, err);
  return kUsage;
}

}  // namespace platoon::cli
