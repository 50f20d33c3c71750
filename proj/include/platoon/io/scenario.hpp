#pragma once

// Scenario documents (JSON). Sections: name, safety, profile, gains, grid,
// vehicles, perturbations. Unknown keys are rejected at every level.
//
//   {
//     "name": "merge-shaping",
//     "safety": {"l": 6, "a_min": 4},
//     "profile": {"kind": "tanh", "tau0": 2.6, "tau_odd_end": 1.74,
//                 "gamma": 0.057, "center_s": 0, "accel_limit": 4, "gamma_tol": 1e-4},
//     "gains": {"p": 0.1, "p0": 0.01, "p1": 0.2},
//     "grid": {"s_start": -175, "s_end": 175, "h": 0.01, "output_every": 10},
//     "vehicles": {"count": 10, "entry": "ideal", "u_max": 8},
//     "perturbations": [{"vehicle": 3, "dt0": 0.5, "dv0": 0}]
//   }
//
// profile.gamma absent means "optimize". vehicles.entry is "ideal" or
// {"times": [...], "velocities": [...]}.

#include <fstream>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "platoon/error.hpp"
#include "platoon/profiles.hpp"
#include "platoon/sim.hpp"

namespace platoon::io {

using nlohmann::json;

struct ProfileSpec {
  ShapingProfile::Kind kind = ShapingProfile::Kind::tanh;
  double tau0 = 2.6;
  double tau_odd_end = 1.74;
  std::optional<double> gamma;
  double center_s = 0.0;
  std::optional<double> accel_limit;
  double gamma_tol = 1e-4;
};

struct ScenarioSpec {
  std::string name = "scenario";
  SafetyParams safety{};
  ProfileSpec profile{};
  ControllerGains gains{};
  std::optional<double> s_start;
  std::optional<double> s_end;
  double h = 0.01;
  std::size_t output_every = 10;
  int n_vehicles = 10;
  std::optional<EntryConditions> entry;
  std::vector<Perturbation> perturbations;
  std::optional<double> u_max;
};

namespace detail {

inline void reject_unknown(const json& obj, std::string_view section, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw Error(ErrorKind::input, std::string(section) + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw Error(ErrorKind::input, "unknown key \"" + key + "\" in " + std::string(section));
  }
}

inline double number_at(const json& obj, const char* key, std::string_view section) {
  const auto& v = obj.at(key);
  if (!v.is_number()) throw Error(ErrorKind::input, std::string(section) + "." + key + " must be a number");
  return v.get<double>();
}

inline void read_number(const json& obj, const char* key, std::string_view section, double& out) {
  if (obj.contains(key)) out = number_at(obj, key, section);
}

inline void read_number(const json& obj, const char* key, std::string_view section, std::optional<double>& out) {
  if (obj.contains(key) && !obj.at(key).is_null()) out = number_at(obj, key, section);
}

inline std::vector<double> number_list(const json& v, std::string_view what) {
  if (!v.is_array()) throw Error(ErrorKind::input, std::string(what) + " must be an array");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw Error(ErrorKind::input, std::string(what) + " must hold numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

inline int integer_at(const json& obj, const char* key, std::string_view section) {
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) throw Error(ErrorKind::input, std::string(section) + "." + key + " must be an integer");
  return v.get<int>();
}

}  // namespace detail

inline ScenarioSpec parse_scenario(const json& doc) {
  using detail::read_number;
  detail::reject_unknown(doc, "scenario", {"name", "safety", "profile", "gains", "grid", "vehicles", "perturbations"});
  ScenarioSpec spec;
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) throw Error(ErrorKind::input, "name must be a string");
    spec.name = doc["name"].get<std::string>();
  }
  if (doc.contains("safety")) {
    const auto& s = doc["safety"];
    detail::reject_unknown(s, "safety", {"l", "a_min"});
    read_number(s, "l", "safety", spec.safety.vehicle_length);
    read_number(s, "a_min", "safety", spec.safety.a_min);
  }
  if (doc.contains("profile")) {
    const auto& p = doc["profile"];
    detail::reject_unknown(p, "profile", {"kind", "tau0", "tau_odd_end", "gamma", "center_s", "accel_limit", "gamma_tol"});
    if (p.contains("kind")) {
      const auto kind = p["kind"].is_string() ? p["kind"].get<std::string>() : std::string{};
      if (kind == "tanh")
        spec.profile.kind = ShapingProfile::Kind::tanh;
      else if (kind == "constant")
        spec.profile.kind = ShapingProfile::Kind::constant;
      else
        throw Error(ErrorKind::input, "profile.kind must be \"tanh\" or \"constant\"");
    }
    read_number(p, "tau0", "profile", spec.profile.tau0);
    read_number(p, "tau_odd_end", "profile", spec.profile.tau_odd_end);
    read_number(p, "gamma", "profile", spec.profile.gamma);
    read_number(p, "center_s", "profile", spec.profile.center_s);
    read_number(p, "accel_limit", "profile", spec.profile.accel_limit);
    read_number(p, "gamma_tol", "profile", spec.profile.gamma_tol);
  }
  if (doc.contains("gains")) {
    const auto& g = doc["gains"];
    detail::reject_unknown(g, "gains", {"p", "p0", "p1"});
    read_number(g, "p", "gains", spec.gains.p);
    read_number(g, "p0", "gains", spec.gains.p0);
    read_number(g, "p1", "gains", spec.gains.p1);
  }
  if (doc.contains("grid")) {
    const auto& g = doc["grid"];
    detail::reject_unknown(g, "grid", {"s_start", "s_end", "h", "output_every"});
    read_number(g, "s_start", "grid", spec.s_start);
    read_number(g, "s_end", "grid", spec.s_end);
    read_number(g, "h", "grid", spec.h);
    if (g.contains("output_every")) {
      const int every = detail::integer_at(g, "output_every", "grid");
      if (every < 1) throw Error(ErrorKind::input, "grid.output_every must be at least 1");
      spec.output_every = static_cast<std::size_t>(every);
    }
  }
  if (doc.contains("vehicles")) {
    const auto& v = doc["vehicles"];
    detail::reject_unknown(v, "vehicles", {"count", "entry", "u_max"});
    if (v.contains("count")) spec.n_vehicles = detail::integer_at(v, "count", "vehicles");
    if (v.contains("entry")) {
      const auto& e = v["entry"];
      if (e.is_string()) {
        if (e.get<std::string>() != "ideal") throw Error(ErrorKind::input, "vehicles.entry must be \"ideal\" or an object");
      } else {
        detail::reject_unknown(e, "vehicles.entry", {"times", "velocities"});
        spec.entry = EntryConditions{detail::number_list(e.at("times"), "vehicles.entry.times"),
                                     detail::number_list(e.at("velocities"), "vehicles.entry.velocities")};
      }
    }
    read_number(v, "u_max", "vehicles", spec.u_max);
  }
  if (doc.contains("perturbations")) {
    const auto& list = doc["perturbations"];
    if (!list.is_array()) throw Error(ErrorKind::input, "perturbations must be an array");
    for (const auto& p : list) {
      detail::reject_unknown(p, "perturbations[]", {"vehicle", "dt0", "dv0"});
      Perturbation pert;
      pert.vehicle = detail::integer_at(p, "vehicle", "perturbations[]");
      read_number(p, "dt0", "perturbations[]", pert.dt0);
      read_number(p, "dv0", "perturbations[]", pert.dv0);
      spec.perturbations.push_back(pert);
    }
  }
  if (spec.n_vehicles < 1) throw Error(ErrorKind::input, "vehicles.count must be at least 1");
  return spec;
}

inline ScenarioSpec load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::input, "cannot open config " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& ex) {
    throw Error(ErrorKind::input, "config " + path + " is not valid JSON: " + ex.what());
  }
  try {
    return parse_scenario(doc);
  } catch (const json::exception& ex) {
    throw Error(ErrorKind::input, std::string("config ") + path + ": " + ex.what());
  }
}

inline json to_json(const ScenarioSpec& spec) {
  json doc;
  doc["name"] = spec.name;
  doc["safety"] = {{"l", spec.safety.vehicle_length}, {"a_min", spec.safety.a_min}};
  json profile;
  profile["kind"] = spec.profile.kind == ShapingProfile::Kind::tanh ? "tanh" : "constant";
  profile["tau0"] = spec.profile.tau0;
  if (spec.profile.kind == ShapingProfile::Kind::tanh) {
    profile["tau_odd_end"] = spec.profile.tau_odd_end;
    profile["center_s"] = spec.profile.center_s;
    profile["gamma_tol"] = spec.profile.gamma_tol;
    if (spec.profile.gamma) profile["gamma"] = *spec.profile.gamma;
    if (spec.profile.accel_limit) profile["accel_limit"] = *spec.profile.accel_limit;
  }
  doc["profile"] = profile;
  doc["gains"] = {{"p", spec.gains.p}, {"p0", spec.gains.p0}, {"p1", spec.gains.p1}};
  json grid = {{"h", spec.h}, {"output_every", spec.output_every}};
  if (spec.s_start) grid["s_start"] = *spec.s_start;
  if (spec.s_end) grid["s_end"] = *spec.s_end;
  doc["grid"] = grid;
  json vehicles = {{"count", spec.n_vehicles}};
  if (spec.entry)
    vehicles["entry"] = {{"times", spec.entry->times}, {"velocities", spec.entry->velocities}};
  else
    vehicles["entry"] = "ideal";
  if (spec.u_max) vehicles["u_max"] = *spec.u_max;
  doc["vehicles"] = vehicles;
  json perts = json::array();
  for (const auto& p : spec.perturbations) perts.push_back({{"vehicle", p.vehicle}, {"dt0", p.dt0}, {"dv0", p.dv0}});
  doc["perturbations"] = perts;
  return doc;
}

struct ResolvedProfile {
  ShapingProfile profile;
  std::string gamma_source;  ///< "config", "optimized" or "none"
};

/// Builds the profile, running the gamma search when no gamma is given.
inline ResolvedProfile resolve_profile(const ScenarioSpec& spec) {
  const auto& p = spec.profile;
  if (p.kind == ShapingProfile::Kind::constant) return {constant_profile(p.tau0, spec.safety), "none"};
  if (p.gamma) return {design_profile(p.tau0, p.tau_odd_end, *p.gamma, p.center_s, spec.safety), "config"};
  GammaSearch search;
  search.accel_limit = p.accel_limit;
  const double gamma = optimize_gamma(p.tau0, p.tau_odd_end, spec.safety, p.gamma_tol, search);
  return {design_profile(p.tau0, p.tau_odd_end, gamma, p.center_s, spec.safety), "optimized"};
}

/// Location grid for a resolved profile; constant profiles default to [0, 100].
inline LocationGrid resolve_grid(const ScenarioSpec& spec, const ShapingProfile& profile) {
  LocationGrid grid = profile.kind() == ShapingProfile::Kind::tanh ? LocationGrid::around(profile, spec.h)
                                                                     : LocationGrid{0.0, 100.0, spec.h};
  grid.step = spec.h;
  if (spec.s_start) grid.s_start = *spec.s_start;
  if (spec.s_end) grid.s_end = *spec.s_end;
  grid.validate();
  return grid;
}

inline ScenarioConfig build_config(const ScenarioSpec& spec, const ShapingProfile& profile) {
  return ScenarioConfig{spec.name,         spec.n_vehicles,   profile, spec.gains, resolve_grid(spec, profile),
                        spec.entry,        spec.perturbations, spec.u_max};
}

}  // namespace platoon::io
