#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace zscatter {

/// Fully resolved settings of one scenario run. Everything that influences
/// the numbers lives here so that the echoed copy reproduces the run.
struct RunConfig {
  std::string scenario;
  int dim = 3;
  int grid = 64;
  double box = 64.0;  // half-width L of the box [-L, L)^dim
  double dt = 0.05;
  int store_every = 2;
  double T = 2.0;
  std::vector<double> t0_list{20.0, 40.0};

  // data: u+ = amp_u g(sigma_u), A+ = amp_a Delta g(sigma_a), dA+ = amp_ad Delta g(sigma_ad)
  std::string profile = "simple";
  double amp_u = 0.2, sigma_u = 4.0;
  double amp_a = 0.5, sigma_a = 4.0;
  double amp_ad = 0.25, sigma_ad = 3.6;

  double lambda = 0.5;
  double phi_tol = 1e-3;
  int phi_max_iters = 12;

  double fit_lo = 5.0;
  double guard_step = 0.5;

  bool stage_construct = true;
  bool stage_cauchy = false;
  bool stage_iterate = false;
  bool stage_residual = false;
  bool stage_lemma = false;
  double iterate_t0 = 0.0;  // 0: first entry of t0_list

  // asserted floors, 0 disables
  double floor_composite = 0.0;
  double floor_b = 0.0;
  double floor_deviation = 0.0;
  double floor_wave_sup = 0.0;
  bool require_contraction = false;

  int snapshot_every = 200;  // stored steps between field snapshots, 0: none
  std::string out = "zscatter_out";
  int jobs = 1;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {"prop1_1", "prop1_1_weighted", "prop1_2",
                                                 "prop1_2_part2", "prop1_3", "free_checks"};
  return names;
}

inline bool known_scenario(const std::string& name) {
  for (const auto& n : scenario_names()) {
    if (n == name) return true;
  }
  return false;
}

/// Dimensions a scenario may run in.
inline std::vector<int> scenario_dims(const std::string& name) {
  if (name == "prop1_3") return {2};
  if (name == "free_checks") return {2, 3};
  return {3};
}

/// Scenario presets. Widths and boxes are chosen so the boundary-mass guard
/// stays clear up to the largest t0 at a grid one core can afford.
inline RunConfig scenario_defaults(const std::string& name, std::optional<int> dim = {}) {
  if (!known_scenario(name)) throw std::invalid_argument("unknown scenario '" + name + "'");
  RunConfig c;
  c.scenario = name;
  c.dim = dim.value_or(scenario_dims(name).front());
  if (c.dim == 2) {
    c.grid = 256;
    c.box = 128.0;
    c.t0_list = {30.0, 60.0};
  }

  if (name == "prop1_1" || name == "prop1_1_weighted") {
    c.t0_list = {10.0, 20.0, 40.0};
    c.stage_cauchy = true;
    c.stage_iterate = true;
    c.stage_residual = true;
    c.iterate_t0 = 20.0;
    c.floor_composite = 0.35;
    if (name == "prop1_1_weighted") c.floor_b = 0.60;
  } else if (name == "prop1_2" || name == "prop1_2_part2") {
    c.profile = "corrected";
    c.lambda = 1.5;
    c.t0_list = {40.0};
    // the wave shell crosses the Schroedinger bulk until t ~ 2 sigma
    c.fit_lo = 10.0;
    c.floor_composite = 1.35;
    if (name == "prop1_2_part2") c.floor_deviation = 1.35;
  } else if (name == "prop1_3") {
    c.profile = "zero_wave";
    c.lambda = 1.0;
    c.amp_u = 0.1;
    c.sigma_u = 2.0;
    c.amp_a = 0.0;
    c.amp_ad = 0.0;
    c.t0_list = {30.0, 60.0};
    c.stage_iterate = true;
    c.iterate_t0 = 60.0;
    c.floor_composite = 0.85;
    c.require_contraction = true;
  } else if (name == "free_checks") {
    c.stage_construct = false;
    c.stage_lemma = true;
    c.amp_u = 1.0;
    c.sigma_u = 1.0;
    c.amp_a = 1.0;
    c.sigma_a = 1.5;
    c.amp_ad = 0.5;
    c.sigma_ad = 1.2;
    c.grid = c.dim == 2 ? 256 : 128;
    c.box = 32.0;
    c.t0_list = {8.0};
    c.guard_step = 0.25;
    c.snapshot_every = 0;
    if (c.dim == 3) c.floor_wave_sup = 0.85;
  }
  return c;
}

inline void validate(const RunConfig& c) {
  auto fail = [](const std::string& m) { throw std::invalid_argument("config: " + m); };
  if (!known_scenario(c.scenario)) fail("unknown scenario '" + c.scenario + "'");
  bool dim_ok = false;
  for (int d : scenario_dims(c.scenario)) dim_ok = dim_ok || d == c.dim;
  if (!dim_ok) fail("scenario " + c.scenario + " does not run in dim " + std::to_string(c.dim));
  if (c.grid < 8 || (c.grid & (c.grid - 1)) != 0) fail("grid must be a power of two >= 8");
  if (std::pow(static_cast<double>(c.grid), c.dim) > std::pow(2.0, 24)) {
    fail("grid " + std::to_string(c.grid) + " is too large for dim " + std::to_string(c.dim));
  }
  if (!(c.box > 0.0)) fail("box must be positive");
  if (!(c.dt > 0.0)) fail("dt must be positive");
  if (c.store_every < 1) fail("store_every must be >= 1");
  if (!(c.T >= 1.0)) fail("T must be >= 1");
  if (c.t0_list.empty()) fail("t0 list is empty");
  for (std::size_t i = 0; i < c.t0_list.size(); ++i) {
    if (!(c.t0_list[i] > c.T)) fail("every t0 must exceed T");
    if (i > 0 && !(c.t0_list[i] > c.t0_list[i - 1])) fail("t0 list must increase");
  }
  if (c.profile != "simple" && c.profile != "corrected" && c.profile != "zero_wave") {
    fail("profile must be simple, corrected or zero_wave");
  }
  if (!(c.sigma_u > 0 && c.sigma_a > 0 && c.sigma_ad > 0)) fail("widths must be positive");
  if (!(c.lambda >= 0.0)) fail("lambda must be >= 0");
  if (!(c.phi_tol > 0.0) || c.phi_max_iters < 1) fail("bad fixed point settings");
  if (!(c.fit_lo >= 1.0)) fail("fit_lo must be >= 1");
  if (!(c.guard_step > 0.0)) fail("guard_step must be positive");
  if (c.iterate_t0 != 0.0) {
    bool listed = false;
    for (double t : c.t0_list) listed = listed || t == c.iterate_t0;
    if (!listed) fail("iterate_t0 must be one of the t0 list");
  }
  if (c.snapshot_every < 0) fail("snapshot_every must be >= 0");
  if (c.jobs < 1) fail("jobs must be >= 1");
  if (c.out.empty()) fail("out must name a directory");
}

inline void to_json(nlohmann::json& j, const RunConfig& c) {
  j = nlohmann::json{{"scenario", c.scenario},
                     {"dim", c.dim},
                     {"grid", c.grid},
                     {"box", c.box},
                     {"dt", c.dt},
                     {"store_every", c.store_every},
                     {"T", c.T},
                     {"t0_list", c.t0_list},
                     {"profile", c.profile},
                     {"amp_u", c.amp_u},
                     {"sigma_u", c.sigma_u},
                     {"amp_a", c.amp_a},
                     {"sigma_a", c.sigma_a},
                     {"amp_ad", c.amp_ad},
                     {"sigma_ad", c.sigma_ad},
                     {"lambda", c.lambda},
                     {"phi_tol", c.phi_tol},
                     {"phi_max_iters", c.phi_max_iters},
                     {"fit_lo", c.fit_lo},
                     {"guard_step", c.guard_step},
                     {"stages",
                      {{"construct", c.stage_construct},
                       {"cauchy", c.stage_cauchy},
                       {"iterate", c.stage_iterate},
                       {"residual", c.stage_residual},
                       {"lemma", c.stage_lemma}}},
                     {"iterate_t0", c.iterate_t0},
                     {"floors",
                      {{"composite", c.floor_composite},
                       {"b", c.floor_b},
                       {"deviation", c.floor_deviation},
                       {"wave_sup", c.floor_wave_sup},
                       {"contraction", c.require_contraction}}},
                     {"snapshot_every", c.snapshot_every},
                     {"out", c.out},
                     {"jobs", c.jobs}};
}

namespace detail {

// Overlay the keys of `patch` onto `base`, rejecting keys the base lacks so a
// misspelt setting is an error rather than a silent default.
inline void overlay(nlohmann::json& base, const nlohmann::json& patch, const std::string& where) {
  if (!patch.is_object()) throw std::invalid_argument("config: " + where + " must be an object");
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    if (!base.contains(it.key())) {
      throw std::invalid_argument("config: unknown key '" + where + it.key() + "'");
    }
    auto& slot = base[it.key()];
    if (slot.is_object()) {
      overlay(slot, it.value(), where + it.key() + ".");
    } else {
      bool number_ok = slot.is_number() && it.value().is_number();
      if (slot.type() != it.value().type() && !number_ok) {
        throw std::invalid_argument("config: key '" + where + it.key() + "' has the wrong type");
      }
      slot = it.value();
    }
  }
}

}  // namespace detail

inline void from_json(const nlohmann::json& j, RunConfig& c) {
  j.at("scenario").get_to(c.scenario);
  j.at("dim").get_to(c.dim);
  j.at("grid").get_to(c.grid);
  j.at("box").get_to(c.box);
  j.at("dt").get_to(c.dt);
  j.at("store_every").get_to(c.store_every);
  j.at("T").get_to(c.T);
  j.at("t0_list").get_to(c.t0_list);
  j.at("profile").get_to(c.profile);
  j.at("amp_u").get_to(c.amp_u);
  j.at("sigma_u").get_to(c.sigma_u);
  j.at("amp_a").get_to(c.amp_a);
  j.at("sigma_a").get_to(c.sigma_a);
  j.at("amp_ad").get_to(c.amp_ad);
  j.at("sigma_ad").get_to(c.sigma_ad);
  j.at("lambda").get_to(c.lambda);
  j.at("phi_tol").get_to(c.phi_tol);
  j.at("phi_max_iters").get_to(c.phi_max_iters);
  j.at("fit_lo").get_to(c.fit_lo);
  j.at("guard_step").get_to(c.guard_step);
  const auto& st = j.at("stages");
  st.at("construct").get_to(c.stage_construct);
  st.at("cauchy").get_to(c.stage_cauchy);
  st.at("iterate").get_to(c.stage_iterate);
  st.at("residual").get_to(c.stage_residual);
  st.at("lemma").get_to(c.stage_lemma);
  j.at("iterate_t0").get_to(c.iterate_t0);
  const auto& fl = j.at("floors");
  fl.at("composite").get_to(c.floor_composite);
  fl.at("b").get_to(c.floor_b);
  fl.at("deviation").get_to(c.floor_deviation);
  fl.at("wave_sup").get_to(c.floor_wave_sup);
  fl.at("contraction").get_to(c.require_contraction);
  j.at("snapshot_every").get_to(c.snapshot_every);
  j.at("out").get_to(c.out);
  j.at("jobs").get_to(c.jobs);
}

/// Command-line settings; unset members leave lower layers untouched.
struct Overrides {
  std::optional<int> dim, grid, jobs;
  std::optional<double> box, dt, T, amp;
  std::optional<std::vector<double>> t0_list;
  std::optional<std::string> out;
};

/// Precedence: flags > file > scenario defaults. `file` is the parsed JSON of
/// a config file (possibly a partial one), or null.
inline RunConfig resolve_config(const std::string& scenario, const nlohmann::json& file,
                                const Overrides& flags) {
  if (!known_scenario(scenario)) throw std::invalid_argument("unknown scenario '" + scenario + "'");
  if (!file.is_null() && !file.is_object()) {
    throw std::invalid_argument("config: file must hold a JSON object");
  }
  if (!file.is_null() && file.contains("scenario") && file["scenario"] != scenario) {
    throw std::invalid_argument("config: file is for scenario " + file["scenario"].dump());
  }
  // desk defaults depend on the dimension, so settle it first
  std::optional<int> dim = flags.dim;
  if (!dim && !file.is_null() && file.contains("dim")) {
    if (!file["dim"].is_number_integer()) throw std::invalid_argument("config: dim must be an integer");
    dim = file["dim"].get<int>();
  }
  if (dim) {
    bool ok = false;
    for (int d : scenario_dims(scenario)) ok = ok || d == *dim;
    if (!ok) {
      throw std::invalid_argument("config: dim " + std::to_string(*dim) +
                                  " conflicts with scenario " + scenario);
    }
  }
  nlohmann::json j = scenario_defaults(scenario, dim);
  if (!file.is_null()) detail::overlay(j, file, "");
  RunConfig c = j.get<RunConfig>();
  if (flags.dim) c.dim = *flags.dim;
  if (flags.grid) c.grid = *flags.grid;
  if (flags.box) c.box = *flags.box;
  if (flags.dt) c.dt = *flags.dt;
  if (flags.T) c.T = *flags.T;
  if (flags.t0_list) c.t0_list = *flags.t0_list;
  if (flags.amp) c.amp_u = *flags.amp;
  if (flags.out) c.out = *flags.out;
  if (flags.jobs) c.jobs = *flags.jobs;
  if (c.iterate_t0 != 0.0 && flags.t0_list) {
    bool listed = false;
    for (double t : c.t0_list) listed = listed || t == c.iterate_t0;
    if (!listed) c.iterate_t0 = 0.0;  // follow the new list
  }
  validate(c);
  return c;
}

}  // namespace zscatter
