/*
 Copyright 2026 The thruster-biped Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#ifndef BIPED_CONFIG_HPP
#define BIPED_CONFIG_HPP

// Scenario configuration: a JSON document with a fixed set of keys. Every key
// is required, unknown keys are rejected, and any leaf can be overridden from
// the environment as BIPED_<SECTION>__<KEY> (upper case, "__" for the dot),
// e.g. BIPED_SIM__N_STEPS=3 or BIPED_ERG__U_MAX="[1, 1]". Values of
// environment overrides are parsed as JSON, falling back to a plain string.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <unistd.h>  // environ

#include <json.hpp>

#include "biped/ds_control.hpp"
#include "biped/erg.hpp"
#include "biped/errors.hpp"
#include "biped/gait.hpp"
#include "biped/model.hpp"

namespace biped {

inline constexpr int kSchemaVersion = 1;

struct ErgConfig {
    double kappa = 100.0;
    bool mode_literal_xw = false;
    bool enabled = true;
    Vec2 u_max = Vec2::Constant(1.0);
    Vec4 x_max = (Vec4() << 1.5, 1.5, 10.0, 10.0).finished();
};

struct NmpcConfig {
    double T_s = 1e-3;
    Vec10 w_x = (Vec10() << 10, 10, 10, 0, 0, 1, 1, 1, 1, 1).finished();
    Vec3 w_eta = Vec3(1e-3, 1e-3, 1e-4);
    Vec2 u_max = Vec2::Constant(3.0);
    Vec10 x_d_max = (Vec10() << 1.5, 1.5, 1.5, 1, 1, 10, 10, 10, 10, 10).finished();
    double mu_margin = 0.9;
    double eps_N = 0.1;
    int sqp_iterations = 2;
    bool thrust_enabled = true;
};

struct SimSettings {
    double dt_ss = 1e-4;
    double dt_ds = 1e-4;
    int n_steps = 10;
    double ds_envelope = 0.02;
    double mu_s = 0.3;
    std::uint64_t seed = 1;
    double ss_timeout = 3.0;        // longest admissible single-support phase [s]
    double touchdown_arm = 0.05;    // swing foot lead, as a fraction of l, arming the guard
};

struct IoSettings {
    std::string output_dir = "out";
    int log_decimation = 1;
};

struct ScenarioConfig {
    int schema_version = kSchemaVersion;
    ModelParams model;
    GaitDesignSpec gait;
    ErgConfig erg;
    NmpcConfig nmpc;
    SimSettings sim;
    IoSettings io;

    void validate() const;
};

namespace detail {

using nlohmann::json;

template <int R>
json vec_to_json(const Eigen::Matrix<double, R, 1>& v) {
    json a = json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

template <int R>
Eigen::Matrix<double, R, 1> json_to_vec(const json& j, const std::string& key) {
    if (!j.is_array() || static_cast<int>(j.size()) != R)
        throw ConfigError("config key '" + key + "': expected an array of " + std::to_string(R) + " numbers");
    Eigen::Matrix<double, R, 1> v;
    for (int i = 0; i < R; ++i) {
        if (!j[static_cast<size_t>(i)].is_number())
            throw ConfigError("config key '" + key + "': expected numbers");
        v(i) = j[static_cast<size_t>(i)].get<double>();
    }
    return v;
}

inline double json_num(const json& j, const std::string& key) {
    if (!j.is_number()) throw ConfigError("config key '" + key + "': expected a number");
    return j.get<double>();
}

inline int json_int(const json& j, const std::string& key) {
    if (!j.is_number_integer()) throw ConfigError("config key '" + key + "': expected an integer");
    return j.get<int>();
}

inline bool json_bool(const json& j, const std::string& key) {
    if (!j.is_boolean()) throw ConfigError("config key '" + key + "': expected true or false");
    return j.get<bool>();
}

struct Field {
    std::string path;
    std::string doc;
    std::function<json(const ScenarioConfig&)> get;
    std::function<void(ScenarioConfig&, const json&, const std::string&)> set;
};

#define BIPED_NUM(path_, member_, doc_)                                                    \
    Field{path_, doc_, [](const ScenarioConfig& c) { return json(c.member_); },            \
          [](ScenarioConfig& c, const json& j, const std::string& k) { c.member_ = json_num(j, k); }}
#define BIPED_INT(path_, member_, doc_)                                                    \
    Field{path_, doc_, [](const ScenarioConfig& c) { return json(c.member_); },            \
          [](ScenarioConfig& c, const json& j, const std::string& k) { c.member_ = json_int(j, k); }}
#define BIPED_BOOL(path_, member_, doc_)                                                   \
    Field{path_, doc_, [](const ScenarioConfig& c) { return json(c.member_); },            \
          [](ScenarioConfig& c, const json& j, const std::string& k) { c.member_ = json_bool(j, k); }}
#define BIPED_VEC(path_, member_, n_, doc_)                                                \
    Field{path_, doc_, [](const ScenarioConfig& c) { return vec_to_json<n_>(c.member_); }, \
          [](ScenarioConfig& c, const json& j, const std::string& k) { c.member_ = json_to_vec<n_>(j, k); }}

inline const std::vector<Field>& fields() {
    static const std::vector<Field> f = {
        BIPED_INT("schema_version", schema_version, "configuration schema version, must be 1"),
        BIPED_NUM("model.m_T", model.m_T, "torso mass [kg]"),
        BIPED_NUM("model.m_h", model.m_h, "hip mass [kg]"),
        BIPED_NUM("model.m_k", model.m_k, "mass of each leg, lumped at its midpoint [kg]"),
        BIPED_NUM("model.l_T", model.l_T, "hip to torso mass distance [m]"),
        BIPED_NUM("model.l", model.l, "leg length [m]"),
        BIPED_NUM("model.g", model.g, "gravity [m/s^2]"),
        BIPED_NUM("model.d", model.d, "contact constraint damping in double support [1/s]"),
        BIPED_NUM("model.f_th_max", model.f_th_max, "thrust upper bound [N]"),
        BIPED_NUM("gait.step_length", gait.step_length, "foot-to-foot distance at touchdown [m]"),
        BIPED_NUM("gait.torso_pitch", gait.torso_pitch, "absolute torso angle held over the step [rad]"),
        BIPED_NUM("gait.clearance", gait.clearance, "swing-leg bump on the interior Bezier points [rad]"),
        BIPED_NUM("gait.duration_hint", gait.duration_hint, "expected single-support duration [s]"),
        Field{"gait.offsets", "extra offsets of the 4 interior control points, 2 rows (q2, q3) [rad]",
              [](const ScenarioConfig& c) {
                  json rows = json::array();
                  for (int r = 0; r < 2; ++r) {
                      json row = json::array();
                      for (int k = 0; k < 4; ++k) row.push_back(c.gait.offsets(r, k));
                      rows.push_back(row);
                  }
                  return rows;
              },
              [](ScenarioConfig& c, const json& j, const std::string& k) {
                  if (!j.is_array() || j.size() != 2) throw ConfigError("config key '" + k + "': expected 2 rows of 4 numbers");
                  for (int r = 0; r < 2; ++r)
                      c.gait.offsets.row(r) = json_to_vec<4>(j[static_cast<size_t>(r)], k).transpose();
              }},
        Field{"gait.kp", "output PD stiffness [1/s^2], 2 numbers",
              [](const ScenarioConfig& c) { return vec_to_json<2>(c.gait.kp.value_or(Vec2::Zero())); },
              [](ScenarioConfig& c, const json& j, const std::string& k) { c.gait.kp = json_to_vec<2>(j, k); }},
        Field{"gait.kd", "output PD damping [1/s], 2 numbers",
              [](const ScenarioConfig& c) { return vec_to_json<2>(c.gait.kd.value_or(Vec2::Zero())); },
              [](ScenarioConfig& c, const json& j, const std::string& k) { c.gait.kd = json_to_vec<2>(j, k); }},
        BIPED_NUM("erg.kappa", erg.kappa, "reference governor gain [1/s]"),
        BIPED_BOOL("erg.mode_literal_xw", erg.mode_literal_xw, "use x_w = [0; w] instead of [h_d; w]"),
        BIPED_BOOL("erg.enabled", erg.enabled, "false: w follows dh_d/dt without governing"),
        BIPED_VEC("erg.u_max", erg.u_max, 2, "single-support torque limits [N m]"),
        BIPED_VEC("erg.x_max", erg.x_max, 4, "bounds on |q2|, |q3| [rad], |dq2|, |dq3| [rad/s]"),
        BIPED_NUM("nmpc.T_s", nmpc.T_s, "NMPC sample time [s]"),
        BIPED_VEC("nmpc.w_x", nmpc.w_x, 10, "state tracking weights (q1 q2 q3 x_h y_h, then rates)"),
        BIPED_VEC("nmpc.w_eta", nmpc.w_eta, 3, "input increment weights (u2 u3 F_th)"),
        BIPED_VEC("nmpc.u_max", nmpc.u_max, 2, "double-support torque limits [N m]"),
        BIPED_VEC("nmpc.x_d_max", nmpc.x_d_max, 10, "state bounds in double support"),
        BIPED_NUM("nmpc.mu_margin", nmpc.mu_margin, "fraction of mu_s used inside the QP, in (0, 1]"),
        BIPED_NUM("nmpc.eps_N", nmpc.eps_N, "minimum normal force [N]"),
        BIPED_INT("nmpc.sqp_iterations", nmpc.sqp_iterations, "relinearizations per sample"),
        BIPED_BOOL("nmpc.thrust_enabled", nmpc.thrust_enabled, "false forces F_th = 0 (ablation)"),
        BIPED_NUM("sim.dt_ss", sim.dt_ss, "single-support RK4 step [s]"),
        BIPED_NUM("sim.dt_ds", sim.dt_ds, "double-support RK4 step [s]"),
        BIPED_INT("sim.n_steps", sim.n_steps, "number of steps (SS + impact + DS cycles)"),
        BIPED_NUM("sim.ds_envelope", sim.ds_envelope, "fixed double-support duration [s]"),
        BIPED_NUM("sim.mu_s", sim.mu_s, "static friction coefficient"),
        Field{"sim.seed", "seed for randomized checks in `validate`",
              [](const ScenarioConfig& c) { return json(c.sim.seed); },
              [](ScenarioConfig& c, const json& j, const std::string& k) {
                  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0))
                      throw ConfigError("config key '" + k + "': expected a non-negative integer");
                  c.sim.seed = j.get<std::uint64_t>();
              }},
        BIPED_NUM("sim.ss_timeout", sim.ss_timeout, "single-support phase longer than this is a fall [s]"),
        BIPED_NUM("sim.touchdown_arm", sim.touchdown_arm, "swing foot lead arming touchdown, fraction of l"),
        Field{"io.output_dir", "directory for trace.csv and friends",
              [](const ScenarioConfig& c) { return json(c.io.output_dir); },
              [](ScenarioConfig& c, const json& j, const std::string& k) {
                  if (!j.is_string()) throw ConfigError("config key '" + k + "': expected a string");
                  c.io.output_dir = j.get<std::string>();
              }},
        BIPED_INT("io.log_decimation", io.log_decimation, "keep every n-th trace row"),
    };
    return f;
}

#undef BIPED_NUM
#undef BIPED_INT
#undef BIPED_BOOL
#undef BIPED_VEC

inline void flatten(const json& j, const std::string& prefix, std::map<std::string, json>& out) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (it->is_object())
            flatten(*it, key, out);
        else
            out[key] = *it;
    }
}

inline std::string env_name(const std::string& path) {
    std::string s = "BIPED_";
    for (char ch : path) {
        if (ch == '.')
            s += "__";
        else
            s += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    }
    return s;
}

}  // namespace detail

inline void ScenarioConfig::validate() const {
    if (schema_version != kSchemaVersion)
        throw ConfigError("schema_version " + std::to_string(schema_version) + " is not supported (expected " +
                          std::to_string(kSchemaVersion) + ")");
    auto wrap = [](auto&& fn) {
        try {
            fn();
        } catch (const InvalidArgument& e) {
            throw ConfigError(e.what());
        }
    };
    wrap([&] { model.validate(); });
    auto positive = [](double v, const char* key) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string("config key '") + key + "' must be positive");
    };
    positive(gait.step_length, "gait.step_length");
    positive(gait.duration_hint, "gait.duration_hint");
    if (!gait.kp || !gait.kd || !((gait.kp->array() > 0).all() && (gait.kd->array() > 0).all()))
        throw ConfigError("config keys 'gait.kp' and 'gait.kd' must be positive");
    positive(erg.kappa, "erg.kappa");
    if (!(erg.u_max.array() > 0).all()) throw ConfigError("config key 'erg.u_max' must be positive");
    if (!(erg.x_max.array() > 0).all()) throw ConfigError("config key 'erg.x_max' must be positive");
    positive(nmpc.T_s, "nmpc.T_s");
    if ((nmpc.w_x.array() < 0).any()) throw ConfigError("config key 'nmpc.w_x' must be non-negative");
    if (!(nmpc.w_eta.array() > 0).all()) throw ConfigError("config key 'nmpc.w_eta' must be positive");
    if (!(nmpc.u_max.array() > 0).all()) throw ConfigError("config key 'nmpc.u_max' must be positive");
    if (!(nmpc.x_d_max.array() > 0).all()) throw ConfigError("config key 'nmpc.x_d_max' must be positive");
    if (!(nmpc.mu_margin > 0.0 && nmpc.mu_margin <= 1.0))
        throw ConfigError("config key 'nmpc.mu_margin' must be in (0, 1]");
    if (!(nmpc.eps_N >= 0.0)) throw ConfigError("config key 'nmpc.eps_N' must be non-negative");
    if (nmpc.sqp_iterations < 1) throw ConfigError("config key 'nmpc.sqp_iterations' must be at least 1");
    positive(sim.dt_ss, "sim.dt_ss");
    positive(sim.dt_ds, "sim.dt_ds");
    if (sim.n_steps < 1) throw ConfigError("config key 'sim.n_steps' must be at least 1");
    positive(sim.ds_envelope, "sim.ds_envelope");
    positive(sim.mu_s, "sim.mu_s");
    positive(sim.ss_timeout, "sim.ss_timeout");
    if (!(sim.touchdown_arm >= 0.0)) throw ConfigError("config key 'sim.touchdown_arm' must be non-negative");
    if (nmpc.T_s < sim.dt_ds) throw ConfigError("config key 'nmpc.T_s' must not be shorter than 'sim.dt_ds'");
    if (io.log_decimation < 1) throw ConfigError("config key 'io.log_decimation' must be at least 1");
}

inline nlohmann::json to_json(const ScenarioConfig& cfg) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& f : detail::fields()) j[nlohmann::json::json_pointer("/" + [&] {
        std::string p = f.path;
        std::replace(p.begin(), p.end(), '.', '/');
        return p;
    }())] = f.get(cfg);
    return j;
}

/// Parses a configuration document. `env` supplies overrides by variable
/// name (pass an empty map to ignore the environment).
inline ScenarioConfig from_json(const nlohmann::json& doc, const std::map<std::string, std::string>& env = {}) {
    if (!doc.is_object()) throw ConfigError("config: top level must be an object");
    std::map<std::string, nlohmann::json> leaves;
    detail::flatten(doc, "", leaves);

    std::vector<std::string> unknown;
    for (const auto& [k, v] : leaves) {
        const bool known = std::any_of(detail::fields().begin(), detail::fields().end(),
                                       [&](const detail::Field& f) { return f.path == k; });
        if (!known) unknown.push_back(k);
    }
    std::vector<std::string> unknown_env;
    for (const auto& [name, value] : env) {
        if (name.rfind("BIPED_", 0) != 0) continue;
        const auto it = std::find_if(detail::fields().begin(), detail::fields().end(),
                                     [&](const detail::Field& f) { return detail::env_name(f.path) == name; });
        if (it == detail::fields().end()) {
            unknown_env.push_back(name);
            continue;
        }
        nlohmann::json parsed = nlohmann::json::parse(value, nullptr, false);
        if (parsed.is_discarded()) parsed = value;
        leaves[it->path] = parsed;
    }
    auto join = [](const std::vector<std::string>& v) {
        std::string s;
        for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
        return s;
    };
    if (!unknown.empty()) throw ConfigError("config: unknown keys: " + join(unknown));
    if (!unknown_env.empty()) throw ConfigError("config: unknown BIPED_* environment overrides: " + join(unknown_env));

    std::vector<std::string> missing;
    for (const auto& f : detail::fields())
        if (!leaves.count(f.path)) missing.push_back(f.path);
    if (!missing.empty()) throw ConfigError("config: missing required keys: " + join(missing));

    ScenarioConfig cfg;
    for (const auto& f : detail::fields()) f.set(cfg, leaves.at(f.path), f.path);
    cfg.validate();
    return cfg;
}

/// BIPED_* variables of the current process environment.
/// Unknown names are kept so that from_json can reject them.
inline std::map<std::string, std::string> biped_environment() {
    std::map<std::string, std::string> env;
    for (char** e = environ; e && *e; ++e) {
        const std::string_view entry(*e);
        const size_t eq = entry.find('=');
        if (eq == std::string_view::npos || !entry.starts_with("BIPED_")) continue;
        env.emplace(std::string(entry.substr(0, eq)), std::string(entry.substr(eq + 1)));
    }
    return env;
}

inline ScenarioConfig load_config(const std::string& path, const std::map<std::string, std::string>& env) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot read '" + path + "'");
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw ConfigError("config: '" + path + "' is not valid JSON");
    return from_json(doc, env);
}

inline ScenarioConfig load_config(const std::string& path) { return load_config(path, biped_environment()); }

inline std::string dump_config(const ScenarioConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

/// Field documentation as (dotted key, environment variable, description).
inline std::vector<std::array<std::string, 3>> config_reference() {
    std::vector<std::array<std::string, 3>> rows;
    for (const auto& f : detail::fields()) rows.push_back({f.path, detail::env_name(f.path), f.doc});
    return rows;
}

// ---------------------------------------------------------------------------
// Derived controller settings

inline GaitParams gait_from_config(const ScenarioConfig& cfg) {
    GaitDesignSpec spec = cfg.gait;
    spec.u_max = cfg.erg.u_max;
    spec.x_max = cfg.erg.x_max;
    return design_gait(spec, cfg.model);
}

inline ErgSettings erg_settings(const ScenarioConfig& cfg) {
    ErgSettings s;
    s.kappa = cfg.erg.kappa;
    s.mode_literal_xw = cfg.erg.mode_literal_xw;
    s.enabled = cfg.erg.enabled;
    return s;
}

inline NmpcSettings nmpc_settings(const ScenarioConfig& cfg) {
    NmpcSettings s;
    s.envelope = cfg.sim.ds_envelope;
    s.T_s = cfg.nmpc.T_s;
    s.w_x = cfg.nmpc.w_x;
    s.w_eta = cfg.nmpc.w_eta;
    s.u_max = cfg.nmpc.u_max;
    s.f_th_max = cfg.model.f_th_max;
    s.x_d_max = cfg.nmpc.x_d_max;
    s.mu_s = cfg.sim.mu_s;
    s.mu_margin = cfg.nmpc.mu_margin;
    s.eps_N = cfg.nmpc.eps_N;
    s.sqp_iterations = cfg.nmpc.sqp_iterations;
    s.thrust_enabled = cfg.nmpc.thrust_enabled;
    return s;
}

}  // namespace biped

#endif  // BIPED_CONFIG_HPP
