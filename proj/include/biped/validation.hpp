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

#ifndef BIPED_VALIDATION_HPP
#define BIPED_VALIDATION_HPP

// Invariant suite behind `biped_sim validate`: model and map checks on
// random states drawn from sim.seed, then checks along a short walk.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "biped/config.hpp"
#include "biped/walk.hpp"

namespace biped {

struct Check {
    std::string name;
    bool passed = false;
    double value = 0.0;      // worst observed quantity
    double tolerance = 0.0;  // what it was compared against
};

namespace detail {

inline Vec5 random_ext_q(std::mt19937_64& rng, const ModelParams& p) {
    std::uniform_real_distribution<double> a(-0.6, 0.6), b(-0.3, 0.3);
    Vec5 q;
    q << a(rng), a(rng), a(rng), b(rng), p.l + b(rng);
    return q;
}

inline Vec5 random_vel(std::mt19937_64& rng, int n = 5) {
    std::uniform_real_distribution<double> v(-2.0, 2.0);
    Vec5 dq;
    for (int i = 0; i < 5; ++i) dq(i) = i < n ? v(rng) : 0.0;
    return dq;
}

}  // namespace detail

/// Walk-level invariants over an existing log.
inline std::vector<Check> log_checks(const GaitLog& log, const ScenarioConfig& cfg) {
    std::vector<Check> out;
    const auto m = step_metrics(log, cfg.sim.mu_s);

    // SS -> IMPACT -> DS -> SS ..., never skipping a phase.
    int bad_seq = 0;
    for (size_t i = 1; i < log.rows.size(); ++i) {
        const PhaseTag a = log.rows[i - 1].phase, b = log.rows[i].phase;
        if (a == b) continue;
        const bool ok = (a == PhaseTag::SS && b == PhaseTag::IMPACT) || (a == PhaseTag::IMPACT && b == PhaseTag::DS) ||
                        (a == PhaseTag::DS && b == PhaseTag::SS);
        if (!ok) ++bad_seq;
    }
    out.push_back({"phase sequence SS, IMPACT, DS", bad_seq == 0, double(bad_seq), 0});
    out.push_back({"impacts preceded by a descending swing foot", log.guard_direction_violations == 0,
                   double(log.guard_direction_violations), 0});

    double u_excess = -INFINITY, min_n = INFINITY, ratio = 0, gmv = INFINITY, eta_excess = -INFINITY;
    int qpf = 0;
    for (const LogRow& r : log.rows) {
        if (r.phase == PhaseTag::SS) {
            u_excess = std::max(u_excess, (r.u.cwiseAbs() - cfg.erg.u_max).maxCoeff());
            if (!std::isnan(r.Gamma - r.V)) gmv = std::min(gmv, r.Gamma - r.V);
        }
        if (r.phase == PhaseTag::DS) {
            eta_excess = std::max({eta_excess, (r.u.cwiseAbs() - cfg.nmpc.u_max).maxCoeff(), -r.F_th,
                                   r.F_th - cfg.model.f_th_max});
            if (r.qp_failed) ++qpf;
        }
    }
    for (const StepMetrics& s : m) {
        min_n = std::min(min_n, s.min_lambda_N);
        ratio = std::max(ratio, s.max_ratio);
    }
    if (!std::isfinite(u_excess)) u_excess = 0;
    if (!std::isfinite(eta_excess)) eta_excess = 0;
    out.push_back({"single-support torque within erg.u_max", u_excess <= 1e-6, u_excess, 1e-6});
    out.push_back({"double-support inputs within their box", eta_excess <= 1e-9, eta_excess, 1e-9});
    out.push_back({"normal forces positive", min_n > 0.0, min_n, 0.0});
    out.push_back({"friction ratio within mu_s", ratio <= cfg.sim.mu_s + 1e-6, ratio, cfg.sim.mu_s + 1e-6});
    out.push_back({"governor bound Gamma - V >= 0", gmv >= -1e-9, gmv, -1e-9});
    out.push_back({"no QP fallbacks", qpf == 0, double(qpf), 0});
    return out;
}

/// Full suite; `walk_steps` bounds the length of the walk used by the
/// trajectory checks.
inline std::vector<Check> run_validation(const ScenarioConfig& cfg, int walk_steps = 2) {
    std::vector<Check> out;
    const ModelParams& p = cfg.model;
    std::mt19937_64 rng(cfg.sim.seed);
    constexpr int kSamples = 200;

    double asym = 0, min_eig = INFINITY;
    for (int k = 0; k < kSamples; ++k) {
        const Vec5 q = detail::random_ext_q(rng, p);
        const ExtDynamics e = ext_dynamics(q, Vec5::Zero(), p);
        asym = std::max(asym, (e.D - e.D.transpose()).cwiseAbs().maxCoeff());
        min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Mat5>(e.D).eigenvalues().minCoeff());
    }
    out.push_back({"mass matrix symmetric", asym <= 1e-12, asym, 1e-12});
    out.push_back({"mass matrix positive definite", min_eig > 0, min_eig, 0});

    double foot_vel = 0, energy_gain = -INFINITY, inv = 0;
    for (int k = 0; k < kSamples; ++k) {
        ExtState x{detail::random_ext_q(rng, p), detail::random_vel(rng)};
        const ImpactResult im = impact_map(x, p);
        const ContactKinematics ck = contact_kinematics(x.q, im.dq_plus, p);
        foot_vel = std::max(foot_vel, (ck.J * im.dq_plus).cwiseAbs().maxCoeff());
        const double k0 = energies(x.q, x.dq, p, ModelKind::extended).K;
        const double k1 = energies(x.q, im.dq_plus, p, ModelKind::extended).K;
        energy_gain = std::max(energy_gain, k1 - k0);
        const ExtState back = relabel(relabel(x));
        inv = std::max(inv, (back.q - x.q).cwiseAbs().maxCoeff() + (back.dq - x.dq).cwiseAbs().maxCoeff());
    }
    out.push_back({"impact leaves both feet at rest", foot_vel <= 1e-9, foot_vel, 1e-9});
    out.push_back({"impact does not add kinetic energy", energy_gain <= 1e-12, energy_gain, 1e-12});
    out.push_back({"relabeling is an involution", inv <= 1e-14, inv, 1e-14});

    GaitParams gait;
    try {
        gait = gait_from_config(cfg);
    } catch (const std::exception& e) {
        out.push_back({std::string("gait design: ") + e.what(), false, 0, 0});
        return out;
    }
    {
        const SsState a = manifold_state(0.0, 0.0, gait), b = manifold_state(1.0, 0.0, gait);
        const double ground = std::max(std::abs(touchdown_guard(a, p)), std::abs(touchdown_guard(b, p)));
        out.push_back({"gait endpoints have both feet on the ground", ground <= 1e-9, ground, 1e-9});
        ExtState eb = to_extended(b, p);
        const ExtState rb = relabel(eb);
        const double mirror = (rb.q.head<3>() - a.q).cwiseAbs().maxCoeff();
        out.push_back({"relabeled end posture equals start posture", mirror <= 1e-9, mirror, 1e-9});
    }
    {
        double worst = INFINITY;
        for (int k = 0; k <= 50; ++k) {
            const SsState x = manifold_state(k / 50.0, -1.0, gait);
            const OutputData o = output_data(x, gait, p);
            const ConstraintData c = constraint_data(o, gait, cfg.erg.mode_literal_xw);
            const Vec4 xw = reference_state(o.h_d, o.dh_d_dt, cfg.erg.mode_literal_xw);
            worst = std::min(worst, gamma_bound(xw, c) - lyapunov_V(actuated_state(x), xw, c.P));
        }
        out.push_back({"governor bound holds on the gait manifold", worst >= -1e-9, worst, -1e-9});
    }
    {
        double drift = 0;
        for (int k = 0; k < 20; ++k) {
            // A double-support posture: both feet on the ground, hips above.
            std::uniform_real_distribution<double> a(0.05, 0.35), t(-0.4, 0.4);
            const double th = a(rng);
            Vec5 q;
            q << th, 2 * th, t(rng), -p.l * std::sin(th), p.l * std::cos(th);
            DsVec x;
            x << q, Vec5::Zero();
            const DsVec xf = ds_hold(x, Vec3(0.1, -0.1, 5.0), 0.01, 100, p);
            const ContactKinematics c0 = contact_kinematics(q, Vec5::Zero(), p);
            const ContactKinematics c1 = contact_kinematics(Vec5(xf.head<5>()), Vec5(xf.tail<5>()), p);
            drift = std::max({drift, (c1.p1 - c0.p1).norm(), (c1.p2 - c0.p2).norm()});
        }
        out.push_back({"double-support feet stay put", drift <= 1e-6, drift, 1e-6});
    }

    ScenarioConfig short_cfg = cfg;
    short_cfg.sim.n_steps = std::min(cfg.sim.n_steps, walk_steps);
    const GaitLog log = run_walk(short_cfg);
    out.push_back({"walk status: " + std::string(to_string(log.status)) +
                       (log.message.empty() ? "" : " (" + log.message + ")"),
                   log.status == WalkStatus::ok, double(log.steps_completed), double(short_cfg.sim.n_steps)});
    for (auto& c : log_checks(log, short_cfg)) out.push_back(std::move(c));
    return out;
}

}  // namespace biped

#endif  // BIPED_VALIDATION_HPP
