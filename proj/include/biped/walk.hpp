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

#ifndef BIPED_WALK_HPP
#define BIPED_WALK_HPP

// Hybrid executive: SS (ERG-governed output tracking) -> touchdown -> impact
// and relabel -> DS (NMPC over a fixed envelope) -> next SS.
//
// Each SS phase is integrated in the pinned frame of its stance foot; the
// world position of that foot is accumulated so logged hip coordinates are
// world coordinates. DS is integrated in the frame of the previous stance
// foot, where the hip coordinates stay small.

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "biped/config.hpp"
#include "biped/ds_control.hpp"
#include "biped/erg.hpp"
#include "biped/gait.hpp"
#include "biped/hybrid.hpp"
#include "biped/integrate.hpp"
#include "biped/model.hpp"

namespace biped {

enum class PhaseTag { SS, DS, IMPACT };

inline const char* to_string(PhaseTag p) {
    switch (p) {
        case PhaseTag::SS: return "SS";
        case PhaseTag::DS: return "DS";
        case PhaseTag::IMPACT: return "IMPACT";
    }
    return "?";
}

/// One logged sample. Columns that do not apply to the phase hold NaN:
/// governor quantities in DS and IMPACT rows, foot-2 force in SS rows,
/// inputs and forces in IMPACT rows.
struct LogRow {
    double t = 0.0;
    PhaseTag phase = PhaseTag::SS;
    int step = 0;
    Vec3 q = Vec3::Zero();
    Vec2 ph = Vec2::Zero();
    Vec3 dq = Vec3::Zero();
    Vec2 dph = Vec2::Zero();
    Vec2 u = Vec2::Zero();
    double F_th = 0.0;
    Vec4 lambda = Vec4::Zero();  // T1 N1 T2 N2
    Vec2 y = Vec2::Zero();
    Vec2 dy = Vec2::Zero();
    double V = 0.0;
    double Gamma = 0.0;
    Vec2 w = Vec2::Zero();
    double s = 0.0;
    bool saturated = false;
    bool qp_failed = false;
};

enum class WalkStatus { ok, fall, numerical };

inline const char* to_string(WalkStatus s) {
    switch (s) {
        case WalkStatus::ok: return "ok";
        case WalkStatus::fall: return "fall";
        case WalkStatus::numerical: return "numerical";
    }
    return "?";
}

struct GaitLog {
    std::vector<LogRow> rows;
    WalkStatus status = WalkStatus::ok;
    std::string message;
    int steps_completed = 0;
    int guard_direction_violations = 0;  // impacts without a descending swing foot
};

struct WalkSetup {
    GaitParams gait;
    ModelParams model;
    ErgSettings erg;
    NmpcSettings nmpc;
    SimSettings sim;
    std::optional<SsState> initial;  // default: on the manifold at s = 0, at rest
};

inline WalkSetup walk_setup(const ScenarioConfig& cfg) {
    WalkSetup w;
    w.gait = gait_from_config(cfg);
    w.model = cfg.model;
    w.erg = erg_settings(cfg);
    w.nmpc = nmpc_settings(cfg);
    w.sim = cfg.sim;
    return w;
}

namespace detail {

inline double nan() { return std::numeric_limits<double>::quiet_NaN(); }

inline SsState ss_of(const Vec6& z) {
    SsState s;
    s.q = z.head<3>();
    s.dq = z.tail<3>();
    return s;
}

/// Ground force on the stance foot of the pinned model, [T N].
inline Vec2 stance_force(const SsState& x, const Vec2& u, const ModelParams& p) {
    const Vec6 dx = pinned_vector_field(x, u, p);
    const ExtState e = to_extended(x, p);
    const ExtDynamics dyn = ext_dynamics(e.q, e.dq, p);
    Vec5 ddq;
    ddq.head<3>() = dx.tail<3>();
    const double q1 = x.q(0), dq1 = x.dq(0), ddq1 = dx(3);
    ddq.tail<2>() = p.l * (direction_prime(q1) * ddq1 - direction(q1) * dq1 * dq1);
    // The hip rows of the stance-foot Jacobian are the identity.
    const Vec5 gen = dyn.D * ddq + dyn.H - dyn.B * u;
    return gen.tail<2>();
}

inline void fill_outputs(LogRow& r, const SsState& s, const GaitParams& gait, const ModelParams& p) {
    const Phase ph = phase(s.q, gait);
    const HdEval hd = desired_outputs(ph.s, gait);
    r.y = s.q.tail<2>() - hd.h;
    r.dy = s.dq.tail<2>() - hd.dh_ds * ph.ds_dtheta * s.dq(0);
    r.s = ph.s;
    (void)p;
}

}  // namespace detail

/// Runs setup.sim.n_steps gait cycles. Never throws for falls or numerical
/// trouble inside the loop: the partial log is returned with the status set.
inline GaitLog run_walk(const WalkSetup& setup) {
    const GaitParams& gait = setup.gait;
    const ModelParams& p = setup.model;
    const SimSettings& sim = setup.sim;
    GaitLog log;
    if (sim.n_steps <= 0) return log;

    SsState x = setup.initial.value_or(manifold_state(0.0, 0.0, gait));
    Vec2 foot = Vec2::Zero();  // world position of the current stance foot
    double t = 0.0;
    const double dt = sim.dt_ss;
    const int substeps = std::max(1, static_cast<int>(std::lround(setup.nmpc.T_s / sim.dt_ds)));

    auto fail = [&](WalkStatus st, const std::string& msg) {
        log.status = st;
        log.message = msg;
        return log;
    };

    try {
        for (int step = 1; step <= sim.n_steps; ++step) {
            // ---------------- single support
            SsController ctrl(gait, p, setup.erg);
            ctrl.reset(x);
            const double t0 = t;
            Vec6 z;
            z << x.q, x.dq;
            auto guard = [&](const Vec6& zz) {
                const SsState s = detail::ss_of(zz);
                if (!touchdown_armed(s, p, sim.touchdown_arm)) return 1.0;
                return touchdown_guard(s, p);
            };
            auto log_ss = [&](double tt, const Vec6& zz, const ErgSample* smp, double tau) {
                const SsState s = detail::ss_of(zz);
                const PartitionedTorque tq = ctrl.torque(s, tau);
                LogRow r;
                r.t = tt;
                r.phase = PhaseTag::SS;
                r.step = step;
                r.q = s.q;
                r.dq = s.dq;
                const ExtState e = to_extended(s, p, foot);
                r.ph = e.q.tail<2>();
                r.dph = e.dq.tail<2>();
                r.u = tq.u;
                r.saturated = tq.saturated;
                r.F_th = 0.0;
                const Vec2 f = detail::stance_force(s, tq.u, p);
                r.lambda << f, detail::nan(), detail::nan();
                detail::fill_outputs(r, s, gait, p);
                if (smp) {
                    r.V = smp->V;
                    r.Gamma = smp->gamma;
                    r.w = smp->w;
                } else {
                    // Event row: governor quantities at the located state.
                    const OutputData o = output_data(s, gait, p);
                    const ConstraintData c = constraint_data(o, gait, setup.erg.mode_literal_xw);
                    const Vec4 xw = reference_state(o.h_d, ctrl.w(), setup.erg.mode_literal_xw);
                    r.V = lyapunov_V(actuated_state(s), xw, c.P);
                    r.Gamma = gamma_bound(xw, c);
                    r.w = ctrl.w();
                }
                log.rows.push_back(r);
            };

            double g_prev = guard(z);
            bool touched = false;
            for (long n = 0;; ++n) {
                const double tn = t0 + n * dt;
                if (tn - t0 > sim.ss_timeout)
                    return fail(WalkStatus::fall, "single support exceeded " + std::to_string(sim.ss_timeout) +
                                                      " s in step " + std::to_string(step));
                const SsState s = detail::ss_of(z);
                if (p.l * std::cos(s.q(0)) < 0.2 * p.l || std::abs(s.q(0)) > M_PI / 2)
                    return fail(WalkStatus::fall, "fall detected in step " + std::to_string(step));
                const ErgSample& smp = ctrl.sample(s, dt);
                log_ss(tn, z, &smp, 0.0);
                auto field = [&](double tau, const Vec6& zz) {
                    const SsState ss = detail::ss_of(zz);
                    return pinned_vector_field(ss, ctrl.torque(ss, tau).u, p);
                };
                const Vec6 zn = rk4_step(field, 0.0, z, dt);
                if (!zn.allFinite()) throw IntegrationBlowup(tn, Eigen::VectorXd(z));
                const double g = guard(zn);
                if (g_prev > 0.0 && g <= 0.0) {
                    auto state_at = [&](double tau) -> Vec6 {
                        return tau == 0.0 ? z : Vec6(rk4_step(field, 0.0, z, tau));
                    };
                    const auto ev = locate_event(0.0, dt, state_at, guard);
                    ctrl.advance(ev.t);
                    z = ev.x;
                    t = tn + ev.t;
                    log_ss(t, z, nullptr, 0.0);
                    touched = true;
                    break;
                }
                g_prev = g;
                ctrl.advance(dt);
                z = zn;
            }
            if (!touched) return fail(WalkStatus::fall, "no touchdown");

            // ---------------- impact
            const SsState xm = detail::ss_of(z);
            if (!(swing_foot(xm.q, xm.dq, p).second.y() < 0.0)) ++log.guard_direction_violations;
            const ExtState em = to_extended(xm, p);
            const ImpactResult im = impact_map(em, p);
            const ExtState ep = relabel(ExtState{em.q, im.dq_plus});
            {
                LogRow r;
                r.t = t;
                r.phase = PhaseTag::IMPACT;
                r.step = step;
                r.q = ep.q.head<3>();
                r.dq = ep.dq.head<3>();
                r.ph = foot + ep.q.tail<2>();
                r.dph = ep.dq.tail<2>();
                r.u.setConstant(detail::nan());
                r.F_th = detail::nan();
                r.lambda.setConstant(detail::nan());
                r.V = r.Gamma = detail::nan();
                r.w.setConstant(detail::nan());
                SsState s;
                s.q = ep.q.head<3>();
                s.dq = ep.dq.head<3>();
                detail::fill_outputs(r, s, gait, p);
                log.rows.push_back(r);
            }

            // ---------------- double support
            DsState d0;
            d0.q_d = ep.q;
            d0.dq_d = ep.dq;
            d0.t = t;
            const DsVec xd0 = d0.stacked();
            NmpcController nmpc(setup.nmpc, p);
            nmpc.begin(xd0, ds_target(xd0, gait), substeps);
            auto [tr, xf] = simulate_ds(
                d0,
                [&](double, const DsVec& xx) {
                    const auto st = nmpc.next(xx);
                    return DsControl{st.eta, st.status};
                },
                sim.ds_envelope, sim.dt_ds, setup.nmpc.T_s, p);
            for (size_t i = 0; i < tr.t.size(); ++i) {
                LogRow r;
                r.t = tr.t[i];
                r.phase = PhaseTag::DS;
                r.step = step;
                r.q = tr.x[i].head<3>();
                r.ph = foot + tr.x[i].segment<2>(3);
                r.dq = tr.x[i].segment<3>(5);
                r.dph = tr.x[i].tail<2>();
                r.u = tr.eta[i].head<2>();
                r.F_th = tr.eta[i](2);
                r.lambda = tr.lambda[i];
                r.V = r.Gamma = detail::nan();
                r.w.setConstant(detail::nan());
                r.qp_failed = tr.status[i] != QpStatus::optimal;
                SsState s;
                s.q = r.q;
                s.dq = r.dq;
                detail::fill_outputs(r, s, gait, p);
                log.rows.push_back(r);
            }
            t = xf.t;
            const ContactKinematics ck = contact_kinematics(xf.q_d, xf.dq_d, p);
            foot += ck.p1;
            x.q = xf.q_d.head<3>();
            x.dq = xf.dq_d.head<3>();
            log.steps_completed = step;
        }
    } catch (const IntegrationBlowup& e) {
        return fail(WalkStatus::numerical, e.what());
    } catch (const SingularityError& e) {
        return fail(WalkStatus::numerical, e.what());
    } catch (const NumericalError& e) {
        return fail(WalkStatus::numerical, e.what());
    } catch (const PreconditionError& e) {
        return fail(WalkStatus::numerical, e.what());
    }
    return log;
}

inline GaitLog run_walk(const ScenarioConfig& cfg) { return run_walk(walk_setup(cfg)); }

// ---------------------------------------------------------------------------
// Metrics

struct StepMetrics {
    int step = 0;
    double t_start = 0.0;
    double ss_duration = 0.0;
    double residual_ss_start = 0.0;    // ||y||^2 + ||dy||^2 at the first SS sample
    double residual_post_impact = std::numeric_limits<double>::quiet_NaN();
    double residual_ds_exit = std::numeric_limits<double>::quiet_NaN();  // next step's SS start
    double gait_diff = std::numeric_limits<double>::quiet_NaN();         // ||x_s0(k+1) - x_s0(k)||
    double max_abs_u = 0.0;            // SS torques
    double max_y = 0.0;                // SS max ||y||
    double min_lambda_N = std::numeric_limits<double>::infinity();
    double max_ratio = 0.0;            // max |lambda_T| / lambda_N
    double peak_lambda_N_ds = 0.0;
    double peak_thrust = 0.0;
    int contact_violations = 0;        // samples with lambda_N <= 0 or ratio > mu_s
    int saturated_samples = 0;
    int qp_failures = 0;
    double min_gamma_minus_V = std::numeric_limits<double>::infinity();
    Vec6 x_s0 = Vec6::Zero();
};

/// Per-step metrics from the raw log rows; `mu_s` sets the friction
/// violation threshold (with 1e-6 slack).
inline std::vector<StepMetrics> step_metrics(const GaitLog& log, double mu_s) {
    std::vector<StepMetrics> out;
    auto get = [&](int step) -> StepMetrics& {
        while (static_cast<int>(out.size()) < step) {
            StepMetrics m;
            m.step = static_cast<int>(out.size()) + 1;
            out.push_back(m);
        }
        return out[static_cast<size_t>(step - 1)];
    };
    std::vector<char> seen_ss;
    std::vector<double> ss_last;
    for (const LogRow& r : log.rows) {
        StepMetrics& m = get(r.step);
        if (static_cast<int>(seen_ss.size()) < r.step) {
            seen_ss.resize(static_cast<size_t>(r.step), 0);
            ss_last.resize(static_cast<size_t>(r.step), 0.0);
        }
        char& seen = seen_ss[static_cast<size_t>(r.step - 1)];
        switch (r.phase) {
            case PhaseTag::SS:
                if (!seen) {
                    seen = 1;
                    m.t_start = r.t;
                    m.residual_ss_start = r.y.squaredNorm() + r.dy.squaredNorm();
                    m.x_s0 << r.q, r.dq;
                }
                ss_last[static_cast<size_t>(r.step - 1)] = r.t;
                m.max_abs_u = std::max(m.max_abs_u, r.u.cwiseAbs().maxCoeff());
                m.max_y = std::max(m.max_y, r.y.norm());
                if (r.saturated) ++m.saturated_samples;
                if (std::isfinite(r.Gamma) || std::isinf(r.Gamma))
                    m.min_gamma_minus_V = std::min(m.min_gamma_minus_V, r.Gamma - r.V);
                break;
            case PhaseTag::IMPACT:
                m.residual_post_impact = r.y.squaredNorm() + r.dy.squaredNorm();
                break;
            case PhaseTag::DS:
                if (r.qp_failed) ++m.qp_failures;
                m.peak_thrust = std::max(m.peak_thrust, r.F_th);
                m.peak_lambda_N_ds = std::max({m.peak_lambda_N_ds, r.lambda(1), r.lambda(3)});
                break;
        }
        for (int f = 0; f < 2; ++f) {
            const double T = r.lambda(2 * f), N = r.lambda(2 * f + 1);
            if (!std::isfinite(T) || !std::isfinite(N)) continue;
            m.min_lambda_N = std::min(m.min_lambda_N, N);
            if (N <= 0.0) {
                ++m.contact_violations;
                continue;
            }
            const double ratio = std::abs(T) / N;
            m.max_ratio = std::max(m.max_ratio, ratio);
            if (ratio > mu_s + 1e-6) ++m.contact_violations;
        }
    }
    for (size_t k = 0; k < out.size(); ++k) {
        if (k < ss_last.size()) out[k].ss_duration = ss_last[k] - out[k].t_start;
        if (k + 1 < out.size() && k + 1 < seen_ss.size() && seen_ss[k + 1]) {
            out[k].residual_ds_exit = out[k + 1].residual_ss_start;
            out[k].gait_diff = (out[k + 1].x_s0 - out[k].x_s0).norm();
        }
    }
    return out;
}

}  // namespace biped

#endif  // BIPED_WALK_HPP
