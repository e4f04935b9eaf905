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

#ifndef BIPED_ERG_HPP
#define BIPED_ERG_HPP

// Single-support tracking control: PD outer loop on the virtual constraints,
// an explicit reference governor (ERG) shaping the velocity reference w so a
// Lyapunov level set stays inside the state/torque constraint set, and the
// partitioned torque law u = beta1 (dw - v) + beta2.
//
// Actuated state x_a = [q2 q3 dq2 dq3], reference x_w = [h_d; w] (or [0; w]
// in literal mode), P = diag(K_P, K_D) / 2. Constraint rows, C >= 0:
//   1-4   x_a + x_max
//   5-8   x_max - x_a
//   9-10  u_max - u_fbl
//   11-12 u_fbl + u_max
// with u_fbl = -LgLfh^-1 (Lf2h + K_P (q_a - h_d) + K_D (dq_a - w)).

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "biped/gait.hpp"
#include "biped/model.hpp"

namespace biped {

struct ErgSettings {
    double kappa = 100.0;         // [1/s]
    bool mode_literal_xw = false;
    double sign_smoothing = 1e-3; // tanh(x / eps) replaces sign(x)
    bool enabled = true;          // false: w follows dh_d/dt exactly
};

struct ErgState {
    Vec2 w = Vec2::Zero();
    double kappa = 100.0;
    bool mode_literal_xw = false;
};

using ConstraintMatrix = Eigen::Matrix<double, 12, 4>;
using ConstraintVector = Eigen::Matrix<double, 12, 1>;

struct ConstraintData {
    ConstraintMatrix C_x;
    ConstraintMatrix C_w;
    ConstraintVector C_limit;
    Mat4 P;

    ConstraintVector evaluate(const Vec4& x_a, const Vec4& x_w) const {
        return C_x * x_a + C_w * x_w + C_limit;
    }
};

inline Mat4 lyapunov_weight(const GaitParams& gait) {
    Vec4 diag;
    diag << gait.kp, gait.kd;
    return Mat4(0.5 * diag.asDiagonal());
}

/// v = K_P y + K_D (dq_a - w).
inline Vec2 pd_outer(const Vec2& y, const Vec2& dy_w, const GaitParams& gait) {
    return gait.kp.cwiseProduct(y) + gait.kd.cwiseProduct(dy_w);
}

inline Vec4 actuated_state(const SsState& x) {
    Vec4 xa;
    xa << x.q.tail<2>(), x.dq.tail<2>();
    return xa;
}

inline Vec4 reference_state(const Vec2& h_d, const Vec2& w, bool literal) {
    Vec4 xw;
    xw << (literal ? Vec2::Zero() : h_d), w;
    return xw;
}

/// Feedback-linearizing torque that closes ydd = -v.
inline Vec2 fbl_torque(const OutputData& o, const Vec2& v) {
    return -o.LgLfh.partialPivLu().solve(Vec2(o.Lf2h + v));
}

/// Builds the constraint rows from already-evaluated output data.
inline ConstraintData constraint_data(const OutputData& o, const GaitParams& gait, bool literal) {
    ConstraintData c;
    c.C_x.setZero();
    c.C_w.setZero();
    c.C_x.topRows<4>().setIdentity();
    c.C_x.middleRows<4>(4) = -Mat4::Identity();
    c.C_limit.head<4>() = gait.x_max;
    c.C_limit.segment<4>(4) = gait.x_max;

    const Mat2 M = o.LgLfh.inverse();
    Eigen::Matrix<double, 2, 4> gains = Eigen::Matrix<double, 2, 4>::Zero();
    gains.leftCols<2>() = gait.kp.asDiagonal();
    gains.rightCols<2>() = gait.kd.asDiagonal();
    const Eigen::Matrix<double, 2, 4> Mg = M * gains;
    // Reference-dependent part of the PD term: -K_P h_d - K_D w.
    Eigen::Matrix<double, 2, 4> Mw = -Mg;
    Vec2 h_term = Vec2::Zero();
    if (literal) {
        // x_w = [0; w]: h_d moves into the constant column.
        Mw.leftCols<2>().setZero();
        h_term = -M * gait.kp.cwiseProduct(o.h_d);
    }
    const Vec2 Mb = M * o.Lf2h;
    // u_max - u_fbl = u_max + M (Lf2h + v)
    c.C_x.middleRows<2>(8) = Mg;
    c.C_w.middleRows<2>(8) = Mw;
    c.C_limit.segment<2>(8) = gait.u_max + Mb + h_term;
    // u_fbl + u_max = u_max - M (Lf2h + v)
    c.C_x.bottomRows<2>() = -Mg;
    c.C_w.bottomRows<2>() = -Mw;
    c.C_limit.tail<2>() = gait.u_max - Mb - h_term;
    c.P = lyapunov_weight(gait);
    return c;
}

inline ConstraintData constraint_data(const SsState& x, const GaitParams& gait,
                                      const ModelParams& p, const ErgState& erg) {
    return constraint_data(output_data(x, gait, p), gait, erg.mode_literal_xw);
}

inline double lyapunov_V(const Vec4& x_a, const Vec4& x_w, const Mat4& P) {
    const Vec4 e = x_a - x_w;
    return e.dot(P * e);
}

/// Largest P-weighted squared distance from x_w that keeps every constraint
/// row satisfied: min_i max(g_i, 0)^2 / (C_x,i P^-1 C_x,i^T) with
/// g_i = (C_x,i + C_w,i) x_w + C_limit,i. Rows with C_x,i = 0 only matter
/// when violated (then the bound is 0). No active rows: +infinity.
inline double gamma_bound(const Vec4& x_w, const ConstraintData& c) {
    const Mat4 P_inv = c.P.inverse();
    double gamma = std::numeric_limits<double>::infinity();
    for (int i = 0; i < c.C_x.rows(); ++i) {
        const Eigen::Matrix<double, 1, 4> row = c.C_x.row(i);
        const double g = (row + c.C_w.row(i)).dot(x_w) + c.C_limit(i);
        const double metric = row * P_inv * row.transpose();
        if (!(metric > 0.0)) {
            if (g < 0.0) return 0.0;
            continue;
        }
        if (!std::isfinite(g)) continue;
        const double gp = std::max(g, 0.0);
        gamma = std::min(gamma, gp * gp / metric);
    }
    return gamma;
}

/// dw/dt = kappa (Gamma - V) sign(dh_d - w), with the gap clamped at zero and
/// sign() smoothed as tanh(./eps).
inline Vec2 erg_rate(const Vec2& w, const Vec2& hd_dot, double gamma, double V, double kappa,
                     double eps = 1e-3) {
    const double gap = std::max(gamma - V, 0.0);
    Vec2 r;
    for (int i = 0; i < 2; ++i) {
        const double dir = std::tanh((hd_dot(i) - w(i)) / eps);
        r(i) = (dir == 0.0 || gap == 0.0) ? 0.0 : kappa * gap * dir;
    }
    return r;
}

inline Vec2 erg_rate(const Vec2& w, const Vec4& x_a, const Vec2& h_d, const Vec2& hd_dot,
                     const ConstraintData& c, const ErgState& erg) {
    const Vec4 xw = reference_state(h_d, w, erg.mode_literal_xw);
    return erg_rate(w, hd_dot, gamma_bound(xw, c), lyapunov_V(x_a, xw, c.P), erg.kappa);
}

struct PartitionedTorque {
    Vec2 u;           // after saturation
    Vec2 u_raw;
    bool saturated;
};

/// u = beta1 (dw - v) + beta2 from the block partition of the pinned
/// dynamics, which yields ddq_a = dw - v; saturated at +-u_max.
inline PartitionedTorque partitioned_torque(const SsState& x, const Vec2& dw, const Vec2& v,
                                            const GaitParams& gait, const ModelParams& p) {
    const SsDynamics dyn = ss_dynamics(x.q, x.dq, p);
    const double D1 = dyn.D(0, 0);
    if (std::abs(D1) < 1e-12) throw SingularityError("partitioned_torque: D1 is singular");
    const Eigen::Matrix<double, 1, 2> D2 = dyn.D.block<1, 2>(0, 1);
    const Eigen::Matrix<double, 2, 1> D3 = dyn.D.block<2, 1>(1, 0);
    const Mat2 D4 = dyn.D.block<2, 2>(1, 1);
    const Mat2 beta1 = D4 - D3 * D2 / D1;
    const Vec2 beta2 = dyn.H.tail<2>() - D3 * dyn.H(0) / D1;
    PartitionedTorque out;
    out.u_raw = beta1 * (dw - v) + beta2;
    out.u = out.u_raw.cwiseMax(-gait.u_max).cwiseMin(gait.u_max);
    out.saturated = (out.u.array() != out.u_raw.array()).any();
    return out;
}

struct ErgSample {
    Vec2 w;
    Vec2 dw;
    Vec2 hd_dot;
    double V;
    double gamma;
    OutputData out;
};

/// Backward-Euler step of dw/dt = k tanh((target - w) / eps): returns the
/// rate r with r = k tanh((target - w - r dt) / eps). With k / eps large the
/// law is stiff; the implicit step is stable for any dt and never overshoots
/// the target. The root lies between 0 and (target - w) / dt.
inline double implicit_rate(double w, double target, double k, double eps, double dt) {
    const double delta = target - w;
    if (delta == 0.0 || !(k > 0.0)) return 0.0;
    if (!std::isfinite(k)) return delta / dt;
    auto f = [&](double r) { return r - k * std::tanh((delta - r * dt) / eps); };
    double lo = 0.0, hi = delta / dt;
    if (lo > hi) std::swap(lo, hi);
    double r = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double fr = f(r);
        if (fr == 0.0) break;
        (fr > 0.0 ? hi : lo) = r;
        // Newton step, kept inside the bracket.
        const double th = std::tanh((delta - r * dt) / eps);
        const double df = 1.0 + k * dt / eps * (1.0 - th * th);
        double rn = r - fr / df;
        if (!(rn > lo && rn < hi)) rn = 0.5 * (lo + hi);
        if (std::abs(rn - r) <= 1e-15 * std::max(1.0, std::abs(r))) {
            r = rn;
            break;
        }
        r = rn;
    }
    return r;
}

/// Stateful single-support controller. The ERG is sampled once per
/// integration step (dw held over the step) while the torque law is evaluated
/// continuously with w(tau) = w + dw tau. The governor law is advanced with
/// a backward-Euler step toward the one-step-ahead extrapolation of dh_d/dt.
class SsController {
public:
    SsController(GaitParams gait, ModelParams params, ErgSettings settings = {})
        : gait_(std::move(gait)), params_(params), settings_(settings) {}

    /// Starts a phase; w starts at dh_d/dt unless `w0` is given.
    void reset(const SsState& x, const std::optional<Vec2>& w0 = std::nullopt) {
        const OutputData o = output_data(x, gait_, params_);
        w_ = w0.value_or(o.dh_d_dt);
        prev_hd_dot_ = o.dh_d_dt;
        have_prev_ = false;
        dw_.setZero();
    }

    const ErgSample& sample(const SsState& x, double dt) {
        ErgSample& s = last_;
        s.out = output_data(x, gait_, params_);
        const Vec2 hd_dot = s.out.dh_d_dt;
        const Vec2 hd_accel = have_prev_ ? Vec2((hd_dot - prev_hd_dot_) / dt) : Vec2::Zero();
        const Vec2 target = hd_dot + dt * hd_accel;
        prev_hd_dot_ = hd_dot;
        have_prev_ = true;

        const ConstraintData c = constraint_data(s.out, gait_, settings_.mode_literal_xw);
        const Vec4 xa = actuated_state(x);
        const Vec4 xw = reference_state(s.out.h_d, w_, settings_.mode_literal_xw);
        s.V = lyapunov_V(xa, xw, c.P);
        s.gamma = gamma_bound(xw, c);
        s.hd_dot = hd_dot;
        s.w = w_;
        Vec2 rate;
        if (settings_.enabled) {
            const double gap = std::max(s.gamma - s.V, 0.0);
            for (int i = 0; i < 2; ++i)
                rate(i) = implicit_rate(w_(i), target(i), settings_.kappa * gap, settings_.sign_smoothing, dt);
        } else {
            rate = (target - w_) / dt;
        }
        dw_ = rate;
        s.dw = rate;
        return s;
    }

    /// Torque at state x, tau seconds after the last sample.
    PartitionedTorque torque(const SsState& x, double tau) const {
        const Vec2 w = w_ + tau * dw_;
        const OutputData o = output_data(x, gait_, params_);
        const Vec2 v = pd_outer(o.y, Vec2(x.dq.tail<2>() - w), gait_);
        return partitioned_torque(x, dw_, v, gait_, params_);
    }

    void advance(double dt) { w_ += dt * dw_; }

    const Vec2& w() const { return w_; }
    const Vec2& dw() const { return dw_; }
    const GaitParams& gait() const { return gait_; }
    const ErgSettings& settings() const { return settings_; }

private:
    GaitParams gait_;
    ModelParams params_;
    ErgSettings settings_;
    Vec2 w_ = Vec2::Zero();
    Vec2 dw_ = Vec2::Zero();
    Vec2 prev_hd_dot_ = Vec2::Zero();
    bool have_prev_ = false;
    ErgSample last_{};
};

}  // namespace biped

#endif  // BIPED_ERG_HPP
