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

#ifndef BIPED_GAIT_HPP
#define BIPED_GAIT_HPP

// Virtual constraints y = q_a - h_d(s(theta)) with q_a = [q2 q3], the phase
// variable theta = q1 and a degree-M Bezier h_d over the normalized phase s.

#include <algorithm>
#include <cmath>
#include <optional>

#include <Eigen/Dense>

#include "biped/bezier.hpp"
#include "biped/hybrid.hpp"
#include "biped/model.hpp"

namespace biped {

struct GaitParams {
    Eigen::Matrix<double, 2, Eigen::Dynamic> bezier;  // 2 x (M+1)
    double theta_plus = 0.0;   // phase at step start
    double theta_minus = 0.0;  // phase at step end
    Vec2 kp = Vec2::Constant(400.0);
    Vec2 kd = Vec2::Constant(40.0);
    Vec2 u_max = Vec2::Constant(10.0);
    Vec4 x_max = Vec4::Constant(10.0);

    void validate() const {
        if (bezier.cols() < 2) throw InvalidArgument("GaitParams: need at least two control points");
        if (!bezier.allFinite()) throw InvalidArgument("GaitParams: non-finite Bezier coefficients");
        if (!(theta_plus != theta_minus))
            throw InvalidArgument("GaitParams: theta_plus must differ from theta_minus");
        if (!((kp.array() > 0).all() && (kd.array() > 0).all()))
            throw InvalidArgument("GaitParams: gains must be positive");
        if (!((u_max.array() > 0).all() && (x_max.array() > 0).all()))
            throw InvalidArgument("GaitParams: limits must be positive");
    }
};

struct Phase {
    double theta;
    double s;          // unclamped normalized phase
    double ds_dtheta;  // 1 / (theta_minus - theta_plus)
};

inline Phase phase(const Vec3& q, const GaitParams& gait) {
    const double span = gait.theta_minus - gait.theta_plus;
    const double theta = q(0);
    return {theta, (theta - gait.theta_plus) / span, 1.0 / span};
}

struct HdEval {
    Vec2 h;
    Vec2 dh_ds;
    Vec2 d2h_ds2;
};

inline HdEval eval_hd(double s, const GaitParams& gait) {
    const Bezier<2> b(gait.bezier);
    return {b.value(s), b.derivative(s), b.second_derivative(s)};
}

/// Desired outputs for any phase value. Inside [-margin, 1 + margin] this is
/// the Bezier polynomial itself; further out it continues linearly, so h_d
/// and its slope stay continuous when the phase leaves [0, 1] slightly
/// (a step starting just behind theta_plus, or touchdown just after
/// theta_minus).
inline HdEval desired_outputs(double s, const GaitParams& gait, double margin = 0.25) {
    const double lo = -margin, hi = 1.0 + margin;
    if (s >= lo && s <= hi) return eval_hd(s, gait);
    const double edge = s < lo ? lo : hi;
    const HdEval e = eval_hd(edge, gait);
    return {Vec2(e.h + e.dh_ds * (s - edge)), e.dh_ds, Vec2::Zero()};
}

struct OutputData {
    Vec2 y;
    Vec2 dy;
    Vec2 Lf2h;
    Mat2 LgLfh;
    Vec2 h_d;
    Vec2 dh_d_dt;
    double s = 0.0;
};

/// Outputs and their Lie derivatives along the pinned dynamics so that
/// ydd = Lf2h + LgLfh u.
inline OutputData output_data(const SsState& x, const GaitParams& gait, const ModelParams& p) {
    const Phase ph = phase(x.q, gait);
    const HdEval hd = desired_outputs(ph.s, gait);
    const Vec2& dh_ds = hd.dh_ds;
    const Vec2& d2h_ds2 = hd.d2h_ds2;
    const double s_dot = ph.ds_dtheta * x.dq(0);

    OutputData o;
    o.s = ph.s;
    o.h_d = hd.h;
    o.dh_d_dt = dh_ds * s_dot;
    o.y = x.q.tail<2>() - hd.h;
    o.dy = x.dq.tail<2>() - o.dh_d_dt;

    // dy/dq = S = [-dh_ds * ds_dtheta, I]
    Eigen::Matrix<double, 2, 3> S;
    S.col(0) = -dh_ds * ph.ds_dtheta;
    S.rightCols<2>().setIdentity();
    const SsDynamics dyn = ss_dynamics(x.q, x.dq, p);
    Eigen::LDLT<Mat3> ldlt(dyn.D);
    if (ldlt.info() != Eigen::Success || !(ldlt.rcond() > 1e-12))
        throw SingularityError("output_data: inertia matrix is singular");
    const Vec3 drift = ldlt.solve(Vec3(-dyn.H));
    const Eigen::Matrix<double, 3, 2> gain = ldlt.solve(dyn.B);
    o.Lf2h = S * drift - d2h_ds2 * s_dot * s_dot;
    o.LgLfh = S * gain;
    Eigen::JacobiSVD<Mat2> svd(o.LgLfh);
    const auto sv = svd.singularValues();
    if (!(sv(1) > 0.0) || sv(0) / sv(1) > 1e12)
        throw SingularityError("output_data: decoupling matrix LgLfh is singular");
    return o;
}

/// Distance-to-manifold proxy ||y||^2 + ||dy||^2.
inline double zero_dynamics_residual(const SsState& x, const GaitParams& gait,
                                     [[maybe_unused]] const ModelParams& p) {
    const Phase ph = phase(x.q, gait);
    const HdEval hd = desired_outputs(ph.s, gait);
    const Vec2 y = x.q.tail<2>() - hd.h;
    const Vec2 dy = x.dq.tail<2>() - hd.dh_ds * ph.ds_dtheta * x.dq(0);
    return y.squaredNorm() + dy.squaredNorm();
}

/// On-manifold pinned state at normalized phase s with phase rate theta_dot.
inline SsState manifold_state(double s, double theta_dot, const GaitParams& gait) {
    const HdEval hd = eval_hd(s, gait);
    const double span = gait.theta_minus - gait.theta_plus;
    SsState x;
    x.q << gait.theta_plus + s * span, hd.h;
    x.dq << theta_dot, hd.dh_ds * theta_dot / span;
    return x;
}

// ---------------------------------------------------------------------------
// Offline gait construction

struct GaitDesignSpec {
    double step_length = 0.2;     // foot-to-foot distance at impact [m]
    double torso_pitch = -0.25;   // absolute torso angle held over the step [rad]
    double clearance = 0.12;      // swing-angle bump on the interior points [rad]
    double duration_hint = 0.6;   // expected single-support duration [s]
    Eigen::Matrix<double, 2, 4> offsets = Eigen::Matrix<double, 2, 4>::Zero();
    std::optional<Vec2> kp;       // default: critically damped at 20 / duration_hint
    std::optional<Vec2> kd;
    Vec2 u_max = Vec2::Constant(10.0);
    Vec4 x_max = (Vec4() << 1.5, 1.5, 10.0, 10.0).finished();
};

/// Degree-5 symmetric gait. The boundary postures are the mirror images
/// q = (theta0, 2 theta0, pitch + theta0) and (-theta0, -2 theta0, pitch - theta0)
/// of a stance with both feet on the ground, related through `relabel`; the
/// torso keeps the absolute angle `torso_pitch`. Interior control points are
/// the linear interpolation plus an antisymmetric swing bump (foot clearance)
/// and the user offsets.
///
/// Both legs come to rest in a two-point impact, so the post-impact output
/// rate is (0, torso rate) whatever the endpoint slopes are; the slopes only
/// shape the torso motion that the double-support phase then has to absorb.
inline GaitParams design_gait(const GaitDesignSpec& spec, const ModelParams& p) {
    if (!(spec.step_length > 0.0 && spec.step_length < 2.0 * p.l))
        throw InvalidArgument("design_gait: step length must be in (0, 2 l)");
    if (!(spec.duration_hint > 0.0)) throw InvalidArgument("design_gait: duration hint must be positive");
    constexpr int kDegree = 5;
    const double theta0 = std::asin(spec.step_length / (2.0 * p.l));

    GaitParams g;
    g.theta_plus = theta0;
    g.theta_minus = -theta0;
    g.bezier.resize(2, kDegree + 1);
    const double bump[kDegree + 1] = {0.0, 1.0, 1.0, -1.0, -1.0, 0.0};
    for (int i = 0; i <= kDegree; ++i) {
        const double frac = static_cast<double>(i) / kDegree;
        const double theta_i = theta0 - 2.0 * theta0 * frac;
        double q2 = 2.0 * theta_i + spec.clearance * bump[i];
        if (i >= 1 && i <= 4) q2 += spec.offsets(0, i - 1);
        double q3 = spec.torso_pitch - theta_i + q2;
        if (i >= 1 && i <= 4) q3 += spec.offsets(1, i - 1);
        g.bezier(0, i) = q2;
        g.bezier(1, i) = q3;
    }
    const double wn = 20.0 / spec.duration_hint;
    g.kp = spec.kp.value_or(Vec2::Constant(wn * wn));
    g.kd = spec.kd.value_or(Vec2::Constant(2.0 * wn));
    g.u_max = spec.u_max;
    g.x_max = spec.x_max;
    g.validate();

    constexpr int kSamples = 1000;
    for (int k = 0; k <= kSamples; ++k) {
        const double s = static_cast<double>(k) / kSamples;
        const SsState x = manifold_state(s, 0.0, g);
        const double height = touchdown_guard(x, p);
        if (height < -1e-9)
            throw DesignInfeasible("design_gait: swing foot below ground along the nominal path", s);
        if ((x.q.tail<2>().cwiseAbs().array() > g.x_max.head<2>().array()).any())
            throw DesignInfeasible("design_gait: desired posture exceeds the joint angle limits", s);
    }
    return g;
}

}  // namespace biped

#endif  // BIPED_GAIT_HPP
