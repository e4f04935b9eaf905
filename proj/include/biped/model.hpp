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

#ifndef BIPED_MODEL_HPP
#define BIPED_MODEL_HPP

// Rigid-body model of the planar three-link biped with a torso thruster.
//
// Coordinates (all angles measured counter-clockwise from the upward world
// vertical, x forward, y up):
//   q1  absolute angle of the stance leg (foot -> hip direction)
//   q2  swing leg relative to the stance leg, measured clockwise:
//       swing-leg absolute angle = q1 - q2
//   q3  torso relative to the swing leg: torso absolute angle = q1 - q2 + q3
// Point masses: m_h at the hip, m_k at the midpoint of each leg, m_T at
// distance l_T from the hip along the torso. Links are otherwise massless.
//
// Pinned (single support) coordinates q_s = [q1 q2 q3] with the stance foot
// at the origin; extended coordinates q_e = [q1 q2 q3 x_h y_h].

#include <array>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "biped/errors.hpp"

namespace biped {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Vec5 = Eigen::Matrix<double, 5, 1>;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Vec10 = Eigen::Matrix<double, 10, 1>;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat5 = Eigen::Matrix<double, 5, 5>;
using Mat10 = Eigen::Matrix<double, 10, 10>;

struct ModelParams {
    double m_T = 0.300;    // torso mass [kg]
    double m_h = 0.200;    // hip mass [kg]
    double m_k = 0.100;    // mass of each leg [kg]
    double l_T = 0.300;    // hip to torso mass [m]
    double l = 0.6325;     // leg length [m]
    double g = 9.81;       // [m/s^2]
    double d = 20.0;       // contact constraint damping [1/s]
    double f_th_max = 40.0;  // thrust limit [N]

    double total_mass() const { return m_T + m_h + 2.0 * m_k; }

    void validate() const {
        if (!(m_T > 0 && m_h > 0 && m_k > 0))
            throw InvalidArgument("ModelParams: masses must be positive");
        if (!(l_T > 0 && l > 0))
            throw InvalidArgument("ModelParams: lengths must be positive");
        if (!(g > 0)) throw InvalidArgument("ModelParams: g must be positive");
        if (!(d >= 0)) throw InvalidArgument("ModelParams: d must be >= 0");
        if (!(f_th_max >= 0))
            throw InvalidArgument("ModelParams: f_th_max must be >= 0");
    }

    /// Builds SI parameters from table values given in grams and centimeters.
    static ModelParams from_grams_cm(double m_T_g, double m_h_g, double m_k_g,
                                     double l_T_cm, double l_cm) {
        ModelParams p;
        p.m_T = m_T_g * 1e-3;
        p.m_h = m_h_g * 1e-3;
        p.m_k = m_k_g * 1e-3;
        p.l_T = l_T_cm * 1e-2;
        p.l = l_cm * 1e-2;
        return p;
    }
};

struct SsState {
    Vec3 q = Vec3::Zero();
    Vec3 dq = Vec3::Zero();
    double t = 0.0;
};

struct ExtState {
    Vec5 q = Vec5::Zero();
    Vec5 dq = Vec5::Zero();
};

template <int N, int M>
struct DynTerms {
    Eigen::Matrix<double, N, N> D;
    Eigen::Matrix<double, N, 1> H;
    Eigen::Matrix<double, N, M> B;
};

using SsDynamics = DynTerms<3, 2>;
using ExtDynamics = DynTerms<5, 2>;
using DsDynamics = DynTerms<5, 3>;

struct ContactKinematics {
    Vec2 p1;                               // stance leg end
    Vec2 p2;                               // swing leg end
    Eigen::Matrix<double, 4, 5> J;         // d[p1; p2]/dq_e
    Vec4 Jdot_qdot;                        // (dJ/dt) dq_e
};

enum class ModelKind { pinned, extended };

/// Unit vector at angle a counter-clockwise from the upward vertical.
inline Vec2 direction(double a) { return {-std::sin(a), std::cos(a)}; }
/// d/da direction(a).
inline Vec2 direction_prime(double a) { return {-std::cos(a), -std::sin(a)}; }

inline double stance_angle(const Vec3& q) { return q(0); }
inline double swing_angle(const Vec3& q) { return q(0) - q(1); }
inline double torso_angle(const Vec3& q) { return q(0) - q(1) + q(2); }

namespace detail {

// Coefficients mapping [q1 q2 q3] to the absolute link angles.
inline const Vec3& stance_coeffs() {
    static const Vec3 a(1.0, 0.0, 0.0);
    return a;
}
inline const Vec3& swing_coeffs() {
    static const Vec3 a(1.0, -1.0, 0.0);
    return a;
}
inline const Vec3& torso_coeffs() {
    static const Vec3 a(1.0, -1.0, 1.0);
    return a;
}

struct ArmTerm {
    double r;   // signed arm length
    Vec3 a;     // link angle = a . q_angles
};

template <int N>
struct PointKin {
    Vec2 p;
    Eigen::Matrix<double, 2, N> J;
    Vec2 Jdot_qdot;
};

// Position p = base + sum_i r_i direction(a_i . q), where base is the hip
// coordinates q(3:4) for the extended model and the origin for the pinned one.
template <int N>
PointKin<N> point_kinematics(const Eigen::Matrix<double, N, 1>& q,
                             const Eigen::Matrix<double, N, 1>& dq,
                             std::initializer_list<ArmTerm> arms) {
    static_assert(N == 3 || N == 5);
    PointKin<N> k;
    k.p.setZero();
    k.J.setZero();
    k.Jdot_qdot.setZero();
    if constexpr (N == 5) {
        k.p = q.template tail<2>();
        k.J.template rightCols<2>().setIdentity();
    }
    const Vec3 qa = q.template head<3>();
    const Vec3 dqa = dq.template head<3>();
    for (const ArmTerm& arm : arms) {
        const double ang = arm.a.dot(qa);
        const double rate = arm.a.dot(dqa);
        k.p += arm.r * direction(ang);
        k.J.template leftCols<3>() += arm.r * direction_prime(ang) * arm.a.transpose();
        k.Jdot_qdot -= arm.r * rate * rate * direction(ang);
    }
    return k;
}

template <int N>
struct MassPoint {
    double m;
    PointKin<N> kin;
};

template <int N>
std::array<MassPoint<N>, 4> mass_points(const Eigen::Matrix<double, N, 1>& q,
                                        const Eigen::Matrix<double, N, 1>& dq,
                                        const ModelParams& p) {
    const Vec3& a1 = stance_coeffs();
    const Vec3& a2 = swing_coeffs();
    const Vec3& aT = torso_coeffs();
    if constexpr (N == 3) {
        return {{
            {p.m_h, point_kinematics<3>(q, dq, {{p.l, a1}})},
            {p.m_k, point_kinematics<3>(q, dq, {{0.5 * p.l, a1}})},
            {p.m_k, point_kinematics<3>(q, dq, {{p.l, a1}, {-0.5 * p.l, a2}})},
            {p.m_T, point_kinematics<3>(q, dq, {{p.l, a1}, {p.l_T, aT}})},
        }};
    } else {
        return {{
            {p.m_h, point_kinematics<5>(q, dq, {})},
            {p.m_k, point_kinematics<5>(q, dq, {{-0.5 * p.l, a1}})},
            {p.m_k, point_kinematics<5>(q, dq, {{-0.5 * p.l, a2}})},
            {p.m_T, point_kinematics<5>(q, dq, {{p.l_T, aT}})},
        }};
    }
}

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& v, const char* what) {
    if (!v.allFinite())
        throw InvalidArgument(std::string(what) + ": non-finite input");
}

// D = sum m J^T J, H = sum m J^T (Jdot qdot) + dV/dq.
template <int N>
std::pair<Eigen::Matrix<double, N, N>, Eigen::Matrix<double, N, 1>> mass_and_bias(
    const Eigen::Matrix<double, N, 1>& q, const Eigen::Matrix<double, N, 1>& dq,
    const ModelParams& p) {
    Eigen::Matrix<double, N, N> D = Eigen::Matrix<double, N, N>::Zero();
    Eigen::Matrix<double, N, 1> H = Eigen::Matrix<double, N, 1>::Zero();
    for (const auto& mp : mass_points<N>(q, dq, p)) {
        D.noalias() += mp.m * mp.kin.J.transpose() * mp.kin.J;
        H.noalias() += mp.m * mp.kin.J.transpose() * mp.kin.Jdot_qdot;
        H.noalias() += mp.m * p.g * mp.kin.J.row(1).transpose();
    }
    return {D, H};
}

}  // namespace detail

/// Pinned-model dynamics D_s qdd + H_s = B_s u with u = [u2 u3].
inline SsDynamics ss_dynamics(const Vec3& q, const Vec3& dq, const ModelParams& p) {
    detail::require_finite(q, "ss_dynamics");
    detail::require_finite(dq, "ss_dynamics");
    SsDynamics t;
    std::tie(t.D, t.H) = detail::mass_and_bias<3>(q, dq, p);
    t.B << 0, 0, 1, 0, 0, 1;
    return t;
}

/// Unpinned (floating hip) dynamics used by the impact map.
inline ExtDynamics ext_dynamics(const Vec5& q, const Vec5& dq, const ModelParams& p) {
    detail::require_finite(q, "ext_dynamics");
    detail::require_finite(dq, "ext_dynamics");
    ExtDynamics t;
    std::tie(t.D, t.H) = detail::mass_and_bias<5>(q, dq, p);
    t.B.setZero();
    t.B(1, 0) = 1.0;
    t.B(2, 1) = 1.0;
    return t;
}

/// Thrust direction in the world frame: along the torso, from the torso mass
/// towards the hip, so positive thrust presses the robot onto the ground.
inline Vec2 thrust_direction(const Vec3& q) { return -direction(torso_angle(q)); }

/// Double-support dynamics with eta = [u2 u3 F_th]; column 3 of B_d is the
/// generalized force of a unit thrust applied at the torso mass point.
inline DsDynamics ds_dynamics(const Vec5& q, const Vec5& dq, const ModelParams& p) {
    const ExtDynamics e = ext_dynamics(q, dq, p);
    DsDynamics t;
    t.D = e.D;
    t.H = e.H;
    t.B.leftCols<2>() = e.B;
    const auto torso = detail::point_kinematics<5>(
        q, dq, {{p.l_T, detail::torso_coeffs()}});
    t.B.col(2) = torso.J.transpose() * thrust_direction(q.head<3>());
    return t;
}

inline ContactKinematics contact_kinematics(const Vec5& q, const Vec5& dq,
                                            const ModelParams& p) {
    detail::require_finite(q, "contact_kinematics");
    detail::require_finite(dq, "contact_kinematics");
    const auto f1 = detail::point_kinematics<5>(q, dq, {{-p.l, detail::stance_coeffs()}});
    const auto f2 = detail::point_kinematics<5>(q, dq, {{-p.l, detail::swing_coeffs()}});
    ContactKinematics c;
    c.p1 = f1.p;
    c.p2 = f2.p;
    c.J.topRows<2>() = f1.J;
    c.J.bottomRows<2>() = f2.J;
    c.Jdot_qdot << f1.Jdot_qdot, f2.Jdot_qdot;
    return c;
}

/// Swing-foot position and velocity in the pinned frame.
inline std::pair<Vec2, Vec2> swing_foot(const Vec3& q, const Vec3& dq, const ModelParams& p) {
    const auto k = detail::point_kinematics<3>(
        q, dq, {{p.l, detail::stance_coeffs()}, {-p.l, detail::swing_coeffs()}});
    return {k.p, k.J * dq};
}

inline Vec2 hip_position_pinned(const Vec3& q, const ModelParams& p) {
    return p.l * direction(q(0));
}

struct Energies {
    double K;
    double V;
};

/// Kinetic and potential energy; the potential datum is the stance foot height
/// (the origin for the pinned model, y = 0 for the extended model).
inline Energies energies(const Eigen::VectorXd& q, const Eigen::VectorXd& dq,
                         const ModelParams& p, ModelKind kind) {
    const int n = kind == ModelKind::pinned ? 3 : 5;
    if (q.size() != n || dq.size() != n)
        throw InvalidArgument("energies: dimension does not match model kind");
    detail::require_finite(q, "energies");
    detail::require_finite(dq, "energies");
    Energies e{0.0, 0.0};
    auto accumulate = [&](const auto& points, const auto& qd) {
        for (const auto& mp : points) {
            const Vec2 v = mp.kin.J * qd;
            e.K += 0.5 * mp.m * v.squaredNorm();
            e.V += mp.m * p.g * mp.kin.p.y();
        }
    };
    if (kind == ModelKind::pinned) {
        const Vec3 qq = q, dd = dq;
        accumulate(detail::mass_points<3>(qq, dd, p), dd);
    } else {
        const Vec5 qq = q, dd = dq;
        accumulate(detail::mass_points<5>(qq, dd, p), dd);
    }
    return e;
}

/// Solves D x = rhs for a symmetric positive definite D, rejecting
/// numerically singular matrices (condition estimate above 1e12).
template <int N, typename Rhs>
auto spd_solve(const Eigen::Matrix<double, N, N>& D, const Rhs& rhs, const char* what) {
    Eigen::LDLT<Eigen::Matrix<double, N, N>> ldlt(D);
    if (ldlt.info() != Eigen::Success || !(ldlt.rcond() > 1e-12))
        throw SingularityError(std::string(what) + ": inertia matrix is singular");
    return Eigen::Matrix<double, N, Rhs::ColsAtCompileTime>(ldlt.solve(rhs));
}

/// Returns [dq; qdd] of the pinned model under joint torques u.
inline Vec6 pinned_vector_field(const SsState& x, const Vec2& u, const ModelParams& p) {
    detail::require_finite(u, "pinned_vector_field");
    const SsDynamics dyn = ss_dynamics(x.q, x.dq, p);
    Vec6 dx;
    dx.head<3>() = x.dq;
    dx.tail<3>() = spd_solve<3>(dyn.D, Vec3(dyn.B * u - dyn.H), "pinned_vector_field");
    return dx;
}

/// Extended-coordinate state of a pinned configuration with the stance foot
/// at `foot` (world frame).
inline ExtState to_extended(const SsState& x, const ModelParams& p, const Vec2& foot = Vec2::Zero()) {
    ExtState e;
    e.q.head<3>() = x.q;
    e.dq.head<3>() = x.dq;
    e.q.tail<2>() = foot + hip_position_pinned(x.q, p);
    e.dq.tail<2>() = p.l * direction_prime(x.q(0)) * x.dq(0);
    return e;
}

}  // namespace biped

#endif  // BIPED_MODEL_HPP
