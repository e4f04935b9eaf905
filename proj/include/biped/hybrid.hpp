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

#ifndef BIPED_HYBRID_HPP
#define BIPED_HYBRID_HPP

// Discrete transitions: touchdown guard, event location, two-point impact
// and leg relabeling.

#include <cmath>
#include <type_traits>

#include "biped/model.hpp"

namespace biped {

enum class EventKind { touchdown, liftoff };

struct GuardEvent {
    double t_event = 0.0;
    ExtState x_minus;
    EventKind kind = EventKind::touchdown;
};

struct ImpactResult {
    Vec5 dq_plus;
    Vec4 lambda_impulse;  // [T1 N1 T2 N2] impulse per foot [N s]
};

/// Swing-foot height above the stance-foot ground level.
inline double touchdown_guard(const SsState& x, const ModelParams& p) {
    return swing_foot(x.q, x.dq, p).first.y();
}

/// Step-progress gate: the touchdown guard only counts once the swing foot is
/// ahead of the stance foot by more than `fraction` * l.
inline bool touchdown_armed(const SsState& x, const ModelParams& p, double fraction = 0.05) {
    return swing_foot(x.q, x.dq, p).first.x() > fraction * p.l;
}

template <typename State>
struct LocatedEvent {
    double t;
    State x;
    double guard_value;
    int iterations;
};

/// Refines a guard crossing inside [t0, t1]. `state_at(t)` reconstructs the
/// state inside the bracket (typically a partial integrator step from t0) and
/// `guard(x)` must satisfy guard(x(t0)) >= 0 >= guard(x(t1)).
/// Illinois-modified regula falsi with a bisection safeguard; stops when
/// |guard| < guard_tol or the bracket is shorter than time_tol.
template <typename StateAt, typename Guard>
auto locate_event(double t0, double t1, StateAt&& state_at, Guard&& guard,
                  double guard_tol = 1e-10, double time_tol = 1e-10) {
    using State = std::decay_t<decltype(state_at(t0))>;
    State x_lo = state_at(t0);
    double g_lo = guard(x_lo);
    if (g_lo == 0.0) return LocatedEvent<State>{t0, x_lo, g_lo, 0};
    State x_hi = state_at(t1);
    double g_hi = guard(x_hi);
    if (!(g_lo > 0.0 && g_hi <= 0.0))
        throw PreconditionError("locate_event: guard does not change sign over the bracket");
    if (g_hi == 0.0) return LocatedEvent<State>{t1, x_hi, g_hi, 0};

    double a = t0, b = t1;
    double fa = g_lo, fb = g_hi;
    int side = 0;
    int it = 0;
    constexpr int kMaxIterations = 200;
    // Each iteration takes an Illinois step and, if that did not halve the
    // bracket, an extra bisection step; the bracket at least halves per pass.
    auto update = [&](double t, const State& x, double g) {
        if (g > 0.0) {
            a = t;
            fa = g;
            if (side == -1) fb *= 0.5;
            side = -1;
        } else {
            b = t;
            fb = g;
            if (side == 1) fa *= 0.5;
            side = 1;
            x_hi = x;
        }
    };
    while (it < kMaxIterations && b - a >= time_tol) {
        ++it;
        const double width = b - a;
        double t = (a * fb - b * fa) / (fb - fa);
        if (!(t > a && t < b)) t = 0.5 * (a + b);
        State x = state_at(t);
        double g = guard(x);
        if (std::abs(g) < guard_tol) return LocatedEvent<State>{t, x, g, it};
        update(t, x, g);
        if (b - a > 0.5 * width) {
            t = 0.5 * (a + b);
            x = state_at(t);
            g = guard(x);
            if (std::abs(g) < guard_tol) return LocatedEvent<State>{t, x, g, it};
            update(t, x, g);
        }
    }
    return LocatedEvent<State>{b, x_hi, guard(x_hi), it};
}

/// Two-point inelastic impact: both leg ends come to rest.
inline ImpactResult impact_map(const ExtState& x_minus, const ModelParams& p) {
    const ExtDynamics dyn = ext_dynamics(x_minus.q, x_minus.dq, p);
    const ContactKinematics ck = contact_kinematics(x_minus.q, x_minus.dq, p);
    Eigen::Matrix<double, 9, 9> kkt = Eigen::Matrix<double, 9, 9>::Zero();
    kkt.topLeftCorner<5, 5>() = dyn.D;
    kkt.topRightCorner<5, 4>() = -ck.J.transpose();
    kkt.bottomLeftCorner<4, 5>() = ck.J;
    Eigen::Matrix<double, 9, 1> rhs = Eigen::Matrix<double, 9, 1>::Zero();
    rhs.head<5>() = dyn.D * x_minus.dq;
    Eigen::PartialPivLU<Eigen::Matrix<double, 9, 9>> lu(kkt);
    if (!(lu.rcond() > 1e-12))
        throw SingularityError("impact_map: contact KKT matrix is singular (degenerate posture)");
    const Eigen::Matrix<double, 9, 1> sol = lu.solve(rhs);
    return {sol.head<5>(), sol.tail<4>()};
}

/// Linear map swapping the roles of the legs. Angles:
///   q1+ = q1 - q2,  q2+ = -q2,  q3+ = q3 - q2;  hip coordinates unchanged.
/// The map is an involution and leaves the physical configuration intact.
inline const Mat5& relabel_matrix() {
    static const Mat5 R = [] {
        Mat5 m = Mat5::Zero();
        m(0, 0) = 1.0;
        m(0, 1) = -1.0;
        m(1, 1) = -1.0;
        m(2, 1) = -1.0;
        m(2, 2) = 1.0;
        m(3, 3) = 1.0;
        m(4, 4) = 1.0;
        return m;
    }();
    return R;
}

inline ExtState relabel(const ExtState& x) {
    return {relabel_matrix() * x.q, relabel_matrix() * x.dq};
}

}  // namespace biped

#endif  // BIPED_HYBRID_HPP
