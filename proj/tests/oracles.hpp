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

#ifndef BIPED_TESTS_ORACLES_HPP
#define BIPED_TESTS_ORACLES_HPP

// Independent reference computations shared by the unit tests and the
// acceptance binary. None of these reuse the solver paths they check.

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "biped/biped.hpp"

#ifndef BIPED_SOURCE_DIR
#define BIPED_SOURCE_DIR "."
#endif

namespace oracle {

using namespace biped;

inline ScenarioConfig default_config() {
    ScenarioConfig c = load_config(std::string(BIPED_SOURCE_DIR) + "/configs/default.json", {});
    return c;
}

/// Random extended configuration with the hip above ground.
inline Vec5 random_q(std::mt19937_64& rng, const ModelParams& p, double spread = 0.8) {
    std::uniform_real_distribution<double> a(-spread, spread), b(-0.3, 0.3);
    Vec5 q;
    q << a(rng), a(rng), a(rng), b(rng), p.l + b(rng);
    return q;
}

template <int N>
Eigen::Matrix<double, N, 1> random_vec(std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> d(-scale, scale);
    Eigen::Matrix<double, N, 1> v;
    for (int i = 0; i < N; ++i) v(i) = d(rng);
    return v;
}

// ---------------------------------------------------------------------------
// Mass matrix from energies(): Hessian of K in dq by central differences.

inline Eigen::MatrixXd fd_mass_matrix(const Eigen::VectorXd& q, const ModelParams& p, ModelKind kind) {
    const int n = static_cast<int>(q.size());
    Eigen::MatrixXd D(n, n);
    const double h = 1e-3;  // K is quadratic in dq: the stencil is exact up to roundoff
    auto K = [&](const Eigen::VectorXd& dq) { return energies(q, dq, p, kind).K; };
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Eigen::VectorXd pp = Eigen::VectorXd::Zero(n), pm = pp, mp = pp, mm = pp;
            pp(i) += h; pp(j) += h;
            pm(i) += h; pm(j) -= h;
            mp(i) -= h; mp(j) += h;
            mm(i) -= h; mm(j) -= h;
            D(i, j) = (K(pp) - K(pm) - K(mp) + K(mm)) / (4 * h * h);
        }
    return D;
}

inline Eigen::VectorXd fd_gravity(const Eigen::VectorXd& q, const ModelParams& p, ModelKind kind) {
    const int n = static_cast<int>(q.size());
    Eigen::VectorXd g(n);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
    const double h = 1e-6;
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd a = q, b = q;
        a(i) += h;
        b(i) -= h;
        g(i) = (energies(a, zero, p, kind).V - energies(b, zero, p, kind).V) / (2 * h);
    }
    return g;
}

// ---------------------------------------------------------------------------
// Impact: Gauss principle solved in the null space of the contact Jacobian.

inline Vec5 gauss_impact(const ExtState& x, const ModelParams& p) {
    const Mat5 D = ext_dynamics(x.q, x.dq, p).D;
    const Eigen::Matrix<double, 4, 5> J = contact_kinematics(x.q, x.dq, p).J;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeFullV);
    const Eigen::MatrixXd Z = svd.matrixV().rightCols(5 - 4);  // rank 4
    const Eigen::MatrixXd A = Z.transpose() * D * Z;
    const Eigen::VectorXd z = A.ldlt().solve(Z.transpose() * D * x.dq);
    return Z * z;
}

// ---------------------------------------------------------------------------
// Passive pinned energy drift.

inline double passive_energy_drift(const ModelParams& p, double T = 1.0, double dt = 1e-4) {
    SsState x;
    x.q << 0.15, 0.4, 0.2;
    x.dq << -0.8, 0.5, -0.3;
    auto E = [&](const Vec6& z) {
        const Energies e = energies(Eigen::VectorXd(z.head<3>()), Eigen::VectorXd(z.tail<3>()), p, ModelKind::pinned);
        return e.K + e.V;
    };
    Vec6 z;
    z << x.q, x.dq;
    const double E0 = E(z);
    double worst = 0.0;
    auto field = [&](double, const Vec6& zz) {
        SsState s;
        s.q = zz.head<3>();
        s.dq = zz.tail<3>();
        return pinned_vector_field(s, Vec2::Zero(), p);
    };
    const long n = std::lround(T / dt);
    for (long k = 0; k < n; ++k) {
        z = rk4_step(field, k * dt, z, dt);
        worst = std::max(worst, std::abs(E(z) - E0));
    }
    return worst / std::abs(E0);
}

// ---------------------------------------------------------------------------
// Gamma by brute force: for each constraint row, the smallest P-weighted
// squared distance from x_w to the row's boundary hyperplane, found by a
// shrinking grid search over plane coordinates.

inline double gamma_by_sampling(const Vec4& x_w, const ConstraintData& c, std::mt19937_64& rng) {
    const Eigen::LLT<Mat4> llt(c.P);
    const Mat4 L = llt.matrixL();  // P = L L^T; x~ = L^T (x - x_w)
    double best = INFINITY;
    for (int i = 0; i < c.C_x.rows(); ++i) {
        const Vec4 a_x = c.C_x.row(i).transpose();
        const double g = (c.C_x.row(i) + c.C_w.row(i)).dot(x_w) + c.C_limit(i);
        if (a_x.norm() == 0.0) {
            if (g < 0.0) best = 0.0;
            continue;
        }
        if (g <= 0.0) {
            best = 0.0;
            continue;
        }
        // Boundary in x~ coordinates: a~' x~ + g = 0 with a~ = L^-1 a_x.
        const Vec4 at = L.triangularView<Eigen::Lower>().solve(a_x);
        Eigen::HouseholderQR<Eigen::Matrix<double, 4, 1>> qr(at);
        const Mat4 Q = qr.householderQ();
        const Eigen::Matrix<double, 4, 3> basis = Q.rightCols<3>();
        // Some point of the plane, deliberately moved off the foot point.
        Vec4 origin = -g * at / at.squaredNorm();
        origin += basis * random_vec<3>(rng, 1.0 + origin.norm());
        Eigen::Vector3d center = Eigen::Vector3d::Zero();
        double half = 4.0 * (1.0 + origin.norm());
        constexpr int kGrid = 8;
        double row_best = INFINITY;
        for (int pass = 0; pass < 80; ++pass) {
            Eigen::Vector3d arg = center;
            for (int a = 0; a <= kGrid; ++a)
                for (int b = 0; b <= kGrid; ++b)
                    for (int d = 0; d <= kGrid; ++d) {
                        const Eigen::Vector3d t =
                            center + half * (Eigen::Vector3d(a, b, d) * (2.0 / kGrid) - Eigen::Vector3d::Ones());
                        const double v = (origin + basis * t).squaredNorm();
                        if (v < row_best) {
                            row_best = v;
                            arg = t;
                        }
                    }
            center = arg;
            half *= 0.6;
        }
        best = std::min(best, row_best);
    }
    return best;
}

// ---------------------------------------------------------------------------
// Frozen two-state instance of the DS tracking problem: torso angle and rate
// driven by the torso torque around a double-support posture, all other
// states frozen. Three samples (two input intervals).

struct FrozenInstance {
    LtvMpcProblem lp;
};

inline FrozenInstance frozen_instance(const ModelParams& p) {
    DsVec x;
    x << 0.08, 0.16, -0.42, -p.l * std::sin(0.08), p.l * std::cos(0.08), 0, 0, 0, 0, 0;
    const Vec3 eta = Vec3::Zero();
    const double T_s = 1e-3;
    const auto lin = linearize_discretize(x, eta, T_s, p);
    const int idx[2] = {2, 7};
    Eigen::MatrixXd A(2, 2), B(2, 1);
    Eigen::VectorXd c(2), x0(2);
    for (int r = 0; r < 2; ++r) {
        for (int k = 0; k < 2; ++k) A(r, k) = lin.A(idx[r], idx[k]);
        B(r, 0) = lin.B(idx[r], 1);
        // Frozen states contribute through c.
        c(r) = lin.c(idx[r]);
        for (int k = 0; k < 10; ++k)
            if (k != idx[0] && k != idx[1]) c(r) += lin.A(idx[r], k) * x(k);
        x0(r) = x(idx[r]);
    }
    FrozenInstance f;
    auto& lp = f.lp;
    lp.x0 = x0;
    lp.A = {A, A};
    lp.B = {B, B};
    lp.c = {c, c};
    lp.x_ref = Eigen::MatrixXd(3, 2);
    lp.x_ref << x0(0), x0(1), x0(0) + 2e-4, 0.3, x0(0) + 6e-4, 0.2;
    lp.w_x = Eigen::Vector2d(1e4, 1.0);
    lp.w_du = Eigen::VectorXd::Constant(1, 1e-3);
    lp.u_prev = Eigen::VectorXd::Zero(1);
    lp.u_min = Eigen::VectorXd::Constant(1, -0.25);
    lp.u_max = Eigen::VectorXd::Constant(1, 0.25);
    lp.x_min = Eigen::Vector2d::Constant(-INFINITY);
    lp.x_max = Eigen::Vector2d::Constant(INFINITY);
    return f;
}

/// Grid search over the boxed two-input space at the given resolution.
inline double grid_minimum(const LtvMpcProblem& lp, double resolution) {
    const double lo = lp.u_min(0), hi = lp.u_max(0);
    const int n = static_cast<int>(std::lround((hi - lo) / resolution));
    double best = INFINITY;
    Eigen::MatrixXd u(2, 1);
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) {
            u(0, 0) = lo + i * resolution;
            u(1, 0) = lo + j * resolution;
            best = std::min(best, ltv_mpc_objective(lp, u));
        }
    return best;
}

/// Vertical center-of-mass position of an extended configuration.
inline double com_height(const Vec5& q, const ModelParams& p) {
    const Energies e = energies(Eigen::VectorXd(q), Eigen::VectorXd::Zero(5), p, ModelKind::extended);
    return e.V / (p.total_mass() * p.g);
}

}  // namespace oracle

#endif  // BIPED_TESTS_ORACLES_HPP
