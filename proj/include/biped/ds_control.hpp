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

#ifndef BIPED_DS_CONTROL_HPP
#define BIPED_DS_CONTROL_HPP

// Double support: both feet pinned, inputs eta = [u2 u3 F_th].
//
// The contact forces are eliminated through the KKT system
//   [D  -J'] [qdd   ]   [B eta - H            ]
//   [J   0 ] [lambda] = [-Jdot qdot - d J qdot]
// giving a reduced ODE in x_d = [q; dq] (10 states) that the NMPC linearizes
// at every sample. lambda = [T1 N1 T2 N2] is the ground force on the robot;
// foot 1 ends the q1 leg, foot 2 the other leg.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "biped/errors.hpp"
#include "biped/gait.hpp"
#include "biped/model.hpp"
#include "biped/qp.hpp"

namespace biped {

using DsVec = Vec10;

struct DsState {
    Vec5 q_d = Vec5::Zero();
    Vec5 dq_d = Vec5::Zero();
    Vec4 lambda = Vec4::Zero();
    double t = 0.0;

    DsVec stacked() const {
        DsVec x;
        x << q_d, dq_d;
        return x;
    }
};

struct DsAccel {
    Vec5 ddq;
    Vec4 lambda;
};

inline DsAccel ds_rhs(const Vec5& q, const Vec5& dq, const Vec3& eta, const ModelParams& p) {
    detail::require_finite(eta, "ds_rhs");
    const DsDynamics dyn = ds_dynamics(q, dq, p);
    const ContactKinematics ck = contact_kinematics(q, dq, p);
    Eigen::Matrix<double, 9, 9> kkt = Eigen::Matrix<double, 9, 9>::Zero();
    kkt.topLeftCorner<5, 5>() = dyn.D;
    kkt.topRightCorner<5, 4>() = -ck.J.transpose();
    kkt.bottomLeftCorner<4, 5>() = ck.J;
    Eigen::Matrix<double, 9, 1> rhs;
    rhs.head<5>() = dyn.B * eta - dyn.H;
    rhs.tail<4>() = -ck.Jdot_qdot - p.d * (ck.J * dq);
    Eigen::PartialPivLU<Eigen::Matrix<double, 9, 9>> lu(kkt);
    if (!(lu.rcond() > 1e-12)) throw SingularityError("ds_rhs: contact KKT matrix is singular");
    const Eigen::Matrix<double, 9, 1> sol = lu.solve(rhs);
    return {sol.head<5>(), sol.tail<4>()};
}

inline DsAccel ds_rhs(const DsState& x, const Vec3& eta, const ModelParams& p) {
    return ds_rhs(x.q_d, x.dq_d, eta, p);
}

/// Reduced vector field dx/dt of x = [q; dq].
inline DsVec ds_vector_field(const DsVec& x, const Vec3& eta, const ModelParams& p) {
    DsVec dx;
    dx.head<5>() = x.tail<5>();
    dx.tail<5>() = ds_rhs(Vec5(x.head<5>()), Vec5(x.tail<5>()), eta, p).ddq;
    return dx;
}

inline Vec4 ds_lambda(const DsVec& x, const Vec3& eta, const ModelParams& p) {
    return ds_rhs(Vec5(x.head<5>()), Vec5(x.tail<5>()), eta, p).lambda;
}

/// One zero-order-hold interval of length T_s integrated with `substeps`
/// RK4 steps.
inline DsVec ds_hold(const DsVec& x0, const Vec3& eta, double T_s, int substeps, const ModelParams& p) {
    const double h = T_s / substeps;
    DsVec x = x0;
    for (int i = 0; i < substeps; ++i) {
        const DsVec k1 = ds_vector_field(x, eta, p);
        const DsVec k2 = ds_vector_field(DsVec(x + 0.5 * h * k1), eta, p);
        const DsVec k3 = ds_vector_field(DsVec(x + 0.5 * h * k2), eta, p);
        const DsVec k4 = ds_vector_field(DsVec(x + h * k3), eta, p);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return x;
}

// ---------------------------------------------------------------------------
// Linearization

template <int NX, int NU>
struct Linearization {
    Eigen::Matrix<double, NX, NX> A;
    Eigen::Matrix<double, NX, NU> B;
    Eigen::Matrix<double, NX, 1> c;
};

/// Value and central-difference Jacobians of g(x, u) (relative step `rel`).
template <int NX, int NU, typename G>
auto fd_jacobians(const G& g, const Eigen::Matrix<double, NX, 1>& x, const Eigen::Matrix<double, NU, 1>& u,
                  double rel = 1e-6) {
    using Out = std::decay_t<decltype(g(x, u))>;
    constexpr int NY = Out::RowsAtCompileTime;
    struct Result {
        Out value;
        Eigen::Matrix<double, NY, NX> Jx;
        Eigen::Matrix<double, NY, NU> Ju;
    } r;
    r.value = g(x, u);
    for (int i = 0; i < NX; ++i) {
        const double h = rel * std::max(1.0, std::abs(x(i)));
        Eigen::Matrix<double, NX, 1> xp = x, xm = x;
        xp(i) += h;
        xm(i) -= h;
        r.Jx.col(i) = (g(xp, u) - g(xm, u)) / (2.0 * h);
    }
    for (int j = 0; j < NU; ++j) {
        const double h = rel * std::max(1.0, std::abs(u(j)));
        Eigen::Matrix<double, NU, 1> up = u, um = u;
        up(j) += h;
        um(j) -= h;
        r.Ju.col(j) = (g(x, up) - g(x, um)) / (2.0 * h);
    }
    return r;
}

/// Forward-Euler discretization of the Jacobian linearization of
/// dx/dt = f(x, u) at (x, u): x[k+1] ~ A x[k] + B u[k] + c.
template <int NX, int NU, typename F>
Linearization<NX, NU> linearize_discretize(const F& f, const Eigen::Matrix<double, NX, 1>& x,
                                           const Eigen::Matrix<double, NU, 1>& u, double T_s,
                                           double rel = 1e-6) {
    const auto j = fd_jacobians<NX, NU>(f, x, u, rel);
    Linearization<NX, NU> lin;
    lin.A = Eigen::Matrix<double, NX, NX>::Identity() + T_s * j.Jx;
    lin.B = T_s * j.Ju;
    lin.c = x + T_s * j.value - lin.A * x - lin.B * u;
    return lin;
}

inline Linearization<10, 3> linearize_discretize(const DsVec& x, const Vec3& eta, double T_s,
                                                 const ModelParams& p) {
    return linearize_discretize<10, 3>(
        [&](const DsVec& xx, const Vec3& ee) { return ds_vector_field(xx, ee, p); }, x, eta, T_s);
}

/// Affine contact-force model lambda ~ lambda0 + Lx (x - x0) + Lu (eta - eta0).
struct ForceMap {
    Vec4 lambda0;
    Eigen::Matrix<double, 4, 10> Lx;
    Eigen::Matrix<double, 4, 3> Lu;
};

/// Linearization of both the vector field and the contact forces from a
/// single set of KKT solves.
inline std::pair<Linearization<10, 3>, ForceMap> linearize_ds(const DsVec& x, const Vec3& eta, double T_s,
                                                              const ModelParams& p) {
    using Out = Eigen::Matrix<double, 14, 1>;
    auto g = [&](const DsVec& xx, const Vec3& ee) {
        const DsAccel a = ds_rhs(Vec5(xx.head<5>()), Vec5(xx.tail<5>()), ee, p);
        Out o;
        o << xx.tail<5>(), a.ddq, a.lambda;
        return o;
    };
    const auto j = fd_jacobians<10, 3>(g, x, eta);
    Linearization<10, 3> lin;
    lin.A = Mat10::Identity() + T_s * j.Jx.topRows<10>();
    lin.B = T_s * j.Ju.topRows<10>();
    lin.c = x + T_s * j.value.head<10>() - lin.A * x - lin.B * eta;
    ForceMap fm{j.value.tail<4>(), j.Jx.bottomRows<4>(), j.Ju.bottomRows<4>()};
    return {lin, fm};
}

// ---------------------------------------------------------------------------
// Reference

/// Componentwise linear interpolation: row 0 = x0, row N-1 = target.
inline Eigen::MatrixXd reference_trajectory(const DsVec& x0, const DsVec& target, int N) {
    if (N < 2) throw InvalidArgument("reference_trajectory: N must be at least 2");
    Eigen::MatrixXd r(N, 10);
    for (int k = 0; k < N; ++k) {
        const double a = static_cast<double>(k) / (N - 1);
        r.row(k) = ((1.0 - a) * x0 + a * target).transpose();
    }
    r.row(N - 1) = target.transpose();
    return r;
}

/// SS initial condition embedded in DS coordinates: the pinned posture of the
/// state (legs and hip cannot move while both feet are down) with the torso
/// placed on its virtual constraint and every velocity zero.
inline DsVec ds_target(const DsVec& x0, const GaitParams& gait) {
    DsVec t = x0;
    SsState s;
    s.q = x0.head<3>();
    s.dq.setZero();
    const Phase ph = phase(s.q, gait);
    t(2) = desired_outputs(ph.s, gait).h(1);
    t.tail<5>().setZero();
    return t;
}

// ---------------------------------------------------------------------------
// Generic linear time-varying MPC, condensed to one dense QP

struct LtvMpcProblem {
    Eigen::VectorXd x0;
    std::vector<Eigen::MatrixXd> A, B;  // M intervals
    std::vector<Eigen::VectorXd> c;
    Eigen::MatrixXd x_ref;              // (M+1) x nx; row 0 unused
    Eigen::VectorXd w_x;                // state weights
    Eigen::VectorXd w_du;               // input-increment weights
    Eigen::VectorXd u_prev;             // input before the horizon
    Eigen::VectorXd u_min, u_max;
    Eigen::VectorXd x_min, x_max;       // applied to x[1..M]
    // Mixed constraints Gx[k] x[k] + Gu[k] u[k] <= g[k] for k = 0..M-1 (optional).
    std::vector<Eigen::MatrixXd> Gx, Gu;
    std::vector<Eigen::VectorXd> g;
};

struct LtvMpcSolution {
    Eigen::MatrixXd u;  // M x nu
    Eigen::MatrixXd x;  // (M+1) x nx, predicted by the linear model
    double objective = 0.0;
    QpStatus status = QpStatus::infeasible;
};

inline LtvMpcSolution solve_ltv_mpc(const LtvMpcProblem& pr, const QpSettings& qs = {}) {
    using Eigen::MatrixXd;
    using Eigen::VectorXd;
    const int M = static_cast<int>(pr.A.size());
    if (M < 1) throw InvalidArgument("solve_ltv_mpc: empty horizon");
    const int nx = static_cast<int>(pr.x0.size());
    const int nu = static_cast<int>(pr.B.front().cols());
    const int nU = M * nu;

    // X[k] = Sx[k] + Su[k] U
    std::vector<VectorXd> Sx(M + 1);
    std::vector<MatrixXd> Su(M + 1);
    Sx[0] = pr.x0;
    Su[0] = MatrixXd::Zero(nx, nU);
    for (int k = 0; k < M; ++k) {
        Sx[k + 1] = pr.A[k] * Sx[k] + pr.c[k];
        Su[k + 1] = pr.A[k] * Su[k];
        Su[k + 1].middleCols(k * nu, nu) += pr.B[k];
    }

    MatrixXd H = MatrixXd::Zero(nU, nU);
    VectorXd f = VectorXd::Zero(nU);
    double const_term = 0.0;
    for (int k = 1; k <= M; ++k) {
        const VectorXd e = Sx[k] - pr.x_ref.row(k).transpose();
        const MatrixXd WSu = pr.w_x.asDiagonal() * Su[k];
        H.noalias() += 2.0 * Su[k].transpose() * WSu;
        f.noalias() += 2.0 * WSu.transpose() * e;
        const_term += e.dot(pr.w_x.cwiseProduct(e));
    }
    // Increments: du[0] = u[0] - u_prev, du[k] = u[k] - u[k-1].
    for (int k = 0; k < M; ++k) {
        for (int j = 0; j < nu; ++j) {
            const int a = k * nu + j;
            const double w = pr.w_du(j);
            H(a, a) += 2.0 * w;
            if (k > 0) {
                const int b = (k - 1) * nu + j;
                H(b, b) += 2.0 * w;
                H(a, b) -= 2.0 * w;
                H(b, a) -= 2.0 * w;
            } else {
                f(a) -= 2.0 * w * pr.u_prev(j);
                const_term += w * pr.u_prev(j) * pr.u_prev(j);
            }
        }
    }
    H = 0.5 * (H + H.transpose());

    // Inequalities.
    std::vector<std::pair<VectorXd, double>> rows;
    auto add = [&](const VectorXd& a, double b) { rows.emplace_back(a, b); };
    for (int k = 0; k < M; ++k)
        for (int j = 0; j < nu; ++j) {
            VectorXd a = VectorXd::Zero(nU);
            a(k * nu + j) = 1.0;
            if (std::isfinite(pr.u_max(j))) add(a, pr.u_max(j));
            if (std::isfinite(pr.u_min(j))) add(-a, -pr.u_min(j));
        }
    for (int k = 1; k <= M; ++k)
        for (int i = 0; i < nx; ++i) {
            if (std::isfinite(pr.x_max(i))) add(Su[k].row(i).transpose(), pr.x_max(i) - Sx[k](i));
            if (std::isfinite(pr.x_min(i))) add(-Su[k].row(i).transpose(), Sx[k](i) - pr.x_min(i));
        }
    for (int k = 0; k < static_cast<int>(pr.g.size()) && k < M; ++k) {
        const MatrixXd Gk = pr.Gx[k] * Su[k];
        for (int r = 0; r < pr.g[k].size(); ++r) {
            VectorXd a = Gk.row(r).transpose();
            a.segment(k * nu, nu) += pr.Gu[k].row(r).transpose();
            add(a, pr.g[k](r) - pr.Gx[k].row(r).dot(Sx[k]));
        }
    }

    QpProblem qp;
    qp.H = H;
    qp.f = f;
    qp.A_eq.resize(0, nU);
    qp.b_eq.resize(0);
    qp.A_in.resize(static_cast<Eigen::Index>(rows.size()), nU);
    qp.b_in.resize(static_cast<Eigen::Index>(rows.size()));
    for (size_t r = 0; r < rows.size(); ++r) {
        qp.A_in.row(static_cast<Eigen::Index>(r)) = rows[r].first.transpose();
        qp.b_in(static_cast<Eigen::Index>(r)) = rows[r].second;
    }
    const QpResult res = solve_qp(qp, qs);

    LtvMpcSolution sol;
    sol.status = res.status;
    sol.u.resize(M, nu);
    sol.x.resize(M + 1, nx);
    for (int k = 0; k < M; ++k) sol.u.row(k) = res.x.segment(k * nu, nu).transpose();
    for (int k = 0; k <= M; ++k) sol.x.row(k) = (Sx[k] + Su[k] * res.x).transpose();
    sol.objective = res.objective + const_term;
    return sol;
}

/// Objective of an input sequence under the linear model (for oracles).
inline double ltv_mpc_objective(const LtvMpcProblem& pr, const Eigen::MatrixXd& u) {
    const int M = static_cast<int>(pr.A.size());
    Eigen::VectorXd x = pr.x0;
    Eigen::VectorXd prev = pr.u_prev;
    double J = 0.0;
    for (int k = 0; k < M; ++k) {
        const Eigen::VectorXd uk = u.row(k).transpose();
        const Eigen::VectorXd du = uk - prev;
        J += du.dot(pr.w_du.cwiseProduct(du));
        x = pr.A[k] * x + pr.B[k] * uk + pr.c[k];
        const Eigen::VectorXd e = x - pr.x_ref.row(k + 1).transpose();
        J += e.dot(pr.w_x.cwiseProduct(e));
        prev = uk;
    }
    return J;
}

// ---------------------------------------------------------------------------
// DS NMPC

struct NmpcProblem {
    int N = 21;                      // samples, N - 1 input intervals
    double T_s = 1e-3;
    Eigen::MatrixXd r_d;             // N x 10
    Vec10 w_x = (Vec10() << 10, 10, 10, 0, 0, 1, 1, 1, 1, 1).finished();
    Vec3 w_eta = Vec3(1e-3, 1e-3, 1e-4);
    Vec3 eta_max = Vec3(3.0, 3.0, 40.0);
    Vec3 eta_min = Vec3(-3.0, -3.0, 0.0);
    Vec10 x_d_max = (Vec10() << 1.5, 1.5, 1.5, 1, 1, 10, 10, 10, 10, 10).finished();
    double mu_s = 0.3;
    double mu_margin = 0.9;          // the QP uses mu_margin * mu_s
    double eps_N = 0.1;              // lambda_N >= eps_N
    int sqp_iterations = 2;
    int substeps = 10;               // RK4 steps per hold in the nominal rollout

    void validate() const {
        if (N < 2) throw InvalidArgument("NmpcProblem: N must be at least 2");
        if (!(T_s > 0.0)) throw InvalidArgument("NmpcProblem: T_s must be positive");
        if (r_d.rows() != N || r_d.cols() != 10)
            throw InvalidArgument("NmpcProblem: reference must be N x 10");
        if ((w_x.array() < 0).any() || (w_eta.array() <= 0).any())
            throw InvalidArgument("NmpcProblem: weights must be non-negative (input weights positive)");
        if (!(mu_s > 0.0) || !(mu_margin > 0.0 && mu_margin <= 1.0))
            throw InvalidArgument("NmpcProblem: friction coefficient must be positive");
        if ((eta_min.array() > eta_max.array()).any()) throw InvalidArgument("NmpcProblem: empty input box");
        if (substeps < 1 || sqp_iterations < 1) throw InvalidArgument("NmpcProblem: bad iteration counts");
    }
};

struct NmpcSolution {
    Eigen::MatrixXd eta_seq;      // (N-1) x 3
    Eigen::MatrixXd x_pred;       // N x 10
    Eigen::MatrixXd lambda_pred;  // N x 4 (last row repeats the last input)
    double objective = 0.0;
    QpStatus status = QpStatus::infeasible;
};

/// Friction cone and unilateral rows for one foot force pair as G lambda <= h.
inline void contact_rows(double mu, double eps_N, Eigen::Matrix<double, 6, 4>& G,
                         Eigen::Matrix<double, 6, 1>& h) {
    G.setZero();
    h.setZero();
    for (int f = 0; f < 2; ++f) {
        const int T = 2 * f, Nn = 2 * f + 1, r = 3 * f;
        G(r, T) = 1.0;
        G(r, Nn) = -mu;
        G(r + 1, T) = -1.0;
        G(r + 1, Nn) = -mu;
        G(r + 2, Nn) = -1.0;
        h(r + 2) = -eps_N;
    }
}

/// One receding-horizon solve from x_d1. `warm` (optional, (N-1) x 3) is the
/// nominal input sequence for the first linearization; `eta_prev` is the
/// input applied before the horizon (zero at the start of a DS phase).
inline NmpcSolution solve_nmpc(const NmpcProblem& prob, const DsVec& x_d1, const ModelParams& p,
                               const std::optional<Eigen::MatrixXd>& warm = std::nullopt,
                               const Vec3& eta_prev = Vec3::Zero()) {
    prob.validate();
    const int M = prob.N - 1;
    Eigen::MatrixXd eta_nom = Eigen::MatrixXd::Zero(M, 3);
    if (warm && warm->rows() == M && warm->cols() == 3) eta_nom = *warm;
    for (int k = 0; k < M; ++k)
        eta_nom.row(k) = eta_nom.row(k).cwiseMax(prob.eta_min.transpose()).cwiseMin(prob.eta_max.transpose());

    Eigen::Matrix<double, 6, 4> Gc;
    Eigen::Matrix<double, 6, 1> hc;
    contact_rows(prob.mu_margin * prob.mu_s, prob.eps_N, Gc, hc);

    NmpcSolution sol;
    for (int it = 0; it < prob.sqp_iterations; ++it) {
        std::vector<DsVec> xs(M + 1);
        xs[0] = x_d1;
        for (int k = 0; k < M; ++k) xs[k + 1] = ds_hold(xs[k], eta_nom.row(k).transpose(), prob.T_s, prob.substeps, p);

        LtvMpcProblem lp;
        lp.x0 = x_d1;
        lp.x_ref = prob.r_d;
        lp.w_x = prob.w_x;
        lp.w_du = prob.w_eta;
        lp.u_prev = eta_prev;
        lp.u_min = prob.eta_min;
        lp.u_max = prob.eta_max;
        lp.x_min = -prob.x_d_max;
        lp.x_max = prob.x_d_max;
        std::vector<ForceMap> fms;
        for (int k = 0; k < M; ++k) {
            const Vec3 ek = eta_nom.row(k).transpose();
            const auto [lin, fm] = linearize_ds(xs[k], ek, prob.T_s, p);
            lp.A.emplace_back(lin.A);
            lp.B.emplace_back(lin.B);
            // Anchor the affine model on the nonlinear rollout.
            lp.c.emplace_back(xs[k + 1] - lin.A * xs[k] - lin.B * ek);
            // G (lambda0 + Lx (x - xk) + Lu (eta - ek)) <= h
            lp.Gx.emplace_back(Gc * fm.Lx);
            lp.Gu.emplace_back(Gc * fm.Lu);
            lp.g.emplace_back(hc - Gc * (fm.lambda0 - fm.Lx * xs[k] - fm.Lu * ek));
            fms.push_back(fm);
        }
        const LtvMpcSolution ls = solve_ltv_mpc(lp);
        sol.status = ls.status;
        if (ls.status != QpStatus::optimal) {
            if (it == 0) {
                sol.eta_seq = Eigen::MatrixXd::Zero(M, 3);
                sol.x_pred = Eigen::MatrixXd::Zero(M + 1, 10);
                for (int k = 0; k <= M; ++k) sol.x_pred.row(k) = xs[k].transpose();
                sol.lambda_pred = Eigen::MatrixXd::Zero(M + 1, 4);
                sol.objective = std::numeric_limits<double>::quiet_NaN();
            }
            // Keep the last optimal iterate, if any, but report the failure.
            return sol;
        }
        sol.eta_seq = ls.u;
        sol.x_pred = ls.x;
        sol.objective = ls.objective;
        sol.lambda_pred.resize(M + 1, 4);
        for (int k = 0; k <= M; ++k) {
            const int kk = std::min(k, M - 1);
            const Vec3 ek = eta_nom.row(kk).transpose();
            const Vec10 dx = ls.x.row(k).transpose() - xs[k];
            sol.lambda_pred.row(k) =
                (fms[kk].lambda0 + fms[kk].Lx * dx + fms[kk].Lu * (Vec3(ls.u.row(kk).transpose()) - ek)).transpose();
        }
        eta_nom = ls.u;
    }
    return sol;
}

struct NmpcSettings {
    double envelope = 0.02;   // fixed DS duration [s]
    double T_s = 1e-3;
    Vec10 w_x = (Vec10() << 10, 10, 10, 0, 0, 1, 1, 1, 1, 1).finished();
    Vec3 w_eta = Vec3(1e-3, 1e-3, 1e-4);
    Vec2 u_max = Vec2::Constant(3.0);
    double f_th_max = 40.0;
    Vec10 x_d_max = (Vec10() << 1.5, 1.5, 1.5, 1, 1, 10, 10, 10, 10, 10).finished();
    double mu_s = 0.3;
    double mu_margin = 0.9;
    double eps_N = 0.1;
    int sqp_iterations = 2;
    bool thrust_enabled = true;

    int samples() const { return static_cast<int>(std::lround(envelope / T_s)); }
};

/// Shrinking-horizon NMPC over the fixed DS envelope. The reference is built
/// once per DS phase; at sample j the problem covers samples j..N-1.
class NmpcController {
public:
    NmpcController(NmpcSettings s, ModelParams p) : s_(std::move(s)), p_(p) {}

    void begin(const DsVec& x_d0, const DsVec& target, int substeps) {
        const int intervals = s_.samples();
        if (intervals < 1) throw InvalidArgument("NmpcController: envelope shorter than one sample");
        ref_ = reference_trajectory(x_d0, target, intervals + 1);
        warm_ = Eigen::MatrixXd::Zero(intervals, 3);
        eta_prev_.setZero();
        substeps_ = substeps;
        sample_ = 0;
    }

    struct Step {
        Vec3 eta;
        QpStatus status;
        double objective;
    };

    Step next(const DsVec& x) {
        const int intervals = s_.samples();
        const int remaining = intervals - sample_;
        Step out{Vec3::Zero(), QpStatus::optimal, 0.0};
        if (remaining < 1) {
            out.eta = eta_prev_;
            return out;
        }
        NmpcProblem pr;
        pr.N = remaining + 1;
        pr.T_s = s_.T_s;
        pr.r_d = ref_.bottomRows(remaining + 1);
        pr.w_x = s_.w_x;
        pr.w_eta = s_.w_eta;
        pr.eta_max << s_.u_max, s_.thrust_enabled ? s_.f_th_max : 0.0;
        pr.eta_min << -s_.u_max, 0.0;
        pr.x_d_max = s_.x_d_max;
        pr.mu_s = s_.mu_s;
        pr.mu_margin = s_.mu_margin;
        pr.eps_N = s_.eps_N;
        pr.sqp_iterations = s_.sqp_iterations;
        pr.substeps = substeps_;
        const Eigen::MatrixXd warm = warm_.bottomRows(remaining);
        const NmpcSolution sol = solve_nmpc(pr, x, p_, warm, eta_prev_);
        out.status = sol.status;
        out.objective = sol.objective;
        if (sol.status == QpStatus::optimal) {
            out.eta = sol.eta_seq.row(0).transpose().cwiseMax(pr.eta_min).cwiseMin(pr.eta_max);
            warm_.bottomRows(remaining) = sol.eta_seq;
        } else {
            out.eta.setZero();
        }
        eta_prev_ = out.eta;
        ++sample_;
        return out;
    }

    const NmpcSettings& settings() const { return s_; }

private:
    NmpcSettings s_;
    ModelParams p_;
    Eigen::MatrixXd ref_;
    Eigen::MatrixXd warm_;
    Vec3 eta_prev_ = Vec3::Zero();
    int substeps_ = 10;
    int sample_ = 0;
};

// ---------------------------------------------------------------------------
// Simulation

struct DsTrace {
    std::vector<double> t;
    std::vector<DsVec> x;
    std::vector<Vec3> eta;
    std::vector<Vec4> lambda;
    std::vector<QpStatus> status;  // status of the sample that produced eta
    bool contact_violation = false;
    bool liftoff = false;
};

struct DsControl {
    Vec3 eta;
    QpStatus status = QpStatus::optimal;
};

/// Integrates the DS phase with RK4 (step dt) under zero-order-hold inputs
/// from `controller(t, x)` refreshed every T_s. The trace holds one row per
/// integrator node, with the force evaluated under the input held there.
/// Stops at T_env, or at the first node with lambda_N2 <= 0 when
/// `liftoff_exit` is set.
template <typename Controller>
std::pair<DsTrace, DsState> simulate_ds(const DsState& x_d0, Controller&& controller, double T_env,
                                        double dt, double T_s, const ModelParams& p,
                                        bool liftoff_exit = false) {
    if (!(T_env >= 0.0)) throw InvalidArgument("simulate_ds: T_env must be non-negative");
    if (!(dt > 0.0) || !(T_s > 0.0)) throw InvalidArgument("simulate_ds: steps must be positive");
    DsTrace tr;
    DsState out = x_d0;
    if (T_env == 0.0) return {tr, out};

    const int per_hold = std::max(1, static_cast<int>(std::lround(T_s / dt)));
    const double h = T_s / per_hold;
    const int holds = static_cast<int>(std::ceil(T_env / T_s - 1e-9));
    DsVec x = x_d0.stacked();
    double t0 = x_d0.t;
    auto record = [&](double t, const DsVec& xx, const Vec3& eta, QpStatus st) {
        const Vec4 lam = ds_lambda(xx, eta, p);
        tr.t.push_back(t);
        tr.x.push_back(xx);
        tr.eta.push_back(eta);
        tr.lambda.push_back(lam);
        tr.status.push_back(st);
        if (lam(1) <= 0.0 || lam(3) <= 0.0) tr.contact_violation = true;
        return lam;
    };
    for (int j = 0; j < holds; ++j) {
        const double hold_len = std::min(T_s, T_env - j * T_s);
        const int n_sub = std::max(1, static_cast<int>(std::lround(hold_len / h)));
        const double hh = hold_len / n_sub;
        const DsControl c = controller(t0 + j * T_s, x);
        for (int i = 0; i < n_sub; ++i) {
            const double t = t0 + j * T_s + i * hh;
            const Vec4 lam = record(t, x, c.eta, c.status);
            if (liftoff_exit && lam(3) <= 0.0 && (j > 0 || i > 0)) {
                tr.liftoff = true;
                out.q_d = x.head<5>();
                out.dq_d = x.tail<5>();
                out.lambda = lam;
                out.t = t;
                return {tr, out};
            }
            const auto f = [&](const DsVec& z) { return ds_vector_field(z, c.eta, p); };
            const DsVec k1 = f(x);
            const DsVec k2 = f(DsVec(x + 0.5 * hh * k1));
            const DsVec k3 = f(DsVec(x + 0.5 * hh * k2));
            const DsVec k4 = f(DsVec(x + hh * k3));
            const DsVec xn = x + (hh / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if (!xn.allFinite()) throw NumericalError("simulate_ds: non-finite state");
            x = xn;
        }
        if (j + 1 == holds) {
            out.q_d = x.head<5>();
            out.dq_d = x.tail<5>();
            out.lambda = ds_lambda(x, c.eta, p);
            out.t = t0 + T_env;
        }
    }
    return {tr, out};
}

}  // namespace biped

#endif  // BIPED_DS_CONTROL_HPP
