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

#ifndef BIPED_QP_HPP
#define BIPED_QP_HPP

// Dense strictly convex QP
//
//   min  1/2 x' H x + f' x
//   s.t. A_eq x  = b_eq
//        A_in x <= b_in
//
// solved with the Goldfarb-Idnani dual active-set method. The method starts
// from the unconstrained minimizer and adds violated constraints one at a
// time, keeping the dual iterate feasible, so an infeasible problem is
// detected when no step can restore primal feasibility.

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "biped/errors.hpp"

namespace biped {

enum class QpStatus { optimal, max_iter, infeasible };

inline const char* to_string(QpStatus s) {
    switch (s) {
        case QpStatus::optimal: return "optimal";
        case QpStatus::max_iter: return "max_iter";
        case QpStatus::infeasible: return "infeasible";
    }
    return "unknown";
}

struct QpProblem {
    Eigen::MatrixXd H;
    Eigen::VectorXd f;
    Eigen::MatrixXd A_eq;  // may have zero rows
    Eigen::VectorXd b_eq;
    Eigen::MatrixXd A_in;  // may have zero rows
    Eigen::VectorXd b_in;
};

struct QpResult {
    Eigen::VectorXd x;
    Eigen::VectorXd lambda_eq;  // multipliers, H x + f + A_eq' l_eq + A_in' l_in = 0
    Eigen::VectorXd lambda_in;  // >= 0
    double objective = 0.0;
    QpStatus status = QpStatus::infeasible;
    int iterations = 0;
};

struct QpSettings {
    double feas_tol = 1e-9;   // relative violation tolerance
    int max_iter = 0;         // 0: 10 * (n + m)
};

namespace detail {

// Givens rotation zeroing b in (a, b); returns (c, s, r).
inline void givens(double a, double b, double& c, double& s, double& r) {
    const double h = std::hypot(a, b);
    if (h == 0.0) {
        c = 1.0;
        s = 0.0;
        r = 0.0;
        return;
    }
    c = a / h;
    s = b / h;
    r = h;
}

}  // namespace detail

inline QpResult solve_qp(const QpProblem& prob, const QpSettings& settings = {}) {
    using Eigen::MatrixXd;
    using Eigen::VectorXd;
    const Eigen::Index n = prob.H.rows();
    const Eigen::Index me = prob.A_eq.rows();
    const Eigen::Index mi = prob.A_in.rows();
    if (prob.H.cols() != n || prob.f.size() != n)
        throw InvalidArgument("solve_qp: H and f dimensions disagree");
    if ((me > 0 && prob.A_eq.cols() != n) || prob.b_eq.size() != me)
        throw InvalidArgument("solve_qp: equality dimensions disagree");
    if ((mi > 0 && prob.A_in.cols() != n) || prob.b_in.size() != mi)
        throw InvalidArgument("solve_qp: inequality dimensions disagree");

    QpResult res;
    res.lambda_eq = VectorXd::Zero(me);
    res.lambda_in = VectorXd::Zero(mi);

    Eigen::LLT<MatrixXd> llt(prob.H);
    if (llt.info() != Eigen::Success) throw InvalidArgument("solve_qp: H is not positive definite");

    // Constraints in the form n_i' x >= b_i.
    auto normal = [&](Eigen::Index i) -> VectorXd {
        return i < me ? VectorXd(prob.A_eq.row(i).transpose()) : VectorXd(-prob.A_in.row(i - me).transpose());
    };
    auto rhs = [&](Eigen::Index i) { return i < me ? prob.b_eq(i) : -prob.b_in(i - me); };

    // J = L^-T, so J' H J = I.
    MatrixXd J = llt.matrixU().solve(MatrixXd::Identity(n, n));
    MatrixXd R = MatrixXd::Zero(n, n);
    Eigen::Index q = 0;                 // active constraints
    std::vector<Eigen::Index> active;   // constraint index per active slot
    VectorXd u(n);                      // multipliers of active constraints
    VectorXd eq_sign = VectorXd::Ones(me);

    VectorXd x = -llt.solve(prob.f);
    const int max_iter = settings.max_iter > 0 ? settings.max_iter : static_cast<int>(10 * (n + me + mi) + 10);
    int iter = 0;

    auto add_constraint = [&](VectorXd& d) -> bool {
        // Rotate so that d(q+1..n-1) = 0, then R(:, q) = d(0..q).
        for (Eigen::Index j = n - 1; j > q; --j) {
            double c, s, r;
            detail::givens(d(j - 1), d(j), c, s, r);
            if (s == 0.0) continue;
            d(j - 1) = r;
            d(j) = 0.0;
            for (Eigen::Index k = 0; k < n; ++k) {
                const double a = J(k, j - 1), b = J(k, j);
                J(k, j - 1) = c * a + s * b;
                J(k, j) = -s * a + c * b;
            }
        }
        if (std::abs(d(q)) <= std::numeric_limits<double>::epsilon() * (1.0 + d.norm())) return false;
        R.col(q).head(q + 1) = d.head(q + 1);
        ++q;
        return true;
    };

    auto drop_constraint = [&](Eigen::Index slot) {
        for (Eigen::Index j = slot; j + 1 < q; ++j) {
            R.col(j).head(q) = R.col(j + 1).head(q);
            active[j] = active[j + 1];
            u(j) = u(j + 1);
        }
        R.col(q - 1).setZero();
        active.pop_back();
        --q;
        // R is now upper Hessenberg in columns slot..q-1; restore triangularity.
        for (Eigen::Index j = slot; j < q; ++j) {
            double c, s, r;
            detail::givens(R(j, j), R(j + 1, j), c, s, r);
            if (s == 0.0) continue;
            for (Eigen::Index k = j; k < q; ++k) {
                const double a = R(j, k), b = R(j + 1, k);
                R(j, k) = c * a + s * b;
                R(j + 1, k) = -s * a + c * b;
            }
            R(j + 1, j) = 0.0;
            for (Eigen::Index k = 0; k < n; ++k) {
                const double a = J(k, j), b = J(k, j + 1);
                J(k, j) = c * a + s * b;
                J(k, j + 1) = -s * a + c * b;
            }
        }
    };

    auto finish = [&](QpStatus status) {
        res.x = x;
        res.status = status;
        res.iterations = iter;
        for (Eigen::Index k = 0; k < q; ++k) {
            const Eigen::Index i = active[k];
            if (i < me)
                res.lambda_eq(i) = -eq_sign(i) * u(k);
            else
                res.lambda_in(i - me) = u(k);
        }
        res.objective = 0.5 * x.dot(prob.H * x) + prob.f.dot(x);
        return res;
    };

    // Adds constraint p, oriented as n_p' x >= b_p and currently violated,
    // dropping active inequalities when their multipliers would turn
    // negative. Returns 0 on success, 1 if infeasible, 2 on iteration limit.
    auto enforce = [&](Eigen::Index p, const VectorXd& np, double bp) -> int {
        double u_p = 0.0;
        for (;;) {
            if (++iter > max_iter) return 2;
            VectorXd d = J.transpose() * np;
            const VectorXd z = J.rightCols(n - q) * d.tail(n - q);
            VectorXd r = VectorXd::Zero(q);
            if (q > 0)
                r = R.topLeftCorner(q, q).triangularView<Eigen::Upper>().solve(d.head(q));
            const double s_p = np.dot(x) - bp;

            // Partial step: largest step keeping inequality multipliers >= 0.
            double t1 = std::numeric_limits<double>::infinity();
            Eigen::Index drop = -1;
            for (Eigen::Index k = 0; k < q; ++k) {
                if (active[k] < me) continue;
                if (r(k) > 0.0 && u(k) / r(k) < t1) {
                    t1 = u(k) / r(k);
                    drop = k;
                }
            }
            // Full step: reaches the constraint.
            const double zn = z.dot(np);
            double t2 = std::numeric_limits<double>::infinity();
            if (zn > std::numeric_limits<double>::epsilon() * 1e2 * np.squaredNorm())
                t2 = std::max(-s_p / zn, 0.0);

            if (!std::isfinite(t1) && !std::isfinite(t2)) return 1;
            if (!std::isfinite(t2)) {
                if (q > 0) u.head(q) -= t1 * r;
                u_p += t1;
                drop_constraint(drop);
                continue;
            }
            const double t = std::min(t1, t2);
            x += t * z;
            if (q > 0) u.head(q) -= t * r;
            u_p += t;
            if (t == t2) {
                if (!add_constraint(d)) return 1;
                active.push_back(p);
                u(q - 1) = u_p;
                return 0;
            }
            drop_constraint(drop);
        }
    };

    // Equalities first, each oriented so that it is violated as a >= row.
    for (Eigen::Index i = 0; i < me; ++i) {
        VectorXd np = normal(i);
        double bp = rhs(i);
        if (np.dot(x) - bp > 0.0) {
            np = -np;
            bp = -bp;
            eq_sign(i) = -1.0;
        }
        const int code = enforce(i, np, bp);
        if (code == 1) return finish(QpStatus::infeasible);
        if (code == 2) return finish(QpStatus::max_iter);
    }

    std::vector<char> is_active(static_cast<size_t>(mi), 0);
    for (;;) {
        std::fill(is_active.begin(), is_active.end(), 0);
        for (Eigen::Index k = 0; k < q; ++k)
            if (active[k] >= me) is_active[static_cast<size_t>(active[k] - me)] = 1;
        // Most violated inequality (scaled by its row norm).
        Eigen::Index p = -1;
        double worst = 0.0;
        for (Eigen::Index i = 0; i < mi; ++i) {
            if (is_active[static_cast<size_t>(i)]) continue;
            const double row_norm = prob.A_in.row(i).norm();
            const double viol = prob.A_in.row(i).dot(x) - prob.b_in(i);
            const double tol = settings.feas_tol * (1.0 + std::abs(prob.b_in(i)) + row_norm * x.norm());
            if (viol > tol) {
                const double scaled = viol / std::max(row_norm, 1e-300);
                if (scaled > worst) {
                    worst = scaled;
                    p = i;
                }
            }
        }
        if (p < 0) return finish(QpStatus::optimal);
        const int code = enforce(me + p, normal(me + p), rhs(me + p));
        if (code == 1) return finish(QpStatus::infeasible);
        if (code == 2) return finish(QpStatus::max_iter);
    }
}

}  // namespace biped

#endif  // BIPED_QP_HPP
