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

#include <random>

#include <gtest/gtest.h>

#include "biped/qp.hpp"

namespace biped {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Worst violation of the optimality conditions of a convex QP, scaled by
// the problem size. A point with zero residual is the global minimizer.
double kkt_residual(const QpProblem& p, const QpResult& r) {
    const double scale = 1.0 + p.H.norm() + p.f.norm();
    VectorXd grad = p.H * r.x + p.f;
    if (p.A_eq.rows()) grad += p.A_eq.transpose() * r.lambda_eq;
    if (p.A_in.rows()) grad += p.A_in.transpose() * r.lambda_in;
    double worst = grad.cwiseAbs().maxCoeff() / scale;
    if (p.A_eq.rows()) worst = std::max(worst, (p.A_eq * r.x - p.b_eq).cwiseAbs().maxCoeff() / scale);
    for (Eigen::Index i = 0; i < p.A_in.rows(); ++i) {
        const double slack = p.b_in(i) - p.A_in.row(i).dot(r.x);
        worst = std::max(worst, std::max(-slack, 0.0) / scale);
        worst = std::max(worst, std::max(-r.lambda_in(i), 0.0) / scale);
        worst = std::max(worst, std::abs(slack * r.lambda_in(i)) / (scale * scale));
    }
    return worst;
}

QpProblem random_problem(std::mt19937_64& rng, int n, int me, int mi) {
    std::normal_distribution<double> g;
    auto rnd = [&](int r, int c) {
        MatrixXd m(r, c);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) m(i, j) = g(rng);
        return m;
    };
    QpProblem p;
    const MatrixXd R = rnd(n, n);
    p.H = R * R.transpose() + 0.1 * MatrixXd::Identity(n, n);
    p.f = rnd(n, 1);
    // Constraints built around a known feasible point.
    const VectorXd x0 = rnd(n, 1);
    p.A_eq = rnd(me, n);
    p.b_eq = p.A_eq * x0;
    p.A_in = rnd(mi, n);
    p.b_in = p.A_in * x0 + rnd(mi, 1).cwiseAbs();
    return p;
}

TEST(SolveQp, UnconstrainedMinimizer) {
    QpProblem p;
    p.H = (MatrixXd(2, 2) << 2, 0.5, 0.5, 1).finished();
    p.f = VectorXd::Ones(2);
    p.A_eq.resize(0, 2);
    p.b_eq.resize(0);
    p.A_in.resize(0, 2);
    p.b_in.resize(0);
    const QpResult r = solve_qp(p);
    ASSERT_EQ(r.status, QpStatus::optimal);
    EXPECT_LT((r.x + p.H.ldlt().solve(p.f)).norm(), 1e-12);
}

TEST(SolveQp, BoxActiveBound) {
    // min (x - 2)^2 s.t. x <= 1.
    QpProblem p;
    p.H = MatrixXd::Constant(1, 1, 2.0);
    p.f = VectorXd::Constant(1, -4.0);
    p.A_eq.resize(0, 1);
    p.b_eq.resize(0);
    p.A_in = MatrixXd::Ones(1, 1);
    p.b_in = VectorXd::Ones(1);
    const QpResult r = solve_qp(p);
    ASSERT_EQ(r.status, QpStatus::optimal);
    EXPECT_NEAR(r.x(0), 1.0, 1e-14);
    EXPECT_NEAR(r.lambda_in(0), 2.0, 1e-12);
    EXPECT_NEAR(r.objective, -3.0, 1e-12);
}

TEST(SolveQp, KktOnRandomInstances) {
    std::mt19937_64 rng(61);
    std::uniform_int_distribution<int> dn(1, 12);
    double worst = 0;
    for (int k = 0; k < 1000; ++k) {
        const int n = dn(rng);
        const int me = std::uniform_int_distribution<int>(0, n - 1)(rng);
        const int mi = std::uniform_int_distribution<int>(0, 3 * n)(rng);
        const QpProblem p = random_problem(rng, n, me, mi);
        const QpResult r = solve_qp(p);
        ASSERT_EQ(r.status, QpStatus::optimal) << "instance " << k;
        worst = std::max(worst, kkt_residual(p, r));
    }
    EXPECT_LT(worst, 1e-8);
}

TEST(SolveQp, ObjectiveReported) {
    std::mt19937_64 rng(62);
    const QpProblem p = random_problem(rng, 5, 1, 6);
    const QpResult r = solve_qp(p);
    EXPECT_NEAR(r.objective, 0.5 * r.x.dot(p.H * r.x) + p.f.dot(r.x), 1e-10);
}

TEST(SolveQp, DetectsInfeasibleInequalities) {
    // x <= -1 and -x <= -1.
    QpProblem p;
    p.H = MatrixXd::Identity(1, 1);
    p.f = VectorXd::Zero(1);
    p.A_eq.resize(0, 1);
    p.b_eq.resize(0);
    p.A_in = (MatrixXd(2, 1) << 1, -1).finished();
    p.b_in = (VectorXd(2) << -1, -1).finished();
    EXPECT_EQ(solve_qp(p).status, QpStatus::infeasible);
}

TEST(SolveQp, DetectsInconsistentEqualities) {
    QpProblem p;
    p.H = MatrixXd::Identity(2, 2);
    p.f = VectorXd::Zero(2);
    p.A_eq = (MatrixXd(2, 2) << 1, 1, 2, 2).finished();
    p.b_eq = (VectorXd(2) << 1, 3).finished();
    p.A_in.resize(0, 2);
    p.b_in.resize(0);
    EXPECT_EQ(solve_qp(p).status, QpStatus::infeasible);
}

TEST(SolveQp, EqualityProjection) {
    // Nearest point to the origin on x + y = 2.
    QpProblem p;
    p.H = MatrixXd::Identity(2, 2);
    p.f = VectorXd::Zero(2);
    p.A_eq = MatrixXd::Ones(1, 2);
    p.b_eq = VectorXd::Constant(1, 2.0);
    p.A_in.resize(0, 2);
    p.b_in.resize(0);
    const QpResult r = solve_qp(p);
    ASSERT_EQ(r.status, QpStatus::optimal);
    EXPECT_NEAR(r.x(0), 1.0, 1e-14);
    EXPECT_NEAR(r.x(1), 1.0, 1e-14);
}

TEST(SolveQp, RejectsIndefiniteHessian) {
    QpProblem p;
    p.H = (MatrixXd(2, 2) << 1, 0, 0, -1).finished();
    p.f = VectorXd::Zero(2);
    p.A_eq.resize(0, 2);
    p.b_eq.resize(0);
    p.A_in.resize(0, 2);
    p.b_in.resize(0);
    EXPECT_THROW(solve_qp(p), InvalidArgument);
}

}  // namespace
}  // namespace biped
