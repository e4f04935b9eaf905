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

#include <gtest/gtest.h>

#include "oracles.hpp"

namespace biped {
namespace {

const ModelParams kP;

GaitParams nominal() { return gait_from_config(oracle::default_config()); }

// Random single-support state near the gait, and a reference rate near dh_d/dt.
struct Sample {
    SsState x;
    Vec2 w;
};

Sample random_sample(std::mt19937_64& rng, const GaitParams& g) {
    Sample s;
    s.x = manifold_state(std::uniform_real_distribution<double>(0.05, 0.95)(rng), -0.8, g);
    s.x.q.tail<2>() += oracle::random_vec<2>(rng, 0.05);
    s.x.dq += oracle::random_vec<3>(rng, 0.3);
    s.w = output_data(s.x, g, kP).dh_d_dt + oracle::random_vec<2>(rng, 0.2);
    return s;
}

TEST(PdOuter, GainsPerChannel) {
    const GaitParams g = nominal();
    const Vec2 v = pd_outer(Vec2(0.1, 0.0), Vec2(0.0, -0.2), g);
    EXPECT_DOUBLE_EQ(v(0), g.kp(0) * 0.1);
    EXPECT_DOUBLE_EQ(v(1), -g.kd(1) * 0.2);
}

TEST(ConstraintData, StateRowsAreBoxSlacks) {
    const GaitParams g = nominal();
    std::mt19937_64 rng(51);
    const Sample s = random_sample(rng, g);
    const OutputData o = output_data(s.x, g, kP);
    const ConstraintData c = constraint_data(o, g, false);
    const Vec4 xa = actuated_state(s.x);
    const ConstraintVector r = c.evaluate(xa, reference_state(o.h_d, s.w, false));
    EXPECT_LT((r.head<4>() - (xa + g.x_max)).norm(), 1e-14);
    EXPECT_LT((r.segment<4>(4) - (g.x_max - xa)).norm(), 1e-14);
}

TEST(ConstraintData, TorqueRowsMatchFeedbackLaw) {
    // Rows 8..11 are u_max -+ u with u the linearizing torque for the PD
    // term referenced to w; both reference modes describe the same torque.
    const GaitParams g = nominal();
    std::mt19937_64 rng(52);
    for (bool literal : {false, true}) {
        for (int k = 0; k < 200; ++k) {
            const Sample s = random_sample(rng, g);
            const OutputData o = output_data(s.x, g, kP);
            const Vec2 v = pd_outer(o.y, Vec2(s.x.dq.tail<2>() - s.w), g);
            const Vec2 u = fbl_torque(o, v);
            const ConstraintData c = constraint_data(o, g, literal);
            const ConstraintVector r = c.evaluate(actuated_state(s.x), reference_state(o.h_d, s.w, literal));
            ASSERT_LT((r.segment<2>(8) - (g.u_max - u)).cwiseAbs().maxCoeff(), 1e-9);
            ASSERT_LT((r.tail<2>() - (g.u_max + u)).cwiseAbs().maxCoeff(), 1e-9);
        }
    }
}

TEST(LyapunovV, Quadratic) {
    const GaitParams g = nominal();
    const Mat4 P = lyapunov_weight(g);
    const Vec4 a = Vec4(0.1, -0.2, 0.3, 0.4);
    EXPECT_EQ(lyapunov_V(a, a, P), 0.0);
    EXPECT_DOUBLE_EQ(lyapunov_V(a + Vec4(1, 0, 0, 0), a, P), 0.5 * g.kp(0));
    EXPECT_DOUBLE_EQ(lyapunov_V(a + Vec4(0, 0, 0, 2), a, P), 0.5 * g.kd(1) * 4.0);
}

// One active row x_1 + L >= 0; all other rows inert.
ConstraintData single_row(const Mat4& P, double L) {
    ConstraintData c;
    c.C_x.setZero();
    c.C_w.setZero();
    c.C_limit.setConstant(1.0);
    c.C_x(0, 0) = 1.0;
    c.C_limit(0) = L;
    c.P = P;
    return c;
}

TEST(GammaBound, SingleRowClosedForm) {
    const Mat4 P = lyapunov_weight(nominal());
    const ConstraintData c = single_row(P, 0.3);
    // Nearest boundary point in the P metric: (x_1 + 0.3)^2 * P_11.
    EXPECT_NEAR(gamma_bound(Vec4::Zero(), c), 0.09 * P(0, 0), 1e-12);
    EXPECT_NEAR(gamma_bound(Vec4(-0.1, 5, 5, 5), c), 0.04 * P(0, 0), 1e-12);
}

TEST(GammaBound, ZeroOnBoundaryAndOutside) {
    const Mat4 P = lyapunov_weight(nominal());
    const ConstraintData c = single_row(P, 0.3);
    EXPECT_EQ(gamma_bound(Vec4(-0.3, 0, 0, 0), c), 0.0);
    EXPECT_EQ(gamma_bound(Vec4(-0.5, 0, 0, 0), c), 0.0);
}

TEST(GammaBound, InfiniteWithoutActiveRows) {
    ConstraintData c = single_row(Mat4::Identity(), 1.0);
    c.C_x.setZero();
    EXPECT_TRUE(std::isinf(gamma_bound(Vec4::Zero(), c)));
    c.C_limit(3) = -1.0;  // state-independent row already violated
    EXPECT_EQ(gamma_bound(Vec4::Zero(), c), 0.0);
}

TEST(GammaBound, MatchesSamplingOracle) {
    const GaitParams g = nominal();
    std::mt19937_64 rng(53);
    for (int k = 0; k < 20; ++k) {
        const Sample s = random_sample(rng, g);
        const OutputData o = output_data(s.x, g, kP);
        const ConstraintData c = constraint_data(o, g, false);
        const Vec4 xw = reference_state(o.h_d, s.w, false);
        const double G = gamma_bound(xw, c);
        const double ref = oracle::gamma_by_sampling(xw, c, rng);
        EXPECT_NEAR(G, ref, 1e-6 * std::max(1.0, ref)) << "sample " << k;
    }
}

TEST(GammaBound, SublevelSetIsAdmissible) {
    // Every state with V <= Gamma satisfies all rows (sampled on the
    // sublevel boundary, where it is tightest).
    const GaitParams g = nominal();
    std::mt19937_64 rng(54);
    for (int k = 0; k < 50; ++k) {
        const Sample s = random_sample(rng, g);
        const OutputData o = output_data(s.x, g, kP);
        const ConstraintData c = constraint_data(o, g, false);
        const Vec4 xw = reference_state(o.h_d, s.w, false);
        const double G = gamma_bound(xw, c);
        if (!(G > 0.0) || !std::isfinite(G)) continue;
        const Mat4 L = Eigen::LLT<Mat4>(c.P).matrixL();
        for (int j = 0; j < 200; ++j) {
            Vec4 d = oracle::random_vec<4>(rng);
            d.normalize();
            // x~ = L^T (x - x_w) on the sphere of radius sqrt(Gamma).
            const Vec4 xa = xw + L.transpose().triangularView<Eigen::Upper>().solve(Vec4(std::sqrt(G) * d));
            ASSERT_NEAR(lyapunov_V(xa, xw, c.P), G, 1e-9 * std::max(1.0, G));
            ASSERT_GE(c.evaluate(xa, xw).minCoeff(), -1e-9);
        }
    }
}

TEST(ErgRate, Signs) {
    const Vec2 w(0.0, 0.0);
    Vec2 r = erg_rate(w, Vec2(1.0, -1.0), 2.0, 1.0, 10.0);
    EXPECT_NEAR(r(0), 10.0, 1e-9);
    EXPECT_NEAR(r(1), -10.0, 1e-9);
    // No margin left: frozen.
    EXPECT_EQ(erg_rate(w, Vec2(1.0, -1.0), 1.0, 2.0, 10.0), Vec2::Zero());
    // Already on target: no motion.
    EXPECT_EQ(erg_rate(w, w, 2.0, 1.0, 10.0), Vec2::Zero());
    // Smoothed sign near the target.
    EXPECT_NEAR(erg_rate(w, Vec2(1e-3, 0.0), 2.0, 1.0, 10.0)(0), 10.0 * std::tanh(1.0), 1e-12);
}

TEST(PartitionedTorque, ProducesRequestedAcceleration) {
    GaitParams g = nominal();
    g.u_max = Vec2::Constant(1e6);
    std::mt19937_64 rng(55);
    for (int k = 0; k < 500; ++k) {
        const Sample s = random_sample(rng, g);
        const Vec2 dw = oracle::random_vec<2>(rng, 5.0), v = oracle::random_vec<2>(rng, 5.0);
        const PartitionedTorque t = partitioned_torque(s.x, dw, v, g, kP);
        ASSERT_FALSE(t.saturated);
        const Vec6 dx = pinned_vector_field(s.x, t.u, kP);
        ASSERT_LT((dx.tail<2>() - (dw - v)).cwiseAbs().maxCoeff(), 1e-8);
    }
}

TEST(PartitionedTorque, AgreesWithFeedbackLinearization) {
    GaitParams g = nominal();
    g.u_max = Vec2::Constant(1e6);
    std::mt19937_64 rng(56);
    for (int k = 0; k < 200; ++k) {
        const Sample s = random_sample(rng, g);
        const OutputData o = output_data(s.x, g, kP);
        const Vec2 v = pd_outer(o.y, o.dy, g);
        const Vec2 u = fbl_torque(o, v);
        // Reference acceleration that the linearizing torque realizes.
        const Vec2 dw = pinned_vector_field(s.x, u, kP).tail<2>() + v;
        ASSERT_LT((partitioned_torque(s.x, dw, v, g, kP).u - u).cwiseAbs().maxCoeff(), 1e-8);
    }
}

TEST(PartitionedTorque, HoldTorqueIsBetaTwo) {
    // dw = v: the torque holds the actuated joints unaccelerated.
    SsState x;
    x.q << 0.1, 0.3, -0.2;
    x.dq << -0.5, 0.2, 0.1;
    GaitParams g = nominal();
    g.u_max = Vec2::Constant(1e6);
    const PartitionedTorque t = partitioned_torque(x, Vec2(1, 2), Vec2(1, 2), g, kP);
    EXPECT_LT(pinned_vector_field(x, t.u, kP).tail<2>().norm(), 1e-9);
}

TEST(PartitionedTorque, Saturates) {
    GaitParams g = nominal();
    g.u_max = Vec2::Constant(0.5);
    SsState x;
    x.q << 0.1, 0.3, -0.2;
    x.dq.setZero();
    const PartitionedTorque t = partitioned_torque(x, Vec2(100, -100), Vec2::Zero(), g, kP);
    EXPECT_TRUE(t.saturated);
    EXPECT_LE(t.u.cwiseAbs().maxCoeff(), 0.5);
    EXPECT_GT(t.u_raw.cwiseAbs().maxCoeff(), 0.5);
}

TEST(ImplicitRate, SolvesTheStepEquation) {
    std::mt19937_64 rng(57);
    std::uniform_real_distribution<double> d(-2, 2), lk(-2, 6), dtd(1e-5, 1e-2);
    for (int k = 0; k < 1000; ++k) {
        const double w = d(rng), target = d(rng), kk = std::pow(10.0, lk(rng)), eps = 1e-3, dt = dtd(rng);
        const double r = implicit_rate(w, target, kk, eps, dt);
        // Residual over slope: distance to the exact root to first order.
        const double th = std::tanh((target - w - r * dt) / eps);
        const double slope = 1.0 + kk * dt / eps * (1.0 - th * th);
        ASSERT_LE(std::abs(r - kk * th) / slope, 1e-9 * std::max(1.0, std::abs(r)));
        // Never steps past the target.
        ASSERT_GE((target - w) * (target - w - r * dt), -1e-15);
    }
    EXPECT_EQ(implicit_rate(0.0, 1.0, 0.0, 1e-3, 1e-3), 0.0);
    EXPECT_EQ(implicit_rate(0.0, 1.0, INFINITY, 1e-3, 1e-3), 1.0 / 1e-3);
}

TEST(SsController, ReferenceConvergesWhenUnconstrained) {
    GaitParams g = nominal();
    g.u_max = Vec2::Constant(1e3);
    const SsState x = manifold_state(0.4, -0.8, g);
    SsController ctl(g, kP);
    const Vec2 target = output_data(x, g, kP).dh_d_dt;
    ctl.reset(x, Vec2(target + Vec2(0.05, -0.05)));
    const double dt = 1e-4;
    for (int k = 0; k < 2000; ++k) {
        const ErgSample& s = ctl.sample(x, dt);
        ASSERT_LE(s.V, s.gamma);
        ctl.advance(dt);
    }
    EXPECT_LT((ctl.w() - target).norm(), 1e-6);
}

TEST(SsController, DisabledGovernorFollowsTarget) {
    const GaitParams g = nominal();
    const SsState x = manifold_state(0.4, -0.8, g);
    ErgSettings off;
    off.enabled = false;
    SsController ctl(g, kP, off);
    ctl.reset(x, Vec2(0.0, 0.0));
    ctl.sample(x, 1e-4);
    ctl.advance(1e-4);
    EXPECT_LT((ctl.w() - output_data(x, g, kP).dh_d_dt).norm(), 1e-12);
}

}  // namespace
}  // namespace biped
