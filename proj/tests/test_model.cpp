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

TEST(SsDynamics, SymmetricAtRest) {
    const SsDynamics d = ss_dynamics(Vec3::Zero(), Vec3::Zero(), kP);
    EXPECT_EQ(d.D, d.D.transpose());
}

TEST(SsDynamics, MassMatrixIsEnergyHessian) {
    std::mt19937_64 rng(11);
    for (int k = 0; k < 50; ++k) {
        const Vec3 q = oracle::random_vec<3>(rng, 1.0);
        const Eigen::MatrixXd Dfd = oracle::fd_mass_matrix(q, kP, ModelKind::pinned);
        const SsDynamics d = ss_dynamics(q, Vec3::Zero(), kP);
        EXPECT_LT((Dfd - d.D).cwiseAbs().maxCoeff(), 1e-6);
    }
}

TEST(SsDynamics, GravityIsPotentialGradient) {
    std::mt19937_64 rng(12);
    for (int k = 0; k < 50; ++k) {
        const Vec3 q = oracle::random_vec<3>(rng, 1.0);
        const SsDynamics d = ss_dynamics(q, Vec3::Zero(), kP);
        EXPECT_LT((oracle::fd_gravity(q, kP, ModelKind::pinned) - d.H).cwiseAbs().maxCoeff(), 1e-6);
    }
}

TEST(SsDynamics, InertiaIndependentOfStanceAngle) {
    std::mt19937_64 rng(13);
    for (int k = 0; k < 100; ++k) {
        Vec3 q = oracle::random_vec<3>(rng, 1.0);
        const double h = 1e-5;
        Vec3 a = q, b = q;
        a(0) += h;
        b(0) -= h;
        const Mat3 dD = (ss_dynamics(a, Vec3::Zero(), kP).D - ss_dynamics(b, Vec3::Zero(), kP).D) / (2 * h);
        EXPECT_LT(dD.norm(), 1e-8);
    }
}

TEST(ExtDynamics, PositiveDefiniteEverywhere) {
    std::mt19937_64 rng(14);
    for (int k = 0; k < 10000; ++k) {
        const Vec5 q = oracle::random_q(rng, kP, 3.0);
        const Mat5 D = ext_dynamics(q, Vec5::Zero(), kP).D;
        ASSERT_LT((D - D.transpose()).cwiseAbs().maxCoeff(), 1e-10);
        ASSERT_GT(Eigen::SelfAdjointEigenSolver<Mat5>(D).eigenvalues().minCoeff(), 0.0);
    }
}

TEST(ExtDynamics, MassMatrixIsEnergyHessian) {
    std::mt19937_64 rng(15);
    for (int k = 0; k < 50; ++k) {
        const Vec5 q = oracle::random_q(rng, kP);
        const Eigen::MatrixXd Dfd = oracle::fd_mass_matrix(q, kP, ModelKind::extended);
        EXPECT_LT((Dfd - ext_dynamics(q, Vec5::Zero(), kP).D).cwiseAbs().maxCoeff(), 1e-6);
    }
}

TEST(ExtDynamics, RestHasOnlyGravity) {
    std::mt19937_64 rng(16);
    const Vec5 q = oracle::random_q(rng, kP);
    const ExtDynamics e = ext_dynamics(q, Vec5::Zero(), kP);
    EXPECT_EQ(energies(q, Vec5::Zero(), kP, ModelKind::extended).K, 0.0);
    EXPECT_LT((e.H - oracle::fd_gravity(q, kP, ModelKind::extended)).cwiseAbs().maxCoeff(), 1e-6);
    // The hip coordinates carry the total weight.
    EXPECT_NEAR(e.H(4), kP.total_mass() * kP.g, 1e-12);
    EXPECT_NEAR(e.H(3), 0.0, 1e-12);
}

TEST(ExtDynamics, PowerBalance) {
    // dK/dt = dq'(B u - G) along the unconstrained flow.
    std::mt19937_64 rng(17);
    for (int k = 0; k < 20; ++k) {
        const Vec5 q = oracle::random_q(rng, kP);
        const Vec5 dq = oracle::random_vec<5>(rng, 2.0);
        const Vec2 u = oracle::random_vec<2>(rng, 1.0);
        const ExtDynamics e = ext_dynamics(q, dq, kP);
        const Vec5 ddq = e.D.ldlt().solve(e.B * u - e.H);
        const double h = 1e-5;
        auto K = [&](double t) {
            const Vec5 qq = q + t * dq + 0.5 * t * t * ddq, vv = dq + t * ddq;
            return energies(qq, vv, kP, ModelKind::extended).K;
        };
        const double dK = (K(h) - K(-h)) / (2 * h);
        const Vec5 G = oracle::fd_gravity(q, kP, ModelKind::extended);
        EXPECT_NEAR(dK, dq.dot(e.B * u - G), 1e-6);
    }
}

TEST(DsDynamics, ThrustOffMatchesExtended) {
    std::mt19937_64 rng(18);
    const Vec5 q = oracle::random_q(rng, kP), dq = oracle::random_vec<5>(rng);
    const DsDynamics d = ds_dynamics(q, dq, kP);
    const ExtDynamics e = ext_dynamics(q, dq, kP);
    EXPECT_EQ(d.D, e.D);
    EXPECT_EQ(d.H, e.H);
    EXPECT_EQ((Eigen::Matrix<double, 5, 2>(d.B.leftCols<2>())), e.B);
}

TEST(DsDynamics, VerticalTorsoThrustIsPureVerticalForce) {
    // Torso upright: q1 - q2 + q3 = 0. A unit thrust pushes the hip down and
    // makes no moment about the torso mass.
    Vec5 q;
    q << 0.2, 0.5, 0.3, 0.1, 0.6;
    const DsDynamics d = ds_dynamics(q, Vec5::Zero(), kP);
    EXPECT_NEAR(d.B(3, 2), 0.0, 1e-12);
    EXPECT_NEAR(d.B(4, 2), -1.0, 1e-12);
    EXPECT_NEAR(d.B(0, 2), 0.0, 1e-12);
    EXPECT_NEAR(d.B(1, 2), 0.0, 1e-12);
    EXPECT_NEAR(d.B(2, 2), 0.0, 1e-12);
}

TEST(DsDynamics, ThrustDirectionRotatesWithBody) {
    std::mt19937_64 rng(19);
    for (int k = 0; k < 20; ++k) {
        Vec5 q = oracle::random_q(rng, kP);
        const double delta = std::uniform_real_distribution<double>(-1, 1)(rng);
        Vec5 r = q;
        r(0) += delta;  // rotating the whole body rotates the absolute torso angle
        const Vec2 a = thrust_direction(q.head<3>()), b = thrust_direction(r.head<3>());
        const Eigen::Rotation2Dd R(delta);
        EXPECT_LT((R * a - b).norm(), 1e-9);
        // Direct geometry: from the torso mass back to the hip.
        const double phi = r(0) - r(1) + r(2);
        const Vec2 torso = Vec2(-std::sin(phi), std::cos(phi));
        EXPECT_LT((b + torso).norm(), 1e-12);
    }
}

TEST(ContactKinematics, CoincidentLegs) {
    Vec5 q;
    q << 0.3, 0.0, 0.1, 0.2, 0.5;
    const ContactKinematics c = contact_kinematics(q, Vec5::Zero(), kP);
    EXPECT_LT((c.p1 - c.p2).norm(), 1e-15);
}

TEST(ContactKinematics, JacobianMatchesFiniteDifferences) {
    std::mt19937_64 rng(20);
    for (int k = 0; k < 1000; ++k) {
        const Vec5 q = oracle::random_q(rng, kP, 3.0);
        const ContactKinematics c = contact_kinematics(q, Vec5::Zero(), kP);
        Eigen::Matrix<double, 4, 5> Jfd;
        for (int i = 0; i < 5; ++i) {
            Vec5 a = q, b = q;
            a(i) += 1e-6;
            b(i) -= 1e-6;
            const ContactKinematics ca = contact_kinematics(a, Vec5::Zero(), kP);
            const ContactKinematics cb = contact_kinematics(b, Vec5::Zero(), kP);
            Vec4 pa, pb;
            pa << ca.p1, ca.p2;
            pb << cb.p1, cb.p2;
            Jfd.col(i) = (pa - pb) / 2e-6;
        }
        ASSERT_LT((Jfd - c.J).cwiseAbs().maxCoeff(), 1e-5);
    }
}

TEST(ContactKinematics, JdotQdotAlongFlow) {
    std::mt19937_64 rng(21);
    for (int k = 0; k < 100; ++k) {
        const Vec5 q = oracle::random_q(rng, kP), dq = oracle::random_vec<5>(rng, 2.0);
        const double h = 1e-5;
        const Vec4 va = contact_kinematics(Vec5(q + h * dq), dq, kP).J * dq;
        const Vec4 vb = contact_kinematics(Vec5(q - h * dq), dq, kP).J * dq;
        EXPECT_LT(((va - vb) / (2 * h) - contact_kinematics(q, dq, kP).Jdot_qdot).cwiseAbs().maxCoeff(), 1e-4);
    }
}

TEST(Energies, AtRestNoKineticEnergy) {
    EXPECT_EQ(energies(Eigen::VectorXd(Vec3(0.1, 0.2, 0.3)), Eigen::VectorXd(Vec3::Zero()), kP, ModelKind::pinned).K,
              0.0);
}

TEST(Energies, UprightPotential) {
    // Everything stacked above the stance foot: leg masses at l/2, one leg
    // pointing down from the hip puts its mass at l/2 as well.
    const double expected = kP.g * (kP.m_h * kP.l + kP.m_k * kP.l + kP.m_T * (kP.l + kP.l_T));
    const Energies e = energies(Eigen::VectorXd(Vec3(0, 0, 0)), Eigen::VectorXd(Vec3::Zero()), kP, ModelKind::pinned);
    EXPECT_NEAR(e.V, expected, 1e-12);
}

TEST(Energies, PassivePinnedDrift) { EXPECT_LT(oracle::passive_energy_drift(kP), 1e-6); }

TEST(PinnedVectorField, GravityOnlyAtRest) {
    SsState x;
    x.q << 0.1, 0.3, -0.2;
    const SsDynamics d = ss_dynamics(x.q, x.dq, kP);
    const Vec6 dx = pinned_vector_field(x, Vec2::Zero(), kP);
    EXPECT_LT((dx.tail<3>() - Vec3(-d.D.ldlt().solve(d.H))).norm(), 1e-12);
}

TEST(PinnedVectorField, SatisfiesEquationOfMotion) {
    std::mt19937_64 rng(22);
    for (int k = 0; k < 100; ++k) {
        SsState x;
        x.q = oracle::random_vec<3>(rng, 1.0);
        x.dq = oracle::random_vec<3>(rng, 2.0);
        const Vec2 u = oracle::random_vec<2>(rng, 2.0);
        const SsDynamics d = ss_dynamics(x.q, x.dq, kP);
        const Vec6 dx = pinned_vector_field(x, u, kP);
        EXPECT_LT((d.D * dx.tail<3>() + d.H - d.B * u).norm(), 1e-10);
    }
}

TEST(PinnedVectorField, AgreesWithConstrainedExtendedModel) {
    std::mt19937_64 rng(23);
    for (int k = 0; k < 100; ++k) {
        SsState x;
        x.q = oracle::random_vec<3>(rng, 1.0);
        x.dq = oracle::random_vec<3>(rng, 2.0);
        const Vec2 u = oracle::random_vec<2>(rng, 2.0);
        const ExtState e = to_extended(x, kP);
        const ExtDynamics d = ext_dynamics(e.q, e.dq, kP);
        const ContactKinematics c = contact_kinematics(e.q, e.dq, kP);
        // Foot-1 rows only.
        Eigen::Matrix<double, 7, 7> K = Eigen::Matrix<double, 7, 7>::Zero();
        K.topLeftCorner<5, 5>() = d.D;
        K.topRightCorner<5, 2>() = -c.J.topRows<2>().transpose();
        K.bottomLeftCorner<2, 5>() = c.J.topRows<2>();
        Eigen::Matrix<double, 7, 1> rhs;
        rhs << d.B * u - d.H, -c.Jdot_qdot.head<2>();
        const Eigen::Matrix<double, 7, 1> sol = K.fullPivLu().solve(rhs);
        const Vec6 dx = pinned_vector_field(x, u, kP);
        EXPECT_LT((sol.head<3>() - dx.tail<3>()).cwiseAbs().maxCoeff(), 1e-8);
    }
}

TEST(ModelParams, RejectsNonPhysical) {
    ModelParams p;
    p.m_T = -1;
    EXPECT_THROW(p.validate(), InvalidArgument);
    EXPECT_THROW(ss_dynamics(Vec3(NAN, 0, 0), Vec3::Zero(), kP), InvalidArgument);
}

TEST(ModelParams, TableUnits) {
    const ModelParams p = ModelParams::from_grams_cm(300, 200, 100, 30, 63.25);
    EXPECT_DOUBLE_EQ(p.m_T, 0.3);
    EXPECT_DOUBLE_EQ(p.l, 0.6325);
    EXPECT_NEAR(p.total_mass() * p.g, 6.867, 1e-12);
}

}  // namespace
}  // namespace biped
