/// Unit tests for quaternion rotations, covariance factorization and the
/// camera projection.

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "omg/geometry.hpp"

namespace omg {
namespace {

Camera make_test_camera(int w = 64, int h = 64, double f = 50.0) {
    Camera cam;
    cam.position = {0, 0, 0};
    cam.orientation = Mat3::identity();
    cam.fx = cam.fy = f;
    cam.cx = w / 2.0;
    cam.cy = h / 2.0;
    cam.width = w;
    cam.height = h;
    cam.near_plane = 0.1;
    cam.far_plane = 100.0;
    return cam;
}

GaussianPrimitive make_gaussian(Vec3 mean, Quat q = {}, Vec3 scale = {1, 1, 1}) {
    GaussianPrimitive g;
    g.mean = mean;
    g.rotation = q;
    g.scale = scale;
    return g;
}

TEST(RotationFromQuaternion, IdentityQuaternion) {
    const Mat3 r = rotation_from_quaternion({1, 0, 0, 0});
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(r.m[i][j], i == j ? 1.0 : 0.0);
}

TEST(RotationFromQuaternion, NinetyDegreesAboutZ) {
    const double s = std::sqrt(0.5);
    const Mat3 r = rotation_from_quaternion({s, 0, 0, s});
    const double want[3][3] = {{0, -1, 0}, {1, 0, 0}, {0, 0, 1}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) EXPECT_NEAR(r.m[i][j], want[i][j], 1e-15);
}

TEST(RotationFromQuaternion, UnnormalizedInputGivesOrthonormalResult) {
    const Mat3 r = rotation_from_quaternion({0.7, 0.1, -0.3, 0.2});
    const Mat3 rrt = r * r.transposed();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) EXPECT_NEAR(rrt.m[i][j], i == j ? 1.0 : 0.0, 1e-12);
    EXPECT_NEAR(r.det(), 1.0, 1e-12);
}

TEST(RotationFromQuaternion, ZeroQuaternionThrows) {
    EXPECT_THROW(rotation_from_quaternion({0, 0, 0, 0}), invalid_input);
}

TEST(BuildCovariance, IdentityCases) {
    const Mat3 c1 = build_covariance({1, 0, 0, 0}, {1, 1, 1});
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(c1.m[i][j], i == j ? 1.0 : 0.0);

    const Mat3 c2 = build_covariance({1, 0, 0, 0}, {2, 1, 1});
    EXPECT_DOUBLE_EQ(c2.m[0][0], 4.0);
    EXPECT_DOUBLE_EQ(c2.m[1][1], 1.0);
    EXPECT_DOUBLE_EQ(c2.m[2][2], 1.0);
}

TEST(BuildCovariance, RotationPermutesAxes) {
    // 90 degrees about z moves the x-axis variance onto y
    const double s = std::sqrt(0.5);
    const Mat3 c = build_covariance({s, 0, 0, s}, {2, 1, 1});
    EXPECT_NEAR(c.m[0][0], 1.0, 1e-12);
    EXPECT_NEAR(c.m[1][1], 4.0, 1e-12);
    EXPECT_NEAR(c.m[2][2], 1.0, 1e-12);
    EXPECT_NEAR(c.m[0][1], 0.0, 1e-12);
}

TEST(BuildCovariance, NonpositiveScaleThrows) {
    EXPECT_THROW(build_covariance({1, 0, 0, 0}, {1, 0, 1}), invalid_input);
    EXPECT_THROW(build_covariance({1, 0, 0, 0}, {1, 1, -2}), invalid_input);
}

TEST(BuildCovariance, EigenvaluesMatchSquaredScales) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const Quat q{u(rng), u(rng), u(rng), u(rng)};
        if (q.norm() < 1e-6) continue;
        const Vec3 s{0.2 + std::abs(u(rng)), 0.2 + std::abs(u(rng)), 0.2 + std::abs(u(rng))};
        const Mat3 c = build_covariance(q, s);
        // symmetry
        EXPECT_DOUBLE_EQ(c.m[0][1], c.m[1][0]);
        EXPECT_DOUBLE_EQ(c.m[0][2], c.m[2][0]);
        EXPECT_DOUBLE_EQ(c.m[1][2], c.m[2][1]);
        // trace and determinant identify the eigenvalue multiset for a
        // symmetric matrix with known spectrum
        const double t_want = s.x * s.x + s.y * s.y + s.z * s.z;
        const double d_want = s.x * s.x * s.y * s.y * s.z * s.z;
        EXPECT_NEAR(c.m[0][0] + c.m[1][1] + c.m[2][2], t_want, 1e-9 * t_want);
        EXPECT_NEAR(c.det(), d_want, 1e-9 * std::max(1.0, d_want));
        // minimum eigenvalue >= min(s^2) - 1e-9: check via Gershgorin-free
        // route, (c - min_s2 I) must be positive semidefinite; test with
        // random probes
        const double min_s2 = std::min({s.x * s.x, s.y * s.y, s.z * s.z});
        for (int probe = 0; probe < 8; ++probe) {
            const Vec3 v{u(rng), u(rng), u(rng)};
            const double vv = dot(v, v);
            if (vv < 1e-12) continue;
            EXPECT_GE(dot(v, c.mul(v)) / vv, min_s2 - 1e-9);
        }
    }
}

TEST(ProjectGaussian, OnAxisGaussian) {
    const Camera cam = make_test_camera(64, 64, 50.0);
    const double d = 5.0;
    const auto frag = project_gaussian(cam, make_gaussian({0, 0, d}));
    ASSERT_TRUE(frag.has_value());
    EXPECT_DOUBLE_EQ(frag->mean2d.x, cam.cx);
    EXPECT_DOUBLE_EQ(frag->mean2d.y, cam.cy);
    EXPECT_DOUBLE_EQ(frag->depth, d);
    const double want = (50.0 / d) * (50.0 / d) + kCovarianceFloor;
    EXPECT_NEAR(frag->cov2d.m00, want, 1e-12);
    EXPECT_NEAR(frag->cov2d.m11, want, 1e-12);
    EXPECT_NEAR(frag->cov2d.m01, 0.0, 1e-12);
}

TEST(ProjectGaussian, DepthAtOrBehindNearIsCulled) {
    const Camera cam = make_test_camera();
    EXPECT_FALSE(project_gaussian(cam, make_gaussian({0, 0, 0.05})).has_value());
    EXPECT_FALSE(project_gaussian(cam, make_gaussian({0, 0, -3.0})).has_value());
}

TEST(ProjectGaussian, FarOffscreenIsCulled) {
    const Camera cam = make_test_camera(64, 64, 50.0);
    // a tight Gaussian projected far outside the 64x64 image
    const auto frag = project_gaussian(cam, make_gaussian({20.0, 0, 5.0}, {}, {0.1, 0.1, 0.1}));
    EXPECT_FALSE(frag.has_value());
}

/// Finite-difference Jacobian of the pinhole projection, used as the
/// oracle for the covariance propagation.
TEST(ProjectGaussian, CovarianceMatchesNumericalJacobian) {
    Camera cam = make_test_camera(64, 64, 42.0);
    // give the camera a nontrivial orientation
    const double s = std::sin(0.3), c = std::cos(0.3);
    Mat3 rot = Mat3::identity();
    rot.m[0][0] = c;
    rot.m[0][2] = s;
    rot.m[2][0] = -s;
    rot.m[2][2] = c;
    cam.orientation = rot;
    cam.position = {0.4, -0.2, -1.0};

    const GaussianPrimitive g = make_gaussian({0.8, -0.5, 4.0}, {0.9, 0.2, -0.1, 0.3}, {0.5, 0.3, 0.8});
    const auto frag = project_gaussian(cam, g);
    ASSERT_TRUE(frag.has_value());

    auto project_point = [&](const Vec3& p) {
        const Vec3 q = cam.orientation.mul(p - cam.position);
        return Vec2{cam.fx * q.x / q.z + cam.cx, cam.fy * q.y / q.z + cam.cy};
    };
    const double eps = 1e-6;
    double jac[2][3];
    for (int axis = 0; axis < 3; ++axis) {
        Vec3 dp = g.mean, dm = g.mean;
        (axis == 0 ? dp.x : axis == 1 ? dp.y : dp.z) += eps;
        (axis == 0 ? dm.x : axis == 1 ? dm.y : dm.z) -= eps;
        const Vec2 a = project_point(dp), b = project_point(dm);
        jac[0][axis] = (a.x - b.x) / (2 * eps);
        jac[1][axis] = (a.y - b.y) / (2 * eps);
    }
    const Mat3 cov3d = build_covariance(g.rotation, g.scale);
    double want[2][2] = {{0, 0}, {0, 0}};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) want[i][j] += jac[i][a] * cov3d.m[a][b] * jac[j][b];
    EXPECT_NEAR(frag->cov2d.m00, want[0][0] + kCovarianceFloor, 1e-6 * std::abs(want[0][0]) + 1e-6);
    EXPECT_NEAR(frag->cov2d.m11, want[1][1] + kCovarianceFloor, 1e-6 * std::abs(want[1][1]) + 1e-6);
    EXPECT_NEAR(frag->cov2d.m01, want[0][1], 1e-6 * std::abs(want[0][1]) + 1e-6);
}

TEST(ProjectGaussian, RollEquivariance) {
    const Camera cam = make_test_camera(64, 64, 50.0);
    const GaussianPrimitive g = make_gaussian({0.9, -0.4, 6.0}, {0.8, 0.1, 0.4, -0.2}, {0.5, 0.9, 0.4});
    const auto base = project_gaussian(cam, g);
    ASSERT_TRUE(base.has_value());

    const double phi = 0.7;
    const double cp = std::cos(phi), sp = std::sin(phi);
    Mat3 roll;
    roll.m[0][0] = cp;
    roll.m[0][1] = -sp;
    roll.m[1][0] = sp;
    roll.m[1][1] = cp;
    roll.m[2][2] = 1.0;
    Camera rolled = cam;
    rolled.orientation = roll * cam.orientation;
    const auto rot = project_gaussian(rolled, g);
    ASSERT_TRUE(rot.has_value());

    // projected mean rotates about the principal point
    const Vec2 rel{base->mean2d.x - cam.cx, base->mean2d.y - cam.cy};
    EXPECT_NEAR(rot->mean2d.x - cam.cx, cp * rel.x - sp * rel.y, 1e-9);
    EXPECT_NEAR(rot->mean2d.y - cam.cy, sp * rel.x + cp * rel.y, 1e-9);

    // covariance conjugates by the same rotation; the isotropic floor
    // commutes with it
    const Mat2 sigma = base->cov2d;
    const double r00 = cp * (cp * sigma.m00 - sp * sigma.m10) - sp * (cp * sigma.m01 - sp * sigma.m11);
    const double r01 = cp * (sp * sigma.m00 + cp * sigma.m01) - sp * (sp * sigma.m10 + cp * sigma.m11);
    const double r11 = sp * (sp * sigma.m00 + cp * sigma.m01) + cp * (sp * sigma.m10 + cp * sigma.m11);
    EXPECT_NEAR(rot->cov2d.m00, r00, 1e-9);
    EXPECT_NEAR(rot->cov2d.m01, r01, 1e-9);
    EXPECT_NEAR(rot->cov2d.m11, r11, 1e-9);
}

TEST(GaussianWeight, SpecValues) {
    SplatFragment frag;
    frag.mean2d = {10.0, 10.0};
    frag.cov2d = Mat2::identity();
    frag.inv_cov2d = Mat2::identity();
    frag.depth = 1.0;
    EXPECT_DOUBLE_EQ(gaussian_weight(frag, {10.0, 10.0}), 1.0);
    // |d|^2 = 2 with identity covariance
    EXPECT_NEAR(gaussian_weight(frag, {11.0, 11.0}), std::exp(-1.0), 1e-15);

    frag.cov2d = {4.0, 0.0, 0.0, 1.0};
    frag.inv_cov2d = frag.cov2d.inverse();
    EXPECT_NEAR(gaussian_weight(frag, {12.0, 10.0}), std::exp(-0.5), 1e-15);
}

TEST(GaussianWeight, DecreasesAlongRays) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        SplatFragment frag;
        frag.mean2d = {u(rng) * 10, u(rng) * 10};
        const double a = 1.0 + std::abs(u(rng)) * 3, b = 1.0 + std::abs(u(rng)) * 3;
        const double off = u(rng) * 0.8 * std::sqrt(a * b);
        frag.cov2d = {a, off, off, b};
        frag.inv_cov2d = frag.cov2d.inverse();
        const Vec2 dir{u(rng), u(rng)};
        if (std::abs(dir.x) + std::abs(dir.y) < 1e-6) continue;
        double prev = gaussian_weight(frag, frag.mean2d);
        EXPECT_DOUBLE_EQ(prev, 1.0);
        for (int step = 1; step <= 10; ++step) {
            const double w = gaussian_weight(frag, frag.mean2d + dir * (0.5 * step));
            EXPECT_LT(w, prev);
            prev = w;
        }
    }
}

TEST(ValidateCamera, RejectsBadCameras) {
    Camera cam = make_test_camera();
    cam.near_plane = 2.0;
    cam.far_plane = 1.0;
    EXPECT_THROW(validate_camera(cam), invalid_input);

    cam = make_test_camera();
    cam.orientation.m[0][0] = 2.0;
    EXPECT_THROW(validate_camera(cam), invalid_input);

    cam = make_test_camera();
    // orthonormal but determinant -1
    cam.orientation = Mat3::diagonal(1.0, 1.0, -1.0);
    EXPECT_THROW(validate_camera(cam), invalid_input);
}

} // namespace
} // namespace omg
