#pragma once

/// @file geometry.hpp
/// @brief Gaussian primitives, covariance factorization and the camera
/// projection that turns a 3D Gaussian into a 2D screen-space fragment.

#include <cmath>
#include <optional>

#include "omg/errors.hpp"
#include "omg/math.hpp"

namespace omg {

/// Per-Gaussian surface material. Components live in [0,1]; the fitting
/// loop re-clamps after every optimizer step.
struct Material {
    Rgb albedo{0.5, 0.5, 0.5};
    double roughness = 0.5;
    double metallic = 0.0;
};

/// One scene particle. Covariance is factorized as R(q) * diag(s^2) * R(q)^T.
struct GaussianPrimitive {
    Vec3 mean;
    Quat rotation;        // unit, scalar-first (w,x,y,z)
    Vec3 scale{1, 1, 1};  // strictly positive, scene units
    double raw_opacity = 0.0;  // pre-activation
    Material material;
    Vec3 normal{0, 0, 1};  // unit
};

/// Pinhole camera. `orientation` rows are the camera axes in world
/// coordinates, so p_cam = orientation * (p_world - position); the camera
/// looks along its +z axis.
struct Camera {
    Vec3 position;
    Mat3 orientation;
    double fx = 1.0, fy = 1.0;  // pixels
    double cx = 0.0, cy = 0.0;  // pixels
    int width = 1, height = 1;
    double near_plane = 0.01, far_plane = 100.0;
};

/// Checks the Camera type invariants; throws invalid_input on violation.
inline void validate_camera(const Camera& cam) {
    if (cam.width <= 0 || cam.height <= 0) throw invalid_input("camera: nonpositive image size");
    if (cam.fx <= 0.0 || cam.fy <= 0.0) throw invalid_input("camera: nonpositive focal length");
    if (!(cam.near_plane > 0.0 && cam.near_plane < cam.far_plane))
        throw invalid_input("camera: requires 0 < near < far");
    const Mat3& r = cam.orientation;
    const Mat3 rrt = r * r.transposed();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const double want = i == j ? 1.0 : 0.0;
            if (std::abs(rrt.m[i][j] - want) > 1e-9)
                throw invalid_input("camera: orientation is not orthonormal");
        }
    if (std::abs(r.det() - 1.0) > 1e-9) throw invalid_input("camera: orientation determinant != +1");
}

/// Rotation matrix of a quaternion; q is normalized internally.
/// Throws invalid_input for the zero quaternion.
inline Mat3 rotation_from_quaternion(const Quat& q) {
    const double n = q.norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw invalid_input("rotation_from_quaternion: zero-norm quaternion");
    const double w = q.w / n, x = q.x / n, y = q.y / n, z = q.z / n;
    Mat3 r;
    r.m[0][0] = 1.0 - 2.0 * (y * y + z * z);
    r.m[0][1] = 2.0 * (x * y - w * z);
    r.m[0][2] = 2.0 * (x * z + w * y);
    r.m[1][0] = 2.0 * (x * y + w * z);
    r.m[1][1] = 1.0 - 2.0 * (x * x + z * z);
    r.m[1][2] = 2.0 * (y * z - w * x);
    r.m[2][0] = 2.0 * (x * z - w * y);
    r.m[2][1] = 2.0 * (y * z + w * x);
    r.m[2][2] = 1.0 - 2.0 * (x * x + y * y);
    return r;
}

/// Sigma = R * diag(s^2) * R^T. Symmetric positive definite for s > 0.
inline Mat3 build_covariance(const Quat& q, const Vec3& s) {
    if (!(s.x > 0.0 && s.y > 0.0 && s.z > 0.0))
        throw invalid_input("build_covariance: scale components must be strictly positive");
    const Mat3 r = rotation_from_quaternion(q);
    const Mat3 d = Mat3::diagonal(s.x * s.x, s.y * s.y, s.z * s.z);
    Mat3 cov = r * d * r.transposed();
    // enforce exact symmetry against rounding
    cov.m[1][0] = cov.m[0][1];
    cov.m[2][0] = cov.m[0][2];
    cov.m[2][1] = cov.m[1][2];
    return cov;
}

/// Low-pass floor added to the projected covariance before inversion,
/// in pixels^2. Keeps sub-pixel splats band-limited and the inverse
/// well conditioned.
inline constexpr double kCovarianceFloor = 0.3;

/// A camera-projected Gaussian. Geometry fields are filled by
/// project_gaussian; color, cross section and opacity are filled by the
/// renderer once shading and the cross-section network have run.
struct SplatFragment {
    int gaussian_index = -1;
    Vec2 mean2d;       // pixels
    Mat2 cov2d;        // pixels^2, floor included
    Mat2 inv_cov2d;    // pixels^-2, symmetric positive definite
    double depth = 0.0;  // camera-space z, scene units
    Rgb color;         // shaded outgoing radiance
    double sigma = 1.0;  // material cross section f(m)
    double opacity = 0.0;  // activated opacity o
};

/// EWA-style projection: pinhole-projects the mean and propagates the 3D
/// covariance through the first-order Jacobian of the projection at the
/// mean. Returns nullopt when the Gaussian is culled (depth <= near, or
/// its 3-sigma screen footprint misses the image).
inline std::optional<SplatFragment> project_gaussian(const Camera& cam, const GaussianPrimitive& g) {
    validate_camera(cam);
    const Vec3 p = cam.orientation.mul(g.mean - cam.position);
    if (p.z <= cam.near_plane) return std::nullopt;

    const Mat3 cov3d = build_covariance(g.rotation, g.scale);
    const double inv_z = 1.0 / p.z;
    const double inv_z2 = inv_z * inv_z;
    // J is the 2x3 Jacobian of (fx*x/z + cx, fy*y/z + cy) at p.
    const double j00 = cam.fx * inv_z, j02 = -cam.fx * p.x * inv_z2;
    const double j11 = cam.fy * inv_z, j12 = -cam.fy * p.y * inv_z2;

    // M = J * W (2x3), W the world-to-camera rotation.
    const Mat3& w = cam.orientation;
    double mrow[2][3];
    for (int c = 0; c < 3; ++c) {
        mrow[0][c] = j00 * w.m[0][c] + j02 * w.m[2][c];
        mrow[1][c] = j11 * w.m[1][c] + j12 * w.m[2][c];
    }
    // cov2d = M * cov3d * M^T + floor
    double tmp[2][3];
    for (int i = 0; i < 2; ++i)
        for (int c = 0; c < 3; ++c)
            tmp[i][c] = mrow[i][0] * cov3d.m[0][c] + mrow[i][1] * cov3d.m[1][c] + mrow[i][2] * cov3d.m[2][c];
    Mat2 cov2d;
    cov2d.m00 = tmp[0][0] * mrow[0][0] + tmp[0][1] * mrow[0][1] + tmp[0][2] * mrow[0][2] + kCovarianceFloor;
    cov2d.m11 = tmp[1][0] * mrow[1][0] + tmp[1][1] * mrow[1][1] + tmp[1][2] * mrow[1][2] + kCovarianceFloor;
    cov2d.m01 = tmp[0][0] * mrow[1][0] + tmp[0][1] * mrow[1][1] + tmp[0][2] * mrow[1][2];
    cov2d.m10 = cov2d.m01;

    const double det = cov2d.det();
    if (!(det > 0.0) || !std::isfinite(det))
        throw numeric_error("project_gaussian: projected covariance is not invertible");

    SplatFragment frag;
    frag.gaussian_index = -1;
    frag.mean2d = {cam.fx * p.x * inv_z + cam.cx, cam.fy * p.y * inv_z + cam.cy};
    frag.cov2d = cov2d;
    frag.inv_cov2d = cov2d.inverse();
    frag.depth = p.z;

    const double radius = 3.0 * std::sqrt(cov2d.sym_eigenvalues()[0]);
    if (frag.mean2d.x + radius < 0.0 || frag.mean2d.x - radius > static_cast<double>(cam.width) ||
        frag.mean2d.y + radius < 0.0 || frag.mean2d.y - radius > static_cast<double>(cam.height))
        return std::nullopt;

    return frag;
}

/// Unnormalized Gaussian falloff G(x) = exp(-1/2 d^T Sigma'^-1 d) at a
/// pixel center x. Equals 1 exactly at the projected mean.
inline double gaussian_weight(const SplatFragment& frag, const Vec2& x) {
    const Vec2 d = x - frag.mean2d;
    const double q = dot(d, frag.inv_cov2d.mul(d));
    return std::exp(-0.5 * q);
}

} // namespace omg
