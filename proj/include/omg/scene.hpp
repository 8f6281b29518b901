#pragma once

/// @file scene.hpp
/// @brief Scene container and the deterministic synthetic-scene generator
/// used as ground truth in the recovery experiments.

#include <cstdint>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "omg/compositing.hpp"
#include "omg/crossnet.hpp"
#include "omg/errors.hpp"
#include "omg/geometry.hpp"
#include "omg/shading.hpp"

namespace omg {

struct Scene {
    std::vector<GaussianPrimitive> gaussians;
    LightRig rig;
    Rgb background;
    OpacityActivation activation = OpacityActivation::sigmoid;
    std::optional<CrossSectionNetwork> network;
};

/// Knobs of the generator. Everything is derived deterministically from
/// `seed`.
struct SceneSpec {
    int count = 64;
    double extent = 1.0;  // scene radius, world units
    double albedo_min = 0.10, albedo_max = 0.90;
    double roughness_min = 0.30, roughness_max = 0.90;
    double metallic_min = 0.00, metallic_max = 0.30;
    double raw_opacity_min = -1.0, raw_opacity_max = 2.5;
    int camera_count = 16;
    double ring_radius = 3.0;        // world units
    double ring_elevation_deg = 20.0;
    int image_width = 64, image_height = 64;
    int light_count = 3;
    int network_hidden = 128;
    Rgb background{0, 0, 0};
    std::uint64_t seed = 1;
};

inline void validate_scene_spec(const SceneSpec& spec) {
    if (spec.count < 1) throw invalid_input("scene spec: count must be >= 1");
    if (!(spec.extent > 0.0)) throw invalid_input("scene spec: extent must be positive");
    if (spec.camera_count < 1) throw invalid_input("scene spec: camera count must be >= 1");
    if (spec.image_width < 1 || spec.image_height < 1) throw invalid_input("scene spec: image size must be positive");
    if (!(spec.ring_radius > spec.extent)) throw invalid_input("scene spec: ring radius must exceed extent");
    if (spec.network_hidden < 1) throw invalid_input("scene spec: network hidden size must be >= 1");
}

/// Camera at `position` looking at `target`, z-up world.
inline Camera look_at_camera(const Vec3& position, const Vec3& target, double focal, int width, int height,
                             double near_plane, double far_plane) {
    const Vec3 fwd = normalized(target - position);
    const Vec3 up{0, 0, 1};
    Vec3 right = cross(up, fwd);
    const double rn = norm(right);
    if (rn < 1e-9) right = Vec3{1, 0, 0};  // looking straight up/down
    else
        right = right * (1.0 / rn);
    const Vec3 down = cross(fwd, right);
    Camera cam;
    cam.position = position;
    cam.orientation.m[0][0] = right.x;
    cam.orientation.m[0][1] = right.y;
    cam.orientation.m[0][2] = right.z;
    cam.orientation.m[1][0] = down.x;
    cam.orientation.m[1][1] = down.y;
    cam.orientation.m[1][2] = down.z;
    cam.orientation.m[2][0] = fwd.x;
    cam.orientation.m[2][1] = fwd.y;
    cam.orientation.m[2][2] = fwd.z;
    cam.fx = cam.fy = focal;
    cam.cx = width / 2.0;
    cam.cy = height / 2.0;
    cam.width = width;
    cam.height = height;
    cam.near_plane = near_plane;
    cam.far_plane = far_plane;
    return cam;
}

/// Deterministic blob of Gaussians on a jittered sphere shell with outward
/// normals, a small directional light rig, and a fresh cross-section
/// network; cameras on a ring looking at the origin.
inline std::pair<Scene, std::vector<Camera>> generate_synthetic_scene(const SceneSpec& spec) {
    validate_scene_spec(spec);
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto uniform_in = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

    Scene scene;
    scene.background = spec.background;
    scene.gaussians.reserve(static_cast<std::size_t>(spec.count));
    for (int i = 0; i < spec.count; ++i) {
        GaussianPrimitive g;
        Vec3 dir{gauss(rng), gauss(rng), gauss(rng)};
        if (norm(dir) < 1e-12) dir = {0, 0, 1};
        dir = normalized(dir);
        const double radius = spec.extent * (0.35 + 0.25 * unit(rng));
        g.mean = dir * radius;
        g.normal = dir;
        Quat q{gauss(rng), gauss(rng), gauss(rng), gauss(rng)};
        if (q.norm() < 1e-12) q = Quat{};
        const double qn = q.norm();
        g.rotation = {q.w / qn, q.x / qn, q.y / qn, q.z / qn};
        g.scale = {spec.extent * uniform_in(0.06, 0.16), spec.extent * uniform_in(0.06, 0.16),
                   spec.extent * uniform_in(0.06, 0.16)};
        g.raw_opacity = uniform_in(spec.raw_opacity_min, spec.raw_opacity_max);
        g.material.albedo = {uniform_in(spec.albedo_min, spec.albedo_max),
                             uniform_in(spec.albedo_min, spec.albedo_max),
                             uniform_in(spec.albedo_min, spec.albedo_max)};
        g.material.roughness = uniform_in(spec.roughness_min, spec.roughness_max);
        g.material.metallic = uniform_in(spec.metallic_min, spec.metallic_max);
        scene.gaussians.push_back(g);
    }

    scene.rig.ambient = {0.10, 0.10, 0.10};
    for (int k = 0; k < spec.light_count; ++k) {
        DirectionalLight light;
        const double az = 2.0 * kPi * (static_cast<double>(k) + 0.3) / std::max(1, spec.light_count);
        const double el = (25.0 + 18.0 * static_cast<double>(k % 3)) * kPi / 180.0;
        light.direction = normalized({std::cos(az) * std::cos(el), std::sin(az) * std::cos(el), std::sin(el)});
        light.intensity = {uniform_in(1.2, 2.2), uniform_in(1.2, 2.2), uniform_in(1.2, 2.2)};
        scene.rig.lights.push_back(light);
    }

    scene.network = init_network(spec.seed ^ 0x9e3779b97f4a7c15ull, 5, spec.network_hidden);

    std::vector<Camera> cameras;
    cameras.reserve(static_cast<std::size_t>(spec.camera_count));
    const double el = spec.ring_elevation_deg * kPi / 180.0;
    const double half_fov = std::atan2(0.8 * spec.extent, spec.ring_radius);
    const double focal = 0.5 * static_cast<double>(spec.image_width) / std::tan(half_fov);
    for (int k = 0; k < spec.camera_count; ++k) {
        const double az = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(spec.camera_count);
        const Vec3 pos{spec.ring_radius * std::cos(az) * std::cos(el), spec.ring_radius * std::sin(az) * std::cos(el),
                       spec.ring_radius * std::sin(el)};
        cameras.push_back(look_at_camera(pos, {0, 0, 0}, focal, spec.image_width, spec.image_height,
                                         0.05 * spec.ring_radius, 10.0 * spec.ring_radius));
    }
    return {std::move(scene), std::move(cameras)};
}

} // namespace omg
