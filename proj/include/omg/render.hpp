#pragma once

/// @file render.hpp
/// @brief Full-image forward rendering: a tiled fast path and a brute-force
/// single-threaded reference that computes the blending sum directly. Both
/// blend per pixel in global depth order, so the fast path is bitwise
/// independent of the tile size.

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "omg/compositing.hpp"
#include "omg/crossnet.hpp"
#include "omg/errors.hpp"
#include "omg/geometry.hpp"
#include "omg/image.hpp"
#include "omg/parallel.hpp"
#include "omg/scene.hpp"
#include "omg/shading.hpp"

namespace omg {

enum class OutputKind { color, cross_section_map, transmittance_map, normal_map, albedo_map };

struct RenderRequest {
    const Scene* scene = nullptr;
    Camera camera;
    OpacityMode mode = OpacityMode::omg;
    LightRig rig;
    std::vector<OutputKind> outputs{OutputKind::color};
    int tile_size = 16;
    CompositeSettings settings{};
};

inline RenderRequest make_render_request(const Scene& scene, const Camera& camera, OpacityMode mode) {
    RenderRequest req;
    req.scene = &scene;
    req.camera = camera;
    req.mode = mode;
    req.rig = scene.rig;
    return req;
}

using RenderOutputs = std::map<OutputKind, ImageBuffer>;

namespace detail {

/// Inclusive pixel rectangle a fragment is evaluated over. Wide enough
/// that anything outside contributes alpha below kFootprintAlphaFloor.
struct PixelRect {
    int col0 = 0, col1 = -1, row0 = 0, row1 = -1;
    bool empty() const { return col1 < col0 || row1 < row0; }
    bool contains(int row, int col) const { return row >= row0 && row <= row1 && col >= col0 && col <= col1; }
    bool intersects(int r0, int r1, int c0, int c1) const {
        return !(r1 < row0 || r0 > row1 || c1 < col0 || c0 > col1);
    }
};

inline constexpr double kFootprintAlphaFloor = 1e-9;

inline PixelRect fragment_rect(const SplatFragment& frag, int width, int height) {
    // alpha <= opacity * G in both modes, so G below floor/opacity cannot
    // contribute more than the floor
    const double peak = std::max(frag.opacity, 1e-12);
    const double q_max = 2.0 * std::max(1.0, std::log(peak / kFootprintAlphaFloor));
    const double ex = std::sqrt(q_max * std::max(frag.cov2d.m00, 0.0));
    const double ey = std::sqrt(q_max * std::max(frag.cov2d.m11, 0.0));
    PixelRect r;
    r.col0 = std::max(0, static_cast<int>(std::ceil(frag.mean2d.x - ex - 0.5)));
    r.col1 = std::min(width - 1, static_cast<int>(std::floor(frag.mean2d.x + ex - 0.5)));
    r.row0 = std::max(0, static_cast<int>(std::ceil(frag.mean2d.y - ey - 0.5)));
    r.row1 = std::min(height - 1, static_cast<int>(std::floor(frag.mean2d.y + ey - 0.5)));
    return r;
}

/// Everything the per-pixel loops need for one (scene, camera, mode) view:
/// projected fragments sorted by (depth, gaussian index), their pixel
/// rects, and the network caches for the backward pass.
struct ViewFragments {
    std::vector<SplatFragment> fragments;
    std::vector<PixelRect> rects;
    std::vector<ForwardCache> caches;      // parallel to fragments; empty in baseline mode
    std::vector<Vec3> view_dirs;           // parallel to fragments
};

inline ViewFragments build_view(const Scene& scene, const Camera& camera, OpacityMode mode, const LightRig& rig,
                                bool need_sigma = true) {
    if (mode == OpacityMode::omg && !scene.network.has_value())
        throw invalid_state("network required for omg mode");
    const bool run_network = scene.network.has_value() && (mode == OpacityMode::omg || need_sigma);
    ViewFragments view;
    view.fragments.reserve(scene.gaussians.size());
    for (std::size_t i = 0; i < scene.gaussians.size(); ++i) {
        const GaussianPrimitive& g = scene.gaussians[i];
        std::optional<SplatFragment> frag = project_gaussian(camera, g);
        if (!frag) continue;
        frag->gaussian_index = static_cast<int>(i);
        frag->opacity = activate_opacity(g.raw_opacity, scene.activation);
        const Vec3 view_dir = normalized(camera.position - g.mean);
        frag->color = shade(g, rig, view_dir);
        if (run_network) {
            ForwardResult f = forward(*scene.network, material_features(g.material));
            frag->sigma = f.sigma;
            view.caches.push_back(std::move(f.cache));
        }
        view.view_dirs.push_back(view_dir);
        view.fragments.push_back(*frag);
    }
    // global depth order with a stable index tie-break
    std::vector<std::size_t> order(view.fragments.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (view.fragments[a].depth != view.fragments[b].depth)
            return view.fragments[a].depth < view.fragments[b].depth;
        return view.fragments[a].gaussian_index < view.fragments[b].gaussian_index;
    });
    ViewFragments sorted;
    sorted.fragments.reserve(order.size());
    sorted.view_dirs.reserve(order.size());
    for (std::size_t i : order) {
        sorted.fragments.push_back(view.fragments[i]);
        sorted.view_dirs.push_back(view.view_dirs[i]);
        if (!view.caches.empty()) sorted.caches.push_back(std::move(view.caches[i]));
    }
    sorted.rects.reserve(order.size());
    for (const SplatFragment& f : sorted.fragments) sorted.rects.push_back(fragment_rect(f, camera.width, camera.height));
    return sorted;
}

inline double fragment_alpha(OpacityMode mode, const SplatFragment& frag, double weight, double alpha_max) {
    const double a = mode == OpacityMode::baseline ? alpha_baseline_unclamped(frag.opacity, weight)
                                                   : alpha_omg_unclamped(frag.opacity, weight, frag.sigma);
    return std::min(a, alpha_max);
}

inline bool wants(const std::vector<OutputKind>& outputs, OutputKind kind) {
    return std::find(outputs.begin(), outputs.end(), kind) != outputs.end();
}

} // namespace detail

inline void validate_render_request(const RenderRequest& req) {
    if (req.scene == nullptr) throw invalid_input("render: null scene");
    if (req.outputs.empty()) throw invalid_input("render: outputs must be nonempty");
    if (req.tile_size < 1) throw invalid_input("render: tile size must be >= 1");
    validate_camera(req.camera);
}

/// Tiled forward render. Tiles bucket fragments but never change blend
/// order: every pixel composites the depth-sorted fragments whose rect
/// covers it.
inline RenderOutputs render(const RenderRequest& req) {
    validate_render_request(req);
    const Scene& scene = *req.scene;
    const Camera& cam = req.camera;
    const detail::ViewFragments view = detail::build_view(
        scene, cam, req.mode, req.rig, detail::wants(req.outputs, OutputKind::cross_section_map));

    RenderOutputs out;
    for (OutputKind kind : req.outputs) out.emplace(kind, ImageBuffer(cam.width, cam.height));
    const bool want_color = detail::wants(req.outputs, OutputKind::color);
    const bool want_sigma = detail::wants(req.outputs, OutputKind::cross_section_map);
    const bool want_trans = detail::wants(req.outputs, OutputKind::transmittance_map);
    const bool want_normal = detail::wants(req.outputs, OutputKind::normal_map);
    const bool want_albedo = detail::wants(req.outputs, OutputKind::albedo_map);

    const int tiles_x = (cam.width + req.tile_size - 1) / req.tile_size;
    const int tiles_y = (cam.height + req.tile_size - 1) / req.tile_size;
    const std::size_t tile_count = static_cast<std::size_t>(tiles_x) * static_cast<std::size_t>(tiles_y);

    parallel_chunks(tile_count, 1, [&](std::size_t t0, std::size_t t1) {
        std::vector<std::size_t> bucket;
        for (std::size_t t = t0; t < t1; ++t) {
            const int ty = static_cast<int>(t) / tiles_x;
            const int tx = static_cast<int>(t) % tiles_x;
            const int r0 = ty * req.tile_size;
            const int r1 = std::min(cam.height - 1, r0 + req.tile_size - 1);
            const int c0 = tx * req.tile_size;
            const int c1 = std::min(cam.width - 1, c0 + req.tile_size - 1);

            bucket.clear();
            for (std::size_t i = 0; i < view.fragments.size(); ++i)
                if (view.rects[i].intersects(r0, r1, c0, c1)) bucket.push_back(i);

            for (int row = r0; row <= r1; ++row)
                for (int col = c0; col <= c1; ++col) {
                    const Vec2 px{col + 0.5, row + 0.5};
                    double transmittance = 1.0;
                    Rgb color, sigma_acc, normal_acc, albedo_acc;
                    for (std::size_t i : bucket) {
                        if (!view.rects[i].contains(row, col)) continue;
                        const SplatFragment& frag = view.fragments[i];
                        const double weight = gaussian_weight(frag, px);
                        const double alpha = detail::fragment_alpha(req.mode, frag, weight, req.settings.alpha_max);
                        if (alpha < req.settings.skip_alpha || alpha <= 0.0) continue;
                        const double w = alpha * transmittance;
                        if (want_color) color += frag.color * w;
                        if (want_sigma) sigma_acc += Rgb{frag.sigma, frag.sigma, frag.sigma} * w;
                        if (want_normal) {
                            const Vec3& n = scene.gaussians[static_cast<std::size_t>(frag.gaussian_index)].normal;
                            normal_acc += Rgb{n.x, n.y, n.z} * w;
                        }
                        if (want_albedo)
                            albedo_acc += scene.gaussians[static_cast<std::size_t>(frag.gaussian_index)].material.albedo * w;
                        transmittance *= 1.0 - alpha;
                        if (transmittance < req.settings.t_min) break;
                    }
                    if (want_color) out.at(OutputKind::color).set_pixel(row, col, color + scene.background * transmittance);
                    if (want_sigma) out.at(OutputKind::cross_section_map).set_pixel(row, col, sigma_acc);
                    if (want_trans)
                        out.at(OutputKind::transmittance_map)
                            .set_pixel(row, col, {transmittance, transmittance, transmittance});
                    if (want_normal) out.at(OutputKind::normal_map).set_pixel(row, col, normal_acc);
                    if (want_albedo) out.at(OutputKind::albedo_map).set_pixel(row, col, albedo_acc);
                }
        }
    });
    return out;
}

/// Single-threaded oracle: every pixel visits every fragment in depth
/// order with no footprint test, no skip threshold and no early
/// termination, evaluating the blending sum directly in double precision.
inline RenderOutputs render_reference(const RenderRequest& req) {
    validate_render_request(req);
    const Scene& scene = *req.scene;
    const Camera& cam = req.camera;
    const detail::ViewFragments view = detail::build_view(
        scene, cam, req.mode, req.rig, detail::wants(req.outputs, OutputKind::cross_section_map));

    RenderOutputs out;
    for (OutputKind kind : req.outputs) out.emplace(kind, ImageBuffer(cam.width, cam.height));

    for (int row = 0; row < cam.height; ++row)
        for (int col = 0; col < cam.width; ++col) {
            const Vec2 px{col + 0.5, row + 0.5};
            double transmittance = 1.0;
            Rgb color, sigma_acc, normal_acc, albedo_acc;
            for (const SplatFragment& frag : view.fragments) {
                const double weight = gaussian_weight(frag, px);
                const double alpha = detail::fragment_alpha(req.mode, frag, weight, req.settings.alpha_max);
                const double w = alpha * transmittance;
                color += frag.color * w;
                sigma_acc += Rgb{frag.sigma, frag.sigma, frag.sigma} * w;
                const GaussianPrimitive& g = scene.gaussians[static_cast<std::size_t>(frag.gaussian_index)];
                normal_acc += Rgb{g.normal.x, g.normal.y, g.normal.z} * w;
                albedo_acc += g.material.albedo * w;
                transmittance *= 1.0 - alpha;
            }
            for (OutputKind kind : req.outputs) {
                ImageBuffer& buf = out.at(kind);
                switch (kind) {
                    case OutputKind::color: buf.set_pixel(row, col, color + scene.background * transmittance); break;
                    case OutputKind::cross_section_map: buf.set_pixel(row, col, sigma_acc); break;
                    case OutputKind::transmittance_map:
                        buf.set_pixel(row, col, {transmittance, transmittance, transmittance});
                        break;
                    case OutputKind::normal_map: buf.set_pixel(row, col, normal_acc); break;
                    case OutputKind::albedo_map: buf.set_pixel(row, col, albedo_acc); break;
                }
            }
        }
    return out;
}

} // namespace omg
