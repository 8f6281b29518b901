#pragma once

/// @file grad.hpp
/// @brief Manual reverse-mode pass through render -> composite -> alpha ->
/// {shading, cross-section network}, plus the finite-difference harness
/// that certifies it.
///
/// Per pixel, the loss gradient w.r.t. a fragment's alpha has three parts:
/// the fragment's own weighted color, and the change it induces in the
/// transmittance of everything behind it (including the background),
/// gathered with a back-to-front suffix accumulator so the cost stays
/// linear in the fragment count. Material gradients then flow through two
/// routes: the shaded color, and (in omg mode) the cross-section network.

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "omg/compositing.hpp"
#include "omg/crossnet.hpp"
#include "omg/errors.hpp"
#include "omg/image.hpp"
#include "omg/parallel.hpp"
#include "omg/render.hpp"
#include "omg/scene.hpp"
#include "omg/shading.hpp"

namespace omg {

/// Gradient accumulators mirroring every trainable quantity.
struct GradientSet {
    std::vector<double> d_raw_opacity;       // per gaussian
    std::vector<MaterialGrad> d_material;    // per gaussian
    std::vector<Vec3> d_normal;              // per gaussian, zero unless enabled
    NetworkGradients network;                // parameter-shaped; empty without a network
    std::vector<std::uint8_t> populated;     // gaussian contributed to some pixel
    std::vector<std::uint8_t> near_clamp;    // gaussian had a fragment at/near the alpha clamp
    bool any_near_clamp = false;

    bool all_finite() const {
        auto ok = [](double v) { return std::isfinite(v); };
        for (double v : d_raw_opacity)
            if (!ok(v)) return false;
        for (const MaterialGrad& m : d_material)
            if (!ok(m.dalbedo.r) || !ok(m.dalbedo.g) || !ok(m.dalbedo.b) || !ok(m.droughness) || !ok(m.dmetallic))
                return false;
        for (const Vec3& n : d_normal)
            if (!ok(n.x) || !ok(n.y) || !ok(n.z)) return false;
        for (const auto& w : network.dweights)
            for (double v : w)
                if (!ok(v)) return false;
        for (const auto& b : network.dbiases)
            for (double v : b)
                if (!ok(v)) return false;
        return true;
    }
};

/// Mean squared error over all pixel-channels, with its image-shaped
/// gradient 2 (rendered - target) / count.
inline std::pair<double, ImageBuffer> loss_l2(const ImageBuffer& rendered, const ImageBuffer& target) {
    if (!rendered.same_shape(target)) throw invalid_input("loss_l2: image dimensions differ");
    const double inv_count = 1.0 / static_cast<double>(rendered.data.size());
    ImageBuffer dimage(rendered.width, rendered.height);
    double loss = 0.0;
    for (std::size_t i = 0; i < rendered.data.size(); ++i) {
        const double d = rendered.data[i] - target.data[i];
        loss += d * d;
        dimage.data[i] = 2.0 * d * inv_count;
    }
    return {loss * inv_count, dimage};
}

struct AlphaGrads {
    double d_opacity = 0.0;
    double d_weight = 0.0;
    double d_sigma = 0.0;
};

/// Closed-form partials of the per-fragment alpha. Fragments sitting at
/// the clamp get zero gradient (subgradient convention).
inline AlphaGrads dalpha_dparams(OpacityMode mode, double opacity, double weight, double sigma,
                                 double alpha_max = kAlphaMax) {
    AlphaGrads g;
    if (mode == OpacityMode::baseline) {
        if (alpha_baseline_unclamped(opacity, weight) >= alpha_max) return g;
        g.d_opacity = weight;
        g.d_weight = opacity;
        return g;
    }
    const double alpha = alpha_omg_unclamped(opacity, weight, sigma);
    if (alpha >= alpha_max) return g;
    const double one_minus = 1.0 - alpha;  // = exp(-o G sigma)
    g.d_opacity = weight * sigma * one_minus;
    g.d_weight = opacity * sigma * one_minus;
    g.d_sigma = opacity * weight * one_minus;
    return g;
}

struct BackwardOptions {
    CompositeSettings settings = exact_composite_settings();
    /// Debug switch: drop the cross-section route of the material gradient,
    /// leaving only the shaded-color route (what baseline mode produces
    /// structurally).
    bool zero_dalpha_dmaterial = false;
    /// Also report gradients w.r.t. normals (through shading).
    bool normal_gradients = false;
    /// Fragments with unclamped alpha within this margin of the clamp are
    /// flagged in the result so a finite-difference caller can exclude them.
    double clamp_margin = 0.0;
    /// Fault injection for the gradcheck harness; compiled out of
    /// non-test builds. 1 = color term, 2 = own-alpha term, 3 = suffix term.
    int corrupt_term = 0;
};

/// Reverse pass for one view. Replays the forward traversal (same
/// fragments, same order, same thresholds as a render with
/// options.settings), then walks each pixel back to front.
inline GradientSet backward_image(const Scene& scene, const Camera& camera, OpacityMode mode, const LightRig& rig,
                                  const ImageBuffer& dimage, const BackwardOptions& options = {}) {
    if (dimage.width != camera.width || dimage.height != camera.height)
        throw invalid_state("backward_image: dimage does not match the camera's image size");
#ifndef OMG_TEST_HOOKS
    if (options.corrupt_term != 0) throw invalid_input("backward_image: fault injection requires a test build");
#endif
    double corrupt_color = 1.0, corrupt_alpha = 1.0, corrupt_suffix = 1.0;
#ifdef OMG_TEST_HOOKS
    if (options.corrupt_term == 1) corrupt_color = 2.0;
    if (options.corrupt_term == 2) corrupt_alpha = 2.0;
    if (options.corrupt_term == 3) corrupt_suffix = 2.0;
#endif

    const detail::ViewFragments view = detail::build_view(scene, camera, mode, rig, /*need_sigma=*/mode == OpacityMode::omg);
    const std::size_t n_gaussians = scene.gaussians.size();

    GradientSet grads;
    grads.d_raw_opacity.assign(n_gaussians, 0.0);
    grads.d_material.assign(n_gaussians, MaterialGrad{});
    grads.d_normal.assign(n_gaussians, Vec3{});
    grads.populated.assign(n_gaussians, 0);
    grads.near_clamp.assign(n_gaussians, 0);
    if (scene.network) grads.network = zero_gradients(*scene.network);

    // per-gaussian accumulators over all pixels
    std::vector<Rgb> dcolor(view.fragments.size());
    std::vector<double> dsigma(view.fragments.size(), 0.0);
    std::vector<double> dopacity(view.fragments.size(), 0.0);

    struct Touch {
        std::size_t frag;
        double alpha;
        double transmittance;  // T before this fragment
        double weight;
    };
    std::vector<Touch> touches;

    for (int row = 0; row < camera.height; ++row) {
        for (int col = 0; col < camera.width; ++col) {
            const Vec2 px{col + 0.5, row + 0.5};
            const Rgb v = dimage.pixel(row, col);

            // forward replay
            touches.clear();
            double transmittance = 1.0;
            for (std::size_t i = 0; i < view.fragments.size(); ++i) {
                if (!view.rects[i].contains(row, col)) continue;
                const SplatFragment& frag = view.fragments[i];
                const double weight = gaussian_weight(frag, px);
                const double alpha = detail::fragment_alpha(mode, frag, weight, options.settings.alpha_max);
                if (alpha < options.settings.skip_alpha || alpha <= 0.0) continue;
                touches.push_back({i, alpha, transmittance, weight});
                transmittance *= 1.0 - alpha;
                if (transmittance < options.settings.t_min) break;
            }

            // back-to-front sweep; suffix holds sum_ch v * (everything behind i)
            Rgb suffix = Rgb{v.r * scene.background.r, v.g * scene.background.g, v.b * scene.background.b} * transmittance;
            for (std::size_t k = touches.size(); k-- > 0;) {
                const Touch& t = touches[k];
                const SplatFragment& frag = view.fragments[t.frag];
                const double wT = t.alpha * t.transmittance;

                dcolor[t.frag] += v * (wT * corrupt_color);

                const double own = (v.r * frag.color.r + v.g * frag.color.g + v.b * frag.color.b) * t.transmittance;
                const double behind = suffix.r + suffix.g + suffix.b;
                const double dL_dalpha = own * corrupt_alpha - behind / (1.0 - t.alpha) * corrupt_suffix;

                const AlphaGrads ag =
                    dalpha_dparams(mode, frag.opacity, t.weight, frag.sigma, options.settings.alpha_max);
                dopacity[t.frag] += dL_dalpha * ag.d_opacity;
                dsigma[t.frag] += dL_dalpha * ag.d_sigma;

                if (options.clamp_margin > 0.0) {
                    const double unclamped = mode == OpacityMode::baseline
                                                 ? alpha_baseline_unclamped(frag.opacity, t.weight)
                                                 : alpha_omg_unclamped(frag.opacity, t.weight, frag.sigma);
                    if (unclamped >= options.settings.alpha_max - options.clamp_margin) {
                        grads.near_clamp[static_cast<std::size_t>(frag.gaussian_index)] = 1;
                        grads.any_near_clamp = true;
                    }
                }

                suffix += Rgb{v.r * frag.color.r, v.g * frag.color.g, v.b * frag.color.b} * wT;
                grads.populated[static_cast<std::size_t>(frag.gaussian_index)] = 1;
            }
        }
    }

    // propagate the per-fragment accumulators into trainables, in gaussian
    // order so reductions are reproducible
    for (std::size_t i = 0; i < view.fragments.size(); ++i) {
        const SplatFragment& frag = view.fragments[i];
        const std::size_t gi = static_cast<std::size_t>(frag.gaussian_index);
        const GaussianPrimitive& g = scene.gaussians[gi];

        grads.d_raw_opacity[gi] += dopacity[i] * activate_opacity_derivative(g.raw_opacity, scene.activation);

        const ShadeGrads sg = shade_backward(g, rig, view.view_dirs[i], dcolor[i]);
        grads.d_material[gi].add(sg.dmaterial);
        if (options.normal_gradients) grads.d_normal[gi] += sg.dnormal;

        if (mode == OpacityMode::omg && !options.zero_dalpha_dmaterial && dsigma[i] != 0.0) {
            const BackwardResult nb = backward(*scene.network, view.caches[i], dsigma[i]);
            grads.d_material[gi].dalbedo += Rgb{nb.dinput[0], nb.dinput[1], nb.dinput[2]};
            grads.d_material[gi].droughness += nb.dinput[3];
            grads.d_material[gi].dmetallic += nb.dinput[4];
            grads.network.add(nb.dparams);
        }
    }
    return grads;
}

/// One scalar-parameter verdict of the finite-difference harness.
struct GradCheckReport {
    std::string parameter;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_error = 0.0;  // |a - n| / max(1, |a|, |n|)
    bool pass = false;
};

enum class ParamSelection { all, opacity, material, network };

struct GradCheckConfig {
    ParamSelection selection = ParamSelection::all;
    double eps = 1e-5;
    double tol = 1e-4;
    std::uint64_t seed = 0;
    CompositeSettings settings = exact_composite_settings();
    int corrupt_term = 0;
};

namespace detail {

/// Named mutable handles to every trainable scalar of a scene, in a fixed
/// enumeration order.
inline std::vector<std::pair<std::string, double*>> trainable_params(Scene& scene, ParamSelection sel) {
    std::vector<std::pair<std::string, double*>> out;
    const bool want_opacity = sel == ParamSelection::all || sel == ParamSelection::opacity;
    const bool want_material = sel == ParamSelection::all || sel == ParamSelection::material;
    const bool want_network = sel == ParamSelection::all || sel == ParamSelection::network;
    for (std::size_t i = 0; i < scene.gaussians.size(); ++i) {
        GaussianPrimitive& g = scene.gaussians[i];
        const std::string prefix = "g" + std::to_string(i) + ".";
        if (want_opacity) out.emplace_back(prefix + "raw_opacity", &g.raw_opacity);
        if (want_material) {
            out.emplace_back(prefix + "albedo.r", &g.material.albedo.r);
            out.emplace_back(prefix + "albedo.g", &g.material.albedo.g);
            out.emplace_back(prefix + "albedo.b", &g.material.albedo.b);
            out.emplace_back(prefix + "roughness", &g.material.roughness);
            out.emplace_back(prefix + "metallic", &g.material.metallic);
        }
    }
    if (want_network && scene.network) {
        CrossSectionNetwork& net = *scene.network;
        for (std::size_t l = 0; l < net.weights.size(); ++l) {
            const std::string wl = "net.w" + std::to_string(l) + "[";
            for (std::size_t k = 0; k < net.weights[l].size(); ++k)
                out.emplace_back(wl + std::to_string(k) + "]", &net.weights[l][k]);
            const std::string bl = "net.b" + std::to_string(l) + "[";
            for (std::size_t k = 0; k < net.biases[l].size(); ++k)
                out.emplace_back(bl + std::to_string(k) + "]", &net.biases[l][k]);
        }
    }
    return out;
}

/// Analytic gradient value for the parameter at enumeration slot `idx`,
/// mirrored against trainable_params ordering.
inline std::vector<double> flattened_analytic(const Scene& scene, const GradientSet& grads, ParamSelection sel) {
    std::vector<double> out;
    const bool want_opacity = sel == ParamSelection::all || sel == ParamSelection::opacity;
    const bool want_material = sel == ParamSelection::all || sel == ParamSelection::material;
    const bool want_network = sel == ParamSelection::all || sel == ParamSelection::network;
    for (std::size_t i = 0; i < scene.gaussians.size(); ++i) {
        if (want_opacity) out.push_back(grads.d_raw_opacity[i]);
        if (want_material) {
            out.push_back(grads.d_material[i].dalbedo.r);
            out.push_back(grads.d_material[i].dalbedo.g);
            out.push_back(grads.d_material[i].dalbedo.b);
            out.push_back(grads.d_material[i].droughness);
            out.push_back(grads.d_material[i].dmetallic);
        }
    }
    if (want_network && scene.network) {
        for (std::size_t l = 0; l < grads.network.dweights.size(); ++l) {
            for (double v : grads.network.dweights[l]) out.push_back(v);
            for (double v : grads.network.dbiases[l]) out.push_back(v);
        }
    }
    return out;
}

/// Marks parameters excluded by the clamp-boundary rule.
inline std::vector<std::uint8_t> clamp_exclusions(const Scene& scene, const GradientSet& grads, OpacityMode mode,
                                                  ParamSelection sel) {
    std::vector<std::uint8_t> out;
    const bool want_opacity = sel == ParamSelection::all || sel == ParamSelection::opacity;
    const bool want_material = sel == ParamSelection::all || sel == ParamSelection::material;
    const bool want_network = sel == ParamSelection::all || sel == ParamSelection::network;
    for (std::size_t i = 0; i < scene.gaussians.size(); ++i) {
        const std::uint8_t flagged = grads.near_clamp[i];
        if (want_opacity) out.push_back(flagged);
        if (want_material)
            for (int k = 0; k < 5; ++k) out.push_back(flagged);
    }
    if (want_network && scene.network) {
        // a clamped fragment freezes alpha against every network parameter
        const std::uint8_t flagged = (mode == OpacityMode::omg && grads.any_near_clamp) ? 1 : 0;
        std::size_t count = 0;
        for (const auto& w : scene.network->weights) count += w.size();
        for (const auto& b : scene.network->biases) count += b.size();
        out.insert(out.end(), count, flagged);
    }
    return out;
}

} // namespace detail

/// Central-difference verification of backward_image: perturbs each
/// selected scalar by +-eps, recomputes the rendered loss end to end and
/// compares against the analytic gradient. Parameters within eps-scale of
/// the alpha clamp are excluded. Deterministic given the config.
inline std::vector<GradCheckReport> finite_difference_check(const Scene& scene, const Camera& camera, OpacityMode mode,
                                                            const LightRig& rig, const ImageBuffer& target,
                                                            const GradCheckConfig& cfg = {}) {
    if (!(cfg.eps >= 1e-7 && cfg.eps <= 1e-3)) throw invalid_input("finite_difference_check: eps outside [1e-7, 1e-3]");

    auto eval_loss = [&](const Scene& s) {
        RenderRequest req = make_render_request(s, camera, mode);
        req.rig = rig;
        req.settings = cfg.settings;
        const RenderOutputs outs = render(req);
        return loss_l2(outs.at(OutputKind::color), target).first;
    };

    // analytic pass
    BackwardOptions opts;
    opts.settings = cfg.settings;
    opts.clamp_margin = 50.0 * cfg.eps;
    opts.corrupt_term = cfg.corrupt_term;
    RenderRequest req = make_render_request(scene, camera, mode);
    req.rig = rig;
    req.settings = cfg.settings;
    const RenderOutputs outs = render(req);
    const auto [loss, dimage] = loss_l2(outs.at(OutputKind::color), target);
    (void)loss;
    const GradientSet grads = backward_image(scene, camera, mode, rig, dimage, opts);

    Scene probe = scene;  // enumeration template; workers copy their own
    const auto params = detail::trainable_params(probe, cfg.selection);
    const std::vector<double> analytic = detail::flattened_analytic(scene, grads, cfg.selection);
    const std::vector<std::uint8_t> excluded = detail::clamp_exclusions(scene, grads, mode, cfg.selection);

    std::vector<GradCheckReport> reports(params.size());
    std::vector<std::uint8_t> keep(params.size(), 1);

    parallel_chunks(params.size(), 256, [&](std::size_t begin, std::size_t end) {
        Scene local = scene;
        const auto local_params = detail::trainable_params(local, cfg.selection);
        for (std::size_t i = begin; i < end; ++i) {
            if (excluded[i]) {
                keep[i] = 0;
                continue;
            }
            double* p = local_params[i].second;
            const double saved = *p;
            *p = saved + cfg.eps;
            const double lp = eval_loss(local);
            *p = saved - cfg.eps;
            const double lm = eval_loss(local);
            *p = saved;
            GradCheckReport& r = reports[i];
            r.parameter = local_params[i].first;
            r.analytic = analytic[i];
            r.numeric = (lp - lm) / (2.0 * cfg.eps);
            r.rel_error = std::abs(r.analytic - r.numeric) /
                          std::max({1.0, std::abs(r.analytic), std::abs(r.numeric)});
            r.pass = r.rel_error <= cfg.tol;
        }
    });

    std::vector<GradCheckReport> out;
    out.reserve(reports.size());
    for (std::size_t i = 0; i < reports.size(); ++i)
        if (keep[i]) out.push_back(std::move(reports[i]));
    return out;
}

} // namespace omg
