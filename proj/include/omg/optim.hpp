#pragma once

/// @file optim.hpp
/// @brief Adam and the end-to-end fitting loop minimizing the L2 color
/// loss over a multi-view dataset in either opacity mode.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "omg/compositing.hpp"
#include "omg/errors.hpp"
#include "omg/grad.hpp"
#include "omg/metrics.hpp"
#include "omg/render.hpp"
#include "omg/scene.hpp"

namespace omg {

struct AdamHyper {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// First/second moment buffers for one parameter group.
struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    long step = 0;
    AdamHyper hyper;

    explicit AdamState(std::size_t size = 0, AdamHyper h = {}) : m(size, 0.0), v(size, 0.0), hyper(h) {}
};

/// Standard bias-corrected Adam update, in place.
inline void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads, double lr) {
    if (params.size() != grads.size() || params.size() != state.m.size() || params.size() != state.v.size())
        throw invalid_input("adam_step: parameter/gradient/state shapes differ");
    state.step += 1;
    const double b1 = state.hyper.beta1, b2 = state.hyper.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * grads[i];
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * grads[i] * grads[i];
        const double mhat = state.m[i] / c1;
        const double vhat = state.v[i] / c2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + state.hyper.eps);
    }
}

struct FitConfig {
    int iterations = 2000;
    OpacityMode mode = OpacityMode::omg;
    double lr_opacity = 0.05;
    double lr_material = 0.01;
    double lr_network = 1e-3;
    std::uint64_t seed = 0;
    int views_per_step = 1;
    int log_interval = 50;
    int holdout = 0;  // last N dataset views are held out of training
    CompositeSettings settings = fit_composite_settings();
};

struct FitLogEntry {
    int iteration = 0;
    double loss = 0.0;
    double psnr = 0.0;
    double holdout_psnr = 0.0;
    bool has_holdout = false;
};

struct FitHistory {
    std::vector<FitLogEntry> entries;
    double final_train_psnr = 0.0;
    double final_holdout_psnr = 0.0;
    bool has_holdout = false;
};

struct ViewData {
    Camera camera;
    ImageBuffer target;
};

struct FitResult {
    Scene scene;
    FitHistory history;
};

namespace detail {

/// Gathers the trainable groups of a scene into flat vectors and writes
/// them back, re-clamping materials to their valid ranges.
struct TrainableViews {
    static std::vector<double> opacity(const Scene& s) {
        std::vector<double> v;
        v.reserve(s.gaussians.size());
        for (const auto& g : s.gaussians) v.push_back(g.raw_opacity);
        return v;
    }
    static std::vector<double> material(const Scene& s) {
        std::vector<double> v;
        v.reserve(s.gaussians.size() * 5);
        for (const auto& g : s.gaussians) {
            v.push_back(g.material.albedo.r);
            v.push_back(g.material.albedo.g);
            v.push_back(g.material.albedo.b);
            v.push_back(g.material.roughness);
            v.push_back(g.material.metallic);
        }
        return v;
    }
    static std::vector<double> network(const Scene& s) {
        std::vector<double> v;
        if (!s.network) return v;
        for (const auto& w : s.network->weights) v.insert(v.end(), w.begin(), w.end());
        for (const auto& b : s.network->biases) v.insert(v.end(), b.begin(), b.end());
        return v;
    }
    static void store_opacity(Scene& s, const std::vector<double>& v) {
        for (std::size_t i = 0; i < s.gaussians.size(); ++i) s.gaussians[i].raw_opacity = v[i];
    }
    static void store_material(Scene& s, const std::vector<double>& v) {
        auto clamp01 = [](double x) { return std::clamp(x, 0.0, 1.0); };
        for (std::size_t i = 0; i < s.gaussians.size(); ++i) {
            Material& m = s.gaussians[i].material;
            m.albedo = {clamp01(v[i * 5 + 0]), clamp01(v[i * 5 + 1]), clamp01(v[i * 5 + 2])};
            m.roughness = clamp01(v[i * 5 + 3]);
            m.metallic = clamp01(v[i * 5 + 4]);
        }
    }
    static void store_network(Scene& s, const std::vector<double>& v) {
        if (!s.network) return;
        std::size_t k = 0;
        for (auto& w : s.network->weights)
            for (double& x : w) x = v[k++];
        for (auto& b : s.network->biases)
            for (double& x : b) x = v[k++];
    }
};

inline std::vector<double> flatten_material_grads(const GradientSet& g) {
    std::vector<double> v;
    v.reserve(g.d_material.size() * 5);
    for (const MaterialGrad& m : g.d_material) {
        v.push_back(m.dalbedo.r);
        v.push_back(m.dalbedo.g);
        v.push_back(m.dalbedo.b);
        v.push_back(m.droughness);
        v.push_back(m.dmetallic);
    }
    return v;
}

inline std::vector<double> flatten_network_grads(const GradientSet& g) {
    std::vector<double> v;
    for (const auto& w : g.network.dweights) v.insert(v.end(), w.begin(), w.end());
    for (const auto& b : g.network.dbiases) v.insert(v.end(), b.begin(), b.end());
    return v;
}

inline double mean_dataset_psnr(const Scene& scene, const std::vector<const ViewData*>& views, OpacityMode mode,
                                const CompositeSettings& settings) {
    if (views.empty()) return 0.0;
    double acc = 0.0;
    for (const ViewData* v : views) {
        RenderRequest req = make_render_request(scene, v->camera, mode);
        req.settings = settings;
        const RenderOutputs out = render(req);
        acc += psnr(out.at(OutputKind::color), v->target);
    }
    return acc / static_cast<double>(views.size());
}

} // namespace detail

/// Runs `iterations` steps of render -> loss -> backward -> adam over the
/// dataset, cycling training views in a seed-shuffled round-robin.
/// Materials are re-clamped to [0,1] after every step. Deterministic:
/// identical inputs give bitwise-identical history and scene.
inline FitResult fit(Scene scene, const std::vector<ViewData>& dataset, const FitConfig& config) {
    if (dataset.empty()) throw invalid_input("fit: dataset is empty");
    if (config.iterations < 0) throw invalid_input("fit: negative iteration count");
    if (config.views_per_step < 1) throw invalid_input("fit: views_per_step must be >= 1");
    if (!(config.lr_opacity > 0.0 && config.lr_material > 0.0 && config.lr_network > 0.0))
        throw invalid_input("fit: learning rates must be positive");
    if (config.holdout < 0 || config.holdout >= static_cast<int>(dataset.size()))
        throw invalid_input("fit: holdout must leave at least one training view");
    for (const ViewData& v : dataset)
        if (v.target.width != v.camera.width || v.target.height != v.camera.height)
            throw invalid_input("fit: target image does not match camera resolution");

    const int n_train = static_cast<int>(dataset.size()) - config.holdout;
    std::vector<const ViewData*> train_views, holdout_views;
    for (int i = 0; i < n_train; ++i) train_views.push_back(&dataset[static_cast<std::size_t>(i)]);
    for (int i = n_train; i < static_cast<int>(dataset.size()); ++i)
        holdout_views.push_back(&dataset[static_cast<std::size_t>(i)]);

    // fixed view order for the round-robin
    std::vector<int> order(static_cast<std::size_t>(n_train));
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(config.seed);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<double> p_opacity = detail::TrainableViews::opacity(scene);
    std::vector<double> p_material = detail::TrainableViews::material(scene);
    std::vector<double> p_network = detail::TrainableViews::network(scene);
    AdamState s_opacity(p_opacity.size()), s_material(p_material.size()), s_network(p_network.size());

    FitHistory history;
    history.has_holdout = !holdout_views.empty();

    auto log_entry = [&](int iteration, double loss) {
        FitLogEntry e;
        e.iteration = iteration;
        e.loss = loss;
        e.psnr = loss > 0.0 ? std::min(kPsnrSentinel, -10.0 * std::log10(loss)) : kPsnrSentinel;
        if (!holdout_views.empty()) {
            e.has_holdout = true;
            e.holdout_psnr = detail::mean_dataset_psnr(scene, holdout_views, config.mode, config.settings);
        }
        history.entries.push_back(e);
    };

    auto step_loss = [&](int iteration, bool apply) {
        double loss_acc = 0.0;
        GradientSet total;
        for (int v = 0; v < config.views_per_step; ++v) {
            const int idx =
                order[static_cast<std::size_t>((static_cast<long>(iteration) * config.views_per_step + v) % n_train)];
            const ViewData& view = dataset[static_cast<std::size_t>(idx)];
            RenderRequest req = make_render_request(scene, view.camera, config.mode);
            req.settings = config.settings;
            const RenderOutputs out = render(req);
            const auto [loss, dimage] = loss_l2(out.at(OutputKind::color), view.target);
            loss_acc += loss;
            if (!apply) continue;
            BackwardOptions opts;
            opts.settings = config.settings;
            GradientSet g = backward_image(scene, view.camera, config.mode, scene.rig, dimage, opts);
            if (v == 0) {
                total = std::move(g);
            } else {
                for (std::size_t i = 0; i < total.d_raw_opacity.size(); ++i) total.d_raw_opacity[i] += g.d_raw_opacity[i];
                for (std::size_t i = 0; i < total.d_material.size(); ++i) total.d_material[i].add(g.d_material[i]);
                total.network.add(g.network);
            }
        }
        const double loss = loss_acc / static_cast<double>(config.views_per_step);
        if (!std::isfinite(loss))
            throw numeric_error("fit: non-finite loss at iteration " + std::to_string(iteration));
        if (!apply) return loss;

        const double scale = 1.0 / static_cast<double>(config.views_per_step);
        std::vector<double> g_opacity = total.d_raw_opacity;
        for (double& x : g_opacity) x *= scale;
        std::vector<double> g_material = detail::flatten_material_grads(total);
        for (double& x : g_material) x *= scale;
        std::vector<double> g_network = detail::flatten_network_grads(total);
        for (double& x : g_network) x *= scale;

        adam_step(s_opacity, p_opacity, g_opacity, config.lr_opacity);
        adam_step(s_material, p_material, g_material, config.lr_material);
        if (!p_network.empty()) adam_step(s_network, p_network, g_network, config.lr_network);

        detail::TrainableViews::store_opacity(scene, p_opacity);
        detail::TrainableViews::store_material(scene, p_material);
        detail::TrainableViews::store_network(scene, p_network);
        // clamping writes back into the flat buffers so the optimizer sees
        // the projected point
        p_material = detail::TrainableViews::material(scene);
        return loss;
    };

    log_entry(0, step_loss(0, false));
    for (int it = 0; it < config.iterations; ++it) {
        const double loss = step_loss(it, true);
        if (config.log_interval > 0 && ((it + 1) % config.log_interval == 0 || it + 1 == config.iterations))
            log_entry(it + 1, loss);
    }

    history.final_train_psnr = detail::mean_dataset_psnr(scene, train_views, config.mode, config.settings);
    if (!holdout_views.empty())
        history.final_holdout_psnr = detail::mean_dataset_psnr(scene, holdout_views, config.mode, config.settings);

    return {std::move(scene), std::move(history)};
}

} // namespace omg
