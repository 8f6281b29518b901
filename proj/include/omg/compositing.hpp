#pragma once

/// @file compositing.hpp
/// @brief Per-fragment alpha in both opacity models and front-to-back
/// alpha blending with transmittance bookkeeping.
///
/// Baseline model:      alpha = o * G(x)
/// Beer-Lambert (omg):  alpha = 1 - exp(-o * G(x) * sigma)
/// where o * G(x) plays the role of a number density, sigma = f(m) is the
/// material cross section and the path length through a splatted Gaussian
/// is the constant 1.

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "omg/errors.hpp"
#include "omg/math.hpp"

namespace omg {

enum class OpacityMode { baseline, omg };

/// Activation mapping raw (unconstrained) opacity to o. Sigmoid keeps
/// o in (0,1); softplus exposes the unbounded-density variant where the
/// Beer-Lambert alpha can approach 1.
enum class OpacityActivation { sigmoid, softplus };

inline double activate_opacity(double raw, OpacityActivation act) {
    return act == OpacityActivation::sigmoid ? sigmoid(raw) : softplus(raw);
}

inline double activate_opacity_derivative(double raw, OpacityActivation act) {
    if (act == OpacityActivation::sigmoid) {
        const double o = sigmoid(raw);
        return sigmoid_derivative_from_output(o);
    }
    return sigmoid(raw);  // d/dx softplus
}

/// Hard ceiling on per-fragment alpha; keeps 1/(1-alpha) finite in the
/// backward pass.
inline constexpr double kAlphaMax = 0.99;

inline double alpha_baseline_unclamped(double opacity, double weight) { return opacity * weight; }

inline double alpha_baseline(double opacity, double weight) {
    return std::min(alpha_baseline_unclamped(opacity, weight), kAlphaMax);
}

inline double alpha_omg_unclamped(double opacity, double weight, double sigma) {
    const double density = opacity * weight;
    return 1.0 - std::exp(-(density * sigma));
}

inline double alpha_omg(double opacity, double weight, double sigma) {
    return std::min(alpha_omg_unclamped(opacity, weight, sigma), kAlphaMax);
}

/// Volume-rendering alpha 1 - exp(-sigma * delta). With delta = 1 and
/// sigma = o * G * f(m) this is bit-identical to alpha_omg_unclamped,
/// which makes the correspondence a testable identity.
inline double nerf_alpha(double sigma_density, double delta) {
    return 1.0 - std::exp(-(sigma_density * delta));
}

/// t - (1 - e^-t): the amount by which the linear alpha overshoots the
/// exponential one at optical depth t. Lies in [0, t^2/2] for t >= 0.
inline double taylor_gap(double t) { return t + std::expm1(-t); }

/// Traversal thresholds for one compositing pass. Defaults are
/// exact-grade: nothing is skipped that could move a channel by more
/// than ~1e-8, which is what keeps the fast renderer within 1e-6 of the
/// brute-force reference. The fitting loop swaps in coarser thresholds.
struct CompositeSettings {
    double alpha_max = kAlphaMax;
    double skip_alpha = 0.0;  // fragments with alpha below this do not contribute
    double t_min = 1e-8;      // stop once transmittance falls below this
};

/// Thresholds used inside the fitting loop, inherited from splatting
/// practice: skip invisible fragments, stop at 1e-4 transmittance.
inline CompositeSettings fit_composite_settings() {
    CompositeSettings s;
    s.skip_alpha = 1.0 / 255.0;
    s.t_min = 1e-4;
    return s;
}

/// No skipping, no early termination: the settings of the reference
/// renderer and of the finite-difference harness.
inline CompositeSettings exact_composite_settings() {
    CompositeSettings s;
    s.skip_alpha = 0.0;
    s.t_min = 0.0;
    return s;
}

/// One already-shaded, already-alpha'd fragment at a pixel.
struct PixelFragment {
    double depth = 0.0;
    double alpha = 0.0;
    Rgb color;
};

struct PixelComposite {
    Rgb color;
    double transmittance = 1.0;  // product of (1 - alpha) over contributing fragments
    int contributing = 0;
};

/// Front-to-back blend of depth-sorted fragments over a background.
/// Throws invalid_input when depths are not non-decreasing.
inline PixelComposite composite_pixel(std::span<const PixelFragment> fragments, const Rgb& background,
                                      const CompositeSettings& settings = {}) {
    PixelComposite out;
    double prev_depth = -std::numeric_limits<double>::infinity();
    for (const PixelFragment& f : fragments) {
        if (f.depth < prev_depth) throw invalid_input("composite_pixel: fragments not sorted by depth");
        prev_depth = f.depth;
        if (f.alpha < settings.skip_alpha || f.alpha <= 0.0) continue;
        const double weight = f.alpha * out.transmittance;
        out.color += f.color * weight;
        out.transmittance *= 1.0 - f.alpha;
        ++out.contributing;
        if (out.transmittance < settings.t_min) break;
    }
    out.color += background * out.transmittance;
    return out;
}

} // namespace omg
