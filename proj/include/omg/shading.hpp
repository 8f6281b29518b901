#pragma once

/// @file shading.hpp
/// @brief Per-Gaussian outgoing color from a fixed directional light rig:
/// a Lambertian + normalized Blinn-Phong BRDF over a finite light sum, so
/// the rendering-equation integral is a closed form with exact derivatives
/// for every material channel.

#include <cmath>
#include <vector>

#include "omg/errors.hpp"
#include "omg/geometry.hpp"
#include "omg/math.hpp"

namespace omg {

/// `direction` points from the surface toward the light.
struct DirectionalLight {
    Vec3 direction{0, 0, 1};
    Rgb intensity{1, 1, 1};
};

struct LightRig {
    std::vector<DirectionalLight> lights;
    Rgb ambient;
};

/// Keeps the Blinn-Phong exponent finite as roughness -> 0.
inline constexpr double kMinRoughnessSq = 1e-4;

inline double blinn_phong_exponent(double roughness) {
    return 2.0 / std::max(roughness * roughness, kMinRoughnessSq) - 2.0;
}

/// Lambertian diffuse plus a normalized Blinn-Phong lobe whose specular
/// color blends white and albedo by metalness. Zero when the light or the
/// viewer is below the tangent plane.
inline Rgb brdf_eval(const Material& m, const Vec3& l, const Vec3& v, const Vec3& n) {
    const double ln = dot(l, n);
    const double vn = dot(v, n);
    if (ln <= 0.0 || vn <= 0.0) return {0, 0, 0};
    const Rgb diffuse = m.albedo * ((1.0 - m.metallic) / kPi);
    const Vec3 h = normalized(l + v);
    const double nh = dot(n, h);
    const double p = blinn_phong_exponent(m.roughness);
    const double lobe = (p + 8.0) / (8.0 * kPi) * std::pow(nh, p);
    const Rgb ks{1.0 + (m.albedo.r - 1.0) * m.metallic, 1.0 + (m.albedo.g - 1.0) * m.metallic,
                 1.0 + (m.albedo.b - 1.0) * m.metallic};
    return diffuse + ks * lobe;
}

/// Outgoing radiance of one Gaussian: sum over rig lights of
/// I_k * f(l_k, v, m) * max(0, l_k . n), plus ambient * albedo.
inline Rgb shade(const GaussianPrimitive& g, const LightRig& rig, const Vec3& view_dir) {
    Rgb out = rig.ambient * g.material.albedo;
    for (const DirectionalLight& light : rig.lights) {
        const double cosine = dot(light.direction, g.normal);
        if (cosine <= 0.0) continue;
        out += light.intensity * brdf_eval(g.material, light.direction, view_dir, g.normal) * cosine;
    }
    return out;
}

struct MaterialGrad {
    Rgb dalbedo;
    double droughness = 0.0;
    double dmetallic = 0.0;

    void add(const MaterialGrad& o) {
        dalbedo += o.dalbedo;
        droughness += o.droughness;
        dmetallic += o.dmetallic;
    }
};

struct ShadeGrads {
    MaterialGrad dmaterial;
    Vec3 dnormal;
};

/// Reverse-mode gradients of shade() w.r.t. material components and the
/// (unnormalized, ambient R^3) normal, weighted by dcolor.
inline ShadeGrads shade_backward(const GaussianPrimitive& g, const LightRig& rig, const Vec3& view_dir,
                                 const Rgb& dcolor) {
    ShadeGrads out;
    const Material& m = g.material;
    const Vec3& n = g.normal;

    // ambient * albedo term
    out.dmaterial.dalbedo = {dcolor.r * rig.ambient.r, dcolor.g * rig.ambient.g, dcolor.b * rig.ambient.b};

    for (const DirectionalLight& light : rig.lights) {
        const Vec3& l = light.direction;
        const double ln = dot(l, n);
        if (ln <= 0.0) continue;
        const double vn = dot(view_dir, n);
        if (vn <= 0.0) continue;

        const Vec3 h = normalized(l + view_dir);
        const double nh = dot(n, h);
        const double p = blinn_phong_exponent(m.roughness);
        const double pow_nh = std::pow(nh, p);
        const double norm_c = (p + 8.0) / (8.0 * kPi);
        const double lobe = norm_c * pow_nh;

        // per-channel upstream weight: dcolor * intensity * cosine
        const Rgb wc{dcolor.r * light.intensity.r * ln, dcolor.g * light.intensity.g * ln,
                     dcolor.b * light.intensity.b * ln};
        const double wsum_ks = wc.r * (1.0 + (m.albedo.r - 1.0) * m.metallic) +
                               wc.g * (1.0 + (m.albedo.g - 1.0) * m.metallic) +
                               wc.b * (1.0 + (m.albedo.b - 1.0) * m.metallic);

        // albedo: diffuse path (1-metallic)/pi, specular path metallic * lobe
        const double dalb_coeff = (1.0 - m.metallic) / kPi + m.metallic * lobe;
        out.dmaterial.dalbedo.r += wc.r * dalb_coeff;
        out.dmaterial.dalbedo.g += wc.g * dalb_coeff;
        out.dmaterial.dalbedo.b += wc.b * dalb_coeff;

        // metallic: kills diffuse, blends ks toward albedo
        out.dmaterial.dmetallic += wc.r * (-m.albedo.r / kPi + (m.albedo.r - 1.0) * lobe) +
                                   wc.g * (-m.albedo.g / kPi + (m.albedo.g - 1.0) * lobe) +
                                   wc.b * (-m.albedo.b / kPi + (m.albedo.b - 1.0) * lobe);

        // roughness: through the exponent p only
        const double r2 = m.roughness * m.roughness;
        if (r2 > kMinRoughnessSq) {
            const double dp_dr = -4.0 / (r2 * m.roughness);
            const double dlobe_dp = pow_nh / (8.0 * kPi) + norm_c * pow_nh * std::log(nh);
            out.dmaterial.droughness += wsum_ks * dlobe_dp * dp_dr;
        }

        // normal: cosine factor and the nh^p lobe; diffuse has no n
        // dependence beyond the cosine
        const Rgb f = brdf_eval(m, l, view_dir, n);
        const double wf = dcolor.r * light.intensity.r * f.r + dcolor.g * light.intensity.g * f.g +
                          dcolor.b * light.intensity.b * f.b;
        out.dnormal += l * wf;  // d cosine / dn
        const double dlobe_dnh = nh > 0.0 ? norm_c * p * std::pow(nh, p - 1.0) : 0.0;
        out.dnormal += h * (wsum_ks * dlobe_dnh);
    }
    return out;
}

} // namespace omg
