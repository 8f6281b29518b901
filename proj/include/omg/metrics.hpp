#pragma once

/// @file metrics.hpp
/// @brief Image quality metrics: PSNR, single-scale SSIM, and the
/// per-channel scalar standardization used before albedo comparisons.

#include <array>
#include <cmath>
#include <vector>

#include "omg/errors.hpp"
#include "omg/image.hpp"

namespace omg {

/// PSNR values at or above this are reported as the "identical" sentinel.
inline constexpr double kPsnrSentinel = 99.0;

inline double mean_squared_error(const ImageBuffer& a, const ImageBuffer& b) {
    if (!a.same_shape(b)) throw invalid_input("mse: image dimensions differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.data.size());
}

/// -10 log10(MSE / peak^2), capped at the 99 dB sentinel (MSE views of
/// identical images report the sentinel).
inline double psnr(const ImageBuffer& a, const ImageBuffer& b, double peak = 1.0) {
    const double mse = mean_squared_error(a, b);
    if (mse == 0.0) return kPsnrSentinel;
    return std::min(kPsnrSentinel, -10.0 * std::log10(mse / (peak * peak)));
}

namespace detail {

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

inline std::array<double, kSsimWindow> ssim_kernel() {
    std::array<double, kSsimWindow> k{};
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
        const double d = i - (kSsimWindow - 1) / 2.0;
        k[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
        sum += k[static_cast<std::size_t>(i)];
    }
    for (double& v : k) v /= sum;
    return k;
}

inline std::vector<double> to_gray(const ImageBuffer& img) {
    std::vector<double> g(static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height));
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c) {
            const Rgb p = img.pixel(r, c);
            g[static_cast<std::size_t>(r) * static_cast<std::size_t>(img.width) + static_cast<std::size_t>(c)] =
                (p.r + p.g + p.b) / 3.0;
        }
    return g;
}

/// Separable valid-mode convolution with the 11-tap SSIM kernel.
inline std::vector<double> filter_valid(const std::vector<double>& in, int w, int h, int& ow, int& oh) {
    const auto k = ssim_kernel();
    ow = w - kSsimWindow + 1;
    oh = h - kSsimWindow + 1;
    std::vector<double> tmp(static_cast<std::size_t>(ow) * static_cast<std::size_t>(h));
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < ow; ++c) {
            double acc = 0.0;
            for (int i = 0; i < kSsimWindow; ++i)
                acc += k[static_cast<std::size_t>(i)] * in[static_cast<std::size_t>(r) * static_cast<std::size_t>(w) +
                                                           static_cast<std::size_t>(c + i)];
            tmp[static_cast<std::size_t>(r) * static_cast<std::size_t>(ow) + static_cast<std::size_t>(c)] = acc;
        }
    std::vector<double> out(static_cast<std::size_t>(ow) * static_cast<std::size_t>(oh));
    for (int r = 0; r < oh; ++r)
        for (int c = 0; c < ow; ++c) {
            double acc = 0.0;
            for (int i = 0; i < kSsimWindow; ++i)
                acc += k[static_cast<std::size_t>(i)] *
                       tmp[static_cast<std::size_t>(r + i) * static_cast<std::size_t>(ow) + static_cast<std::size_t>(c)];
            out[static_cast<std::size_t>(r) * static_cast<std::size_t>(ow) + static_cast<std::size_t>(c)] = acc;
        }
    return out;
}

} // namespace detail

/// Single-scale SSIM on the channel-mean grayscale image: 11x11 Gaussian
/// window (sigma 1.5), C1 = (0.01 peak)^2, C2 = (0.03 peak)^2, mean over
/// the valid window positions.
inline double ssim(const ImageBuffer& a, const ImageBuffer& b, double peak = 1.0) {
    if (!a.same_shape(b)) throw invalid_input("ssim: image dimensions differ");
    if (a.width < detail::kSsimWindow || a.height < detail::kSsimWindow)
        throw invalid_input("ssim: image smaller than the 11x11 window");

    const std::vector<double> x = detail::to_gray(a);
    const std::vector<double> y = detail::to_gray(b);
    const std::size_t n = x.size();
    std::vector<double> xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    int ow = 0, oh = 0;
    const std::vector<double> mx = detail::filter_valid(x, a.width, a.height, ow, oh);
    const std::vector<double> my = detail::filter_valid(y, a.width, a.height, ow, oh);
    const std::vector<double> mxx = detail::filter_valid(xx, a.width, a.height, ow, oh);
    const std::vector<double> myy = detail::filter_valid(yy, a.width, a.height, ow, oh);
    const std::vector<double> mxy = detail::filter_valid(xy, a.width, a.height, ow, oh);

    const double c1 = (0.01 * peak) * (0.01 * peak);
    const double c2 = (0.03 * peak) * (0.03 * peak);
    double acc = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
        const double vx = mxx[i] - mx[i] * mx[i];
        const double vy = myy[i] - my[i] * my[i];
        const double cov = mxy[i] - mx[i] * my[i];
        acc += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
               ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
    return acc / static_cast<double>(mx.size());
}

/// Least-squares per-channel scale k_c minimizing ||k_c * candidate - reference||^2.
inline std::array<double, 3> albedo_channel_scales(const ImageBuffer& reference, const ImageBuffer& candidate) {
    if (!reference.same_shape(candidate)) throw invalid_input("albedo_channel_scales: image dimensions differ");
    std::array<double, 3> num{0, 0, 0}, den{0, 0, 0};
    for (int r = 0; r < reference.height; ++r)
        for (int c = 0; c < reference.width; ++c)
            for (int ch = 0; ch < 3; ++ch) {
                num[static_cast<std::size_t>(ch)] += reference.at(r, c, ch) * candidate.at(r, c, ch);
                den[static_cast<std::size_t>(ch)] += candidate.at(r, c, ch) * candidate.at(r, c, ch);
            }
    std::array<double, 3> k{1, 1, 1};
    for (int ch = 0; ch < 3; ++ch)
        if (den[static_cast<std::size_t>(ch)] > 0.0)
            k[static_cast<std::size_t>(ch)] = num[static_cast<std::size_t>(ch)] / den[static_cast<std::size_t>(ch)];
    return k;
}

/// MSE of the candidate against the reference after the per-channel
/// global-scalar standardization.
inline double standardized_albedo_mse(const ImageBuffer& reference, const ImageBuffer& candidate) {
    const std::array<double, 3> k = albedo_channel_scales(reference, candidate);
    double acc = 0.0;
    for (int r = 0; r < reference.height; ++r)
        for (int c = 0; c < reference.width; ++c)
            for (int ch = 0; ch < 3; ++ch) {
                const double d = k[static_cast<std::size_t>(ch)] * candidate.at(r, c, ch) - reference.at(r, c, ch);
                acc += d * d;
            }
    return acc / static_cast<double>(reference.data.size());
}

} // namespace omg
