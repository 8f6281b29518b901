#pragma once

/// @file image.hpp
/// @brief H x W x 3 linear-radiance plane. Values are unbounded >= 0 in
/// linear light; gamma happens only at the PNG boundary.

#include <cmath>
#include <vector>

#include "omg/errors.hpp"
#include "omg/math.hpp"

namespace omg {

struct ImageBuffer {
    int width = 0;
    int height = 0;
    static constexpr int channels = 3;
    std::vector<double> data;  // row-major, interleaved rgb

    ImageBuffer() = default;
    ImageBuffer(int w, int h, double fill = 0.0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3, fill) {
        if (w <= 0 || h <= 0) throw invalid_input("ImageBuffer: nonpositive dimensions");
    }

    std::size_t index(int row, int col, int c) const {
        return (static_cast<std::size_t>(row) * static_cast<std::size_t>(width) + static_cast<std::size_t>(col)) * 3 +
               static_cast<std::size_t>(c);
    }
    double& at(int row, int col, int c) { return data[index(row, col, c)]; }
    double at(int row, int col, int c) const { return data[index(row, col, c)]; }

    void set_pixel(int row, int col, const Rgb& v) {
        const std::size_t i = index(row, col, 0);
        data[i] = v.r;
        data[i + 1] = v.g;
        data[i + 2] = v.b;
    }
    Rgb pixel(int row, int col) const {
        const std::size_t i = index(row, col, 0);
        return {data[i], data[i + 1], data[i + 2]};
    }

    bool same_shape(const ImageBuffer& o) const { return width == o.width && height == o.height; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

} // namespace omg
