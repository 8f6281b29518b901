#pragma once

/// @file image_io.hpp
/// @brief Image serialization: lossless float via portable float map
/// (little-endian, scale -1.0) for metrics, and 8-bit PNG with gamma 2.2
/// for display. Metrics always run on the float format.

#include <png.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "omg/errors.hpp"
#include "omg/image.hpp"

namespace omg {

inline constexpr double kDisplayGamma = 2.2;

/// Gamma-2.2 encode of one linear value into a display byte; out-of-range
/// input clamps to [0,1].
inline std::uint8_t gamma_encode_byte(double v) {
    const double c = std::min(1.0, std::max(0.0, v));
    return static_cast<std::uint8_t>(std::lround(255.0 * std::pow(c, 1.0 / kDisplayGamma)));
}

inline double gamma_decode_byte(std::uint8_t b) { return std::pow(static_cast<double>(b) / 255.0, kDisplayGamma); }

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline FilePtr open_file(const std::string& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) throw io_error("cannot open '" + path + "'");
    return f;
}

} // namespace detail

/// Writes a binary RGB portable float map: "PF", dimensions, scale -1.0
/// (little-endian), rows bottom to top, float32 samples.
inline void write_pfm(const std::string& path, const ImageBuffer& img) {
    if (img.width <= 0 || img.height <= 0) throw invalid_input("write_pfm: empty image");
    detail::FilePtr f = detail::open_file(path, "wb");
    std::fprintf(f.get(), "PF\n%d %d\n-1.0\n", img.width, img.height);
    std::vector<float> row(static_cast<std::size_t>(img.width) * 3);
    for (int r = img.height - 1; r >= 0; --r) {
        for (int c = 0; c < img.width; ++c)
            for (int ch = 0; ch < 3; ++ch)
                row[static_cast<std::size_t>(c) * 3 + static_cast<std::size_t>(ch)] =
                    static_cast<float>(img.at(r, c, ch));
        if (std::fwrite(row.data(), sizeof(float), row.size(), f.get()) != row.size())
            throw io_error("write_pfm: short write to '" + path + "'");
    }
}

inline ImageBuffer read_pfm(const std::string& path) {
    detail::FilePtr f = detail::open_file(path, "rb");
    char magic[3] = {0, 0, 0};
    int w = 0, h = 0;
    double scale = 0.0;
    if (std::fscanf(f.get(), "%2s %d %d %lf", magic, &w, &h, &scale) != 4)
        throw parse_error("read_pfm: malformed header in '" + path + "'");
    if (std::string(magic) != "PF") throw parse_error("read_pfm: unsupported format (expected color 'PF')");
    if (w <= 0 || h <= 0) throw parse_error("read_pfm: bad dimensions");
    if (!(scale < 0.0)) throw parse_error("read_pfm: only little-endian (negative scale) files supported");
    if (std::fgetc(f.get()) == EOF) throw parse_error("read_pfm: truncated file");

    ImageBuffer img(w, h);
    std::vector<float> row(static_cast<std::size_t>(w) * 3);
    for (int r = h - 1; r >= 0; --r) {
        if (std::fread(row.data(), sizeof(float), row.size(), f.get()) != row.size())
            throw parse_error("read_pfm: truncated pixel data in '" + path + "'");
        for (int c = 0; c < w; ++c)
            for (int ch = 0; ch < 3; ++ch)
                img.at(r, c, ch) =
                    static_cast<double>(row[static_cast<std::size_t>(c) * 3 + static_cast<std::size_t>(ch)]);
    }
    return img;
}

/// 8-bit RGB PNG with gamma 2.2 encoding; linear values clamp to [0,1].
inline void write_png(const std::string& path, const ImageBuffer& img) {
    detail::FilePtr f = detail::open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw io_error("write_png: libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw io_error("write_png: libpng init failed");
    }
    std::vector<std::vector<png_byte>> rows(static_cast<std::size_t>(img.height));
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw io_error("write_png: encode failed for '" + path + "'");
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int r = 0; r < img.height; ++r) {
        rows[static_cast<std::size_t>(r)].resize(static_cast<std::size_t>(img.width) * 3);
        for (int c = 0; c < img.width; ++c)
            for (int ch = 0; ch < 3; ++ch)
                rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c) * 3 + static_cast<std::size_t>(ch)] =
                    gamma_encode_byte(img.at(r, c, ch));
        png_write_row(png, rows[static_cast<std::size_t>(r)].data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

inline ImageBuffer read_png(const std::string& path) {
    detail::FilePtr f = detail::open_file(path, "rb");
    png_byte header[8];
    if (std::fread(header, 1, 8, f.get()) != 8 || png_sig_cmp(header, 0, 8))
        throw parse_error("read_png: '" + path + "' is not a PNG file");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw io_error("read_png: libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw io_error("read_png: libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw parse_error("read_png: decode failed for '" + path + "'");
    }
    png_init_io(png, f.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    // normalize everything to 8-bit RGB
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);
    if (png_get_rowbytes(png, info) != static_cast<std::size_t>(w) * 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw parse_error("read_png: unexpected row layout in '" + path + "'");
    }
    ImageBuffer img(w, h);
    std::vector<png_byte> row(static_cast<std::size_t>(w) * 3);
    for (int r = 0; r < h; ++r) {
        png_read_row(png, row.data(), nullptr);
        for (int c = 0; c < w; ++c)
            for (int ch = 0; ch < 3; ++ch)
                img.at(r, c, ch) =
                    gamma_decode_byte(row[static_cast<std::size_t>(c) * 3 + static_cast<std::size_t>(ch)]);
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

} // namespace omg
