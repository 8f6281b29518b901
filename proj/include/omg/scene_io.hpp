#pragma once

/// @file scene_io.hpp
/// @brief Scene and view-manifest serialization. Human-readable, versioned,
/// strict: unknown fields and missing sections are rejected with the line
/// number, and doubles round-trip exactly (17 significant digits).

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "omg/errors.hpp"
#include "omg/scene.hpp"

namespace omg {

/// Shortest exact decimal form of a double (17 significant digits).
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace detail {

struct LineReader {
    std::vector<std::string> lines;
    std::size_t pos = 0;
    std::string path;

    explicit LineReader(const std::string& file_path) : path(file_path) {
        std::ifstream in(file_path);
        if (!in) throw io_error("cannot open '" + file_path + "'");
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            lines.push_back(line);
        }
    }

    [[noreturn]] void fail(std::size_t line_no, const std::string& msg) const {
        throw parse_error(path + ":" + std::to_string(line_no) + ": " + msg);
    }

    /// Next non-empty, non-comment line, or nullopt at end of file.
    bool next(std::string& out, std::size_t& line_no) {
        while (pos < lines.size()) {
            const std::string& l = lines[pos++];
            line_no = pos;  // 1-based
            std::size_t b = l.find_first_not_of(" \t");
            if (b == std::string::npos) continue;
            if (l[b] == '#') continue;
            out = l.substr(b);
            const std::size_t e = out.find_last_not_of(" \t");
            out = out.substr(0, e + 1);
            return true;
        }
        return false;
    }
};

inline bool split_key_value(const std::string& line, std::string& key, std::string& value) {
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) return false;
    key = line.substr(0, eq);
    value = line.substr(eq + 1);
    const auto trim = [](std::string& s) {
        const std::size_t b = s.find_first_not_of(" \t");
        const std::size_t e = s.find_last_not_of(" \t");
        s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    trim(key);
    trim(value);
    return !key.empty();
}

inline std::vector<double> parse_doubles(LineReader& r, std::size_t line_no, const std::string& text,
                                         std::size_t expected) {
    std::vector<double> out;
    const char* p = text.c_str();
    char* end = nullptr;
    while (*p) {
        const double v = std::strtod(p, &end);
        if (end == p) r.fail(line_no, "malformed number near '" + std::string(p).substr(0, 12) + "'");
        out.push_back(v);
        p = end;
        while (*p == ' ' || *p == '\t') ++p;
    }
    if (expected != 0 && out.size() != expected)
        r.fail(line_no, "expected " + std::to_string(expected) + " numbers, found " + std::to_string(out.size()));
    return out;
}

inline long parse_int(LineReader& r, std::size_t line_no, const std::string& text) {
    char* end = nullptr;
    const long v = std::strtol(text.c_str(), &end, 10);
    if (end == text.c_str() || *end != '\0') r.fail(line_no, "malformed integer '" + text + "'");
    return v;
}

} // namespace detail

inline constexpr const char* kSceneMagic = "omg-scene v1";
inline constexpr const char* kManifestMagic = "omg-views v1";

inline void save_scene(const std::string& path, const Scene& scene) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write '" + path + "'");
    out << kSceneMagic << "\n";
    out << "[options]\n";
    out << "background = " << format_double(scene.background.r) << ' ' << format_double(scene.background.g) << ' '
        << format_double(scene.background.b) << "\n";
    out << "opacity_activation = " << (scene.activation == OpacityActivation::sigmoid ? "sigmoid" : "softplus")
        << "\n";
    out << "[lights]\n";
    out << "ambient = " << format_double(scene.rig.ambient.r) << ' ' << format_double(scene.rig.ambient.g) << ' '
        << format_double(scene.rig.ambient.b) << "\n";
    out << "count = " << scene.rig.lights.size() << "\n";
    for (const DirectionalLight& l : scene.rig.lights) {
        out << "light = " << format_double(l.direction.x) << ' ' << format_double(l.direction.y) << ' '
            << format_double(l.direction.z) << ' ' << format_double(l.intensity.r) << ' '
            << format_double(l.intensity.g) << ' ' << format_double(l.intensity.b) << "\n";
    }
    out << "[gaussians]\n";
    out << "count = " << scene.gaussians.size() << "\n";
    for (const GaussianPrimitive& g : scene.gaussians) {
        out << "g =";
        const double vals[19] = {g.mean.x,           g.mean.y,           g.mean.z,           g.rotation.w,
                                 g.rotation.x,       g.rotation.y,       g.rotation.z,       g.scale.x,
                                 g.scale.y,          g.scale.z,          g.raw_opacity,      g.material.albedo.r,
                                 g.material.albedo.g, g.material.albedo.b, g.material.roughness,
                                 g.material.metallic, g.normal.x,         g.normal.y,         g.normal.z};
        for (double v : vals) out << ' ' << format_double(v);
        out << "\n";
    }
    out << "[network]\n";
    out << "present = " << (scene.network ? 1 : 0) << "\n";
    if (scene.network) {
        const CrossSectionNetwork& net = *scene.network;
        out << "layers =";
        for (int s : net.layer_sizes) out << ' ' << s;
        out << "\n";
        for (std::size_t l = 0; l < net.weights.size(); ++l) {
            out << "weights" << l << " =";
            for (double v : net.weights[l]) out << ' ' << format_double(v);
            out << "\n";
            out << "biases" << l << " =";
            for (double v : net.biases[l]) out << ' ' << format_double(v);
            out << "\n";
        }
    }
    if (!out) throw io_error("write failed for '" + path + "'");
}

inline Scene load_scene(const std::string& path) {
    detail::LineReader reader(path);
    std::string line;
    std::size_t line_no = 0;
    if (!reader.next(line, line_no)) throw parse_error(path + ": empty file");
    if (line != kSceneMagic)
        reader.fail(line_no, "version mismatch: expected '" + std::string(kSceneMagic) + "', found '" + line + "'");

    Scene scene;
    bool seen_options = false, seen_lights = false, seen_gaussians = false, seen_network = false;
    std::string section;

    long gaussian_count = -1, light_count = -1;
    long network_present = -1;
    std::vector<int> layer_sizes;
    std::vector<std::vector<double>> weights, biases;

    while (reader.next(line, line_no)) {
        if (line.front() == '[') {
            if (line == "[options]") {
                section = "options";
                seen_options = true;
            } else if (line == "[lights]") {
                section = "lights";
                seen_lights = true;
            } else if (line == "[gaussians]") {
                section = "gaussians";
                seen_gaussians = true;
            } else if (line == "[network]") {
                section = "network";
                seen_network = true;
            } else {
                reader.fail(line_no, "unknown section " + line);
            }
            continue;
        }
        std::string key, value;
        if (!detail::split_key_value(line, key, value)) reader.fail(line_no, "expected 'key = value'");
        if (section == "options") {
            if (key == "background") {
                const auto v = detail::parse_doubles(reader, line_no, value, 3);
                scene.background = {v[0], v[1], v[2]};
            } else if (key == "opacity_activation") {
                if (value == "sigmoid") scene.activation = OpacityActivation::sigmoid;
                else if (value == "softplus") scene.activation = OpacityActivation::softplus;
                else
                    reader.fail(line_no, "unknown opacity_activation '" + value + "'");
            } else {
                reader.fail(line_no, "unknown field '" + key + "' in [options]");
            }
        } else if (section == "lights") {
            if (key == "ambient") {
                const auto v = detail::parse_doubles(reader, line_no, value, 3);
                scene.rig.ambient = {v[0], v[1], v[2]};
            } else if (key == "count") {
                light_count = detail::parse_int(reader, line_no, value);
            } else if (key == "light") {
                const auto v = detail::parse_doubles(reader, line_no, value, 6);
                scene.rig.lights.push_back({{v[0], v[1], v[2]}, {v[3], v[4], v[5]}});
            } else {
                reader.fail(line_no, "unknown field '" + key + "' in [lights]");
            }
        } else if (section == "gaussians") {
            if (key == "count") {
                gaussian_count = detail::parse_int(reader, line_no, value);
            } else if (key == "g") {
                const auto v = detail::parse_doubles(reader, line_no, value, 19);
                GaussianPrimitive g;
                g.mean = {v[0], v[1], v[2]};
                g.rotation = {v[3], v[4], v[5], v[6]};
                g.scale = {v[7], v[8], v[9]};
                g.raw_opacity = v[10];
                g.material.albedo = {v[11], v[12], v[13]};
                g.material.roughness = v[14];
                g.material.metallic = v[15];
                g.normal = {v[16], v[17], v[18]};
                scene.gaussians.push_back(g);
            } else {
                reader.fail(line_no, "unknown field '" + key + "' in [gaussians]");
            }
        } else if (section == "network") {
            if (key == "present") {
                network_present = detail::parse_int(reader, line_no, value);
            } else if (key == "layers") {
                for (double v : detail::parse_doubles(reader, line_no, value, 0))
                    layer_sizes.push_back(static_cast<int>(v));
                if (layer_sizes.size() < 2) reader.fail(line_no, "network needs at least two layer sizes");
                weights.resize(layer_sizes.size() - 1);
                biases.resize(layer_sizes.size() - 1);
            } else if (key.rfind("weights", 0) == 0 || key.rfind("biases", 0) == 0) {
                const bool is_w = key.rfind("weights", 0) == 0;
                const std::string idx_text = key.substr(is_w ? 7 : 6);
                const long idx = detail::parse_int(reader, line_no, idx_text);
                if (layer_sizes.empty()) reader.fail(line_no, "'" + key + "' before 'layers'");
                if (idx < 0 || idx >= static_cast<long>(weights.size()))
                    reader.fail(line_no, "layer index out of range in '" + key + "'");
                const std::size_t nin = static_cast<std::size_t>(layer_sizes[static_cast<std::size_t>(idx)]);
                const std::size_t nout = static_cast<std::size_t>(layer_sizes[static_cast<std::size_t>(idx) + 1]);
                auto v = detail::parse_doubles(reader, line_no, value, is_w ? nin * nout : nout);
                (is_w ? weights : biases)[static_cast<std::size_t>(idx)] = std::move(v);
            } else {
                reader.fail(line_no, "unknown field '" + key + "' in [network]");
            }
        } else {
            reader.fail(line_no, "field outside any section");
        }
    }

    if (!seen_options) throw parse_error(path + ": missing section [options]");
    if (!seen_lights) throw parse_error(path + ": missing section [lights]");
    if (!seen_gaussians) throw parse_error(path + ": missing section [gaussians]");
    if (!seen_network) throw parse_error(path + ": missing section [network]");
    if (gaussian_count < 0) throw parse_error(path + ": [gaussians] is missing 'count'");
    if (gaussian_count != static_cast<long>(scene.gaussians.size()))
        throw parse_error(path + ": [gaussians] count mismatch: declared " + std::to_string(gaussian_count) +
                          ", found " + std::to_string(scene.gaussians.size()));
    if (light_count < 0) throw parse_error(path + ": [lights] is missing 'count'");
    if (light_count != static_cast<long>(scene.rig.lights.size()))
        throw parse_error(path + ": [lights] count mismatch");
    if (network_present < 0) throw parse_error(path + ": [network] is missing 'present'");
    if (network_present == 1) {
        if (layer_sizes.empty()) throw parse_error(path + ": network present but 'layers' missing");
        CrossSectionNetwork net;
        net.layer_sizes = layer_sizes;
        for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
            if (weights[l].empty()) throw parse_error(path + ": missing 'weights" + std::to_string(l) + "'");
            if (biases[l].empty()) throw parse_error(path + ": missing 'biases" + std::to_string(l) + "'");
        }
        net.weights = std::move(weights);
        net.biases = std::move(biases);
        scene.network = std::move(net);
    }
    return scene;
}

/// One dataset view: a camera and the path of its float target image.
struct ManifestEntry {
    Camera camera;
    std::string image_path;  // resolved against the manifest directory
};

inline void save_manifest(const std::string& path, const std::vector<std::pair<Camera, std::string>>& views) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write '" + path + "'");
    out << kManifestMagic << "\n";
    out << "count = " << views.size() << "\n";
    for (const auto& [cam, image] : views) {
        out << "view = " << image;
        const double vals[] = {cam.position.x, cam.position.y, cam.position.z,
                               cam.orientation.m[0][0], cam.orientation.m[0][1], cam.orientation.m[0][2],
                               cam.orientation.m[1][0], cam.orientation.m[1][1], cam.orientation.m[1][2],
                               cam.orientation.m[2][0], cam.orientation.m[2][1], cam.orientation.m[2][2],
                               cam.fx, cam.fy, cam.cx, cam.cy,
                               static_cast<double>(cam.width), static_cast<double>(cam.height),
                               cam.near_plane, cam.far_plane};
        for (double v : vals) out << ' ' << format_double(v);
        out << "\n";
    }
    if (!out) throw io_error("write failed for '" + path + "'");
}

inline std::vector<ManifestEntry> load_manifest(const std::string& path) {
    detail::LineReader reader(path);
    std::string line;
    std::size_t line_no = 0;
    if (!reader.next(line, line_no)) throw parse_error(path + ": empty file");
    if (line != kManifestMagic)
        reader.fail(line_no, "version mismatch: expected '" + std::string(kManifestMagic) + "'");

    const std::string dir = [&] {
        const std::size_t slash = path.find_last_of('/');
        return slash == std::string::npos ? std::string() : path.substr(0, slash + 1);
    }();

    std::vector<ManifestEntry> entries;
    long count = -1;
    while (reader.next(line, line_no)) {
        std::string key, value;
        if (!detail::split_key_value(line, key, value)) reader.fail(line_no, "expected 'key = value'");
        if (key == "count") {
            count = detail::parse_int(reader, line_no, value);
        } else if (key == "view") {
            const std::size_t sp = value.find(' ');
            if (sp == std::string::npos) reader.fail(line_no, "view entry needs an image path and camera numbers");
            ManifestEntry e;
            e.image_path = dir + value.substr(0, sp);
            const auto v = detail::parse_doubles(reader, line_no, value.substr(sp + 1), 20);
            Camera& cam = e.camera;
            cam.position = {v[0], v[1], v[2]};
            cam.orientation.m[0][0] = v[3];
            cam.orientation.m[0][1] = v[4];
            cam.orientation.m[0][2] = v[5];
            cam.orientation.m[1][0] = v[6];
            cam.orientation.m[1][1] = v[7];
            cam.orientation.m[1][2] = v[8];
            cam.orientation.m[2][0] = v[9];
            cam.orientation.m[2][1] = v[10];
            cam.orientation.m[2][2] = v[11];
            cam.fx = v[12];
            cam.fy = v[13];
            cam.cx = v[14];
            cam.cy = v[15];
            cam.width = static_cast<int>(v[16]);
            cam.height = static_cast<int>(v[17]);
            cam.near_plane = v[18];
            cam.far_plane = v[19];
            entries.push_back(std::move(e));
        } else {
            reader.fail(line_no, "unknown field '" + key + "' in manifest");
        }
    }
    if (count < 0) throw parse_error(path + ": manifest is missing 'count'");
    if (count != static_cast<long>(entries.size())) throw parse_error(path + ": manifest count mismatch");
    return entries;
}

} // namespace omg
