/// Command-line front end: scene generation, rendering, fitting, gradient
/// checking and scene comparison, glued together for scriptable
/// experiments. Exit codes: 0 success, 1 failure, 2 usage error.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "omg/omg.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

void note_artifact(const std::string& path) { std::cout << "wrote " << path << "\n"; }

omg::OpacityMode parse_mode(const std::string& name) {
    if (name == "baseline") return omg::OpacityMode::baseline;
    if (name == "omg") return omg::OpacityMode::omg;
    throw CLI::ValidationError("--mode", "unknown mode '" + name + "' (expected baseline|omg)");
}

omg::OutputKind parse_output_kind(const std::string& name) {
    if (name == "color") return omg::OutputKind::color;
    if (name == "cross_section_map") return omg::OutputKind::cross_section_map;
    if (name == "transmittance_map") return omg::OutputKind::transmittance_map;
    if (name == "normal_map") return omg::OutputKind::normal_map;
    if (name == "albedo_map") return omg::OutputKind::albedo_map;
    throw CLI::ValidationError("--outputs", "unknown output kind '" + name + "'");
}

std::string output_kind_name(omg::OutputKind kind) {
    switch (kind) {
        case omg::OutputKind::color: return "color";
        case omg::OutputKind::cross_section_map: return "cross_section_map";
        case omg::OutputKind::transmittance_map: return "transmittance_map";
        case omg::OutputKind::normal_map: return "normal_map";
        case omg::OutputKind::albedo_map: return "albedo_map";
    }
    return "?";
}

/// Deterministic camera ring for scenes that come without one (render and
/// gradcheck on a bare scene file).
std::vector<omg::Camera> default_camera_ring(const omg::Scene& scene, int width, int height, int count = 8) {
    double extent = 0.0;
    for (const omg::GaussianPrimitive& g : scene.gaussians) {
        const double reach = omg::norm(g.mean) + 3.0 * std::max({g.scale.x, g.scale.y, g.scale.z});
        extent = std::max(extent, reach);
    }
    extent = std::max(extent, 0.5);
    const double radius = 3.0 * extent;
    const double elevation = 20.0 * omg::kPi / 180.0;
    const double focal = 0.5 * width / std::tan(std::atan2(0.9 * extent, radius));
    std::vector<omg::Camera> cams;
    for (int k = 0; k < count; ++k) {
        const double az = 2.0 * omg::kPi * k / count;
        const omg::Vec3 pos{radius * std::cos(az) * std::cos(elevation), radius * std::sin(az) * std::cos(elevation),
                            radius * std::sin(elevation)};
        cams.push_back(omg::look_at_camera(pos, {0, 0, 0}, focal, width, height, 0.05 * radius, 10.0 * radius));
    }
    return cams;
}

struct ViewSet {
    std::vector<omg::Camera> cameras;
    std::vector<std::string> image_paths;
};

ViewSet load_view_set(const std::string& views_dir) {
    const std::string manifest = (fs::path(views_dir) / "manifest.txt").string();
    ViewSet set;
    for (omg::ManifestEntry& e : omg::load_manifest(manifest)) {
        set.cameras.push_back(e.camera);
        set.image_paths.push_back(e.image_path);
    }
    return set;
}

std::vector<omg::ViewData> load_dataset(const ViewSet& set) {
    std::vector<omg::ViewData> dataset;
    for (std::size_t i = 0; i < set.cameras.size(); ++i) {
        omg::ViewData v;
        v.camera = set.cameras[i];
        v.target = omg::read_pfm(set.image_paths[i]);
        if (v.target.width != v.camera.width || v.target.height != v.camera.height)
            throw omg::invalid_input("view image '" + set.image_paths[i] + "' does not match its camera resolution");
        dataset.push_back(std::move(v));
    }
    return dataset;
}

// ---------------------------------------------------------------------------
// generate

struct GenerateOptions {
    omg::SceneSpec spec;
    std::string spec_file;
    std::string out_scene;
    std::string out_views;
    std::string mode = "omg";
    bool no_png = false;
};

void apply_spec_file(omg::SceneSpec& spec, const std::string& path, const std::set<std::string>& overridden) {
    std::ifstream in(path);
    if (!in) throw omg::io_error("cannot open spec file '" + path + "'");
    const std::map<std::string, double*> doubles = {
        {"extent", &spec.extent},           {"albedo_min", &spec.albedo_min},
        {"albedo_max", &spec.albedo_max},   {"roughness_min", &spec.roughness_min},
        {"roughness_max", &spec.roughness_max}, {"metallic_min", &spec.metallic_min},
        {"metallic_max", &spec.metallic_max},   {"raw_opacity_min", &spec.raw_opacity_min},
        {"raw_opacity_max", &spec.raw_opacity_max}, {"ring_radius", &spec.ring_radius},
        {"ring_elevation_deg", &spec.ring_elevation_deg},
    };
    const std::map<std::string, int*> ints = {
        {"count", &spec.count},         {"views", &spec.camera_count}, {"width", &spec.image_width},
        {"height", &spec.image_height}, {"lights", &spec.light_count}, {"hidden", &spec.network_hidden},
    };
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::string key, value;
        if (!omg::detail::split_key_value(line, key, value)) {
            if (line.find_first_not_of(" \t") != std::string::npos)
                throw omg::parse_error(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
            continue;
        }
        if (overridden.count(key)) continue;  // explicit flags win
        if (auto it = doubles.find(key); it != doubles.end()) {
            *it->second = std::strtod(value.c_str(), nullptr);
        } else if (auto it2 = ints.find(key); it2 != ints.end()) {
            *it2->second = static_cast<int>(std::strtol(value.c_str(), nullptr, 10));
        } else if (key == "seed") {
            spec.seed = static_cast<std::uint64_t>(std::strtoull(value.c_str(), nullptr, 10));
        } else {
            throw omg::parse_error(path + ":" + std::to_string(line_no) + ": unknown spec field '" + key + "'");
        }
    }
}

int cmd_generate(const GenerateOptions& opt) {
    std::cout << "omg generate v1\n";
    try {
        omg::validate_scene_spec(opt.spec);
    } catch (const omg::invalid_input& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    const omg::OpacityMode mode = parse_mode(opt.mode);
    auto [scene, cameras] = omg::generate_synthetic_scene(opt.spec);

    fs::create_directories(opt.out_views);
    omg::save_scene(opt.out_scene, scene);
    note_artifact(opt.out_scene);

    std::vector<std::pair<omg::Camera, std::string>> manifest;
    for (std::size_t i = 0; i < cameras.size(); ++i) {
        omg::RenderRequest req = omg::make_render_request(scene, cameras[i], mode);
        const omg::RenderOutputs out = omg::render(req);
        char name[64];
        std::snprintf(name, sizeof(name), "view_%03zu.pfm", i);
        const std::string pfm_path = (fs::path(opt.out_views) / name).string();
        omg::write_pfm(pfm_path, out.at(omg::OutputKind::color));
        note_artifact(pfm_path);
        if (!opt.no_png) {
            std::snprintf(name, sizeof(name), "view_%03zu.png", i);
            const std::string png_path = (fs::path(opt.out_views) / name).string();
            omg::write_png(png_path, out.at(omg::OutputKind::color));
            note_artifact(png_path);
        }
        std::snprintf(name, sizeof(name), "view_%03zu.pfm", i);
        manifest.emplace_back(cameras[i], name);
    }
    const std::string manifest_path = (fs::path(opt.out_views) / "manifest.txt").string();
    omg::save_manifest(manifest_path, manifest);
    note_artifact(manifest_path);
    std::cout << "generated " << scene.gaussians.size() << " gaussians, " << cameras.size() << " views\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// render

struct RenderOptions {
    std::string scene_path;
    std::string views_dir;
    std::string out_dir;
    std::string mode = "omg";
    std::string outputs = "color";
    int camera_index = 0;
    int width = 256;
    int height = 256;
    int tile_size = 16;
};

int cmd_render(const RenderOptions& opt) {
    std::cout << "omg render v1\n";
    const omg::Scene scene = omg::load_scene(opt.scene_path);

    std::vector<omg::OutputKind> kinds;
    std::stringstream ss(opt.outputs);
    std::string token;
    while (std::getline(ss, token, ','))
        if (!token.empty()) kinds.push_back(parse_output_kind(token));
    if (kinds.empty()) throw CLI::ValidationError("--outputs", "no output kinds given");

    std::vector<omg::Camera> cameras;
    if (!opt.views_dir.empty()) cameras = load_view_set(opt.views_dir).cameras;
    else
        cameras = default_camera_ring(scene, opt.width, opt.height);
    if (opt.camera_index < 0 || opt.camera_index >= static_cast<int>(cameras.size()))
        throw omg::invalid_input("camera index " + std::to_string(opt.camera_index) + " out of range (have " +
                                 std::to_string(cameras.size()) + " cameras)");

    omg::RenderRequest req = omg::make_render_request(scene, cameras[static_cast<std::size_t>(opt.camera_index)],
                                                      parse_mode(opt.mode));
    req.outputs = kinds;
    req.tile_size = opt.tile_size;
    const omg::RenderOutputs out = omg::render(req);

    fs::create_directories(opt.out_dir);
    for (const auto& [kind, image] : out) {
        const std::string stem = (fs::path(opt.out_dir) / output_kind_name(kind)).string();
        omg::write_pfm(stem + ".pfm", image);
        note_artifact(stem + ".pfm");
        omg::write_png(stem + ".png", image);
        note_artifact(stem + ".png");
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// fit

struct FitOptions {
    std::string scene_init;
    std::string views_dir;
    std::string out_scene;
    std::string out_history;
    std::string mode = "omg";
    omg::FitConfig config;
};

void write_history(const std::string& path, const omg::FitHistory& history) {
    std::ofstream out(path);
    if (!out) throw omg::io_error("cannot write '" + path + "'");
    out << "omg-history v1\n";
    out << "columns = iteration loss psnr holdout_psnr\n";
    for (const omg::FitLogEntry& e : history.entries) {
        out << "row = " << e.iteration << ' ' << omg::format_double(e.loss) << ' ' << omg::format_double(e.psnr)
            << ' ' << (e.has_holdout ? omg::format_double(e.holdout_psnr) : "-") << "\n";
    }
    out << "final_train_psnr = " << omg::format_double(history.final_train_psnr) << "\n";
    if (history.has_holdout)
        out << "final_holdout_psnr = " << omg::format_double(history.final_holdout_psnr) << "\n";
}

int cmd_fit(const FitOptions& opt) {
    std::cout << "omg fit v1\n";
    omg::Scene scene = omg::load_scene(opt.scene_init);
    const ViewSet set = load_view_set(opt.views_dir);
    const std::vector<omg::ViewData> dataset = load_dataset(set);

    omg::FitConfig config = opt.config;
    config.mode = parse_mode(opt.mode);
    omg::FitResult result = omg::fit(std::move(scene), dataset, config);

    omg::save_scene(opt.out_scene, result.scene);
    note_artifact(opt.out_scene);
    write_history(opt.out_history, result.history);
    note_artifact(opt.out_history);

    std::cout << "final_train_psnr = " << omg::format_double(result.history.final_train_psnr) << "\n";
    if (result.history.has_holdout)
        std::cout << "final_holdout_psnr = " << omg::format_double(result.history.final_holdout_psnr) << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// gradcheck

struct GradcheckOptions {
    std::string scene_path;
    std::string report_path;
    std::string mode = "omg";
    std::string select = "all";
    double eps = 1e-5;
    double tol = 1e-4;
    std::uint64_t seed = 0;
    int width = 24;
    int height = 24;
    std::string corrupt;
};

int cmd_gradcheck(const GradcheckOptions& opt) {
    std::cout << "omg gradcheck v1\n";
    const omg::Scene scene = omg::load_scene(opt.scene_path);
    const omg::OpacityMode mode = parse_mode(opt.mode);

    omg::GradCheckConfig cfg;
    cfg.eps = opt.eps;
    cfg.tol = opt.tol;
    cfg.seed = opt.seed;
    if (opt.select == "all") cfg.selection = omg::ParamSelection::all;
    else if (opt.select == "opacity")
        cfg.selection = omg::ParamSelection::opacity;
    else if (opt.select == "material")
        cfg.selection = omg::ParamSelection::material;
    else if (opt.select == "network")
        cfg.selection = omg::ParamSelection::network;
    else
        throw CLI::ValidationError("--select", "unknown selection '" + opt.select + "'");
    if (!opt.corrupt.empty()) {
        if (opt.corrupt == "color") cfg.corrupt_term = 1;
        else if (opt.corrupt == "alpha")
            cfg.corrupt_term = 2;
        else if (opt.corrupt == "suffix")
            cfg.corrupt_term = 3;
        else
            throw CLI::ValidationError("--corrupt-term", "expected color|alpha|suffix");
    }

    // deterministic probe view and target
    const omg::Camera camera = default_camera_ring(scene, opt.width, opt.height).front();
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    omg::ImageBuffer target(opt.width, opt.height);
    for (double& v : target.data) v = unit(rng);

    const std::vector<omg::GradCheckReport> reports =
        omg::finite_difference_check(scene, camera, mode, scene.rig, target, cfg);

    std::size_t failed = 0;
    for (const omg::GradCheckReport& r : reports)
        if (!r.pass) ++failed;

    if (!opt.report_path.empty()) {
        std::ofstream out(opt.report_path);
        if (!out) throw omg::io_error("cannot write '" + opt.report_path + "'");
        out << "omg-gradcheck v1\n";
        out << "mode = " << opt.mode << "\n";
        out << "eps = " << omg::format_double(opt.eps) << "\n";
        out << "tol = " << omg::format_double(opt.tol) << "\n";
        out << "checked = " << reports.size() << "\n";
        out << "failed = " << failed << "\n";
        for (const omg::GradCheckReport& r : reports)
            out << "param " << r.parameter << " analytic " << omg::format_double(r.analytic) << " numeric "
                << omg::format_double(r.numeric) << " rel_error " << omg::format_double(r.rel_error) << ' '
                << (r.pass ? "pass" : "FAIL") << "\n";
        note_artifact(opt.report_path);
    }

    std::cout << "checked = " << reports.size() << "\n";
    std::cout << "failed = " << failed << "\n";
    return failed == 0 ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------------------
// compare

struct CompareOptions {
    std::string scene_a;
    std::string scene_b;
    std::string views_dir;
    std::string out_path;
    std::string mode_a = "auto";
    std::string mode_b = "auto";
};

omg::OpacityMode resolve_mode(const std::string& name, const omg::Scene& scene) {
    if (name == "auto") return scene.network ? omg::OpacityMode::omg : omg::OpacityMode::baseline;
    return parse_mode(name);
}

int cmd_compare(const CompareOptions& opt) {
    std::cout << "omg compare v1\n";
    const omg::Scene scene_a = omg::load_scene(opt.scene_a);
    const omg::Scene scene_b = omg::load_scene(opt.scene_b);
    const omg::OpacityMode mode_a = resolve_mode(opt.mode_a, scene_a);
    const omg::OpacityMode mode_b = resolve_mode(opt.mode_b, scene_b);
    const ViewSet set = load_view_set(opt.views_dir);
    const std::vector<omg::ViewData> dataset = load_dataset(set);

    std::ostringstream table;
    table << "omg-compare v1\n";
    table << "columns = view scene psnr ssim\n";

    double mean_psnr_a = 0.0, mean_ssim_a = 0.0, mean_psnr_b = 0.0, mean_ssim_b = 0.0;
    // per-channel least-squares scale of b's albedo against a's, pooled
    // over all views, then the standardized mse
    std::vector<omg::ImageBuffer> albedo_a, albedo_b;

    for (std::size_t i = 0; i < dataset.size(); ++i) {
        auto render_view = [&](const omg::Scene& scene, omg::OpacityMode mode) {
            omg::RenderRequest req = omg::make_render_request(scene, dataset[i].camera, mode);
            req.outputs = {omg::OutputKind::color, omg::OutputKind::albedo_map};
            return omg::render(req);
        };
        const omg::RenderOutputs out_a = render_view(scene_a, mode_a);
        const omg::RenderOutputs out_b = render_view(scene_b, mode_b);

        const double psnr_a = omg::psnr(out_a.at(omg::OutputKind::color), dataset[i].target);
        const double ssim_a = omg::ssim(out_a.at(omg::OutputKind::color), dataset[i].target);
        const double psnr_b = omg::psnr(out_b.at(omg::OutputKind::color), dataset[i].target);
        const double ssim_b = omg::ssim(out_b.at(omg::OutputKind::color), dataset[i].target);
        mean_psnr_a += psnr_a;
        mean_ssim_a += ssim_a;
        mean_psnr_b += psnr_b;
        mean_ssim_b += ssim_b;
        table << "row = " << i << " a " << omg::format_double(psnr_a) << ' ' << omg::format_double(ssim_a) << "\n";
        table << "row = " << i << " b " << omg::format_double(psnr_b) << ' ' << omg::format_double(ssim_b) << "\n";

        albedo_a.push_back(out_a.at(omg::OutputKind::albedo_map));
        albedo_b.push_back(out_b.at(omg::OutputKind::albedo_map));
    }
    const double n = static_cast<double>(dataset.size());
    table << "mean = a " << omg::format_double(mean_psnr_a / n) << ' ' << omg::format_double(mean_ssim_a / n) << "\n";
    table << "mean = b " << omg::format_double(mean_psnr_b / n) << ' ' << omg::format_double(mean_ssim_b / n) << "\n";

    double num[3] = {0, 0, 0}, den[3] = {0, 0, 0};
    for (std::size_t i = 0; i < albedo_a.size(); ++i)
        for (int r = 0; r < albedo_a[i].height; ++r)
            for (int c = 0; c < albedo_a[i].width; ++c)
                for (int ch = 0; ch < 3; ++ch) {
                    num[ch] += albedo_a[i].at(r, c, ch) * albedo_b[i].at(r, c, ch);
                    den[ch] += albedo_b[i].at(r, c, ch) * albedo_b[i].at(r, c, ch);
                }
    double scale[3];
    for (int ch = 0; ch < 3; ++ch) scale[ch] = den[ch] > 0.0 ? num[ch] / den[ch] : 1.0;
    double mse = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < albedo_a.size(); ++i) {
        for (std::size_t k = 0; k < albedo_a[i].data.size(); ++k) {
            const double d = scale[k % 3] * albedo_b[i].data[k] - albedo_a[i].data[k];
            mse += d * d;
        }
        count += albedo_a[i].data.size();
    }
    mse /= static_cast<double>(count);
    table << "albedo_mse = b " << omg::format_double(mse) << "\n";

    std::cout << table.str();
    if (!opt.out_path.empty()) {
        std::ofstream out(opt.out_path);
        if (!out) throw omg::io_error("cannot write '" + opt.out_path + "'");
        out << table.str();
        note_artifact(opt.out_path);
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gaussian-splat inverse renderer with a Beer-Lambert opacity model"};
    app.require_subcommand(1);

    GenerateOptions gen;
    CLI::App* generate = app.add_subcommand("generate", "Generate a synthetic scene and ground-truth views");
    generate->add_option("--out-scene", gen.out_scene, "Scene file to write")->required();
    generate->add_option("--out-views", gen.out_views, "Directory for view images and manifest")->required();
    generate->add_option("--spec", gen.spec_file, "Spec file of key = value lines (flags override)");
    generate->add_option("--mode", gen.mode, "Opacity mode for ground-truth rendering (baseline|omg)");
    generate->add_option("--seed", gen.spec.seed, "Generator seed");
    generate->add_option("--count", gen.spec.count, "Gaussian count")->check(CLI::Range(1, 1 << 20));
    generate->add_option("--views", gen.spec.camera_count, "Camera count")->check(CLI::Range(1, 4096));
    generate->add_option("--width", gen.spec.image_width, "View width")->check(CLI::Range(1, 16384));
    generate->add_option("--height", gen.spec.image_height, "View height")->check(CLI::Range(1, 16384));
    generate->add_option("--extent", gen.spec.extent, "Scene radius");
    generate->add_option("--lights", gen.spec.light_count, "Directional light count")->check(CLI::Range(0, 64));
    generate->add_option("--hidden", gen.spec.network_hidden, "Cross-section network hidden width")
        ->check(CLI::Range(1, 4096));
    generate->add_flag("--no-png", gen.no_png, "Skip the PNG previews");

    RenderOptions ren;
    CLI::App* render_cmd = app.add_subcommand("render", "Render one view of a scene");
    render_cmd->add_option("--scene", ren.scene_path, "Scene file")->required();
    render_cmd->add_option("--views", ren.views_dir, "Views directory for cameras (default: built-in ring)");
    render_cmd->add_option("--camera-index", ren.camera_index, "Camera index");
    render_cmd->add_option("--mode", ren.mode, "Opacity mode (baseline|omg)");
    render_cmd->add_option("--outputs", ren.outputs, "Comma list: color,cross_section_map,transmittance_map,normal_map,albedo_map");
    render_cmd->add_option("--out", ren.out_dir, "Output directory")->required();
    render_cmd->add_option("--width", ren.width, "Image width for the built-in camera ring");
    render_cmd->add_option("--height", ren.height, "Image height for the built-in camera ring");
    render_cmd->add_option("--tile-size", ren.tile_size, "Renderer tile size")->check(CLI::Range(1, 4096));

    FitOptions fit_opt;
    CLI::App* fit_cmd = app.add_subcommand("fit", "Fit a scene to a view dataset");
    fit_cmd->add_option("--scene-init", fit_opt.scene_init, "Initial scene file")->required();
    fit_cmd->add_option("--views", fit_opt.views_dir, "Views directory (manifest + float images)")->required();
    fit_cmd->add_option("--mode", fit_opt.mode, "Opacity mode (baseline|omg)");
    fit_cmd->add_option("--iters", fit_opt.config.iterations, "Optimization steps")->check(CLI::Range(0, 1 << 24));
    fit_cmd->add_option("--lr-opacity", fit_opt.config.lr_opacity, "Opacity learning rate");
    fit_cmd->add_option("--lr-material", fit_opt.config.lr_material, "Material learning rate");
    fit_cmd->add_option("--lr-network", fit_opt.config.lr_network, "Network learning rate");
    fit_cmd->add_option("--seed", fit_opt.config.seed, "View-order seed");
    fit_cmd->add_option("--views-per-step", fit_opt.config.views_per_step, "Views per optimization step")
        ->check(CLI::Range(1, 4096));
    fit_cmd->add_option("--log-interval", fit_opt.config.log_interval, "History log interval");
    fit_cmd->add_option("--holdout", fit_opt.config.holdout, "Hold out the last N views");
    fit_cmd->add_option("--out-scene", fit_opt.out_scene, "Fitted scene file")->required();
    fit_cmd->add_option("--out-history", fit_opt.out_history, "History table file")->required();

    GradcheckOptions gc;
    CLI::App* gradcheck = app.add_subcommand("gradcheck", "Verify analytic gradients against finite differences");
    gradcheck->add_option("--scene", gc.scene_path, "Scene file")->required();
    gradcheck->add_option("--mode", gc.mode, "Opacity mode (baseline|omg)");
    gradcheck->add_option("--eps", gc.eps, "Central-difference step");
    gradcheck->add_option("--tol", gc.tol, "Relative-error tolerance");
    gradcheck->add_option("--seed", gc.seed, "Probe target seed");
    gradcheck->add_option("--select", gc.select, "Parameter class: all|opacity|material|network");
    gradcheck->add_option("--report", gc.report_path, "Report file");
    gradcheck->add_option("--width", gc.width, "Probe view width")->check(CLI::Range(1, 1024));
    gradcheck->add_option("--height", gc.height, "Probe view height")->check(CLI::Range(1, 1024));
#ifdef OMG_TEST_HOOKS
    gradcheck->add_option("--corrupt-term", gc.corrupt, "Fault injection: color|alpha|suffix");
#endif

    CompareOptions cmp;
    CLI::App* compare = app.add_subcommand("compare", "Compare two scenes against a view dataset");
    compare->add_option("--scene-a", cmp.scene_a, "Reference scene")->required();
    compare->add_option("--scene-b", cmp.scene_b, "Candidate scene")->required();
    compare->add_option("--views", cmp.views_dir, "Views directory")->required();
    compare->add_option("--out", cmp.out_path, "Comparison table file");
    compare->add_option("--mode-a", cmp.mode_a, "Opacity mode for scene a (auto|baseline|omg)");
    compare->add_option("--mode-b", cmp.mode_b, "Opacity mode for scene b (auto|baseline|omg)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (generate->parsed()) {
            std::set<std::string> overridden;
            for (const char* name : {"--count", "--views", "--width", "--height", "--extent", "--lights", "--hidden",
                                     "--seed"}) {
                if (generate->count(name) > 0) overridden.insert(std::string(name).substr(2));
            }
            if (!gen.spec_file.empty()) apply_spec_file(gen.spec, gen.spec_file, overridden);
            return cmd_generate(gen);
        }
        if (render_cmd->parsed()) return cmd_render(ren);
        if (fit_cmd->parsed()) return cmd_fit(fit_opt);
        if (gradcheck->parsed()) return cmd_gradcheck(gc);
        if (compare->parsed()) return cmd_compare(cmp);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}
