/// Integration tests for the forward renderer: fast path vs brute-force
/// reference, tile invariance, mode ordering and edge cases.

#include <gtest/gtest.h>

#include <cmath>

#include "omg/render.hpp"
#include "omg/scene.hpp"

namespace omg {
namespace {

std::pair<Scene, std::vector<Camera>> test_scene(int count, int px, std::uint64_t seed, int hidden = 16) {
    SceneSpec spec;
    spec.count = count;
    spec.camera_count = 3;
    spec.image_width = px;
    spec.image_height = px;
    spec.network_hidden = hidden;
    spec.light_count = 2;
    spec.seed = seed;
    return generate_synthetic_scene(spec);
}

double max_abs_diff(const ImageBuffer& a, const ImageBuffer& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

const std::vector<OutputKind> kAllOutputs{OutputKind::color, OutputKind::cross_section_map,
                                          OutputKind::transmittance_map, OutputKind::normal_map,
                                          OutputKind::albedo_map};

TEST(Render, EmptySceneIsBackground) {
    Scene scene;
    scene.background = {0.25, 0.5, 0.75};
    scene.rig.ambient = {0.1, 0.1, 0.1};
    Camera cam = look_at_camera({3, 0, 0}, {0, 0, 0}, 30.0, 16, 16, 0.1, 50.0);
    RenderRequest req = make_render_request(scene, cam, OpacityMode::baseline);
    req.outputs = {OutputKind::color, OutputKind::transmittance_map};
    const RenderOutputs out = render(req);
    const RenderOutputs ref = render_reference(req);
    for (int r = 0; r < 16; ++r)
        for (int c = 0; c < 16; ++c) {
            EXPECT_DOUBLE_EQ(out.at(OutputKind::color).at(r, c, 0), 0.25);
            EXPECT_DOUBLE_EQ(out.at(OutputKind::color).at(r, c, 2), 0.75);
            EXPECT_DOUBLE_EQ(out.at(OutputKind::transmittance_map).at(r, c, 0), 1.0);
            EXPECT_DOUBLE_EQ(ref.at(OutputKind::color).at(r, c, 1), 0.5);
        }
}

TEST(Render, SingleFragmentExpansion) {
    // one opaque on-axis gaussian: center pixel = shaded color * alpha +
    // background * (1 - alpha)
    Scene scene;
    scene.background = {0.1, 0.1, 0.1};
    scene.rig.ambient = {1, 1, 1};
    GaussianPrimitive g;
    g.mean = {0, 0, 0};
    g.scale = {0.4, 0.4, 0.4};
    g.raw_opacity = 4.0;  // o = sigmoid(4) ~ 0.982
    g.normal = {1, 0, 0};
    g.material.albedo = {0.9, 0.6, 0.3};
    scene.gaussians.push_back(g);

    // odd size: the principal point px/2 lands exactly on the center
    // pixel's center (px/2 = floor(px/2) + 0.5)
    const int px = 17;
    const Camera cam = look_at_camera({4, 0, 0}, {0, 0, 0}, 40.0, px, px, 0.1, 50.0);

    RenderRequest req = make_render_request(scene, cam, OpacityMode::baseline);
    const RenderOutputs out = render(req);

    const Vec3 view_dir = normalized(cam.position - g.mean);
    const Rgb shaded = shade(g, scene.rig, view_dir);
    const double o = sigmoid(4.0);
    const int center = px / 2;
    // G = 1 exactly at the projected mean
    EXPECT_NEAR(out.at(OutputKind::color).at(center, center, 0), shaded.r * o + 0.1 * (1 - o), 1e-12);
    EXPECT_NEAR(out.at(OutputKind::color).at(center, center, 1), shaded.g * o + 0.1 * (1 - o), 1e-12);
    EXPECT_NEAR(out.at(OutputKind::color).at(center, center, 2), shaded.b * o + 0.1 * (1 - o), 1e-12);
}

TEST(Render, MatchesReferenceOnRandomScenes) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto [scene, cams] = test_scene(32, 32, seed);
        for (OpacityMode mode : {OpacityMode::baseline, OpacityMode::omg}) {
            RenderRequest req = make_render_request(scene, cams[0], mode);
            req.outputs = kAllOutputs;
            const RenderOutputs fast = render(req);
            const RenderOutputs ref = render_reference(req);
            for (OutputKind kind : kAllOutputs) {
                EXPECT_LE(max_abs_diff(fast.at(kind), ref.at(kind)), 1e-6)
                    << "seed " << seed << " kind " << static_cast<int>(kind);
            }
        }
    }
}

TEST(Render, BitwiseInvariantUnderTileSize) {
    const auto [scene, cams] = test_scene(24, 33, 42);
    RenderRequest req = make_render_request(scene, cams[1], OpacityMode::omg);
    req.outputs = kAllOutputs;
    req.tile_size = 16;
    const RenderOutputs a = render(req);
    for (int tile : {1, 5, 8, 64}) {
        req.tile_size = tile;
        const RenderOutputs b = render(req);
        for (OutputKind kind : kAllOutputs)
            EXPECT_EQ(a.at(kind).data, b.at(kind).data) << "tile " << tile;
    }
}

TEST(Render, DeterministicAcrossRuns) {
    const auto [scene, cams] = test_scene(16, 24, 7);
    RenderRequest req = make_render_request(scene, cams[2], OpacityMode::omg);
    const RenderOutputs a = render(req);
    const RenderOutputs b = render(req);
    EXPECT_EQ(a.at(OutputKind::color).data, b.at(OutputKind::color).data);
}

TEST(Render, OmgAccumulatesNoMoreOpacityThanBaseline) {
    // per-pixel accumulated opacity 1 - T under omg <= baseline when all
    // cross sections are < 1
    for (std::uint64_t seed = 11; seed <= 13; ++seed) {
        const auto [scene, cams] = test_scene(24, 24, seed);
        RenderRequest req = make_render_request(scene, cams[0], OpacityMode::omg);
        req.outputs = {OutputKind::transmittance_map};
        const ImageBuffer t_omg = render(req).at(OutputKind::transmittance_map);
        req.mode = OpacityMode::baseline;
        const ImageBuffer t_base = render(req).at(OutputKind::transmittance_map);
        for (std::size_t i = 0; i < t_omg.data.size(); ++i) EXPECT_GE(t_omg.data[i], t_base.data[i] - 1e-12);
    }
}

TEST(Render, OmgModeWithoutNetworkThrows) {
    auto [scene, cams] = test_scene(4, 16, 3);
    scene.network.reset();
    RenderRequest req = make_render_request(scene, cams[0], OpacityMode::omg);
    EXPECT_THROW(render(req), invalid_state);
    req.mode = OpacityMode::baseline;
    EXPECT_NO_THROW(render(req));
}

TEST(Render, CrossSectionMapStaysInUnitRange) {
    const auto [scene, cams] = test_scene(16, 20, 9);
    RenderRequest req = make_render_request(scene, cams[0], OpacityMode::omg);
    req.outputs = {OutputKind::cross_section_map};
    const ImageBuffer map = render(req).at(OutputKind::cross_section_map);
    for (double v : map.data) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(Render, RejectsBadRequests) {
    const auto [scene, cams] = test_scene(4, 16, 5);
    RenderRequest req = make_render_request(scene, cams[0], OpacityMode::omg);
    req.outputs.clear();
    EXPECT_THROW(render(req), invalid_input);
    req = make_render_request(scene, cams[0], OpacityMode::omg);
    req.scene = nullptr;
    EXPECT_THROW(render(req), invalid_input);
}

} // namespace
} // namespace omg
