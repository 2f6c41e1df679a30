#include <gtest/gtest.h>

#include <filesystem>

#include "checks.hpp"

using namespace dhrs;

namespace {

struct Fixture {
    Scene scene = generate_scene("box-room");
    Bvh bvh{scene.triangles};
    GBuffer g = rasterize(bvh, {0, Camera::look_at(scene.view_eye, scene.view_target, kPi / 3, 48, 27)});
};

std::string temp_path(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "dhrs_tests";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

}  // namespace

TEST(Compose, AoFactor) {
    EXPECT_EQ(ao_factor(16, 32), 0.5);
    EXPECT_EQ(ao_factor(0, 8), 0.0);
    EXPECT_THROW(ao_factor(9, 8), std::invalid_argument);
    EXPECT_THROW(ao_factor(1, 0), std::invalid_argument);
}

TEST(Compose, ShadowsAndAoOnlyDarken) {
    Fixture f;
    const auto lit = all_lit_visibility(f.g, 1, ShadowMode::soft);
    const auto full = unoccluded_ao(f.g, 32, 1.0);
    auto dark_vis = lit;
    std::fill(dark_vis.bits.begin(), dark_vis.bits.end(), 0);
    auto half_ao = full;
    std::fill(half_ao.counts.begin(), half_ao.counts.end(), 16);
    const Image a = compose_final(f.g, lit, full, f.scene.lights);
    const Image b = compose_final(f.g, dark_vis, full, f.scene.lights);
    const Image c = compose_final(f.g, lit, half_ao, f.scene.lights);
    for (std::size_t i = 0; i < a.rgb.size(); ++i) {
        EXPECT_LE(b.rgb[i], a.rgb[i]);
        EXPECT_LE(c.rgb[i], a.rgb[i]);
    }
    EXPECT_NE(a.rgb, b.rgb);
    EXPECT_NE(a.rgb, c.rgb);
}

TEST(Compose, FractionalMatchesBinaryComposition) {
    Fixture f;
    const auto v = trace_visibility(f.g, f.bvh, f.scene.lights, ShadowMode::soft, 3);
    const auto a = trace_ao(f.g, f.bvh, 16, 1.0, 3);
    std::vector<std::vector<double>> vis(1, std::vector<double>(f.g.size()));
    std::vector<double> ao(f.g.size());
    for (std::size_t i = 0; i < f.g.size(); ++i) {
        vis[0][i] = v.bits[i] & 1;
        ao[i] = a.counts[i] / 16.0;
    }
    EXPECT_EQ(compose_fractional(f.g, vis, ao, f.scene.lights).rgb, compose_final(f.g, v, a, f.scene.lights).rgb);
}

TEST(Compose, MismatchedInputsRejected) {
    Fixture f;
    auto v = all_lit_visibility(f.g, 2, ShadowMode::soft);
    EXPECT_THROW(compose_final(f.g, v, unoccluded_ao(f.g, 8, 1.0), f.scene.lights), std::invalid_argument);
}

TEST(Prediction, SamePoseIsIdentity) {
    Fixture f;
    const auto a = trace_ao(f.g, f.bvh, 16, 1.0, 3);
    const auto r = reproject_server_buffer(a, f.g, f.g.depth);
    EXPECT_EQ(r.hole_count, 0u);
    EXPECT_EQ(r.buffer.counts, a.counts);
}

TEST(Prediction, ReprojectionFollowsTheSurface) {
    // A buffer that encodes mesh ids must read back the same mesh id after a
    // small camera move, away from mesh boundaries where depth alone cannot
    // tell surfaces apart.
    Fixture f;
    AoBuffer ids = unoccluded_ao(f.g, 255, 1.0);
    for (std::size_t i = 0; i < f.g.size(); ++i) ids.counts[i] = static_cast<std::uint8_t>(std::max(0, f.g.mesh_id[i]));
    const Trajectory t = standard_trajectory();
    const CameraPose moved{1, t.camera_at(6, kPi / 3, 48, 27)};
    const GBuffer now = rasterize(f.bvh, moved);
    const auto r = reproject_server_buffer(ids, now, f.g.depth);
    EXPECT_LT(r.hole_count, now.size() / 4);
    auto interior = [&](int x, int y) {
        const int id = now.mesh_id[now.index(x, y)];
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx)
                if (now.mesh_id[now.index(x + dx, y + dy)] != id) return false;
        return id >= 0;
    };
    std::size_t wrong = 0, checked = 0;
    for (int y = 1; y + 1 < now.height; ++y)
        for (int x = 1; x + 1 < now.width; ++x) {
            const std::size_t i = now.index(x, y);
            if (!interior(x, y) || r.holes[i]) continue;
            ++checked;
            wrong += r.buffer.counts[i] != now.mesh_id[i];
        }
    EXPECT_GT(checked, now.size() / 2);
    EXPECT_EQ(wrong, 0u);
}

TEST(Png, RoundTripWithoutGamma) {
    Image img(13, 7);
    for (std::size_t i = 0; i < img.rgb.size(); ++i) img.rgb[i] = static_cast<std::uint8_t>(i * 31);
    const auto path = temp_path("roundtrip.png");
    write_png(path, img, false);
    EXPECT_EQ(read_png(path).rgb, img.rgb);
    write_png(path, img, true);
    const Image g = read_png(path);
    EXPECT_EQ(g.width, 13);
    EXPECT_GE(g.rgb[3], img.rgb[3]);
    EXPECT_THROW(read_png(temp_path("missing.png")), std::runtime_error);
}

TEST(Ssim, IdentityAndSymmetry) {
    Fixture f;
    const Image a = compose_final(f.g, all_lit_visibility(f.g, 1, ShadowMode::soft), unoccluded_ao(f.g, 8, 1.0), f.scene.lights);
    const Image b = compose_final(f.g, trace_visibility(f.g, f.bvh, f.scene.lights, ShadowMode::soft, 1),
                                  trace_ao(f.g, f.bvh, 8, 1.0, 1), f.scene.lights);
    EXPECT_DOUBLE_EQ(ssim(a, a), 1.0);
    EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-9);
    EXPECT_LT(ssim(a, b), 1.0);
    EXPECT_NEAR(ssim(a, b), oracle::ssim_direct(a, b), 1e-9);
    EXPECT_THROW(ssim(a, Image(10, 10)), std::invalid_argument);
}

TEST(Ssim, MatchesScikitImage) {
    const auto pairs = checks::ssim_reference_pairs(DHRS_SOURCE_DIR "/tests/data/ssim");
    ASSERT_EQ(pairs.size(), 5u);
    for (const auto& p : pairs) {
        EXPECT_NEAR(p.measured, p.expected, 1e-3) << p.name;
        EXPECT_NEAR(p.measured, p.direct, 1e-9) << p.name;
    }
}

TEST(Metrics, CsvFormat) {
    RunRecord empty;
    EXPECT_EQ(to_csv(empty), std::string(kCsvHeader) + "\n");
    RunRecord r;
    FrameRow row;
    row.frame_id = 3;
    row.pass = Pass::ao;
    row.raw_bytes = 100;
    row.compressed_bytes = 40;
    row.packets = 1;
    row.delivered = true;
    row.end_to_end_ms = 16.6666666;
    r.rows.push_back(row);
    row.pass = Pass::visibility;
    row.delivered = false;
    row.end_to_end_ms.reset();
    r.rows.push_back(row);
    EXPECT_EQ(to_csv(r), std::string(kCsvHeader) + "\n3,ao,100,40,1,1,16.667,\n3,visibility,100,40,1,0,,\n");
}

TEST(Metrics, LinearFit) {
    const auto f = fit_line({1, 2, 3, 4}, {3, 5, 7, 9});
    EXPECT_NEAR(f.slope, 2.0, 1e-12);
    EXPECT_NEAR(f.intercept, 1.0, 1e-12);
    EXPECT_NEAR(f.r2, 1.0, 1e-12);
    const auto g = fit_line({1, 2, 3, 4}, {1, 3, 2, 4});
    EXPECT_NEAR(g.r2, 0.64, 1e-12);
    EXPECT_THROW(fit_line({1}, {1}), std::invalid_argument);
    EXPECT_THROW(fit_line({2, 2}, {1, 3}), std::invalid_argument);
}

TEST(Metrics, BandwidthUsesDeliveredBytes) {
    RunRecord r;
    FrameRow a;
    a.pass = Pass::visibility;
    a.delivered_wire_bytes = 1000;
    FrameRow b;
    b.pass = Pass::ao;
    b.delivered_wire_bytes = 3000;
    r.rows = {a, b};
    const auto bw = measure_bandwidth(r, 2.0);
    EXPECT_EQ(bw.total_bytes, 4000u);
    EXPECT_DOUBLE_EQ(bw.total_bps, 16000.0);
    EXPECT_DOUBLE_EQ(bw.per_pass_bps.at(Pass::ao), 12000.0);
    EXPECT_THROW(measure_bandwidth(r, 0.0), std::invalid_argument);
}

TEST(Metrics, SvgHasSeriesAndLabels) {
    const std::string svg = render_svg_plot("T <1>", "x axis", "y axis", {{"first", {0, 1}, {1, 2}}, {"second", {0}, {3}}});
    EXPECT_NE(svg.find("<svg"), std::string::npos);
    EXPECT_NE(svg.find("T &lt;1&gt;"), std::string::npos);
    EXPECT_NE(svg.find("x axis"), std::string::npos);
    EXPECT_NE(svg.find("y axis"), std::string::npos);
    EXPECT_NE(svg.find("first"), std::string::npos);
    EXPECT_NE(svg.find("second"), std::string::npos);
    EXPECT_NE(svg.find("<polyline"), std::string::npos);
    EXPECT_EQ(svg, render_svg_plot("T <1>", "x axis", "y axis", {{"first", {0, 1}, {1, 2}}, {"second", {0}, {3}}}));
}
