#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "checks.hpp"

using namespace dhrs;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "dhrs_config_tests";
    fs::create_directories(dir);
    return dir / name;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(DHRS_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, DefaultsRoundTripThroughJson) {
    const Config c = config_from_json(json::object());
    EXPECT_EQ(to_json(c), to_json(Config{}));
    EXPECT_EQ(to_json(config_from_json(to_json(c))), to_json(c));
    EXPECT_EQ(c.render.width, 320);
    EXPECT_EQ(c.render.height, 180);
    EXPECT_EQ(c.trajectory.ticks, 300u);
}

TEST(Config, UnknownKeysAreRejectedWithTheirPath) {
    try {
        config_from_json(json{{"render", {{"widht", 10}}}});
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("render.widht"), std::string::npos);
    }
    EXPECT_THROW(config_from_json(json{{"bogus", 1}}), ConfigError);
}

TEST(Config, RangesAreEnforced) {
    EXPECT_THROW(config_from_json(json{{"render", {{"width", 8}}}}), ConfigError);
    EXPECT_THROW(config_from_json(json{{"render", {{"ao_radius", 0.0}}}}), ConfigError);
    EXPECT_THROW(config_from_json(json{{"render", {{"ao_rays", 256}}}}), ConfigError);
    EXPECT_THROW(config_from_json(json{{"uplink", {{"loss", 1.5}}}}), ConfigError);
    EXPECT_THROW(config_from_json(json{{"render", {{"shadow_mode", "fuzzy"}}}}), ConfigError);
    EXPECT_THROW(config_from_json(json{{"transport", {{"codec", "zip"}}}}), ConfigError);
    EXPECT_THROW(config_from_json(json{{"scene", {{"name", "moon"}}}}), ConfigError);
    EXPECT_THROW(config_from_json(json{{"render", {{"width", "wide"}}}}), ConfigError);
    EXPECT_NO_THROW(config_from_json(json{{"uplink", {{"loss", 1.0}}}}));
}

TEST(Config, OverridesSetNestedKeys) {
    json j = json::object();
    apply_override(j, "render.ao_rays=64");
    apply_override(j, "client.mode=remote");
    apply_override(j, "transport.codec=\"identity\"");
    const Config c = config_from_json(j);
    EXPECT_EQ(c.render.ao_rays, 64);
    EXPECT_EQ(c.client.mode, ClientMode::remote);
    EXPECT_EQ(c.transport.codec, Codec::identity);
    EXPECT_THROW(apply_override(j, "novalue"), ConfigError);
    EXPECT_THROW(apply_override(j, "a..b=1"), ConfigError);
}

TEST(Config, RelativePathsResolveAgainstTheConfigFile) {
    const auto dir = scratch("rel");
    fs::create_directories(dir);
    {
        std::ofstream t(dir / "trace.txt");
        t << "5\n7\n";
        std::ofstream c(dir / "cfg.json");
        c << R"({"uplink": {"trace_file": "trace.txt"}})";
    }
    const Config c = load_config((dir / "cfg.json").string());
    EXPECT_EQ(fs::path(c.uplink.trace_file), (dir / "trace.txt").lexically_normal());
    {
        std::ofstream c2(dir / "missing.json");
        c2 << R"({"uplink": {"trace_file": "nope.txt"}})";
    }
    EXPECT_THROW(load_config((dir / "missing.json").string()), ConfigError);
}

TEST(Config, ShippedConfigsLoad) {
    for (const auto& e : fs::directory_iterator(DHRS_SOURCE_DIR "/configs"))
        if (e.path().extension() == ".json") { EXPECT_NO_THROW(load_config(e.path().string())) << e.path(); }
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(run_cli("--print-config"), 0);
    EXPECT_EQ(run_cli("--set render.width=4 sim"), 1);
    EXPECT_EQ(run_cli("--config /nonexistent.json sim"), 1);
    EXPECT_EQ(run_cli("--bogus-flag"), 1);
    const auto bad = scratch("bad_soup.txt");
    {
        std::ofstream f(bad);
        f << "v 0 0\n";
    }
    EXPECT_EQ(run_cli("--set scene.file=" + bad.string() + " sim"), 1);
    const auto out = scratch("cli_out");
    EXPECT_EQ(run_cli("--set trajectory.ticks=3 --set render.width=32 --set render.height=18 --set render.ao_rays=4 "
                      "--set output.dir=" + out.string() + " sim"),
              0);
    EXPECT_TRUE(fs::exists(out / "run.csv"));
    // A suite whose check cannot pass on a tiny run reports status 3.
    EXPECT_EQ(run_cli("--set render.width=32 --set render.height=18 --set render.ao_rays=4 --set output.dir=" +
                      out.string() + " suite size-vs-fps --ticks 4 --sizes 1000,2000 --check"),
              3);
}

TEST(Cli, DenoiseSubcommand) {
    const auto dir = scratch("denoise");
    fs::create_directories(dir);
    const Scene s = generate_scene("box-room");
    const Bvh bvh(s.triangles);
    const GBuffer g = rasterize(bvh, {0, Camera::look_at(s.view_eye, s.view_target, kPi / 3, 32, 18)});
    const AoBuffer a = trace_ao(g, bvh, 8, 1.0, 1);
    {
        const auto bytes = serialize_gbuffer(g);
        std::ofstream f(dir / "g0.dhrg", std::ios::binary);
        f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        std::ofstream p(dir / "ao0.raw", std::ios::binary);
        p.write(reinterpret_cast<const char*>(a.counts.data()), static_cast<std::streamsize>(a.counts.size()));
    }
    EXPECT_EQ(run_cli("denoise --gbuffer " + (dir / "g0.dhrg").string() + " --ao " + (dir / "ao0.raw").string() +
                      " --rays 8 --out " + (dir / "out").string()),
              0);
    EXPECT_EQ(fs::file_size(dir / "out" / "ao0.filtered.raw"), a.counts.size());
}
