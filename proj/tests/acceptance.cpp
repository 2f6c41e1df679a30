// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
// Usage: dhrs_acceptance [output dir]

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "dhrs/suite.hpp"

#include "checks.hpp"

using namespace dhrs;
namespace fs = std::filesystem;

namespace {

struct Line {
    bool ok = true;
    std::ostringstream detail;

    void require(bool cond, const std::string& what) {
        ok = ok && cond;
        if (detail.tellp() > 0) detail << "; ";
        detail << (cond ? "" : "FAILED ") << what;
    }
};

int failures = 0;

void report(int id, const std::string& title, Line& l, double seconds) {
    failures += !l.ok;
    std::printf("%s criterion %d: %s [%s] (%.0f s)\n", l.ok ? "PASS" : "FAIL", id, title.c_str(),
                l.detail.str().c_str(), seconds);
    std::fflush(stdout);
}

template <typename F>
void criterion(int id, const std::string& title, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Line l;
    try {
        body(l);
    } catch (const std::exception& e) {
        l.require(false, std::string("exception: ") + e.what());
    }
    report(id, title, l, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
}

std::string f6(double v) { return detail::fmt6(v); }

void add_suite(Line& l, const SuiteResult& r) {
    for (const auto& c : r.checks) l.require(c.passed, c.name + (c.detail.empty() ? "" : " (" + c.detail + ")"));
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes every frame as PNG plus the CSV; returns the directory.
fs::path write_run(const Config& c, const fs::path& dir) {
    fs::create_directories(dir);
    RunOptions o;
    o.on_frame = [&](std::uint32_t t, const Image& img) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%05u.png", t);
        write_png((dir / name).string(), img);
    };
    const RunResult r = run_sim(c, o);
    write_text_file((dir / "run.csv").string(), to_csv(r.record));
    return dir;
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path out = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_out");
    fs::create_directories(out);
    const Config standard = load_config(DHRS_SOURCE_DIR "/configs/standard.json");
    double ssim_pred_200 = 0.0;

    criterion(1, "hybrid/remote delivered bytes on the standard trajectory", [&](Line& l) {
        SuiteOptions o;
        o.out_dir = (out / "bandwidth").string();
        const SuiteResult r = suite_bandwidth(standard, o);
        add_suite(l, r);
    });

    criterion(2, "latency hiding by client-side prediction", [&](Line& l) {
        SuiteOptions o;
        o.out_dir = (out / "latency").string();
        const SuiteResult r = suite_latency(standard, o);
        add_suite(l, r);
        for (const auto& p : r.summary["points"])
            if (p["delay_ms"].get<double>() == 200.0 && p["prediction"].get<bool>())
                ssim_pred_200 = p["mean_ssim"].get<double>();
    });

    criterion(3, "replayed trace with 12 ms mean", [&](Line& l) {
        Config c = standard;
        c.uplink.trace_file = DHRS_SOURCE_DIR "/configs/latency_trace_12ms.txt";
        c.client.prediction = true;
        const std::vector<Image> reference = zero_latency_frames(c);
        RunOptions o;
        o.reference = &reference;
        const RunResult r = run_sim(c, o);
        write_text_file((out / "trace_12ms.csv").string(), to_csv(r.record));
        const double s = *r.record.mean_ssim();
        l.require(s >= 0.87, "ssim = " + f6(s) + " >= 0.87");
        l.require(s > ssim_pred_200, "above 200 ms with prediction (" + f6(ssim_pred_200) + ")");
    });

    criterion(4, "AO correctness", [&](Line& l) {
        const auto cw = checks::corner_wall_convergence(32, 64, 100.0, 1000000);
        l.require(std::abs(cw.filtered - cw.oracle) <= 0.05,
                  "corner pixel " + f6(cw.filtered) + " vs oracle " + f6(cw.oracle) + " at x = " + f6(cw.distance));
        l.require(std::abs(cw.filtered - 0.5) <= 0.05, "within 0.5 +- 0.05");

        std::vector<Triangle> floor;
        detail::add_box(floor, {-50, -1, -50}, {50, 0, 50}, 0, {0.5, 0.5, 0.5});
        const Bvh open(floor);
        int open_min = 64;
        for (std::uint32_t px = 0; px < 200; ++px)
            open_min = std::min(open_min, count_unoccluded(open, {0, 0, 0}, {0, 1, 0}, 1.0, 9, 0, px, 64));
        l.require(open_min == 64, "empty hemisphere gives N (min " + std::to_string(open_min) + ")");

        std::vector<Triangle> shell;
        detail::add_box(shell, {-1, -1, -1}, {1, 1, 1}, 0, {0.5, 0.5, 0.5});
        const Bvh closed(shell);
        int closed_max = 0;
        for (std::uint32_t px = 0; px < 200; ++px)
            closed_max = std::max(closed_max, count_unoccluded(closed, {0, -0.9, 0}, {0, 1, 0}, 10.0, 9, 0, px, 64));
        l.require(closed_max == 0, "enclosed point gives 0 (max " + std::to_string(closed_max) + ")");
    });

    criterion(5, "AO radius and ray count", [&](Line& l) {
        Config c = load_config(DHRS_SOURCE_DIR "/configs/ao_params.json");
        SuiteOptions o;
        o.out_dir = (out / "ao_params").string();
        add_suite(l, suite_ao_params(c, o));
    });

    criterion(6, "frame size vs delivered fps", [&](Line& l) {
        Config c = load_config(DHRS_SOURCE_DIR "/configs/size_sweep.json");
        SuiteOptions o;
        o.out_dir = (out / "size_fps").string();
        add_suite(l, suite_size_fps(c, o));
    });

    criterion(7, "denoiser invariants", [&](Line& l) {
        const auto range = checks::denoise_range(1000, 2024);
        l.require(range.out_of_range == 0 && range.count_violations == 0,
                  "range on " + std::to_string(range.frames) + " frames (" + std::to_string(range.out_of_range) +
                      " float, " + std::to_string(range.count_violations) + " count violations)");
        double fp = 0.0;
        for (float v : {0.0f, 0.25f, 0.6f, 1.0f}) fp = std::max(fp, checks::denoise_fixed_point_error(64, v));
        l.require(fp == 0.0, "constant fixed point error " + f6(fp));
        const auto st = checks::denoise_temporal_std(64, 64, 32, 0.5, 11);
        l.require(st.output_std <= 0.25 * st.input_std,
                  "temporal std " + f6(st.output_std) + " vs input " + f6(st.input_std));

        const World world(load_scene(standard.scene));
        ServerRenderer server(world, standard);
        std::uint64_t raw = 0, filtered = 0;
        for (std::uint32_t t = 0; t < standard.trajectory.ticks; ++t) {
            const ServerFrame f = server.render(detail::pose_at(standard, t));
            raw += encode_frame(*f.raw_ao, standard.transport.codec).header.compressed_size;
            filtered += encode_frame(*f.ao, standard.transport.codec).header.compressed_size;
        }
        l.require(filtered <= raw, "filtered AO " + std::to_string(filtered) + " B vs raw " + std::to_string(raw) + " B");
    });

    criterion(8, "transport", [&](Line& l) {
        const auto rt = checks::codec_round_trip(1000, 99);
        l.require(rt.failures == 0, std::to_string(rt.buffers) + " round trips, " + std::to_string(rt.failures) + " failed");
        const auto cl = checks::completion_under_loss(10000, 8, 0.03, 5);
        l.require(std::abs(cl.z) <= 3.0, "completion " + std::to_string(cl.complete) + "/" + std::to_string(cl.frames) +
                                              " vs (1-p)^k = " + f6(cl.expected_rate) + ", z = " + f6(cl.z));
        RunOptions keep;
        keep.keep_frames = true;
        const Config ideal = detail::ideal_link(standard);
        const bool same = checks::frames_identical(run_sim(ideal, keep).frames, run_direct(ideal, keep).frames);
        l.require(same, "zero-latency zero-loss run bit-identical to the transport-free pipeline");
    });

    criterion(9, "oracle equivalence", [&](Line& l) {
        std::size_t closest = 0, occl = 0, rays = 0;
        for (const char* name : {"box-room", "columns-hall"}) {
            const auto b = checks::compare_bvh(generate_scene(name), 5000, 31);
            closest += b.closest_mismatches;
            occl += b.occlusion_mismatches;
            rays += b.rays;
        }
        l.require(closest == 0 && occl == 0, "BVH vs scan on " + std::to_string(rays) + " rays: " +
                                                 std::to_string(closest) + " closest, " + std::to_string(occl) +
                                                 " any-hit mismatches");
        std::size_t ids = 0, px = 0;
        double pos = 0.0;
        for (std::uint32_t t : {0u, 90u, 200u}) {
            const Scene s = generate_scene("box-room");
            const auto g = checks::compare_gbuffer(s, standard.trajectory.camera_at(t, standard.fov_rad(), 160, 90));
            ids += g.id_mismatches;
            px += g.pixels;
            pos = std::max(pos, g.max_position_error);
        }
        l.require(ids == 0 && pos <= 1e-4, "G-buffer vs primary rays on " + std::to_string(px) + " px: " +
                                               std::to_string(ids) + " id mismatches, max position error " +
                                               std::to_string(pos));
        const auto pairs = checks::ssim_reference_pairs(DHRS_SOURCE_DIR "/tests/data/ssim");
        double worst = 0.0;
        for (const auto& p : pairs) worst = std::max(worst, std::abs(p.measured - p.expected));
        l.require(pairs.size() == 5 && worst <= 1e-3, "SSIM vs scikit-image on " + std::to_string(pairs.size()) +
                                                          " pairs, max diff " + f6(worst));
    });

    criterion(10, "determinism", [&](Line& l) {
        Config c = checks::small_config(24, 96, 54);
        c.uplink.link.one_way_delay_ms = 40;
        c.downlink.link.jitter_ms = 8;
        c.downlink.link.loss_prob = 0.02;
        c.downlink.link.seed = 3;
        caches().clear();
        const fs::path a = write_run(c, out / "determinism_a");
        caches().clear();
        const fs::path b = write_run(c, out / "determinism_b");
        std::size_t files = 0, differing = 0;
        for (const auto& e : fs::directory_iterator(a)) {
            ++files;
            differing += slurp(e.path()) != slurp(b / e.path().filename());
        }
        l.require(files == c.trajectory.ticks + 1 && differing == 0,
                  std::to_string(files) + " files compared, " + std::to_string(differing) + " differ");
    });

    std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 3 : 0;
}
