#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dhrs/pipeline.hpp"

namespace dhrs {

struct SuiteOptions {
    std::string out_dir = "out";
    bool write_png = false;
    std::optional<std::uint32_t> ticks;      // overrides trajectory.ticks
    std::vector<std::uint32_t> frame_sizes;  // size-vs-fps; empty = defaults
    double sweep_bandwidth_bps = 0.0;        // size-vs-fps; 0 = downlink cap or 40 Mbit/s
    std::vector<int> ao_rays = {8, 16, 32, 64};
    std::vector<double> ao_radii = {0.1, 1.0, 2.0, 5.0};
};

struct SuiteCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct SuiteResult {
    std::string name;
    std::vector<std::string> files;
    std::vector<SuiteCheck> checks;
    json summary = json::object();

    bool passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const SuiteCheck& c) { return c.passed; });
    }
};

inline const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names = {"bandwidth", "latency-sweep", "size-vs-fps", "ao-params"};
    return names;
}

namespace detail {

inline std::string emit(SuiteResult& r, const SuiteOptions& o, const std::string& file, const std::string& text) {
    std::filesystem::create_directories(o.out_dir);
    const std::string path = (std::filesystem::path(o.out_dir) / file).string();
    write_text_file(path, text);
    r.files.push_back(path);
    return path;
}

inline Config suite_config(const Config& base, const SuiteOptions& o) {
    Config c = base;
    if (o.ticks) c.trajectory.ticks = *o.ticks;
    c.output.png = false;
    return c;
}

/// Zero-latency, lossless, uncapped variant of a config.
inline Config ideal_link(Config c) {
    for (LinkSection* s : {&c.uplink, &c.downlink}) {
        const auto seed = s->link.seed;
        s->link = LinkConfig{};
        s->link.seed = seed;
        s->trace_file.clear();
    }
    c.transport.frame_size_bytes = 0;
    return c;
}

inline double mean_occlusion(const AoBuffer& a, const GBuffer& g) {
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!g.valid(i)) continue;
        s += 1.0 - static_cast<double>(a.counts[i]) / a.rays;
        ++n;
    }
    return n ? s / static_cast<double>(n) : 0.0;
}

inline std::string fmt6(double v) {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(6) << v;
    return ss.str();
}

}  // namespace detail

/// Hybrid (visibility + AO) against remote (full color) delivered bytes.
inline SuiteResult suite_bandwidth(const Config& base, const SuiteOptions& o) {
    SuiteResult r;
    r.name = "bandwidth";
    Config hybrid = detail::suite_config(base, o);
    hybrid.client.mode = ClientMode::hybrid;
    Config remote = hybrid;
    remote.client.mode = ClientMode::remote;
    const RunResult h = run_sim(hybrid);
    const RunResult m = run_sim(remote);
    detail::emit(r, o, "bandwidth_hybrid.csv", to_csv(h.record));
    detail::emit(r, o, "bandwidth_remote.csv", to_csv(m.record));
    const double hb = static_cast<double>(h.record.channel_delivered_bytes);
    const double mb = static_cast<double>(m.record.channel_delivered_bytes);
    const double ratio = mb > 0 ? hb / mb : 0.0;
    const BandwidthReport hr = measure_bandwidth(h.record, h.record.duration_s);
    const BandwidthReport mr = measure_bandwidth(m.record, m.record.duration_s);
    std::ostringstream csv;
    csv << "mode,delivered_bytes,mean_bps,visibility_bps,ao_bps,color_bps\n";
    auto pass_bps = [](const BandwidthReport& b, Pass p) {
        auto it = b.per_pass_bps.find(p);
        return format_number(it == b.per_pass_bps.end() ? 0.0 : it->second);
    };
    csv << "hybrid," << h.record.channel_delivered_bytes << ',' << format_number(hr.total_bps) << ','
        << pass_bps(hr, Pass::visibility) << ',' << pass_bps(hr, Pass::ao) << ',' << pass_bps(hr, Pass::color) << '\n';
    csv << "remote," << m.record.channel_delivered_bytes << ',' << format_number(mr.total_bps) << ','
        << pass_bps(mr, Pass::visibility) << ',' << pass_bps(mr, Pass::ao) << ',' << pass_bps(mr, Pass::color) << '\n';
    csv << "ratio," << detail::fmt6(ratio) << ",,,,\n";
    detail::emit(r, o, "bandwidth_summary.csv", csv.str());

    std::vector<PlotSeries> series;
    for (const auto* run : {&h, &m}) {
        PlotSeries s{run == &h ? "hybrid" : "remote", {}, {}};
        std::map<std::uint32_t, double> per_frame;
        for (const auto& row : run->record.rows) per_frame[row.frame_id] += static_cast<double>(row.delivered_wire_bytes);
        double cum = 0.0;
        for (const auto& [f, b] : per_frame) {
            cum += b;
            s.x.push_back(f);
            s.y.push_back(cum / 1e6);
        }
        series.push_back(std::move(s));
    }
    detail::emit(r, o, "bandwidth.svg",
                 render_svg_plot("Cumulative delivered bytes", "frame", "megabytes", series));
    r.summary = {{"hybrid_bytes", h.record.channel_delivered_bytes},
                 {"remote_bytes", m.record.channel_delivered_bytes},
                 {"ratio", ratio}};
    r.checks.push_back({"hybrid/remote ratio in [0.15, 0.40]", ratio >= 0.15 && ratio <= 0.40,
                        "ratio = " + detail::fmt6(ratio)});
    return r;
}

struct LatencyPoint {
    double delay_ms = 0.0;
    bool prediction = false;
    double mean_ssim = 0.0;
};

/// Runs a config against the zero-latency reference frames of the same scene
/// and trajectory.
inline std::vector<Image> zero_latency_frames(const Config& c) {
    Config ref = detail::ideal_link(c);
    ref.client.mode = ClientMode::hybrid;
    ref.client.prediction = true;
    RunOptions keep;
    keep.keep_frames = true;
    return run_sim(ref, keep).frames;
}

inline SuiteResult suite_latency(const Config& base, const SuiteOptions& o) {
    SuiteResult r;
    r.name = "latency-sweep";
    Config cfg = detail::suite_config(base, o);
    cfg.client.mode = ClientMode::hybrid;
    cfg.uplink.trace_file.clear();
    const std::vector<Image> reference = zero_latency_frames(cfg);
    RunOptions opt;
    opt.reference = &reference;
    std::vector<LatencyPoint> points;
    std::ostringstream csv;
    csv << "delay_ms,prediction,mean_ssim,min_ssim,delivered_visibility,delivered_ao\n";
    for (double d : {0.0, 50.0, 100.0, 200.0}) {
        for (bool p : {true, false}) {
            Config c = cfg;
            c.uplink.link.one_way_delay_ms = d;
            c.client.prediction = p;
            const RunResult run = run_sim(c, opt);
            const std::string tag = "latency_" + std::to_string(static_cast<int>(d)) + "ms_" + (p ? "pred" : "nopred");
            detail::emit(r, o, tag + ".csv", to_csv(run.record));
            const double mean = *run.record.mean_ssim();
            const double mn = *std::min_element(run.record.ssim_per_tick.begin(), run.record.ssim_per_tick.end());
            csv << static_cast<int>(d) << ',' << (p ? 1 : 0) << ',' << detail::fmt6(mean) << ',' << detail::fmt6(mn)
                << ',' << run.record.delivered_frames(Pass::visibility) << ','
                << run.record.delivered_frames(Pass::ao) << '\n';
            points.push_back({d, p, mean});
        }
    }
    detail::emit(r, o, "latency_summary.csv", csv.str());
    PlotSeries with{"with prediction", {}, {}}, without{"without prediction", {}, {}};
    for (const auto& pt : points) {
        PlotSeries& s = pt.prediction ? with : without;
        s.x.push_back(pt.delay_ms);
        s.y.push_back(pt.mean_ssim);
    }
    detail::emit(r, o, "latency.svg", render_svg_plot("SSIM vs. uplink delay", "delay (ms)", "mean SSIM", {with, without}));

    json pts = json::array();
    for (const auto& pt : points) pts.push_back({{"delay_ms", pt.delay_ms}, {"prediction", pt.prediction}, {"mean_ssim", pt.mean_ssim}});
    r.summary = {{"points", pts}};
    auto find = [&](double d, bool p) {
        for (const auto& pt : points)
            if (pt.delay_ms == d && pt.prediction == p) return pt.mean_ssim;
        return 0.0;
    };
    for (double d : {50.0, 100.0, 200.0}) {
        const double gain = find(d, true) - find(d, false);
        r.checks.push_back({"prediction gain at " + std::to_string(static_cast<int>(d)) + " ms >= 0.01", gain >= 0.01,
                            "gain = " + detail::fmt6(gain)});
    }
    r.checks.push_back({"SSIM with prediction at 200 ms >= 0.80", find(200.0, true) >= 0.80,
                        "ssim = " + detail::fmt6(find(200.0, true))});
    return r;
}

struct SizeFpsPoint {
    std::uint32_t size = 0;
    double fps = 0.0;
    bool link_limited = false;
};

inline std::vector<std::uint32_t> default_frame_sizes() {
    std::vector<std::uint32_t> s;
    for (std::uint32_t k = 32; k <= 96; k += 8) s.push_back(k * 1000);
    return s;
}

inline SuiteResult suite_size_fps(const Config& base, const SuiteOptions& o) {
    SuiteResult r;
    r.name = "size-vs-fps";
    Config cfg = detail::suite_config(base, o);
    const double cap = o.sweep_bandwidth_bps > 0     ? o.sweep_bandwidth_bps
                       : cfg.downlink.link.bandwidth_bps > 0 ? cfg.downlink.link.bandwidth_bps
                                                             : 40e6;
    cfg.downlink.link.bandwidth_bps = cap;
    const auto sizes = o.frame_sizes.empty() ? default_frame_sizes() : o.frame_sizes;
    std::vector<SizeFpsPoint> points;
    std::ostringstream csv;
    csv << "frame_size_bytes,fps,mean_payload_bytes,link_limited\n";
    for (std::uint32_t s : sizes) {
        Config c = cfg;
        c.transport.frame_size_bytes = s;
        const RunResult run = run_sim(c);
        double fps = kInfinity;
        std::vector<Pass> passes = c.client.mode == ClientMode::remote ? std::vector<Pass>{Pass::color}
                                                                       : std::vector<Pass>{Pass::visibility, Pass::ao};
        for (Pass p : passes) fps = std::min(fps, run.record.fps(p));
        double payload = 0.0;
        for (const auto& row : run.record.rows) payload += static_cast<double>(std::max<std::uint64_t>(row.compressed_bytes, s));
        if (!run.record.rows.empty()) payload /= static_cast<double>(run.record.rows.size());
        const bool limited = fps < 0.9 * c.trajectory.tick_rate;
        points.push_back({s, fps, limited});
        csv << s << ',' << detail::fmt6(fps) << ',' << format_number(payload) << ',' << (limited ? 1 : 0) << '\n';
    }
    detail::emit(r, o, "size_fps.csv", csv.str());
    PlotSeries all{"delivered fps", {}, {}};
    std::vector<double> lx, ly;
    for (const auto& p : points) {
        all.x.push_back(p.size / 1000.0);
        all.y.push_back(p.fps);
        if (p.link_limited) {
            lx.push_back(p.size / 1000.0);
            ly.push_back(p.fps);
        }
    }
    std::vector<PlotSeries> series{all};
    std::optional<LinearFit> fit;
    if (lx.size() >= 3) {
        fit = fit_line(lx, ly);
        PlotSeries f{"linear fit", {lx.front(), lx.back()},
                     {fit->intercept + fit->slope * lx.front(), fit->intercept + fit->slope * lx.back()}};
        series.push_back(f);
    }
    detail::emit(r, o, "size_fps.svg", render_svg_plot("Frame size vs. fps", "padded frame size (kB)", "fps", series));

    bool monotone = true;
    for (std::size_t i = 1; i < points.size(); ++i)
        if (points[i].size > points[i - 1].size && points[i].fps > points[i - 1].fps) monotone = false;
    r.summary = {{"bandwidth_bps", cap}, {"link_limited_points", lx.size()}};
    if (fit) r.summary["fit"] = {{"slope_fps_per_kb", fit->slope}, {"intercept", fit->intercept}, {"r2", fit->r2}};
    r.checks.push_back({"fps non-increasing in frame size", monotone, ""});
    r.checks.push_back({"linear fit R^2 >= 0.9 over the link-limited regime", fit && fit->r2 >= 0.9,
                        fit ? "r2 = " + detail::fmt6(fit->r2) + " over " + std::to_string(lx.size()) + " points"
                            : "fewer than 3 link-limited points"});
    return r;
}

struct AoParamPoint {
    int rays = 0;
    double radius = 0.0;
    double occlusion_raw = 0.0;
    double occlusion_filtered = 0.0;
    double raw_bytes = 0.0;       // mean compressed size of the raw plane
    double filtered_bytes = 0.0;  // mean compressed size of the filtered plane
};

/// N x r matrix on the configured trajectory, all N run in lockstep per radius
/// so per-pixel differences between ray counts can be measured.
inline SuiteResult suite_ao_params(const Config& base, const SuiteOptions& o) {
    SuiteResult r;
    r.name = "ao-params";
    const Config cfg = detail::suite_config(base, o);
    const World world(load_scene(cfg.scene));
    std::vector<AoParamPoint> points;
    json diffs = json::array();
    std::ostringstream diff_csv;
    diff_csv << "radius,rays_a,rays_b,mean_abs_diff_filtered\n";
    for (double radius : o.ao_radii) {
        std::vector<Config> cs;
        std::vector<ServerRenderer> servers;
        cs.reserve(o.ao_rays.size());
        for (int n : o.ao_rays) {
            Config c = cfg;
            c.render.ao_rays = n;
            c.render.ao_radius = radius;
            cs.push_back(c);
        }
        for (const auto& c : cs) servers.emplace_back(world, c);
        std::vector<AoParamPoint> acc(cs.size());
        std::vector<double> pair_diff(cs.size(), 0.0);  // |O_k - O_last| summed
        const std::uint32_t ticks = cfg.trajectory.ticks;
        for (std::uint32_t t = 0; t < ticks; ++t) {
            const CameraPose pose = detail::pose_at(cfg, t);
            std::vector<ServerFrame> frames;
            for (std::size_t k = 0; k < cs.size(); ++k) {
                frames.push_back(servers[k].render(pose));
                const ServerFrame& f = frames.back();
                acc[k].occlusion_raw += detail::mean_occlusion(*f.raw_ao, *f.gbuffer);
                acc[k].occlusion_filtered += detail::mean_occlusion(*f.ao, *f.gbuffer);
                acc[k].raw_bytes += static_cast<double>(encode_frame(*f.raw_ao, cfg.transport.codec).header.compressed_size);
                acc[k].filtered_bytes += static_cast<double>(encode_frame(*f.ao, cfg.transport.codec).header.compressed_size);
                if (o.write_png && t + 1 == ticks) {
                    std::filesystem::create_directories(o.out_dir);
                    const std::string path = (std::filesystem::path(o.out_dir) /
                                              ("ao_n" + std::to_string(cs[k].render.ao_rays) + "_r" +
                                               format_number(radius) + ".png"))
                                                 .string();
                    write_png(path, servers[k].compose(f));
                    r.files.push_back(path);
                }
            }
            const ServerFrame& last = frames.back();
            for (std::size_t k = 0; k + 1 < cs.size(); ++k) {
                double s = 0.0;
                std::size_t n = 0;
                const GBuffer& g = *last.gbuffer;
                for (std::size_t i = 0; i < g.size(); ++i) {
                    if (!g.valid(i)) continue;
                    s += std::abs(static_cast<double>(frames[k].ao->counts[i]) / frames[k].ao->rays -
                                  static_cast<double>(last.ao->counts[i]) / last.ao->rays);
                    ++n;
                }
                pair_diff[k] += n ? s / static_cast<double>(n) : 0.0;
            }
        }
        for (std::size_t k = 0; k < cs.size(); ++k) {
            AoParamPoint p = acc[k];
            p.rays = cs[k].render.ao_rays;
            p.radius = radius;
            p.occlusion_raw /= ticks;
            p.occlusion_filtered /= ticks;
            p.raw_bytes /= ticks;
            p.filtered_bytes /= ticks;
            points.push_back(p);
            if (k + 1 < cs.size()) {
                const double d = pair_diff[k] / ticks;
                diff_csv << format_number(radius) << ',' << cs[k].render.ao_rays << ',' << cs.back().render.ao_rays
                         << ',' << detail::fmt6(d) << '\n';
                diffs.push_back({{"radius", radius}, {"rays_a", cs[k].render.ao_rays},
                                 {"rays_b", cs.back().render.ao_rays}, {"mean_abs_diff", d}});
            }
        }
    }
    std::ostringstream csv;
    csv << "rays,radius,mean_occlusion_raw,mean_occlusion_filtered,raw_ao_bytes,filtered_ao_bytes\n";
    for (const auto& p : points)
        csv << p.rays << ',' << format_number(p.radius) << ',' << detail::fmt6(p.occlusion_raw) << ','
            << detail::fmt6(p.occlusion_filtered) << ',' << format_number(p.raw_bytes) << ','
            << format_number(p.filtered_bytes) << '\n';
    detail::emit(r, o, "ao_params.csv", csv.str());
    detail::emit(r, o, "ao_ray_diff.csv", diff_csv.str());
    std::vector<PlotSeries> series;
    for (int n : o.ao_rays) {
        PlotSeries s{"N = " + std::to_string(n), {}, {}};
        for (const auto& p : points)
            if (p.rays == n) {
                s.x.push_back(p.radius);
                s.y.push_back(p.occlusion_filtered);
            }
        series.push_back(std::move(s));
    }
    detail::emit(r, o, "ao_params.svg", render_svg_plot("Mean occlusion vs. radius", "radius", "mean occlusion", series));

    bool monotone = true;
    for (int n : o.ao_rays) {
        double prev = -1.0;
        for (const auto& p : points)
            if (p.rays == n) {
                if (p.occlusion_raw < prev) monotone = false;
                prev = p.occlusion_raw;
            }
    }
    r.checks.push_back({"mean raw occlusion non-decreasing in radius", monotone, ""});
    for (const auto& d : diffs)
        if (d["rays_a"] == 32 && d["rays_b"] == 64 && d["radius"].get<double>() == cfg.render.ao_radius) {
            const double v = d["mean_abs_diff"].get<double>();
            r.checks.push_back({"filtered mean |O32 - O64| <= 0.02", v <= 0.02, "diff = " + detail::fmt6(v)});
        }
    r.summary = {{"ray_differences", diffs}};
    return r;
}

inline SuiteResult run_suite(const std::string& name, const Config& cfg, const SuiteOptions& o) {
    if (name == "bandwidth") return suite_bandwidth(cfg, o);
    if (name == "latency-sweep") return suite_latency(cfg, o);
    if (name == "size-vs-fps") return suite_size_fps(cfg, o);
    if (name == "ao-params") return suite_ao_params(cfg, o);
    throw std::invalid_argument("unknown suite: " + name);
}

}  // namespace dhrs
