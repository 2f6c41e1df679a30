#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dhrs/pipeline.hpp"
#include "dhrs/realtime.hpp"
#include "dhrs/suite.hpp"

namespace fs = std::filesystem;
using namespace dhrs;

namespace {

enum Exit { kOk = 0, kConfigError = 1, kRuntimeError = 2, kCheckFailed = 3 };

struct Globals {
    std::string config_path;
    std::vector<std::string> overrides;
    bool print_config = false;
};

Config build_config(const Globals& g) {
    json j = g.config_path.empty() ? json::object() : read_config_json(g.config_path);
    for (const auto& s : g.overrides) apply_override(j, s);
    return config_from_json(j);
}

std::string frame_png_path(const std::string& dir, std::uint32_t t) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%05u.png", t);
    return (fs::path(dir) / name).string();
}

RunOptions png_sink(const Config& cfg, const std::string& dir) {
    RunOptions o;
    if (cfg.output.png) {
        fs::create_directories(dir);
        const int every = cfg.output.png_every;
        o.on_frame = [dir, every](std::uint32_t t, const Image& img) {
            if (t % static_cast<std::uint32_t>(every) == 0) write_png(frame_png_path(dir, t), img);
        };
    }
    return o;
}

json run_summary(const RunResult& r) {
    json passes = json::object();
    for (Pass p : {Pass::visibility, Pass::ao, Pass::color}) {
        std::size_t sent = 0;
        for (const auto& row : r.record.rows) sent += row.pass == p;
        if (!sent) continue;
        passes[pass_name(p)] = {{"frames_sent", sent},
                                {"frames_delivered", r.record.delivered_frames(p)},
                                {"fps", r.record.fps(p)}};
    }
    json s = {{"run", r.record.name},
              {"ticks", r.record.ticks},
              {"delivered_bytes", r.record.channel_delivered_bytes},
              {"passes", passes},
              {"wall_seconds", r.record.wall_seconds}};
    if (auto m = r.record.mean_ssim()) s["mean_ssim"] = *m;
    return s;
}

void write_run_outputs(const Config& cfg, const RunResult& r, const std::string& stem) {
    fs::create_directories(cfg.output.dir);
    if (cfg.output.csv) write_text_file((fs::path(cfg.output.dir) / (stem + ".csv")).string(), to_csv(r.record));
    if (!r.record.ssim_per_tick.empty()) {
        std::ostringstream ss;
        ss << "tick,ssim\n";
        for (std::size_t t = 0; t < r.record.ssim_per_tick.size(); ++t)
            ss << t << ',' << std::fixed << std::setprecision(6) << r.record.ssim_per_tick[t] << '\n';
        write_text_file((fs::path(cfg.output.dir) / (stem + "_ssim.csv")).string(), ss.str());
    }
}

int cmd_sim(const Config& cfg, bool direct, bool with_ssim) {
    std::vector<Image> reference;
    RunOptions opt = png_sink(cfg, (fs::path(cfg.output.dir) / "frames").string());
    if (with_ssim) {
        reference = zero_latency_frames(cfg);
        opt.reference = &reference;
    }
    const RunResult r = direct ? run_direct(cfg, opt) : run_sim(cfg, opt);
    write_run_outputs(cfg, r, direct ? "direct" : "run");
    std::cout << run_summary(r).dump(2) << '\n';
    return kOk;
}

int cmd_reference(Config cfg, int spp) {
    if (spp > 0) cfg.reference_spp = spp;
    cfg.output.png = true;
    const RunResult r = run_reference(cfg, cfg.reference_spp, png_sink(cfg, (fs::path(cfg.output.dir) / "reference").string()));
    std::cout << json{{"run", "reference"}, {"spp", cfg.reference_spp}, {"ticks", r.record.ticks},
                      {"wall_seconds", r.record.wall_seconds}}
                     .dump(2)
              << '\n';
    return kOk;
}

int cmd_serve(const Config& cfg) {
    std::cerr << "serving on " << cfg.net.server_host << ':' << cfg.net.server_port << '\n';
    const ServeStats s = run_udp_server(cfg);
    std::cout << json{{"frames", s.frames}, {"datagrams", s.datagrams}, {"bytes", s.bytes}, {"malformed", s.malformed}}.dump(2)
              << '\n';
    return kOk;
}

int cmd_client(const Config& cfg) {
    const RunResult r = run_udp_client(cfg, png_sink(cfg, (fs::path(cfg.output.dir) / "frames").string()));
    write_run_outputs(cfg, r, "client");
    std::cout << run_summary(r).dump(2) << '\n';
    return kOk;
}

int cmd_suite(const Config& cfg, const std::string& name, SuiteOptions o, bool check) {
    o.out_dir = cfg.output.dir;
    o.write_png = cfg.output.png;
    std::vector<std::string> names = name == "all" ? suite_names() : std::vector<std::string>{name};
    bool ok = true;
    json all = json::object();
    for (const auto& n : names) {
        const SuiteResult r = run_suite(n, cfg, o);
        json checks = json::array();
        for (const auto& c : r.checks) checks.push_back({{"check", c.name}, {"passed", c.passed}, {"detail", c.detail}});
        all[n] = {{"summary", r.summary}, {"checks", checks}, {"files", r.files}};
        ok = ok && r.passed();
    }
    std::cout << all.dump(2) << '\n';
    return check && !ok ? kCheckFailed : kOk;
}

// --- report ---------------------------------------------------------------

struct ParsedRow {
    std::uint32_t frame_id;
    std::string pass;
    double raw, compressed, packets;
    bool delivered;
    std::optional<double> e2e, frame_time;
};

std::vector<ParsedRow> read_run_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) throw std::runtime_error(path + ": unexpected CSV header");
    std::vector<ParsedRow> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (!line.empty() && line.back() == ',') f.emplace_back();
        if (f.size() != 8) throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected 8 columns");
        auto opt = [](const std::string& s) { return s.empty() ? std::nullopt : std::optional<double>(std::stod(s)); };
        rows.push_back({static_cast<std::uint32_t>(std::stoul(f[0])), f[1], std::stod(f[2]), std::stod(f[3]),
                        std::stod(f[4]), f[5] == "1", opt(f[6]), opt(f[7])});
    }
    return rows;
}

int cmd_report(const std::vector<std::string>& files, double tick_rate, const std::string& svg) {
    json out = json::object();
    std::vector<PlotSeries> series;
    for (const auto& file : files) {
        const auto rows = read_run_csv(file);
        std::uint32_t max_frame = 0;
        for (const auto& r : rows) max_frame = std::max(max_frame, r.frame_id);
        const double duration = rows.empty() ? 0.0 : (max_frame + 1) / tick_rate;
        std::map<std::string, std::vector<const ParsedRow*>> by_pass;
        for (const auto& r : rows) by_pass[r.pass].push_back(&r);
        json passes = json::object();
        for (const auto& [pass, rs] : by_pass) {
            double comp = 0, packets = 0, e2e = 0, ft = 0;
            std::size_t delivered = 0, n_e2e = 0, n_ft = 0;
            PlotSeries s{fs::path(file).stem().string() + " " + pass, {}, {}};
            for (const auto* r : rs) {
                comp += r->compressed;
                packets += r->packets;
                delivered += r->delivered;
                if (r->e2e) e2e += *r->e2e, ++n_e2e;
                if (r->frame_time) ft += *r->frame_time, ++n_ft;
                s.x.push_back(r->frame_id);
                s.y.push_back(r->compressed / 1000.0);
            }
            const double n = static_cast<double>(rs.size());
            passes[pass] = {{"frames", rs.size()},
                            {"delivered", delivered},
                            {"delivery_rate", delivered / n},
                            {"mean_compressed_bytes", comp / n},
                            {"mean_packets", packets / n},
                            {"fps", duration > 0 ? delivered / duration : 0.0}};
            if (n_e2e) passes[pass]["mean_end_to_end_ms"] = e2e / static_cast<double>(n_e2e);
            if (n_ft) passes[pass]["mean_frame_time_ms"] = ft / static_cast<double>(n_ft);
            series.push_back(std::move(s));
        }
        out[file] = {{"rows", rows.size()}, {"duration_s", duration}, {"passes", passes}};
    }
    if (!svg.empty()) write_text_file(svg, render_svg_plot("Compressed frame size", "frame", "kB", series));
    std::cout << out.dump(2) << '\n';
    return kOk;
}

// --- denoise --------------------------------------------------------------

int cmd_denoise(const Config& cfg, const std::vector<std::string>& gbuffers, const std::vector<std::string>& planes,
                int rays, const std::string& out_dir) {
    if (gbuffers.size() != planes.size())
        throw ConfigError("denoise: --gbuffer and --ao must list the same number of files");
    if (rays < 1 || rays > 255) throw ConfigError("denoise: --rays must be in [1, 255]");
    fs::create_directories(out_dir);
    FilterHistory hist;
    json outputs = json::array();
    for (std::size_t k = 0; k < gbuffers.size(); ++k) {
        auto g = std::make_shared<GBuffer>(deserialize_gbuffer(read_file_bytes(gbuffers[k])));
        compute_motion(*g, hist.empty ? g->pose : hist.pose);
        const auto raw = read_file_bytes(planes[k]);
        if (raw.size() != g->size())
            throw std::runtime_error(planes[k] + ": expected " + std::to_string(g->size()) + " bytes");
        AoBuffer ao;
        ao.width = g->width;
        ao.height = g->height;
        ao.pose = g->pose;
        ao.rays = rays;
        ao.radius = static_cast<float>(cfg.render.ao_radius);
        ao.counts = raw;
        for (auto c : ao.counts)
            if (c > rays) throw std::runtime_error(planes[k] + ": count exceeds --rays");
        const AoBuffer f = svgf_filter(ao, std::shared_ptr<const GBuffer>(g), hist, cfg.filter.params);
        const std::string path = (fs::path(out_dir) / (fs::path(planes[k]).stem().string() + ".filtered.raw")).string();
        write_file_bytes(path, f.counts);
        outputs.push_back(path);
    }
    std::cout << json{{"filtered", outputs}}.dump(2) << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributed hybrid rendering: simulator, socket server/client, reference renderer and suites"};
    app.require_subcommand(0, 1);
    app.fallthrough();
    Globals g;
    app.add_option("-c,--config", g.config_path, "JSON config file (sections as in --print-config)");
    app.add_option("-s,--set", g.overrides, "Override one config key, e.g. --set render.ao_rays=64")->allow_extra_args(false);
    app.add_flag("--print-config", g.print_config, "Print the effective config with all defaults and exit");

    bool direct = false, with_ssim = false;
    auto* sim = app.add_subcommand("sim", "In-process run on a virtual clock");
    sim->add_flag("--direct", direct, "Skip the transport entirely (single-process pipeline)");
    sim->add_flag("--ssim", with_ssim, "Also report SSIM against the zero-latency run");

    auto* serve = app.add_subcommand("serve", "UDP server: trace, filter and stream buffers");
    auto* client = app.add_subcommand("client", "UDP client: play the trajectory against a server");

    int spp = 0;
    auto* reference = app.add_subcommand("reference", "Offline high-sample render, written as PNG frames");
    reference->add_option("--spp", spp, "Samples per pixel (default reference.spp)")->check(CLI::PositiveNumber);

    std::string suite_name;
    SuiteOptions suite_opts;
    std::uint32_t suite_ticks = 0;
    bool check = false;
    auto* suite = app.add_subcommand("suite", "Run an experiment matrix and write CSV + SVG");
    std::vector<std::string> choices = suite_names();
    choices.push_back("all");
    suite->add_option("name", suite_name, "Suite name")->required()->check(CLI::IsMember(choices));
    suite->add_option("--ticks", suite_ticks, "Override trajectory length");
    suite->add_option("--sizes", suite_opts.frame_sizes, "size-vs-fps: padded frame sizes in bytes")->delimiter(',');
    suite->add_option("--bandwidth", suite_opts.sweep_bandwidth_bps, "size-vs-fps: link cap in bit/s");
    suite->add_option("--rays", suite_opts.ao_rays, "ao-params: ray counts")->delimiter(',');
    suite->add_option("--radii", suite_opts.ao_radii, "ao-params: hemisphere radii")->delimiter(',');
    suite->add_flag("--check", check, "Exit with status 3 when a suite check fails");

    std::vector<std::string> report_files;
    double tick_rate = 60.0;
    std::string svg;
    auto* report = app.add_subcommand("report", "Summarize run CSV files");
    report->add_option("files", report_files, "Run CSV files")->required()->check(CLI::ExistingFile);
    report->add_option("--tick-rate", tick_rate, "Ticks per second of the run")->check(CLI::PositiveNumber);
    report->add_option("--svg", svg, "Write a per-frame size plot");

    std::vector<std::string> dn_gbuffers, dn_planes;
    int dn_rays = 0;
    std::string dn_out = "denoised";
    auto* denoise = app.add_subcommand("denoise", "Filter raw AO planes against G-buffer dumps, in order");
    denoise->add_option("--gbuffer", dn_gbuffers, "G-buffer dump files (DHRG)")->required()->check(CLI::ExistingFile);
    denoise->add_option("--ao", dn_planes, "Raw AO count planes, one byte per pixel")->required()->check(CLI::ExistingFile);
    denoise->add_option("--rays", dn_rays, "Ray count N of the planes")->required();
    denoise->add_option("--out", dn_out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        const Config cfg = build_config(g);
        if (g.print_config || app.get_subcommands().empty()) {
            std::cout << to_json(cfg).dump(2) << '\n';
            return kOk;
        }
        if (suite_ticks > 0) suite_opts.ticks = suite_ticks;
        if (*sim) return cmd_sim(cfg, direct, with_ssim);
        if (*serve) return cmd_serve(cfg);
        if (*client) return cmd_client(cfg);
        if (*reference) return cmd_reference(cfg, spp);
        if (*suite) return cmd_suite(cfg, suite_name, suite_opts, check);
        if (*report) return cmd_report(report_files, tick_rate, svg);
        if (*denoise) return cmd_denoise(cfg, dn_gbuffers, dn_planes, dn_rays, dn_out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kOk;
}
