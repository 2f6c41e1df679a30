#pragma once

// Measurements shared by the unit tests and the acceptance runner. Each
// returns the raw numbers; callers apply thresholds.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "dhrs/pipeline.hpp"
#include "oracles.hpp"

namespace checks {

using namespace dhrs;

// ---------------------------------------------------------------------------
// Synthetic geometry

/// Fronto-parallel wall filling the frame: constant depth, identical normals.
inline GBuffer flat_gbuffer(int w, int h, float depth = 2.0f, std::int32_t mesh = 0) {
    GBuffer g(w, h);
    g.pose.camera = Camera::look_at({0, 0, 0}, {0, 0, -1}, kPi / 3, w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t i = g.index(x, y);
            g.world_pos[i] = {static_cast<float>(x) * 0.01f, static_cast<float>(y) * 0.01f, -depth};
            g.normal[i] = {0, 0, 1};
            g.depth[i] = depth;
            g.mesh_id[i] = mesh;
            g.albedo[i] = {0.5f, 0.5f, 0.5f};
        }
    return g;
}

/// Random depths, normals, mesh ids and background holes.
inline GBuffer random_gbuffer(int w, int h, SplitMix& rng) {
    GBuffer g(w, h);
    g.pose.camera = Camera::look_at({0, 0, 0}, {0, 0, -1}, kPi / 3, w, h);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (rng.uniform() < 0.1) continue;
        const Vec3d n = normalize(Vec3d{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.1, 1)});
        g.normal[i] = Vec3f(n);
        g.depth[i] = static_cast<float>(rng.uniform(0.5, 10.0));
        g.world_pos[i] = {0, 0, -g.depth[i]};
        g.mesh_id[i] = static_cast<std::int32_t>(rng.next_u64() % 4);
    }
    return g;
}

// ---------------------------------------------------------------------------
// Oracle equivalence

struct BvhComparison {
    std::size_t rays = 0;
    std::size_t closest_mismatches = 0;
    std::size_t occlusion_mismatches = 0;
};

/// Random rays (half from inside the scene bounds, half aimed at triangle
/// centroids) through the BVH and through a linear scan.
inline BvhComparison compare_bvh(const Scene& scene, std::size_t rays, std::uint64_t seed) {
    const Bvh bvh(scene.triangles);
    Aabb box;
    for (const auto& t : scene.triangles) box.expand(t.bounds());
    SplitMix rng(seed);
    BvhComparison out;
    out.rays = rays;
    for (std::size_t k = 0; k < rays; ++k) {
        Vec3d o{rng.uniform(box.lo.x, box.hi.x), rng.uniform(box.lo.y, box.hi.y), rng.uniform(box.lo.z, box.hi.z)};
        Vec3d d;
        if (k % 2 == 0) {
            d = normalize(Vec3d{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
        } else {
            const auto& tri = scene.triangles[rng.next_u64() % scene.triangles.size()];
            d = normalize(tri.centroid() - o);
        }
        Ray ray{o, d, k % 3 == 0 ? rng.uniform(0.1, 3.0) : kInfinity};
        const auto a = bvh.intersect(ray);
        const auto b = oracle::closest_hit(scene.triangles, ray);
        if (a.has_value() != b.has_value() || (a && (a->triangle != b->triangle || a->t != b->t)))
            ++out.closest_mismatches;
        if (bvh.occluded(ray) != oracle::any_hit(scene.triangles, ray)) ++out.occlusion_mismatches;
    }
    return out;
}

struct GBufferComparison {
    std::size_t pixels = 0;
    std::size_t id_mismatches = 0;
    double max_position_error = 0.0;
};

inline GBufferComparison compare_gbuffer(const Scene& scene, const Camera& cam) {
    const Bvh bvh(scene.triangles);
    const GBuffer g = rasterize(bvh, {0, cam});
    GBufferComparison out;
    out.pixels = g.size();
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x) {
            const std::size_t i = g.index(x, y);
            const auto s = oracle::primary_sample(scene.triangles, cam, x, y);
            if (s.mesh_id != g.mesh_id[i]) {
                ++out.id_mismatches;
                continue;
            }
            if (s.mesh_id >= 0)
                out.max_position_error = std::max(out.max_position_error, length(s.position - Vec3d(g.world_pos[i])));
        }
    return out;
}

struct SsimReference {
    std::string name;
    double expected = 0.0;
    double measured = 0.0;
    double direct = 0.0;
};

/// Pairs in `dir`/reference.txt, each line "<name> <score>".
inline std::vector<SsimReference> ssim_reference_pairs(const std::string& dir) {
    std::ifstream in(dir + "/reference.txt");
    if (!in) throw std::runtime_error("missing " + dir + "/reference.txt");
    std::vector<SsimReference> out;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        SsimReference r;
        if (!(ss >> r.name >> r.expected)) continue;
        const Image a = read_png(dir + "/" + r.name + "_a.png");
        const Image b = read_png(dir + "/" + r.name + "_b.png");
        r.measured = ssim(a, b);
        r.direct = oracle::ssim_direct(a, b);
        out.push_back(r);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Ambient occlusion

struct CornerWallResult {
    double filtered = 0.0;  // O at the probe pixel after the last frame
    double oracle = 0.0;    // Monte Carlo reference at the same point
    double distance = 0.0;  // probe distance from the wall
};

/// Static camera on the corner-wall scene; `frames` frames of filtered AO with
/// `rays` rays at radius `radius`. The probe is the ground pixel nearest the
/// image center.
inline CornerWallResult corner_wall_convergence(int frames, int rays, double radius, std::size_t oracle_samples) {
    Config cfg;
    cfg.scene.name = "corner-wall";
    cfg.render.width = 96;
    cfg.render.height = 54;
    cfg.render.ao_rays = rays;
    cfg.render.ao_radius = radius;
    const World world(load_scene(cfg.scene));
    ServerRenderer server(world, cfg);
    const Scene& s = world.scene();
    const Camera cam = Camera::look_at(s.view_eye, s.view_target, cfg.fov_rad(), cfg.render.width, cfg.render.height);
    ServerFrame f;
    for (int k = 0; k < frames; ++k) f = server.render({static_cast<std::uint32_t>(k), cam});
    const GBuffer& g = *f.gbuffer;
    std::size_t probe = g.size();
    double best = kInfinity;
    for (int y = 8; y < g.height - 8; ++y)
        for (int x = 8; x < g.width - 8; ++x) {
            const std::size_t i = g.index(x, y);
            if (g.mesh_id[i] != 0) continue;
            const double d = std::hypot(x - g.width / 2.0, y - g.height / 2.0);
            if (d < best) best = d, probe = i;
        }
    if (probe == g.size()) throw std::runtime_error("corner-wall: no ground pixel near the center");
    CornerWallResult r;
    r.filtered = static_cast<double>(f.ao->counts[probe]) / f.ao->rays;
    r.distance = g.world_pos[probe].x;
    r.oracle = oracle::corner_wall_ao(r.distance, radius, oracle_samples);
    return r;
}

// ---------------------------------------------------------------------------
// Denoiser

struct RangeResult {
    std::size_t frames = 0;
    std::size_t out_of_range = 0;
    std::size_t count_violations = 0;
};

/// Random geometry and random AO counts, advanced through one history per
/// sequence of frames with random camera jitter.
inline RangeResult denoise_range(std::size_t frames, std::uint64_t seed) {
    SplitMix rng(seed);
    RangeResult r;
    r.frames = frames;
    FilterParams p;
    p.iterations = 3;
    FilterHistory hist;
    const int w = 24, h = 16;
    for (std::size_t k = 0; k < frames; ++k) {
        if (k % 50 == 0) hist.reset();
        auto g = std::make_shared<GBuffer>(random_gbuffer(w, h, rng));
        g->pose.frame_id = static_cast<std::uint32_t>(k);
        for (auto& m : g->motion) m = {static_cast<float>(rng.uniform(-1.5, 1.5)), static_cast<float>(rng.uniform(-1.5, 1.5))};
        std::vector<float> x(g->size());
        const int mode = static_cast<int>(k % 3);
        for (auto& v : x) v = mode == 0 ? static_cast<float>(rng.uniform()) : mode == 1 ? (rng.uniform() < 0.5 ? 0.f : 1.f) : 1.f;
        const auto out = svgf_filter_scalar(x, g, hist, p);
        for (float v : out)
            if (!(v >= 0.0f && v <= 1.0f)) ++r.out_of_range;
        AoBuffer ao;
        ao.width = w;
        ao.height = h;
        ao.rays = 1 + static_cast<int>(rng.next_u64() % 255);
        ao.counts.resize(g->size());
        for (auto& c : ao.counts) c = static_cast<std::uint8_t>(rng.next_u64() % (ao.rays + 1));
        FilterHistory fresh;
        const AoBuffer f = svgf_filter(ao, std::shared_ptr<const GBuffer>(g), fresh, p);
        for (auto c : f.counts)
            if (c > ao.rays) ++r.count_violations;
    }
    return r;
}

/// Largest |out - c| over all pixels and frames for a constant input c.
inline double denoise_fixed_point_error(int frames, float c) {
    auto g = std::make_shared<const GBuffer>(flat_gbuffer(32, 24));
    FilterHistory hist;
    FilterParams p;
    double err = 0.0;
    std::vector<float> x(g->size(), c);
    for (int k = 0; k < frames; ++k) {
        const auto out = svgf_filter_scalar(x, g, hist, p);
        for (float v : out) err = std::max(err, std::abs(static_cast<double>(v) - c));
    }
    return err;
}

struct TemporalStdResult {
    double input_std = 0.0;
    double output_std = 0.0;
};

/// Static camera, i.i.d. Bernoulli AO counts with mean m. Per-pixel standard
/// deviation across `window` frames after `warmup` frames, averaged.
inline TemporalStdResult denoise_temporal_std(int warmup, int window, int rays, double m, std::uint64_t seed) {
    auto g = std::make_shared<const GBuffer>(flat_gbuffer(48, 32));
    SplitMix rng(seed);
    FilterHistory hist;
    const FilterParams p;
    const std::size_t n = g->size();
    std::vector<double> s1(n), s2(n), i1(n), i2(n);
    for (int k = 0; k < warmup + window; ++k) {
        AoBuffer ao;
        ao.width = g->width;
        ao.height = g->height;
        ao.rays = rays;
        ao.counts.resize(n);
        for (auto& c : ao.counts) {
            int cnt = 0;
            for (int j = 0; j < rays; ++j) cnt += rng.uniform() < m;
            c = static_cast<std::uint8_t>(cnt);
        }
        const AoBuffer out = svgf_filter(ao, g, hist, p);
        if (k < warmup) continue;
        for (std::size_t i = 0; i < n; ++i) {
            const double a = static_cast<double>(ao.counts[i]) / rays, b = static_cast<double>(out.counts[i]) / rays;
            i1[i] += a;
            i2[i] += a * a;
            s1[i] += b;
            s2[i] += b * b;
        }
    }
    TemporalStdResult r;
    for (std::size_t i = 0; i < n; ++i) {
        const double mi = i1[i] / window, mo = s1[i] / window;
        r.input_std += std::sqrt(std::max(0.0, i2[i] / window - mi * mi));
        r.output_std += std::sqrt(std::max(0.0, s2[i] / window - mo * mo));
    }
    r.input_std /= static_cast<double>(n);
    r.output_std /= static_cast<double>(n);
    return r;
}

// ---------------------------------------------------------------------------
// Transport

struct RoundTripResult {
    std::size_t buffers = 0;
    std::size_t failures = 0;
};

/// Random planes of assorted sizes and entropy through both codecs, and
/// through encode / packetize / reassemble / decode for AO frames.
inline RoundTripResult codec_round_trip(std::size_t buffers, std::uint64_t seed) {
    SplitMix rng(seed);
    RoundTripResult r;
    r.buffers = buffers;
    for (std::size_t k = 0; k < buffers; ++k) {
        const std::size_t size = rng.next_u64() % 20000;
        const int alphabet = 1 + static_cast<int>(rng.next_u64() % 256);
        std::vector<std::uint8_t> raw(size);
        std::uint8_t run = 0;
        for (auto& b : raw) {
            if (rng.uniform() < 0.3) run = static_cast<std::uint8_t>(rng.next_u64() % alphabet);
            b = run;
        }
        bool ok = true;
        for (Codec c : {Codec::lz4, Codec::identity}) {
            try {
                ok = ok && decompress(c, compress(c, raw), raw.size()) == raw;
            } catch (const std::exception&) {
                ok = false;
            }
        }
        if (size > 0 && k % 4 == 0) {
            AoBuffer a;
            a.width = static_cast<int>(std::max<std::size_t>(1, size / 16));
            a.height = 1;
            a.rays = 255;
            a.counts.assign(raw.begin(), raw.begin() + a.width);
            a.pose.frame_id = static_cast<std::uint32_t>(k);
            a.pose.camera.width = a.width;
            a.pose.camera.height = 1;
            const auto packets = packetize(encode_frame(a), 64 + rng.next_u64() % 1400);
            Assembler as;
            std::optional<AoBuffer> got;
            for (std::size_t j = packets.size(); j-- > 0;)
                for (auto& ev : as.ingest(parse_datagram(serialize_datagram(packets[j])), 0.0))
                    if (ev.status == FrameStatus::complete) got = decode_ao(*ev.frame);
            ok = ok && got && got->counts == a.counts && got->pose == a.pose;
        }
        r.failures += !ok;
    }
    return r;
}

struct CompletionResult {
    std::size_t frames = 0;
    std::size_t complete = 0;
    double expected_rate = 0.0;
    double sigma = 0.0;  // binomial standard deviation of the completion count
    double z = 0.0;
};

/// k-packet frames through a lossy channel and the assembler.
inline CompletionResult completion_under_loss(std::size_t frames, std::size_t packets_per_frame, double p,
                                              std::uint64_t seed) {
    LinkConfig link;
    link.loss_prob = p;
    link.one_way_delay_ms = 5.0;
    link.seed = seed;
    Channel<std::vector<std::uint8_t>> ch(link);
    Assembler as({50.0});
    AoBuffer a;
    a.width = static_cast<int>(packets_per_frame * 100);
    a.height = 1;
    a.pose.camera.width = a.width;
    a.pose.camera.height = 1;
    a.rays = 255;
    CompletionResult r;
    r.frames = frames;
    SplitMix noise(seed ^ 0x55);
    a.counts.resize(static_cast<std::size_t>(a.width));
    for (auto& c : a.counts) c = static_cast<std::uint8_t>(noise.next_u64());
    for (std::size_t f = 0; f < frames; ++f) {
        const double now = static_cast<double>(f) * 10.0;
        a.pose.frame_id = static_cast<std::uint32_t>(f);
        // Uncompressed so the packet count is exact.
        const auto packets = packetize(encode_frame(a, Codec::identity), 100);
        if (packets.size() != packets_per_frame) throw std::logic_error("unexpected packet count");
        for (const auto& d : packets) {
            auto b = serialize_datagram(d);
            const std::size_t n = b.size();
            ch.send(std::move(b), n, now);
        }
        for (auto& del : ch.poll_deliveries(now + 9.0))
            for (auto& ev : as.ingest(parse_datagram(del.message), del.deliver_at))
                r.complete += ev.status == FrameStatus::complete;
    }
    for (auto& del : ch.poll_deliveries(kInfinity))
        for (auto& ev : as.ingest(parse_datagram(del.message), del.deliver_at))
            r.complete += ev.status == FrameStatus::complete;
    r.expected_rate = std::pow(1.0 - p, static_cast<double>(packets_per_frame));
    r.sigma = std::sqrt(static_cast<double>(frames) * r.expected_rate * (1.0 - r.expected_rate));
    r.z = r.sigma > 0 ? (static_cast<double>(r.complete) - frames * r.expected_rate) / r.sigma : 0.0;
    return r;
}

// ---------------------------------------------------------------------------
// Runs

inline Config small_config(int ticks = 12, int w = 64, int h = 36) {
    Config c;
    c.render.width = w;
    c.render.height = h;
    c.render.ao_rays = 8;
    c.trajectory.ticks = static_cast<std::uint32_t>(ticks);
    return c;
}

inline bool frames_identical(const std::vector<Image>& a, const std::vector<Image>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].width != b[i].width || a[i].height != b[i].height || a[i].rgb != b[i].rgb) return false;
    return true;
}

}  // namespace checks
