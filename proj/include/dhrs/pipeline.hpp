#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <type_traits>
#include <unordered_map>
#include <variant>
#include <vector>

#include "dhrs/bvh.hpp"
#include "dhrs/compose.hpp"
#include "dhrs/config.hpp"
#include "dhrs/denoise.hpp"
#include "dhrs/gbuffer.hpp"
#include "dhrs/metrics.hpp"
#include "dhrs/netsim.hpp"
#include "dhrs/raytrace.hpp"
#include "dhrs/transport.hpp"

namespace dhrs {

/// FNV-1a over explicitly listed fields, finished with mix64.
class Hasher {
public:
    Hasher& bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        for (std::size_t i = 0; i < n; ++i) h_ = (h_ ^ b[i]) * 0x100000001b3ULL;
        return *this;
    }
    Hasher& u64(std::uint64_t v) { return bytes(&v, sizeof v); }
    Hasher& f64(double v) { return bytes(&v, sizeof v); }
    Hasher& f32(float v) { return bytes(&v, sizeof v); }
    Hasher& vec(const Vec3d& v) { return f64(v.x).f64(v.y).f64(v.z); }
    Hasher& vec(const Vec3f& v) { return f32(v.x).f32(v.y).f32(v.z); }
    Hasher& camera(const Camera& c) {
        vec(c.position).vec(c.right).vec(c.up).vec(c.forward).f32(c.vertical_fov);
        return u64(static_cast<std::uint64_t>(c.width)).u64(static_cast<std::uint64_t>(c.height));
    }
    std::uint64_t value() const { return mix64(h_); }

private:
    std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

inline std::uint64_t scene_fingerprint(const Scene& s) {
    Hasher h;
    for (const auto& t : s.triangles) h.vec(t.v0).vec(t.v1).vec(t.v2).u64(static_cast<std::uint64_t>(t.mesh_id)).vec(t.albedo);
    h.u64(0xffff);
    for (const auto& l : s.lights) h.vec(l.center).f64(l.radius).vec(l.intensity);
    h.u64(0xfffe);
    for (const auto& m : s.motions) h.u64(static_cast<std::uint64_t>(m.mesh_id)).vec(m.velocity_per_tick);
    return h.value();
}

/// Scene plus acceleration structures, one BVH per tick for dynamic scenes.
class World {
public:
    explicit World(Scene scene) : scene_(std::move(scene)), fingerprint_(scene_fingerprint(scene_)) {
        scene_.validate();
        if (!scene_.is_dynamic()) static_bvh_ = std::make_shared<const Bvh>(scene_.triangles);
    }

    const Scene& scene() const { return scene_; }
    std::span<const Light> lights() const { return scene_.lights; }
    std::uint64_t fingerprint() const { return fingerprint_; }

    /// Identifies the geometry present at `tick`.
    std::uint64_t geometry_key(std::uint32_t tick) const {
        return scene_.is_dynamic() ? hash_keys(fingerprint_, tick) : fingerprint_;
    }

    std::shared_ptr<const Bvh> bvh(std::uint32_t tick) const {
        if (static_bvh_) return static_bvh_;
        std::lock_guard lock(mutex_);
        if (auto it = dynamic_.find(tick); it != dynamic_.end()) return it->second;
        auto b = std::make_shared<const Bvh>(scene_.at_tick(tick).triangles);
        if (dynamic_.size() >= 16) dynamic_.erase(dynamic_.begin());
        dynamic_[tick] = b;
        return b;
    }

private:
    Scene scene_;
    std::uint64_t fingerprint_;
    std::shared_ptr<const Bvh> static_bvh_;
    mutable std::mutex mutex_;
    mutable std::map<std::uint32_t, std::shared_ptr<const Bvh>> dynamic_;
};

// ---------------------------------------------------------------------------
// Process-wide memoization. Every cached value is a pure function of its key,
// so hits change run time only.

template <typename V>
class KeyedCache {
public:
    explicit KeyedCache(std::size_t capacity) : capacity_(capacity) {}

    std::optional<V> get(std::uint64_t key) {
        std::lock_guard lock(mutex_);
        auto it = map_.find(key);
        if (it == map_.end()) {
            ++misses_;
            return std::nullopt;
        }
        ++hits_;
        return it->second;
    }

    void put(std::uint64_t key, V value) {
        std::lock_guard lock(mutex_);
        if (map_.emplace(key, std::move(value)).second) order_.push_back(key);
        while (order_.size() > capacity_) {
            map_.erase(order_.front());
            order_.pop_front();
        }
    }

    void clear() {
        std::lock_guard lock(mutex_);
        map_.clear();
        order_.clear();
        hits_ = misses_ = 0;
    }

    std::size_t size() const {
        std::lock_guard lock(mutex_);
        return map_.size();
    }
    std::uint64_t hits() const { return hits_; }
    std::uint64_t misses() const { return misses_; }

private:
    std::size_t capacity_;
    mutable std::mutex mutex_;
    std::unordered_map<std::uint64_t, V> map_;
    std::deque<std::uint64_t> order_;
    std::uint64_t hits_ = 0, misses_ = 0;
};

/// Server-side filter histories after some sequence of processed frames.
struct FilterState {
    FilterHistory ao;
    std::vector<FilterHistory> vis;
};

struct FilteredFrame {
    std::shared_ptr<const VisibilityBuffer> vis;
    std::shared_ptr<const AoBuffer> ao;
    std::shared_ptr<const FilterState> state;
};

struct PipelineCaches {
    bool enabled = true;
    KeyedCache<std::shared_ptr<const GBuffer>> gbuffers{512};
    KeyedCache<std::shared_ptr<const VisibilityBuffer>> visibility{8192};
    KeyedCache<std::shared_ptr<const AoBuffer>> ao{8192};
    KeyedCache<FilteredFrame> filtered{768};

    void clear() {
        gbuffers.clear();
        visibility.clear();
        ao.clear();
        filtered.clear();
    }
};

inline PipelineCaches& caches() {
    static PipelineCaches c;
    return c;
}

/// Visible-surface buffer for a pose, without motion vectors.
inline std::shared_ptr<const GBuffer> render_gbuffer(const World& world, const CameraPose& pose) {
    const std::uint64_t key = Hasher().u64(world.geometry_key(pose.frame_id)).camera(pose.camera).value();
    auto& c = caches();
    if (c.enabled)
        if (auto hit = c.gbuffers.get(key)) {
            if ((*hit)->pose == pose) return *hit;
            auto copy = std::make_shared<GBuffer>(**hit);  // same view, different frame id
            copy->pose = pose;
            return copy;
        }
    auto g = std::make_shared<const GBuffer>(rasterize(*world.bvh(pose.frame_id), pose));
    if (c.enabled) c.gbuffers.put(key, g);
    return g;
}

inline std::uint64_t trace_key(const World& world, const GBuffer& g, std::uint64_t kind, std::uint64_t a,
                               double b, std::uint64_t seed) {
    return Hasher()
        .u64(kind)
        .u64(world.geometry_key(g.pose.frame_id))
        .camera(g.pose.camera)
        .u64(g.pose.frame_id)
        .u64(a)
        .f64(b)
        .u64(seed)
        .value();
}

inline std::shared_ptr<const VisibilityBuffer> trace_visibility_cached(const World& world, const GBuffer& g,
                                                                       const Config& cfg) {
    const std::uint64_t key = trace_key(world, g, 1, static_cast<std::uint64_t>(cfg.render.shadow_mode), 0.0,
                                        cfg.render.seed);
    auto& c = caches();
    if (c.enabled)
        if (auto hit = c.visibility.get(key)) return *hit;
    auto v = std::make_shared<const VisibilityBuffer>(
        trace_visibility(g, *world.bvh(g.pose.frame_id), world.lights(), cfg.render.shadow_mode, cfg.render.seed));
    if (c.enabled) c.visibility.put(key, v);
    return v;
}

inline std::shared_ptr<const AoBuffer> trace_ao_cached(const World& world, const GBuffer& g, const Config& cfg) {
    const std::uint64_t key = trace_key(world, g, 2, static_cast<std::uint64_t>(cfg.render.ao_rays),
                                        cfg.render.ao_radius, cfg.render.seed);
    auto& c = caches();
    if (c.enabled)
        if (auto hit = c.ao.get(key)) return *hit;
    auto a = std::make_shared<const AoBuffer>(
        trace_ao(g, *world.bvh(g.pose.frame_id), cfg.render.ao_rays, cfg.render.ao_radius, cfg.render.seed));
    if (c.enabled) c.ao.put(key, a);
    return a;
}

inline ShadingParams shading_params(const Config& cfg) {
    ShadingParams sp;
    sp.k_a = cfg.render.ambient;
    return sp;
}

// ---------------------------------------------------------------------------
// Server: trace, filter, compose (remote mode).

struct ServerFrame {
    std::shared_ptr<const GBuffer> gbuffer;
    std::shared_ptr<const VisibilityBuffer> raw_vis;
    std::shared_ptr<const AoBuffer> raw_ao;
    std::shared_ptr<const VisibilityBuffer> vis;  // after optional shadow filtering
    std::shared_ptr<const AoBuffer> ao;           // after filtering when enabled
};

class ServerRenderer {
public:
    ServerRenderer(const World& world, const Config& cfg) : world_(world), cfg_(cfg) {
        const FilterParams& p = cfg.filter.params;
        p.validate();
        chain_ = Hasher()
                     .u64(0x5e7e)
                     .f64(p.alpha)
                     .u64(static_cast<std::uint64_t>(p.h_min))
                     .u64(static_cast<std::uint64_t>(p.iterations))
                     .f64(p.sigma_z)
                     .f64(p.sigma_n)
                     .f64(p.tau_z)
                     .f64(p.tau_n)
                     .u64(static_cast<std::uint64_t>(p.history_cap))
                     .u64(p.filter_shadows)
                     .value();
    }

    ServerFrame render(const CameraPose& pose) {
        ServerFrame out;
        out.gbuffer = render_gbuffer(world_, pose);
        out.raw_vis = trace_visibility_cached(world_, *out.gbuffer, cfg_);
        out.raw_ao = trace_ao_cached(world_, *out.gbuffer, cfg_);
        if (!cfg_.filter.enabled) {
            out.vis = out.raw_vis;
            out.ao = out.raw_ao;
            return out;
        }
        const std::uint64_t frame_key = trace_key(world_, *out.gbuffer, 3, static_cast<std::uint64_t>(cfg_.render.ao_rays),
                                                  cfg_.render.ao_radius, cfg_.render.seed) ^
                                        static_cast<std::uint64_t>(cfg_.render.shadow_mode);
        const std::uint64_t next = hash_keys(chain_, frame_key);
        auto& c = caches();
        if (c.enabled)
            if (auto hit = c.filtered.get(next)) {
                chain_ = next;
                state_ = hit->state;
                out.vis = hit->vis;
                out.ao = hit->ao;
                return out;
            }
        auto st = state_ ? std::make_shared<FilterState>(*state_) : std::make_shared<FilterState>();
        auto moving = std::make_shared<GBuffer>(*out.gbuffer);
        compute_motion(*moving, st->ao.empty ? pose : st->ao.pose);
        const FilterParams& p = cfg_.filter.params;
        out.ao = std::make_shared<const AoBuffer>(svgf_filter(*out.raw_ao, moving, st->ao, p));
        st->ao.geometry = out.gbuffer;  // histories only read depth, normal and mesh id
        if (p.filter_shadows) {
            out.vis = std::make_shared<const VisibilityBuffer>(filter_visibility(*out.raw_vis, moving, st->vis, p));
            for (auto& h : st->vis) h.geometry = out.gbuffer;
        } else {
            out.vis = out.raw_vis;
        }
        chain_ = next;
        state_ = st;
        if (c.enabled) c.filtered.put(next, {out.vis, out.ao, state_});
        return out;
    }

    Image compose(const ServerFrame& f) const {
        return compose_final(*f.gbuffer, *f.vis, *f.ao, world_.lights(), shading_params(cfg_));
    }

private:
    const World& world_;
    Config cfg_;
    std::uint64_t chain_ = 0;
    std::shared_ptr<const FilterState> state_;
};

// ---------------------------------------------------------------------------
// Client-side display logic shared by the simulated and socket clients.

inline VisibilityBuffer all_lit_visibility(const GBuffer& g, int light_count, ShadowMode mode) {
    VisibilityBuffer v;
    v.width = g.width;
    v.height = g.height;
    v.pose = g.pose;
    v.light_count = light_count;
    v.mode = mode;
    v.bits.assign(g.size(), v.all_lit());
    return v;
}

inline AoBuffer unoccluded_ao(const GBuffer& g, int rays, double radius) {
    AoBuffer a;
    a.width = g.width;
    a.height = g.height;
    a.pose = g.pose;
    a.rays = rays;
    a.radius = static_cast<float>(radius);
    a.counts.assign(g.size(), static_cast<std::uint8_t>(rays));
    return a;
}

class ClientDisplay {
public:
    ClientDisplay(const World& world, const Config& cfg) : world_(world), cfg_(cfg) {}

    /// Consumes a completed, decoded frame. Older frames than the newest held are ignored.
    void receive(DecodedFrame frame) {
        std::visit(
            [&](auto&& b) {
                using T = std::decay_t<decltype(b)>;
                if constexpr (std::is_same_v<T, VisibilityBuffer>) keep(vis_, std::move(b));
                else if constexpr (std::is_same_v<T, AoBuffer>) keep(ao_, std::move(b));
                else keep(color_, std::move(b));
            },
            std::move(frame));
    }

    /// Produces the displayed image for the client's pose at this tick.
    Image present(const CameraPose& pose) {
        auto g = render_gbuffer(world_, pose);
        ring_[pose.frame_id] = g;
        while (static_cast<int>(ring_.size()) > cfg_.client.depth_history) ring_.erase(ring_.begin());
        const ShadingParams sp = shading_params(cfg_);
        const int lights = static_cast<int>(world_.lights().size());
        if (cfg_.client.mode == ClientMode::remote) {
            if (color_ && color_->width == g->width && color_->height == g->height) return *color_;
            return compose_final(*g, all_lit_visibility(*g, lights, cfg_.render.shadow_mode),
                                 unoccluded_ao(*g, cfg_.render.ao_rays, cfg_.render.ao_radius), world_.lights(), sp);
        }
        const VisibilityBuffer vis =
            vis_ ? adapt(*vis_, *g) : all_lit_visibility(*g, lights, cfg_.render.shadow_mode);
        const AoBuffer ao = ao_ ? adapt(*ao_, *g) : unoccluded_ao(*g, cfg_.render.ao_rays, cfg_.render.ao_radius);
        return compose_final(*g, vis, ao, world_.lights(), sp);
    }

    std::size_t last_hole_count() const { return holes_; }

private:
    template <typename B>
    static void keep(std::optional<B>& slot, B&& b) {
        if (!slot || b.pose.frame_id > slot->pose.frame_id) slot = std::move(b);
    }

    template <typename B>
    B adapt(const B& stale, const GBuffer& now) {
        if (stale.pose.frame_id == now.pose.frame_id || !cfg_.client.prediction) {
            holes_ = 0;
            return stale;
        }
        std::span<const float> depth;
        if (auto it = ring_.find(stale.pose.frame_id); it != ring_.end()) depth = it->second->depth;
        auto r = reproject_server_buffer(stale, now, depth, {cfg_.client.prediction_tau_z});
        holes_ = r.hole_count;
        return std::move(r.buffer);
    }

    const World& world_;
    const Config& cfg_;
    std::optional<VisibilityBuffer> vis_;
    std::optional<AoBuffer> ao_;
    std::optional<Image> color_;
    std::map<std::uint32_t, std::shared_ptr<const GBuffer>> ring_;
    std::size_t holes_ = 0;
};

// ---------------------------------------------------------------------------
// Frame encoding with optional padding to a fixed payload size.

inline EncodedFrame encode_padded(EncodedFrame f, std::uint32_t target) {
    if (target > f.header.compressed_size) {
        f.header.pad_bytes = target - f.header.compressed_size;
        f.payload.resize(f.header.payload_size(), 0);
    }
    return f;
}

inline std::vector<EncodedFrame> encode_server_frame(const ServerRenderer& server, const ServerFrame& f,
                                                     const Config& cfg) {
    const Codec codec = cfg.transport.codec;
    const std::uint32_t pad = cfg.transport.frame_size_bytes;
    std::vector<EncodedFrame> out;
    if (cfg.client.mode == ClientMode::remote) {
        out.push_back(encode_padded(encode_frame(server.compose(f), codec), pad));
    } else {
        out.push_back(encode_padded(encode_frame(*f.vis, codec), pad));
        out.push_back(encode_padded(encode_frame(*f.ao, codec), pad));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Runs.

struct RunOptions {
    const std::vector<Image>* reference = nullptr;  // zero-latency frames for SSIM
    bool keep_frames = false;
    std::function<void(std::uint32_t, const Image&)> on_frame;
};

struct RunResult {
    RunRecord record;
    std::vector<Image> frames;
    ChannelStats uplink;
    ChannelStats downlink;
};

namespace detail {

inline void finish_tick(RunResult& res, const RunOptions& opt, std::uint32_t t, Image img) {
    if (opt.reference) {
        if (t >= opt.reference->size()) throw std::invalid_argument("reference run is shorter than this run");
        res.record.ssim_per_tick.push_back(ssim(img, (*opt.reference)[t]));
    }
    if (opt.on_frame) opt.on_frame(t, img);
    if (opt.keep_frames) res.frames.push_back(std::move(img));
}

inline CameraPose pose_at(const Config& cfg, std::uint32_t t) {
    return {t, cfg.trajectory.camera_at(t, cfg.fov_rad(), cfg.render.width, cfg.render.height)};
}

}  // namespace detail

/// Clock slack for polling, so deliveries scheduled exactly on a tick are not
/// missed through floating-point rounding of the tick time.
inline constexpr double kPollSlackMs = 1e-6;

/// In-process distributed run on one virtual clock.
inline RunResult run_sim(const Config& cfg, const RunOptions& opt = {}) {
    const auto wall0 = std::chrono::steady_clock::now();
    const World world(load_scene(cfg.scene));
    RunResult res;
    res.record.name = "sim";
    res.record.ticks = cfg.trajectory.ticks;
    res.record.duration_s = cfg.trajectory.ticks / cfg.trajectory.tick_rate;

    Channel<std::vector<std::uint8_t>> up(cfg.uplink.link), down(cfg.downlink.link);
    if (!cfg.uplink.trace_file.empty()) up.replay_latency_trace(load_latency_trace(cfg.uplink.trace_file));
    if (!cfg.downlink.trace_file.empty()) down.replay_latency_trace(load_latency_trace(cfg.downlink.trace_file));
    Assembler assembler({cfg.transport.expiry_ms});
    ServerRenderer server(world, cfg);
    ClientDisplay client(world, cfg);
    const Camera base = detail::pose_at(cfg, 0).camera;

    std::map<std::pair<int, std::uint32_t>, std::size_t> row_of;
    std::map<int, double> last_arrival;
    std::optional<std::uint32_t> last_pose;

    for (std::uint32_t t = 0; t < cfg.trajectory.ticks; ++t) {
        const double now = cfg.trajectory.time_ms(t);
        const CameraPose pose = detail::pose_at(cfg, t);

        const auto cam_bytes = serialize_camera_message({t, pose.camera, static_cast<std::uint32_t>(std::lround(now))});
        up.send(cam_bytes, cam_bytes.size(), now);

        std::optional<CameraMessage> newest;
        for (const auto& bytes : up.poll(now + kPollSlackMs)) {
            const CameraMessage m = parse_camera_message(bytes, base);
            if ((!last_pose || m.frame_id > *last_pose) && (!newest || m.frame_id > newest->frame_id)) newest = m;
        }
        if (newest) {
            last_pose = newest->frame_id;
            const ServerFrame f = server.render({newest->frame_id, newest->camera});
            for (const EncodedFrame& ef : encode_server_frame(server, f, cfg)) {
                const auto packets = packetize(ef, static_cast<std::size_t>(cfg.transport.payload_capacity));
                FrameRow row;
                row.frame_id = ef.header.frame_id;
                row.pass = ef.header.pass;
                row.raw_bytes = ef.header.raw_size;
                row.compressed_bytes = ef.header.compressed_size;
                row.packets = static_cast<std::uint32_t>(packets.size());
                row_of[{static_cast<int>(row.pass), row.frame_id}] = res.record.rows.size();
                res.record.rows.push_back(row);
                for (const auto& d : packets) {
                    auto bytes = serialize_datagram(d);
                    const std::size_t n = bytes.size();
                    down.send(std::move(bytes), n, now);
                }
            }
        }

        for (auto& delivery : down.poll_deliveries(now + kPollSlackMs)) {
            const Datagram d = parse_datagram(delivery.message);
            FrameRow& row = res.record.rows.at(row_of.at({static_cast<int>(d.pass), d.frame_id}));
            row.delivered_wire_bytes += delivery.size;
            for (auto& ev : assembler.ingest(d, delivery.deliver_at)) {
                if (ev.status != FrameStatus::complete) continue;
                FrameRow& done = res.record.rows.at(row_of.at({static_cast<int>(ev.pass), ev.frame_id}));
                done.delivered = true;
                done.end_to_end_ms = delivery.deliver_at - cfg.trajectory.time_ms(ev.frame_id);
                const int pk = static_cast<int>(ev.pass);
                if (auto it = last_arrival.find(pk); it != last_arrival.end())
                    done.frame_time_ms = delivery.deliver_at - it->second;
                last_arrival[pk] = delivery.deliver_at;
                client.receive(decode_frame(*ev.frame));
            }
        }
        assembler.expire(now);
        detail::finish_tick(res, opt, t, client.present(pose));
    }
    res.uplink = up.stats();
    res.downlink = down.stats();
    res.record.channel_delivered_bytes = res.downlink.delivered_bytes;
    res.record.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
    return res;
}

/// Same server and client computation with the transport removed.
inline RunResult run_direct(const Config& cfg, const RunOptions& opt = {}) {
    const auto wall0 = std::chrono::steady_clock::now();
    const World world(load_scene(cfg.scene));
    RunResult res;
    res.record.name = "direct";
    res.record.ticks = cfg.trajectory.ticks;
    res.record.duration_s = cfg.trajectory.ticks / cfg.trajectory.tick_rate;
    ServerRenderer server(world, cfg);
    for (std::uint32_t t = 0; t < cfg.trajectory.ticks; ++t) {
        const CameraPose pose = detail::pose_at(cfg, t);
        const ServerFrame f = server.render(pose);
        const auto g = render_gbuffer(world, pose);
        detail::finish_tick(res, opt, t, compose_final(*g, *f.vis, *f.ao, world.lights(), shading_params(cfg)));
    }
    res.record.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
    return res;
}

/// Offline oracle: `spp` shadow samples per light and N*spp AO rays per
/// pixel, no transport, no filtering.
inline Image render_reference_frame(const World& world, const Config& cfg, const CameraPose& pose, int spp) {
    if (spp < 1) throw std::invalid_argument("reference spp must be >= 1");
    const auto g = render_gbuffer(world, pose);
    const auto bvh = world.bvh(pose.frame_id);
    const auto lights = world.lights();
    std::vector<std::vector<double>> vis(lights.size(), std::vector<double>(g->size(), 1.0));
    std::vector<double> ao(g->size(), 1.0);
    const int ao_rays = cfg.render.ao_rays * spp;
    parallel_for(0, g->height, [&](int y) {
        for (int x = 0; x < g->width; ++x) {
            const std::size_t i = g->index(x, y);
            if (!g->valid(i)) continue;
            const Vec3d p(g->world_pos[i]), n(g->normal[i]);
            const auto pixel = static_cast<std::uint32_t>(i);
            for (std::size_t l = 0; l < lights.size(); ++l)
                vis[l][i] = light_visibility_fraction(*bvh, p, n, lights[l], static_cast<int>(l),
                                                      cfg.render.shadow_mode, cfg.render.seed, pose.frame_id, pixel,
                                                      spp);
            ao[i] = static_cast<double>(count_unoccluded(*bvh, p, n, cfg.render.ao_radius, cfg.render.seed,
                                                         pose.frame_id, pixel, ao_rays)) /
                    ao_rays;
        }
    });
    return compose_fractional(*g, vis, ao, lights, shading_params(cfg));
}

inline RunResult run_reference(const Config& cfg, int spp, const RunOptions& opt = {}) {
    const auto wall0 = std::chrono::steady_clock::now();
    const World world(load_scene(cfg.scene));
    RunResult res;
    res.record.name = "reference";
    res.record.ticks = cfg.trajectory.ticks;
    res.record.duration_s = cfg.trajectory.ticks / cfg.trajectory.tick_rate;
    for (std::uint32_t t = 0; t < cfg.trajectory.ticks; ++t)
        detail::finish_tick(res, opt, t, render_reference_frame(world, cfg, detail::pose_at(cfg, t), spp));
    res.record.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
    return res;
}

}  // namespace dhrs
