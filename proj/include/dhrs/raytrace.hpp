#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dhrs/bvh.hpp"
#include "dhrs/gbuffer.hpp"
#include "dhrs/random.hpp"

namespace dhrs {

enum class ShadowMode : std::uint8_t { hard = 0, soft = 1 };

inline constexpr int kMaxLights = 8;

/// One bit per light per pixel; bit i set iff light i is reachable.
struct VisibilityBuffer {
    int width = 0;
    int height = 0;
    CameraPose pose;
    int light_count = 0;
    ShadowMode mode = ShadowMode::hard;
    std::vector<std::uint8_t> bits;

    std::uint8_t all_lit() const { return static_cast<std::uint8_t>((1u << light_count) - 1u); }
    friend bool operator==(const VisibilityBuffer&, const VisibilityBuffer&) = default;
};

/// Per-pixel count of unoccluded AO rays out of `rays`, one byte per pixel.
struct AoBuffer {
    int width = 0;
    int height = 0;
    CameraPose pose;
    int rays = 32;
    float radius = 1.0f;
    std::vector<std::uint8_t> counts;
    friend bool operator==(const AoBuffer&, const AoBuffer&) = default;
};

// Stream tags keep AO and per-light shadow samples decorrelated.
inline constexpr std::uint64_t kStreamAo = 0xA0;
inline constexpr std::uint64_t stream_light(int light) { return 0x100 + static_cast<std::uint64_t>(light); }

/// Deterministic per-(seed, frame, pixel, stream) sample source. The n-th
/// 2D sample depends only on those keys and n.
class Sampler {
public:
    Sampler(std::uint64_t seed, std::uint32_t frame_id, std::uint32_t pixel, std::uint64_t stream,
            std::uint64_t first_sample = 0)
        : key_(hash_keys(seed, frame_id, pixel, stream)), index_(first_sample) {}

    double u(std::uint64_t sample, int dim) const {
        return to_unit(mix64(key_ ^ mix64(2 * sample + static_cast<std::uint64_t>(dim))));
    }

    /// Next 2D sample in the stream.
    std::pair<double, double> next2d() {
        const std::uint64_t s = index_++;
        return {u(s, 0), u(s, 1)};
    }

    void seek(std::uint64_t sample) { index_ = sample; }

private:
    std::uint64_t key_;
    std::uint64_t index_;
};

inline double cone_half_angle(const Light& light, const Vec3d& point) {
    const double d = length(light.center - point);
    if (d == 0.0) throw std::invalid_argument("point coincides with light center");
    if (light.radius == 0.0) return 0.0;
    return std::asin(std::min(1.0, light.radius / d));
}

/// Uniform direction on the spherical cap of half-angle `half_angle` around `axis`.
inline Vec3d sample_cone(const Vec3d& axis, double half_angle, Sampler& sampler) {
    auto [u1, u2] = sampler.next2d();
    if (half_angle <= 0.0) return axis;
    const double cos_max = std::cos(half_angle);
    const double cos_t = 1.0 - u1 * (1.0 - cos_max);
    const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
    const double phi = 2.0 * kPi * u2;
    const Frame f = Frame::around(axis);
    return normalize(f.to_world({sin_t * std::cos(phi), sin_t * std::sin(phi), cos_t}));
}

/// Cosine-weighted direction on the hemisphere around `normal` (pdf = cos / pi).
inline Vec3d sample_cosine_hemisphere(const Vec3d& normal, Sampler& sampler) {
    auto [u1, u2] = sampler.next2d();
    const double r = std::sqrt(u1);
    const double phi = 2.0 * kPi * u2;
    const double z = std::sqrt(std::max(0.0, 1.0 - u1));
    const Frame f = Frame::around(normal);
    return normalize(f.to_world({r * std::cos(phi), r * std::sin(phi), z}));
}

/// Distance along `dir` from `origin` to the emitter sphere (entry point from
/// outside, exit point from inside). Falls back to the closest approach when a
/// cap-edge direction grazes the sphere numerically.
inline double distance_to_light(const Vec3d& origin, const Vec3d& dir, const Light& light) {
    const Vec3d oc = origin - light.center;
    const double b = dot(dir, oc);
    const double c = dot(oc, oc) - light.radius * light.radius;
    const double disc = b * b - c;
    if (disc < 0.0) return std::max(-b, 0.0);
    const double s = std::sqrt(disc);
    return c > 0.0 ? -b - s : -b + s;
}

/// Shadow ray from a surface point toward one light. Hard mode aims at the
/// center; soft mode jitters within the cone subtended by the emitter.
inline Ray shadow_ray(const Vec3d& point, const Vec3d& normal, const Light& light, ShadowMode mode,
                      Sampler& sampler) {
    const Vec3d origin = point + normal * kSurfaceEpsilon;
    const Vec3d to_center = light.center - origin;
    const double dist = length(to_center);
    const Vec3d axis = to_center / dist;
    if (mode == ShadowMode::hard || light.radius == 0.0) return {origin, axis, dist};
    const Vec3d dir = sample_cone(axis, cone_half_angle(light, origin), sampler);
    return {origin, dir, distance_to_light(origin, dir, light)};
}

inline VisibilityBuffer trace_visibility(const GBuffer& g, const Bvh& bvh, std::span<const Light> lights,
                                         ShadowMode mode, std::uint64_t seed) {
    if (lights.size() > static_cast<std::size_t>(kMaxLights))
        throw std::invalid_argument("visibility bitmask holds at most 8 lights");
    VisibilityBuffer vis;
    vis.width = g.width;
    vis.height = g.height;
    vis.pose = g.pose;
    vis.light_count = static_cast<int>(lights.size());
    vis.mode = mode;
    vis.bits.assign(g.size(), vis.all_lit());
    parallel_for(0, g.height, [&](int y) {
        for (int x = 0; x < g.width; ++x) {
            const std::size_t i = g.index(x, y);
            if (!g.valid(i)) continue;
            const Vec3d p(g.world_pos[i]), n(g.normal[i]);
            std::uint8_t mask = 0;
            for (std::size_t l = 0; l < lights.size(); ++l) {
                Sampler s(seed, g.pose.frame_id, static_cast<std::uint32_t>(i), stream_light(static_cast<int>(l)));
                if (!bvh.occluded(shadow_ray(p, n, lights[l], mode, s))) mask |= static_cast<std::uint8_t>(1u << l);
            }
            vis.bits[i] = mask;
        }
    });
    return vis;
}

/// Number of AO rays, among ray indices [first, first + count), that travel
/// `radius` without hitting geometry.
inline int count_unoccluded(const Bvh& bvh, const Vec3d& point, const Vec3d& normal, double radius,
                            std::uint64_t seed, std::uint32_t frame_id, std::uint32_t pixel, int count,
                            std::uint64_t first = 0) {
    Sampler s(seed, frame_id, pixel, kStreamAo, first);
    const Vec3d origin = point + normal * kSurfaceEpsilon;
    int unoccluded = 0;
    for (int k = 0; k < count; ++k) {
        const Vec3d dir = sample_cosine_hemisphere(normal, s);
        if (!bvh.occluded({origin, dir, radius})) ++unoccluded;
    }
    return unoccluded;
}

inline AoBuffer trace_ao(const GBuffer& g, const Bvh& bvh, int rays, double radius, std::uint64_t seed) {
    if (rays < 1 || rays > 255) throw std::invalid_argument("AO ray count must be in [1, 255]");
    if (!(radius > 0.0)) throw std::invalid_argument("AO radius must be > 0");
    AoBuffer ao;
    ao.width = g.width;
    ao.height = g.height;
    ao.pose = g.pose;
    ao.rays = rays;
    ao.radius = static_cast<float>(radius);
    ao.counts.assign(g.size(), static_cast<std::uint8_t>(rays));
    parallel_for(0, g.height, [&](int y) {
        for (int x = 0; x < g.width; ++x) {
            const std::size_t i = g.index(x, y);
            if (!g.valid(i)) continue;
            ao.counts[i] = static_cast<std::uint8_t>(count_unoccluded(
                bvh, Vec3d(g.world_pos[i]), Vec3d(g.normal[i]), radius, seed, g.pose.frame_id,
                static_cast<std::uint32_t>(i), rays));
        }
    });
    return ao;
}

/// Fraction of `spp` cone samples that reach the light. Sample 0 is the same
/// ray soft-mode visibility traces for this (seed, frame, pixel).
inline double light_visibility_fraction(const Bvh& bvh, const Vec3d& point, const Vec3d& normal,
                                        const Light& light, int light_index, ShadowMode mode, std::uint64_t seed,
                                        std::uint32_t frame_id, std::uint32_t pixel, int spp) {
    Sampler s(seed, frame_id, pixel, stream_light(light_index));
    int lit = 0;
    for (int k = 0; k < spp; ++k) {
        s.seek(static_cast<std::uint64_t>(k));
        if (!bvh.occluded(shadow_ray(point, normal, light, mode, s))) ++lit;
    }
    return static_cast<double>(lit) / spp;
}

}  // namespace dhrs
