#pragma once

#include <cstdint>
#include <fstream>
#include <iterator>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "dhrs/bvh.hpp"
#include "dhrs/bytes.hpp"
#include "dhrs/camera.hpp"
#include "dhrs/parallel.hpp"

namespace dhrs {

/// Camera state for one client tick; this is what travels to the server.
struct CameraPose {
    std::uint32_t frame_id = 0;
    Camera camera;
    friend bool operator==(const CameraPose&, const CameraPose&) = default;
};

/// Marks motion for pixels whose surface was behind the previous camera.
inline constexpr float kInvalidMotion = -1.0e6f;

struct GBuffer {
    int width = 0;
    int height = 0;
    CameraPose pose;
    std::vector<Vec3f> world_pos;
    std::vector<Vec3f> normal;
    std::vector<float> depth;       // view-space z; +inf for background
    std::vector<std::int32_t> mesh_id;  // -1 for background
    std::vector<Vec2f> motion;      // previous-frame position minus current, in pixels
    std::vector<Vec3f> albedo;

    GBuffer() = default;
    GBuffer(int w, int h)
        : width(w), height(h), world_pos(size()), normal(size()),
          depth(size(), std::numeric_limits<float>::infinity()), mesh_id(size(), -1), motion(size()),
          albedo(size()) {}

    std::size_t size() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
    bool valid(std::size_t i) const { return mesh_id[i] >= 0; }
    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
};

/// Visible-surface pass implemented as one primary ray per pixel center.
inline GBuffer rasterize(const Bvh& bvh, const CameraPose& pose) {
    const Camera& cam = pose.camera;
    GBuffer g(cam.width, cam.height);
    g.pose = pose;
    parallel_for(0, cam.height, [&](int y) {
        for (int x = 0; x < cam.width; ++x) {
            const Ray ray = cam.primary_ray(x + 0.5, y + 0.5);
            const auto hit = bvh.intersect(ray);
            if (!hit) continue;
            const std::size_t i = g.index(x, y);
            const Vec3d p = ray.origin + ray.direction * hit->t;
            g.world_pos[i] = Vec3f(p);
            g.normal[i] = Vec3f(hit->normal);
            g.depth[i] = static_cast<float>(cam.view_depth(p));
            g.mesh_id[i] = hit->mesh_id;
            g.albedo[i] = Vec3f(hit->albedo);
        }
    });
    return g;
}

/// Fills motion with (previous screen position of world_pos) - (current pixel center).
inline void compute_motion(GBuffer& g, const CameraPose& prev_pose) {
    parallel_for(0, g.height, [&](int y) {
        for (int x = 0; x < g.width; ++x) {
            const std::size_t i = g.index(x, y);
            if (!g.valid(i)) {
                g.motion[i] = {0.0f, 0.0f};
                continue;
            }
            const auto prev = prev_pose.camera.project(Vec3d(g.world_pos[i]));
            if (!prev) {
                g.motion[i] = {kInvalidMotion, kInvalidMotion};
                continue;
            }
            g.motion[i] = {static_cast<float>(prev->x - (x + 0.5)), static_cast<float>(prev->y - (y + 0.5))};
        }
    });
}

// ---------------------------------------------------------------------------
// Dump format: 64-byte header then one planar little-endian array per scalar.
//   "DHRG" u32 width u32 height u32 frame_id u32 plane_bitmap f32 vertical_fov
//   f32 position[3] f32 forward[3] f32 up[3] u32 reserved
// The camera's right vector is not stored; readers derive it as forward x up.

enum GBufferPlane : std::uint32_t {
    kPlaneWorldPos = 1u << 0,  // 3 x f32
    kPlaneNormal = 1u << 1,    // 3 x f32
    kPlaneDepth = 1u << 2,     // f32
    kPlaneMeshId = 1u << 3,    // i32
    kPlaneMotion = 1u << 4,    // 2 x f32
    kPlaneAlbedo = 1u << 5,    // 3 x f32
    kPlaneAll = 0x3f,
};

inline std::vector<std::uint8_t> serialize_gbuffer(const GBuffer& g, std::uint32_t planes = kPlaneAll) {
    std::vector<std::uint8_t> out;
    ByteWriter w(out);
    w.tag("DHRG");
    w.u32(static_cast<std::uint32_t>(g.width));
    w.u32(static_cast<std::uint32_t>(g.height));
    w.u32(g.pose.frame_id);
    w.u32(planes);
    const Camera& c = g.pose.camera;
    w.f32(c.vertical_fov);
    for (const Vec3f& v : {c.position, c.forward, c.up}) {
        w.f32(v.x);
        w.f32(v.y);
        w.f32(v.z);
    }
    w.u32(0);
    auto vec3_planes = [&](const std::vector<Vec3f>& v) {
        for (int k = 0; k < 3; ++k)
            for (const auto& e : v) w.f32(e[k]);
    };
    if (planes & kPlaneWorldPos) vec3_planes(g.world_pos);
    if (planes & kPlaneNormal) vec3_planes(g.normal);
    if (planes & kPlaneDepth)
        for (float d : g.depth) w.f32(d);
    if (planes & kPlaneMeshId)
        for (auto m : g.mesh_id) w.i32(m);
    if (planes & kPlaneMotion) {
        for (const auto& m : g.motion) w.f32(m.x);
        for (const auto& m : g.motion) w.f32(m.y);
    }
    if (planes & kPlaneAlbedo) vec3_planes(g.albedo);
    return out;
}

inline GBuffer deserialize_gbuffer(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    r.expect_tag("DHRG");
    const auto width = r.u32(), height = r.u32();
    if (width == 0 || height == 0 || width > 65535 || height > 65535)
        throw DecodeError("gbuffer dump: bad dimensions");
    GBuffer g(static_cast<int>(width), static_cast<int>(height));
    g.pose.frame_id = r.u32();
    const auto planes = r.u32();
    Camera& c = g.pose.camera;
    c.vertical_fov = r.f32();
    for (Vec3f* v : {&c.position, &c.forward, &c.up}) {
        v->x = r.f32();
        v->y = r.f32();
        v->z = r.f32();
    }
    c.right = cross(c.forward, c.up);
    c.width = static_cast<int>(width);
    c.height = static_cast<int>(height);
    r.u32();
    auto vec3_planes = [&](std::vector<Vec3f>& v) {
        for (int k = 0; k < 3; ++k)
            for (auto& e : v) e[k] = r.f32();
    };
    if (planes & kPlaneWorldPos) vec3_planes(g.world_pos);
    if (planes & kPlaneNormal) vec3_planes(g.normal);
    if (planes & kPlaneDepth)
        for (float& d : g.depth) d = r.f32();
    if (planes & kPlaneMeshId)
        for (auto& m : g.mesh_id) m = r.i32();
    if (planes & kPlaneMotion) {
        for (auto& m : g.motion) m.x = r.f32();
        for (auto& m : g.motion) m.y = r.f32();
    }
    if (planes & kPlaneAlbedo) vec3_planes(g.albedo);
    if (r.remaining() != 0) throw DecodeError("gbuffer dump: trailing bytes");
    return g;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace dhrs
