#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dhrs/camera.hpp"
#include "dhrs/geometry.hpp"
#include "dhrs/random.hpp"

namespace dhrs {

/// Rigid per-tick translation of one mesh, used for dynamic objects.
struct MeshMotion {
    int mesh_id = 0;
    Vec3d velocity_per_tick;
    friend bool operator==(const MeshMotion&, const MeshMotion&) = default;
};

struct Scene {
    std::string name;
    std::vector<Triangle> triangles;
    std::vector<Light> lights;
    std::vector<MeshMotion> motions;
    Vec3d view_eye{0, 1, 3};
    Vec3d view_target{0, 0, 0};

    bool is_dynamic() const { return !motions.empty(); }

    /// Geometry at a given tick with every rigid motion applied.
    Scene at_tick(std::uint32_t tick) const {
        if (motions.empty()) return *this;
        Scene s = *this;
        for (auto& tri : s.triangles) {
            for (const auto& m : motions) {
                if (m.mesh_id != tri.mesh_id) continue;
                const Vec3d offset = m.velocity_per_tick * static_cast<double>(tick);
                tri.v0 += offset;
                tri.v1 += offset;
                tri.v2 += offset;
            }
        }
        return s;
    }

    void validate() const {
        if (triangles.empty()) throw std::invalid_argument("scene has no triangles");
        if (lights.empty()) throw std::invalid_argument("scene has no lights");
        for (const auto& t : triangles) t.validate();
        for (const auto& l : lights) l.validate();
    }
};

using SceneParams = std::map<std::string, double>;

namespace detail {

inline void add_quad(std::vector<Triangle>& out, const Vec3d& a, const Vec3d& b, const Vec3d& c,
                     const Vec3d& d, int mesh_id, const Vec3d& albedo) {
    out.push_back({a, b, c, mesh_id, albedo});
    out.push_back({a, c, d, mesh_id, albedo});
}

// Splits the quad into roughly `tile`-sized cells so the BVH can cull short rays.
inline void add_tiled_quad(std::vector<Triangle>& out, const Vec3d& a, const Vec3d& b, const Vec3d& c,
                           const Vec3d& d, int mesh_id, const Vec3d& albedo, double tile) {
    const int nu = std::max(1, static_cast<int>(std::ceil(length(b - a) / tile)));
    const int nv = std::max(1, static_cast<int>(std::ceil(length(d - a) / tile)));
    auto at = [&](int i, int j) {
        const double u = static_cast<double>(i) / nu, v = static_cast<double>(j) / nv;
        return a * ((1 - u) * (1 - v)) + b * (u * (1 - v)) + c * (u * v) + d * ((1 - u) * v);
    };
    for (int j = 0; j < nv; ++j)
        for (int i = 0; i < nu; ++i)
            add_quad(out, at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1), mesh_id, albedo);
}

inline void add_box(std::vector<Triangle>& out, const Vec3d& lo, const Vec3d& hi, int mesh_id,
                    const Vec3d& albedo) {
    const Vec3d p[8] = {{lo.x, lo.y, lo.z}, {hi.x, lo.y, lo.z}, {hi.x, hi.y, lo.z}, {lo.x, hi.y, lo.z},
                        {lo.x, lo.y, hi.z}, {hi.x, lo.y, hi.z}, {hi.x, hi.y, hi.z}, {lo.x, hi.y, hi.z}};
    add_quad(out, p[0], p[3], p[2], p[1], mesh_id, albedo);  // -z
    add_quad(out, p[4], p[5], p[6], p[7], mesh_id, albedo);  // +z
    add_quad(out, p[0], p[4], p[7], p[3], mesh_id, albedo);  // -x
    add_quad(out, p[1], p[2], p[6], p[5], mesh_id, albedo);  // +x
    add_quad(out, p[3], p[7], p[6], p[2], mesh_id, albedo);  // +y
    add_quad(out, p[0], p[1], p[5], p[4], mesh_id, albedo);  // -y
}

inline double param_or(const SceneParams& params, const std::string& key, double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

// Closed room (floor, ceiling, three walls; the +z side is open) with three props.
inline Scene make_box_room(const SceneParams& params) {
    Scene s;
    s.name = "box-room";
    auto& t = s.triangles;
    const double w = 4.0, h = 3.0;
    const double tile = 1.0;
    add_tiled_quad(t, {-w, 0, -w}, {-w, 0, w}, {w, 0, w}, {w, 0, -w}, 0, {0.80, 0.78, 0.74}, tile);
    add_tiled_quad(t, {-w, h, -w}, {w, h, -w}, {w, h, w}, {-w, h, w}, 1, {0.90, 0.90, 0.90}, tile);
    add_tiled_quad(t, {-w, 0, -w}, {w, 0, -w}, {w, h, -w}, {-w, h, -w}, 2, {0.86, 0.56, 0.62}, tile);
    add_tiled_quad(t, {-w, 0, -w}, {-w, h, -w}, {-w, h, w}, {-w, 0, w}, 3, {0.58, 0.72, 0.86}, tile);
    add_tiled_quad(t, {w, 0, -w}, {w, 0, w}, {w, h, w}, {w, h, -w}, 4, {0.86, 0.80, 0.55}, tile);
    add_box(t, {-2.2, 0.0, -2.2}, {-1.0, 1.2, -1.0}, 5, {0.75, 0.32, 0.30});
    add_box(t, {1.3, 0.0, -2.6}, {1.9, 2.2, -2.0}, 6, {0.32, 0.62, 0.42});
    add_box(t, {-0.2, 0.0, 0.2}, {1.2, 0.6, 1.0}, 7, {0.36, 0.42, 0.78});
    s.lights.push_back({{0.3, 2.5, -0.5}, param_or(params, "light_radius", 0.3), {4.5, 4.4, 4.2}});
    s.view_eye = {0.0, 1.6, 3.6};
    s.view_target = {0.0, 0.9, -2.0};
    return s;
}

inline Scene make_columns_hall(const SceneParams& params) {
    Scene s;
    s.name = "columns-hall";
    SplitMix rng(static_cast<std::uint64_t>(param_or(params, "seed", 7.0)));
    auto& t = s.triangles;
    add_tiled_quad(t, {-12, 0, -12}, {-12, 0, 12}, {12, 0, 12}, {12, 0, -12}, 0, {0.78, 0.76, 0.72}, 1.5);
    int mesh = 1;
    for (int side = -1; side <= 1; side += 2) {
        for (int k = 0; k < 5; ++k) {
            const double half = rng.uniform(0.3, 0.5);
            const double height = rng.uniform(2.0, 4.0);
            const double x = side * 3.0 + rng.uniform(-0.4, 0.4);
            const double z = -8.0 + 4.0 * k + rng.uniform(-0.4, 0.4);
            const Vec3d albedo{rng.uniform(0.4, 0.9), rng.uniform(0.4, 0.9), rng.uniform(0.4, 0.9)};
            add_box(t, {x - half, 0.0, z - half}, {x + half, height, z + half}, mesh++, albedo);
        }
    }
    const double radius = param_or(params, "light_radius", 0.4);
    s.lights.push_back({{-1.5, 5.0, -3.0}, radius, {14.0, 13.0, 12.0}});
    s.lights.push_back({{2.0, 4.0, 4.0}, radius, {8.0, 9.0, 11.0}});
    s.view_eye = {0.0, 2.0, 10.0};
    s.view_target = {0.0, 1.0, 0.0};
    return s;
}

// Ground (y = 0, x >= 0) meeting a vertical wall (x = 0) along the z axis. Both
// extend far enough to act as half-planes for any practical AO radius.
inline Scene make_corner_wall(const SceneParams& params) {
    Scene s;
    s.name = "corner-wall";
    const double e = param_or(params, "extent", 1000.0);
    add_quad(s.triangles, {0, 0, -e}, {0, 0, e}, {e, 0, e}, {e, 0, -e}, 0, {0.8, 0.8, 0.8});
    add_quad(s.triangles, {0, 0, -e}, {0, e, -e}, {0, e, e}, {0, 0, e}, 1, {0.7, 0.7, 0.8});
    s.lights.push_back({{3.0, 6.0, 2.0}, param_or(params, "light_radius", 0.5), {40.0, 40.0, 40.0}});
    s.view_eye = {0.3, 0.25, 0.0};
    s.view_target = {0.0, 0.0, 0.0};
    return s;
}

}  // namespace detail

/// Procedural stand-in scenes: box-room, columns-hall, corner-wall.
inline Scene generate_scene(const std::string& name, const SceneParams& params = {}) {
    Scene s;
    if (name == "box-room")
        s = detail::make_box_room(params);
    else if (name == "columns-hall")
        s = detail::make_columns_hall(params);
    else if (name == "corner-wall")
        s = detail::make_corner_wall(params);
    else
        throw std::invalid_argument("unknown scene: " + name);
    s.validate();
    return s;
}

/// Triangle-soup text format:
///   tris <count> lights <count>
///   v0x v0y v0z v1x v1y v1z v2x v2y v2z mesh_id r g b     (one line per triangle)
///   cx cy cz radius ir ig ib                               (one line per light)
/// Whitespace separated, '#' starts a comment.
inline Scene parse_triangle_soup(std::istream& in, const std::string& name = "file") {
    std::stringstream clean;
    std::string line;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        clean << line << '\n';
    }
    Scene s;
    s.name = name;
    std::string tris_kw, lights_kw;
    long tri_count = -1, light_count = -1;
    if (!(clean >> tris_kw >> tri_count >> lights_kw >> light_count) || tris_kw != "tris" ||
        lights_kw != "lights" || tri_count < 0 || light_count < 0)
        throw std::runtime_error("triangle soup: bad header, expected 'tris <n> lights <m>'");
    for (long i = 0; i < tri_count; ++i) {
        Triangle t;
        if (!(clean >> t.v0.x >> t.v0.y >> t.v0.z >> t.v1.x >> t.v1.y >> t.v1.z >> t.v2.x >> t.v2.y >>
              t.v2.z >> t.mesh_id >> t.albedo.x >> t.albedo.y >> t.albedo.z))
            throw std::runtime_error("triangle soup: truncated triangle record " + std::to_string(i));
        s.triangles.push_back(t);
    }
    for (long i = 0; i < light_count; ++i) {
        Light l;
        if (!(clean >> l.center.x >> l.center.y >> l.center.z >> l.radius >> l.intensity.x >> l.intensity.y >>
              l.intensity.z))
            throw std::runtime_error("triangle soup: truncated light record " + std::to_string(i));
        s.lights.push_back(l);
    }
    s.validate();
    Aabb box;
    for (const auto& t : s.triangles) box.expand(t.bounds());
    s.view_target = box.center();
    s.view_eye = box.center() + Vec3d{0.0, 0.25, 1.0} * length(box.extent());
    return s;
}

inline Scene load_triangle_soup(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scene file: " + path);
    return parse_triangle_soup(in, path);
}

inline void write_triangle_soup(std::ostream& out, const Scene& s) {
    out.precision(17);
    out << "tris " << s.triangles.size() << " lights " << s.lights.size() << '\n';
    for (const auto& t : s.triangles)
        out << t.v0.x << ' ' << t.v0.y << ' ' << t.v0.z << ' ' << t.v1.x << ' ' << t.v1.y << ' ' << t.v1.z << ' '
            << t.v2.x << ' ' << t.v2.y << ' ' << t.v2.z << ' ' << t.mesh_id << ' ' << t.albedo.x << ' '
            << t.albedo.y << ' ' << t.albedo.z << '\n';
    for (const auto& l : s.lights)
        out << l.center.x << ' ' << l.center.y << ' ' << l.center.z << ' ' << l.radius << ' ' << l.intensity.x
            << ' ' << l.intensity.y << ' ' << l.intensity.z << '\n';
}

}  // namespace dhrs
