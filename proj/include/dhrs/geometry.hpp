#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

#include "dhrs/math.hpp"

namespace dhrs {

/// Rays are queried over the open interval (kRayTMin, t_max).
inline constexpr double kRayTMin = 1e-6;
/// Offset applied along the geometric normal before spawning secondary rays.
inline constexpr double kSurfaceEpsilon = 1e-4;

struct Ray {
    Vec3d origin;
    Vec3d direction;  // unit length
    double t_max = kInfinity;
};

struct Aabb {
    Vec3d lo{kInfinity, kInfinity, kInfinity};
    Vec3d hi{-kInfinity, -kInfinity, -kInfinity};

    void expand(const Vec3d& p) { lo = min(lo, p); hi = max(hi, p); }
    void expand(const Aabb& b) { lo = min(lo, b.lo); hi = max(hi, b.hi); }
    Vec3d extent() const { return hi - lo; }
    Vec3d center() const { return (lo + hi) * 0.5; }
    bool contains(const Aabb& b) const {
        return lo.x <= b.lo.x && lo.y <= b.lo.y && lo.z <= b.lo.z &&
               hi.x >= b.hi.x && hi.y >= b.hi.y && hi.z >= b.hi.z;
    }
    int longest_axis() const {
        const Vec3d e = extent();
        if (e.x >= e.y && e.x >= e.z) return 0;
        return e.y >= e.z ? 1 : 2;
    }
    friend bool operator==(const Aabb&, const Aabb&) = default;
};

struct Triangle {
    Vec3d v0, v1, v2;
    int mesh_id = 0;
    Vec3d albedo{0.8, 0.8, 0.8};

    Vec3d geometric_normal() const { return normalize(cross(v1 - v0, v2 - v0)); }
    double area() const { return 0.5 * length(cross(v1 - v0, v2 - v0)); }
    Vec3d centroid() const { return (v0 + v1 + v2) / 3.0; }
    Aabb bounds() const {
        Aabb b;
        b.expand(v0);
        b.expand(v1);
        b.expand(v2);
        return b;
    }

    void validate() const {
        if (!(area() > 0.0)) throw std::invalid_argument("triangle is degenerate (zero area)");
        if (mesh_id < 0) throw std::invalid_argument("triangle mesh_id must be >= 0");
    }
    friend bool operator==(const Triangle&, const Triangle&) = default;
};

/// Spherical emitter; radius 0 is a point light.
struct Light {
    Vec3d center;
    double radius = 0.0;
    Vec3d intensity{1.0, 1.0, 1.0};

    void validate() const {
        if (!(radius >= 0.0)) throw std::invalid_argument("light radius must be >= 0");
        if (intensity.x < 0.0 || intensity.y < 0.0 || intensity.z < 0.0)
            throw std::invalid_argument("light intensity must be >= 0");
    }
    friend bool operator==(const Light&, const Light&) = default;
};

/// Two-sided Moller-Trumbore. Returns t in (t_min, t_max) on a hit.
inline std::optional<double> intersect_triangle(const Ray& ray, const Vec3d& v0, const Vec3d& e1,
                                                const Vec3d& e2, double t_min = kRayTMin) {
    const Vec3d p = cross(ray.direction, e2);
    const double det = dot(e1, p);
    if (det == 0.0) return std::nullopt;
    const double inv_det = 1.0 / det;
    const Vec3d s = ray.origin - v0;
    const double u = dot(s, p) * inv_det;
    if (u < 0.0 || u > 1.0) return std::nullopt;
    const Vec3d q = cross(s, e1);
    const double v = dot(ray.direction, q) * inv_det;
    if (v < 0.0 || u + v > 1.0) return std::nullopt;
    const double t = dot(e2, q) * inv_det;
    if (t <= t_min || t >= ray.t_max) return std::nullopt;
    return t;
}

inline std::optional<double> intersect_triangle(const Ray& ray, const Triangle& tri) {
    return intersect_triangle(ray, tri.v0, tri.v1 - tri.v0, tri.v2 - tri.v0);
}

}  // namespace dhrs
