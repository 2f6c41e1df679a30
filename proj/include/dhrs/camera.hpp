#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

#include "dhrs/geometry.hpp"

namespace dhrs {

/// Continuous screen position in pixels (pixel centers at +0.5) plus view depth.
struct ScreenPoint {
    double x = 0.0;
    double y = 0.0;
    double depth = 0.0;
};

/// Pinhole camera. Stored in single precision so that it survives the wire
/// format bit-exactly; all derived math happens in double.
struct Camera {
    Vec3f position;
    Vec3f right{1, 0, 0};
    Vec3f up{0, 1, 0};
    Vec3f forward{0, 0, -1};
    float vertical_fov = static_cast<float>(kPi / 3.0);
    int width = 320;
    int height = 180;

    static Camera look_at(const Vec3d& eye, const Vec3d& target, double vertical_fov, int width,
                          int height, const Vec3d& world_up = {0, 1, 0}) {
        const Vec3d f = normalize(target - eye);
        const Vec3d r = normalize(cross(f, world_up));
        const Vec3d u = cross(r, f);
        Camera c;
        c.position = Vec3f(eye);
        c.right = Vec3f(r);
        c.up = Vec3f(u);
        c.forward = Vec3f(f);
        c.vertical_fov = static_cast<float>(vertical_fov);
        c.width = width;
        c.height = height;
        return c;
    }

    double tan_half_fov() const { return std::tan(0.5 * static_cast<double>(vertical_fov)); }
    double aspect() const { return static_cast<double>(width) / static_cast<double>(height); }
    int pixel_count() const { return width * height; }

    /// Primary ray through continuous pixel coordinates (px, py).
    Ray primary_ray(double px, double py) const {
        const double th = tan_half_fov();
        const double sx = (2.0 * px / width - 1.0) * th * aspect();
        const double sy = (1.0 - 2.0 * py / height) * th;
        const Vec3d d = Vec3d(forward) + Vec3d(right) * sx + Vec3d(up) * sy;
        return {Vec3d(position), normalize(d), kInfinity};
    }

    double view_depth(const Vec3d& world) const { return dot(world - Vec3d(position), Vec3d(forward)); }

    /// Projects a world point; empty when it lies behind the image plane.
    std::optional<ScreenPoint> project(const Vec3d& world) const {
        const Vec3d v = world - Vec3d(position);
        const double z = dot(v, Vec3d(forward));
        if (!(z > 1e-9)) return std::nullopt;
        const double th = tan_half_fov();
        const double sx = dot(v, Vec3d(right)) / (z * th * aspect());
        const double sy = dot(v, Vec3d(up)) / (z * th);
        return ScreenPoint{(sx + 1.0) * 0.5 * width, (1.0 - sy) * 0.5 * height, z};
    }

    void validate() const {
        const Vec3d r(right), u(up), f(forward);
        const double tol = 1e-6;
        if (std::abs(length(r) - 1) > tol || std::abs(length(u) - 1) > tol || std::abs(length(f) - 1) > tol ||
            std::abs(dot(r, u)) > tol || std::abs(dot(r, f)) > tol || std::abs(dot(u, f)) > tol)
            throw std::invalid_argument("camera basis is not orthonormal");
        if (!(vertical_fov > 0.0f && vertical_fov < static_cast<float>(kPi)))
            throw std::invalid_argument("camera vertical_fov must be in (0, pi)");
        if (width <= 0 || height <= 0 || width > 65535 || height > 65535)
            throw std::invalid_argument("camera resolution out of range");
    }

    friend bool operator==(const Camera&, const Camera&) = default;
};

}  // namespace dhrs
