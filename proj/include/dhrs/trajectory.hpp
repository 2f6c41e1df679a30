#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dhrs/camera.hpp"

namespace dhrs {

struct Quat {
    double w = 1, x = 0, y = 0, z = 0;
};

inline double dot(const Quat& a, const Quat& b) { return a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z; }

inline Quat normalize(const Quat& q) {
    const double n = std::sqrt(dot(q, q));
    return {q.w / n, q.x / n, q.y / n, q.z / n};
}

/// Rotation whose matrix columns are (right, up, -forward).
inline Quat quat_from_basis(const Vec3d& r, const Vec3d& u, const Vec3d& f) {
    const Vec3d b = -f;
    const double m00 = r.x, m01 = u.x, m02 = b.x;
    const double m10 = r.y, m11 = u.y, m12 = b.y;
    const double m20 = r.z, m21 = u.z, m22 = b.z;
    const double tr = m00 + m11 + m22;
    Quat q;
    if (tr > 0) {
        const double s = std::sqrt(tr + 1.0) * 2;
        q = {0.25 * s, (m21 - m12) / s, (m02 - m20) / s, (m10 - m01) / s};
    } else if (m00 > m11 && m00 > m22) {
        const double s = std::sqrt(1.0 + m00 - m11 - m22) * 2;
        q = {(m21 - m12) / s, 0.25 * s, (m01 + m10) / s, (m02 + m20) / s};
    } else if (m11 > m22) {
        const double s = std::sqrt(1.0 + m11 - m00 - m22) * 2;
        q = {(m02 - m20) / s, (m01 + m10) / s, 0.25 * s, (m12 + m21) / s};
    } else {
        const double s = std::sqrt(1.0 + m22 - m00 - m11) * 2;
        q = {(m10 - m01) / s, (m02 + m20) / s, (m12 + m21) / s, 0.25 * s};
    }
    return normalize(q);
}

inline void basis_from_quat(const Quat& q, Vec3d& r, Vec3d& u, Vec3d& f) {
    const double w = q.w, x = q.x, y = q.y, z = q.z;
    r = {1 - 2 * (y * y + z * z), 2 * (x * y + w * z), 2 * (x * z - w * y)};
    u = {2 * (x * y - w * z), 1 - 2 * (x * x + z * z), 2 * (y * z + w * x)};
    f = -Vec3d{2 * (x * z + w * y), 2 * (y * z - w * x), 1 - 2 * (x * x + y * y)};
}

inline Quat slerp(Quat a, Quat b, double t) {
    double c = dot(a, b);
    if (c < 0) {
        b = {-b.w, -b.x, -b.y, -b.z};
        c = -c;
    }
    if (c > 0.9995) {
        return normalize({a.w + t * (b.w - a.w), a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), a.z + t * (b.z - a.z)});
    }
    const double theta = std::acos(c);
    const double sa = std::sin((1 - t) * theta) / std::sin(theta), sb = std::sin(t * theta) / std::sin(theta);
    return {sa * a.w + sb * b.w, sa * a.x + sb * b.x, sa * a.y + sb * b.y, sa * a.z + sb * b.z};
}

struct Keyframe {
    std::uint32_t tick = 0;
    Vec3d eye;
    Vec3d target;
    friend bool operator==(const Keyframe&, const Keyframe&) = default;
};

/// Scripted camera path: linear position, slerped orientation between keyframes.
struct Trajectory {
    std::vector<Keyframe> keyframes;
    double tick_rate = 60.0;
    std::uint32_t ticks = 300;

    void validate() const {
        if (keyframes.empty()) throw std::invalid_argument("trajectory needs at least one keyframe");
        for (std::size_t i = 1; i < keyframes.size(); ++i)
            if (keyframes[i].tick <= keyframes[i - 1].tick)
                throw std::invalid_argument("trajectory keyframe ticks must be strictly increasing");
        for (const auto& k : keyframes) {
            const Vec3d d = k.target - k.eye;
            if (!(length(d) > 0.0)) throw std::invalid_argument("keyframe eye and target coincide");
            if (length(cross(normalize(d), Vec3d{0, 1, 0})) < 1e-6)
                throw std::invalid_argument("keyframe view direction is vertical");
        }
        if (!(tick_rate > 0.0)) throw std::invalid_argument("tick_rate must be > 0");
        if (ticks < 1) throw std::invalid_argument("ticks must be >= 1");
    }

    double tick_ms() const { return 1000.0 / tick_rate; }
    double time_ms(std::uint32_t tick) const { return tick * tick_ms(); }

    Camera camera_at(std::uint32_t tick, double fov, int width, int height) const {
        auto cam_of = [&](const Keyframe& k) { return Camera::look_at(k.eye, k.target, fov, width, height); };
        if (tick <= keyframes.front().tick) return cam_of(keyframes.front());
        if (tick >= keyframes.back().tick) return cam_of(keyframes.back());
        auto hi = std::upper_bound(keyframes.begin(), keyframes.end(), tick,
                                   [](std::uint32_t t, const Keyframe& k) { return t < k.tick; });
        const Keyframe& b = *hi;
        const Keyframe& a = *(hi - 1);
        const double t = static_cast<double>(tick - a.tick) / static_cast<double>(b.tick - a.tick);
        auto basis = [](const Keyframe& k) {
            const Vec3d f = normalize(k.target - k.eye);
            const Vec3d r = normalize(cross(f, Vec3d{0, 1, 0}));
            return quat_from_basis(r, cross(r, f), f);
        };
        const Quat q = slerp(basis(a), basis(b), t);
        Vec3d r, u, f;
        basis_from_quat(normalize(q), r, u, f);
        // Re-orthonormalize in double before narrowing to the camera's float storage.
        f = normalize(f);
        r = normalize(cross(f, u));
        u = cross(r, f);
        Camera c;
        c.position = Vec3f(a.eye + (b.eye - a.eye) * t);
        c.right = Vec3f(r);
        c.up = Vec3f(u);
        c.forward = Vec3f(f);
        c.vertical_fov = static_cast<float>(fov);
        c.width = width;
        c.height = height;
        return c;
    }
};

/// Orbit and dolly through the box room; keyframes every 75 ticks, closing the loop.
inline Trajectory standard_trajectory() {
    Trajectory t;
    t.tick_rate = 60.0;
    t.ticks = 300;
    t.keyframes = {
        {0, {0.0, 1.6, 3.6}, {0.0, 0.9, -2.0}},
        {75, {1.8, 1.5, 2.8}, {-0.3, 0.8, -1.5}},
        {150, {0.8, 1.3, 1.6}, {-1.2, 0.6, -2.0}},
        {225, {-1.6, 1.5, 2.6}, {0.6, 0.8, -1.8}},
        {300, {0.0, 1.6, 3.6}, {0.0, 0.9, -2.0}},
    };
    return t;
}

}  // namespace dhrs
