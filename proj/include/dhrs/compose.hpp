#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <png.h>

#include "dhrs/gbuffer.hpp"
#include "dhrs/image.hpp"
#include "dhrs/raytrace.hpp"

namespace dhrs {

struct ShadingParams {
    double k_a = 0.15;
    Vec3d clear_color{0.0, 0.0, 0.0};
};

inline double ao_factor(int count, int n) {
    if (n < 1) throw std::invalid_argument("AO ray count must be >= 1");
    if (count < 0 || count > n) throw std::invalid_argument("AO count exceeds ray count");
    return static_cast<double>(count) / n;
}

inline std::uint8_t quantize_unit(double v) { return static_cast<std::uint8_t>(std::lround(clamp01(v) * 255.0)); }

/// Lambertian radiance for one pixel given per-light visibility in [0, 1] and AO factor.
template <typename VisFn>
Vec3d shade_pixel(const GBuffer& g, std::size_t i, std::span<const Light> lights, VisFn&& visibility, double ao,
                  const ShadingParams& sp) {
    const Vec3d p(g.world_pos[i]), n(g.normal[i]), albedo(g.albedo[i]);
    Vec3d direct{sp.k_a, sp.k_a, sp.k_a};
    for (std::size_t l = 0; l < lights.size(); ++l) {
        const double v = visibility(l);
        if (v <= 0.0) continue;
        const Vec3d to = lights[l].center - p;
        const double d2 = dot(to, to);
        const double cos_t = std::max(0.0, dot(n, to / std::sqrt(d2)));
        direct += lights[l].intensity * (v * cos_t / d2);
    }
    return hadamard(albedo, direct) * ao;
}

namespace detail {

template <typename PixelFn>
Image compose_with(const GBuffer& g, const ShadingParams& sp, PixelFn&& pixel) {
    Image img(g.width, g.height);
    img.pose = g.pose;
    parallel_for(0, g.height, [&](int y) {
        for (int x = 0; x < g.width; ++x) {
            const std::size_t i = g.index(x, y);
            const Vec3d c = g.valid(i) ? pixel(i) : sp.clear_color;
            std::uint8_t* out = img.at(x, y);
            out[0] = quantize_unit(c.x);
            out[1] = quantize_unit(c.y);
            out[2] = quantize_unit(c.z);
        }
    });
    return img;
}

}  // namespace detail

inline Image compose_final(const GBuffer& g, const VisibilityBuffer& vis, const AoBuffer& ao,
                           std::span<const Light> lights, const ShadingParams& sp = {}) {
    if (vis.width != g.width || vis.height != g.height || ao.width != g.width || ao.height != g.height)
        throw std::invalid_argument("compose_final: dimension mismatch");
    if (static_cast<int>(lights.size()) != vis.light_count)
        throw std::invalid_argument("compose_final: light count does not match visibility buffer");
    return detail::compose_with(g, sp, [&](std::size_t i) {
        const std::uint8_t bits = vis.bits[i];
        return shade_pixel(g, i, lights, [&](std::size_t l) { return static_cast<double>((bits >> l) & 1u); },
                           ao_factor(ao.counts[i], ao.rays), sp);
    });
}

/// Fractional variant used by the offline reference: visibility[l][i] and ao[i] in [0, 1].
inline Image compose_fractional(const GBuffer& g, const std::vector<std::vector<double>>& visibility,
                                const std::vector<double>& ao, std::span<const Light> lights,
                                const ShadingParams& sp = {}) {
    if (visibility.size() != lights.size() || ao.size() != g.size())
        throw std::invalid_argument("compose_fractional: dimension mismatch");
    return detail::compose_with(g, sp, [&](std::size_t i) {
        return shade_pixel(g, i, lights, [&](std::size_t l) { return visibility[l][i]; }, ao[i], sp);
    });
}

// ---------------------------------------------------------------------------
// Prediction of stale server buffers by reprojection.

struct PredictionParams {
    double tau_z = 0.1;
};

template <typename Buffer>
struct PredictionResult {
    Buffer buffer;
    std::vector<std::uint8_t> holes;  // 1 where no valid source existed
    std::size_t hole_count = 0;
};

namespace detail {

inline std::uint8_t fallback_value(const VisibilityBuffer& v) { return v.all_lit(); }
inline std::uint8_t fallback_value(const AoBuffer& a) { return static_cast<std::uint8_t>(a.rays); }
inline std::vector<std::uint8_t>& plane(VisibilityBuffer& v) { return v.bits; }
inline std::vector<std::uint8_t>& plane(AoBuffer& a) { return a.counts; }
inline const std::vector<std::uint8_t>& plane(const VisibilityBuffer& v) { return v.bits; }
inline const std::vector<std::uint8_t>& plane(const AoBuffer& a) { return a.counts; }

}  // namespace detail

/// Maps every current pixel into the stale buffer's pose and copies the value
/// found there. `stale_depth` is the view depth plane rendered for the stale
/// pose (the client's own G-buffer of that frame); validation is skipped when
/// it is empty. Background pixels keep the fallback value.
template <typename Buffer>
PredictionResult<Buffer> reproject_server_buffer(const Buffer& stale, const GBuffer& now,
                                                 std::span<const float> stale_depth,
                                                 const PredictionParams& params = {}) {
    if (!stale_depth.empty() && stale_depth.size() != static_cast<std::size_t>(stale.width) * stale.height)
        throw std::invalid_argument("reproject: stale depth plane has wrong size");
    PredictionResult<Buffer> out{stale, std::vector<std::uint8_t>(now.size(), 0), 0};
    out.buffer.width = now.width;
    out.buffer.height = now.height;
    out.buffer.pose = now.pose;
    const std::uint8_t fallback = detail::fallback_value(stale);
    auto& dst = detail::plane(out.buffer);
    const auto& src = detail::plane(stale);
    dst.assign(now.size(), fallback);
    const Camera& cam = stale.pose.camera;
    parallel_for(0, now.height, [&](int y) {
        for (int x = 0; x < now.width; ++x) {
            const std::size_t i = now.index(x, y);
            if (!now.valid(i)) continue;
            bool ok = false;
            if (const auto sp = cam.project(Vec3d(now.world_pos[i]))) {
                const double fx = std::floor(sp->x), fy = std::floor(sp->y);
                if (fx >= 0 && fy >= 0 && fx < stale.width && fy < stale.height) {
                    const std::size_t j = static_cast<std::size_t>(fy) * stale.width + static_cast<std::size_t>(fx);
                    ok = true;
                    if (!stale_depth.empty()) {
                        const double zs = stale_depth[j];
                        ok = std::isfinite(zs) && std::abs(sp->depth - zs) / std::max(sp->depth, zs) <= params.tau_z;
                    }
                    if (ok) dst[i] = src[j];
                }
            }
            if (!ok) out.holes[i] = 1;
        }
    });
    for (auto h : out.holes) out.hole_count += h;
    return out;
}

// ---------------------------------------------------------------------------
// PNG export (gamma 2.2 encode by default; metrics use the linear clamp values).

inline void write_png(const std::string& path, const Image& img, bool gamma = true) {
    std::vector<std::uint8_t> rgb = img.rgb;
    if (gamma) {
        std::uint8_t lut[256];
        for (int v = 0; v < 256; ++v)
            lut[v] = static_cast<std::uint8_t>(std::lround(255.0 * std::pow(v / 255.0, 1.0 / 2.2)));
        for (auto& c : rgb) c = lut[c];
    }
    png_image pi{};
    pi.version = PNG_IMAGE_VERSION;
    pi.width = static_cast<png_uint_32>(img.width);
    pi.height = static_cast<png_uint_32>(img.height);
    pi.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&pi, path.c_str(), 0, rgb.data(), 0, nullptr))
        throw std::runtime_error("cannot write PNG " + path + ": " + pi.message);
}

/// Reads any PNG as 8-bit RGB, bytes as stored (no gamma decode).
inline Image read_png(const std::string& path) {
    png_image pi{};
    pi.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&pi, path.c_str()))
        throw std::runtime_error("cannot read PNG " + path + ": " + pi.message);
    pi.format = PNG_FORMAT_RGB;
    Image img(static_cast<int>(pi.width), static_cast<int>(pi.height));
    if (!png_image_finish_read(&pi, nullptr, img.rgb.data(), 0, nullptr)) {
        png_image_free(&pi);
        throw std::runtime_error("cannot decode PNG " + path + ": " + pi.message);
    }
    return img;
}

}  // namespace dhrs
