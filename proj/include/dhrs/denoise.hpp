#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

#include "dhrs/gbuffer.hpp"
#include "dhrs/raytrace.hpp"

namespace dhrs {

struct FilterParams {
    double alpha = 0.2;
    int h_min = 4;
    int iterations = 5;
    double sigma_z = 1.0;
    double sigma_n = 128.0;
    double tau_z = 0.1;
    double tau_n = 0.9;
    int history_cap = 255;
    bool filter_shadows = false;

    void validate() const {
        if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must be in (0, 1]");
        if (h_min < 1) throw std::invalid_argument("h_min must be >= 1");
        if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
        if (!(sigma_z > 0.0) || !(sigma_n > 0.0)) throw std::invalid_argument("sigma_z and sigma_n must be > 0");
        if (!(tau_z > 0.0)) throw std::invalid_argument("tau_z must be > 0");
        if (!(tau_n >= -1.0 && tau_n <= 1.0)) throw std::invalid_argument("tau_n must be in [-1, 1]");
        if (history_cap < 1 || history_cap > 65535) throw std::invalid_argument("history_cap out of range");
    }
};

/// Geometry needed to check whether a history sample still belongs to the same surface.
struct SurfaceSample {
    float depth;
    Vec3f normal;
    std::int32_t mesh_id;
};

inline bool validate_history(const SurfaceSample& cur, const SurfaceSample& prev, const FilterParams& p) {
    if (cur.mesh_id != prev.mesh_id) return false;
    const double zc = cur.depth, zp = prev.depth;
    const double denom = std::max(zc, zp);
    if (!(denom > 0.0) || std::abs(zc - zp) / denom > p.tau_z) return false;
    return dot(Vec3d(cur.normal), Vec3d(prev.normal)) >= p.tau_n;
}

struct FilterHistory {
    int width = 0;
    int height = 0;
    bool empty = true;
    CameraPose pose;
    std::vector<float> mean;      // accumulated mu
    std::vector<float> moment2;   // accumulated second moment
    std::vector<std::uint16_t> length;
    std::shared_ptr<const GBuffer> geometry;  // depth, normal and mesh-id planes of that frame

    void reset() { *this = FilterHistory{}; }
};

struct TemporalResult {
    std::vector<float> mean;
    std::vector<float> moment2;
    std::vector<std::uint16_t> length;
    std::vector<std::uint8_t> fallback;  // 1 where no valid history tap existed
};

/// EMA over backprojected, geometry-validated bilinear history taps.
inline TemporalResult temporal_accumulate(const std::vector<float>& x, const GBuffer& g,
                                          const FilterHistory& hist, const FilterParams& p) {
    if (x.size() != g.size()) throw std::invalid_argument("temporal_accumulate: dimension mismatch");
    const bool has_history = !hist.empty && hist.geometry && hist.width == g.width && hist.height == g.height;
    const std::size_t n = g.size();
    TemporalResult out{std::vector<float>(n), std::vector<float>(n), std::vector<std::uint16_t>(n, 0),
                       std::vector<std::uint8_t>(n, 1)};
    const double a = p.alpha;
    parallel_for(0, g.height, [&](int y) {
        for (int px = 0; px < g.width; ++px) {
            const std::size_t i = g.index(px, y);
            const float xi = x[i];
            out.mean[i] = xi;
            out.moment2[i] = xi * xi;
            if (!g.valid(i)) continue;
            out.length[i] = 1;
            if (!has_history || g.motion[i].x == kInvalidMotion) continue;

            // Continuous position in the previous frame, then its four bilinear taps.
            const double sx = px + 0.5 + g.motion[i].x - 0.5;
            const double sy = y + 0.5 + g.motion[i].y - 0.5;
            const double fx = std::floor(sx), fy = std::floor(sy);
            const double tx = sx - fx, ty = sy - fy;
            const SurfaceSample cur{static_cast<float>(hist.pose.camera.view_depth(Vec3d(g.world_pos[i]))),
                                    g.normal[i], g.mesh_id[i]};
            double wsum = 0.0, mu = 0.0, m2 = 0.0;
            int hlen = 0;
            for (int k = 0; k < 4; ++k) {
                const int qx = static_cast<int>(fx) + (k & 1), qy = static_cast<int>(fy) + (k >> 1);
                if (qx < 0 || qy < 0 || qx >= g.width || qy >= g.height) continue;
                const std::size_t q = static_cast<std::size_t>(qy) * g.width + qx;
                const GBuffer& hg = *hist.geometry;
                if (hg.mesh_id[q] < 0 || hist.length[q] == 0) continue;
                if (!validate_history(cur, {hg.depth[q], hg.normal[q], hg.mesh_id[q]}, p)) continue;
                const double w = ((k & 1) ? tx : 1.0 - tx) * ((k >> 1) ? ty : 1.0 - ty);
                if (w <= 0.0) continue;
                wsum += w;
                mu += w * hist.mean[q];
                m2 += w * hist.moment2[q];
                hlen = std::max<int>(hlen, hist.length[q]);
            }
            if (wsum <= 1e-9) continue;
            mu /= wsum;
            m2 /= wsum;
            // mu + a (x - mu): a constant input is an exact fixed point.
            const double xd = xi;
            out.mean[i] = static_cast<float>(mu + a * (xd - mu));
            out.moment2[i] = static_cast<float>(m2 + a * (xd * xd - m2));
            out.length[i] = static_cast<std::uint16_t>(std::min(hlen + 1, p.history_cap));
            out.fallback[i] = 0;
        }
    });
    return out;
}

/// Forward-difference depth gradient magnitude, floored at 1e-4.
inline std::vector<float> depth_gradient(const GBuffer& g) {
    std::vector<float> grad(g.size(), 1e-4f);
    parallel_for(0, g.height, [&](int y) {
        for (int x = 0; x < g.width; ++x) {
            const std::size_t i = g.index(x, y);
            if (!g.valid(i)) continue;
            auto diff = [&](int nx, int ny) -> double {
                if (nx < 0 || ny < 0 || nx >= g.width || ny >= g.height) return 0.0;
                const std::size_t j = g.index(nx, ny);
                return g.valid(j) ? static_cast<double>(g.depth[j]) - g.depth[i] : 0.0;
            };
            // Forward difference, falling back to backward on the last column/row.
            const double dx = x + 1 < g.width ? diff(x + 1, y) : -diff(x - 1, y);
            const double dy = y + 1 < g.height ? diff(x, y + 1) : -diff(x, y - 1);
            grad[i] = static_cast<float>(std::max(1e-4, std::sqrt(dx * dx + dy * dy)));
        }
    });
    return grad;
}

namespace detail {

inline constexpr float kDepthEpsilon = 1e-6f;

inline float normal_weight(const Vec3f& a, const Vec3f& b, float sigma_n) {
    const float c = a.x * b.x + a.y * b.y + a.z * b.z;
    if (c <= 0.0f) return 0.0f;
    if (sigma_n == 128.0f) {
        float v = c;
        for (int k = 0; k < 7; ++k) v *= v;
        return v;
    }
    return std::pow(c, sigma_n);
}

inline float depth_weight(float zp, float zq, float grad, float scale, float sigma_z) {
    const float dz = std::abs(zp - zq);
    if (dz == 0.0f) return 1.0f;
    return std::exp(-dz / (sigma_z * grad * scale + kDepthEpsilon));
}

}  // namespace detail

/// Temporal variance where the history is long enough, otherwise a
/// geometry-weighted 7x7 spatial estimate of the integrated value.
inline std::vector<float> estimate_variance(const TemporalResult& t, const GBuffer& g, const FilterParams& p,
                                            const std::vector<float>& grad) {
    std::vector<float> var(g.size(), 0.0f);
    const float sn = static_cast<float>(p.sigma_n), sz = static_cast<float>(p.sigma_z);
    parallel_for(0, g.height, [&](int y) {
        for (int x = 0; x < g.width; ++x) {
            const std::size_t i = g.index(x, y);
            if (!g.valid(i)) continue;
            if (t.length[i] >= p.h_min) {
                var[i] = std::max(0.0f, t.moment2[i] - t.mean[i] * t.mean[i]);
                continue;
            }
            double wsum = 0.0, s1 = 0.0, s2 = 0.0;
            for (int dy = -3; dy <= 3; ++dy) {
                for (int dx = -3; dx <= 3; ++dx) {
                    const int qx = x + dx, qy = y + dy;
                    if (qx < 0 || qy < 0 || qx >= g.width || qy >= g.height) continue;
                    const std::size_t q = g.index(qx, qy);
                    if (!g.valid(q)) continue;
                    const float wn = detail::normal_weight(g.normal[i], g.normal[q], sn);
                    if (wn == 0.0f) continue;
                    const float dist = static_cast<float>(std::max(std::abs(dx), std::abs(dy)));
                    const double w = wn * detail::depth_weight(g.depth[i], g.depth[q], grad[i], std::max(1.0f, dist), sz);
                    wsum += w;
                    s1 += w * t.mean[q];
                    s2 += w * static_cast<double>(t.mean[q]) * t.mean[q];
                }
            }
            const double m = s1 / wsum;
            var[i] = static_cast<float>(std::max(0.0, s2 / wsum - m * m));
        }
    });
    return var;
}

struct AtrousResult {
    std::vector<float> values;
    std::vector<float> variance;
};

inline constexpr std::array<double, 3> kB3 = {3.0 / 8.0, 1.0 / 4.0, 1.0 / 16.0};

/// One 5x5 B3-spline a-trous pass with taps dilated by `step`. Edge stopping
/// uses depth and normals only.
inline AtrousResult atrous_pass(const std::vector<float>& values, const std::vector<float>& variance,
                                const GBuffer& g, int step, const FilterParams& p, const std::vector<float>& grad) {
    if (step < 1) throw std::invalid_argument("a-trous step must be >= 1");
    if (values.size() != g.size() || variance.size() != g.size())
        throw std::invalid_argument("atrous_pass: dimension mismatch");
    AtrousResult out{values, variance};
    const float sn = static_cast<float>(p.sigma_n), sz = static_cast<float>(p.sigma_z);
    const float fstep = static_cast<float>(step);
    parallel_for(0, g.height, [&](int y) {
        for (int x = 0; x < g.width; ++x) {
            const std::size_t i = g.index(x, y);
            if (!g.valid(i)) continue;
            const double vi = values[i];
            double wsum = 0.0, dsum = 0.0, varsum = 0.0;
            double lo = vi, hi = vi;
            for (int ky = -2; ky <= 2; ++ky) {
                const int qy = y + ky * step;
                if (qy < 0 || qy >= g.height) continue;
                for (int kx = -2; kx <= 2; ++kx) {
                    const int qx = x + kx * step;
                    if (qx < 0 || qx >= g.width) continue;
                    const std::size_t q = g.index(qx, qy);
                    if (!g.valid(q)) continue;
                    double w = kB3[static_cast<std::size_t>(std::abs(kx))] * kB3[static_cast<std::size_t>(std::abs(ky))];
                    if (q != i) {
                        const float wn = detail::normal_weight(g.normal[i], g.normal[q], sn);
                        if (wn == 0.0f) continue;
                        w *= wn * detail::depth_weight(g.depth[i], g.depth[q], grad[i], fstep, sz);
                    }
                    wsum += w;
                    dsum += w * (values[q] - vi);
                    varsum += w * w * variance[q];
                    lo = std::min<double>(lo, values[q]);
                    hi = std::max<double>(hi, values[q]);
                }
            }
            out.values[i] = static_cast<float>(std::clamp(vi + dsum / wsum, lo, hi));
            out.variance[i] = static_cast<float>(varsum / (wsum * wsum));
        }
    });
    return out;
}

/// Round half away from zero, clamped to [0, n].
inline std::uint8_t requantize(double value, int n) {
    const double scaled = value * n;
    const double r = scaled < 0.0 ? -std::floor(-scaled + 0.5) : std::floor(scaled + 0.5);
    return static_cast<std::uint8_t>(std::clamp(r, 0.0, static_cast<double>(n)));
}

/// Spatiotemporal filter for one scalar signal in [0, 1]. Owns its history.
inline std::vector<float> svgf_filter_scalar(const std::vector<float>& x, std::shared_ptr<const GBuffer> gp,
                                             FilterHistory& hist, const FilterParams& p) {
    p.validate();
    const GBuffer& g = *gp;
    if (x.size() != g.size()) throw std::invalid_argument("svgf_filter: dimension mismatch");
    TemporalResult t = temporal_accumulate(x, g, hist, p);
    const auto grad = depth_gradient(g);
    AtrousResult cur{t.mean, estimate_variance(t, g, p, grad)};
    for (int k = 0; k < p.iterations; ++k) cur = atrous_pass(cur.values, cur.variance, g, 1 << k, p, grad);

    hist.width = g.width;
    hist.height = g.height;
    hist.empty = false;
    hist.pose = g.pose;
    hist.mean = std::move(t.mean);
    hist.moment2 = std::move(t.moment2);
    hist.length = std::move(t.length);
    hist.geometry = std::move(gp);
    return std::move(cur.values);
}

inline AoBuffer svgf_filter(const AoBuffer& ao, std::shared_ptr<const GBuffer> gp, FilterHistory& hist,
                            const FilterParams& p) {
    const GBuffer& g = *gp;
    if (ao.width != g.width || ao.height != g.height) throw std::invalid_argument("svgf_filter: dimension mismatch");
    std::vector<float> x(ao.counts.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>(ao.counts[i]) / static_cast<float>(ao.rays);
    const auto filtered = svgf_filter_scalar(x, gp, hist, p);
    AoBuffer out = ao;
    for (std::size_t i = 0; i < x.size(); ++i)
        out.counts[i] = g.valid(i) ? requantize(filtered[i], ao.rays) : static_cast<std::uint8_t>(ao.rays);
    return out;
}

/// Optional shadow filtering: each light's bit plane is filtered as a 0/1
/// scalar and re-thresholded at 0.5. One history per light.
inline VisibilityBuffer filter_visibility(const VisibilityBuffer& vis, std::shared_ptr<const GBuffer> gp,
                                          std::vector<FilterHistory>& hists, const FilterParams& p) {
    const GBuffer& g = *gp;
    if (vis.width != g.width || vis.height != g.height)
        throw std::invalid_argument("filter_visibility: dimension mismatch");
    hists.resize(static_cast<std::size_t>(vis.light_count));
    VisibilityBuffer out = vis;
    std::fill(out.bits.begin(), out.bits.end(), std::uint8_t{0});
    std::vector<float> x(vis.bits.size());
    for (int l = 0; l < vis.light_count; ++l) {
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<float>((vis.bits[i] >> l) & 1u);
        const auto f = svgf_filter_scalar(x, gp, hists[static_cast<std::size_t>(l)], p);
        for (std::size_t i = 0; i < x.size(); ++i)
            if (!g.valid(i) || f[i] >= 0.5f) out.bits[i] |= static_cast<std::uint8_t>(1u << l);
    }
    return out;
}

inline AoBuffer svgf_filter(const AoBuffer& ao, const GBuffer& g, FilterHistory& hist, const FilterParams& p) {
    return svgf_filter(ao, std::make_shared<const GBuffer>(g), hist, p);
}

}  // namespace dhrs
