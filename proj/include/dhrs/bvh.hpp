#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "dhrs/geometry.hpp"

namespace dhrs {

struct Hit {
    double t = kInfinity;
    int triangle = -1;  // index into the original triangle list
    int mesh_id = -1;
    Vec3d normal;       // geometric, facing against the ray
    Vec3d albedo;
};

/// Binary BVH over triangles, flattened in depth-first order. The left child of
/// an interior node is always the next node; `first` holds the right child.
class Bvh {
public:
    static constexpr int kMaxLeafSize = 4;

    struct Node {
        Aabb box;
        std::uint32_t first = 0;   // leaf: offset into order(); interior: right child index
        std::uint32_t count = 0;   // leaf: triangle count; interior: 0
        int axis = 0;              // split axis of an interior node
        bool is_leaf() const { return count > 0; }
    };

    explicit Bvh(std::span<const Triangle> triangles) {
        if (triangles.empty()) throw std::invalid_argument("cannot build a BVH over zero triangles");
        const auto n = triangles.size();
        std::vector<Aabb> boxes(n);
        std::vector<Vec3d> centroids(n);
        for (std::size_t i = 0; i < n; ++i) {
            boxes[i] = triangles[i].bounds();
            centroids[i] = triangles[i].centroid();
        }
        order_.resize(n);
        std::iota(order_.begin(), order_.end(), 0u);
        nodes_.reserve(2 * n);
        build(0, static_cast<std::uint32_t>(n), boxes, centroids);

        prims_.reserve(n);
        for (auto idx : order_) {
            const Triangle& t = triangles[idx];
            prims_.push_back({t.v0, t.v1 - t.v0, t.v2 - t.v0, t.geometric_normal(), t.albedo, t.mesh_id,
                              static_cast<int>(idx)});
        }
    }

    std::span<const Node> nodes() const { return nodes_; }
    /// Leaf ranges index into this permutation of the original triangle indices.
    std::span<const std::uint32_t> order() const { return order_; }
    std::size_t triangle_count() const { return prims_.size(); }

    /// Closest hit with kRayTMin < t < ray.t_max. Equal-t ties resolve to the
    /// lowest original triangle index so results never depend on traversal order.
    std::optional<Hit> intersect(const Ray& ray) const {
        const Vec3d inv{1.0 / ray.direction.x, 1.0 / ray.direction.y, 1.0 / ray.direction.z};
        Ray r = ray;
        const Prim* best = nullptr;
        std::uint32_t stack[64];
        int sp = 0;
        stack[sp++] = 0;
        while (sp > 0) {
            const std::uint32_t ni = stack[--sp];
            const Node& node = nodes_[ni];
            if (!slab(node.box, r, inv)) continue;
            if (node.is_leaf()) {
                for (std::uint32_t k = node.first; k < node.first + node.count; ++k) {
                    const Prim& p = prims_[k];
                    Ray probe = r;
                    // Allow an exact tie with the current best so the index rule can apply.
                    if (best) probe.t_max = std::nextafter(r.t_max, kInfinity);
                    if (auto t = intersect_triangle(probe, p.v0, p.e1, p.e2)) {
                        if (*t < r.t_max || (best && *t == r.t_max && p.original < best->original)) {
                            r.t_max = *t;
                            best = &p;
                        }
                    }
                }
            } else {
                const std::uint32_t left = ni + 1, right = node.first;
                // Visit the child nearer along the ray first.
                if (ray.direction[node.axis] >= 0.0) {
                    stack[sp++] = right;
                    stack[sp++] = left;
                } else {
                    stack[sp++] = left;
                    stack[sp++] = right;
                }
            }
        }
        if (!best) return std::nullopt;
        Hit h;
        h.t = r.t_max;
        h.triangle = best->original;
        h.mesh_id = best->mesh_id;
        h.normal = dot(best->normal, ray.direction) > 0.0 ? -best->normal : best->normal;
        h.albedo = best->albedo;
        return h;
    }

    /// Any hit with kRayTMin < t < ray.t_max.
    bool occluded(const Ray& ray) const {
        const Vec3d inv{1.0 / ray.direction.x, 1.0 / ray.direction.y, 1.0 / ray.direction.z};
        std::uint32_t stack[64];
        int sp = 0;
        stack[sp++] = 0;
        while (sp > 0) {
            const std::uint32_t ni = stack[--sp];
            const Node& node = nodes_[ni];
            if (!slab(node.box, ray, inv)) continue;
            if (node.is_leaf()) {
                for (std::uint32_t k = node.first; k < node.first + node.count; ++k) {
                    const Prim& p = prims_[k];
                    if (intersect_triangle(ray, p.v0, p.e1, p.e2)) return true;
                }
            } else {
                stack[sp++] = node.first;
                stack[sp++] = ni + 1;
            }
        }
        return false;
    }

private:
    struct Prim {
        Vec3d v0, e1, e2, normal, albedo;
        int mesh_id;
        int original;
    };

    static bool slab(const Aabb& b, const Ray& r, const Vec3d& inv) {
        double t0 = 0.0, t1 = r.t_max;
        for (int a = 0; a < 3; ++a) {
            double tn = (b.lo[a] - r.origin[a]) * inv[a];
            double tf = (b.hi[a] - r.origin[a]) * inv[a];
            if (tn > tf) std::swap(tn, tf);
            // Comparisons with NaN are false, so the 0 * inf NaN of an axis-parallel
            // ray lying on a slab face leaves the interval untouched.
            t0 = tn > t0 ? tn : t0;
            t1 = tf < t1 ? tf : t1;
        }
        return t0 <= t1;
    }

    std::uint32_t build(std::uint32_t begin, std::uint32_t end, const std::vector<Aabb>& boxes,
                        const std::vector<Vec3d>& centroids) {
        const std::uint32_t index = static_cast<std::uint32_t>(nodes_.size());
        nodes_.emplace_back();
        Aabb box;
        for (std::uint32_t i = begin; i < end; ++i) {
            box.expand(boxes[order_[i]]);
        }
        nodes_[index].box = box;
        const std::uint32_t count = end - begin;
        if (count <= kMaxLeafSize) {
            nodes_[index].first = begin;
            nodes_[index].count = count;
            return index;
        }
        const int axis = box.longest_axis();
        const std::uint32_t mid = begin + count / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](std::uint32_t a, std::uint32_t b) {
                             const double ca = centroids[a][axis], cb = centroids[b][axis];
                             return ca < cb || (ca == cb && a < b);
                         });
        build(begin, mid, boxes, centroids);
        const std::uint32_t right = build(mid, end, boxes, centroids);
        nodes_[index].first = right;
        nodes_[index].count = 0;
        nodes_[index].axis = axis;
        return index;
    }

    std::vector<Node> nodes_;
    std::vector<std::uint32_t> order_;
    std::vector<Prim> prims_;
};

inline Bvh build_bvh(std::span<const Triangle> triangles) { return Bvh(triangles); }

inline std::optional<Hit> intersect(const Bvh& bvh, const Ray& ray) { return bvh.intersect(ray); }

inline bool occluded(const Bvh& bvh, const Ray& ray) { return bvh.occluded(ray); }

}  // namespace dhrs
