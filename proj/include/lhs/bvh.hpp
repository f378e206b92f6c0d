#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

#include "lhs/common.hpp"

namespace lhs {

struct Ray {
    Vec3 origin;
    Vec3 dir;  // unit length
};

struct Hit {
    bool valid = false;
    int face = -1;
    double t = std::numeric_limits<double>::infinity();
};

inline constexpr double kRayTMin = 1e-4;       // skip origin self-hits
inline constexpr double kIntersectEps = 1e-9;  // Moller-Trumbore determinant cutoff

// Closest-hit ray/triangle test. Degenerate (zero-area) faces never intersect.
inline bool intersect_triangle(const Ray& ray, const Vec3& v0, const Vec3& v1, const Vec3& v2,
                               double& t_out) {
    const Vec3 e1 = v1 - v0;
    const Vec3 e2 = v2 - v0;
    const Vec3 pvec = ray.dir.cross(e2);
    const double det = e1.dot(pvec);
    if (std::abs(det) < kIntersectEps) return false;
    const double inv_det = 1.0 / det;
    const Vec3 tvec = ray.origin - v0;
    const double u = tvec.dot(pvec) * inv_det;
    if (u < 0.0 || u > 1.0) return false;
    const Vec3 qvec = tvec.cross(e1);
    const double v = ray.dir.dot(qvec) * inv_det;
    if (v < 0.0 || u + v > 1.0) return false;
    const double t = e2.dot(qvec) * inv_det;
    if (t < kRayTMin) return false;
    t_out = t;
    return true;
}

// Reference intersector: scans every face in ascending index order. Keeps a
// strictly closer hit, so exact ties resolve to the lower face index.
class BruteForceCaster {
public:
    BruteForceCaster(const MatX3& vertices, const FacesMat& faces)
        : vertices_(vertices), faces_(faces) {}

    Hit closest_hit(const Ray& ray) const {
        Hit best;
        for (int f = 0; f < faces_.rows(); ++f) {
            double t;
            if (intersect_triangle(ray, vertices_.row(faces_(f, 0)).transpose(),
                                   vertices_.row(faces_(f, 1)).transpose(),
                                   vertices_.row(faces_(f, 2)).transpose(), t) &&
                t < best.t) {
                best.valid = true;
                best.face = f;
                best.t = t;
            }
        }
        return best;
    }

private:
    const MatX3& vertices_;
    const FacesMat& faces_;
};

// Median-split BVH over face bounding boxes. Immutable after build; traversal
// uses the same triangle test and the same lower-index tie rule as the brute
// force reference, so results agree exactly.
class Bvh {
public:
    Bvh(const MatX3& vertices, const FacesMat& faces) {
        if (faces.rows() < 1) throw InputError("bvh: empty mesh");
        const int nf = static_cast<int>(faces.rows());
        tri_.resize(nf);
        for (int f = 0; f < nf; ++f) {
            tri_[f].v0 = vertices.row(faces(f, 0));
            tri_[f].v1 = vertices.row(faces(f, 1));
            tri_[f].v2 = vertices.row(faces(f, 2));
            tri_[f].face = f;
        }
        order_.resize(nf);
        std::iota(order_.begin(), order_.end(), 0);
        nodes_.reserve(2 * nf);
        build_node(0, nf);
    }

    Hit closest_hit(const Ray& ray) const {
        Hit best;
        const Vec3 inv_dir(safe_inv(ray.dir.x()), safe_inv(ray.dir.y()), safe_inv(ray.dir.z()));
        int stack[64];
        int sp = 0;
        stack[sp++] = 0;
        while (sp > 0) {
            const Node& n = nodes_[stack[--sp]];
            if (!aabb_hit(ray, inv_dir, n, best.t)) continue;
            if (n.count > 0) {
                for (int i = n.first; i < n.first + n.count; ++i) {
                    const Tri& tr = tri_[order_[i]];
                    double t;
                    if (intersect_triangle(ray, tr.v0, tr.v1, tr.v2, t)) {
                        if (t < best.t || (t == best.t && tr.face < best.face)) {
                            best.valid = true;
                            best.face = tr.face;
                            best.t = t;
                        }
                    }
                }
            } else {
                stack[sp++] = n.right;
                stack[sp++] = n.first;  // left child; visit first
            }
        }
        return best;
    }

private:
    struct Tri {
        Vec3 v0, v1, v2;
        int face;
    };

    struct Node {
        Vec3 lo, hi;
        int first = 0;  // leaf: start in order_; inner: left child index
        int right = 0;
        int count = 0;  // >0 marks a leaf
    };

    static double safe_inv(double d) {
        return std::abs(d) > 1e-300 ? 1.0 / d : (d >= 0 ? 1e300 : -1e300);
    }

    static bool aabb_hit(const Ray& ray, const Vec3& inv_dir, const Node& n, double t_best) {
        double t0 = kRayTMin, t1 = t_best;
        for (int c = 0; c < 3; ++c) {
            double ta = (n.lo[c] - ray.origin[c]) * inv_dir[c];
            double tb = (n.hi[c] - ray.origin[c]) * inv_dir[c];
            if (ta > tb) std::swap(ta, tb);
            t0 = std::max(t0, ta);
            t1 = std::min(t1, tb);
            if (t0 > t1) return false;
        }
        return true;
    }

    int build_node(int begin, int end) {
        const int idx = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        Vec3 lo = Vec3::Constant(1e300), hi = Vec3::Constant(-1e300);
        Vec3 clo = lo, chi = hi;
        for (int i = begin; i < end; ++i) {
            const Tri& t = tri_[order_[i]];
            for (const Vec3* p : {&t.v0, &t.v1, &t.v2}) {
                lo = lo.cwiseMin(*p);
                hi = hi.cwiseMax(*p);
            }
            const Vec3 c = (t.v0 + t.v1 + t.v2) / 3.0;
            clo = clo.cwiseMin(c);
            chi = chi.cwiseMax(c);
        }
        nodes_[idx].lo = lo;
        nodes_[idx].hi = hi;

        const int n = end - begin;
        if (n <= 4) {
            nodes_[idx].first = begin;
            nodes_[idx].count = n;
            return idx;
        }
        int axis;
        (chi - clo).maxCoeff(&axis);
        const int mid = begin + n / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](int a, int b) {
                             const double ca = tri_[a].v0[axis] + tri_[a].v1[axis] + tri_[a].v2[axis];
                             const double cb = tri_[b].v0[axis] + tri_[b].v1[axis] + tri_[b].v2[axis];
                             return ca < cb || (ca == cb && a < b);
                         });
        const int left = build_node(begin, mid);
        const int right = build_node(mid, end);
        nodes_[idx].first = left;
        nodes_[idx].right = right;
        nodes_[idx].count = 0;
        return idx;
    }

    std::vector<Tri> tri_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
};

}  // namespace lhs
