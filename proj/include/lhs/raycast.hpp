#pragma once

#include <vector>

#include "lhs/bvh.hpp"
#include "lhs/laser.hpp"

namespace lhs {

// Ray-cast result: closest hits only, ordered by (elevation row, window column).
struct HitCloud {
    MatX3 points;                              // N x 3
    std::vector<int> hit_face;                 // N
    std::vector<std::pair<int, int>> ray_cell; // N x (azimuth index i, elevation index j)
    std::vector<int> labels;                   // N, joint id or kGroundLabel

    int size() const { return static_cast<int>(points.rows()); }
};

inline Ray grid_ray(const LaserGrid& grid, int az_index, int el_index) {
    const double az = grid.azimuth_of(az_index);
    const double el = grid.elevation_of(el_index);
    Ray r;
    r.origin = Vec3::Zero();
    r.dir = Vec3(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
    return r;
}

// One closest hit per window ray; misses dropped. Point label = label of the
// hit face. Output order is (j, i) row-major, independent of execution order.
inline HitCloud raycast(const SceneMesh& scene, const LaserGrid& grid,
                        const EffectiveWindow& window) {
    const Bvh bvh(scene.vertices, scene.faces);

    std::vector<Vec3> pts;
    HitCloud out;
    pts.reserve(window.ray_count());
    out.hit_face.reserve(window.ray_count());

    for (int j = window.el_start; j < window.el_start + window.el_count; ++j) {
        for (int col = 0; col < window.az_count; ++col) {
            const int i = (window.az_start + col) % grid.n_azimuth;
            const Ray ray = grid_ray(grid, i, j);
            const Hit hit = bvh.closest_hit(ray);
            if (!hit.valid) continue;
            pts.push_back(ray.origin + hit.t * ray.dir);
            out.hit_face.push_back(hit.face);
            out.ray_cell.emplace_back(i, j);
            out.labels.push_back(scene.face_label[hit.face]);
        }
    }

    out.points.resize(static_cast<Eigen::Index>(pts.size()), 3);
    for (std::size_t n = 0; n < pts.size(); ++n) out.points.row(static_cast<Eigen::Index>(n)) = pts[n];
    return out;
}

}  // namespace lhs
