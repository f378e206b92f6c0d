#pragma once

#include <cmath>
#include <vector>

#include "lhs/laser.hpp"
#include "lhs/raycast.hpp"
#include "lhs/rng.hpp"

namespace lhs {

// Rectangular-patch occlusion mask over the effective laser grid.
struct MaskPlan {
    EffectiveWindow window;
    int patch_size = 1;       // grid cells per side
    int patches_x = 0;        // along azimuth
    int patches_y = 0;        // along elevation
    std::vector<bool> masked; // patches_x * patches_y flags
    double r_keep = 1.0;

    int total_patches() const { return patches_x * patches_y; }
    int masked_count() const {
        int n = 0;
        for (bool b : masked) n += b;
        return n;
    }
};

// Patch side = max(1, floor(min(window extent in cells) / 8)); the window is
// tiled (border patches may be partial but count as full patches) and
// round((1 - r_keep) * patches) of them are drawn without replacement.
inline MaskPlan plan_mask(const EffectiveWindow& window, double r_keep, RngStream& rng) {
    if (window.ray_count() <= 0) throw InputError("plan_mask: empty window");
    if (!(r_keep > 0.0) || r_keep > 1.0) throw InputError("plan_mask: r_keep must be in (0,1]");

    MaskPlan plan;
    plan.window = window;
    plan.r_keep = r_keep;
    plan.patch_size = std::max(1, std::min(window.az_count, window.el_count) / 8);
    plan.patches_x = (window.az_count + plan.patch_size - 1) / plan.patch_size;
    plan.patches_y = (window.el_count + plan.patch_size - 1) / plan.patch_size;

    const int total = plan.total_patches();
    const int n_masked = static_cast<int>(std::lround((1.0 - r_keep) * total));
    plan.masked.assign(total, false);

    // Partial Fisher-Yates over patch indices.
    std::vector<int> idx(total);
    for (int i = 0; i < total; ++i) idx[i] = i;
    for (int i = 0; i < n_masked; ++i) {
        const int j = i + static_cast<int>(rng.uniform_index(total - i));
        std::swap(idx[i], idx[j]);
        plan.masked[idx[i]] = true;
    }
    return plan;
}

inline bool cell_masked(const MaskPlan& plan, int az_index, int el_index, int n_azimuth) {
    const int col = ((az_index - plan.window.az_start) % n_azimuth + n_azimuth) % n_azimuth;
    const int row = el_index - plan.window.el_start;
    if (col < 0 || col >= plan.window.az_count || row < 0 || row >= plan.window.el_count)
        throw InputError("apply_mask: ray cell outside the plan's window");
    const int px = col / plan.patch_size;
    const int py = row / plan.patch_size;
    return plan.masked[py * plan.patches_x + px];
}

// Keep exactly the points whose ray cell falls outside every masked patch;
// survivor order, faces, and labels are carried through.
inline HitCloud apply_mask(const HitCloud& cloud, const MaskPlan& plan, int n_azimuth) {
    std::vector<int> keep;
    keep.reserve(cloud.size());
    for (int n = 0; n < cloud.size(); ++n)
        if (!cell_masked(plan, cloud.ray_cell[n].first, cloud.ray_cell[n].second, n_azimuth))
            keep.push_back(n);

    HitCloud out;
    out.points.resize(static_cast<Eigen::Index>(keep.size()), 3);
    out.hit_face.reserve(keep.size());
    out.ray_cell.reserve(keep.size());
    out.labels.reserve(keep.size());
    for (std::size_t n = 0; n < keep.size(); ++n) {
        out.points.row(static_cast<Eigen::Index>(n)) = cloud.points.row(keep[n]);
        out.hit_face.push_back(cloud.hit_face[keep[n]]);
        out.ray_cell.push_back(cloud.ray_cell[keep[n]]);
        out.labels.push_back(cloud.labels[keep[n]]);
    }
    return out;
}

}  // namespace lhs
