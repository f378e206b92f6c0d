#pragma once

#include <algorithm>

#include "lhs/raycast.hpp"
#include "lhs/rng.hpp"

namespace lhs {

struct JitterConfig {
    double sigma = 0.0;  // m
    double clip = std::numeric_limits<double>::infinity();  // per-axis clamp, m

    void validate() const {
        if (sigma < 0.0 || clip < 0.0) throw InputError("jitter: sigma and clip must be >= 0");
    }
};

struct ClusterConfig {
    int n_clusters = 0;
    int points_per_cluster = 0;
    double cluster_sigma = 0.1;     // m
    double placement_margin = 0.3;  // m, AABB expansion

    void validate() const {
        if (n_clusters < 0 || points_per_cluster < 0)
            throw InputError("clusters: counts must be >= 0");
    }
};

// Per-coordinate clamped Gaussian noise; count and order preserved.
inline MatX3 jitter(const MatX3& points, const JitterConfig& cfg, RngStream& rng) {
    cfg.validate();
    if (!points.allFinite()) throw InputError("jitter: non-finite input");
    MatX3 out = points;
    if (cfg.sigma == 0.0) return out;
    for (Eigen::Index n = 0; n < out.rows(); ++n)
        for (int c = 0; c < 3; ++c)
            out(n, c) += std::clamp(rng.normal(0.0, cfg.sigma), -cfg.clip, cfg.clip);
    return out;
}

// Appends Gaussian noise clusters, centers uniform in the cloud AABB expanded
// by placement_margin. Added points are labeled background; the original
// points are an untouched prefix of the output.
inline HitCloud add_noise_clusters(const HitCloud& cloud, const ClusterConfig& cfg,
                                   RngStream& rng) {
    cfg.validate();
    if (cloud.size() == 0) throw InputError("add_noise_clusters: empty cloud has no AABB");

    const Vec3 lo = cloud.points.colwise().minCoeff().transpose() -
                    Vec3::Constant(cfg.placement_margin);
    const Vec3 hi = cloud.points.colwise().maxCoeff().transpose() +
                    Vec3::Constant(cfg.placement_margin);

    const int added = cfg.n_clusters * cfg.points_per_cluster;
    HitCloud out;
    out.points.resize(cloud.points.rows() + added, 3);
    out.points.topRows(cloud.points.rows()) = cloud.points;
    out.hit_face = cloud.hit_face;
    out.ray_cell = cloud.ray_cell;
    out.labels = cloud.labels;

    Eigen::Index n = cloud.points.rows();
    for (int c = 0; c < cfg.n_clusters; ++c) {
        Vec3 center;
        for (int d = 0; d < 3; ++d) center[d] = rng.uniform(lo[d], hi[d]);
        for (int p = 0; p < cfg.points_per_cluster; ++p, ++n) {
            out.points.row(n) = center + cfg.cluster_sigma *
                                             Vec3(rng.normal(), rng.normal(), rng.normal());
            out.hit_face.push_back(-1);
            out.ray_cell.emplace_back(-1, -1);
            out.labels.push_back(kGroundLabel);
        }
    }
    return out;
}

}  // namespace lhs
