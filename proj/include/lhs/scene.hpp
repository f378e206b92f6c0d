#pragma once

#include <vector>

#include "lhs/body_model.hpp"
#include "lhs/common.hpp"
#include "lhs/rng.hpp"

namespace lhs {

struct SceneConfig {
    double r_min = 4.0;              // m
    double r_max = 20.0;             // m
    double ground_size = 4.0;        // m, quad side
    double ground_max_tilt = 0.175;  // rad, ~10 deg cone about +Z
    double ground_height_jitter = 0.02;  // m
    bool ground_enabled = true;

    void validate() const {
        if (r_min <= 0.0 || r_max < r_min) throw InputError("scene: bad r_range");
        if (ground_max_tilt >= kPi / 4) throw InputError("scene: tilt must be < pi/4");
    }
};

struct Placement {
    double r = 0.0;
    double azimuth = 0.0;
    Vec3 translation = Vec3::Zero();
};

// Body + ground quad merged, world-positioned, per-face labels (joint id for
// body faces, kGroundLabel for the two ground faces).
struct SceneMesh {
    MatX3 vertices;
    FacesMat faces;
    std::vector<int> face_label;
    Placement placement;
};

struct GroundQuad {
    Eigen::Matrix<double, 4, 3, Eigen::RowMajor> vertices;
    Vec3 normal;
};

// Square of side cfg.ground_size centered under the body's lowest vertex.
// Normal sampled uniformly in a cone of half-angle ground_max_tilt about +Z.
inline GroundQuad make_ground(const PosedBody& body, const SceneConfig& cfg, RngStream& rng) {
    if (body.vertices.rows() < 1) throw InputError("make_ground: empty body");

    int low = 0;
    for (int v = 1; v < body.vertices.rows(); ++v)
        if (body.vertices(v, 2) < body.vertices(low, 2)) low = v;
    Vec3 anchor = body.vertices.row(low);
    anchor.z() += rng.uniform(-cfg.ground_height_jitter, cfg.ground_height_jitter);

    // Uniform direction in the cone: cos(angle) uniform over [cos(tilt), 1].
    const double phi = rng.uniform(0.0, 2.0 * kPi);
    const double cos_t = rng.uniform(std::cos(cfg.ground_max_tilt), 1.0);
    const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
    const Vec3 n(sin_t * std::cos(phi), sin_t * std::sin(phi), cos_t);

    // In-plane frame.
    Vec3 u = n.cross(Vec3(0, 1, 0));
    if (u.norm() < 1e-6) u = n.cross(Vec3(1, 0, 0));
    u.normalize();
    const Vec3 w = n.cross(u);

    const double h = cfg.ground_size / 2.0;
    GroundQuad q;
    q.normal = n;
    q.vertices.row(0) = anchor + h * (u + w);
    q.vertices.row(1) = anchor + h * (-u + w);
    q.vertices.row(2) = anchor + h * (-u - w);
    q.vertices.row(3) = anchor + h * (u - w);
    return q;
}

// Polar placement r ~ U(r_range), azimuth ~ U(-pi, pi); planar translation.
inline SceneMesh place_scene(const PosedBody& body, const SceneConfig& cfg, RngStream& rng) {
    cfg.validate();
    if (body.vertices.rows() < 1) throw InputError("place_scene: empty body");

    SceneMesh scene;
    scene.placement.r = rng.uniform(cfg.r_min, cfg.r_max);
    scene.placement.azimuth = rng.uniform(-kPi, kPi);
    scene.placement.translation = Vec3(scene.placement.r * std::cos(scene.placement.azimuth),
                                       scene.placement.r * std::sin(scene.placement.azimuth), 0.0);

    const int nv = static_cast<int>(body.vertices.rows());
    const int nf = static_cast<int>(body.faces.rows());
    const int extra_v = cfg.ground_enabled ? 4 : 0;
    const int extra_f = cfg.ground_enabled ? 2 : 0;

    scene.vertices.resize(nv + extra_v, 3);
    scene.faces.resize(nf + extra_f, 3);
    scene.face_label.resize(nf + extra_f);

    scene.vertices.topRows(nv) = body.vertices;
    scene.faces.topRows(nf) = body.faces;
    for (int f = 0; f < nf; ++f) scene.face_label[f] = body.face_joint_label[f];

    if (cfg.ground_enabled) {
        const GroundQuad q = make_ground(body, cfg, rng);
        scene.vertices.bottomRows(4) = q.vertices;
        const auto gv = static_cast<std::uint32_t>(nv);
        scene.faces.row(nf) << gv, gv + 1, gv + 2;
        scene.faces.row(nf + 1) << gv, gv + 2, gv + 3;
        scene.face_label[nf] = kGroundLabel;
        scene.face_label[nf + 1] = kGroundLabel;
    }

    scene.vertices.rowwise() += scene.placement.translation.transpose();
    return scene;
}

// Deterministic variant for tests and pipeline replay.
inline SceneMesh place_scene_at(const PosedBody& body, const SceneConfig& cfg, RngStream& rng,
                                double r, double azimuth) {
    SceneMesh scene;
    {
        // Reuse the random path for the ground, then overwrite the placement.
        RngStream ground_rng = rng.split(0x67726e64);  // "grnd"
        scene = place_scene(body, cfg, ground_rng);
        scene.vertices.rowwise() -= scene.placement.translation.transpose();
    }
    scene.placement.r = r;
    scene.placement.azimuth = azimuth;
    scene.placement.translation = Vec3(r * std::cos(azimuth), r * std::sin(azimuth), 0.0);
    scene.vertices.rowwise() += scene.placement.translation.transpose();
    return scene;
}

}  // namespace lhs
