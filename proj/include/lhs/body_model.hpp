#pragma once

#include <array>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "lhs/common.hpp"
#include "lhs/rng.hpp"

namespace lhs {

inline constexpr int kShapeBasis = 10;   // shape blendshape components
inline constexpr int kPoseBasis = 207;   // 23 * 9 rotation-residual features

// Parametric human body: rest template plus blendshape / skinning tensors.
// Immutable after load; forward() is a pure function of (model, beta, theta).
struct BodyModel {
    MatX3 template_vertices;                 // N_V x 3, meters
    FacesMat faces;                          // N_F x 3
    MatX shape_dirs;                         // N_V*3 x 10 (flattened vertex-major)
    MatX pose_dirs;                          // N_V*3 x 207
    MatX joint_regressor;                    // K x N_V, rows sum to 1
    MatX skinning_weights;                   // N_V x K, rows sum to 1, >= 0
    std::array<int, kNumJoints> kinematic_parents{};  // root = -1

    int num_vertices() const { return static_cast<int>(template_vertices.rows()); }
    int num_faces() const { return static_cast<int>(faces.rows()); }
};

struct PosedBody {
    MatX3 vertices;                       // N_V x 3
    FacesMat faces;                       // N_F x 3
    MatX3 joints;                         // K x 3
    std::vector<int> face_joint_label;    // N_F values in [0, K)
};

namespace detail {

inline int argmax_skinning(const MatX& weights, int v) {
    int best = 0;
    double w = weights(v, 0);
    for (int k = 1; k < kNumJoints; ++k) {
        if (weights(v, k) > w) {  // tie keeps the lower joint index
            w = weights(v, k);
            best = k;
        }
    }
    return best;
}

}  // namespace detail

// Vertex label = argmax skinning weight (tie -> lower joint index); face label
// = majority vote of its vertices, tie -> label of the lowest-index vertex.
// Depends only on topology and weights, never on (beta, theta).
inline std::vector<int> face_joint_labels(const BodyModel& model) {
    const int nv = model.num_vertices();
    std::vector<int> vlabel(nv);
    for (int v = 0; v < nv; ++v) vlabel[v] = detail::argmax_skinning(model.skinning_weights, v);

    std::vector<int> out(model.num_faces());
    for (int f = 0; f < model.num_faces(); ++f) {
        const int a = vlabel[model.faces(f, 0)];
        const int b = vlabel[model.faces(f, 1)];
        const int c = vlabel[model.faces(f, 2)];
        if (b == c && a != b) {
            out[f] = b;
        } else {
            out[f] = a;  // majority containing a, or three-way tie -> first vertex
        }
    }
    return out;
}

inline void validate_body_model(const BodyModel& m) {
    const int nv = m.num_vertices();
    if (nv < 4) throw FormatError("body model: too few vertices");
    if (m.shape_dirs.rows() != nv * 3 || m.shape_dirs.cols() != kShapeBasis)
        throw FormatError("body model: shape_dirs must be (N_V*3) x 10");
    if (m.pose_dirs.rows() != nv * 3 || m.pose_dirs.cols() != kPoseBasis)
        throw FormatError("body model: pose_dirs must be (N_V*3) x 207");
    if (m.joint_regressor.rows() != kNumJoints || m.joint_regressor.cols() != nv)
        throw FormatError("body model: joint_regressor must be K x N_V");
    if (m.skinning_weights.rows() != nv || m.skinning_weights.cols() != kNumJoints)
        throw FormatError("body model: skinning_weights must be N_V x K");

    for (int f = 0; f < m.num_faces(); ++f)
        for (int c = 0; c < 3; ++c)
            if (m.faces(f, c) >= static_cast<std::uint32_t>(nv))
                throw FormatError("body model: face " + std::to_string(f) +
                                  " references vertex out of range");

    for (int v = 0; v < nv; ++v) {
        double s = 0.0;
        for (int k = 0; k < kNumJoints; ++k) {
            const double w = m.skinning_weights(v, k);
            if (w < 0.0) throw FormatError("body model: negative skinning weight at vertex " +
                                           std::to_string(v));
            s += w;
        }
        if (std::abs(s - 1.0) > 1e-5)
            throw FormatError("body model: skinning row " + std::to_string(v) +
                              " sums to " + std::to_string(s));
    }
    for (int k = 0; k < kNumJoints; ++k) {
        const double s = m.joint_regressor.row(k).sum();
        if (std::abs(s - 1.0) > 1e-5)
            throw FormatError("body model: joint_regressor row " + std::to_string(k) +
                              " sums to " + std::to_string(s));
    }

    int roots = 0;
    for (int k = 0; k < kNumJoints; ++k) {
        const int p = m.kinematic_parents[k];
        if (p == -1) {
            ++roots;
            continue;
        }
        if (p < 0 || p >= kNumJoints || p >= k)
            throw FormatError("body model: parent of joint " + std::to_string(k) +
                              " must precede it (topological order)");
    }
    if (roots != 1) throw FormatError("body model: kinematic tree needs exactly one root");
}

// ---------------------------------------------------------------------------
// Binary container: magic "LBM1", u32 version, N_V, N_F, K, then f32 tensors
// (template, shape_dirs, pose_dirs, joint_regressor, skinning_weights),
// u32 faces, i32 parents. Little-endian throughout.
// ---------------------------------------------------------------------------

namespace detail {

inline void write_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), 4);
}

inline std::uint32_t read_u32(std::istream& is, const char* what) {
    std::uint32_t v;
    is.read(reinterpret_cast<char*>(&v), 4);
    if (!is) throw FormatError(std::string("body model: truncated at ") + what);
    return v;
}

template <typename Mat>
void write_f32_mat(std::ostream& os, const Mat& m) {
    std::vector<float> buf(static_cast<std::size_t>(m.size()));
    std::size_t idx = 0;
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) buf[idx++] = static_cast<float>(m(r, c));
    os.write(reinterpret_cast<const char*>(buf.data()),
             static_cast<std::streamsize>(buf.size() * 4));
}

template <typename Mat>
void read_f32_mat(std::istream& is, Mat& m, Eigen::Index rows, Eigen::Index cols,
                  const char* what) {
    m.resize(rows, cols);
    std::vector<float> buf(static_cast<std::size_t>(rows * cols));
    is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
    if (!is) throw FormatError(std::string("body model: truncated in ") + what);
    std::size_t idx = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = static_cast<double>(buf[idx++]);
}

}  // namespace detail

inline void save_body_model(const BodyModel& m, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for write: " + path);
    os.write("LBM1", 4);
    detail::write_u32(os, 1);
    detail::write_u32(os, static_cast<std::uint32_t>(m.num_vertices()));
    detail::write_u32(os, static_cast<std::uint32_t>(m.num_faces()));
    detail::write_u32(os, kNumJoints);
    detail::write_f32_mat(os, m.template_vertices);
    detail::write_f32_mat(os, m.shape_dirs);
    detail::write_f32_mat(os, m.pose_dirs);
    detail::write_f32_mat(os, m.joint_regressor);
    detail::write_f32_mat(os, m.skinning_weights);
    os.write(reinterpret_cast<const char*>(m.faces.data()),
             static_cast<std::streamsize>(m.faces.size() * 4));
    std::vector<std::int32_t> parents(m.kinematic_parents.begin(), m.kinematic_parents.end());
    os.write(reinterpret_cast<const char*>(parents.data()),
             static_cast<std::streamsize>(parents.size() * 4));
    if (!os) throw IoError("write failed: " + path);
}

inline BodyModel load_body_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open body model: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "LBM1", 4) != 0)
        throw FormatError("body model: bad magic (expected LBM1): " + path);
    const std::uint32_t version = detail::read_u32(is, "version");
    if (version != 1) throw FormatError("body model: unsupported version " +
                                        std::to_string(version));
    const std::uint32_t nv = detail::read_u32(is, "N_V");
    const std::uint32_t nf = detail::read_u32(is, "N_F");
    const std::uint32_t k = detail::read_u32(is, "K");
    if (k != kNumJoints)
        throw FormatError("body model: K=" + std::to_string(k) + ", expected 24");

    BodyModel m;
    detail::read_f32_mat(is, m.template_vertices, nv, 3, "template");
    detail::read_f32_mat(is, m.shape_dirs, static_cast<Eigen::Index>(nv) * 3, kShapeBasis,
                         "shape_dirs");
    detail::read_f32_mat(is, m.pose_dirs, static_cast<Eigen::Index>(nv) * 3, kPoseBasis,
                         "pose_dirs");
    detail::read_f32_mat(is, m.joint_regressor, kNumJoints, nv, "joint_regressor");
    detail::read_f32_mat(is, m.skinning_weights, nv, kNumJoints, "skinning_weights");
    m.faces.resize(nf, 3);
    is.read(reinterpret_cast<char*>(m.faces.data()),
            static_cast<std::streamsize>(m.faces.size() * 4));
    if (!is) throw FormatError("body model: truncated in faces");
    std::vector<std::int32_t> parents(kNumJoints);
    is.read(reinterpret_cast<char*>(parents.data()), kNumJoints * 4);
    if (!is) throw FormatError("body model: truncated in parents");
    for (int j = 0; j < kNumJoints; ++j) m.kinematic_parents[j] = parents[j];

    validate_body_model(m);
    return m;
}

// ---------------------------------------------------------------------------
// Toy model: 24-joint capsule-limb humanoid. Licensed SMPL weights cannot
// ship; this stands in for tests and smoke runs, and a real model is a
// drop-in through the same container.
// ---------------------------------------------------------------------------

namespace detail {

struct ToySkeleton {
    std::array<Vec3, kNumJoints> joints;
    std::array<int, kNumJoints> parents;
    std::array<double, kNumJoints> radii;
};

inline ToySkeleton toy_skeleton() {
    ToySkeleton s;
    s.parents = {-1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19, 20, 21};
    auto J = [&](int i, double x, double y, double z) { s.joints[i] = Vec3(x, y, z); };
    J(0, 0.00, 0.00, 0.95);   // pelvis
    J(1, 0.00, 0.09, 0.91);   // hips
    J(2, 0.00, -0.09, 0.91);
    J(3, 0.00, 0.00, 1.05);   // spine1
    J(4, 0.00, 0.10, 0.50);   // knees
    J(5, 0.00, -0.10, 0.50);
    J(6, 0.00, 0.00, 1.15);   // spine2
    J(7, 0.00, 0.11, 0.09);   // ankles
    J(8, 0.00, -0.11, 0.09);
    J(9, 0.00, 0.00, 1.25);   // spine3
    J(10, 0.10, 0.11, 0.03);  // feet
    J(11, 0.10, -0.11, 0.03);
    J(12, 0.00, 0.00, 1.42);  // neck
    J(13, 0.00, 0.07, 1.34);  // collars
    J(14, 0.00, -0.07, 1.34);
    J(15, 0.00, 0.00, 1.58);  // head
    J(16, 0.00, 0.18, 1.38);  // shoulders
    J(17, 0.00, -0.18, 1.38);
    J(18, 0.00, 0.25, 1.10);  // elbows
    J(19, 0.00, -0.25, 1.10);
    J(20, 0.00, 0.28, 0.85);  // wrists
    J(21, 0.00, -0.28, 0.85);
    J(22, 0.00, 0.30, 0.76);  // hands
    J(23, 0.00, -0.30, 0.76);
    s.radii = {0.11, 0.07, 0.07, 0.10, 0.06, 0.06, 0.10, 0.05, 0.05, 0.10, 0.04, 0.04,
               0.05, 0.05, 0.05, 0.09, 0.05, 0.05, 0.045, 0.045, 0.04, 0.04, 0.035, 0.035};
    return s;
}

}  // namespace detail

inline BodyModel gen_toy_model(std::uint64_t seed) {
    constexpr int kRings = 3;
    constexpr int kRingVerts = 6;
    constexpr int kPerJoint = kRings * kRingVerts;  // 18 -> N_V = 432

    RngStream rng(seed, 0, RngTag::kToyModel);
    const detail::ToySkeleton skel = detail::toy_skeleton();
    const int nv = kNumJoints * kPerJoint;

    BodyModel m;
    m.template_vertices.resize(nv, 3);
    m.skinning_weights = MatX::Zero(nv, kNumJoints);
    m.joint_regressor = MatX::Zero(kNumJoints, nv);
    m.kinematic_parents = skel.parents;

    // Per-joint tube: ring 0 centered on the joint, rings 1..2 step toward the
    // parent. Ring vertices average to the ring center, so a uniform regressor
    // over ring 0 reproduces the joint exactly.
    for (int k = 0; k < kNumJoints; ++k) {
        const Vec3 j = skel.joints[k];
        Vec3 toward = skel.parents[k] >= 0 ? (skel.joints[skel.parents[k]] - j)
                                           : Vec3(0, 0, 0.12);
        if (toward.norm() < 1e-9) toward = Vec3(0, 0, 0.1);
        const Vec3 axis = toward.normalized();
        Vec3 u = axis.cross(Vec3(0, 0, 1));
        if (u.norm() < 1e-6) u = axis.cross(Vec3(1, 0, 0));
        u.normalize();
        const Vec3 w = axis.cross(u);

        const double jitter = 0.002;
        for (int r = 0; r < kRings; ++r) {
            const Vec3 center = j + toward * (static_cast<double>(r) / kRings) * 0.8;
            const double radius = skel.radii[k] * (1.0 - 0.15 * r);
            for (int a = 0; a < kRingVerts; ++a) {
                const int v = k * kPerJoint + r * kRingVerts + a;
                const double ang = 2.0 * kPi * a / kRingVerts;
                Vec3 p = center + radius * (std::cos(ang) * u + std::sin(ang) * w);
                if (r > 0) p += jitter * Vec3(rng.normal(), rng.normal(), rng.normal());
                m.template_vertices.row(v) = p;

                if (r == 0) {
                    m.skinning_weights(v, k) = 1.0;
                    m.joint_regressor(k, v) = 1.0 / kRingVerts;
                } else {
                    const int parent = skel.parents[k] >= 0 ? skel.parents[k] : k;
                    const double wp = (parent == k) ? 0.0 : 0.25 * r;
                    m.skinning_weights(v, k) = 1.0 - wp;
                    m.skinning_weights(v, parent) += wp;
                }
            }
        }
    }

    // Tube faces between consecutive rings.
    std::vector<std::array<std::uint32_t, 3>> faces;
    for (int k = 0; k < kNumJoints; ++k) {
        const int base = k * kPerJoint;
        for (int r = 0; r + 1 < kRings; ++r) {
            for (int a = 0; a < kRingVerts; ++a) {
                const std::uint32_t a0 = base + r * kRingVerts + a;
                const std::uint32_t a1 = base + r * kRingVerts + (a + 1) % kRingVerts;
                const std::uint32_t b0 = a0 + kRingVerts;
                const std::uint32_t b1 = a1 + kRingVerts;
                faces.push_back({a0, a1, b0});
                faces.push_back({a1, b1, b0});
            }
        }
    }
    m.faces.resize(static_cast<Eigen::Index>(faces.size()), 3);
    for (std::size_t f = 0; f < faces.size(); ++f)
        for (int c = 0; c < 3; ++c) m.faces(static_cast<Eigen::Index>(f), c) = faces[f][c];

    // Smooth-ish pseudo-random blendshape bases; magnitudes keep a |beta|<=2
    // body inside a ~2 m box.
    m.shape_dirs.resize(nv * 3, kShapeBasis);
    for (int c = 0; c < kShapeBasis; ++c) {
        const double amp = 0.015 / (1.0 + 0.3 * c);
        for (int i = 0; i < nv * 3; ++i) m.shape_dirs(i, c) = amp * rng.normal();
    }
    m.pose_dirs.resize(nv * 3, kPoseBasis);
    for (int c = 0; c < kPoseBasis; ++c)
        for (int i = 0; i < nv * 3; ++i) m.pose_dirs(i, c) = 0.0015 * rng.normal();

    validate_body_model(m);
    return m;
}

// ---------------------------------------------------------------------------
// Forward: blendshapes, joint regression, linear blend skinning.
// ---------------------------------------------------------------------------

inline Mat3 axis_angle_to_matrix(const Vec3& aa) {
    const double angle = aa.norm();
    if (angle < 1e-12) return Mat3::Identity();
    return Eigen::AngleAxisd(angle, aa / angle).toRotationMatrix();
}

inline PosedBody forward(const BodyModel& model, const VecX& beta, const VecX& theta) {
    if (beta.size() != kShapeBasis)
        throw InputError("forward: beta must have dimension 10, got " +
                         std::to_string(beta.size()));
    if (theta.size() != 3 * kNumJoints)
        throw InputError("forward: theta must have dimension 72, got " +
                         std::to_string(theta.size()));
    if (!beta.allFinite() || !theta.allFinite())
        throw InputError("forward: non-finite parameters");

    const int nv = model.num_vertices();

    // Shaped template.
    const VecX shape_offset = model.shape_dirs * beta;
    MatX3 v_shaped = model.template_vertices;
    for (int v = 0; v < nv; ++v)
        for (int c = 0; c < 3; ++c) v_shaped(v, c) += shape_offset(v * 3 + c);

    // Rest joints from the shaped template.
    const MatX3 j_rest = model.joint_regressor * v_shaped;

    // Per-joint rotations and the 207-dim (R - I) pose feature (non-root).
    std::array<Mat3, kNumJoints> rot;
    VecX pose_feat(kPoseBasis);
    for (int k = 0; k < kNumJoints; ++k) {
        rot[k] = axis_angle_to_matrix(theta.segment<3>(3 * k));
        if (k > 0) {
            const Mat3 res = rot[k] - Mat3::Identity();
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) pose_feat((k - 1) * 9 + r * 3 + c) = res(r, c);
        }
    }
    const VecX pose_offset = model.pose_dirs * pose_feat;
    MatX3 v_posed = v_shaped;
    for (int v = 0; v < nv; ++v)
        for (int c = 0; c < 3; ++c) v_posed(v, c) += pose_offset(v * 3 + c);

    // World transforms down the kinematic tree.
    std::array<Eigen::Affine3d, kNumJoints> world;
    for (int k = 0; k < kNumJoints; ++k) {
        Eigen::Affine3d local = Eigen::Affine3d::Identity();
        const int p = model.kinematic_parents[k];
        local.linear() = rot[k];
        local.translation() = (p >= 0) ? Vec3(j_rest.row(k) - j_rest.row(p))
                                       : Vec3(j_rest.row(k));
        world[k] = (p >= 0) ? world[p] * local : local;
    }

    PosedBody out;
    out.faces = model.faces;
    out.joints.resize(kNumJoints, 3);
    for (int k = 0; k < kNumJoints; ++k) out.joints.row(k) = world[k].translation();

    // Skinning transforms relative to the rest pose.
    std::array<Eigen::Affine3d, kNumJoints> skin;
    for (int k = 0; k < kNumJoints; ++k) {
        Eigen::Affine3d unpose = Eigen::Affine3d::Identity();
        unpose.translation() = -Vec3(j_rest.row(k));
        skin[k] = world[k] * unpose;
    }

    out.vertices.resize(nv, 3);
    for (int v = 0; v < nv; ++v) {
        const Vec3 p = v_posed.row(v);
        Vec3 acc = Vec3::Zero();
        for (int k = 0; k < kNumJoints; ++k) {
            const double w = model.skinning_weights(v, k);
            if (w != 0.0) acc += w * (skin[k] * p);
        }
        out.vertices.row(v) = acc;
    }

    out.face_joint_label = face_joint_labels(model);
    return out;
}

}  // namespace lhs
