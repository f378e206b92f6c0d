#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lhs/common.hpp"

namespace lhs {

struct SkeletonSpec {
    int num_joints = kNumJoints;
    int torso_a = 0;   // pelvis
    int torso_b = 12;  // neck
    std::vector<std::string> joint_names;

    void validate() const {
        if (torso_a == torso_b || torso_a < 0 || torso_b < 0 || torso_a >= num_joints ||
            torso_b >= num_joints)
            throw InputError("skeleton: torso pair must be distinct joints < K");
    }
};

struct SimilarityTransform {
    double scale = 1.0;
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    MatX3 apply(const MatX3& pts) const {
        MatX3 out = scale * (pts * rotation.transpose());
        out.rowwise() += translation.transpose();
        return out;
    }
};

// Mean per-joint position error over visible joints, in mm.
inline double mpjpe(const MatX3& pred, const MatX3& gt, const std::vector<int>& visibility) {
    if (pred.rows() != gt.rows() || static_cast<Eigen::Index>(visibility.size()) != pred.rows())
        throw InputError("mpjpe: shape mismatch");
    double num = 0.0, den = 0.0;
    for (Eigen::Index i = 0; i < pred.rows(); ++i) {
        if (!visibility[i]) continue;
        num += (pred.row(i) - gt.row(i)).norm();
        den += 1.0;
    }
    if (den == 0.0) throw DegenerateError("mpjpe: no visible joints");
    return 1000.0 * num / den;
}

// Least-squares similarity transform (Umeyama) mapping pred onto gt.
// Rotation is proper (det +1); reflections are corrected by flipping the
// smallest singular direction. with_scale=false gives the rigid-only variant.
inline SimilarityTransform procrustes_align(const MatX3& pred, const MatX3& gt,
                                            bool with_scale = true) {
    if (pred.rows() != gt.rows() || pred.rows() < 3)
        throw InputError("procrustes: need matching K >= 3");

    const Vec3 mu_p = pred.colwise().mean().transpose();
    const Vec3 mu_g = gt.colwise().mean().transpose();
    MatX3 cp = pred.rowwise() - mu_p.transpose();
    MatX3 cg = gt.rowwise() - mu_g.transpose();

    const double var_p = cp.squaredNorm() / static_cast<double>(pred.rows());
    if (var_p < 1e-20 || cg.squaredNorm() < 1e-20)
        throw DegenerateError("procrustes: coincident point set");

    const Mat3 cov = (cg.transpose() * cp) / static_cast<double>(pred.rows());
    Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    if (svd.singularValues()(1) < 1e-14 * svd.singularValues()(0))
        throw DegenerateError("procrustes: rank-deficient (collinear) configuration");

    Vec3 d = Vec3::Ones();
    if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(2) = -1.0;

    SimilarityTransform t;
    t.rotation = svd.matrixU() * d.asDiagonal() * svd.matrixV().transpose();
    t.scale = with_scale ? svd.singularValues().dot(d) / var_p : 1.0;
    t.translation = mu_g - t.scale * (t.rotation * mu_p);
    return t;
}

inline double pa_mpjpe(const MatX3& pred, const MatX3& gt, const std::vector<int>& visibility,
                       bool with_scale = true) {
    const SimilarityTransform t = procrustes_align(pred, gt, with_scale);
    return mpjpe(t.apply(pred), gt, visibility);
}

// Fraction of visible joints with error below `fraction` of the GT torso length.
inline double pck(const MatX3& pred, const MatX3& gt, const std::vector<int>& visibility,
                  const SkeletonSpec& skeleton, double fraction) {
    skeleton.validate();
    if (pred.rows() != gt.rows()) throw InputError("pck: shape mismatch");
    const double torso = (gt.row(skeleton.torso_a) - gt.row(skeleton.torso_b)).norm();
    if (torso <= 0.0) throw DegenerateError("pck: zero torso length");
    double hits = 0.0, den = 0.0;
    for (Eigen::Index i = 0; i < pred.rows(); ++i) {
        if (!visibility[i]) continue;
        den += 1.0;
        if ((pred.row(i) - gt.row(i)).norm() < fraction * torso) hits += 1.0;
    }
    if (den == 0.0) throw DegenerateError("pck: no visible joints");
    return hits / den;
}

struct InstanceMetrics {
    double mpjpe_mm = 0.0;
    std::optional<double> pa_mpjpe_mm;  // absent when visibility is partial
    double pck3 = 0.0;
    double pck5 = 0.0;
    std::vector<double> per_joint_error_mm;  // -1 where invisible
};

inline InstanceMetrics evaluate_instance(const MatX3& pred, const MatX3& gt,
                                         const std::vector<int>& visibility,
                                         const SkeletonSpec& skeleton) {
    InstanceMetrics m;
    m.mpjpe_mm = mpjpe(pred, gt, visibility);
    const bool all_visible =
        std::all_of(visibility.begin(), visibility.end(), [](int v) { return v != 0; });
    // Partial visibility interferes with the rigid alignment; skip PA there.
    if (all_visible) m.pa_mpjpe_mm = pa_mpjpe(pred, gt, visibility);
    m.pck3 = pck(pred, gt, visibility, skeleton, 0.3);
    m.pck5 = pck(pred, gt, visibility, skeleton, 0.5);
    m.per_joint_error_mm.resize(pred.rows());
    for (Eigen::Index i = 0; i < pred.rows(); ++i)
        m.per_joint_error_mm[i] =
            visibility[i] ? 1000.0 * (pred.row(i) - gt.row(i)).norm() : -1.0;
    return m;
}

struct MetricsReport {
    double mpjpe_mm = 0.0;
    std::optional<double> pa_mpjpe_mm;
    double pck3 = 0.0;
    double pck5 = 0.0;
    std::vector<double> per_joint_mean_mm;
    int n_instances = 0;
    int torso_a = 0;
    int torso_b = 12;
};

namespace detail {

// Pairwise summation keeps aggregation associative and order-independent.
inline double pairwise_sum(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
    if (hi - lo <= 8) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += v[i];
        return s;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
}

inline double pairwise_mean(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    return pairwise_sum(v, 0, v.size()) / static_cast<double>(v.size());
}

}  // namespace detail

inline MetricsReport aggregate(const std::vector<InstanceMetrics>& instances,
                               const SkeletonSpec& skeleton) {
    if (instances.empty()) throw InputError("aggregate: no instances");
    MetricsReport r;
    r.n_instances = static_cast<int>(instances.size());
    r.torso_a = skeleton.torso_a;
    r.torso_b = skeleton.torso_b;

    std::vector<double> mp, pa, p3, p5;
    for (const InstanceMetrics& m : instances) {
        mp.push_back(m.mpjpe_mm);
        p3.push_back(m.pck3);
        p5.push_back(m.pck5);
        if (m.pa_mpjpe_mm) pa.push_back(*m.pa_mpjpe_mm);
    }
    r.mpjpe_mm = detail::pairwise_mean(mp);
    r.pck3 = detail::pairwise_mean(p3);
    r.pck5 = detail::pairwise_mean(p5);
    if (pa.size() == instances.size()) r.pa_mpjpe_mm = detail::pairwise_mean(pa);

    const int k = static_cast<int>(instances.front().per_joint_error_mm.size());
    r.per_joint_mean_mm.assign(k, 0.0);
    for (int j = 0; j < k; ++j) {
        std::vector<double> errs;
        for (const InstanceMetrics& m : instances)
            if (m.per_joint_error_mm[j] >= 0.0) errs.push_back(m.per_joint_error_mm[j]);
        r.per_joint_mean_mm[j] = errs.empty() ? -1.0 : detail::pairwise_mean(errs);
    }
    return r;
}

struct WorstJointStats {
    int n_used = 0;
    std::vector<double> per_joint_mean_mm;
    std::vector<double> per_joint_var_mm2;
};

// Per-joint mean/variance over the n instances with the largest MPJPE.
inline WorstJointStats worst_instances(const std::vector<InstanceMetrics>& instances, int n,
                                       bool* clamped = nullptr) {
    if (instances.empty()) throw InputError("worst_instances: no instances");
    if (clamped) *clamped = false;
    if (n > static_cast<int>(instances.size())) {
        n = static_cast<int>(instances.size());
        if (clamped) *clamped = true;
    }

    std::vector<int> order(instances.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return instances[a].mpjpe_mm > instances[b].mpjpe_mm;
    });

    const int k = static_cast<int>(instances.front().per_joint_error_mm.size());
    WorstJointStats s;
    s.n_used = n;
    s.per_joint_mean_mm.assign(k, 0.0);
    s.per_joint_var_mm2.assign(k, 0.0);
    for (int j = 0; j < k; ++j) {
        std::vector<double> errs;
        for (int i = 0; i < n; ++i) {
            const double e = instances[order[i]].per_joint_error_mm[j];
            if (e >= 0.0) errs.push_back(e);
        }
        if (errs.empty()) {
            s.per_joint_mean_mm[j] = -1.0;
            continue;
        }
        const double mean = detail::pairwise_mean(errs);
        double var = 0.0;
        for (double e : errs) var += (e - mean) * (e - mean);
        s.per_joint_mean_mm[j] = mean;
        s.per_joint_var_mm2[j] = var / static_cast<double>(errs.size());
    }
    return s;
}

// Stable key order for diffable CI output.
inline std::string format_report(const MetricsReport& r) {
    std::ostringstream os;
    os.precision(6);
    os << std::fixed;
    os << "mpjpe_mm: " << r.mpjpe_mm << "\n";
    os << "pa_mpjpe_mm: ";
    if (r.pa_mpjpe_mm)
        os << *r.pa_mpjpe_mm << "\n";
    else
        os << "absent\n";
    os << "pck3: " << r.pck3 << "\n";
    os << "pck5: " << r.pck5 << "\n";
    os << "n_instances: " << r.n_instances << "\n";
    os << "torso_pair: " << r.torso_a << " " << r.torso_b << "\n";
    for (std::size_t j = 0; j < r.per_joint_mean_mm.size(); ++j)
        os << "per_joint_mean_mm[" << j << "]: " << r.per_joint_mean_mm[j] << "\n";
    return os.str();
}

}  // namespace lhs
