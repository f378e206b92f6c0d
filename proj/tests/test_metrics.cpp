#include <catch2/catch_amalgamated.hpp>

#include "lhs/metrics.hpp"
#include "lhs/rng.hpp"

using namespace lhs;
using Catch::Matchers::WithinAbs;

namespace {

MatX3 random_skeleton(RngStream& rng, int k = kNumJoints) {
    MatX3 j(k, 3);
    for (int i = 0; i < k; ++i)
        for (int c = 0; c < 3; ++c) j(i, c) = rng.normal(0.0, 0.5);
    return j;
}

Mat3 random_rotation(RngStream& rng) {
    const Vec3 aa(rng.normal(), rng.normal(), rng.normal());
    const double angle = rng.uniform(0.0, kPi);
    return Eigen::AngleAxisd(angle, aa.normalized()).toRotationMatrix();
}

double mpjpe_oracle(const MatX3& pred, const MatX3& gt, const std::vector<int>& v) {
    double num = 0.0;
    int den = 0;
    for (int i = 0; i < pred.rows(); ++i) {
        if (!v[i]) continue;
        double sq = 0.0;
        for (int c = 0; c < 3; ++c) sq += (pred(i, c) - gt(i, c)) * (pred(i, c) - gt(i, c));
        num += std::sqrt(sq) * 1000.0;
        ++den;
    }
    return num / den;
}

}  // namespace

TEST_CASE("mpjpe basics and oracle parity") {
    RngStream rng(1);
    const MatX3 gt = random_skeleton(rng);
    std::vector<int> vis(kNumJoints, 1);
    REQUIRE(mpjpe(gt, gt, vis) == 0.0);

    MatX3 off = gt;
    off.col(0).array() += 0.010;
    REQUIRE_THAT(mpjpe(off, gt, vis), WithinAbs(10.0, 1e-9));

    for (int trial = 0; trial < 100; ++trial) {
        const MatX3 pred = random_skeleton(rng);
        const MatX3 g = random_skeleton(rng);
        REQUIRE_THAT(mpjpe(pred, g, vis), WithinAbs(mpjpe_oracle(pred, g, vis), 1e-9));
    }
    std::vector<int> none(kNumJoints, 0);
    REQUIRE_THROWS_AS(mpjpe(gt, gt, none), DegenerateError);
}

TEST_CASE("mpjpe is invariant under simultaneous rigid motion") {
    RngStream rng(2);
    const MatX3 pred = random_skeleton(rng);
    const MatX3 gt = random_skeleton(rng);
    std::vector<int> vis(kNumJoints, 1);
    const double base = mpjpe(pred, gt, vis);
    const Mat3 rot = random_rotation(rng);
    const Vec3 t(1.0, -2.0, 0.5);
    MatX3 pred_m = (pred * rot.transpose()).rowwise() + t.transpose();
    MatX3 gt_m = (gt * rot.transpose()).rowwise() + t.transpose();
    REQUIRE_THAT(mpjpe(pred_m, gt_m, vis), WithinAbs(base, 1e-9));
}

TEST_CASE("procrustes recovers a known similarity transform") {
    RngStream rng(3);
    std::vector<int> vis(kNumJoints, 1);
    for (int trial = 0; trial < 50; ++trial) {
        const MatX3 pred = random_skeleton(rng);
        const Mat3 rot = random_rotation(rng);
        const double s = rng.uniform(0.5, 2.0);
        const Vec3 t(rng.normal(), rng.normal(), rng.normal());
        MatX3 gt = s * (pred * rot.transpose());
        gt.rowwise() += t.transpose();

        const SimilarityTransform st = procrustes_align(pred, gt);
        REQUIRE_THAT(st.scale, WithinAbs(s, 1e-9));
        REQUIRE((st.rotation - rot).cwiseAbs().maxCoeff() < 1e-9);
        REQUIRE((st.apply(pred) - gt).cwiseAbs().maxCoeff() < 1e-6);
        REQUIRE(pa_mpjpe(pred, gt, vis) < 1e-6 * 1000);
    }
}

TEST_CASE("procrustes on identical clouds is the identity") {
    RngStream rng(4);
    const MatX3 pts = random_skeleton(rng);
    const SimilarityTransform st = procrustes_align(pts, pts);
    REQUIRE_THAT(st.scale, WithinAbs(1.0, 1e-9));
    REQUIRE((st.rotation - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
    REQUIRE(st.translation.norm() < 1e-9);
}

TEST_CASE("mirrored prediction never yields a reflection") {
    RngStream rng(5);
    std::vector<int> vis(kNumJoints, 1);
    const MatX3 gt = random_skeleton(rng);
    MatX3 mirrored = gt;
    mirrored.col(0) = -mirrored.col(0);
    const SimilarityTransform st = procrustes_align(mirrored, gt);
    REQUIRE_THAT(st.rotation.determinant(), WithinAbs(1.0, 1e-9));
    REQUIRE(pa_mpjpe(mirrored, gt, vis) > 0.0);
}

TEST_CASE("degenerate procrustes inputs are rejected") {
    MatX3 line(4, 3);
    line << 0, 0, 0, 1, 0, 0, 2, 0, 0, 3, 0, 0;  // collinear
    RngStream rng(6);
    const MatX3 gt = random_skeleton(rng, 4);
    REQUIRE_THROWS_AS(procrustes_align(line, gt), DegenerateError);
    const MatX3 point = MatX3::Zero(4, 3);
    REQUIRE_THROWS_AS(procrustes_align(point, gt), DegenerateError);
    REQUIRE_THROWS_AS(procrustes_align(gt.topRows(2), gt.topRows(2)), InputError);
}

TEST_CASE("pck thresholds") {
    SkeletonSpec skel;
    RngStream rng(7);
    MatX3 gt = random_skeleton(rng);
    gt.row(skel.torso_a) = Vec3(0, 0, 0.9);
    gt.row(skel.torso_b) = Vec3(0, 0, 1.4);  // torso length 0.5
    std::vector<int> vis(kNumJoints, 1);

    REQUIRE(pck(gt, gt, vis, skel, 0.3) == 1.0);
    REQUIRE(pck(gt, gt, vis, skel, 0.5) == 1.0);

    // all joints offset by exactly 0.4 * torso straddles the two thresholds
    MatX3 off = gt;
    off.col(1).array() += 0.4 * 0.5;
    REQUIRE(pck(off, gt, vis, skel, 0.3) == 0.0);
    REQUIRE(pck(off, gt, vis, skel, 0.5) == 1.0);

    // monotone in the fraction
    for (int trial = 0; trial < 50; ++trial) {
        const MatX3 pred = random_skeleton(rng);
        double prev = 0.0;
        for (double frac : {0.1, 0.2, 0.3, 0.4, 0.5, 0.8}) {
            const double p = pck(pred, gt, vis, skel, frac);
            REQUIRE(p >= prev);
            prev = p;
        }
    }

    MatX3 zero_torso = gt;
    zero_torso.row(skel.torso_b) = zero_torso.row(skel.torso_a);
    REQUIRE_THROWS_AS(pck(gt, zero_torso, vis, skel, 0.3), DegenerateError);
}

TEST_CASE("pa-mpjpe is bounded by mpjpe and pck5 >= pck3 per instance") {
    RngStream rng(8);
    SkeletonSpec skel;
    std::vector<int> vis(kNumJoints, 1);
    for (int trial = 0; trial < 100; ++trial) {
        const MatX3 pred = random_skeleton(rng);
        const MatX3 gt = random_skeleton(rng);
        const InstanceMetrics m = evaluate_instance(pred, gt, vis, skel);
        REQUIRE(m.pa_mpjpe_mm.has_value());
        REQUIRE(*m.pa_mpjpe_mm <= m.mpjpe_mm + 1e-9);
        REQUIRE(m.pck5 >= m.pck3);
    }
}

TEST_CASE("partial visibility suppresses PA-MPJPE") {
    RngStream rng(9);
    SkeletonSpec skel;
    std::vector<int> vis(kNumJoints, 1);
    vis[3] = 0;
    const InstanceMetrics m =
        evaluate_instance(random_skeleton(rng), random_skeleton(rng), vis, skel);
    REQUIRE_FALSE(m.pa_mpjpe_mm.has_value());
    REQUIRE(m.per_joint_error_mm[3] == -1.0);
}

TEST_CASE("aggregate of one instance is that instance; worst-n dominates the mean") {
    RngStream rng(10);
    SkeletonSpec skel;
    std::vector<int> vis(kNumJoints, 1);
    std::vector<InstanceMetrics> instances;
    for (int i = 0; i < 40; ++i)
        instances.push_back(
            evaluate_instance(random_skeleton(rng), random_skeleton(rng), vis, skel));

    const MetricsReport single = aggregate({instances[0]}, skel);
    REQUIRE_THAT(single.mpjpe_mm, WithinAbs(instances[0].mpjpe_mm, 1e-12));
    REQUIRE(single.n_instances == 1);

    const MetricsReport all = aggregate(instances, skel);
    bool clamped = false;
    const WorstJointStats worst = worst_instances(instances, 10, &clamped);
    REQUIRE_FALSE(clamped);
    double worst_mean = 0.0, all_mean = 0.0;
    for (int j = 0; j < kNumJoints; ++j) {
        worst_mean += worst.per_joint_mean_mm[j];
        all_mean += all.per_joint_mean_mm[j];
    }
    REQUIRE(worst_mean / kNumJoints >= all_mean / kNumJoints);

    const WorstJointStats w600 = worst_instances(instances, 600, &clamped);
    REQUIRE(clamped);
    REQUIRE(w600.n_used == 40);
}

TEST_CASE("report formatting is stable") {
    RngStream rng(11);
    SkeletonSpec skel;
    std::vector<int> vis(kNumJoints, 1);
    const InstanceMetrics m =
        evaluate_instance(random_skeleton(rng), random_skeleton(rng), vis, skel);
    const std::string text = format_report(aggregate({m}, skel));
    REQUIRE(text.find("mpjpe_mm: ") == 0);
    REQUIRE(text.find("pa_mpjpe_mm: ") != std::string::npos);
    REQUIRE(text.find("pck3: ") != std::string::npos);
    REQUIRE(text.find("pck5: ") != std::string::npos);
    REQUIRE(text.find("torso_pair: 0 12") != std::string::npos);
}
