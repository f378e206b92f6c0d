#pragma once

#include <vector>

#include "lhs/common.hpp"
#include "lhs/heatmap.hpp"

namespace lhs {

struct LossWeights {
    double reg = 0.5;
    double seg = 1.0;

    void validate() const {
        if (reg < 0.0 || seg < 0.0) throw InputError("loss weights must be >= 0");
    }
};

inline constexpr double kLogEps = 1e-12;

// Visibility-weighted mean joint distance.
inline double reg_loss(const MatX3& pred, const MatX3& gt, const std::vector<int>& visibility) {
    if (pred.rows() != gt.rows() || static_cast<Eigen::Index>(visibility.size()) != pred.rows())
        throw InputError("reg_loss: shape mismatch");
    double num = 0.0;
    double den = 0.0;
    for (Eigen::Index i = 0; i < pred.rows(); ++i) {
        if (!visibility[i]) continue;
        num += (pred.row(i) - gt.row(i)).norm();
        den += 1.0;
    }
    if (den == 0.0) throw DegenerateError("reg_loss: no visible joints");
    return num / den;
}

// Cross-entropy with the ground-truth one-hot as weights, summed over points.
inline double seg_loss(const MatX& pred_probs, const MatX& gt_one_hot) {
    if (pred_probs.rows() != gt_one_hot.rows() || pred_probs.cols() != gt_one_hot.cols())
        throw InputError("seg_loss: shape mismatch");
    for (Eigen::Index i = 0; i < pred_probs.rows(); ++i) {
        const double s = pred_probs.row(i).sum();
        if (std::abs(s - 1.0) > 1e-6 || pred_probs.row(i).minCoeff() < 0.0)
            throw InputError("seg_loss: row " + std::to_string(i) +
                             " is not a probability distribution");
    }
    double loss = 0.0;
    for (Eigen::Index i = 0; i < pred_probs.rows(); ++i)
        for (Eigen::Index j = 0; j < pred_probs.cols(); ++j)
            if (gt_one_hot(i, j) != 0.0)
                loss -= gt_one_hot(i, j) * std::log(pred_probs(i, j) + kLogEps);
    return loss;
}

inline double pretrain_loss(double reg, double seg, const LossWeights& w = {}) {
    w.validate();
    if (!std::isfinite(reg) || !std::isfinite(seg))
        throw InputError("pretrain_loss: non-finite terms");
    return w.reg * reg + w.seg * seg;
}

// Sum over axes and joints of KL(gt || pred); flip reverse_direction for the
// alternate reading of the divergence order.
inline double heatmap_loss(const HeatmapTriplet& pred, const HeatmapTriplet& gt,
                           bool reverse_direction = false) {
    if (pred.num_joints() != gt.num_joints())
        throw InputError("heatmap_loss: joint count mismatch");
    double loss = 0.0;
    for (int axis = 0; axis < 3; ++axis) {
        if (pred.axes[axis].size() != gt.axes[axis].size())
            throw InputError("heatmap_loss: axis shape mismatch");
        for (std::size_t j = 0; j < gt.axes[axis].size(); ++j) {
            const std::vector<double>& p = pred.axes[axis][j];
            const std::vector<double>& q = gt.axes[axis][j];
            if (p.size() != q.size()) throw InputError("heatmap_loss: bin count mismatch");
            const std::vector<double>& ref = reverse_direction ? p : q;
            const std::vector<double>& oth = reverse_direction ? q : p;
            for (std::size_t b = 0; b < q.size(); ++b)
                if (ref[b] > 0.0)
                    loss += ref[b] * (std::log(ref[b] + kLogEps) - std::log(oth[b] + kLogEps));
        }
    }
    return loss;
}

}  // namespace lhs
