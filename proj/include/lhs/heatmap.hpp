#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "lhs/common.hpp"

namespace lhs {

struct AxisRange {
    double min = -1.5;
    double max = 1.5;
};

struct HeatmapSpec {
    std::array<int, 3> bins = {128, 128, 128};
    std::array<AxisRange, 3> range;
    double sigma = 2.0;  // label smoothing in bins; 0 = one-hot

    void validate() const {
        for (int c = 0; c < 3; ++c) {
            if (bins[c] < 2) throw InputError("heatmap: bins must be >= 2");
            if (!(range[c].max > range[c].min)) throw InputError("heatmap: empty axis range");
        }
        if (sigma < 0.0) throw InputError("heatmap: sigma must be >= 0");
    }

    double bin_width(int axis) const {
        return (range[axis].max - range[axis].min) / bins[axis];
    }
    double bin_center(int axis, int b) const {
        return range[axis].min + (b + 0.5) * bin_width(axis);
    }
};

// Per-joint, per-axis categorical distributions over coordinate bins.
struct HeatmapTriplet {
    // axes[c][j] is the length-bins[c] distribution of joint j on axis c.
    std::array<std::vector<std::vector<double>>, 3> axes;

    int num_joints() const { return static_cast<int>(axes[0].size()); }
};

// Cube of side 3 m centered on the point centroid: isotropic bin resolution,
// covers a standing human with margin at any supported range.
inline std::array<AxisRange, 3> default_range(const MatX3& points, double side = 3.0) {
    if (points.rows() < 1) throw InputError("default_range: no points");
    const Vec3 c = points.colwise().mean().transpose();
    std::array<AxisRange, 3> r;
    for (int axis = 0; axis < 3; ++axis) r[axis] = {c[axis] - side / 2, c[axis] + side / 2};
    return r;
}

// Gaussian targets over bin centers, normalized to sum 1. sigma=0 degenerates
// to one-hot at the joint's bin. Out-of-range joints are clamped to the range.
inline HeatmapTriplet encode(const MatX3& joints, const HeatmapSpec& spec,
                             bool* clamped = nullptr) {
    spec.validate();
    if (!joints.allFinite()) throw InputError("encode: non-finite joints");
    if (clamped) *clamped = false;

    HeatmapTriplet hm;
    const int k = static_cast<int>(joints.rows());
    for (int axis = 0; axis < 3; ++axis) {
        hm.axes[axis].resize(k);
        const double bw = spec.bin_width(axis);
        for (int j = 0; j < k; ++j) {
            double x = joints(j, axis);
            if (x < spec.range[axis].min || x > spec.range[axis].max) {
                x = std::clamp(x, spec.range[axis].min, spec.range[axis].max);
                if (clamped) *clamped = true;
            }
            std::vector<double>& h = hm.axes[axis][j];
            h.assign(spec.bins[axis], 0.0);
            if (spec.sigma == 0.0) {
                int b = static_cast<int>((x - spec.range[axis].min) / bw);
                b = std::clamp(b, 0, spec.bins[axis] - 1);
                h[b] = 1.0;
                continue;
            }
            const double s = spec.sigma * bw;
            double sum = 0.0;
            for (int b = 0; b < spec.bins[axis]; ++b) {
                const double d = spec.bin_center(axis, b) - x;
                h[b] = std::exp(-d * d / (2.0 * s * s));
                sum += h[b];
            }
            for (double& v : h) v /= sum;
        }
    }
    return hm;
}

// Peak decode: per axis the bin-center of the argmax (tie -> lower bin).
// Soft-argmax (probability-weighted mean of bin centers) behind a flag.
inline MatX3 decode(const HeatmapTriplet& hm, const HeatmapSpec& spec,
                    bool soft_argmax = false) {
    spec.validate();
    const int k = hm.num_joints();
    MatX3 joints(k, 3);
    for (int axis = 0; axis < 3; ++axis) {
        if (static_cast<int>(hm.axes[axis].size()) != k)
            throw InputError("decode: inconsistent joint counts across axes");
        for (int j = 0; j < k; ++j) {
            const std::vector<double>& h = hm.axes[axis][j];
            if (static_cast<int>(h.size()) != spec.bins[axis])
                throw InputError("decode: heatmap length does not match spec bins");
            double total = 0.0;
            for (double v : h) total += v;
            if (total <= 0.0) throw DegenerateError("decode: all-zero heatmap");
            if (soft_argmax) {
                double acc = 0.0;
                for (int b = 0; b < spec.bins[axis]; ++b) acc += h[b] * spec.bin_center(axis, b);
                joints(j, axis) = acc / total;
            } else {
                int best = 0;
                for (int b = 1; b < spec.bins[axis]; ++b)
                    if (h[b] > h[best]) best = b;
                joints(j, axis) = spec.bin_center(axis, best);
            }
        }
    }
    return joints;
}

// Binary dump for the CLI: magic "LHM1", u32 K, then per axis u32 bins and
// f32 range min/max, then per joint per axis f32 rows. Little-endian.
inline void write_heatmap_dump(const HeatmapTriplet& hm, const HeatmapSpec& spec,
                               const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for write: " + path);
    os.write("LHM1", 4);
    const auto k = static_cast<std::uint32_t>(hm.num_joints());
    os.write(reinterpret_cast<const char*>(&k), 4);
    for (int axis = 0; axis < 3; ++axis) {
        const auto bins = static_cast<std::uint32_t>(spec.bins[axis]);
        const float lo = static_cast<float>(spec.range[axis].min);
        const float hi = static_cast<float>(spec.range[axis].max);
        os.write(reinterpret_cast<const char*>(&bins), 4);
        os.write(reinterpret_cast<const char*>(&lo), 4);
        os.write(reinterpret_cast<const char*>(&hi), 4);
    }
    for (std::uint32_t j = 0; j < k; ++j)
        for (int axis = 0; axis < 3; ++axis)
            for (double v : hm.axes[axis][j]) {
                const float f = static_cast<float>(v);
                os.write(reinterpret_cast<const char*>(&f), 4);
            }
    if (!os) throw IoError("write failed: " + path);
}

inline std::pair<HeatmapTriplet, HeatmapSpec> read_heatmap_dump(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open heatmap dump: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::string(magic, 4) != "LHM1")
        throw FormatError("heatmap dump: bad magic (expected LHM1)");
    std::uint32_t k = 0;
    is.read(reinterpret_cast<char*>(&k), 4);
    HeatmapSpec spec;
    for (int axis = 0; axis < 3; ++axis) {
        std::uint32_t bins = 0;
        float lo = 0, hi = 0;
        is.read(reinterpret_cast<char*>(&bins), 4);
        is.read(reinterpret_cast<char*>(&lo), 4);
        is.read(reinterpret_cast<char*>(&hi), 4);
        if (!is) throw FormatError("heatmap dump: truncated header");
        spec.bins[axis] = static_cast<int>(bins);
        spec.range[axis] = {lo, hi};
    }
    HeatmapTriplet hm;
    for (int axis = 0; axis < 3; ++axis) hm.axes[axis].resize(k);
    for (std::uint32_t j = 0; j < k; ++j)
        for (int axis = 0; axis < 3; ++axis) {
            std::vector<float> row(spec.bins[axis]);
            is.read(reinterpret_cast<char*>(row.data()),
                    static_cast<std::streamsize>(row.size() * 4));
            if (!is) throw FormatError("heatmap dump: truncated rows");
            hm.axes[axis][j].assign(row.begin(), row.end());
        }
    return {hm, spec};
}

}  // namespace lhs
