#pragma once

#include <atomic>
#include <filesystem>
#include <optional>
#include <thread>
#include <vector>

#include "lhs/augment.hpp"
#include "lhs/body_model.hpp"
#include "lhs/dataset_io.hpp"
#include "lhs/heatmap.hpp"
#include "lhs/laser.hpp"
#include "lhs/masking.hpp"
#include "lhs/metrics.hpp"
#include "lhs/raycast.hpp"
#include "lhs/scene.hpp"

namespace lhs {

// ---------------------------------------------------------------------------
// Pose database: rows of beta(10) + theta(72) as raw f32 binary or CSV.
// ---------------------------------------------------------------------------

struct PoseDb {
    std::vector<std::array<float, 82>> rows;

    std::size_t size() const { return rows.size(); }
    VecX beta(std::size_t i) const {
        VecX b(10);
        for (int c = 0; c < 10; ++c) b(c) = rows[i][c];
        return b;
    }
    VecX theta(std::size_t i) const {
        VecX t(72);
        for (int c = 0; c < 72; ++c) t(c) = rows[i][10 + c];
        return t;
    }
};

inline PoseDb load_pose_db(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open pose db: " + path);
    PoseDb db;
    const bool csv = path.size() > 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
    if (csv) {
        std::string line;
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            std::array<float, 82> row;
            std::istringstream ls(line);
            std::string cell;
            int c = 0;
            while (std::getline(ls, cell, ',')) {
                if (c >= 82) throw FormatError("pose db: row with more than 82 columns");
                row[c++] = std::stof(cell);
            }
            if (c != 82) throw FormatError("pose db: row with " + std::to_string(c) +
                                           " columns, expected 82");
            db.rows.push_back(row);
        }
    } else {
        is.seekg(0, std::ios::end);
        const auto bytes = static_cast<std::uint64_t>(is.tellg());
        is.seekg(0);
        constexpr std::uint64_t row_bytes = 82 * 4;
        if (bytes == 0 || bytes % row_bytes != 0)
            throw FormatError("pose db: size must be a multiple of 82 f32 per row");
        db.rows.resize(bytes / row_bytes);
        is.read(reinterpret_cast<char*>(db.rows.data()), static_cast<std::streamsize>(bytes));
        if (!is) throw FormatError("pose db: truncated read");
    }
    if (db.rows.empty()) throw FormatError("pose db: empty");
    return db;
}

inline void save_pose_db(const PoseDb& db, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for write: " + path);
    os.write(reinterpret_cast<const char*>(db.rows.data()),
             static_cast<std::streamsize>(db.rows.size() * 82 * 4));
    if (!os) throw IoError("write failed: " + path);
}

// Mild random poses for the toy model.
inline PoseDb gen_toy_pose_db(std::uint64_t seed, int count) {
    PoseDb db;
    RngStream rng(seed, 0, RngTag::kPoseDraw);
    for (int i = 0; i < count; ++i) {
        std::array<float, 82> row;
        for (int c = 0; c < 10; ++c)
            row[c] = static_cast<float>(std::clamp(rng.normal(), -2.0, 2.0));
        for (int c = 0; c < 72; ++c)
            row[10 + c] = static_cast<float>(std::clamp(rng.normal(0.0, 0.15), -0.6, 0.6));
        db.rows.push_back(row);
    }
    return db;
}

// ---------------------------------------------------------------------------
// Generation pipeline.
// ---------------------------------------------------------------------------

struct GenConfig {
    std::string body_model_path;
    std::string pose_db_path;
    int count = 1;
    std::uint64_t master_seed = 0;
    SceneConfig scene;
    LaserGrid grid;
    double r_keep = 0.6;
    int min_points = 24;
    int max_redraws = 8;
    int workers = 1;

    void validate() const {
        if (count < 1) throw InputError("gen: count must be >= 1");
        if (!(r_keep > 0.0) || r_keep > 1.0) throw InputError("gen: r_keep must be in (0,1]");
        scene.validate();
        grid.validate();
    }

    nlohmann::json to_json() const {
        return {{"count", count},
                {"master_seed", master_seed},
                {"r_min", scene.r_min},
                {"r_max", scene.r_max},
                {"ground_size", scene.ground_size},
                {"ground_max_tilt", scene.ground_max_tilt},
                {"ground_height_jitter", scene.ground_height_jitter},
                {"ground_enabled", scene.ground_enabled},
                {"n_azimuth", grid.n_azimuth},
                {"n_elevation", grid.n_elevation},
                {"elev_min", grid.elev_min},
                {"elev_max", grid.elev_max},
                {"r_keep", r_keep},
                {"min_points", min_points},
                {"max_redraws", max_redraws}};
    }
};

// Forced knobs so tests can pin (pose, placement) while reusing the pipeline.
struct SynthOverride {
    std::optional<std::uint32_t> pose_id;
    std::optional<double> r;
    std::optional<double> azimuth;
};

// One sample: pose draw -> forward -> placement -> window -> raycast -> mask
// -> visibility. Empty optional when every redraw came up short of min_points.
inline std::optional<SyntheticSample> synth_sample(const BodyModel& model, const PoseDb& poses,
                                                   const GenConfig& cfg, std::uint64_t index,
                                                   const SynthOverride& force = {}) {
    RngStream pose_rng(cfg.master_seed, index, RngTag::kPoseDraw);
    const std::uint32_t pose_id =
        force.pose_id ? *force.pose_id
                      : static_cast<std::uint32_t>(pose_rng.uniform_index(poses.size()));
    const PosedBody body = forward(model, poses.beta(pose_id), poses.theta(pose_id));

    const auto hash = config_hash_bytes(cfg.to_json().dump());

    for (int attempt = 0; attempt <= cfg.max_redraws; ++attempt) {
        RngStream scene_rng = RngStream(cfg.master_seed, index, RngTag::kScene)
                                  .split(static_cast<std::uint64_t>(attempt));
        RngStream mask_rng = RngStream(cfg.master_seed, index, RngTag::kMask)
                                  .split(static_cast<std::uint64_t>(attempt));

        SceneMesh scene;
        if (force.r && force.azimuth) {
            scene = place_scene_at(body, cfg.scene, scene_rng, *force.r, *force.azimuth);
        } else {
            scene = place_scene(body, cfg.scene, scene_rng);
        }

        const EffectiveWindow window = effective_window(cfg.grid, scene);
        if (window.ray_count() <= 0) continue;
        const HitCloud hits = raycast(scene, cfg.grid, window);
        if (hits.size() == 0) continue;
        const MaskPlan plan = plan_mask(window, cfg.r_keep, mask_rng);
        const HitCloud kept = apply_mask(hits, plan, cfg.grid.n_azimuth);
        if (kept.size() < cfg.min_points) continue;

        SyntheticSample s;
        s.points.resize(kept.size());
        s.labels.resize(kept.size());
        for (int n = 0; n < kept.size(); ++n) {
            for (int c = 0; c < 3; ++c)
                s.points[n][c] = static_cast<float>(kept.points(n, c));
            s.labels[n] = static_cast<std::uint16_t>(kept.labels[n]);
        }
        for (int j = 0; j < kNumJoints; ++j) {
            const Vec3 p = Vec3(body.joints.row(j)) + scene.placement.translation;
            for (int c = 0; c < 3; ++c) s.joints[j][c] = static_cast<float>(p[c]);
        }
        // Joint visible iff at least one surviving point carries its label.
        s.visibility.fill(0);
        for (int n = 0; n < kept.size(); ++n)
            if (kept.labels[n] < kNumJoints) s.visibility[kept.labels[n]] = 1;

        s.meta.seed = cfg.master_seed;
        s.meta.r = static_cast<float>(scene.placement.r);
        s.meta.azimuth = static_cast<float>(scene.placement.azimuth);
        s.meta.pose_id = pose_id;
        s.meta.mask_patch_count = static_cast<std::uint32_t>(plan.masked_count());
        s.meta.config_hash = hash;
        return s;
    }
    return std::nullopt;
}

struct SynthStats {
    int generated = 0;
    int discarded = 0;
};

// Deterministic parallel generation: workers claim sample indices, results
// are written to disk in index order, so the output bytes never depend on
// the worker count.
inline SynthStats synth(const GenConfig& cfg, const std::filesystem::path& out_dir,
                        std::ostream* log = nullptr) {
    cfg.validate();
    const BodyModel model = load_body_model(cfg.body_model_path);
    const PoseDb poses = load_pose_db(cfg.pose_db_path);

    std::vector<std::optional<SyntheticSample>> results(cfg.count);
    std::atomic<int> next{0};
    const int workers = std::max(1, cfg.workers);
    auto worker = [&] {
        for (;;) {
            const int k = next.fetch_add(1);
            if (k >= cfg.count) return;
            results[k] = synth_sample(model, poses, cfg, static_cast<std::uint64_t>(k));
        }
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    SynthStats stats;
    DatasetWriter writer(out_dir, cfg.master_seed, cfg.to_json());
    for (int k = 0; k < cfg.count; ++k) {
        if (!results[k]) {
            ++stats.discarded;
            if (log) (*log) << "sample " << k << " discarded after " << cfg.max_redraws
                            << " redraws\n";
            continue;
        }
        writer.append(static_cast<std::uint64_t>(k), *results[k]);
        ++stats.generated;
    }
    if (stats.discarded * 2 > cfg.count)
        throw DegenerateError("synth: discard rate above 50% (" +
                              std::to_string(stats.discarded) + "/" +
                              std::to_string(cfg.count) + ")");
    writer.finalize();
    return stats;
}

// ---------------------------------------------------------------------------
// Trivial baseline: each visible GT joint is predicted at the position of the
// nearest point carrying its label; invisible joints fall back to the sample
// centroid. Evaluation smoke-test subject since no trained model ships.
// ---------------------------------------------------------------------------

inline MatX3 nearest_joint_baseline(const SyntheticSample& s) {
    Vec3 centroid = Vec3::Zero();
    for (const auto& p : s.points) centroid += Vec3(p[0], p[1], p[2]);
    if (!s.points.empty()) centroid /= static_cast<double>(s.points.size());

    MatX3 pred(kNumJoints, 3);
    for (int j = 0; j < kNumJoints; ++j) {
        const Vec3 gt(s.joints[j][0], s.joints[j][1], s.joints[j][2]);
        double best = std::numeric_limits<double>::infinity();
        Vec3 best_p = centroid;
        for (std::size_t n = 0; n < s.points.size(); ++n) {
            if (s.labels[n] != j) continue;
            const Vec3 p(s.points[n][0], s.points[n][1], s.points[n][2]);
            const double d = (p - gt).squaredNorm();
            if (d < best) {
                best = d;
                best_p = p;
            }
        }
        pred.row(j) = best_p;
    }
    return pred;
}

inline MatX3 sample_gt_joints(const SyntheticSample& s) {
    MatX3 gt(kNumJoints, 3);
    for (int j = 0; j < kNumJoints; ++j)
        for (int c = 0; c < 3; ++c) gt(j, c) = s.joints[j][c];
    return gt;
}

inline std::vector<int> sample_visibility(const SyntheticSample& s) {
    std::vector<int> v(kNumJoints);
    for (int j = 0; j < kNumJoints; ++j) v[j] = s.visibility[j];
    return v;
}

}  // namespace lhs
