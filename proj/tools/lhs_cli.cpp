// Command-line front end: synth / augment / eval / heatmap / inspect / toy-model.
// Logs go to stderr, machine-readable output goes to files.
// Exit codes: 0 ok, 2 input error, 3 data-format error, 4 degenerate generation.

#include <CLI11.hpp>

#include <chrono>
#include <iostream>

#include "lhs/pipeline.hpp"

namespace {

using namespace lhs;

struct SweepRow {
    double knob;
    MetricsReport report;
};

MetricsReport evaluate_dataset(const DatasetReader& reader,
                               const std::map<std::uint64_t, MatX3>* preds,
                               const SkeletonSpec& skeleton, const JitterConfig* jit,
                               const ClusterConfig* clu, std::uint64_t aug_seed) {
    std::vector<InstanceMetrics> instances;
    std::size_t missing = 0;
    for (std::size_t i = 0; i < reader.size(); ++i) {
        const std::uint64_t id = reader.manifest().entries[i].sample_id;
        SyntheticSample s = reader.read(i);

        if (jit && jit->sigma > 0.0) {
            RngStream rng(aug_seed, id, RngTag::kJitter);
            MatX3 pts(static_cast<Eigen::Index>(s.points.size()), 3);
            for (std::size_t n = 0; n < s.points.size(); ++n)
                for (int c = 0; c < 3; ++c) pts(static_cast<Eigen::Index>(n), c) = s.points[n][c];
            pts = jitter(pts, *jit, rng);
            for (std::size_t n = 0; n < s.points.size(); ++n)
                for (int c = 0; c < 3; ++c)
                    s.points[n][c] = static_cast<float>(pts(static_cast<Eigen::Index>(n), c));
        }
        if (clu && clu->n_clusters > 0 && !s.points.empty()) {
            RngStream rng(aug_seed, id, RngTag::kClusters);
            HitCloud cloud;
            cloud.points.resize(static_cast<Eigen::Index>(s.points.size()), 3);
            for (std::size_t n = 0; n < s.points.size(); ++n)
                for (int c = 0; c < 3; ++c)
                    cloud.points(static_cast<Eigen::Index>(n), c) = s.points[n][c];
            cloud.labels.assign(s.labels.begin(), s.labels.end());
            cloud.hit_face.assign(s.labels.size(), -1);
            cloud.ray_cell.assign(s.labels.size(), {-1, -1});
            cloud = add_noise_clusters(cloud, *clu, rng);
            s.points.resize(cloud.size());
            s.labels.resize(cloud.size());
            for (int n = 0; n < cloud.size(); ++n) {
                for (int c = 0; c < 3; ++c) s.points[n][c] = static_cast<float>(cloud.points(n, c));
                s.labels[n] = static_cast<std::uint16_t>(cloud.labels[n]);
            }
        }

        MatX3 pred;
        if (preds) {
            auto it = preds->find(id);
            if (it == preds->end()) {
                ++missing;
                continue;
            }
            pred = it->second;
        } else {
            pred = nearest_joint_baseline(s);
        }
        instances.push_back(
            evaluate_instance(pred, sample_gt_joints(s), sample_visibility(s), skeleton));
    }
    if (preds && missing > 0) {
        if (instances.empty())
            throw InputError("eval: no common instances between dataset and predictions");
        std::cerr << "warning: " << missing << " dataset instances missing predictions\n";
    }
    return aggregate(instances, skeleton);
}

int run(int argc, char** argv) {
    CLI::App app{"LiDAR human point-cloud synthesis, augmentation, and evaluation toolkit"};
    app.require_subcommand(1);
    app.set_config("--config");

    // --- toy-model ---
    auto* toy = app.add_subcommand("toy-model", "generate the procedural toy body model");
    std::uint64_t toy_seed = 0;
    std::string toy_out = "toy_model.lbm";
    std::string toy_poses;
    int toy_pose_count = 256;
    toy->add_option("--seed", toy_seed, "generator seed");
    toy->add_option("--out", toy_out, "output model path");
    toy->add_option("--poses", toy_poses, "also write a toy pose database here");
    toy->add_option("--pose-count", toy_pose_count, "rows in the toy pose database");

    // --- synth ---
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
    GenConfig gen;
    std::string synth_out = "dataset";
    synth_cmd->add_option("--model", gen.body_model_path, "body model container")->required();
    synth_cmd->add_option("--poses", gen.pose_db_path, "pose database (binary or CSV)")
        ->required();
    synth_cmd->add_option("--count", gen.count, "number of samples")->required();
    synth_cmd->add_option("--seed", gen.master_seed, "master seed");
    synth_cmd->add_option("--workers", gen.workers, "worker threads");
    synth_cmd->add_option("--out", synth_out, "output dataset directory");
    synth_cmd->add_option("--r-keep", gen.r_keep, "mask keep ratio");
    synth_cmd->add_option("--min-points", gen.min_points, "minimum surviving points");
    synth_cmd->add_option("--r-min", gen.scene.r_min, "placement range min (m)");
    synth_cmd->add_option("--r-max", gen.scene.r_max, "placement range max (m)");
    synth_cmd->add_option("--ground-size", gen.scene.ground_size, "ground quad side (m)");
    synth_cmd->add_option("--ground-max-tilt", gen.scene.ground_max_tilt,
                          "ground tilt cone (rad)");
    bool no_ground = false;
    synth_cmd->add_flag("--no-ground", no_ground, "disable the ground plane");
    synth_cmd->add_option("--n-azimuth", gen.grid.n_azimuth, "azimuth steps");
    synth_cmd->add_option("--n-elevation", gen.grid.n_elevation, "elevation beams");

    // --- augment ---
    auto* aug_cmd = app.add_subcommand("augment", "write a perturbed copy of a dataset");
    std::string aug_in, aug_out = "augmented";
    JitterConfig jit;
    ClusterConfig clu;
    std::uint64_t aug_seed = 1;
    aug_cmd->add_option("--in", aug_in, "input dataset directory")->required();
    aug_cmd->add_option("--out", aug_out, "output dataset directory");
    aug_cmd->add_option("--seed", aug_seed, "augmentation seed");
    aug_cmd->add_option("--jitter-sigma", jit.sigma, "per-axis jitter sigma (m)");
    aug_cmd->add_option("--jitter-clip", jit.clip, "per-axis jitter clamp (m)");
    aug_cmd->add_option("--clusters", clu.n_clusters, "noise clusters per sample");
    aug_cmd->add_option("--cluster-points", clu.points_per_cluster, "points per cluster");
    aug_cmd->add_option("--cluster-sigma", clu.cluster_sigma, "cluster spread (m)");

    // --- eval ---
    auto* eval_cmd = app.add_subcommand("eval", "evaluate predictions against a dataset");
    std::string eval_data, eval_preds, eval_out = "report.txt", sweep_kind = "none",
                sweep_out = "sweep.csv";
    bool use_baseline = false;
    int worst_n = 600;
    std::string worst_out;
    eval_cmd->add_option("--data", eval_data, "dataset directory")->required();
    eval_cmd->add_option("--preds", eval_preds, "prediction file (LHP1)");
    eval_cmd->add_flag("--baseline", use_baseline, "use the nearest-joint baseline predictor");
    eval_cmd->add_option("--out", eval_out, "report output path");
    eval_cmd->add_option("--sweep", sweep_kind, "perturbation sweep: none|jitter|clusters");
    eval_cmd->add_option("--sweep-out", sweep_out, "sweep curve CSV path");
    eval_cmd->add_option("--worst-n", worst_n, "instances in the worst-case statistics");
    eval_cmd->add_option("--worst-out", worst_out, "per-joint worst-case statistics CSV");

    // --- heatmap ---
    auto* hm_cmd = app.add_subcommand("heatmap", "encode GT joints / decode a heatmap dump");
    std::string hm_data, hm_dump, hm_out = "heatmap.lhm";
    int hm_index = 0, hm_bins = 128;
    double hm_sigma = 2.0;
    hm_cmd->add_option("--data", hm_data, "dataset directory (encode mode)");
    hm_cmd->add_option("--index", hm_index, "sample index to encode");
    hm_cmd->add_option("--bins", hm_bins, "bins per axis");
    hm_cmd->add_option("--sigma", hm_sigma, "label smoothing in bins");
    hm_cmd->add_option("--decode", hm_dump, "heatmap dump to decode (decode mode)");
    hm_cmd->add_option("--out", hm_out, "output path (dump or decoded CSV)");

    // --- inspect ---
    auto* ins_cmd = app.add_subcommand("inspect", "print dataset statistics");
    std::string ins_data, ins_ply;
    int ins_index = -1;
    ins_cmd->add_option("--data", ins_data, "dataset directory")->required();
    ins_cmd->add_option("--ply", ins_ply, "export one sample as ASCII PLY here");
    ins_cmd->add_option("--index", ins_index, "sample index for --ply (default 0)");

    CLI11_PARSE(app, argc, argv);

    if (*toy) {
        const BodyModel model = gen_toy_model(toy_seed);
        save_body_model(model, toy_out);
        std::cerr << "wrote " << toy_out << " (" << model.num_vertices() << " vertices, "
                  << model.num_faces() << " faces)\n";
        if (!toy_poses.empty()) {
            save_pose_db(gen_toy_pose_db(toy_seed, toy_pose_count), toy_poses);
            std::cerr << "wrote " << toy_poses << " (" << toy_pose_count << " poses)\n";
        }
        return 0;
    }

    if (*synth_cmd) {
        gen.scene.ground_enabled = !no_ground;
        const auto t0 = std::chrono::steady_clock::now();
        const SynthStats stats = synth(gen, synth_out, &std::cerr);
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cerr << "generated " << stats.generated << " samples (" << stats.discarded
                  << " discarded) in " << secs << " s ("
                  << static_cast<double>(stats.generated) / secs << " samples/s)\n";
        return 0;
    }

    if (*aug_cmd) {
        DatasetReader reader(aug_in);
        nlohmann::json cfg = reader.manifest().config;
        cfg["augment"] = {{"jitter_sigma", jit.sigma},
                          {"jitter_clip", jit.clip},
                          {"clusters", clu.n_clusters},
                          {"cluster_points", clu.points_per_cluster},
                          {"cluster_sigma", clu.cluster_sigma},
                          {"seed", aug_seed}};
        DatasetWriter writer(aug_out, reader.manifest().master_seed, cfg);
        const auto hash = config_hash_bytes(cfg.dump());
        for (std::size_t i = 0; i < reader.size(); ++i) {
            const std::uint64_t id = reader.manifest().entries[i].sample_id;
            SyntheticSample s = reader.read(i);
            if (jit.sigma > 0.0) {
                RngStream rng(aug_seed, id, RngTag::kJitter);
                MatX3 pts(static_cast<Eigen::Index>(s.points.size()), 3);
                for (std::size_t n = 0; n < s.points.size(); ++n)
                    for (int c = 0; c < 3; ++c)
                        pts(static_cast<Eigen::Index>(n), c) = s.points[n][c];
                pts = jitter(pts, jit, rng);
                for (std::size_t n = 0; n < s.points.size(); ++n)
                    for (int c = 0; c < 3; ++c)
                        s.points[n][c] = static_cast<float>(pts(static_cast<Eigen::Index>(n), c));
            }
            if (clu.n_clusters > 0 && !s.points.empty()) {
                RngStream rng(aug_seed, id, RngTag::kClusters);
                HitCloud cloud;
                cloud.points.resize(static_cast<Eigen::Index>(s.points.size()), 3);
                for (std::size_t n = 0; n < s.points.size(); ++n)
                    for (int c = 0; c < 3; ++c)
                        cloud.points(static_cast<Eigen::Index>(n), c) = s.points[n][c];
                cloud.labels.assign(s.labels.begin(), s.labels.end());
                cloud.hit_face.assign(s.labels.size(), -1);
                cloud.ray_cell.assign(s.labels.size(), {-1, -1});
                cloud = add_noise_clusters(cloud, clu, rng);
                s.points.resize(cloud.size());
                s.labels.resize(cloud.size());
                for (int n = 0; n < cloud.size(); ++n) {
                    for (int c = 0; c < 3; ++c)
                        s.points[n][c] = static_cast<float>(cloud.points(n, c));
                    s.labels[n] = static_cast<std::uint16_t>(cloud.labels[n]);
                }
            }
            s.meta.config_hash = hash;
            writer.append(id, s);
        }
        writer.finalize();
        std::cerr << "wrote augmented dataset to " << aug_out << "\n";
        return 0;
    }

    if (*eval_cmd) {
        DatasetReader reader(eval_data);
        SkeletonSpec skeleton;
        std::map<std::uint64_t, MatX3> preds;
        const std::map<std::uint64_t, MatX3>* preds_ptr = nullptr;
        if (!use_baseline) {
            if (eval_preds.empty())
                throw InputError("eval: provide --preds or --baseline");
            preds = read_predictions(eval_preds);
            if (preds.empty()) throw InputError("eval: prediction file has no records");
            preds_ptr = &preds;
        }

        if (sweep_kind == "jitter" || sweep_kind == "clusters") {
            std::ofstream csv(sweep_out);
            if (!csv) throw IoError("cannot write " + sweep_out);
            csv << "knob,mpjpe_mm,pck3,pck5\n";
            if (sweep_kind == "jitter") {
                for (int i = 1; i <= 10; ++i) {
                    JitterConfig j;
                    j.sigma = 0.05;
                    j.clip = 0.01 * i;
                    const MetricsReport r =
                        evaluate_dataset(reader, preds_ptr, skeleton, &j, nullptr, 99);
                    csv << j.clip << "," << r.mpjpe_mm << "," << r.pck3 << "," << r.pck5 << "\n";
                }
            } else {
                for (int pts : {10, 25, 50, 100, 150, 200}) {
                    ClusterConfig c;
                    c.n_clusters = 3;
                    c.points_per_cluster = pts;
                    const MetricsReport r =
                        evaluate_dataset(reader, preds_ptr, skeleton, nullptr, &c, 99);
                    csv << pts << "," << r.mpjpe_mm << "," << r.pck3 << "," << r.pck5 << "\n";
                }
            }
            std::cerr << "wrote sweep curve to " << sweep_out << "\n";
        }

        const MetricsReport report =
            evaluate_dataset(reader, preds_ptr, skeleton, nullptr, nullptr, 0);
        std::ofstream os(eval_out);
        if (!os) throw IoError("cannot write " + eval_out);
        os << format_report(report);
        std::cerr << "wrote report to " << eval_out << "\n";

        if (!worst_out.empty()) {
            std::vector<InstanceMetrics> instances;
            for (std::size_t i = 0; i < reader.size(); ++i) {
                SyntheticSample s = reader.read(i);
                MatX3 pred;
                if (preds_ptr) {
                    auto it = preds_ptr->find(reader.manifest().entries[i].sample_id);
                    if (it == preds_ptr->end()) continue;
                    pred = it->second;
                } else {
                    pred = nearest_joint_baseline(s);
                }
                instances.push_back(evaluate_instance(pred, sample_gt_joints(s),
                                                      sample_visibility(s), skeleton));
            }
            bool clamped = false;
            const WorstJointStats w = worst_instances(instances, worst_n, &clamped);
            if (clamped)
                std::cerr << "warning: worst-n clamped to dataset size " << w.n_used << "\n";
            std::ofstream ws(worst_out);
            ws << "joint,mean_mm,var_mm2\n";
            for (std::size_t j = 0; j < w.per_joint_mean_mm.size(); ++j)
                ws << j << "," << w.per_joint_mean_mm[j] << "," << w.per_joint_var_mm2[j]
                   << "\n";
            std::cerr << "wrote worst-instance statistics to " << worst_out << "\n";
        }
        return 0;
    }

    if (*hm_cmd) {
        if (!hm_dump.empty()) {
            const auto [hm, spec] = read_heatmap_dump(hm_dump);
            const MatX3 joints = decode(hm, spec);
            std::ofstream os(hm_out);
            if (!os) throw IoError("cannot write " + hm_out);
            os.precision(9);
            for (Eigen::Index j = 0; j < joints.rows(); ++j)
                os << joints(j, 0) << "," << joints(j, 1) << "," << joints(j, 2) << "\n";
            std::cerr << "decoded joints to " << hm_out << "\n";
            return 0;
        }
        if (hm_data.empty()) throw InputError("heatmap: provide --data or --decode");
        DatasetReader reader(hm_data);
        const SyntheticSample s = reader.read(static_cast<std::size_t>(hm_index));
        MatX3 pts(static_cast<Eigen::Index>(s.points.size()), 3);
        for (std::size_t n = 0; n < s.points.size(); ++n)
            for (int c = 0; c < 3; ++c) pts(static_cast<Eigen::Index>(n), c) = s.points[n][c];
        HeatmapSpec spec;
        spec.bins = {hm_bins, hm_bins, hm_bins};
        spec.sigma = hm_sigma;
        spec.range = default_range(pts);
        const HeatmapTriplet hm = encode(sample_gt_joints(s), spec);
        write_heatmap_dump(hm, spec, hm_out);
        std::cerr << "encoded sample " << hm_index << " to " << hm_out << "\n";
        return 0;
    }

    if (*ins_cmd) {
        DatasetReader reader(ins_data);
        std::size_t total_points = 0;
        std::size_t min_pts = SIZE_MAX, max_pts = 0;
        for (std::size_t i = 0; i < reader.size(); ++i) {
            const SyntheticSample s = reader.read(i);
            total_points += s.points.size();
            min_pts = std::min(min_pts, s.points.size());
            max_pts = std::max(max_pts, s.points.size());
        }
        std::cout << "samples: " << reader.size() << "\n";
        std::cout << "config_hash: " << reader.manifest().config_hash_hex << "\n";
        std::cout << "master_seed: " << reader.manifest().master_seed << "\n";
        if (reader.size() > 0) {
            std::cout << "points_mean: "
                      << static_cast<double>(total_points) / static_cast<double>(reader.size())
                      << "\n";
            std::cout << "points_min: " << min_pts << "\npoints_max: " << max_pts << "\n";
        }
        if (!ins_ply.empty()) {
            const std::size_t idx = ins_index < 0 ? 0 : static_cast<std::size_t>(ins_index);
            export_ply(reader.read(idx), ins_ply);
            std::cerr << "wrote " << ins_ply << "\n";
        }
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const lhs::FormatError& e) {
        std::cerr << "data format error: " << e.what() << "\n";
        return 3;
    } catch (const lhs::DegenerateError& e) {
        std::cerr << "degenerate generation: " << e.what() << "\n";
        return 4;
    } catch (const lhs::InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const lhs::IoError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
