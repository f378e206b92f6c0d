#include <catch2/catch_amalgamated.hpp>

#include "lhs/dataset_io.hpp"
#include "lhs/rng.hpp"
#include "test_helpers.hpp"

using namespace lhs;

namespace {

SyntheticSample random_sample(RngStream& rng, int n_points = 100) {
    SyntheticSample s;
    s.points.resize(n_points);
    s.labels.resize(n_points);
    for (int i = 0; i < n_points; ++i) {
        for (int c = 0; c < 3; ++c) s.points[i][c] = static_cast<float>(rng.normal(5.0, 1.0));
        s.labels[i] = static_cast<std::uint16_t>(rng.uniform_index(kNumClasses));
    }
    for (int j = 0; j < kNumJoints; ++j) {
        for (int c = 0; c < 3; ++c) s.joints[j][c] = static_cast<float>(rng.normal());
        s.visibility[j] = rng.uniform() < 0.8;
    }
    s.meta.seed = rng.next_u64();
    s.meta.r = 10.5f;
    s.meta.azimuth = -0.25f;
    s.meta.pose_id = 17;
    s.meta.mask_patch_count = 32;
    s.meta.config_hash = config_hash_bytes("test-config");
    return s;
}

}  // namespace

TEST_CASE("record round trip is bit-exact") {
    RngStream rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        const SyntheticSample s = random_sample(rng, 1 + static_cast<int>(rng.uniform_index(200)));
        REQUIRE(decode_sample(encode_sample(s)) == s);
    }
    SyntheticSample empty;
    empty.meta.config_hash = config_hash_bytes("x");
    REQUIRE(decode_sample(encode_sample(empty)) == empty);
}

TEST_CASE("truncated records raise a truncation error, not garbage") {
    RngStream rng(2);
    const std::string rec = encode_sample(random_sample(rng));
    for (std::size_t cut : {rec.size() - 1, rec.size() / 2, std::size_t{5}})
        REQUIRE_THROWS_AS(decode_sample(rec.substr(0, cut)), FormatError);
    REQUIRE_THROWS_AS(decode_sample(rec + "x"), FormatError);
    std::string bad = rec;
    bad[0] = 'X';
    REQUIRE_THROWS_AS(decode_sample(bad), FormatError);
}

TEST_CASE("golden record bytes are stable across platforms") {
    // deterministic minimal sample, frozen byte-level expectations
    SyntheticSample s;
    s.points = {{1.0f, 2.0f, 3.0f}};
    s.labels = {5};
    for (int j = 0; j < kNumJoints; ++j) s.joints[j] = {0.0f, 0.0f, 0.0f};
    s.visibility.fill(0);
    s.meta.config_hash.fill(0);
    const std::string rec = encode_sample(s);

    REQUIRE(rec.compare(0, 4, "LHS1") == 0);
    // u32 version=1, N=1, K=24 little-endian
    const unsigned char expect_header[] = {1, 0, 0, 0, 1, 0, 0, 0, 24, 0, 0, 0};
    for (int i = 0; i < 12; ++i)
        REQUIRE(static_cast<unsigned char>(rec[4 + i]) == expect_header[i]);
    // f32 1.0 = 00 00 80 3f
    const unsigned char expect_one[] = {0x00, 0x00, 0x80, 0x3f};
    for (int i = 0; i < 4; ++i)
        REQUIRE(static_cast<unsigned char>(rec[16 + i]) == expect_one[i]);
    // u16 label 5 after 12 bytes of point data
    REQUIRE(static_cast<unsigned char>(rec[28]) == 5);
    REQUIRE(static_cast<unsigned char>(rec[29]) == 0);
    REQUIRE(rec.size() == 4 + 12 + 12 + 2 + 24 * 12 + 24 + 8 + 4 + 4 + 4 + 4 + 16);
}

TEST_CASE("dataset writer/reader round trip with manifest verification") {
    const auto dir = test::scratch_dir("dataset");
    RngStream rng(3);
    nlohmann::json cfg = {{"purpose", "test"}};
    std::vector<SyntheticSample> originals;
    const auto hash = config_hash_bytes(cfg.dump());
    {
        DatasetWriter writer(dir, 99, cfg);
        for (int i = 0; i < 10; ++i) {
            SyntheticSample s = random_sample(rng, 20 + i);
            s.meta.config_hash = hash;
            originals.push_back(s);
            writer.append(i, s);
        }
        writer.finalize();
    }
    DatasetReader reader(dir);
    REQUIRE(reader.size() == 10);
    REQUIRE(reader.manifest().master_seed == 99);
    for (int i = 0; i < 10; ++i) REQUIRE(reader.read(i) == originals[i]);
}

TEST_CASE("config hash mismatch is a distinct error") {
    const auto dir = test::scratch_dir("dataset_hash");
    RngStream rng(4);
    DatasetWriter writer(dir, 1, {{"a", 1}});
    SyntheticSample s = random_sample(rng);
    s.meta.config_hash = config_hash_bytes("different-config");
    writer.append(0, s);
    writer.finalize();
    DatasetReader reader(dir);
    REQUIRE_THROWS_AS(reader.read(0), FormatError);
}

TEST_CASE("PLY export parses back within f32 text precision") {
    const auto dir = test::scratch_dir("ply");
    RngStream rng(5);
    const SyntheticSample s = random_sample(rng, 37);
    const std::string path = (dir / "sample.ply").string();
    export_ply(s, path);

    std::ifstream is(path);
    std::string line;
    int vertex_count = -1;
    while (std::getline(is, line) && line != "end_header")
        if (line.rfind("element vertex ", 0) == 0)
            vertex_count = std::stoi(line.substr(15));
    REQUIRE(vertex_count == 37);
    for (int i = 0; i < 37; ++i) {
        REQUIRE(std::getline(is, line));
        std::istringstream ls(line);
        double x, y, z;
        int label;
        ls >> x >> y >> z >> label;
        REQUIRE(std::abs(x - s.points[i][0]) < 1e-5 * std::max(1.0, std::abs(x)));
        REQUIRE(std::abs(y - s.points[i][1]) < 1e-5 * std::max(1.0, std::abs(y)));
        REQUIRE(std::abs(z - s.points[i][2]) < 1e-5 * std::max(1.0, std::abs(z)));
        REQUIRE(label == s.labels[i]);
    }

    SyntheticSample empty;
    const std::string epath = (dir / "empty.ply").string();
    export_ply(empty, epath);
    std::ifstream eis(epath);
    std::string all((std::istreambuf_iterator<char>(eis)), std::istreambuf_iterator<char>());
    REQUIRE(all.find("element vertex 0") != std::string::npos);
}

TEST_CASE("prediction file round trip, duplicates, and missing ids") {
    const auto dir = test::scratch_dir("preds");
    const std::string path = (dir / "preds.lhp").string();
    RngStream rng(6);
    std::map<std::uint64_t, MatX3> preds;
    for (std::uint64_t id : {3ULL, 8ULL}) {
        MatX3 j(kNumJoints, 3);
        for (int k = 0; k < kNumJoints; ++k)
            for (int c = 0; c < 3; ++c) j(k, c) = rng.normal();
        preds[id] = j;
    }
    write_predictions(preds, path);
    const auto back = read_predictions(path);
    REQUIRE(back.size() == 2);
    REQUIRE(back.count(3));
    REQUIRE(back.count(8));
    REQUIRE((back.at(3) - preds.at(3)).cwiseAbs().maxCoeff() < 1e-6);

    // duplicate id: hand-craft a file with the same record twice
    std::ifstream is(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    const std::size_t rec_size = 8 + kNumJoints * 12;
    std::string dup = bytes.substr(0, 12);
    std::uint32_t two = 2;
    std::memcpy(dup.data() + 8, &two, 4);
    dup += bytes.substr(12, rec_size);
    dup += bytes.substr(12, rec_size);
    const std::string dup_path = (dir / "dup.lhp").string();
    std::ofstream(dup_path, std::ios::binary) << dup;
    REQUIRE_THROWS_AS(read_predictions(dup_path), FormatError);

    // truncation
    const std::string trunc_path = (dir / "trunc.lhp").string();
    std::ofstream(trunc_path, std::ios::binary) << bytes.substr(0, bytes.size() - 3);
    REQUIRE_THROWS_AS(read_predictions(trunc_path), FormatError);
}
