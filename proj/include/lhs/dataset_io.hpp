#pragma once

#include <array>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lhs/common.hpp"
#include "lhs/rng.hpp"

#include <nlohmann/json.hpp>

namespace lhs {

struct SampleMeta {
    std::uint64_t seed = 0;
    float r = 0.0f;
    float azimuth = 0.0f;
    std::uint32_t pose_id = 0;
    std::uint32_t mask_patch_count = 0;
    std::array<std::uint8_t, 16> config_hash{};
};

// One synthesized training sample: masked point cloud with per-point labels,
// GT joints, per-joint visibility, and provenance metadata.
struct SyntheticSample {
    std::vector<std::array<float, 3>> points;
    std::vector<std::uint16_t> labels;  // joint id or kGroundLabel
    std::array<std::array<float, 3>, kNumJoints> joints{};
    std::array<std::uint8_t, kNumJoints> visibility{};
    SampleMeta meta;

    bool operator==(const SyntheticSample& o) const {
        auto bits_eq = [](float a, float b) {
            std::uint32_t ua, ub;
            std::memcpy(&ua, &a, 4);
            std::memcpy(&ub, &b, 4);
            return ua == ub;
        };
        if (points.size() != o.points.size() || labels != o.labels ||
            visibility != o.visibility)
            return false;
        for (std::size_t i = 0; i < points.size(); ++i)
            for (int c = 0; c < 3; ++c)
                if (!bits_eq(points[i][c], o.points[i][c])) return false;
        for (int j = 0; j < kNumJoints; ++j)
            for (int c = 0; c < 3; ++c)
                if (!bits_eq(joints[j][c], o.joints[j][c])) return false;
        return meta.seed == o.meta.seed && bits_eq(meta.r, o.meta.r) &&
               bits_eq(meta.azimuth, o.meta.azimuth) && meta.pose_id == o.meta.pose_id &&
               meta.mask_patch_count == o.meta.mask_patch_count &&
               meta.config_hash == o.meta.config_hash;
    }
};

// 128-bit hash of a canonical config string (two keyed splitmix64 passes).
inline std::array<std::uint8_t, 16> config_hash_bytes(const std::string& canonical) {
    auto mix = [](std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    };
    std::uint64_t h1 = 0x6C62272E07BB0142ULL;
    std::uint64_t h2 = 0xCBF29CE484222325ULL;
    for (unsigned char ch : canonical) {
        h1 = mix(h1 ^ ch);
        h2 = mix((h2 + ch) * 0x100000001B3ULL);
    }
    std::array<std::uint8_t, 16> out;
    std::memcpy(out.data(), &h1, 8);
    std::memcpy(out.data() + 8, &h2, 8);
    return out;
}

// ---------------------------------------------------------------------------
// Record codec: magic "LHS1", u32 version, u32 N, u32 K, f32 points, u16
// labels, f32 joints, u8 visibility, fixed-layout meta. Little-endian.
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
void put(std::string& buf, const T& v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    buf.append(p, sizeof(T));
}

template <typename T>
T take(const std::string& buf, std::size_t& off, const char* what) {
    if (off + sizeof(T) > buf.size())
        throw FormatError(std::string("sample record truncated at ") + what);
    T v;
    std::memcpy(&v, buf.data() + off, sizeof(T));
    off += sizeof(T);
    return v;
}

}  // namespace detail

inline std::string encode_sample(const SyntheticSample& s) {
    for (std::uint16_t l : s.labels)
        if (l >= kNumClasses) throw InputError("sample: label out of range");
    if (s.labels.size() != s.points.size()) throw InputError("sample: labels/points mismatch");

    std::string buf;
    buf.append("LHS1", 4);
    detail::put<std::uint32_t>(buf, 1);
    detail::put<std::uint32_t>(buf, static_cast<std::uint32_t>(s.points.size()));
    detail::put<std::uint32_t>(buf, kNumJoints);
    for (const auto& p : s.points)
        for (float c : p) detail::put(buf, c);
    for (std::uint16_t l : s.labels) detail::put(buf, l);
    for (const auto& j : s.joints)
        for (float c : j) detail::put(buf, c);
    for (std::uint8_t v : s.visibility) detail::put(buf, v);
    detail::put(buf, s.meta.seed);
    detail::put(buf, s.meta.r);
    detail::put(buf, s.meta.azimuth);
    detail::put(buf, s.meta.pose_id);
    detail::put(buf, s.meta.mask_patch_count);
    buf.append(reinterpret_cast<const char*>(s.meta.config_hash.data()), 16);
    return buf;
}

inline SyntheticSample decode_sample(const std::string& buf) {
    std::size_t off = 0;
    if (buf.size() < 4 || buf.compare(0, 4, "LHS1") != 0)
        throw FormatError("sample record: bad magic (expected LHS1)");
    off = 4;
    const auto version = detail::take<std::uint32_t>(buf, off, "version");
    if (version != 1) throw FormatError("sample record: unsupported version " +
                                        std::to_string(version));
    const auto n = detail::take<std::uint32_t>(buf, off, "N");
    const auto k = detail::take<std::uint32_t>(buf, off, "K");
    if (k != kNumJoints) throw FormatError("sample record: K != 24");

    SyntheticSample s;
    s.points.resize(n);
    for (auto& p : s.points)
        for (float& c : p) c = detail::take<float>(buf, off, "points");
    s.labels.resize(n);
    for (auto& l : s.labels) {
        l = detail::take<std::uint16_t>(buf, off, "labels");
        if (l >= kNumClasses) throw FormatError("sample record: label out of range");
    }
    for (auto& j : s.joints)
        for (float& c : j) c = detail::take<float>(buf, off, "joints");
    for (auto& v : s.visibility) v = detail::take<std::uint8_t>(buf, off, "visibility");
    s.meta.seed = detail::take<std::uint64_t>(buf, off, "meta.seed");
    s.meta.r = detail::take<float>(buf, off, "meta.r");
    s.meta.azimuth = detail::take<float>(buf, off, "meta.azimuth");
    s.meta.pose_id = detail::take<std::uint32_t>(buf, off, "meta.pose_id");
    s.meta.mask_patch_count = detail::take<std::uint32_t>(buf, off, "meta.mask_patch_count");
    if (off + 16 > buf.size()) throw FormatError("sample record truncated at config_hash");
    std::memcpy(s.meta.config_hash.data(), buf.data() + off, 16);
    off += 16;
    if (off != buf.size()) throw FormatError("sample record: trailing bytes");
    return s;
}

// ---------------------------------------------------------------------------
// Sharded dataset: shard-NNNN.lhs files of <= kShardCapacity records, plus a
// JSON manifest written last (the commit point). The manifest plus master
// seed and config regenerate the dataset byte for byte.
// ---------------------------------------------------------------------------

inline constexpr int kShardCapacity = 4096;

struct ManifestEntry {
    std::uint64_t sample_id = 0;
    std::uint32_t shard = 0;
    std::uint64_t offset = 0;  // byte offset in the shard
    std::uint64_t size = 0;
};

struct Manifest {
    std::uint32_t schema_version = 1;
    std::uint64_t master_seed = 0;
    nlohmann::json config;  // full generation config
    std::string config_hash_hex;
    std::vector<ManifestEntry> entries;
};

inline std::string to_hex(const std::array<std::uint8_t, 16>& h) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    for (std::uint8_t b : h) {
        s.push_back(digits[b >> 4]);
        s.push_back(digits[b & 0xF]);
    }
    return s;
}

class DatasetWriter {
public:
    DatasetWriter(std::filesystem::path dir, std::uint64_t master_seed, nlohmann::json config)
        : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
        manifest_.master_seed = master_seed;
        manifest_.config = std::move(config);
        manifest_.config_hash_hex = to_hex(config_hash_bytes(manifest_.config.dump()));
    }

    void append(std::uint64_t sample_id, const SyntheticSample& sample) {
        if (!shard_.is_open() || records_in_shard_ >= kShardCapacity) open_next_shard();
        const std::string rec = encode_sample(sample);
        ManifestEntry e;
        e.sample_id = sample_id;
        e.shard = shard_index_ - 1;
        e.offset = shard_bytes_;
        e.size = rec.size();
        shard_.write(rec.data(), static_cast<std::streamsize>(rec.size()));
        if (!shard_) throw IoError("shard write failed in " + dir_.string());
        shard_bytes_ += rec.size();
        ++records_in_shard_;
        manifest_.entries.push_back(e);
    }

    // Commit point: readers only see the dataset once the manifest exists.
    void finalize() {
        if (shard_.is_open()) shard_.close();
        nlohmann::json j;
        j["schema_version"] = manifest_.schema_version;
        j["master_seed"] = manifest_.master_seed;
        j["config"] = manifest_.config;
        j["config_hash"] = manifest_.config_hash_hex;
        j["sample_count"] = manifest_.entries.size();
        nlohmann::json entries = nlohmann::json::array();
        for (const ManifestEntry& e : manifest_.entries)
            entries.push_back({{"id", e.sample_id},
                               {"shard", e.shard},
                               {"offset", e.offset},
                               {"size", e.size}});
        j["entries"] = std::move(entries);
        std::ofstream os(dir_ / "manifest.json");
        if (!os) throw IoError("cannot write manifest in " + dir_.string());
        os << j.dump(2) << "\n";
    }

    static std::string shard_name(std::uint32_t index) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "shard-%04u.lhs", index);
        return buf;
    }

private:
    void open_next_shard() {
        if (shard_.is_open()) shard_.close();
        shard_.open(dir_ / shard_name(shard_index_), std::ios::binary | std::ios::trunc);
        if (!shard_) throw IoError("cannot open shard in " + dir_.string());
        ++shard_index_;
        shard_bytes_ = 0;
        records_in_shard_ = 0;
    }

    std::filesystem::path dir_;
    Manifest manifest_;
    std::ofstream shard_;
    std::uint32_t shard_index_ = 0;
    std::uint64_t shard_bytes_ = 0;
    int records_in_shard_ = 0;
};

class DatasetReader {
public:
    explicit DatasetReader(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::ifstream is(dir_ / "manifest.json");
        if (!is) throw IoError("no manifest in " + dir_.string());
        nlohmann::json j;
        try {
            is >> j;
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("manifest parse error: " + std::string(e.what()));
        }
        if (!j.contains("schema_version") || j["schema_version"].get<std::uint32_t>() != 1)
            throw FormatError("manifest: unsupported schema version");
        manifest_.master_seed = j["master_seed"].get<std::uint64_t>();
        manifest_.config = j["config"];
        manifest_.config_hash_hex = j["config_hash"].get<std::string>();
        for (const auto& e : j["entries"]) {
            ManifestEntry m;
            m.sample_id = e["id"].get<std::uint64_t>();
            m.shard = e["shard"].get<std::uint32_t>();
            m.offset = e["offset"].get<std::uint64_t>();
            m.size = e["size"].get<std::uint64_t>();
            if (!manifest_.entries.empty()) {
                const ManifestEntry& prev = manifest_.entries.back();
                const bool ok = m.shard > prev.shard ||
                                (m.shard == prev.shard && m.offset > prev.offset);
                if (!ok) throw FormatError("manifest: offsets not strictly increasing");
            }
            manifest_.entries.push_back(m);
        }
    }

    const Manifest& manifest() const { return manifest_; }
    std::size_t size() const { return manifest_.entries.size(); }

    SyntheticSample read(std::size_t index) const {
        if (index >= manifest_.entries.size()) throw InputError("dataset read out of range");
        const ManifestEntry& e = manifest_.entries[index];
        std::ifstream is(dir_ / DatasetWriter::shard_name(e.shard), std::ios::binary);
        if (!is) throw IoError("missing shard " + std::to_string(e.shard));
        is.seekg(static_cast<std::streamoff>(e.offset));
        std::string buf(e.size, '\0');
        is.read(buf.data(), static_cast<std::streamsize>(e.size));
        if (!is) throw FormatError("shard truncated at record " + std::to_string(index));
        SyntheticSample s = decode_sample(buf);
        if (to_hex(s.meta.config_hash) != manifest_.config_hash_hex)
            throw FormatError("config hash mismatch at record " + std::to_string(index));
        return s;
    }

private:
    std::filesystem::path dir_;
    Manifest manifest_;
};

// ---------------------------------------------------------------------------
// ASCII PLY export: per-point label as a scalar property, joints appended as
// a second element group.
// ---------------------------------------------------------------------------

inline void export_ply(const SyntheticSample& s, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for write: " + path);
    os << "ply\nformat ascii 1.0\n";
    os << "element vertex " << s.points.size() << "\n";
    os << "property float x\nproperty float y\nproperty float z\n";
    os << "property ushort label\n";
    os << "element joint " << kNumJoints << "\n";
    os << "property float x\nproperty float y\nproperty float z\n";
    os << "property uchar visible\n";
    os << "end_header\n";
    os.precision(9);
    for (std::size_t i = 0; i < s.points.size(); ++i)
        os << s.points[i][0] << " " << s.points[i][1] << " " << s.points[i][2] << " "
           << s.labels[i] << "\n";
    for (int j = 0; j < kNumJoints; ++j)
        os << s.joints[j][0] << " " << s.joints[j][1] << " " << s.joints[j][2] << " "
           << static_cast<int>(s.visibility[j]) << "\n";
    if (!os) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Predictions: "LHP1", u32 K, u32 count, then (u64 sample_id, f32 joints K*3).
// ---------------------------------------------------------------------------

inline void write_predictions(const std::map<std::uint64_t, MatX3>& preds,
                              const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for write: " + path);
    os.write("LHP1", 4);
    const std::uint32_t k = kNumJoints;
    const auto count = static_cast<std::uint32_t>(preds.size());
    os.write(reinterpret_cast<const char*>(&k), 4);
    os.write(reinterpret_cast<const char*>(&count), 4);
    for (const auto& [id, joints] : preds) {
        os.write(reinterpret_cast<const char*>(&id), 8);
        for (int j = 0; j < kNumJoints; ++j)
            for (int c = 0; c < 3; ++c) {
                const float v = static_cast<float>(joints(j, c));
                os.write(reinterpret_cast<const char*>(&v), 4);
            }
    }
    if (!os) throw IoError("write failed: " + path);
}

inline std::map<std::uint64_t, MatX3> read_predictions(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open predictions: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "LHP1", 4) != 0)
        throw FormatError("predictions: bad magic (expected LHP1)");
    std::uint32_t k = 0, count = 0;
    is.read(reinterpret_cast<char*>(&k), 4);
    is.read(reinterpret_cast<char*>(&count), 4);
    if (!is) throw FormatError("predictions: truncated header");
    if (k != kNumJoints) throw FormatError("predictions: K != 24");

    std::map<std::uint64_t, MatX3> out;
    for (std::uint32_t r = 0; r < count; ++r) {
        std::uint64_t id;
        is.read(reinterpret_cast<char*>(&id), 8);
        MatX3 joints(kNumJoints, 3);
        for (int j = 0; j < kNumJoints; ++j)
            for (int c = 0; c < 3; ++c) {
                float v;
                is.read(reinterpret_cast<char*>(&v), 4);
                joints(j, c) = v;
            }
        if (!is) throw FormatError("predictions: truncated record " + std::to_string(r));
        if (out.count(id))
            throw FormatError("predictions: duplicate sample id " + std::to_string(id));
        out.emplace(id, std::move(joints));
    }
    return out;
}

}  // namespace lhs
