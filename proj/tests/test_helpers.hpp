#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "lhs/common.hpp"
#include "lhs/rng.hpp"
#include "lhs/scene.hpp"

namespace lhs::test {

// UV sphere mesh; vertices lie exactly on the sphere.
inline void make_sphere(const Vec3& center, double radius, int stacks, int slices,
                        MatX3& vertices, FacesMat& faces) {
    std::vector<Vec3> vs;
    for (int s = 0; s <= stacks; ++s) {
        const double phi = kPi * s / stacks;  // 0..pi from +Z
        for (int t = 0; t < slices; ++t) {
            const double th = 2.0 * kPi * t / slices;
            vs.push_back(center + radius * Vec3(std::sin(phi) * std::cos(th),
                                                std::sin(phi) * std::sin(th), std::cos(phi)));
        }
    }
    std::vector<std::array<std::uint32_t, 3>> fs;
    for (int s = 0; s < stacks; ++s) {
        for (int t = 0; t < slices; ++t) {
            const std::uint32_t a = s * slices + t;
            const std::uint32_t b = s * slices + (t + 1) % slices;
            const std::uint32_t c = a + slices;
            const std::uint32_t d = b + slices;
            fs.push_back({a, b, c});
            fs.push_back({b, d, c});
        }
    }
    vertices.resize(static_cast<Eigen::Index>(vs.size()), 3);
    for (std::size_t i = 0; i < vs.size(); ++i)
        vertices.row(static_cast<Eigen::Index>(i)) = vs[i];
    faces.resize(static_cast<Eigen::Index>(fs.size()), 3);
    for (std::size_t i = 0; i < fs.size(); ++i)
        for (int c = 0; c < 3; ++c) faces(static_cast<Eigen::Index>(i), c) = fs[i][c];
}

// Random triangle soup inside a box in front of the sensor.
inline void make_random_scene(RngStream& rng, int n_faces, MatX3& vertices, FacesMat& faces,
                              const Vec3& lo = Vec3(4, -3, -3), const Vec3& hi = Vec3(12, 3, 3),
                              double tri_size = 1.0) {
    vertices.resize(n_faces * 3, 3);
    faces.resize(n_faces, 3);
    for (int f = 0; f < n_faces; ++f) {
        Vec3 base;
        for (int c = 0; c < 3; ++c) base[c] = rng.uniform(lo[c], hi[c]);
        for (int v = 0; v < 3; ++v) {
            const Vec3 p = base + tri_size * Vec3(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5),
                                                  rng.uniform(-0.5, 0.5));
            vertices.row(f * 3 + v) = p;
            faces(f, v) = f * 3 + v;
        }
    }
}

inline SceneMesh as_scene(const MatX3& vertices, const FacesMat& faces, int label = 0) {
    SceneMesh scene;
    scene.vertices = vertices;
    scene.faces = faces;
    scene.face_label.assign(faces.rows(), label);
    return scene;
}

// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const std::filesystem::path p = std::filesystem::temp_directory_path() / ("lhs_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace lhs::test
