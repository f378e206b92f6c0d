#include <catch2/catch_amalgamated.hpp>

#include <map>

#include "lhs/body_model.hpp"
#include "lhs/raycast.hpp"
#include "lhs/scene.hpp"
#include "test_helpers.hpp"

using namespace lhs;

TEST_CASE("BVH matches brute force on random scenes and rays") {
    RngStream rng(1);
    for (int scene_i = 0; scene_i < 5; ++scene_i) {
        MatX3 v;
        FacesMat f;
        test::make_random_scene(rng, 200, v, f);
        const Bvh bvh(v, f);
        const BruteForceCaster brute(v, f);
        for (int r = 0; r < 2000; ++r) {
            Ray ray;
            ray.origin = Vec3::Zero();
            const double az = rng.uniform(-0.8, 0.8);
            const double el = rng.uniform(-0.5, 0.5);
            ray.dir = Vec3(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az),
                           std::sin(el));
            const Hit a = bvh.closest_hit(ray);
            const Hit b = brute.closest_hit(ray);
            REQUIRE(a.valid == b.valid);
            if (a.valid) {
                REQUIRE(a.face == b.face);
                REQUIRE(std::abs(a.t - b.t) < 1e-9);
            }
        }
    }
}

TEST_CASE("miss is reported by both intersectors") {
    MatX3 v(3, 3);
    v << 5, -1, -1, 5, 1, -1, 5, 0, 1;
    FacesMat f(1, 3);
    f << 0, 1, 2;
    const Bvh bvh(v, f);
    const BruteForceCaster brute(v, f);
    Ray ray{Vec3::Zero(), Vec3(-1, 0, 0)};
    REQUIRE_FALSE(bvh.closest_hit(ray).valid);
    REQUIRE_FALSE(brute.closest_hit(ray).valid);
}

TEST_CASE("coincident duplicate triangles break ties toward the lower face") {
    MatX3 v(6, 3);
    v << 5, -1, -1, 5, 1, -1, 5, 0, 1, 5, -1, -1, 5, 1, -1, 5, 0, 1;
    FacesMat f(2, 3);
    f << 3, 4, 5, 0, 1, 2;  // face 0 and 1 are geometrically identical
    const Bvh bvh(v, f);
    const BruteForceCaster brute(v, f);
    Ray ray{Vec3::Zero(), Vec3(1, 0, 0)};
    const Hit a = bvh.closest_hit(ray);
    const Hit b = brute.closest_hit(ray);
    REQUIRE(a.valid);
    REQUIRE(a.face == 0);
    REQUIRE(b.face == 0);
}

TEST_CASE("degenerate zero-area faces are never intersected") {
    MatX3 v(3, 3);
    v << 5, -1, 0, 5, 1, 0, 5, 0, 0;  // collinear
    FacesMat f(1, 3);
    f << 0, 1, 2;
    const Bvh bvh(v, f);
    Ray ray{Vec3::Zero(), Vec3(1, 0, 0)};
    REQUIRE_FALSE(bvh.closest_hit(ray).valid);
}

TEST_CASE("axis-aligned triangle hit lands on the plane with the face label") {
    MatX3 v(3, 3);
    v << 5, -2, -2, 5, 2, -2, 5, 0, 3;
    FacesMat f(1, 3);
    f << 0, 1, 2;
    SceneMesh scene = test::as_scene(v, f, /*label=*/7);
    const LaserGrid grid;
    const EffectiveWindow w = effective_window(grid, scene);
    const HitCloud cloud = raycast(scene, grid, w);
    REQUIRE(cloud.size() > 0);
    for (int n = 0; n < cloud.size(); ++n) {
        REQUIRE_THAT(cloud.points(n, 0), Catch::Matchers::WithinAbs(5.0, 1e-9));
        REQUIRE(cloud.labels[n] == 7);
        REQUIRE(cloud.hit_face[n] == 0);
    }
}

TEST_CASE("points lie on their hit face's plane") {
    const BodyModel model = gen_toy_model(0);
    const PosedBody body = forward(model, VecX::Zero(10), VecX::Zero(72));
    SceneConfig cfg;
    RngStream rng(4);
    const SceneMesh scene = place_scene_at(body, cfg, rng, 8.0, 0.4);
    const LaserGrid grid;
    const HitCloud cloud = raycast(scene, grid, effective_window(grid, scene));
    REQUIRE(cloud.size() > 50);
    for (int n = 0; n < cloud.size(); ++n) {
        const int f = cloud.hit_face[n];
        const Vec3 a = scene.vertices.row(scene.faces(f, 0));
        const Vec3 b = scene.vertices.row(scene.faces(f, 1));
        const Vec3 c = scene.vertices.row(scene.faces(f, 2));
        const Vec3 nrm = (b - a).cross(c - a).normalized();
        REQUIRE(std::abs(nrm.dot(Vec3(cloud.points.row(n)) - a)) < 1e-6);
        REQUIRE(cloud.labels[n] == scene.face_label[f]);
    }
}

TEST_CASE("closer bodies receive more hits") {
    const BodyModel model = gen_toy_model(0);
    const PosedBody body = forward(model, VecX::Zero(10), VecX::Zero(72));
    SceneConfig cfg;
    cfg.ground_enabled = false;
    RngStream rng_a(5), rng_b(5);
    const SceneMesh near = place_scene_at(body, cfg, rng_a, 4.0, 0.0);
    const SceneMesh far = place_scene_at(body, cfg, rng_b, 20.0, 0.0);
    const LaserGrid grid;
    const int hits_near = raycast(near, grid, effective_window(grid, near)).size();
    const int hits_far = raycast(far, grid, effective_window(grid, far)).size();
    // inverse-angular-size relation, measured once on the toy model
    REQUIRE(hits_near >= 4 * hits_far);
    REQUIRE(hits_far > 0);
}

TEST_CASE("adding a triangle never creates a farther hit (monotone occlusion)") {
    RngStream rng(6);
    MatX3 v;
    FacesMat f;
    test::make_random_scene(rng, 60, v, f);
    SceneMesh scene = test::as_scene(v, f);
    const LaserGrid grid;
    const EffectiveWindow w = effective_window(grid, scene);
    const HitCloud before = raycast(scene, grid, w);

    // occluder quad in front of everything
    const int nv = static_cast<int>(scene.vertices.rows());
    scene.vertices.conservativeResize(nv + 3, 3);
    scene.vertices.row(nv) = Vec3(2.0, -1.5, -1.5);
    scene.vertices.row(nv + 1) = Vec3(2.0, 1.5, -1.5);
    scene.vertices.row(nv + 2) = Vec3(2.0, 0.0, 1.5);
    const int nf = static_cast<int>(scene.faces.rows());
    scene.faces.conservativeResize(nf + 1, 3);
    scene.faces.row(nf) << nv, nv + 1, nv + 2;
    scene.face_label.push_back(1);
    const HitCloud after = raycast(scene, grid, w);

    std::map<std::pair<int, int>, double> dist_before;
    for (int n = 0; n < before.size(); ++n)
        dist_before[before.ray_cell[n]] = before.points.row(n).norm();
    for (int n = 0; n < after.size(); ++n) {
        auto it = dist_before.find(after.ray_cell[n]);
        if (it != dist_before.end())
            REQUIRE(after.points.row(n).norm() <= it->second + 1e-9);
    }
}
