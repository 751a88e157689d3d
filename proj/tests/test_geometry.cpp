#include <algorithm>
#include <random>
#include <set>

#include <doctest.h>

#include "lrn/errors.hpp"
#include "lrn/geometry.hpp"

using namespace lrn;

namespace {

PointCloud line_cloud(const std::vector<double>& xs) {
    std::vector<Vec3> p, n;
    for (double x : xs) {
        p.emplace_back(x, 0.0, 0.0);
        n.emplace_back(0.0, 0.0, 1.0);
    }
    return PointCloud(p, n);
}

PointCloud random_cloud(std::mt19937_64& rng, std::size_t count) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Vec3> p(count), n(count, Vec3::UnitZ());
    for (auto& x : p) x = Vec3(u(rng), u(rng), u(rng));
    return PointCloud(p, n);
}

// Exhaustive reference: sort all others by (distance, index).
std::vector<std::size_t> brute_knn(const std::vector<Vec3>& p, std::size_t i, std::size_t k) {
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < p.size(); ++j)
        if (j != i) idx.push_back(j);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const double da = (p[a] - p[i]).squaredNorm(), db = (p[b] - p[i]).squaredNorm();
        return da != db ? da < db : a < b;
    });
    idx.resize(k);
    return idx;
}

TriangleMesh fan_mesh(int blades) {
    std::vector<Vec3> v{Vec3::Zero()};
    for (int k = 0; k < blades; ++k) {
        const double a = 2.0 * M_PI * k / blades;
        v.emplace_back(std::cos(a), std::sin(a), 0.0);
    }
    std::vector<Face> f;
    for (int k = 0; k < blades; ++k)
        f.push_back({0u, static_cast<std::uint32_t>(1 + k), static_cast<std::uint32_t>(1 + (k + 1) % blades)});
    return TriangleMesh(v, f);
}

}  // namespace

TEST_CASE("point cloud normalizes normals and rejects bad input") {
    PointCloud c({Vec3(0, 0, 0), Vec3(1, 2, 3)}, {Vec3(0, 0, 5), Vec3(3, 4, 0)});
    CHECK(c.normal(0).norm() == doctest::Approx(1.0));
    CHECK((c.normal(1) - Vec3(0.6, 0.8, 0.0)).norm() < 1e-12);
    CHECK(c.bounding_box_diagonal() == doctest::Approx(std::sqrt(14.0)));
    CHECK_THROWS_AS(PointCloud({Vec3::Zero()}, {Vec3::Zero()}), InvalidInput);
    CHECK_THROWS_AS(PointCloud({Vec3::Zero()}, {}), InvalidInput);
    CHECK_THROWS_AS(PointCloud({Vec3(std::nan(""), 0, 0)}, {Vec3::UnitZ()}), InvalidInput);
}

TEST_CASE("knn on four collinear points") {
    const auto t = build_knn_table(line_cloud({0, 1, 2, 10}), 1);
    REQUIRE(t.size() == 4);
    CHECK(t[0] == std::vector<std::size_t>{1});
    CHECK(t[1] == std::vector<std::size_t>{0});
    CHECK(t[2] == std::vector<std::size_t>{1});
    CHECK(t[3] == std::vector<std::size_t>{2});
}

TEST_CASE("knn with k = size - 1 lists every other point") {
    std::mt19937_64 rng(1);
    const auto c = random_cloud(rng, 9);
    const auto t = build_knn_table(c, 8);
    for (std::size_t i = 0; i < c.size(); ++i) {
        std::set<std::size_t> s(t[i].begin(), t[i].end());
        CHECK(s.size() == 8);
        CHECK(s.count(i) == 0);
    }
}

TEST_CASE("knn coincident points select each other") {
    const auto t = build_knn_table(line_cloud({0.5, 0.5}), 1);
    CHECK(t[0] == std::vector<std::size_t>{1});
    CHECK(t[1] == std::vector<std::size_t>{0});
}

TEST_CASE("knn rejects k out of range") {
    const auto c = line_cloud({0, 1, 2});
    CHECK_THROWS_AS(build_knn_table(c, 3), InvalidConfig);
    CHECK_THROWS_AS(build_knn_table(c, 0), InvalidConfig);
}

TEST_CASE("knn matches brute force on random clouds") {
    std::mt19937_64 rng(42);
    for (std::size_t count : {25u, 120u, 500u}) {
        const auto c = random_cloud(rng, count);
        for (std::size_t k : {1u, 5u, 13u, 20u}) {
            const auto t = build_knn_table(c, k, 2);
            for (std::size_t i = 0; i < count; ++i) REQUIRE(t[i] == brute_knn(c.positions(), i, k));
        }
    }
}

TEST_CASE("knn ties are broken by index") {
    // Points 1..4 are all at distance 1 from point 0.
    std::vector<Vec3> p{Vec3::Zero(), Vec3(0, 0, 1), Vec3(0, 1, 0), Vec3(1, 0, 0), Vec3(-1, 0, 0)};
    PointCloud c(p, std::vector<Vec3>(p.size(), Vec3::UnitZ()));
    CHECK(build_knn_table(c, 2)[0] == std::vector<std::size_t>{1, 2});
}

TEST_CASE("ball table examples") {
    const auto c = line_cloud({0, 1, 3});
    const auto t = build_ball_table(c, 1.5);
    CHECK(t[0] == std::vector<std::size_t>{1});
    CHECK(t[1] == std::vector<std::size_t>{0});
    CHECK(t[2].empty());
    const auto all = build_ball_table(c, 10.0);
    CHECK(all[1] == std::vector<std::size_t>{0, 2});
    const auto none = build_ball_table(c, 1e-9);
    for (std::size_t i = 0; i < 3; ++i) CHECK(none[i].empty());
}

TEST_CASE("ball tables are symmetric and exclude self") {
    std::mt19937_64 rng(8);
    const auto c = random_cloud(rng, 400);
    const auto t = build_ball_table(c, 0.3, 2);
    for (std::size_t i = 0; i < c.size(); ++i) {
        for (auto j : t[i]) {
            CHECK(j != i);
            CHECK(std::binary_search(t[j].begin(), t[j].end(), i));
            CHECK((c.position(i) - c.position(j)).norm() <= 0.3);
        }
        std::size_t brute = 0;
        for (std::size_t j = 0; j < c.size(); ++j)
            if (j != i && (c.position(i) - c.position(j)).norm() <= 0.3) ++brute;
        CHECK(t[i].size() == brute);
    }
}

TEST_CASE("ring2 on two triangles sharing an edge") {
    TriangleMesh m({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0)}, {Face{0, 1, 2}, Face{1, 3, 2}});
    const auto t = build_ring2_table(m);
    CHECK(t[0] == std::vector<std::size_t>{1});
    CHECK(t[1] == std::vector<std::size_t>{0});
}

TEST_CASE("ring2 on a fan of six triangles") {
    const auto m = fan_mesh(6);
    const auto t = build_ring2_table(m);
    for (std::size_t f = 0; f < 6; ++f) {
        std::set<std::size_t> s(t[f].begin(), t[f].end());
        CHECK(s.size() == 5);
        CHECK(s.count(f) == 0);
    }
}

TEST_CASE("ring2 reaches two vertex-sharing steps on a strip") {
    // Strip of triangles along x; face k uses vertices {k, k+1, k+2}.
    std::vector<Vec3> v;
    for (int k = 0; k < 12; ++k) v.emplace_back(0.5 * k, (k % 2) ? 1.0 : 0.0, 0.0);
    std::vector<Face> f;
    for (std::uint32_t k = 0; k + 2 < 12; ++k) f.push_back({k, k + 1, k + 2});
    TriangleMesh m(v, f);
    const auto t = build_ring2_table(m);
    // One-ring of face 5 is faces 3..7; two-ring extends to 1..9.
    std::set<std::size_t> expect;
    for (std::size_t k = 1; k <= 9; ++k)
        if (k != 5) expect.insert(k);
    CHECK(std::set<std::size_t>(t[5].begin(), t[5].end()) == expect);
}

TEST_CASE("ring2 of an isolated triangle is empty") {
    TriangleMesh m({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)}, {Face{0, 1, 2}});
    CHECK(build_ring2_table(m)[0].empty());
}

TEST_CASE("mesh_to_samples on a right triangle") {
    TriangleMesh m({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)}, {Face{0, 1, 2}});
    const auto s = mesh_to_samples(m);
    REQUIRE(s.size() == 1);
    CHECK((s.position(0) - Vec3(1.0 / 3, 1.0 / 3, 0)).norm() < 1e-15);
    CHECK((s.normal(0) - Vec3(0, 0, 1)).norm() < 1e-15);

    TriangleMesh flipped({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)}, {Face{0, 2, 1}});
    CHECK((mesh_to_samples(flipped).normal(0) + Vec3(0, 0, 1)).norm() < 1e-15);
}

TEST_CASE("mesh_to_samples preserves the face count") {
    const auto m = fan_mesh(7);
    CHECK(mesh_to_samples(m).size() == m.face_count());
}

TEST_CASE("triangle mesh validation") {
    const std::vector<Vec3> v{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(2, 0, 0)};
    CHECK_THROWS_AS(TriangleMesh(v, {Face{0, 1, 7}}), InvalidInput);
    CHECK_THROWS_AS(TriangleMesh(v, {Face{0, 1, 1}}), InvalidInput);
    CHECK_THROWS_AS(TriangleMesh(v, {Face{0, 1, 3}}), InvalidInput);   // zero area
}

TEST_CASE("mean kth neighbor distance on a regular line") {
    const auto c = line_cloud({0, 1, 2, 3, 4});
    // Second neighbor distances: 2, 1, 1, 1, 2.
    CHECK(mean_kth_neighbor_distance(c, 2) == doctest::Approx(7.0 / 5.0));
}

TEST_CASE("kd-tree radius search and nearest agree with brute force") {
    std::mt19937_64 rng(17);
    const auto c = random_cloud(rng, 300);
    std::uniform_real_distribution<double> u(-1.2, 1.2);
    for (int trial = 0; trial < 50; ++trial) {
        const Vec3 q(u(rng), u(rng), u(rng));
        std::vector<std::size_t> brute;
        std::size_t best = 0;
        for (std::size_t j = 0; j < c.size(); ++j) {
            if ((c.position(j) - q).norm() <= 0.4) brute.push_back(j);
            if ((c.position(j) - q).squaredNorm() < (c.position(best) - q).squaredNorm()) best = j;
        }
        CHECK(c.index().radius_search(q, 0.4) == brute);
        const auto [idx, d2] = c.index().nearest(q);
        CHECK(idx == best);
        CHECK(d2 == doctest::Approx((c.position(best) - q).squaredNorm()));
    }
}
