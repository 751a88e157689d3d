#include <cmath>
#include <random>

#include <doctest.h>
#include <Eigen/Eigenvalues>

#include "lrn/errors.hpp"
#include "lrn/structures.hpp"

using namespace lrn;

namespace {

double deg(double d) { return d * M_PI / 180.0; }

// Grid on z = 0 with the given normal everywhere.
PointCloud plane_grid(int side, const Vec3& normal, double spacing = 0.1) {
    std::vector<Vec3> p, n;
    for (int a = 0; a < side; ++a)
        for (int b = 0; b < side; ++b) {
            p.emplace_back(a * spacing, b * spacing, 0.0);
            n.push_back(normal);
        }
    return PointCloud(p, n);
}

// Two perpendicular half-planes meeting along the y axis: z = 0 for x >= 0 and x = 0 for z >= 0.
PointCloud two_planes(int side) {
    std::vector<Vec3> p, n;
    for (int a = 1; a <= side; ++a)
        for (int b = 0; b < side; ++b) {
            p.emplace_back(a * 0.1, b * 0.1, 0.0);
            n.emplace_back(0, 0, 1);
            p.emplace_back(0.0, b * 0.1, a * 0.1);
            n.emplace_back(1, 0, 0);
        }
    return PointCloud(p, n);
}

std::vector<IsotropicStructure> all_structures(const PointCloud& c, const NeighborTable& t, double theta) {
    std::vector<IsotropicStructure> s;
    for (std::size_t i = 0; i < c.size(); ++i)
        s.push_back(extract_isotropic(c, i, t, VoteWeights{structure_scale(c.positions(), t[i]), 30.0}, theta));
    return s;
}

}  // namespace

TEST_CASE("vote weights") {
    CHECK(distance_weight(0.0, 2.0) == 1.0);
    CHECK(distance_weight(2.0, 2.0) == doctest::Approx(std::exp(-1.0)));
    CHECK(angle_weight(0.0, 30.0) == 1.0);
    const double phi90 = std::exp(-std::pow(1.0 / (1.0 - std::cos(deg(30.0))), 2));
    CHECK(angle_weight(deg(90.0), 30.0) == doctest::Approx(phi90));
    CHECK(phi90 == doctest::Approx(7.6e-25).epsilon(0.05));
    CHECK_THROWS_AS((VoteWeights{0.0, 30.0}.validate()), InvalidConfig);
    CHECK_THROWS_AS((VoteWeights{1.0, 90.0}.validate()), InvalidConfig);
}

TEST_CASE("vote weights are monotone non-increasing") {
    double prev_d = 2.0, prev_a = 2.0;
    for (int k = 0; k <= 400; ++k) {
        const double d = distance_weight(0.01 * k, 0.7);
        const double a = angle_weight(deg(90.0 * k / 400.0), 30.0);
        CHECK(d <= prev_d);
        CHECK(a <= prev_a);
        prev_d = d;
        prev_a = a;
    }
}

TEST_CASE("vote tensor examples") {
    const std::vector<std::size_t> one{1};
    const std::vector<Vec3> n{Vec3::UnitZ(), Vec3::UnitZ()};
    SUBCASE("coincident neighbor") {
        const std::vector<Vec3> p{Vec3::Zero(), Vec3::Zero()};
        const auto t = vote_tensor(p, n, 0, one, VoteWeights{1.0, 30.0});
        Mat3 expect = Mat3::Zero();
        expect(2, 2) = 1.0;
        CHECK((t.entries() - expect).norm() < 1e-15);
    }
    SUBCASE("neighbor at sigma_p") {
        const std::vector<Vec3> p{Vec3::Zero(), Vec3(0.5, 0, 0)};
        const auto t = vote_tensor(p, n, 0, one, VoteWeights{0.5, 30.0});
        CHECK(t(2, 2) == doctest::Approx(std::exp(-1.0)));
        CHECK(t.entries().norm() == doctest::Approx(std::exp(-1.0)));
    }
    SUBCASE("perpendicular neighbors") {
        const std::vector<Vec3> p{Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
        const std::vector<Vec3> nn{Vec3::UnitX(), Vec3::UnitX(), Vec3::UnitY()};
        const std::vector<std::size_t> two{1, 2};
        const auto t = vote_tensor(p, nn, 0, two, VoteWeights{1.0, 30.0});
        CHECK(t(0, 0) == doctest::Approx(1.0));
        CHECK(t(1, 1) == doctest::Approx(std::exp(-std::pow(1.0 / (1.0 - std::cos(deg(30.0))), 2))));
        CHECK(t(2, 2) == 0.0);
    }
    SUBCASE("empty neighborhood") {
        const std::vector<Vec3> p{Vec3::Zero(), Vec3::Zero()};
        CHECK_THROWS_AS(vote_tensor(p, n, 0, std::vector<std::size_t>{}, VoteWeights{}), EmptyNeighborhood);
    }
}

TEST_CASE("vote tensor is PSD on random inputs") {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Vec3> p(12), n(12);
        for (int k = 0; k < 12; ++k) {
            p[k] = Vec3(g(rng), g(rng), g(rng));
            n[k] = Vec3(g(rng), g(rng), g(rng)).normalized();
        }
        std::vector<std::size_t> nb{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
        const auto t = vote_tensor(p, n, 0, nb, VoteWeights{structure_scale(p, nb), 30.0});
        Eigen::SelfAdjointEigenSolver<Mat3> es(t.entries());
        CHECK(es.eigenvalues().minCoeff() >= -1e-10);
    }
}

TEST_CASE("structure scale is twice the largest pairwise distance") {
    const std::vector<Vec3> p{Vec3::Zero(), Vec3(1, 0, 0), Vec3(0, 2, 0), Vec3(5, 5, 5)};
    const std::vector<std::size_t> nb{1, 2};
    CHECK(structure_scale(p, nb) == doctest::Approx(2.0 * std::sqrt(5.0)));
}

TEST_CASE("representative orientation examples") {
    Mat3 m = Mat3::Zero();
    m(2, 2) = 1.0;
    CHECK((representative_orientation(SymTensor3(m)) - Vec3::UnitZ()).norm() < 1e-12);

    SymTensor3 t;
    for (int k = 0; k < 100; ++k) t.add_outer(Vec3::UnitY(), 1.0);
    CHECK((representative_orientation(t) - Vec3::UnitY()).norm() < 1e-12);

    SymTensor3 u;
    u.add_outer(Vec3::UnitX(), 0.9);
    u.add_outer(Vec3::UnitY(), 0.1);
    CHECK((representative_orientation(u) - Vec3::UnitX()).norm() < 1e-12);

    CHECK_THROWS_AS(representative_orientation(SymTensor3()), DegenerateTensor);
}

TEST_CASE("representative orientation of a clean plane is the plane normal") {
    const Vec3 normal = Vec3(0.2, -0.3, 0.9).normalized();
    // Positions do not matter for the vote beyond weights, so keep the grid flat.
    const auto c = plane_grid(8, normal);
    const auto t = build_knn_table(c, 20);
    for (std::size_t i = 0; i < c.size(); i += 7) {
        const auto v = vote_tensor(c, i, t, VoteWeights{structure_scale(c.positions(), t[i]), 30.0});
        CHECK(unsigned_angle(representative_orientation(v), normal) < 1e-6);
    }
}

TEST_CASE("extract_isotropic on a plane keeps every point") {
    const auto c = plane_grid(6, Vec3::UnitZ());
    const auto t = build_knn_table(c, 10);
    const auto s = extract_isotropic(c, 14, t, VoteWeights{structure_scale(c.positions(), t[14]), 30.0}, 30.0);
    CHECK(s.members.size() == 11);
    CHECK(s.members.front() == 14);
    CHECK(s.center_index == 14);
}

TEST_CASE("extract_isotropic at a cube edge keeps one side") {
    // Center normal (1,0,0); 6 neighbors share it, 4 carry (0,0,1).
    std::vector<Vec3> p, n;
    p.emplace_back(0, 0, 0);
    n.emplace_back(1, 0, 0);
    for (int k = 0; k < 6; ++k) {
        p.emplace_back(0, 0.05 * k, 0.05);
        n.emplace_back(1, 0, 0);
    }
    for (int k = 0; k < 4; ++k) {
        p.emplace_back(0.05, 0.05 * k, 0);
        n.emplace_back(0, 0, 1);
    }
    std::vector<std::size_t> nb;
    for (std::size_t j = 1; j < p.size(); ++j) nb.push_back(j);
    const auto s = extract_isotropic(p, n, 0, nb, VoteWeights{structure_scale(p, nb), 30.0}, 30.0);
    CHECK((s.rep_orientation - Vec3::UnitX()).norm() < 1e-12);
    CHECK(s.members == std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6});
}

TEST_CASE("extract_isotropic with zero threshold keeps exact matches") {
    // Mirror-symmetric tilts cancel in the tensor, so e1 is exactly +z.
    std::vector<Vec3> p{Vec3::Zero(), Vec3(0.1, 0, 0), Vec3(-0.1, 0, 0), Vec3(0, 0.1, 0), Vec3(0, -0.1, 0)};
    std::vector<Vec3> n{Vec3::UnitZ(), Vec3(0.01, 0, 1).normalized(), Vec3(-0.01, 0, 1).normalized(), Vec3::UnitZ(),
                        Vec3::UnitZ()};
    std::vector<std::size_t> nb{1, 2, 3, 4};
    const auto s = extract_isotropic(p, n, 0, nb, VoteWeights{structure_scale(p, nb), 30.0}, 0.0);
    CHECK(s.members == std::vector<std::size_t>{0, 3, 4});
}

TEST_CASE("extract_isotropic members respect the threshold") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(0.0, 0.3);
    std::vector<Vec3> p(40), n(40);
    for (int k = 0; k < 40; ++k) {
        p[k] = Vec3(g(rng), g(rng), g(rng));
        n[k] = Vec3(g(rng), g(rng), 1.0).normalized();
    }
    std::vector<std::size_t> nb;
    for (std::size_t j = 1; j < 40; ++j) nb.push_back(j);
    for (double th : {5.0, 15.0, 30.0}) {
        const auto s = extract_isotropic(p, n, 0, nb, VoteWeights{structure_scale(p, nb), 30.0}, th);
        CHECK(!s.members.empty());
        for (auto m : s.members) CHECK(unsigned_angle(n[m], s.rep_orientation) <= deg(th) + 1e-12);
    }
}

TEST_CASE("find_similar on a plane returns every candidate") {
    const auto c = plane_grid(8, Vec3::UnitZ());
    const auto t = build_knn_table(c, 10);
    const auto cand = build_knn_table(c, 20);
    const auto s = all_structures(c, t, 30.0);
    const auto sim = find_similar(s, 9, 20, 30.0, cand);
    CHECK(sim.anchor == 9);
    CHECK(sim.similars.size() == 21);
    CHECK(sim.similars.front() == 9);
    CHECK(find_similar(s, 9, 0, 30.0, cand).similars == std::vector<std::size_t>{9});
}

TEST_CASE("find_similar on perpendicular planes stays on the anchor plane") {
    const auto c = two_planes(8);
    const auto t = build_knn_table(c, 12);
    const auto cand = build_knn_table(c, 40);
    const auto s = all_structures(c, t, 30.0);
    for (std::size_t i = 0; i < c.size(); i += 5) {
        const auto sim = find_similar(s, i, 40, 30.0, cand);
        for (auto j : sim.similars) {
            CHECK(unsigned_angle(s[j].rep_orientation, s[i].rep_orientation) <= deg(30.0) + 1e-12);
            CHECK(unsigned_angle(c.normal(j), c.normal(i)) < 1e-12);
        }
    }
}
