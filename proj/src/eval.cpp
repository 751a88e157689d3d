#include "lrn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <tuple>

#include <Eigen/Eigenvalues>

#include "lrn/errors.hpp"
#include "lrn/parallel.hpp"

namespace lrn {

// ------------------------------------------------------------------- metrics

double msae(std::span<const Vec3> estimated, std::span<const Vec3> truth) {
    if (estimated.size() != truth.size())
        throw InvalidInput("msae: " + std::to_string(estimated.size()) + " estimated vs " +
                           std::to_string(truth.size()) + " reference normals");
    if (estimated.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < estimated.size(); ++i) {
        const double a = unsigned_angle(estimated[i], truth[i]);
        sum += a * a;
    }
    return sum / static_cast<double>(estimated.size());
}

double msae(const NormalField& estimated, const NormalField& truth) {
    return msae(estimated.normals, truth.normals);
}

double closest_point_rmse(const PointCloud& result, const PointCloud& truth) {
    const KdTree& tree = result.index();
    double sum = 0.0;
    for (const auto& q : truth.positions()) sum += tree.nearest(q).second;
    return std::sqrt(sum / static_cast<double>(truth.size()));
}

double mean_angular_deviation(std::span<const Vec3> a, std::span<const Vec3> b) {
    if (a.size() != b.size()) throw InvalidInput("mean_angular_deviation: size mismatch");
    if (a.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += unsigned_angle(a[i], b[i]);
    return sum / static_cast<double>(a.size());
}

// ------------------------------------------------------------------ PCA baseline

PcaNormals estimate_normals_pca(std::span<const Vec3> positions, std::size_t k, std::span<const Vec3> orient_to,
                                unsigned threads) {
    if (k < 3) throw InvalidConfig("PCA normals need k >= 3");
    if (!orient_to.empty() && orient_to.size() != positions.size())
        throw InvalidInput("PCA normals: orientation reference size mismatch");
    const std::vector<Vec3> pts(positions.begin(), positions.end());
    if (pts.empty()) throw InvalidInput("PCA normals: empty input");
    const KdTree tree(pts);
    const std::size_t kk = std::min(k, pts.size() - 1);

    PcaNormals out;
    out.field.normals.resize(pts.size());
    out.degenerate.assign(pts.size(), 0);
    parallel_for(pts.size(), threads, [&](std::size_t i) {
        auto nb = tree.knn(pts[i], kk, i);
        nb.push_back(i);
        Vec3 mean = Vec3::Zero();
        for (auto j : nb) mean += pts[j];
        mean /= static_cast<double>(nb.size());
        Mat3 cov = Mat3::Zero();
        for (auto j : nb) {
            const Vec3 d = pts[j] - mean;
            cov += d * d.transpose();
        }
        Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
        Vec3 n = es.eigenvectors().col(0).normalized();
        const double scale = std::max(es.eigenvalues().sum(), 1e-300);
        if (es.eigenvalues()[1] <= 1e-12 * scale) out.degenerate[i] = 1;
        if (!orient_to.empty()) {
            if (n.dot(orient_to[i]) < 0.0) n = -n;
        } else {
            n = canonical_sign(n);
        }
        out.field.normals[i] = n;
    });
    return out;
}

PcaNormals estimate_normals_pca(const PointCloud& cloud, std::size_t k, unsigned threads) {
    return estimate_normals_pca(cloud.positions(), k, cloud.normals(), threads);
}

// ------------------------------------------------------------------ shapes

std::optional<ShapeKind> parse_shape_kind(const std::string& name) {
    static const std::map<std::string, ShapeKind> kinds{
        {"cube", ShapeKind::cube},   {"dodecahedron", ShapeKind::dodecahedron},
        {"sphere", ShapeKind::sphere}, {"wedge", ShapeKind::wedge},
        {"plane", ShapeKind::plane}, {"two-density-wedge", ShapeKind::two_density_wedge},
    };
    auto it = kinds.find(name);
    if (it == kinds.end()) return std::nullopt;
    return it->second;
}

std::string to_string(ShapeKind kind) {
    switch (kind) {
        case ShapeKind::cube: return "cube";
        case ShapeKind::dodecahedron: return "dodecahedron";
        case ShapeKind::sphere: return "sphere";
        case ShapeKind::wedge: return "wedge";
        case ShapeKind::plane: return "plane";
        case ShapeKind::two_density_wedge: return "two-density-wedge";
    }
    return "unknown";
}

namespace {

// Convex planar polygon with an outward normal, vertices in order.
struct Polygon {
    std::vector<Vec3> corners;
    Vec3 normal;
};

double polygon_area(const Polygon& poly) {
    double a = 0.0;
    for (std::size_t k = 1; k + 1 < poly.corners.size(); ++k)
        a += 0.5 * (poly.corners[k] - poly.corners[0]).cross(poly.corners[k + 1] - poly.corners[0]).norm();
    return a;
}

// Split `total` proportionally to `weights` (largest remainder, ties to lower index).
std::vector<std::size_t> apportion(std::size_t total, const std::vector<double>& weights) {
    double sum = 0.0;
    for (double w : weights) sum += w;
    std::vector<std::size_t> counts(weights.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t f = 0; f < weights.size(); ++f) {
        const double exact = static_cast<double>(total) * weights[f] / sum;
        counts[f] = static_cast<std::size_t>(std::floor(exact));
        assigned += counts[f];
        remainders.emplace_back(exact - std::floor(exact), f);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; assigned < total; ++r, ++assigned) ++counts[remainders[r % remainders.size()].second];
    return counts;
}

SyntheticShape sample_polygons(const std::vector<Polygon>& polys, const std::vector<double>& density,
                               std::size_t samples, std::mt19937_64& rng) {
    std::vector<double> weights(polys.size());
    for (std::size_t f = 0; f < polys.size(); ++f) weights[f] = polygon_area(polys[f]) * density[f];
    const auto counts = apportion(samples, weights);

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Vec3> pos, nrm, planes;
    std::vector<std::uint32_t> face_of;
    pos.reserve(samples);
    for (std::size_t f = 0; f < polys.size(); ++f) {
        const Polygon& poly = polys[f];
        planes.push_back(poly.normal);
        // fan triangles from the first corner, chosen by area
        std::vector<double> tri_area;
        for (std::size_t k = 1; k + 1 < poly.corners.size(); ++k)
            tri_area.push_back((poly.corners[k] - poly.corners[0]).cross(poly.corners[k + 1] - poly.corners[0]).norm());
        std::discrete_distribution<std::size_t> pick(tri_area.begin(), tri_area.end());
        for (std::size_t s = 0; s < counts[f]; ++s) {
            const std::size_t t = pick(rng);
            const Vec3& a = poly.corners[0];
            const Vec3& b = poly.corners[t + 1];
            const Vec3& c = poly.corners[t + 2];
            const double r1 = std::sqrt(unit(rng));
            const double r2 = unit(rng);
            pos.push_back((1.0 - r1) * a + r1 * (1.0 - r2) * b + r1 * r2 * c);
            nrm.push_back(poly.normal);
            face_of.push_back(static_cast<std::uint32_t>(f));
        }
    }
    return SyntheticShape{PointCloud(std::move(pos), std::move(nrm)), std::move(planes), std::move(face_of)};
}

std::vector<Polygon> cube_faces() {
    std::vector<Polygon> faces;
    for (int axis = 0; axis < 3; ++axis) {
        for (double side : {-0.5, 0.5}) {
            const int u = (axis + 1) % 3, v = (axis + 2) % 3;
            Polygon p;
            p.normal = Vec3::Zero();
            p.normal[axis] = side > 0 ? 1.0 : -1.0;
            for (auto [a, b] : {std::pair{-0.5, -0.5}, {0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}}) {
                Vec3 c;
                c[axis] = side;
                c[u] = a;
                c[v] = b;
                p.corners.push_back(c);
            }
            faces.push_back(p);
        }
    }
    return faces;
}

std::vector<Polygon> dodecahedron_faces() {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> verts;
    for (double x : {-1.0, 1.0})
        for (double y : {-1.0, 1.0})
            for (double z : {-1.0, 1.0}) verts.emplace_back(x, y, z);
    for (double a : {-1.0, 1.0}) {
        for (double b : {-1.0, 1.0}) {
            verts.emplace_back(0.0, a / phi, b * phi);
            verts.emplace_back(a / phi, b * phi, 0.0);
            verts.emplace_back(a * phi, 0.0, b / phi);
        }
    }
    // Face normals point at the vertices of the dual icosahedron.
    std::vector<Vec3> normals;
    for (double a : {-1.0, 1.0}) {
        for (double b : {-1.0, 1.0}) {
            normals.emplace_back(0.0, a, b * phi);
            normals.emplace_back(a, b * phi, 0.0);
            normals.emplace_back(a * phi, 0.0, b);
        }
    }
    std::vector<Polygon> faces;
    for (Vec3 n : normals) {
        n.normalize();
        std::vector<std::pair<double, Vec3>> scored;
        for (const auto& v : verts) scored.emplace_back(v.dot(n), v);
        std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
        Polygon p;
        p.normal = n;
        Vec3 center = Vec3::Zero();
        for (int k = 0; k < 5; ++k) center += scored[k].second;
        center /= 5.0;
        const Vec3 e1 = (scored[0].second - center).normalized();
        const Vec3 e2 = n.cross(e1);
        std::vector<std::pair<double, Vec3>> ring;
        for (int k = 0; k < 5; ++k) {
            const Vec3 d = scored[k].second - center;
            ring.emplace_back(std::atan2(d.dot(e2), d.dot(e1)), 0.5 * scored[k].second);
        }
        std::sort(ring.begin(), ring.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        for (auto& r : ring) p.corners.push_back(r.second);
        faces.push_back(p);
    }
    return faces;
}

std::vector<Polygon> wedge_faces(double angle_deg) {
    const double a = angle_deg * std::numbers::pi / 180.0;
    const Vec3 ua(1.0, 0.0, 0.0);
    const Vec3 ub(std::cos(a), 0.0, std::sin(a));
    const Vec3 y0(0.0, -0.5, 0.0), y1(0.0, 0.5, 0.0);
    Polygon fa{{y0, y0 + ua, y1 + ua, y1}, Vec3(0.0, 0.0, 1.0)};
    Polygon fb{{y0, y1, y1 + ub, y0 + ub}, Vec3(std::sin(a), 0.0, -std::cos(a))};
    return {fa, fb};
}

}  // namespace

SyntheticShape make_shape(const ShapeParams& params) {
    if (params.samples < 100) throw InvalidConfig("make_shape: need at least 100 samples");
    std::mt19937_64 rng(params.seed);
    switch (params.kind) {
        case ShapeKind::cube: return sample_polygons(cube_faces(), std::vector<double>(6, 1.0), params.samples, rng);
        case ShapeKind::dodecahedron:
            return sample_polygons(dodecahedron_faces(), std::vector<double>(12, 1.0), params.samples, rng);
        case ShapeKind::plane: {
            Polygon p{{{-0.5, -0.5, 0.0}, {0.5, -0.5, 0.0}, {0.5, 0.5, 0.0}, {-0.5, 0.5, 0.0}}, Vec3::UnitZ()};
            return sample_polygons({p}, {1.0}, params.samples, rng);
        }
        case ShapeKind::wedge:
        case ShapeKind::two_density_wedge: {
            if (!(params.wedge_angle_deg > 0.0 && params.wedge_angle_deg < 180.0))
                throw InvalidConfig("wedge angle must be in (0, 180) degrees");
            const std::vector<double> density =
                params.kind == ShapeKind::wedge ? std::vector<double>{1.0, 1.0} : std::vector<double>{4.0, 1.0};
            return sample_polygons(wedge_faces(params.wedge_angle_deg), density, params.samples, rng);
        }
        case ShapeKind::sphere: {
            std::normal_distribution<double> g(0.0, 1.0);
            std::vector<Vec3> pos(params.samples), nrm(params.samples);
            for (std::size_t i = 0; i < params.samples; ++i) {
                Vec3 d;
                do {
                    d = Vec3(g(rng), g(rng), g(rng));
                } while (d.norm() < 1e-12);
                d.normalize();
                pos[i] = d;
                nrm[i] = d;
            }
            return SyntheticShape{PointCloud(std::move(pos), std::move(nrm)), {},
                                  std::vector<std::uint32_t>(params.samples, 0)};
        }
    }
    throw InvalidConfig("make_shape: unknown kind");
}

// ------------------------------------------------------------------ noise

PointCloud add_noise(const PointCloud& cloud, const NoiseSpec& spec) {
    if (!(spec.sigma >= 0.0) || !std::isfinite(spec.sigma)) throw InvalidConfig("noise sigma must be non-negative");
    if (spec.sigma == 0.0) return cloud;
    const double std_dev = spec.sigma * cloud.bounding_box_diagonal();
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> g(0.0, std_dev);
    std::vector<Vec3> pos = cloud.positions();
    for (std::size_t i = 0; i < pos.size(); ++i) {
        if (spec.direction == NoiseDirection::along_normal) {
            pos[i] += cloud.normal(i) * g(rng);
        } else {
            const double x = g(rng), y = g(rng), z = g(rng);
            pos[i] += Vec3(x, y, z);
        }
    }
    return cloud.with_positions(std::move(pos));
}

TriangleMesh add_vertex_noise(const TriangleMesh& mesh, double sigma, std::uint64_t seed) {
    if (!(sigma >= 0.0)) throw InvalidConfig("noise sigma must be non-negative");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, sigma);
    std::vector<Vec3> v = mesh.vertices();
    for (auto& p : v) {
        const double x = g(rng), y = g(rng), z = g(rng);
        p += Vec3(x, y, z);
    }
    return mesh.with_vertices(std::move(v));
}

// ------------------------------------------------------------------ ground truth

GroundTruthPair adapt_ground_truth_edges(const PointCloud& reference, std::span<const Vec3> plane_normals) {
    if (plane_normals.empty()) throw InvalidInput("edge adaptation needs at least one candidate plane normal");
    std::vector<Vec3> snapped(reference.size());
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const Vec3& n = reference.normal(i);
        std::size_t best = 0;
        double best_cos = -1.0;
        for (std::size_t c = 0; c < plane_normals.size(); ++c) {
            const double cs = std::abs(n.dot(plane_normals[c])) / plane_normals[c].norm();
            if (cs > best_cos) {
                best_cos = cs;
                best = c;
            }
        }
        Vec3 s = plane_normals[best].normalized();
        snapped[i] = s.dot(n) < 0.0 ? Vec3(-s) : s;
    }
    return {reference.with_normals(std::move(snapped)), GroundTruthVariant::edge_adapted};
}

// ------------------------------------------------------------------ meshes

TriangleMesh make_cube_mesh(std::size_t divisions) {
    if (divisions == 0) throw InvalidConfig("cube mesh needs at least one division");
    const long d = static_cast<long>(divisions);
    std::map<std::tuple<long, long, long>, std::uint32_t> ids;
    std::vector<Vec3> verts;
    auto vertex = [&](long a, long b, long c) {
        auto key = std::make_tuple(a, b, c);
        auto it = ids.find(key);
        if (it != ids.end()) return it->second;
        const auto id = static_cast<std::uint32_t>(verts.size());
        verts.emplace_back(-0.5 + double(a) / double(d), -0.5 + double(b) / double(d), -0.5 + double(c) / double(d));
        ids.emplace(key, id);
        return id;
    };
    std::vector<Face> faces;
    for (int axis = 0; axis < 3; ++axis) {
        for (long side : {0L, d}) {
            const int u = (axis + 1) % 3, v = (axis + 2) % 3;
            Vec3 outward = Vec3::Zero();
            outward[axis] = side == 0 ? -1.0 : 1.0;
            for (long i = 0; i < d; ++i) {
                for (long j = 0; j < d; ++j) {
                    std::array<std::uint32_t, 4> q;
                    const std::array<std::pair<long, long>, 4> corners{{{i, j}, {i + 1, j}, {i + 1, j + 1}, {i, j + 1}}};
                    for (int k = 0; k < 4; ++k) {
                        std::array<long, 3> g{};
                        g[axis] = side;
                        g[u] = corners[k].first;
                        g[v] = corners[k].second;
                        q[k] = vertex(g[0], g[1], g[2]);
                    }
                    for (Face f : {Face{q[0], q[1], q[2]}, Face{q[0], q[2], q[3]}}) {
                        const Vec3 n = (verts[f[1]] - verts[f[0]]).cross(verts[f[2]] - verts[f[0]]);
                        if (n.dot(outward) < 0.0) std::swap(f[1], f[2]);
                        faces.push_back(f);
                    }
                }
            }
        }
    }
    return TriangleMesh(std::move(verts), std::move(faces));
}

}  // namespace lrn
