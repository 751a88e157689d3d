#include "lrn/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lrn/errors.hpp"
#include "lrn/parallel.hpp"

namespace lrn {

double bounding_box_diagonal(const std::vector<Vec3>& points) {
    if (points.empty()) return 0.0;
    Eigen::AlignedBox3d box;
    for (const auto& p : points) box.extend(p);
    return box.diagonal().norm();
}

// ---------------------------------------------------------------- PointCloud

PointCloud::PointCloud(std::vector<Vec3> positions, std::vector<Vec3> normals)
    : positions_(std::move(positions)), normals_(std::move(normals)) {
    if (positions_.empty()) throw InvalidInput("point cloud is empty");
    if (positions_.size() != normals_.size())
        throw InvalidInput("point cloud has " + std::to_string(positions_.size()) + " positions but " +
                           std::to_string(normals_.size()) + " normals");
    for (std::size_t i = 0; i < positions_.size(); ++i) {
        if (!positions_[i].allFinite()) throw InvalidInput("non-finite position at index " + std::to_string(i));
        const double len = normals_[i].norm();
        if (!std::isfinite(len) || len <= 1e-300)
            throw InvalidInput("zero-length or non-finite normal at index " + std::to_string(i));
        normals_[i] /= len;
    }
    diagonal_ = lrn::bounding_box_diagonal(positions_);
}

PointCloud::PointCloud(const PointCloud& other)
    : positions_(other.positions_), normals_(other.normals_), diagonal_(other.diagonal_) {}

PointCloud& PointCloud::operator=(const PointCloud& other) {
    if (this != &other) {
        positions_ = other.positions_;
        normals_ = other.normals_;
        diagonal_ = other.diagonal_;
        index_ = std::make_unique<IndexSlot>();
    }
    return *this;
}

const KdTree& PointCloud::index() const {
    if (!index_) index_ = std::make_unique<IndexSlot>();
    std::call_once(index_->once, [this] { index_->tree = std::make_unique<KdTree>(positions_); });
    return *index_->tree;
}

PointCloud PointCloud::with_normals(std::vector<Vec3> normals) const {
    return PointCloud(positions_, std::move(normals));
}

PointCloud PointCloud::with_positions(std::vector<Vec3> positions) const {
    return PointCloud(std::move(positions), normals_);
}

// -------------------------------------------------------------- TriangleMesh

TriangleMesh::TriangleMesh(std::vector<Vec3> vertices, std::vector<Face> faces)
    : vertices_(std::move(vertices)), faces_(std::move(faces)) {
    for (std::size_t v = 0; v < vertices_.size(); ++v) {
        if (!vertices_[v].allFinite()) throw InvalidInput("non-finite vertex " + std::to_string(v));
    }
    diagonal_ = lrn::bounding_box_diagonal(vertices_);
    const double min_area = 1e-12 * diagonal_ * diagonal_;

    face_normals_.resize(faces_.size());
    face_centers_.resize(faces_.size());
    vertex_faces_.assign(vertices_.size(), {});
    for (std::size_t f = 0; f < faces_.size(); ++f) {
        const Face& face = faces_[f];
        for (auto v : face) {
            if (v >= vertices_.size())
                throw InvalidInput("face " + std::to_string(f) + " references vertex " + std::to_string(v) +
                                   " but the mesh has " + std::to_string(vertices_.size()) + " vertices");
        }
        if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2])
            throw InvalidInput("face " + std::to_string(f) + " repeats a vertex");
        const Vec3& a = vertices_[face[0]];
        const Vec3& b = vertices_[face[1]];
        const Vec3& c = vertices_[face[2]];
        const Vec3 cross = (b - a).cross(c - a);
        const double area = 0.5 * cross.norm();
        if (!(area >= min_area)) throw InvalidInput("face " + std::to_string(f) + " is degenerate (area " +
                                                    std::to_string(area) + ")");
        face_normals_[f] = cross.normalized();
        face_centers_[f] = (a + b + c) / 3.0;
        for (auto v : face) vertex_faces_[v].push_back(static_cast<std::uint32_t>(f));
    }

    face_adjacency_.assign(faces_.size(), {});
    for (std::size_t f = 0; f < faces_.size(); ++f) {
        auto& adj = face_adjacency_[f];
        for (auto v : faces_[f]) {
            for (auto g : vertex_faces_[v]) {
                if (g != f) adj.push_back(g);
            }
        }
        std::sort(adj.begin(), adj.end());
        adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
    }
}

double TriangleMesh::mean_edge_length() const {
    if (faces_.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& f : faces_) {
        for (int e = 0; e < 3; ++e) sum += (vertices_[f[(e + 1) % 3]] - vertices_[f[e]]).norm();
    }
    return sum / (3.0 * static_cast<double>(faces_.size()));
}

TriangleMesh TriangleMesh::with_vertices(std::vector<Vec3> vertices) const {
    return TriangleMesh(std::move(vertices), faces_);
}

// ------------------------------------------------------------ neighbor tables

NeighborTable build_knn_table(const PointCloud& cloud, std::size_t k, unsigned threads) {
    if (k == 0) throw InvalidConfig("knn table: k must be positive");
    if (k >= cloud.size())
        throw InvalidConfig("knn table: k = " + std::to_string(k) + " must be smaller than the cloud size " +
                            std::to_string(cloud.size()));
    NeighborTable table{NeighborKind::knn, static_cast<double>(k), {}};
    table.neighbors.resize(cloud.size());
    const KdTree& tree = cloud.index();
    parallel_for(cloud.size(), threads, [&](std::size_t i) {
        table.neighbors[i] = tree.knn(cloud.position(i), k, i);
    });
    return table;
}

NeighborTable build_ball_table(const PointCloud& cloud, double radius, unsigned threads) {
    if (!(radius > 0.0) || !std::isfinite(radius)) throw InvalidConfig("ball table: radius must be positive");
    NeighborTable table{NeighborKind::ball, radius, {}};
    table.neighbors.resize(cloud.size());
    const KdTree& tree = cloud.index();
    parallel_for(cloud.size(), threads, [&](std::size_t i) {
        table.neighbors[i] = tree.radius_search(cloud.position(i), radius, i);
    });
    return table;
}

NeighborTable build_ring2_table(const TriangleMesh& mesh) {
    NeighborTable table{NeighborKind::ring2, 0.0, {}};
    const auto& adj = mesh.face_adjacency();
    table.neighbors.resize(mesh.face_count());
    for (std::size_t f = 0; f < mesh.face_count(); ++f) {
        auto& out = table.neighbors[f];
        for (auto g : adj[f]) {
            out.push_back(g);
            for (auto h : adj[g]) out.push_back(h);
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        std::erase(out, f);
    }
    return table;
}

PointCloud mesh_to_samples(const TriangleMesh& mesh) {
    return PointCloud(mesh.face_centers(), mesh.face_normals());
}

double mean_kth_neighbor_distance(const PointCloud& cloud, std::size_t k, unsigned threads) {
    if (cloud.size() < 2) return 0.0;
    k = std::clamp<std::size_t>(k, 1, cloud.size() - 1);
    std::vector<double> dist(cloud.size());
    const KdTree& tree = cloud.index();
    parallel_for(cloud.size(), threads, [&](std::size_t i) {
        const auto nn = tree.knn(cloud.position(i), k, i);
        dist[i] = (cloud.position(nn.back()) - cloud.position(i)).norm();
    });
    double sum = 0.0;
    for (double d : dist) sum += d;
    return sum / static_cast<double>(dist.size());
}

}  // namespace lrn
