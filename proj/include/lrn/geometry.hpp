#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <vector>

#include "lrn/core_math.hpp"
#include "lrn/kdtree.hpp"

namespace lrn {

/// Positions with unit normals. Normals are normalized on construction;
/// zero-length or non-finite input is rejected with InvalidInput.
class PointCloud {
public:
    PointCloud(std::vector<Vec3> positions, std::vector<Vec3> normals);

    PointCloud(const PointCloud& other);
    PointCloud& operator=(const PointCloud& other);
    PointCloud(PointCloud&&) noexcept = default;
    PointCloud& operator=(PointCloud&&) noexcept = default;

    std::size_t size() const noexcept { return positions_.size(); }
    const std::vector<Vec3>& positions() const noexcept { return positions_; }
    const std::vector<Vec3>& normals() const noexcept { return normals_; }
    const Vec3& position(std::size_t i) const { return positions_[i]; }
    const Vec3& normal(std::size_t i) const { return normals_[i]; }

    double bounding_box_diagonal() const noexcept { return diagonal_; }

    /// Lazily built spatial index over the positions.
    const KdTree& index() const;

    PointCloud with_normals(std::vector<Vec3> normals) const;
    PointCloud with_positions(std::vector<Vec3> positions) const;

private:
    std::vector<Vec3> positions_;
    std::vector<Vec3> normals_;
    double diagonal_ = 0.0;
    struct IndexSlot {
        std::once_flag once;
        std::unique_ptr<KdTree> tree;
    };
    // The tree borrows positions_, so copies get a fresh slot; moves keep the
    // vector buffer and may keep the slot.
    mutable std::unique_ptr<IndexSlot> index_ = std::make_unique<IndexSlot>();
};

using Face = std::array<std::uint32_t, 3>;

/// Triangle mesh with cached per-face normals, centroids and vertex-sharing adjacency.
class TriangleMesh {
public:
    /// Throws InvalidInput on out-of-range indices, repeated vertices in a face,
    /// or faces with area below 1e-12 * diag^2.
    TriangleMesh(std::vector<Vec3> vertices, std::vector<Face> faces);

    std::size_t vertex_count() const noexcept { return vertices_.size(); }
    std::size_t face_count() const noexcept { return faces_.size(); }
    const std::vector<Vec3>& vertices() const noexcept { return vertices_; }
    const std::vector<Face>& faces() const noexcept { return faces_; }
    const std::vector<Vec3>& face_normals() const noexcept { return face_normals_; }
    const std::vector<Vec3>& face_centers() const noexcept { return face_centers_; }
    /// Faces sharing at least one vertex with each face (the face itself excluded).
    const std::vector<std::vector<std::uint32_t>>& face_adjacency() const noexcept { return face_adjacency_; }
    /// Faces incident to each vertex.
    const std::vector<std::vector<std::uint32_t>>& vertex_faces() const noexcept { return vertex_faces_; }
    double bounding_box_diagonal() const noexcept { return diagonal_; }
    double mean_edge_length() const;

    TriangleMesh with_vertices(std::vector<Vec3> vertices) const;

private:
    std::vector<Vec3> vertices_;
    std::vector<Face> faces_;
    std::vector<Vec3> face_normals_;
    std::vector<Vec3> face_centers_;
    std::vector<std::vector<std::uint32_t>> face_adjacency_;
    std::vector<std::vector<std::uint32_t>> vertex_faces_;
    double diagonal_ = 0.0;
};

enum class NeighborKind { knn, ball, ring2 };

struct NeighborTable {
    NeighborKind kind = NeighborKind::knn;
    double parameter = 0.0;   // k for knn, radius for ball, unused for ring2
    std::vector<std::vector<std::size_t>> neighbors;

    std::size_t size() const noexcept { return neighbors.size(); }
    const std::vector<std::size_t>& operator[](std::size_t i) const { return neighbors[i]; }
};

/// k nearest neighbors of every point, self excluded, ties broken by index.
/// Throws InvalidConfig when k >= cloud size or k == 0.
NeighborTable build_knn_table(const PointCloud& cloud, std::size_t k, unsigned threads = 1);

/// { j != i : |p_i - p_j| <= radius }. Symmetric by construction.
NeighborTable build_ball_table(const PointCloud& cloud, double radius, unsigned threads = 1);

/// Faces within two vertex-sharing steps of each face, excluding the face itself.
NeighborTable build_ring2_table(const TriangleMesh& mesh);

/// One sample per face: centroid and face normal.
PointCloud mesh_to_samples(const TriangleMesh& mesh);

/// Mean over the cloud of the distance to the k-th nearest neighbor.
double mean_kth_neighbor_distance(const PointCloud& cloud, std::size_t k, unsigned threads = 1);

/// Diagonal of the axis-aligned bounding box.
double bounding_box_diagonal(const std::vector<Vec3>& points);

}  // namespace lrn
