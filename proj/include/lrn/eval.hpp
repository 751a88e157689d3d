#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lrn/core_math.hpp"
#include "lrn/geometry.hpp"
#include "lrn/normal_estimation.hpp"

namespace lrn {

/// Mean over samples of acos(|n_est . n_gt|)^2, radians squared.
/// Throws InvalidInput on a size mismatch.
double msae(std::span<const Vec3> estimated, std::span<const Vec3> truth);
double msae(const NormalField& estimated, const NormalField& truth);

/// RMS over the truth points of the distance to the nearest result point.
double closest_point_rmse(const PointCloud& result, const PointCloud& truth);

struct PcaNormals {
    NormalField field;
    std::vector<unsigned char> degenerate;   // covariance rank < 2
};

/// Normal = eigenvector of the smallest covariance eigenvalue over the point and
/// its k nearest neighbors. With `orient_to` given, each normal is flipped into
/// the hemisphere of the corresponding reference normal.
/// Throws InvalidConfig for k < 3.
PcaNormals estimate_normals_pca(std::span<const Vec3> positions, std::size_t k,
                                std::span<const Vec3> orient_to = {}, unsigned threads = 1);
PcaNormals estimate_normals_pca(const PointCloud& cloud, std::size_t k, unsigned threads = 1);

enum class ShapeKind { cube, dodecahedron, sphere, wedge, plane, two_density_wedge };

std::optional<ShapeKind> parse_shape_kind(const std::string& name);
std::string to_string(ShapeKind kind);

struct ShapeParams {
    ShapeKind kind = ShapeKind::cube;
    std::size_t samples = 6000;
    std::uint64_t seed = 1;
    double wedge_angle_deg = 90.0;   // dihedral angle for the wedges
};

struct SyntheticShape {
    PointCloud cloud;                  // analytic normals
    std::vector<Vec3> plane_normals;   // one per planar face; empty for the sphere
    std::vector<std::uint32_t> face_of_sample;   // planar face each sample lies on
};

/// Area-uniform random samples of a unit-scale analytic surface. Samples on
/// polyhedra carry the normal of the face they were drawn from.
/// Throws InvalidConfig for samples < 100.
SyntheticShape make_shape(const ShapeParams& params);

enum class NoiseDirection { isotropic, along_normal };

struct NoiseSpec {
    double sigma = 0.0;   // fraction of the bounding-box diagonal
    std::uint64_t seed = 7;
    NoiseDirection direction = NoiseDirection::isotropic;
};

/// Gaussian position noise with std sigma * diag; normals are not modified.
PointCloud add_noise(const PointCloud& cloud, const NoiseSpec& spec);

/// Gaussian vertex noise with std `sigma` (absolute units), isotropic.
TriangleMesh add_vertex_noise(const TriangleMesh& mesh, double sigma, std::uint64_t seed);

enum class GroundTruthVariant { original, edge_adapted };

struct GroundTruthPair {
    PointCloud reference;
    GroundTruthVariant variant = GroundTruthVariant::original;
};

/// Snap every reference normal to the candidate plane normal with the smallest
/// orientation-insensitive angle (lowest index wins ties).
/// Throws InvalidInput on an empty candidate list.
GroundTruthPair adapt_ground_truth_edges(const PointCloud& reference, std::span<const Vec3> plane_normals);

/// Axis-aligned cube [-0.5, 0.5]^3 with each face split into a `divisions` x
/// `divisions` grid of quads, two triangles each, outward winding.
TriangleMesh make_cube_mesh(std::size_t divisions);

/// Mean orientation-insensitive angle (radians) between corresponding unit vectors.
double mean_angular_deviation(std::span<const Vec3> a, std::span<const Vec3> b);

}  // namespace lrn
