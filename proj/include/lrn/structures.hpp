#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lrn/core_math.hpp"
#include "lrn/geometry.hpp"

namespace lrn {

/// Scales of the tensor-voting weights: eta(x) = exp(-(x/sigma_p)^2) and
/// phi(theta) = exp(-((1 - cos theta) / (1 - cos sigma_theta))^2).
struct VoteWeights {
    double sigma_p = 1.0;          // model units, > 0
    double sigma_theta_deg = 30.0; // degrees, in (0, 90)

    void validate() const;
};

double distance_weight(double distance, double sigma_p);
/// `theta` in radians; `sigma_theta_deg` in degrees.
double angle_weight(double theta, double sigma_theta_deg);

/// Twice the largest pairwise distance among the given neighbors of a point.
double structure_scale(std::span<const Vec3> positions, std::span<const std::size_t> neighbors);

/// A point's neighborhood members that share its representative orientation.
struct IsotropicStructure {
    std::size_t center_index = 0;
    std::vector<std::size_t> members;   // center first when it qualifies, then neighbor-table order
    Vec3 rep_orientation = Vec3::UnitZ();
};

struct SimilarSet {
    std::size_t anchor = 0;             // index into the structure array
    std::vector<std::size_t> similars;  // structure indices, anchor first
};

/// T_i = sum_j eta(|p_i - p_j|) phi(theta_ij) n_j n_j^T over the neighbors of i.
/// theta_ij is the orientation-insensitive angle between n_i and n_j.
/// Throws EmptyNeighborhood if i has no neighbors.
SymTensor3 vote_tensor(const PointCloud& cloud, std::size_t i, const NeighborTable& neighbors,
                       const VoteWeights& weights);

/// Overload on raw arrays; used by the pipeline with the current normal snapshot.
SymTensor3 vote_tensor(std::span<const Vec3> positions, std::span<const Vec3> normals, std::size_t i,
                       std::span<const std::size_t> neighbors, const VoteWeights& weights);

/// Dominant eigenvector of the tensor. Throws DegenerateTensor for a zero tensor.
Vec3 representative_orientation(const SymTensor3& t);

/// Members are the points of {i} and its neighbors whose normals lie within
/// theta_th_deg of the representative orientation (orientation-insensitive).
/// If none qualifies the structure falls back to {i}.
IsotropicStructure extract_isotropic(const PointCloud& cloud, std::size_t i, const NeighborTable& neighbors,
                                     const VoteWeights& weights, double theta_th_deg);

IsotropicStructure extract_isotropic(std::span<const Vec3> positions, std::span<const Vec3> normals,
                                     std::size_t i, std::span<const std::size_t> neighbors,
                                     const VoteWeights& weights, double theta_th_deg);

/// Anchor plus each of the first k_non spatial candidates of sample i whose
/// representative orientation lies within theta_th_deg of the anchor's.
/// `candidates` is a knn table over the same samples; its lists may be longer than k_non.
SimilarSet find_similar(std::span<const IsotropicStructure> structures, std::size_t i, std::size_t k_non,
                        double theta_th_deg, const NeighborTable& candidates);

}  // namespace lrn
