#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lrn/core_math.hpp"
#include "lrn/geometry.hpp"
#include "lrn/normal_estimation.hpp"

namespace lrn {

struct EnergyReport {
    std::vector<double> per_iteration_energy;   // entry 0 is the input energy
    bool converged = true;                      // non-increasing throughout
};

/// State of the point-cloud position update. The ball table and normals stay
/// fixed across iterations; step sizes are 1 / (3 |N(i)|), 0 for isolated points.
struct UpdateState {
    std::vector<Vec3> positions;
    NeighborTable fixed_neighbors;
    std::vector<Vec3> normals;
    std::vector<double> step_sizes;

    UpdateState(std::vector<Vec3> positions, std::vector<Vec3> normals, NeighborTable neighbors);
};

/// p_i' = p_i + g_i sum_j (p_j - p_i)(n_j n_j^T + n_i n_i^T), all points at once.
std::vector<Vec3> point_update_step(const UpdateState& state);

/// sum_i sum_{j in N(i)} ((p_i - p_j).n_j)^2 + ((p_i - p_j).n_i)^2
double total_energy(std::span<const Vec3> positions, std::span<const Vec3> normals, const NeighborTable& neighbors);

struct FilterResult {
    PointCloud cloud;
    EnergyReport energy;
    double ball_radius = 0.0;
    std::size_t isolated = 0;   // points with an empty ball
};

/// Builds the ball table once from the input positions (cfg.ball_radius or the
/// mean k_local-th neighbor distance) and runs cfg.n_pos steps.
/// Throws ConvergenceViolation if the energy rises by more than 1e-9 * E0.
FilterResult filter_positions(const PointCloud& cloud, const NormalField& normals, const FilterConfig& cfg);

/// Dense assembly of the quadratic form E = P Q P^T (test oracle, small N only).
/// Q_ii = 2 sum_j (n_i n_i^T + n_j n_j^T), Q_ij = -2 (n_i n_i^T + n_j n_j^T) for j in N(i).
/// Requires a symmetric table.
struct EnergyMatrix {
    MatrixX q;         // 3N x 3N
    VectorX p;         // flattened positions
    double energy = 0.0;
};
EnergyMatrix energy_matrix_oracle(std::span<const Vec3> positions, std::span<const Vec3> normals,
                                  const NeighborTable& neighbors);

/// Largest absolute row sum of n n^T.
double rowsum_bound_check(const Vec3& n);

/// Vertex update against target face normals: each round
/// v_i += (1/|F_i|) sum_{f in F_i} n_f n_f^T (c_f - v_i), with centroids c_f of
/// the current iterate. Vertices without incident faces are left in place.
TriangleMesh mesh_vertex_update(const TriangleMesh& mesh, const NormalField& face_normals, int n_pos);

}  // namespace lrn
