#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "lrn/core_math.hpp"
#include "lrn/geometry.hpp"
#include "lrn/structures.hpp"

namespace lrn {

/// How each similar-structure matrix is recovered.
enum class LowRankSolver {
    wnnm,          // weighted singular-value shrinkage (the estimator)
    row_average,   // every row replaced by the stack mean (comparison baseline)
};

struct FilterConfig {
    std::size_t k_local = 60;
    std::size_t k_non = 150;
    double theta_init = 30.0;   // degrees
    double theta_low = 15.0;    // degrees
    double beta = 1.0;
    int n_nor = 6;
    int n_pos = 15;
    std::optional<double> ball_radius;   // default: mean k_local-th neighbor distance
    double sigma_theta = 30.0;           // degrees
    LowRankSolver solver = LowRankSolver::wnnm;
    unsigned threads = 1;

    /// Defaults for models with sharp features (30 -> 15 degrees).
    static FilterConfig sharp_features();
    /// Defaults for models with low dihedral angle features (20 -> 8 degrees).
    static FilterConfig low_dihedral();

    /// Throws InvalidConfig.
    void validate() const;
};

struct NormalField {
    std::vector<Vec3> normals;
    int iteration = 0;
};

/// max(theta_low, theta_init / 1.1^n), n >= 1.
double theta_schedule(const FilterConfig& cfg, int n);

/// Per-iteration bookkeeping.
struct IterationStats {
    int iteration = 0;
    double theta = 0.0;
    std::size_t solved = 0;            // anchors whose matrix was recovered
    std::size_t too_few_normals = 0;   // anchors skipped (stack shorter than two rows)
    std::size_t empty_neighborhoods = 0;
    std::size_t untouched = 0;         // samples that received no contribution
    double mean_rows = 0.0;            // mean stacked rows per solved anchor
    double mean_rank = 0.0;            // mean surviving rank (wnnm only)
};

/// Iterative normal estimator. Neighborhood tables are built once at construction;
/// positions never change during estimation.
class NormalEstimator {
public:
    /// Point cloud: local structures are k_local nearest neighbors.
    NormalEstimator(const PointCloud& cloud, FilterConfig cfg);
    /// Triangle mesh: samples are face centers, local structures are 2-ring faces.
    NormalEstimator(const TriangleMesh& mesh, FilterConfig cfg);

    /// One pass: structures with theta_schedule(n), similar sets, recovery,
    /// and per-sample averaging of every recovered row.
    NormalField iterate(const NormalField& previous, int n, IterationStats* stats = nullptr) const;
    /// As above; `rank_hints` holds each anchor's recovered rank from the previous
    /// pass (-1 when unknown) and is overwritten with this pass's ranks. Hints only
    /// pick the eigen-solver route.
    NormalField iterate(const NormalField& previous, int n, IterationStats* stats,
                        std::vector<std::int32_t>* rank_hints) const;

    using Observer = std::function<void(const NormalField&, const IterationStats&)>;
    /// Iterations 1..cfg.n_nor starting from the input normals.
    NormalField run(const Observer& observer = {}) const;

    const NormalField& initial() const noexcept { return initial_; }
    const FilterConfig& config() const noexcept { return cfg_; }
    std::size_t size() const noexcept { return positions_.size(); }

private:
    void prepare(std::size_t k_non);

    FilterConfig cfg_;
    std::vector<Vec3> positions_;
    NormalField initial_;
    NeighborTable local_;
    NeighborTable candidates_;
    std::vector<double> sigma_p_;
    std::size_t k_non_ = 0;
};

/// Single iteration n on a cloud whose normals are the current estimate.
NormalField estimate_iteration(const PointCloud& cloud, const FilterConfig& cfg, int n);

/// cfg.n_nor iterations on a cloud.
NormalField estimate_normals(const PointCloud& cloud, const FilterConfig& cfg);

/// cfg.n_nor iterations on the faces of a mesh.
NormalField estimate_mesh_normals(const TriangleMesh& mesh, const FilterConfig& cfg);

}  // namespace lrn
