#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lrn/core_math.hpp"
#include "lrn/structures.hpp"

namespace lrn {

using RowMatrix3 = Eigen::Matrix<double, Eigen::Dynamic, 3>;

/// Where a stacked row came from: the sample whose normal it is, and the
/// similar structure (by center index) that contributed it.
struct RowOrigin {
    std::size_t sample = 0;
    std::size_t structure = 0;
    bool operator==(const RowOrigin&) const = default;
};

struct StackedNormals {
    RowMatrix3 rows;                    // r_hat x 3
    std::vector<RowOrigin> provenance;  // one per row
};

/// Target shape of the near-square matrix and the rows trimmed from the end of
/// the stack to reach it.
struct ReshapeSpec {
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    std::vector<std::size_t> dropped;   // ascending stack row indices

    /// Stack rows that survive, i.e. rows * cols / 3.
    std::size_t kept() const noexcept { return static_cast<std::size_t>(rows * cols / 3); }
};

struct NormalMatrix {
    MatrixX z;                          // rows x cols
    ReshapeSpec spec;
    std::vector<RowOrigin> provenance;  // surviving stack rows, in stack order
};

struct RecoveredNormal {
    RowOrigin origin;
    Vec3 normal;                        // not renormalized
};

/// Append the member normals of every similar structure, in structure order then
/// member order. When `align` is given each row is flipped into its hemisphere so
/// that orientation-ambiguous normals stack coherently.
StackedNormals stack_normals(const SimilarSet& similar, std::span<const IsotropicStructure> structures,
                             std::span<const Vec3> normals, const Vec3* align = nullptr);

/// Factor 3 * r_hat' = rows * cols with minimal |rows - cols| (rows >= cols), trimming
/// one stack row at a time from the end until |rows - cols| < 6.
/// Throws TooFewNormals when r_hat < 2.
ReshapeSpec plan_reshape(std::size_t r_hat);

/// Read the kept rows of the stack column-major (all x, then all y, then all z)
/// and write that sequence into the target matrix column-major.
/// Throws InternalError when `spec` does not fit `stack`.
NormalMatrix reshape_to_square(const StackedNormals& stack, const ReshapeSpec& spec);

/// Inverse of reshape_to_square: one entry per surviving row.
std::vector<RecoveredNormal> unreshape_to_normals(const NormalMatrix& nm);

/// Sum of singular values.
double nuclear_norm(const MatrixX& a);

/// argmin_Z alpha ||Z||_* + ||Z' - Z||_F^2 = U max(0, S - alpha) V^T.
MatrixX nnm_solve(const MatrixX& z_prime, double alpha);

struct WnnmWeights {
    double beta = 1.0;
    VectorX weights;
};

/// w_m = beta exp(-(2 d_m / d_1)^2). With d_1 == 0 every weight is beta.
/// `singular_values` must be sorted non-ascending.
WnnmWeights wnnm_weights(const VectorX& singular_values, double beta);

/// Output of the weighted shrinkage, with its diagnostics.
struct WnnmResult {
    MatrixX z;
    VectorX singular_values;   // of the input, non-ascending
    VectorX weights;
    Eigen::Index rank = 0;     // singular values that survive the threshold
};

/// Z = U psi(S, w) V^T with weights from wnnm_weights. Computed from the
/// eigendecomposition of the smaller Gram matrix; survivors always form a
/// prefix of the sorted spectrum, so only those components are applied.
WnnmResult wnnm_shrink(const MatrixX& z_prime, double beta);

/// Single-precision shrinkage for the estimator's inner loop. Same survivors and
/// gains as wnnm_shrink up to float rounding. When few components survive only
/// those eigenpairs are computed (bisection plus inverse iteration on the
/// tridiagonal form); otherwise a full eigendecomposition is used. A
/// `rank_hint` above the partial limit skips straight to the full route.
struct FastShrink {
    Eigen::MatrixXf z;
    Eigen::Index rank = 0;
};
FastShrink wnnm_shrink_fast(const Eigen::MatrixXf& z_prime, double beta, Eigen::Index rank_hint = -1);

/// wnnm_shrink applied to a reshaped stack; spec and provenance are kept.
NormalMatrix wnnm_solve(const NormalMatrix& nm, double beta);

/// Baseline recovery: every kept row is replaced by the mean row.
NormalMatrix row_average_solve(const NormalMatrix& nm);

}  // namespace lrn
