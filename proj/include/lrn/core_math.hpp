#pragma once

#include <Eigen/Core>

namespace lrn {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using MatrixX = Eigen::MatrixXd;
using VectorX = Eigen::VectorXd;

/// Symmetric 3x3 tensor built from weighted outer products of unit vectors.
/// Symmetry is exact: only the upper triangle is accumulated and mirrored.
class SymTensor3 {
public:
    SymTensor3() { entries_.setZero(); }
    explicit SymTensor3(const Mat3& m);

    /// entries += weight * n n^T
    void add_outer(const Vec3& n, double weight);

    const Mat3& entries() const noexcept { return entries_; }
    double operator()(int r, int c) const { return entries_(r, c); }

private:
    Mat3 entries_;
};

/// Eigenpairs of a symmetric 3x3 matrix, sorted so values(0) >= values(1) >= values(2).
/// Column k of `vectors` pairs with values(k).
struct EigenDecomp3 {
    Vec3 values;
    Mat3 vectors;
};

/// Each eigenvector is sign-normalized so that its largest-magnitude component
/// is non-negative (first index wins ties).
EigenDecomp3 eigen_sym3(const SymTensor3& t);

/// Thin SVD: U is r x k, V is c x k, k = min(r, c); singular values non-ascending.
struct SvdResult {
    MatrixX U;
    VectorX singular_values;
    MatrixX V;
};

/// Throws InvalidInput on non-finite entries.
SvdResult svd(const MatrixX& a);

/// max(0, s - w). Throws InvalidInput if either argument is negative.
double soft_threshold(double s, double w);

/// Flip v so its largest-magnitude component is non-negative.
Vec3 canonical_sign(const Vec3& v);

/// Angle between two directions ignoring orientation: acos(|a.b|), radians.
double unsigned_angle(const Vec3& a, const Vec3& b);

}  // namespace lrn
