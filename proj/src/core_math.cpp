#include "lrn/core_math.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "lrn/errors.hpp"

namespace lrn {

SymTensor3::SymTensor3(const Mat3& m) {
    for (int r = 0; r < 3; ++r) {
        for (int c = r; c < 3; ++c) {
            entries_(r, c) = m(r, c);
            entries_(c, r) = m(r, c);
        }
    }
}

void SymTensor3::add_outer(const Vec3& n, double weight) {
    for (int r = 0; r < 3; ++r) {
        for (int c = r; c < 3; ++c) {
            const double v = weight * n[r] * n[c];
            entries_(r, c) += v;
            if (c != r) entries_(c, r) += v;
        }
    }
}

Vec3 canonical_sign(const Vec3& v) {
    int best = 0;
    for (int k = 1; k < 3; ++k) {
        if (std::abs(v[k]) > std::abs(v[best])) best = k;
    }
    return v[best] < 0.0 ? Vec3(-v) : v;
}

EigenDecomp3 eigen_sym3(const SymTensor3& t) {
    Eigen::SelfAdjointEigenSolver<Mat3> solver(t.entries(), Eigen::ComputeEigenvectors);
    // Eigen returns ascending order.
    EigenDecomp3 out;
    for (int k = 0; k < 3; ++k) {
        out.values[k] = solver.eigenvalues()[2 - k];
        out.vectors.col(k) = canonical_sign(solver.eigenvectors().col(2 - k).normalized());
    }
    return out;
}

SvdResult svd(const MatrixX& a) {
    if (!a.allFinite()) throw InvalidInput("svd: matrix has non-finite entries");
    const Eigen::Index k = std::min(a.rows(), a.cols());
    SvdResult out;
    if (k == 0) {
        out.U = MatrixX(a.rows(), 0);
        out.V = MatrixX(a.cols(), 0);
        out.singular_values = VectorX(0);
        return out;
    }
    Eigen::JacobiSVD<MatrixX> solver(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    out.U = solver.matrixU();
    out.singular_values = solver.singularValues();
    out.V = solver.matrixV();
    return out;
}

double soft_threshold(double s, double w) {
    if (s < 0.0 || w < 0.0) throw InvalidInput("soft_threshold: arguments must be non-negative");
    return std::max(0.0, s - w);
}

double unsigned_angle(const Vec3& a, const Vec3& b) {
    const double c = std::abs(a.dot(b)) / (a.norm() * b.norm());
    return std::acos(std::clamp(c, 0.0, 1.0));
}

}  // namespace lrn
