#include "lrn/lowrank.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "lrn/errors.hpp"

extern "C" {
void sstebz_(const char* range, const char* order, const int* n, const float* vl, const float* vu, const int* il,
             const int* iu, const float* abstol, const float* d, const float* e, int* m, int* nsplit, float* w,
             int* iblock, int* isplit, float* work, int* iwork, int* info);
void sstein_(const int* n, const float* d, const float* e, const int* m, const float* w, const int* iblock,
             const int* isplit, float* z, const int* ldz, float* work, int* iwork, int* ifail, int* info);
}

namespace lrn {

StackedNormals stack_normals(const SimilarSet& similar, std::span<const IsotropicStructure> structures,
                             std::span<const Vec3> normals, const Vec3* align) {
    std::size_t total = 0;
    for (auto s : similar.similars) total += structures[s].members.size();

    StackedNormals out;
    out.rows.resize(static_cast<Eigen::Index>(total), 3);
    out.provenance.reserve(total);
    Eigen::Index row = 0;
    for (auto s : similar.similars) {
        for (auto m : structures[s].members) {
            Vec3 n = normals[m];
            if (align && n.dot(*align) < 0.0) n = -n;
            out.rows.row(row++) = n.transpose();
            out.provenance.push_back({m, structures[s].center_index});
        }
    }
    return out;
}

ReshapeSpec plan_reshape(std::size_t r_hat) {
    if (r_hat < 2) throw TooFewNormals("need at least two normals to build a matrix, got " + std::to_string(r_hat));
    ReshapeSpec spec;
    for (std::size_t kept = r_hat; kept >= 2; --kept) {
        const std::size_t n = 3 * kept;
        std::size_t c = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
        while (c * c > n) --c;
        while ((c + 1) * (c + 1) <= n) ++c;
        while (n % c != 0) --c;
        const std::size_t r = n / c;
        if (r - c < 6) {
            spec.rows = static_cast<Eigen::Index>(r);
            spec.cols = static_cast<Eigen::Index>(c);
            for (std::size_t d = kept; d < r_hat; ++d) spec.dropped.push_back(d);
            return spec;
        }
    }
    // 3 * 2 = 3 x 2 always qualifies, so the loop returns before kept < 2.
    throw InternalError("plan_reshape: no admissible shape");
}

NormalMatrix reshape_to_square(const StackedNormals& stack, const ReshapeSpec& spec) {
    const auto r_hat = static_cast<std::size_t>(stack.rows.rows());
    const std::size_t kept = spec.kept();
    if (static_cast<std::size_t>(spec.rows * spec.cols) != 3 * kept || kept + spec.dropped.size() != r_hat ||
        stack.provenance.size() != r_hat)
        throw InternalError("reshape spec " + std::to_string(spec.rows) + "x" + std::to_string(spec.cols) +
                            " does not fit a stack of " + std::to_string(r_hat) + " rows");

    NormalMatrix nm;
    nm.spec = spec;
    nm.z.resize(spec.rows, spec.cols);
    double* dst = nm.z.data();   // column-major storage
    for (int axis = 0; axis < 3; ++axis) {
        for (std::size_t k = 0; k < kept; ++k) *dst++ = stack.rows(static_cast<Eigen::Index>(k), axis);
    }
    nm.provenance.assign(stack.provenance.begin(), stack.provenance.begin() + static_cast<std::ptrdiff_t>(kept));
    return nm;
}

std::vector<RecoveredNormal> unreshape_to_normals(const NormalMatrix& nm) {
    const std::size_t kept = nm.provenance.size();
    if (static_cast<std::size_t>(nm.z.size()) != 3 * kept) throw InternalError("unreshape: size mismatch");
    const double* src = nm.z.data();
    std::vector<RecoveredNormal> out(kept);
    for (std::size_t k = 0; k < kept; ++k) {
        out[k].origin = nm.provenance[k];
        out[k].normal = Vec3(src[k], src[kept + k], src[2 * kept + k]);
    }
    return out;
}

double nuclear_norm(const MatrixX& a) {
    if (a.size() == 0) return 0.0;
    return svd(a).singular_values.sum();
}

MatrixX nnm_solve(const MatrixX& z_prime, double alpha) {
    if (alpha < 0.0) throw InvalidInput("nnm_solve: alpha must be non-negative");
    if (z_prime.size() == 0) return z_prime;
    const auto d = svd(z_prime);
    VectorX shrunk(d.singular_values.size());
    for (Eigen::Index m = 0; m < shrunk.size(); ++m) shrunk[m] = soft_threshold(d.singular_values[m], alpha);
    return d.U * shrunk.asDiagonal() * d.V.transpose();
}

WnnmWeights wnnm_weights(const VectorX& singular_values, double beta) {
    WnnmWeights w;
    w.beta = beta;
    w.weights = VectorX::Constant(singular_values.size(), beta);
    if (singular_values.size() == 0) return w;
    const double d1 = singular_values[0];
    if (!(d1 > 0.0)) return w;
    for (Eigen::Index m = 0; m < singular_values.size(); ++m) {
        const double x = 2.0 * singular_values[m] / d1;
        w.weights[m] = beta * std::exp(-x * x);
    }
    return w;
}

WnnmResult wnnm_shrink(const MatrixX& z_prime, double beta) {
    if (!(beta >= 0.0)) throw InvalidInput("wnnm: beta must be non-negative");
    if (!z_prime.allFinite()) throw InvalidInput("wnnm: matrix has non-finite entries");
    WnnmResult out;
    const Eigen::Index r = z_prime.rows(), c = z_prime.cols();
    const Eigen::Index k = std::min(r, c);
    out.z = MatrixX::Zero(r, c);
    if (k == 0) return out;

    // Eigenvectors of the smaller Gram matrix are the right (tall) or left (wide)
    // singular vectors; eigenvalues are squared singular values.
    const bool tall = r >= c;
    MatrixX gram(k, k);
    if (tall) gram.noalias() = z_prime.transpose() * z_prime;
    else gram.noalias() = z_prime * z_prime.transpose();
    Eigen::SelfAdjointEigenSolver<MatrixX> eig(gram, Eigen::ComputeEigenvectors);

    out.singular_values.resize(k);
    for (Eigen::Index m = 0; m < k; ++m) out.singular_values[m] = std::sqrt(std::max(0.0, eig.eigenvalues()[k - 1 - m]));
    out.weights = wnnm_weights(out.singular_values, beta).weights;

    // s - w(s) is increasing in s, so the survivors are a prefix.
    VectorX gain(k);
    Eigen::Index rank = 0;
    for (Eigen::Index m = 0; m < k; ++m) {
        const double s = out.singular_values[m];
        const double kept = soft_threshold(s, out.weights[m]);
        gain[m] = kept > 0.0 ? kept / s : 0.0;
        if (kept > 0.0) rank = m + 1;
    }
    out.rank = rank;
    if (rank == 0) return out;

    // Leading `rank` eigenvectors, largest first.
    const MatrixX basis = eig.eigenvectors().rightCols(rank).rowwise().reverse();
    const auto g = gain.head(rank).asDiagonal();
    if (tall) {
        const MatrixX projected = z_prime * basis;       // U_k S_k
        out.z.noalias() = projected * g * basis.transpose();
    } else {
        const MatrixX projected = basis.transpose() * z_prime;   // S_k V_k^T
        out.z.noalias() = basis * g * projected;
    }
    return out;
}

namespace {

constexpr Eigen::Index kPartialMaxRank = 24;
constexpr Eigen::Index kPartialMinSize = 8;

// Smallest s with s - beta exp(-(2 s / d1)^2) > 0, for d1 > 0.
double survival_threshold(double d1, double beta) {
    auto f = [&](double s) { const double x = 2.0 * s / d1; return s - beta * std::exp(-x * x); };
    double lo = 0.0, hi = d1;
    if (f(hi) <= 0.0) return hi;
    for (int it = 0; it < 100 && hi - lo > 1e-12 * d1; ++it) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0.0 ? hi : lo) = mid;
    }
    return hi;
}

struct Spectrum {
    Eigen::MatrixXf basis;   // leading eigenvectors, largest first
    std::vector<double> eig; // matching eigenvalues
};

// Number of eigenvalues of the tridiagonal form greater than x (Sturm count).
Eigen::Index count_above(const Eigen::Tridiagonalization<Eigen::MatrixXf>& tri, double x) {
    const auto& d = tri.diagonal();
    const auto& e = tri.subDiagonal();
    const Eigen::Index n = d.size();
    Eigen::Index below = 0;
    double q = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double off = i > 0 ? static_cast<double>(e[i - 1]) : 0.0;
        q = static_cast<double>(d[i]) - x - (i > 0 ? off * off / q : 0.0);
        if (q == 0.0) q = -1e-300;
        if (q < 0.0) ++below;
    }
    return n - below;
}

// Eigenpairs of the tridiagonal form with eigenvalue in (vl, vu], via bisection
// and inverse iteration. Returns false when LAPACK reports a failure.
bool partial_spectrum(const Eigen::Tridiagonalization<Eigen::MatrixXf>& tri, float vl, float vu, Spectrum& out) {
    const int n = static_cast<int>(tri.diagonal().size());
    Eigen::VectorXf d = tri.diagonal();
    Eigen::VectorXf e(n);
    e.head(n - 1) = tri.subDiagonal();
    e[n - 1] = 0.0f;
    int m = 0, nsplit = 0, info = 0, il = 0, iu = 0;
    const float abstol = 0.0f;
    Eigen::VectorXf w(n);
    std::vector<int> iblock(n), isplit(n), iwork(3 * n);
    std::vector<float> work(5 * n);
    sstebz_("V", "B", &n, &vl, &vu, &il, &iu, &abstol, d.data(), e.data(), &m, &nsplit, w.data(), iblock.data(),
            isplit.data(), work.data(), iwork.data(), &info);
    if (info != 0) return false;
    out.eig.clear();
    out.basis.resize(n, m);
    if (m == 0) return true;
    Eigen::MatrixXf z(n, m);
    std::vector<int> ifail(m), iwork2(n);
    sstein_(&n, d.data(), e.data(), &m, w.data(), iblock.data(), isplit.data(), z.data(), &n, work.data(),
            iwork2.data(), ifail.data(), &info);
    if (info != 0) return false;
    z.applyOnTheLeft(tri.matrixQ());
    std::vector<int> order(m);
    for (int j = 0; j < m; ++j) order[j] = j;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return w[a] > w[b]; });
    for (int j = 0; j < m; ++j) {
        out.basis.col(j) = z.col(order[j]);
        out.eig.push_back(w[order[j]]);
    }
    return true;
}

float top_eigenvalue(const Eigen::Tridiagonalization<Eigen::MatrixXf>& tri) {
    const int n = static_cast<int>(tri.diagonal().size());
    Eigen::VectorXf d = tri.diagonal();
    Eigen::VectorXf e(n);
    e.head(n - 1) = tri.subDiagonal();
    e[n - 1] = 0.0f;
    int m = 0, nsplit = 0, info = 0, il = n, iu = n;
    const float abstol = 0.0f, vl = 0.0f, vu = 0.0f;
    Eigen::VectorXf w(n);
    std::vector<int> iblock(n), isplit(n), iwork(3 * n);
    std::vector<float> work(5 * n);
    sstebz_("I", "E", &n, &vl, &vu, &il, &iu, &abstol, d.data(), e.data(), &m, &nsplit, w.data(), iblock.data(),
            isplit.data(), work.data(), iwork.data(), &info);
    if (info != 0 || m < 1) return -1.0f;
    return w[0];
}

}  // namespace

FastShrink wnnm_shrink_fast(const Eigen::MatrixXf& z_prime, double beta, Eigen::Index rank_hint) {
    if (!(beta >= 0.0)) throw InvalidInput("wnnm: beta must be non-negative");
    FastShrink out;
    const Eigen::Index r = z_prime.rows(), c = z_prime.cols();
    const Eigen::Index k = std::min(r, c);
    out.z = Eigen::MatrixXf::Zero(r, c);
    if (k == 0) return out;

    const bool tall = r >= c;
    Eigen::MatrixXf gram(k, k);
    if (tall) gram.noalias() = z_prime.transpose() * z_prime;
    else gram.noalias() = z_prime * z_prime.transpose();

    Spectrum spec;
    bool have = false;
    double d1 = 0.0;
    if (k >= kPartialMinSize && rank_hint <= kPartialMaxRank) {
        Eigen::Tridiagonalization<Eigen::MatrixXf> tri(gram);
        const float top = top_eigenvalue(tri);
        if (top >= 0.0f) {
            d1 = std::sqrt(static_cast<double>(top));
            if (!(d1 > 0.0)) return out;
            const double s_star = survival_threshold(d1, beta);
            if (s_star >= d1) return out;
            const float vl = static_cast<float>(s_star * s_star);
            const float vu = top + std::max(1.0f, std::abs(top)) * 1e-3f;
            if (count_above(tri, vl) <= kPartialMaxRank) have = partial_spectrum(tri, vl, vu, spec);
        }
    }
    if (!have) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXf> eig(gram, Eigen::ComputeEigenvectors);
        const auto& vals = eig.eigenvalues();
        d1 = std::sqrt(std::max(0.0, static_cast<double>(vals[k - 1])));
        if (!(d1 > 0.0)) return out;
        const double s_star = survival_threshold(d1, beta);
        Eigen::Index rank = 0;
        while (rank < k && std::sqrt(std::max(0.0, static_cast<double>(vals[k - 1 - rank]))) > s_star) ++rank;
        spec.basis = eig.eigenvectors().rightCols(rank).rowwise().reverse();
        spec.eig.clear();
        for (Eigen::Index m = 0; m < rank; ++m) spec.eig.push_back(vals[k - 1 - m]);
    }

    const auto rank = static_cast<Eigen::Index>(spec.eig.size());
    Eigen::VectorXf gain(rank);
    Eigen::Index kept_rank = 0;
    for (Eigen::Index m = 0; m < rank; ++m) {
        const double s = std::sqrt(std::max(0.0, spec.eig[m]));
        const double x = 2.0 * s / d1;
        const double kept = s > 0.0 ? std::max(0.0, s - beta * std::exp(-x * x)) : 0.0;
        gain[m] = kept > 0.0 ? static_cast<float>(kept / s) : 0.0f;
        if (kept > 0.0) kept_rank = m + 1;
    }
    out.rank = kept_rank;
    if (kept_rank == 0) return out;
    const Eigen::MatrixXf basis = spec.basis.leftCols(kept_rank);
    const auto g = gain.head(kept_rank).asDiagonal();
    if (tall) {
        const Eigen::MatrixXf projected = z_prime * basis;
        out.z.noalias() = projected * g * basis.transpose();
    } else {
        const Eigen::MatrixXf projected = basis.transpose() * z_prime;
        out.z.noalias() = basis * g * projected;
    }
    return out;
}

NormalMatrix wnnm_solve(const NormalMatrix& nm, double beta) {
    NormalMatrix out;
    out.spec = nm.spec;
    out.provenance = nm.provenance;
    out.z = wnnm_shrink(nm.z, beta).z;
    return out;
}

NormalMatrix row_average_solve(const NormalMatrix& nm) {
    const std::size_t kept = nm.provenance.size();
    if (kept == 0 || static_cast<std::size_t>(nm.z.size()) != 3 * kept) throw InternalError("row_average: size mismatch");
    NormalMatrix out;
    out.spec = nm.spec;
    out.provenance = nm.provenance;
    out.z.resize(nm.z.rows(), nm.z.cols());
    const double* src = nm.z.data();
    double* dst = out.z.data();
    for (int axis = 0; axis < 3; ++axis) {
        double mean = 0.0;
        for (std::size_t k = 0; k < kept; ++k) mean += src[axis * kept + k];
        mean /= static_cast<double>(kept);
        std::fill(dst + axis * kept, dst + (axis + 1) * kept, mean);
    }
    return out;
}

}  // namespace lrn
