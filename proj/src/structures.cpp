#include "lrn/structures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "lrn/errors.hpp"

namespace lrn {

namespace {

double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }

// cos of the orientation-insensitive angle, without the acos round trip
double abs_cos(const Vec3& a, const Vec3& b) { return std::min(1.0, std::abs(a.dot(b))); }

}  // namespace

void VoteWeights::validate() const {
    if (!(sigma_p > 0.0) || !std::isfinite(sigma_p)) throw InvalidConfig("sigma_p must be positive");
    if (!(sigma_theta_deg > 0.0 && sigma_theta_deg < 90.0)) throw InvalidConfig("sigma_theta must be in (0, 90)");
}

double distance_weight(double distance, double sigma_p) {
    const double x = distance / sigma_p;
    return std::exp(-x * x);
}

double angle_weight(double theta, double sigma_theta_deg) {
    const double x = (1.0 - std::cos(theta)) / (1.0 - std::cos(deg2rad(sigma_theta_deg)));
    return std::exp(-x * x);
}

double structure_scale(std::span<const Vec3> positions, std::span<const std::size_t> neighbors) {
    double max2 = 0.0;
    for (std::size_t a = 0; a < neighbors.size(); ++a) {
        const Vec3& pa = positions[neighbors[a]];
        for (std::size_t b = a + 1; b < neighbors.size(); ++b) {
            max2 = std::max(max2, (positions[neighbors[b]] - pa).squaredNorm());
        }
    }
    return 2.0 * std::sqrt(max2);
}

SymTensor3 vote_tensor(std::span<const Vec3> positions, std::span<const Vec3> normals, std::size_t i,
                       std::span<const std::size_t> neighbors, const VoteWeights& weights) {
    if (neighbors.empty()) throw EmptyNeighborhood("sample " + std::to_string(i) + " has no neighbors");
    const double denom = 1.0 - std::cos(deg2rad(weights.sigma_theta_deg));
    const Vec3& pi = positions[i];
    const Vec3& ni = normals[i];
    SymTensor3 t;
    for (std::size_t j : neighbors) {
        const double d = (pi - positions[j]).norm() / weights.sigma_p;
        const double a = (1.0 - abs_cos(ni, normals[j])) / denom;
        t.add_outer(normals[j], std::exp(-d * d) * std::exp(-a * a));
    }
    return t;
}

SymTensor3 vote_tensor(const PointCloud& cloud, std::size_t i, const NeighborTable& neighbors,
                       const VoteWeights& weights) {
    if (i >= cloud.size()) throw InvalidInput("vote_tensor: index out of range");
    weights.validate();
    return vote_tensor(cloud.positions(), cloud.normals(), i, neighbors[i], weights);
}

Vec3 representative_orientation(const SymTensor3& t) {
    const auto dec = eigen_sym3(t);
    if (!(dec.values[0] > 0.0)) throw DegenerateTensor("voting tensor has no positive eigenvalue");
    return dec.vectors.col(0);
}

IsotropicStructure extract_isotropic(std::span<const Vec3> positions, std::span<const Vec3> normals,
                                     std::size_t i, std::span<const std::size_t> neighbors,
                                     const VoteWeights& weights, double theta_th_deg) {
    IsotropicStructure s;
    s.center_index = i;
    s.rep_orientation = representative_orientation(vote_tensor(positions, normals, i, neighbors, weights));
    const double cos_th = std::cos(deg2rad(theta_th_deg));
    auto accept = [&](std::size_t j) { return abs_cos(normals[j], s.rep_orientation) >= cos_th; };
    s.members.reserve(neighbors.size() + 1);
    if (accept(i)) s.members.push_back(i);
    for (std::size_t j : neighbors) {
        if (accept(j)) s.members.push_back(j);
    }
    // Nothing within the threshold: keep the center so the structure stays usable.
    if (s.members.empty()) s.members.push_back(i);
    return s;
}

IsotropicStructure extract_isotropic(const PointCloud& cloud, std::size_t i, const NeighborTable& neighbors,
                                     const VoteWeights& weights, double theta_th_deg) {
    if (i >= cloud.size()) throw InvalidInput("extract_isotropic: index out of range");
    weights.validate();
    return extract_isotropic(cloud.positions(), cloud.normals(), i, neighbors[i], weights, theta_th_deg);
}

SimilarSet find_similar(std::span<const IsotropicStructure> structures, std::size_t i, std::size_t k_non,
                        double theta_th_deg, const NeighborTable& candidates) {
    SimilarSet out;
    out.anchor = i;
    out.similars.push_back(i);
    const double cos_th = std::cos(deg2rad(theta_th_deg));
    const Vec3& anchor_dir = structures[i].rep_orientation;
    const auto& pool = candidates[i];
    const std::size_t n = std::min(k_non, pool.size());
    for (std::size_t c = 0; c < n; ++c) {
        const std::size_t j = pool[c];
        if (j == i) continue;
        if (abs_cos(structures[j].rep_orientation, anchor_dir) >= cos_th) out.similars.push_back(j);
    }
    return out;
}

}  // namespace lrn
