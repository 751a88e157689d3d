#include "lrn/position_update.hpp"

#include <cmath>
#include <string>

#include <spdlog/spdlog.h>

#include "lrn/errors.hpp"
#include "lrn/parallel.hpp"

namespace lrn {

UpdateState::UpdateState(std::vector<Vec3> p, std::vector<Vec3> n, NeighborTable neighbors)
    : positions(std::move(p)), fixed_neighbors(std::move(neighbors)), normals(std::move(n)) {
    if (positions.size() != normals.size() || positions.size() != fixed_neighbors.size())
        throw InvalidInput("update state: positions, normals and neighbor table differ in size");
    step_sizes.resize(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) {
        const auto k = fixed_neighbors[i].size();
        step_sizes[i] = k > 0 ? 1.0 / (3.0 * static_cast<double>(k)) : 0.0;
    }
}

std::vector<Vec3> point_update_step(const UpdateState& state) {
    const auto& p = state.positions;
    const auto& n = state.normals;
    std::vector<Vec3> out(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        Vec3 delta = Vec3::Zero();
        for (auto j : state.fixed_neighbors[i]) {
            const Vec3 d = p[j] - p[i];
            delta += n[j] * d.dot(n[j]) + n[i] * d.dot(n[i]);
        }
        out[i] = p[i] + state.step_sizes[i] * delta;
    }
    return out;
}

double total_energy(std::span<const Vec3> positions, std::span<const Vec3> normals, const NeighborTable& neighbors) {
    if (positions.size() != normals.size() || positions.size() != neighbors.size())
        throw InvalidInput("total_energy: size mismatch");
    double e = 0.0;
    for (std::size_t i = 0; i < positions.size(); ++i) {
        for (auto j : neighbors[i]) {
            const Vec3 d = positions[i] - positions[j];
            const double a = d.dot(normals[j]);
            const double b = d.dot(normals[i]);
            e += a * a + b * b;
        }
    }
    return e;
}

FilterResult filter_positions(const PointCloud& cloud, const NormalField& normals, const FilterConfig& cfg) {
    cfg.validate();
    if (normals.normals.size() != cloud.size()) throw InvalidInput("filter_positions: normal field size mismatch");
    const double radius = cfg.ball_radius ? *cfg.ball_radius
                                          : mean_kth_neighbor_distance(cloud, cfg.k_local, cfg.threads);
    FilterResult result{cloud.with_normals(normals.normals), {}, radius, 0};
    if (cfg.n_pos == 0) return result;
    if (!(radius > 0.0)) {
        spdlog::warn("ball radius is zero (all points coincide); positions left unchanged");
        return result;
    }

    UpdateState state(cloud.positions(), result.cloud.normals(), build_ball_table(cloud, radius, cfg.threads));
    for (const auto& nb : state.fixed_neighbors.neighbors) result.isolated += nb.empty();
    if (result.isolated > 0)
        spdlog::warn("{} points have no neighbor within radius {} and stay fixed", result.isolated, radius);

    auto& energies = result.energy.per_iteration_energy;
    energies.push_back(total_energy(state.positions, state.normals, state.fixed_neighbors));
    const double slack = 1e-9 * energies.front();
    for (int it = 0; it < cfg.n_pos; ++it) {
        state.positions = point_update_step(state);
        energies.push_back(total_energy(state.positions, state.normals, state.fixed_neighbors));
        if (energies.back() > energies[energies.size() - 2] + slack) {
            result.energy.converged = false;
            throw ConvergenceViolation("position update energy rose from " +
                                       std::to_string(energies[energies.size() - 2]) + " to " +
                                       std::to_string(energies.back()) + " at step " + std::to_string(it + 1));
        }
    }
    result.cloud = PointCloud(std::move(state.positions), result.cloud.normals());
    return result;
}

EnergyMatrix energy_matrix_oracle(std::span<const Vec3> positions, std::span<const Vec3> normals,
                                  const NeighborTable& neighbors) {
    const auto n = static_cast<Eigen::Index>(positions.size());
    if (positions.size() != normals.size() || positions.size() != neighbors.size())
        throw InvalidInput("energy_matrix_oracle: size mismatch");
    EnergyMatrix out;
    out.q = MatrixX::Zero(3 * n, 3 * n);
    out.p.resize(3 * n);
    for (Eigen::Index i = 0; i < n; ++i) out.p.segment<3>(3 * i) = positions[static_cast<std::size_t>(i)];
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vec3& ni = normals[static_cast<std::size_t>(i)];
        for (auto j : neighbors[static_cast<std::size_t>(i)]) {
            const Vec3& nj = normals[j];
            // Same summation order for (i, j) and (j, i) keeps Q exactly symmetric.
            const bool first = static_cast<std::size_t>(i) < j;
            SymTensor3 t;
            t.add_outer(first ? ni : nj, 1.0);
            t.add_outer(first ? nj : ni, 1.0);
            const Mat3& a = t.entries();
            out.q.block<3, 3>(3 * i, 3 * i) += 2.0 * a;
            out.q.block<3, 3>(3 * i, 3 * static_cast<Eigen::Index>(j)) -= 2.0 * a;
        }
    }
    out.energy = out.p.dot(out.q * out.p);
    return out;
}

double rowsum_bound_check(const Vec3& n) {
    const Mat3 m = n * n.transpose();
    return m.cwiseAbs().rowwise().sum().maxCoeff();
}

TriangleMesh mesh_vertex_update(const TriangleMesh& mesh, const NormalField& face_normals, int n_pos) {
    if (face_normals.normals.size() != mesh.face_count())
        throw InvalidInput("mesh_vertex_update: expected one normal per face");
    std::vector<Vec3> v = mesh.vertices();
    const auto& faces = mesh.faces();
    const auto& incident = mesh.vertex_faces();
    const auto& target = face_normals.normals;
    std::vector<Vec3> centers(faces.size());
    for (int round = 0; round < n_pos; ++round) {
        for (std::size_t f = 0; f < faces.size(); ++f)
            centers[f] = (v[faces[f][0]] + v[faces[f][1]] + v[faces[f][2]]) / 3.0;
        std::vector<Vec3> next = v;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (incident[i].empty()) continue;
            Vec3 delta = Vec3::Zero();
            for (auto f : incident[i]) delta += target[f] * target[f].dot(centers[f] - v[i]);
            next[i] = v[i] + delta / static_cast<double>(incident[i].size());
        }
        v = std::move(next);
    }
    return mesh.with_vertices(std::move(v));
}

}  // namespace lrn
