#include "lrn/normal_estimation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <spdlog/spdlog.h>

#include "lrn/errors.hpp"
#include "lrn/lowrank.hpp"
#include "lrn/parallel.hpp"

namespace lrn {

namespace {

// Accumulation chunks are fixed so results do not depend on the thread count.
constexpr std::size_t kAccumulationChunks = 64;

struct ChunkAccumulator {
    std::vector<Vec3> sum;
    std::vector<std::uint32_t> count;
    std::size_t solved = 0;
    std::size_t too_few = 0;
    double rows = 0.0;
    double rank = 0.0;
};

NeighborTable empty_table(std::size_t n, NeighborKind kind) {
    NeighborTable t{kind, 0.0, {}};
    t.neighbors.resize(n);
    return t;
}

}  // namespace

FilterConfig FilterConfig::sharp_features() { return FilterConfig{}; }

FilterConfig FilterConfig::low_dihedral() {
    FilterConfig cfg;
    cfg.theta_init = 20.0;
    cfg.theta_low = 8.0;
    return cfg;
}

void FilterConfig::validate() const {
    if (k_local == 0) throw InvalidConfig("k_local must be positive");
    if (k_non == 0) throw InvalidConfig("k_non must be positive");
    if (!(theta_low > 0.0 && theta_low <= theta_init && theta_init < 90.0))
        throw InvalidConfig("theta schedule must satisfy 0 < theta_low <= theta_init < 90");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw InvalidConfig("beta must be positive");
    if (n_nor < 0) throw InvalidConfig("n_nor must be non-negative");
    if (n_pos < 0) throw InvalidConfig("n_pos must be non-negative");
    if (ball_radius && !(*ball_radius > 0.0)) throw InvalidConfig("ball radius must be positive");
    if (!(sigma_theta > 0.0 && sigma_theta < 90.0)) throw InvalidConfig("sigma_theta must be in (0, 90)");
}

double theta_schedule(const FilterConfig& cfg, int n) {
    if (n < 1) throw InvalidInput("theta_schedule: iteration index starts at 1");
    return std::max(cfg.theta_low, cfg.theta_init / std::pow(1.1, n));
}

NormalEstimator::NormalEstimator(const PointCloud& cloud, FilterConfig cfg)
    : cfg_(std::move(cfg)), positions_(cloud.positions()), initial_{cloud.normals(), 0} {
    cfg_.validate();
    const std::size_t n = cloud.size();
    if (n < 2) {
        local_ = empty_table(n, NeighborKind::knn);
    } else {
        std::size_t k = cfg_.k_local;
        if (k >= n) {
            spdlog::warn("k_local={} exceeds the cloud size; using {}", k, n - 1);
            k = n - 1;
        }
        local_ = build_knn_table(cloud, k, cfg_.threads);
    }
    prepare(cfg_.k_non);
}

NormalEstimator::NormalEstimator(const TriangleMesh& mesh, FilterConfig cfg)
    : cfg_(std::move(cfg)), positions_(mesh.face_centers()), initial_{mesh.face_normals(), 0} {
    cfg_.validate();
    local_ = build_ring2_table(mesh);
    prepare(cfg_.k_non);
}

void NormalEstimator::prepare(std::size_t k_non) {
    const std::size_t n = positions_.size();
    k_non_ = std::min(k_non, n > 0 ? n - 1 : 0);
    if (k_non_ < k_non && n > 1) spdlog::warn("k_non={} exceeds the sample count; using {}", k_non, k_non_);
    if (k_non_ == 0) {
        candidates_ = empty_table(n, NeighborKind::knn);
    } else {
        PointCloud samples(positions_, initial_.normals);
        candidates_ = build_knn_table(samples, k_non_, cfg_.threads);
    }

    sigma_p_.resize(n);
    parallel_for(n, cfg_.threads, [&](std::size_t i) {
        const auto& nb = local_[i];
        double s = structure_scale(positions_, nb);
        if (!(s > 0.0)) {
            // Fewer than two distinct neighbors: fall back to the center distance.
            double far = 0.0;
            for (auto j : nb) far = std::max(far, (positions_[j] - positions_[i]).norm());
            s = far > 0.0 ? 2.0 * far : 1.0;
        }
        sigma_p_[i] = s;
    });
}

NormalField NormalEstimator::iterate(const NormalField& previous, int n, IterationStats* stats) const {
    return iterate(previous, n, stats, nullptr);
}

NormalField NormalEstimator::iterate(const NormalField& previous, int n, IterationStats* stats,
                                     std::vector<std::int32_t>* rank_hints) const {
    const std::size_t count = positions_.size();
    if (previous.normals.size() != count) throw InvalidInput("normal field size does not match the samples");
    const double theta = theta_schedule(cfg_, n);
    if (rank_hints && rank_hints->size() != count) rank_hints->assign(count, -1);
    const auto& prev = previous.normals;

    // Local isotropic structures for every sample.
    std::vector<IsotropicStructure> structures(count);
    std::vector<unsigned char> isolated(count, 0);
    parallel_for(count, cfg_.threads, [&](std::size_t i) {
        const auto& nb = local_[i];
        if (nb.empty()) {
            structures[i].center_index = i;
            structures[i].members = {i};
            structures[i].rep_orientation = prev[i];
            isolated[i] = 1;
            return;
        }
        VoteWeights w{sigma_p_[i], cfg_.sigma_theta};
        structures[i] = extract_isotropic(positions_, prev, i, nb, w, theta);
    });

    // Recover every anchor's matrix and scatter rows back to their samples.
    const std::size_t chunks = std::min(kAccumulationChunks, std::max<std::size_t>(count, 1));
    std::vector<ChunkAccumulator> acc(chunks);
    parallel_chunks(count, chunks, cfg_.threads, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        ChunkAccumulator& a = acc[chunk];
        a.sum.assign(count, Vec3::Zero());
        a.count.assign(count, 0);
        std::vector<std::uint32_t> samples;
        Eigen::MatrixXf z;
        for (std::size_t i = begin; i < end; ++i) {
            const SimilarSet similar = find_similar(structures, i, k_non_, theta, candidates_);
            Vec3 align = structures[i].rep_orientation;
            if (align.dot(prev[i]) < 0.0) align = -align;

            // Stack member normals (flipped toward `align`), then keep the rows the
            // reshape plan retains.
            samples.clear();
            for (auto sidx : similar.similars)
                for (auto m : structures[sidx].members) samples.push_back(static_cast<std::uint32_t>(m));
            ReshapeSpec spec;
            try {
                spec = plan_reshape(samples.size());
            } catch (const TooFewNormals&) {
                ++a.too_few;
                continue;
            }
            const std::size_t kept = spec.kept();
            z.resize(spec.rows, spec.cols);
            float* dst = z.data();
            for (std::size_t k = 0; k < kept; ++k) {
                const Vec3& nk = prev[samples[k]];
                const double sgn = nk.dot(align) < 0.0 ? -1.0 : 1.0;
                dst[k] = static_cast<float>(sgn * nk.x());
                dst[kept + k] = static_cast<float>(sgn * nk.y());
                dst[2 * kept + k] = static_cast<float>(sgn * nk.z());
            }

            if (cfg_.solver == LowRankSolver::wnnm) {
                const Eigen::Index hint = rank_hints ? (*rank_hints)[i] : -1;
                FastShrink res = wnnm_shrink_fast(z, cfg_.beta, hint);
                if (rank_hints) (*rank_hints)[i] = static_cast<std::int32_t>(res.rank);
                a.rank += static_cast<double>(res.rank);
                z = std::move(res.z);
            } else {
                for (int axis = 0; axis < 3; ++axis) {
                    double mean = 0.0;
                    for (std::size_t k = 0; k < kept; ++k) mean += dst[axis * kept + k];
                    mean /= static_cast<double>(kept);
                    std::fill(dst + axis * kept, dst + (axis + 1) * kept, static_cast<float>(mean));
                }
            }
            a.rows += static_cast<double>(kept);
            ++a.solved;

            const float* src = z.data();
            for (std::size_t k = 0; k < kept; ++k) {
                const std::size_t sidx = samples[k];
                const Vec3 r(src[k], src[kept + k], src[2 * kept + k]);
                a.sum[sidx] += r.dot(prev[sidx]) < 0.0 ? Vec3(-r) : r;
                ++a.count[sidx];
            }
        }
    });

    NormalField out;
    out.iteration = n;
    out.normals.resize(count);
    IterationStats st;
    st.iteration = n;
    st.theta = theta;
    for (const auto& a : acc) {
        st.solved += a.solved;
        st.too_few_normals += a.too_few;
        st.mean_rows += a.rows;
        st.mean_rank += a.rank;
    }
    for (std::size_t i = 0; i < count; ++i) {
        Vec3 sum = Vec3::Zero();
        std::size_t hits = 0;
        for (const auto& a : acc) {
            if (a.count.empty()) continue;
            sum += a.sum[i];
            hits += a.count[i];
        }
        const Vec3 mean = hits > 0 ? Vec3(sum / static_cast<double>(hits)) : Vec3::Zero();
        if (hits == 0 || mean.norm() < 1e-8) {
            out.normals[i] = prev[i];
            ++st.untouched;
        } else {
            out.normals[i] = mean.normalized();
        }
        st.empty_neighborhoods += isolated[i];
    }
    if (st.solved > 0) {
        st.mean_rows /= static_cast<double>(st.solved);
        st.mean_rank /= static_cast<double>(st.solved);
    }
    if (st.too_few_normals > 0)
        spdlog::warn("iteration {}: {} anchors had too few normals and kept their previous estimate", n,
                     st.too_few_normals);
    if (st.empty_neighborhoods > 0)
        spdlog::warn("iteration {}: {} samples have an empty neighborhood", n, st.empty_neighborhoods);
    if (stats) *stats = st;
    return out;
}

NormalField NormalEstimator::run(const Observer& observer) const {
    NormalField field = initial_;
    std::vector<std::int32_t> hints(positions_.size(), -1);
    for (int n = 1; n <= cfg_.n_nor; ++n) {
        IterationStats st;
        field = iterate(field, n, &st, &hints);
        spdlog::debug("iteration {}: theta={:.3f} solved={} mean_rows={:.1f} mean_rank={:.1f}", n, st.theta,
                      st.solved, st.mean_rows, st.mean_rank);
        if (observer) observer(field, st);
    }
    return field;
}

NormalField estimate_iteration(const PointCloud& cloud, const FilterConfig& cfg, int n) {
    NormalEstimator est(cloud, cfg);
    return est.iterate(est.initial(), n);
}

NormalField estimate_normals(const PointCloud& cloud, const FilterConfig& cfg) {
    return NormalEstimator(cloud, cfg).run();
}

NormalField estimate_mesh_normals(const TriangleMesh& mesh, const FilterConfig& cfg) {
    return NormalEstimator(mesh, cfg).run();
}

}  // namespace lrn
