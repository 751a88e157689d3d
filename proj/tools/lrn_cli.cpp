// Command-line front end: estimate-normals, filter, denoise-mesh, add-noise,
// make-shape, evaluate.

#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "lrn/errors.hpp"
#include "lrn/eval.hpp"
#include "lrn/io.hpp"
#include "lrn/manifest.hpp"
#include "lrn/normal_estimation.hpp"
#include "lrn/parallel.hpp"
#include "lrn/position_update.hpp"

namespace fs = std::filesystem;
using namespace lrn;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kInvariant = 3 };

class Stopwatch {
public:
    double lap() {
        const auto now = std::chrono::steady_clock::now();
        const double s = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        return s;
    }

private:
    std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

struct EstimateOptions {
    std::string in, out;
    std::size_t k_local = 60, k_non = 150;
    double theta_init = 30.0, theta_low = 15.0, beta = 1.0;
    int iters = 6, pos_iters = 15;
    std::string ball_radius = "auto";
    unsigned threads = 0;
};

void add_estimate_flags(CLI::App* cmd, EstimateOptions& o, bool with_position) {
    cmd->add_option("--in", o.in, "input cloud (.ply, .xyz, .obj)")->required();
    cmd->add_option("--out", o.out, "output cloud")->required();
    cmd->add_option("--k-local", o.k_local, "local neighborhood size");
    cmd->add_option("--k-non", o.k_non, "non-local search range");
    cmd->add_option("--theta-init", o.theta_init, "initial angle threshold (degrees)");
    cmd->add_option("--theta-low", o.theta_low, "lower bound of the angle threshold (degrees)");
    cmd->add_option("--beta", o.beta, "weight coefficient");
    cmd->add_option("--iters", o.iters, "normal estimation iterations");
    if (with_position) {
        cmd->add_option("--pos-iters", o.pos_iters, "position update iterations");
        cmd->add_option("--ball-radius", o.ball_radius, "ball radius or 'auto'");
    }
    cmd->add_option("--threads", o.threads, "worker threads (default: hardware)");
}

FilterConfig config_from(const EstimateOptions& o) {
    FilterConfig cfg;
    cfg.k_local = o.k_local;
    cfg.k_non = o.k_non;
    cfg.theta_init = o.theta_init;
    cfg.theta_low = o.theta_low;
    cfg.beta = o.beta;
    cfg.n_nor = o.iters;
    cfg.n_pos = o.pos_iters;
    cfg.threads = o.threads > 0 ? o.threads : default_threads();
    if (o.ball_radius != "auto") {
        std::size_t used = 0;
        double r = 0.0;
        try {
            r = std::stod(o.ball_radius, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != o.ball_radius.size()) throw InvalidConfig("--ball-radius: expected a number or 'auto', got '" + o.ball_radius + "'");
        cfg.ball_radius = r;
    }
    cfg.validate();
    return cfg;
}

void record_iterations(RunManifest& m, const std::vector<IterationStats>& stats) {
    for (const auto& st : stats) {
        const std::string p = "iteration." + std::to_string(st.iteration) + ".";
        m.set(p + "theta", st.theta);
        m.set(p + "mean_rank", st.mean_rank);
        m.set(p + "untouched", static_cast<long long>(st.untouched));
    }
}

int run_estimate(const EstimateOptions& o, bool filter) {
    Stopwatch sw;
    const FilterConfig cfg = config_from(o);
    const CloudReadResult input = read_cloud(o.in);
    RunManifest m;
    m.set("command", std::string(filter ? "filter" : "estimate-normals"));
    m.set("input", o.in);
    m.set("output", o.out);
    m.set("samples", static_cast<long long>(input.cloud.size()));
    m.set("input_had_normals", static_cast<long long>(input.had_normals));
    m.set_config(cfg);
    m.set_timing("read", sw.lap());

    std::vector<IterationStats> stats;
    NormalEstimator est(input.cloud, cfg);
    const NormalField normals = est.run([&](const NormalField&, const IterationStats& st) { stats.push_back(st); });
    record_iterations(m, stats);
    m.set_timing("normals", sw.lap());

    PointCloud result = input.cloud.with_normals(normals.normals);
    if (filter) {
        const FilterResult fr = filter_positions(input.cloud, normals, cfg);
        m.set("ball_radius", fr.ball_radius);
        m.set("isolated", static_cast<long long>(fr.isolated));
        m.set("energy.initial", fr.energy.per_iteration_energy.front());
        m.set("energy.final", fr.energy.per_iteration_energy.back());
        result = fr.cloud;
        m.set_timing("positions", sw.lap());
    }
    write_cloud(o.out, result);
    m.set_timing("write", sw.lap());
    m.write(manifest_path_for(o.out));
    return kOk;
}

struct MeshOptions {
    std::string in, out;
    int iters = 6, pos_iters = 20;
    std::size_t k_non = 150;
    double theta_init = 30.0, theta_low = 15.0, beta = 1.0;
    bool triangulate_fan = false;
    unsigned threads = 0;
};

int run_denoise_mesh(const MeshOptions& o) {
    Stopwatch sw;
    FilterConfig cfg;
    cfg.n_nor = o.iters;
    cfg.n_pos = o.pos_iters;
    cfg.k_non = o.k_non;
    cfg.theta_init = o.theta_init;
    cfg.theta_low = o.theta_low;
    cfg.beta = o.beta;
    cfg.threads = o.threads > 0 ? o.threads : default_threads();
    cfg.validate();
    const TriangleMesh mesh = read_mesh(o.in, o.triangulate_fan);
    RunManifest m;
    m.set("command", std::string("denoise-mesh"));
    m.set("input", o.in);
    m.set("output", o.out);
    m.set("vertices", static_cast<long long>(mesh.vertex_count()));
    m.set("faces", static_cast<long long>(mesh.face_count()));
    m.set_config(cfg);
    m.set_timing("read", sw.lap());
    const NormalField normals = estimate_mesh_normals(mesh, cfg);
    m.set_timing("normals", sw.lap());
    const TriangleMesh out = mesh_vertex_update(mesh, normals, cfg.n_pos);
    m.set_timing("vertices", sw.lap());
    write_mesh(o.out, out);
    m.write(manifest_path_for(o.out));
    return kOk;
}

struct NoiseOptions {
    std::string in, out;
    double sigma = 0.005;
    std::uint64_t seed = 7;
    bool along_normal = false;
    bool drop_normals = false;
};

int run_add_noise(const NoiseOptions& o) {
    const RawCloud raw = read_raw_cloud(o.in);
    if (raw.positions.empty()) throw InvalidInput(o.in + ": no points");
    const bool has_normals = !raw.normals.empty();
    if (o.along_normal && !has_normals) throw InvalidInput(o.in + ": --along-normal needs input normals");
    std::vector<Vec3> normals = has_normals ? raw.normals : std::vector<Vec3>(raw.positions.size(), Vec3::UnitZ());
    const PointCloud cloud(raw.positions, normals);
    NoiseSpec spec;
    spec.sigma = o.sigma;
    spec.seed = o.seed;
    spec.direction = o.along_normal ? NoiseDirection::along_normal : NoiseDirection::isotropic;
    const PointCloud noisy = add_noise(cloud, spec);
    write_cloud(o.out, noisy, has_normals && !o.drop_normals);
    RunManifest m;
    m.set("command", std::string("add-noise"));
    m.set("input", o.in);
    m.set("output", o.out);
    m.set("sigma", o.sigma);
    m.set("seed", static_cast<long long>(o.seed));
    m.set("direction", std::string(o.along_normal ? "along_normal" : "isotropic"));
    m.set("normals_written", static_cast<long long>(has_normals && !o.drop_normals));
    m.write(manifest_path_for(o.out));
    return kOk;
}

struct ShapeOptions {
    std::string kind = "cube", out;
    std::size_t samples = 6000;
    std::uint64_t seed = 1;
    double wedge_angle = 90.0;
};

fs::path planes_path_for(const fs::path& p) { return fs::path(p.string() + ".planes"); }

int run_make_shape(const ShapeOptions& o) {
    const auto kind = parse_shape_kind(o.kind);
    if (!kind) throw InvalidConfig("--kind: unknown shape '" + o.kind + "'");
    ShapeParams params;
    params.kind = *kind;
    params.samples = o.samples;
    params.seed = o.seed;
    params.wedge_angle_deg = o.wedge_angle;
    const SyntheticShape shape = make_shape(params);
    write_cloud(o.out, shape.cloud);
    if (!shape.plane_normals.empty()) write_directions(planes_path_for(o.out), shape.plane_normals);
    RunManifest m;
    m.set("command", std::string("make-shape"));
    m.set("kind", to_string(*kind));
    m.set("samples", static_cast<long long>(o.samples));
    m.set("seed", static_cast<long long>(o.seed));
    m.set("wedge_angle", o.wedge_angle);
    m.set("output", o.out);
    m.set("planes", static_cast<long long>(shape.plane_normals.size()));
    m.write(manifest_path_for(o.out));
    return kOk;
}

struct EvalOptions {
    std::string result, truth, planes, metric = "msae";
    bool edge_adapted = false;
};

int run_evaluate(const EvalOptions& o) {
    RunManifest m;
    m.set("command", std::string("evaluate"));
    m.set("result", o.result);
    m.set("truth", o.truth);
    m.set("metric", o.metric);
    const CloudReadResult result = read_cloud(o.result);
    const CloudReadResult truth = read_cloud(o.truth);
    if (o.metric == "msae") {
        if (!truth.had_normals) throw InvalidInput(o.truth + ": truth has no normals");
        if (result.cloud.size() != truth.cloud.size())
            throw InvalidInput("result has " + std::to_string(result.cloud.size()) + " points, truth has " +
                               std::to_string(truth.cloud.size()));
        PointCloud reference = truth.cloud;
        if (o.edge_adapted) {
            const fs::path planes = o.planes.empty() ? planes_path_for(o.truth) : fs::path(o.planes);
            reference = adapt_ground_truth_edges(truth.cloud, read_directions(planes)).reference;
            m.set("planes", planes.string());
        }
        m.set("edge_adapted", static_cast<long long>(o.edge_adapted));
        const double v = msae(result.cloud.normals(), reference.normals());
        m.set("msae_rad2", v);
        std::printf("msae_rad2=%s\n", format_real(v).c_str());
    } else {
        const double v = closest_point_rmse(result.cloud, truth.cloud);
        m.set("rmse", v);
        std::printf("rmse=%s\n", format_real(v).c_str());
    }
    m.write(fs::path(o.result + ".evaluate.manifest"));
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    spdlog::set_pattern("[%l] %v");
    CLI::App app{"Feature-preserving normal estimation and point/mesh filtering"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "debug logging");

    EstimateOptions est_opts, filt_opts;
    auto* est = app.add_subcommand("estimate-normals", "estimate feature-preserving normals");
    add_estimate_flags(est, est_opts, false);
    auto* filt = app.add_subcommand("filter", "estimate normals, then update positions");
    add_estimate_flags(filt, filt_opts, true);

    MeshOptions mesh_opts;
    auto* mesh = app.add_subcommand("denoise-mesh", "filter face normals, then update vertices");
    mesh->add_option("--in", mesh_opts.in, "input OBJ")->required();
    mesh->add_option("--out", mesh_opts.out, "output OBJ")->required();
    mesh->add_option("--iters", mesh_opts.iters, "normal estimation iterations");
    mesh->add_option("--pos-iters", mesh_opts.pos_iters, "vertex update iterations");
    mesh->add_option("--k-non", mesh_opts.k_non, "non-local search range");
    mesh->add_option("--theta-init", mesh_opts.theta_init, "initial angle threshold (degrees)");
    mesh->add_option("--theta-low", mesh_opts.theta_low, "lower bound of the angle threshold (degrees)");
    mesh->add_option("--beta", mesh_opts.beta, "weight coefficient");
    mesh->add_flag("--triangulate-fan", mesh_opts.triangulate_fan, "split polygons into triangle fans");
    mesh->add_option("--threads", mesh_opts.threads, "worker threads (default: hardware)");

    NoiseOptions noise_opts;
    auto* noise = app.add_subcommand("add-noise", "perturb positions with Gaussian noise");
    noise->add_option("--in", noise_opts.in, "input cloud")->required();
    noise->add_option("--out", noise_opts.out, "output cloud")->required();
    noise->add_option("--sigma", noise_opts.sigma, "std as a fraction of the bounding-box diagonal");
    noise->add_option("--seed", noise_opts.seed, "random seed");
    noise->add_flag("--along-normal", noise_opts.along_normal, "displace along the normals only");
    noise->add_flag("--drop-normals", noise_opts.drop_normals, "write positions only");

    ShapeOptions shape_opts;
    auto* shape = app.add_subcommand("make-shape", "sample a synthetic shape");
    shape->add_option("--kind", shape_opts.kind, "cube, dodecahedron, sphere, wedge, plane, two-density-wedge");
    shape->add_option("--samples", shape_opts.samples, "number of points");
    shape->add_option("--seed", shape_opts.seed, "random seed");
    shape->add_option("--wedge-angle", shape_opts.wedge_angle, "wedge dihedral angle (degrees)");
    shape->add_option("--out", shape_opts.out, "output cloud")->required();

    EvalOptions eval_opts;
    auto* eval = app.add_subcommand("evaluate", "compare a result with ground truth");
    eval->add_option("--result", eval_opts.result, "estimated cloud")->required();
    eval->add_option("--truth", eval_opts.truth, "ground-truth cloud")->required();
    eval->add_flag("--edge-adapted", eval_opts.edge_adapted, "snap truth normals to the nearest plane normal");
    eval->add_option("--planes", eval_opts.planes, "plane normals file (default: <truth>.planes)");
    eval->add_option("--metric", eval_opts.metric, "msae or rmse")->check(CLI::IsMember({"msae", "rmse"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }
    if (verbose) spdlog::set_level(spdlog::level::debug);

    try {
        if (*est) return run_estimate(est_opts, false);
        if (*filt) return run_estimate(filt_opts, true);
        if (*mesh) return run_denoise_mesh(mesh_opts);
        if (*noise) return run_add_noise(noise_opts);
        if (*shape) return run_make_shape(shape_opts);
        if (*eval) return run_evaluate(eval_opts);
    } catch (const InvalidConfig& e) {
        spdlog::error("{}", e.what());
        return kUsage;
    } catch (const ConvergenceViolation& e) {
        spdlog::error("{}", e.what());
        return kInvariant;
    } catch (const InternalError& e) {
        spdlog::error("{}", e.what());
        return kInvariant;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kData;
    }
    return kUsage;
}
