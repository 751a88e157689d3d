#include "lrn/manifest.hpp"

#include <fstream>
#include <sstream>

#include "lrn/errors.hpp"
#include "lrn/io.hpp"

namespace lrn {

namespace {

void upsert(std::vector<std::pair<std::string, std::string>>& list, const std::string& key, const std::string& value) {
    for (auto& [k, v] : list) {
        if (k == key) {
            v = value;
            return;
        }
    }
    list.emplace_back(key, value);
}

}  // namespace

void RunManifest::set(const std::string& key, const std::string& value) {
    if (key.find_first_of("=\n") != std::string::npos || value.find('\n') != std::string::npos)
        throw InvalidInput("manifest entries cannot contain '=' in keys or newlines");
    upsert(entries_, key, value);
}

void RunManifest::set(const std::string& key, double value) { set(key, format_real(value)); }

void RunManifest::set(const std::string& key, long long value) { set(key, std::to_string(value)); }

void RunManifest::set_config(const FilterConfig& cfg) {
    set("config.k_local", static_cast<long long>(cfg.k_local));
    set("config.k_non", static_cast<long long>(cfg.k_non));
    set("config.theta_init", cfg.theta_init);
    set("config.theta_low", cfg.theta_low);
    set("config.beta", cfg.beta);
    set("config.n_nor", static_cast<long long>(cfg.n_nor));
    set("config.n_pos", static_cast<long long>(cfg.n_pos));
    set("config.ball_radius", cfg.ball_radius ? format_real(*cfg.ball_radius) : std::string("auto"));
    set("config.sigma_theta", cfg.sigma_theta);
    set("config.solver", std::string(cfg.solver == LowRankSolver::wnnm ? "wnnm" : "row_average"));
}

void RunManifest::set_timing(const std::string& stage, double seconds) {
    upsert(timings_, "timing." + stage + "_s", format_real(seconds));
}

std::string RunManifest::get(const std::string& key) const {
    for (const auto& [k, v] : entries_) {
        if (k == key) return v;
    }
    for (const auto& [k, v] : timings_) {
        if (k == key) return v;
    }
    return {};
}

std::string RunManifest::render(bool include_timings) const {
    std::ostringstream out;
    for (const auto& [k, v] : entries_) out << k << '=' << v << '\n';
    if (include_timings) {
        for (const auto& [k, v] : timings_) out << k << '=' << v << '\n';
    }
    return out.str();
}

void RunManifest::write(const std::filesystem::path& path, bool include_timings) const {
    std::ofstream out(path);
    if (!out) throw ParseError(path.string(), 0, "cannot open manifest for writing");
    out << render(include_timings);
}

RunManifest RunManifest::parse(const std::string& text) {
    RunManifest m;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("<manifest>", lineno, "expected key=value");
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        if (key.rfind("timing.", 0) == 0) upsert(m.timings_, key, value);
        else upsert(m.entries_, key, value);
    }
    return m;
}

RunManifest RunManifest::read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path.string(), 0, "cannot open manifest");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

FilterConfig config_from_manifest(const RunManifest& m) {
    FilterConfig cfg;
    auto num = [&](const char* key, auto& field) {
        const std::string v = m.get(key);
        if (v.empty()) return;
        using T = std::decay_t<decltype(field)>;
        if constexpr (std::is_floating_point_v<T>) field = std::stod(v);
        else field = static_cast<T>(std::stoll(v));
    };
    num("config.k_local", cfg.k_local);
    num("config.k_non", cfg.k_non);
    num("config.theta_init", cfg.theta_init);
    num("config.theta_low", cfg.theta_low);
    num("config.beta", cfg.beta);
    num("config.n_nor", cfg.n_nor);
    num("config.n_pos", cfg.n_pos);
    num("config.sigma_theta", cfg.sigma_theta);
    const std::string radius = m.get("config.ball_radius");
    if (!radius.empty() && radius != "auto") cfg.ball_radius = std::stod(radius);
    if (m.get("config.solver") == "row_average") cfg.solver = LowRankSolver::row_average;
    return cfg;
}

std::filesystem::path manifest_path_for(const std::filesystem::path& output) {
    std::filesystem::path p = output;
    p += ".manifest";
    return p;
}

}  // namespace lrn
