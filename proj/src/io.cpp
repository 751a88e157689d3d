#include "lrn/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "lrn/errors.hpp"
#include "lrn/eval.hpp"

namespace lrn {

namespace {

constexpr std::size_t kBootstrapK = 18;

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        const std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

bool parse_double(std::string_view tok, double& out) {
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    return ec == std::errc() && ptr == tok.data() + tok.size() && std::isfinite(out);
}

bool parse_long(std::string_view tok, long& out) {
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    return ec == std::errc() && ptr == tok.data() + tok.size();
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path.string(), 0, "cannot open file");
    return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ParseError(path.string(), 0, "cannot open file for writing");
    return out;
}

double number(const std::string& file, std::size_t line, std::string_view tok) {
    double v;
    if (!parse_double(tok, v)) throw ParseError(file, line, "expected a finite number, got '" + std::string(tok) + "'");
    return v;
}

RawCloud read_xyz(const std::filesystem::path& path) {
    auto in = open_in(path);
    const std::string file = path.string();
    RawCloud raw;
    std::string line;
    std::size_t lineno = 0;
    std::size_t columns = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto tok = split_ws(line);
        if (tok.empty() || tok.front().front() == '#') continue;
        if (tok.size() != 3 && tok.size() != 6)
            throw ParseError(file, lineno, "expected 3 or 6 columns, got " + std::to_string(tok.size()));
        if (columns == 0) columns = tok.size();
        if (tok.size() != columns)
            throw ParseError(file, lineno, "column count changed from " + std::to_string(columns) + " to " +
                                               std::to_string(tok.size()));
        raw.positions.emplace_back(number(file, lineno, tok[0]), number(file, lineno, tok[1]),
                                   number(file, lineno, tok[2]));
        if (columns == 6)
            raw.normals.emplace_back(number(file, lineno, tok[3]), number(file, lineno, tok[4]),
                                     number(file, lineno, tok[5]));
    }
    return raw;
}

RawCloud read_ply(const std::filesystem::path& path) {
    auto in = open_in(path);
    const std::string file = path.string();
    std::string line;
    std::size_t lineno = 0;

    auto next = [&]() -> std::vector<std::string_view> {
        while (std::getline(in, line)) {
            ++lineno;
            auto tok = split_ws(line);
            if (!tok.empty()) return tok;
        }
        return {};
    };

    auto tok = next();
    if (tok.empty() || tok[0] != "ply") throw ParseError(file, lineno, "missing 'ply' magic");
    long vertex_count = -1;
    bool in_vertex = false;
    std::vector<std::string> props;
    // elements after the vertex block are skipped line by line
    for (;;) {
        tok = next();
        if (tok.empty()) throw ParseError(file, lineno, "unexpected end of header");
        if (tok[0] == "end_header") break;
        if (tok[0] == "format") {
            if (tok.size() < 2 || tok[1] != "ascii") throw ParseError(file, lineno, "only ascii PLY is supported");
        } else if (tok[0] == "element") {
            if (tok.size() != 3) throw ParseError(file, lineno, "malformed element line");
            in_vertex = tok[1] == "vertex";
            if (in_vertex && !parse_long(tok[2], vertex_count)) throw ParseError(file, lineno, "bad vertex count");
            if (!in_vertex && vertex_count < 0) throw ParseError(file, lineno, "vertex element must come first");
        } else if (tok[0] == "property") {
            if (in_vertex) {
                if (tok.size() != 3) throw ParseError(file, lineno, "vertex properties must be scalar");
                props.emplace_back(tok[2]);
            }
        } else if (tok[0] != "comment" && tok[0] != "obj_info") {
            throw ParseError(file, lineno, "unknown header keyword '" + std::string(tok[0]) + "'");
        }
    }
    if (vertex_count < 0) throw ParseError(file, lineno, "no vertex element");
    auto col = [&](const char* name) -> long {
        auto it = std::find(props.begin(), props.end(), name);
        return it == props.end() ? -1 : static_cast<long>(it - props.begin());
    };
    const long cx = col("x"), cy = col("y"), cz = col("z");
    const long cnx = col("nx"), cny = col("ny"), cnz = col("nz");
    if (cx < 0 || cy < 0 || cz < 0) throw ParseError(file, lineno, "vertex element lacks x/y/z");
    const bool normals = cnx >= 0 && cny >= 0 && cnz >= 0;

    RawCloud raw;
    raw.positions.reserve(static_cast<std::size_t>(vertex_count));
    for (long v = 0; v < vertex_count; ++v) {
        tok = next();
        if (tok.empty()) throw ParseError(file, lineno, "file ends after " + std::to_string(v) + " vertices");
        if (tok.size() != props.size())
            throw ParseError(file, lineno, "expected " + std::to_string(props.size()) + " values, got " +
                                               std::to_string(tok.size()));
        auto at = [&](long c) { return number(file, lineno, tok[static_cast<std::size_t>(c)]); };
        raw.positions.emplace_back(at(cx), at(cy), at(cz));
        if (normals) raw.normals.emplace_back(at(cnx), at(cny), at(cnz));
    }
    return raw;
}

RawCloud read_obj_cloud(const std::filesystem::path& path) {
    auto in = open_in(path);
    const std::string file = path.string();
    RawCloud raw;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto tok = split_ws(line);
        if (tok.empty()) continue;
        if (tok[0] == "v" || tok[0] == "vn") {
            if (tok.size() < 4) throw ParseError(file, lineno, "expected three coordinates");
            Vec3 p(number(file, lineno, tok[1]), number(file, lineno, tok[2]), number(file, lineno, tok[3]));
            (tok[0] == "v" ? raw.positions : raw.normals).push_back(p);
        }
    }
    if (!raw.normals.empty() && raw.normals.size() != raw.positions.size())
        throw ParseError(file, lineno, std::to_string(raw.positions.size()) + " vertices but " +
                                           std::to_string(raw.normals.size()) + " normals");
    return raw;
}

}  // namespace

std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v == 0.0 ? 0.0 : v);
    return buf;
}

std::optional<CloudFormat> cloud_format_for(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".ply") return CloudFormat::ply_ascii;
    if (ext == ".xyz" || ext == ".txt") return CloudFormat::xyz;
    if (ext == ".obj") return CloudFormat::obj;
    return std::nullopt;
}

RawCloud read_raw_cloud(const std::filesystem::path& path) {
    const auto fmt = cloud_format_for(path);
    if (!fmt) throw ParseError(path.string(), 0, "unknown point cloud extension (use .ply, .xyz or .obj)");
    switch (*fmt) {
        case CloudFormat::ply_ascii: return read_ply(path);
        case CloudFormat::xyz: return read_xyz(path);
        case CloudFormat::obj: return read_obj_cloud(path);
    }
    return {};
}

CloudReadResult read_cloud(const std::filesystem::path& path) {
    RawCloud raw = read_raw_cloud(path);
    if (raw.positions.empty()) throw InvalidInput(path.string() + ": no points");
    if (!raw.normals.empty()) {
        for (std::size_t i = 0; i < raw.normals.size(); ++i) {
            if (raw.normals[i].norm() == 0.0)
                throw InvalidInput(path.string() + ": zero-length normal at point " + std::to_string(i));
        }
        return {PointCloud(std::move(raw.positions), std::move(raw.normals)), true};
    }
    spdlog::warn("{}: no normals, bootstrapping with PCA (k={})", path.string(), kBootstrapK);
    if (raw.positions.size() < 4) throw InvalidInput(path.string() + ": too few points to bootstrap normals");
    auto pca = estimate_normals_pca(raw.positions, kBootstrapK);
    return {PointCloud(std::move(raw.positions), std::move(pca.field.normals)), false};
}

void write_raw_cloud(const std::filesystem::path& path, const std::vector<Vec3>& positions,
                     const std::vector<Vec3>& normals) {
    const auto fmt = cloud_format_for(path);
    if (!fmt) throw ParseError(path.string(), 0, "unknown point cloud extension (use .ply, .xyz or .obj)");
    const bool with_normals = !normals.empty();
    auto out = open_out(path);
    auto vec = [](const Vec3& v) { return format_real(v.x()) + " " + format_real(v.y()) + " " + format_real(v.z()); };
    switch (*fmt) {
        case CloudFormat::ply_ascii:
            out << "ply\nformat ascii 1.0\nelement vertex " << positions.size() << "\n"
                << "property double x\nproperty double y\nproperty double z\n";
            if (with_normals) out << "property double nx\nproperty double ny\nproperty double nz\n";
            out << "end_header\n";
            for (std::size_t i = 0; i < positions.size(); ++i) {
                out << vec(positions[i]);
                if (with_normals) out << ' ' << vec(normals[i]);
                out << '\n';
            }
            break;
        case CloudFormat::xyz:
            for (std::size_t i = 0; i < positions.size(); ++i) {
                out << vec(positions[i]);
                if (with_normals) out << ' ' << vec(normals[i]);
                out << '\n';
            }
            break;
        case CloudFormat::obj:
            for (const auto& p : positions) out << "v " << vec(p) << '\n';
            for (const auto& n : normals) out << "vn " << vec(n) << '\n';
            break;
    }
    if (!out) throw ParseError(path.string(), 0, "write failed");
}

void write_cloud(const std::filesystem::path& path, const PointCloud& cloud, bool with_normals) {
    write_raw_cloud(path, cloud.positions(), with_normals ? cloud.normals() : std::vector<Vec3>{});
}

TriangleMesh read_mesh(const std::filesystem::path& path, bool triangulate_fan) {
    auto in = open_in(path);
    const std::string file = path.string();
    std::vector<Vec3> verts;
    std::vector<Face> faces;
    std::vector<std::size_t> face_lines;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto tok = split_ws(line);
        if (tok.empty() || tok[0].front() == '#') continue;
        if (tok[0] == "v") {
            if (tok.size() < 4) throw ParseError(file, lineno, "vertex needs three coordinates");
            verts.emplace_back(number(file, lineno, tok[1]), number(file, lineno, tok[2]), number(file, lineno, tok[3]));
        } else if (tok[0] == "f") {
            if (tok.size() < 4) throw ParseError(file, lineno, "face needs at least three vertices");
            if (tok.size() > 4 && !triangulate_fan)
                throw ParseError(file, lineno, "face has " + std::to_string(tok.size() - 1) +
                                                   " vertices; pass --triangulate-fan to split polygons");
            std::vector<std::uint32_t> idx;
            for (std::size_t k = 1; k < tok.size(); ++k) {
                const auto slash = tok[k].find('/');
                long v;
                if (!parse_long(tok[k].substr(0, slash), v) || v == 0)
                    throw ParseError(file, lineno, "bad vertex index '" + std::string(tok[k]) + "'");
                const long resolved = v > 0 ? v - 1 : static_cast<long>(verts.size()) + v;
                if (resolved < 0 || resolved >= static_cast<long>(verts.size()))
                    throw ParseError(file, lineno, "vertex index " + std::to_string(v) + " out of range");
                idx.push_back(static_cast<std::uint32_t>(resolved));
            }
            for (std::size_t k = 1; k + 1 < idx.size(); ++k) {
                faces.push_back({idx[0], idx[k], idx[k + 1]});
                face_lines.push_back(lineno);
            }
        }
    }
    if (faces.empty()) throw InvalidInput(file + ": mesh has no faces");
    try {
        return TriangleMesh(std::move(verts), std::move(faces));
    } catch (const InvalidInput& e) {
        // map "face N ..." back to its source line when possible
        const std::string msg = e.what();
        std::size_t f = 0;
        if (std::sscanf(msg.c_str(), "face %zu", &f) == 1 && f < face_lines.size())
            throw ParseError(file, face_lines[f], msg);
        throw ParseError(file, 0, msg);
    }
}

void write_mesh(const std::filesystem::path& path, const TriangleMesh& mesh) {
    auto out = open_out(path);
    for (const auto& v : mesh.vertices())
        out << "v " << format_real(v.x()) << ' ' << format_real(v.y()) << ' ' << format_real(v.z()) << '\n';
    for (const auto& f : mesh.faces()) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
    if (!out) throw ParseError(path.string(), 0, "write failed");
}

std::vector<Vec3> read_directions(const std::filesystem::path& path) {
    auto in = open_in(path);
    const std::string file = path.string();
    std::vector<Vec3> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto tok = split_ws(line);
        if (tok.empty() || tok[0].front() == '#') continue;
        if (tok.size() != 3) throw ParseError(file, lineno, "expected 3 columns");
        out.emplace_back(number(file, lineno, tok[0]), number(file, lineno, tok[1]), number(file, lineno, tok[2]));
    }
    return out;
}

void write_directions(const std::filesystem::path& path, const std::vector<Vec3>& dirs) {
    auto out = open_out(path);
    for (const auto& d : dirs) out << format_real(d.x()) << ' ' << format_real(d.y()) << ' ' << format_real(d.z()) << '\n';
}

}  // namespace lrn
