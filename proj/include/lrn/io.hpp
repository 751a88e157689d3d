#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lrn/core_math.hpp"
#include "lrn/geometry.hpp"

namespace lrn {

enum class CloudFormat { ply_ascii, xyz, obj };

/// Format from the file extension (.ply, .xyz/.txt, .obj).
std::optional<CloudFormat> cloud_format_for(const std::filesystem::path& path);

struct CloudReadResult {
    PointCloud cloud;
    bool had_normals = true;   // false when normals were bootstrapped with PCA
};

/// Reads positions and normals. Files without normals get PCA normals (k = 18)
/// and a warning. Throws ParseError (with line number) on malformed input and
/// InvalidInput on an empty file.
CloudReadResult read_cloud(const std::filesystem::path& path);

/// Raw positions and optional normals, no bootstrap.
struct RawCloud {
    std::vector<Vec3> positions;
    std::vector<Vec3> normals;   // empty when the file had none
};
RawCloud read_raw_cloud(const std::filesystem::path& path);

/// Writes x y z nx ny nz (normals omitted if `with_normals` is false) with
/// 9 significant digits.
void write_cloud(const std::filesystem::path& path, const PointCloud& cloud, bool with_normals = true);
void write_raw_cloud(const std::filesystem::path& path, const std::vector<Vec3>& positions,
                     const std::vector<Vec3>& normals);

/// OBJ v/f records, 1-based (negative relative indices accepted). Polygons with
/// more than three vertices are rejected unless `triangulate_fan` is set.
TriangleMesh read_mesh(const std::filesystem::path& path, bool triangulate_fan = false);
void write_mesh(const std::filesystem::path& path, const TriangleMesh& mesh);

/// One direction per line, "x y z".
std::vector<Vec3> read_directions(const std::filesystem::path& path);
void write_directions(const std::filesystem::path& path, const std::vector<Vec3>& dirs);

/// "%.9g"
std::string format_real(double v);

}  // namespace lrn
