#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "phocal/mesh.hpp"

namespace phocal {

struct MeshLoadResult {
    Mesh mesh;
    std::size_t dropped_degenerate = 0;
    std::vector<std::string> warnings;
};

/// Wavefront OBJ subset: `v` and `f` records (polygons fan-triangulated,
/// `v/vt/vn` and negative indices accepted). Texture, normal, grouping and
/// material records are skipped; anything else is a ParseError with the line
/// number. Degenerate triangles are dropped with a warning.
MeshLoadResult load_obj(std::istream& in, const std::string& source_name);

MeshLoadResult load_mesh(const std::filesystem::path& path);

/// Writes vertices and triangles as OBJ text (1-based indices).
void write_obj(std::ostream& out, const Mesh& mesh);

}  // namespace phocal
