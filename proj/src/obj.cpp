#include "phocal/obj.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "phocal/errors.hpp"
#include "phocal/text.hpp"

namespace phocal {

namespace {

bool skipped_keyword(std::string_view kw) {
    return kw == "vt" || kw == "vn" || kw == "vp" || kw == "o" || kw == "g" || kw == "s" ||
           kw == "usemtl" || kw == "mtllib" || kw == "l";
}

int parse_face_index(std::string_view token, int vertex_count, const std::string& src,
                     std::size_t line) {
    const auto slash = token.find('/');
    const std::string_view head = token.substr(0, slash);
    int idx = 0;
    const auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), idx);
    if (ec != std::errc() || ptr != head.data() + head.size() || idx == 0) {
        throw ParseError(src, line, "malformed face index '" + std::string(token) + "'");
    }
    const int resolved = idx > 0 ? idx - 1 : vertex_count + idx;
    if (resolved < 0 || resolved >= vertex_count) {
        throw ParseError(src, line,
                         "face index " + std::to_string(idx) + " out of range (have " +
                             std::to_string(vertex_count) + " vertices)");
    }
    return resolved;
}

}  // namespace

MeshLoadResult load_obj(std::istream& in, const std::string& source_name) {
    MeshLoadResult out;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto tokens = split_ws(strip_comment(raw));
        if (tokens.empty()) continue;
        const std::string_view kw = tokens[0];
        if (kw == "v") {
            if (tokens.size() < 4 || tokens.size() > 5) {
                throw ParseError(source_name, line_no, "vertex record needs 3 coordinates");
            }
            Point3d p;
            for (int k = 0; k < 3; ++k) p[k] = parse_double(tokens[1 + k], source_name, line_no);
            out.mesh.vertices.push_back(p);
        } else if (kw == "f") {
            if (tokens.size() < 4) {
                throw ParseError(source_name, line_no, "face record needs at least 3 vertices");
            }
            const int n = static_cast<int>(out.mesh.vertices.size());
            std::vector<int> poly;
            for (std::size_t k = 1; k < tokens.size(); ++k) {
                poly.push_back(parse_face_index(tokens[k], n, source_name, line_no));
            }
            for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
                out.mesh.triangles.emplace_back(poly[0], poly[k], poly[k + 1]);
            }
        } else if (!skipped_keyword(kw)) {
            throw ParseError(source_name, line_no, "unsupported OBJ record '" + std::string(kw) + "'");
        }
    }
    out.dropped_degenerate = remove_degenerate_triangles(out.mesh);
    if (out.dropped_degenerate > 0) {
        out.warnings.push_back(source_name + ": dropped " + std::to_string(out.dropped_degenerate) +
                               " degenerate triangle(s)");
    }
    return out;
}

MeshLoadResult load_mesh(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open mesh file '" + path.string() + "'");
    return load_obj(in, path.string());
}

void write_obj(std::ostream& out, const Mesh& mesh) {
    for (const auto& v : mesh.vertices) {
        out << "v " << format_double(v.x()) << ' ' << format_double(v.y()) << ' '
            << format_double(v.z()) << '\n';
    }
    for (const auto& t : mesh.triangles) {
        out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
    }
}

}  // namespace phocal
