#include "phocal/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>

#include "phocal/text.hpp"

namespace phocal::io {

namespace {

struct Table {
    std::vector<std::vector<double>> rows;
    std::vector<std::size_t> lines;
};

Table read_table(std::istream& in, const std::string& src, std::size_t columns, bool needs_convention) {
    Table t;
    std::optional<std::string> units, convention;
    const auto require_headers = [&](std::size_t line) {
        if (!units) throw ParseError(src, line, std::string("missing header 'units=") + kUnits + "'");
        if (needs_convention && !convention) {
            throw ParseError(src, line, std::string("missing header 'convention=") + kConvention + "'");
        }
    };

    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto tokens = split_ws(strip_comment(raw));
        if (tokens.empty()) continue;
        if (const auto eq = tokens[0].find('='); eq != std::string_view::npos) {
            if (tokens.size() != 1) throw ParseError(src, line, "malformed header line");
            const std::string key(tokens[0].substr(0, eq));
            const std::string value(tokens[0].substr(eq + 1));
            if (!t.rows.empty()) throw ParseError(src, line, "header '" + key + "' after data rows");
            if (key == "units") {
                if (units) throw ParseError(src, line, "duplicate units header");
                if (value != kUnits) {
                    throw ParseError(src, line, "unit header mismatch: expected '" + std::string(kUnits) +
                                                    "', got '" + value + "'");
                }
                units = value;
            } else if (key == "convention") {
                if (convention) throw ParseError(src, line, "duplicate convention header");
                if (value != kConvention) {
                    throw ParseError(src, line, "convention header mismatch: expected '" +
                                                    std::string(kConvention) + "', got '" + value + "'");
                }
                convention = value;
            } else {
                throw ParseError(src, line, "unknown header '" + key + "'");
            }
            continue;
        }
        require_headers(line);
        if (tokens.size() != columns) {
            throw ParseError(src, line, "expected " + std::to_string(columns) + " values, got " +
                                            std::to_string(tokens.size()));
        }
        std::vector<double> row;
        row.reserve(columns);
        for (const auto tok : tokens) row.push_back(parse_double(tok, src, line));
        t.rows.push_back(std::move(row));
        t.lines.push_back(line);
    }
    require_headers(line + 1);
    return t;
}

void write_header(std::ostream& out, bool convention) {
    out << "units=" << kUnits << '\n';
    if (convention) out << "convention=" << kConvention << '\n';
}

void put(std::ostream& out, double v, bool first = false) {
    if (!first) out << ' ';
    out << format_double(v);
}

void put_pose(std::ostream& out, const Pose3d& p, bool first) {
    const auto& q = p.rotation.quaternion();
    put(out, q.w(), first);
    put(out, q.x());
    put(out, q.y());
    put(out, q.z());
    for (int k = 0; k < 3; ++k) put(out, p.translation[k]);
}

Pose3d row_pose(const std::vector<double>& r, std::size_t at, const std::string& src, std::size_t line) {
    return {rotation_from_wxyz(r[at], r[at + 1], r[at + 2], r[at + 3], src, line),
            Point3d(r[at + 4], r[at + 5], r[at + 6])};
}

const std::array<std::string, 12> kBoxColumns = {"category", "score", "cx", "cy", "cz", "hx",
                                                 "hy",       "hz",    "qw", "qx", "qy", "qz"};

}  // namespace

Rotationd rotation_from_wxyz(double w, double x, double y, double z, const std::string& source,
                             std::size_t line) {
    const Eigen::Quaterniond q(w, x, y, z);
    const double n = q.norm();
    if (!std::isfinite(n) || std::abs(n - 1.0) > kQuaternionTolerance) {
        throw ParseError(source, line, "quaternion norm " + format_double(n) + " is not within " +
                                           format_double(kQuaternionTolerance) + " of 1");
    }
    // Keep stored unit quaternions bit-exact so save/load round-trips.
    if (std::abs(n - 1.0) <= 4.0 * std::numeric_limits<double>::epsilon()) return Rotationd::from_unit(q);
    return Rotationd(q);
}

std::vector<Pose3d> read_poses(std::istream& in, const std::string& source) {
    const Table t = read_table(in, source, 7, true);
    std::vector<Pose3d> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) out.push_back(row_pose(t.rows[i], 0, source, t.lines[i]));
    return out;
}

void write_poses(std::ostream& out, std::span<const Pose3d> poses) {
    write_header(out, true);
    out << "# qw qx qy qz tx ty tz\n";
    for (const auto& p : poses) {
        put_pose(out, p, true);
        out << '\n';
    }
}

std::vector<Point3d> read_points(std::istream& in, const std::string& source) {
    const Table t = read_table(in, source, 3, false);
    std::vector<Point3d> out;
    for (const auto& r : t.rows) out.emplace_back(r[0], r[1], r[2]);
    return out;
}

void write_points(std::ostream& out, std::span<const Point3d> points) {
    write_header(out, false);
    out << "# x y z\n";
    for (const auto& p : points) {
        put(out, p.x(), true);
        put(out, p.y());
        put(out, p.z());
        out << '\n';
    }
}

MarkerBoard read_board(std::istream& in, const std::string& source) {
    const Table t = read_table(in, source, 6, false);
    MarkerBoard b;
    for (const auto& r : t.rows) {
        b.board_points.emplace_back(r[0], r[1], r[2]);
        b.measured_points.emplace_back(r[3], r[4], r[5]);
    }
    return b;
}

void write_board(std::ostream& out, const MarkerBoard& board) {
    if (board.board_points.size() != board.measured_points.size()) {
        throw ValidationError("write_board: board and measured point counts differ");
    }
    write_header(out, false);
    out << "# board x y z (marker frame), measured x y z (base frame)\n";
    for (std::size_t i = 0; i < board.board_points.size(); ++i) {
        for (int k = 0; k < 3; ++k) put(out, board.board_points[i][k], k == 0);
        for (int k = 0; k < 3; ++k) put(out, board.measured_points[i][k]);
        out << '\n';
    }
}

std::vector<HandEyeView> read_views(std::istream& in, const std::string& source) {
    const Table t = read_table(in, source, 14, true);
    std::vector<HandEyeView> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        out.push_back({row_pose(t.rows[i], 0, source, t.lines[i]), row_pose(t.rows[i], 7, source, t.lines[i])});
    }
    return out;
}

void write_views(std::ostream& out, std::span<const HandEyeView> views) {
    write_header(out, true);
    out << "# T_ee->base (qw qx qy qz tx ty tz), T_marker->cam (qw qx qy qz tx ty tz)\n";
    for (const auto& v : views) {
        put_pose(out, v.ee_pose, true);
        put_pose(out, v.marker_in_cam, false);
        out << '\n';
    }
}

Correspondences read_correspondences(std::istream& in, const std::string& source) {
    const Table t = read_table(in, source, 6, false);
    Correspondences c;
    for (const auto& r : t.rows) {
        c.model.emplace_back(r[0], r[1], r[2]);
        c.measured.emplace_back(r[3], r[4], r[5]);
    }
    return c;
}

void write_correspondences(std::ostream& out, const Correspondences& c) {
    if (c.model.size() != c.measured.size()) {
        throw ValidationError("write_correspondences: model and measured counts differ");
    }
    write_header(out, false);
    out << "# model x y z, measured x y z\n";
    for (std::size_t i = 0; i < c.model.size(); ++i) {
        for (int k = 0; k < 3; ++k) put(out, c.model[i][k], k == 0);
        for (int k = 0; k < 3; ++k) put(out, c.measured[i][k]);
        out << '\n';
    }
}

std::vector<Detection> read_boxes_csv(std::istream& in, const std::string& source) {
    std::vector<Detection> out;
    std::string raw;
    std::size_t line = 0;
    bool header = false;
    while (std::getline(in, raw)) {
        ++line;
        const std::string_view text = trim(raw);
        if (text.empty() || text.front() == '#') continue;
        const auto cells = split(text, ',');
        if (!header) {
            bool ok = cells.size() == kBoxColumns.size();
            for (std::size_t k = 0; ok && k < cells.size(); ++k) ok = trim(cells[k]) == kBoxColumns[k];
            if (!ok) {
                throw ParseError(source, line,
                                 "expected header 'category,score,cx,cy,cz,hx,hy,hz,qw,qx,qy,qz'");
            }
            header = true;
            continue;
        }
        if (cells.size() != kBoxColumns.size()) {
            throw ParseError(source, line, "expected 12 columns, got " + std::to_string(cells.size()));
        }
        Detection d;
        d.category = std::string(trim(cells[0]));
        if (d.category.empty()) throw ParseError(source, line, "empty category");
        std::array<double, 11> v{};
        for (std::size_t k = 0; k < v.size(); ++k) v[k] = parse_double(trim(cells[k + 1]), source, line);
        d.score = v[0];
        d.box.center = Point3d(v[1], v[2], v[3]);
        d.box.half_extents = Eigen::Vector3d(v[4], v[5], v[6]);
        if (!(d.box.half_extents.array() > 0.0).all()) {
            throw ParseError(source, line, "half extents must be strictly positive");
        }
        d.box.rotation = rotation_from_wxyz(v[7], v[8], v[9], v[10], source, line);
        out.push_back(std::move(d));
    }
    if (!header) throw ParseError(source, line + 1, "missing CSV header");
    return out;
}

void write_boxes_csv(std::ostream& out, std::span<const Detection> boxes) {
    for (std::size_t k = 0; k < kBoxColumns.size(); ++k) out << (k ? "," : "") << kBoxColumns[k];
    out << '\n';
    for (const auto& d : boxes) {
        const auto& q = d.box.rotation.quaternion();
        out << d.category;
        for (const double v : {d.score, d.box.center.x(), d.box.center.y(), d.box.center.z(), d.box.half_extents.x(),
                               d.box.half_extents.y(), d.box.half_extents.z(), q.w(), q.x(), q.y(), q.z()}) {
            out << ',' << format_double(v);
        }
        out << '\n';
    }
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) throw ValidationError("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw ValidationError("cannot replace '" + path.string() + "'");
    }
}

std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 digest failed");
    }
    std::string hex;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", digest[i]);
        hex += buf;
    }
    return hex;
}

std::string file_sha256(const std::filesystem::path& path) { return sha256_hex(slurp(path)); }

}  // namespace phocal::io
