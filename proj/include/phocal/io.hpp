#pragma once

#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "phocal/alignment.hpp"
#include "phocal/errors.hpp"
#include "phocal/handeye.hpp"
#include "phocal/metrics.hpp"

namespace phocal::io {

// Plain-text measurement files. Every file starts with header lines
//
//   units=mm
//   convention=p->R*p+t      (files holding poses)
//
// followed by whitespace-separated rows; '#' starts a comment. Poses are
// written as qw qx qy qz tx ty tz. Readers never convert units or guess a
// convention: a missing or different header is a ParseError.

inline constexpr const char* kUnits = "mm";
inline constexpr const char* kConvention = "p->R*p+t";
/// Quaternions whose norm is off by more than this are rejected.
inline constexpr double kQuaternionTolerance = 1e-6;

/// Unit quaternion from a file row; normalizes within tolerance.
Rotationd rotation_from_wxyz(double w, double x, double y, double z, const std::string& source,
                             std::size_t line);

std::vector<Pose3d> read_poses(std::istream& in, const std::string& source);
void write_poses(std::ostream& out, std::span<const Pose3d> poses);

std::vector<Point3d> read_points(std::istream& in, const std::string& source);
void write_points(std::ostream& out, std::span<const Point3d> points);

/// Rows: board x y z (marker frame), measured x y z (base frame).
MarkerBoard read_board(std::istream& in, const std::string& source);
void write_board(std::ostream& out, const MarkerBoard& board);

/// Rows: T_ee->base pose (7 values), then T_marker->cam pose (7 values).
std::vector<HandEyeView> read_views(std::istream& in, const std::string& source);
void write_views(std::ostream& out, std::span<const HandEyeView> views);

/// Rows: model x y z, measured x y z.
Correspondences read_correspondences(std::istream& in, const std::string& source);
void write_correspondences(std::ostream& out, const Correspondences& c);

/// Box CSV with header category,score,cx,cy,cz,hx,hy,hz,qw,qx,qy,qz. Ground
/// truth files use the same layout; their score column is ignored.
std::vector<Detection> read_boxes_csv(std::istream& in, const std::string& source);
void write_boxes_csv(std::ostream& out, std::span<const Detection> boxes);

/// Opens `path` and hands the stream to `reader`; ValidationError if unreadable.
template <typename Reader>
auto read_file(const std::filesystem::path& path, Reader reader) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    return reader(in, path.string());
}

std::string slurp(const std::filesystem::path& path);

/// Writes to a temporary sibling and renames it over `path`.
void atomic_write(const std::filesystem::path& path, const std::string& content);

std::string sha256_hex(std::string_view data);
std::string file_sha256(const std::filesystem::path& path);

}  // namespace phocal::io
