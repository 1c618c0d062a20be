#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "phocal/geom.hpp"

namespace phocal {

/// Triangle mesh, vertices in mm.
struct Mesh {
    std::vector<Point3d> vertices;
    std::vector<Eigen::Vector3i> triangles;
    /// Optional cached surface samples in the model frame.
    std::vector<Point3d> surface_samples;

    double triangle_area(std::size_t t) const;
    double surface_area() const;
};

/// Minimum triangle area kept by cleanup, mm^2.
inline constexpr double kMinTriangleArea = 1e-12;

/// Throws ValidationError for out-of-range indices or non-finite vertices.
void validate(const Mesh& mesh);

/// Drops triangles with area <= kMinTriangleArea; returns how many were removed.
std::size_t remove_degenerate_triangles(Mesh& mesh);

/// Area-uniform surface samples. Throws ValidationError when the mesh has no
/// triangle with positive area.
std::vector<Point3d> sample_surface(const Mesh& mesh, std::size_t count, RngStream& rng);

struct Aabb {
    Point3d min = Point3d::Constant(std::numeric_limits<double>::infinity());
    Point3d max = Point3d::Constant(-std::numeric_limits<double>::infinity());

    void extend(const Point3d& p) {
        min = min.cwiseMin(p);
        max = max.cwiseMax(p);
    }
    bool overlaps(const Aabb& o, double margin = 0.0) const {
        return (min.array() - margin < o.max.array()).all() &&
               (o.min.array() - margin < max.array()).all();
    }
};

Aabb bounding_box(const Mesh& mesh, const Pose3d& pose = Pose3d::identity());

/// Translates the mesh so its bounding box is centered on the origin.
Mesh center_on_bbox(Mesh mesh);

// Procedural stand-ins for scanned household objects, model frame with the
// base of the object on z = 0.

/// Box with 45-degree chamfered vertical edges.
Mesh make_chamfered_box(double width, double depth, double height, double chamfer);

/// Closed surface of revolution about +z from a (radius, z) profile traversed
/// bottom to top; the first and last radii may be zero.
Mesh make_revolution(const std::vector<Eigen::Vector2d>& profile, int segments);

/// Open-top cup: outer wall, rim, inner wall and floor.
Mesh make_cup(double radius, double height, double wall, int segments = 48);

/// Cylinder with capped ends (cans, bottles).
Mesh make_cylinder(double radius, double height, int segments = 48);

/// Bottle: cylinder body, shoulder and neck.
Mesh make_bottle(double radius, double height, double neck_radius, int segments = 48);

/// Elongated cutlery-like blade: tapered flat bar with a thicker handle.
Mesh make_blade(double length, double width, double thickness);

/// Cup with a box-section handle on the +x side.
Mesh make_mug(double radius, double height, double wall, int segments = 48);

/// Appends `src` transformed by `pose` to `dst`.
void append_mesh(Mesh& dst, const Mesh& src, const Pose3d& pose = Pose3d::identity());

/// Axis-aligned box centered at the origin (8 vertices, 12 triangles).
Mesh make_box(double sx, double sy, double sz);

}  // namespace phocal
