#include "phocal/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace phocal {

double Mesh::triangle_area(std::size_t t) const {
    const auto& tri = triangles[t];
    const Point3d& a = vertices[static_cast<std::size_t>(tri[0])];
    const Point3d& b = vertices[static_cast<std::size_t>(tri[1])];
    const Point3d& c = vertices[static_cast<std::size_t>(tri[2])];
    return 0.5 * (b - a).cross(c - a).norm();
}

double Mesh::surface_area() const {
    double total = 0.0;
    for (std::size_t t = 0; t < triangles.size(); ++t) total += triangle_area(t);
    return total;
}

void validate(const Mesh& mesh) {
    const auto n = static_cast<int>(mesh.vertices.size());
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        if (!mesh.vertices[i].allFinite()) {
            throw ValidationError("mesh: non-finite vertex " + std::to_string(i));
        }
    }
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        if ((tri.array() < 0).any() || (tri.array() >= n).any()) {
            throw ValidationError("mesh: triangle " + std::to_string(t) +
                                  " references a vertex outside [0, " + std::to_string(n) + ")");
        }
    }
}

std::size_t remove_degenerate_triangles(Mesh& mesh) {
    const std::size_t before = mesh.triangles.size();
    std::vector<Eigen::Vector3i> kept;
    kept.reserve(before);
    for (std::size_t t = 0; t < before; ++t) {
        if (mesh.triangle_area(t) > kMinTriangleArea) kept.push_back(mesh.triangles[t]);
    }
    mesh.triangles = std::move(kept);
    return before - mesh.triangles.size();
}

std::vector<Point3d> sample_surface(const Mesh& mesh, std::size_t count, RngStream& rng) {
    validate(mesh);
    std::vector<double> cdf;
    cdf.reserve(mesh.triangles.size());
    double total = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const double a = mesh.triangle_area(t);
        total += a > kMinTriangleArea ? a : 0.0;
        cdf.push_back(total);
    }
    if (!(total > 0.0)) {
        throw ValidationError("sample_surface: mesh has no triangle with positive area");
    }

    std::vector<Point3d> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double u = rng.uniform() * total;
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        if (it == cdf.end()) --it;
        const auto& tri = mesh.triangles[static_cast<std::size_t>(it - cdf.begin())];
        // Square-root warp gives uniform barycentric coordinates.
        const double s = std::sqrt(rng.uniform());
        const double r2 = rng.uniform();
        const Point3d& a = mesh.vertices[static_cast<std::size_t>(tri[0])];
        const Point3d& b = mesh.vertices[static_cast<std::size_t>(tri[1])];
        const Point3d& c = mesh.vertices[static_cast<std::size_t>(tri[2])];
        out.push_back((1.0 - s) * a + s * (1.0 - r2) * b + s * r2 * c);
    }
    return out;
}

Aabb bounding_box(const Mesh& mesh, const Pose3d& pose) {
    Aabb box;
    for (const auto& v : mesh.vertices) box.extend(apply(pose, v));
    return box;
}

Mesh center_on_bbox(Mesh mesh) {
    if (mesh.vertices.empty()) return mesh;
    const Aabb box = bounding_box(mesh);
    const Point3d c = 0.5 * (box.min + box.max);
    for (auto& v : mesh.vertices) v -= c;
    for (auto& s : mesh.surface_samples) s -= c;
    return mesh;
}

namespace {

int add_vertex(Mesh& m, double x, double y, double z) {
    m.vertices.emplace_back(x, y, z);
    return static_cast<int>(m.vertices.size()) - 1;
}

void add_quad(Mesh& m, int a, int b, int c, int d) {
    m.triangles.emplace_back(a, b, c);
    m.triangles.emplace_back(a, c, d);
}

/// Prism over a convex counter-clockwise polygon from z = 0 to z = height.
Mesh extrude(const std::vector<Eigen::Vector2d>& polygon, double height) {
    Mesh m;
    const int n = static_cast<int>(polygon.size());
    for (const auto& p : polygon) add_vertex(m, p.x(), p.y(), 0.0);
    for (const auto& p : polygon) add_vertex(m, p.x(), p.y(), height);
    const int bottom_center = add_vertex(m, 0.0, 0.0, 0.0);
    const int top_center = add_vertex(m, 0.0, 0.0, height);
    for (int i = 0; i < n; ++i) {
        const int j = (i + 1) % n;
        add_quad(m, i, j, n + j, n + i);
        m.triangles.emplace_back(bottom_center, j, i);
        m.triangles.emplace_back(top_center, n + i, n + j);
    }
    return m;
}

}  // namespace

Mesh make_box(double sx, double sy, double sz) {
    Mesh m;
    for (int i = 0; i < 8; ++i) {
        add_vertex(m, (i & 1 ? 0.5 : -0.5) * sx, (i & 2 ? 0.5 : -0.5) * sy,
                   (i & 4 ? 0.5 : -0.5) * sz);
    }
    add_quad(m, 0, 2, 3, 1);  // z-
    add_quad(m, 4, 5, 7, 6);  // z+
    add_quad(m, 0, 1, 5, 4);  // y-
    add_quad(m, 2, 6, 7, 3);  // y+
    add_quad(m, 0, 4, 6, 2);  // x-
    add_quad(m, 1, 3, 7, 5);  // x+
    return m;
}

Mesh make_chamfered_box(double width, double depth, double height, double chamfer) {
    const double hx = 0.5 * width, hy = 0.5 * depth;
    const double c = std::clamp(chamfer, 0.0, 0.49 * std::min(width, depth));
    const std::vector<Eigen::Vector2d> octagon = {
        {hx - c, -hy}, {hx, -hy + c}, {hx, hy - c},   {hx - c, hy},
        {-hx + c, hy}, {-hx, hy - c}, {-hx, -hy + c}, {-hx + c, -hy},
    };
    Mesh m = extrude(octagon, height);
    remove_degenerate_triangles(m);
    return m;
}

Mesh make_revolution(const std::vector<Eigen::Vector2d>& profile, int segments) {
    Mesh m;
    const int rings = static_cast<int>(profile.size());
    for (const auto& rz : profile) {
        for (int s = 0; s < segments; ++s) {
            const double phi = 2.0 * std::numbers::pi * s / segments;
            add_vertex(m, rz.x() * std::cos(phi), rz.x() * std::sin(phi), rz.y());
        }
    }
    for (int r = 0; r + 1 < rings; ++r) {
        for (int s = 0; s < segments; ++s) {
            const int s1 = (s + 1) % segments;
            add_quad(m, r * segments + s, r * segments + s1, (r + 1) * segments + s1,
                     (r + 1) * segments + s);
        }
    }
    // Rings of radius zero collapse into zero-area triangles.
    remove_degenerate_triangles(m);
    return m;
}

Mesh make_cup(double radius, double height, double wall, int segments) {
    const double inner = radius - wall;
    return make_revolution({{0.0, 0.0},
                            {radius, 0.0},
                            {radius, height},
                            {inner, height},
                            {inner, wall},
                            {0.0, wall}},
                           segments);
}

Mesh make_mug(double radius, double height, double wall, int segments) {
    Mesh m = make_cup(radius, height, wall, segments);
    const double reach = 0.8 * radius;
    const double bar = std::max(3.0 * wall, 0.3 * radius);
    // Two struts and an upright grip.
    append_mesh(m, make_box(reach, bar, bar),
                Pose3d::from_translation({radius + 0.5 * reach - 0.5 * wall, 0.0, 0.75 * height}));
    append_mesh(m, make_box(reach, bar, bar),
                Pose3d::from_translation({radius + 0.5 * reach - 0.5 * wall, 0.0, 0.25 * height}));
    append_mesh(m, make_box(bar, bar, 0.5 * height + bar),
                Pose3d::from_translation({radius + reach, 0.0, 0.5 * height}));
    return m;
}

void append_mesh(Mesh& dst, const Mesh& src, const Pose3d& pose) {
    const int offset = static_cast<int>(dst.vertices.size());
    for (const auto& v : src.vertices) dst.vertices.push_back(apply(pose, v));
    for (const auto& t : src.triangles) dst.triangles.push_back(t.array() + offset);
}

Mesh make_cylinder(double radius, double height, int segments) {
    return make_revolution({{0.0, 0.0}, {radius, 0.0}, {radius, height}, {0.0, height}}, segments);
}

Mesh make_bottle(double radius, double height, double neck_radius, int segments) {
    return make_revolution({{0.0, 0.0},
                            {radius, 0.0},
                            {radius, 0.6 * height},
                            {neck_radius, 0.8 * height},
                            {neck_radius, height},
                            {0.0, height}},
                           segments);
}

Mesh make_blade(double length, double width, double thickness) {
    // Stations along +x: (x, half-width, full thickness). Handle, bolster,
    // then a blade tapering to a point.
    const std::vector<Eigen::Vector3d> stations = {
        {0.00 * length, 0.25 * width, 3.0 * thickness},
        {0.04 * length, 0.38 * width, 4.5 * thickness},
        {0.20 * length, 0.45 * width, 6.0 * thickness},
        {0.36 * length, 0.32 * width, 4.0 * thickness},
        {0.40 * length, 0.30 * width, 2.0 * thickness},
        {0.42 * length, 0.50 * width, 1.2 * thickness},
        {0.60 * length, 0.44 * width, 1.0 * thickness},
        {0.80 * length, 0.30 * width, 0.8 * thickness},
        {1.00 * length, 0.02 * width, 0.5 * thickness},
    };
    // Bent along its length; the bottom rises `arch` towards the handle end.
    const double arch = 0.06 * length;
    Mesh m;
    for (const auto& st : stations) {
        const double u = 2.0 * st.x() / length - 1.0;
        const double z0 = u < 0.0 ? arch * u * u : 0.0;
        add_vertex(m, st.x(), -st.y(), z0);
        add_vertex(m, st.x(), st.y(), z0);
        add_vertex(m, st.x(), st.y(), z0 + st.z());
        add_vertex(m, st.x(), -st.y(), z0 + st.z());
    }
    const int n = static_cast<int>(stations.size());
    for (int s = 0; s + 1 < n; ++s) {
        const int a = 4 * s, b = 4 * (s + 1);
        for (int k = 0; k < 4; ++k) {
            const int k1 = (k + 1) % 4;
            add_quad(m, a + k, a + k1, b + k1, b + k);
        }
    }
    add_quad(m, 0, 3, 2, 1);
    const int last = 4 * (n - 1);
    add_quad(m, last + 0, last + 1, last + 2, last + 3);
    remove_degenerate_triangles(m);
    return m;
}

}  // namespace phocal
