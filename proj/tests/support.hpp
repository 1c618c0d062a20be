#pragma once

// Shared fixtures for the unit tests. Oracles here deliberately go through
// plain Eigen matrices rather than the library's quaternion code.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "phocal/geom.hpp"

namespace phocal::test {

inline Pose3d random_pose(RngStream& rng, double max_translation = 500.0) {
    return {random_rotation(rng),
            Point3d(rng.uniform(-max_translation, max_translation), rng.uniform(-max_translation, max_translation),
                    rng.uniform(-max_translation, max_translation))};
}

inline Eigen::Matrix4d homogeneous(const Pose3d& p) {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = p.rotation.quaternion().toRotationMatrix();
    m.topRightCorner<3, 1>() = p.translation;
    return m;
}

/// Geodesic angle from the rotation matrix trace, degrees.
inline double angle_from_trace(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
    const double c = std::clamp(((a.transpose() * b).trace() - 1.0) / 2.0, -1.0, 1.0);
    return std::acos(c) * 180.0 / std::numbers::pi;
}

/// Rodrigues rotation matrix, independent of Eigen::AngleAxis.
inline Eigen::Matrix3d rodrigues(const Eigen::Vector3d& axis, double deg) {
    const double th = deg * std::numbers::pi / 180.0;
    Eigen::Matrix3d k;
    k << 0, -axis.z(), axis.y(), axis.z(), 0, -axis.x(), -axis.y(), axis.x(), 0;
    return Eigen::Matrix3d::Identity() + std::sin(th) * k + (1.0 - std::cos(th)) * k * k;
}

/// End-effector poses pivoting about `pivot` with the tip at `offset` in the
/// end-effector frame: t_i = pivot - R_i * offset.
inline std::vector<Pose3d> pivot_poses(const Point3d& offset, const Point3d& pivot, std::size_t n,
                                       double spread_deg, RngStream& rng) {
    std::vector<Pose3d> out;
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector3d axis = random_unit_vector(rng);
        const Eigen::Matrix3d r = rodrigues(axis, rng.uniform(0.3, 1.0) * spread_deg);
        const Rotationd rot = Rotationd::from_matrix(r);
        out.push_back({rot, pivot - r * offset});
    }
    return out;
}

}  // namespace phocal::test
