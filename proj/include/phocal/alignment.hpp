#pragma once

#include <span>
#include <vector>

#include "phocal/geom.hpp"

namespace phocal {

/// Paired point sets: measured[i] (robot base frame) corresponds to model[i]
/// (model / marker frame).
struct Correspondences {
    std::vector<Point3d> measured;
    std::vector<Point3d> model;
};

struct AlignmentResult {
    Pose3d pose;                 ///< model -> measured
    double residual_rms = 0.0;   ///< mm
};

/// Closed-form least-squares rigid transform (no scale) mapping model points
/// onto measured points. SVD of the cross-covariance with a determinant
/// correction so a reflection is never returned.
///
/// Throws ValidationError on size mismatch or fewer than 3 pairs, and
/// DegenerateError when the model points are collinear.
AlignmentResult absolute_orientation(std::span<const Point3d> model,
                                     std::span<const Point3d> measured);

inline AlignmentResult absolute_orientation(const Correspondences& c) {
    return absolute_orientation(c.model, c.measured);
}

/// Root mean squared distance between apply(pose, model[i]) and measured[i].
double alignment_rms(const Pose3d& pose, std::span<const Point3d> model,
                     std::span<const Point3d> measured);

/// True when the points span less than a plane (relative tolerance on the
/// second singular value of the centered point matrix).
bool is_collinear(std::span<const Point3d> points, double rel_tol = 1e-9);

}  // namespace phocal
