#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "phocal/alignment.hpp"
#include "phocal/geom.hpp"

namespace phocal {

/// Calibration board: nominal point geometry in the marker frame and the same
/// points measured with the calibrated tip in the robot base frame.
struct MarkerBoard {
    std::vector<Point3d> board_points;
    std::vector<Point3d> measured_points;
};

struct BoardCheck {
    std::size_t point_count = 12;
    double rigidity_tolerance_mm = 1.0;
};

/// One capture: end-effector pose and the detected marker pose in the camera.
struct HandEyeView {
    Pose3d ee_pose;        ///< T_ee->base
    Pose3d marker_in_cam;  ///< T_marker->cam
};

struct HandEyeResult {
    Pose3d cam_to_ee;
    std::vector<Pose3d> per_view_estimates;
    std::vector<double> per_view_rmse;      ///< mm
    double overall_rmse = 0.0;              ///< mm
    std::vector<std::size_t> flagged_views; ///< rotation > max_view_disagreement_deg from the mean
};

struct HandEyeOptions {
    double max_view_disagreement_deg = 5.0;
};

/// Throws ValidationError on wrong point count, non-finite values or
/// pairwise-distance disagreement above the rigidity tolerance.
void validate(const MarkerBoard& board, const BoardCheck& check = {});

/// T_marker->base from the tip-measured board points.
AlignmentResult marker_from_base(const MarkerBoard& board, const BoardCheck& check = {});

/// Per-view chain inv(ee) * marker_base * inv(marker_in_cam), fused by the
/// chordal mean (quaternion eigen-mean, arithmetic translation mean).
HandEyeResult solve_handeye(std::span<const HandEyeView> views, const Pose3d& marker_base,
                            const MarkerBoard& board, const HandEyeOptions& opts = {});

/// Chordal L2 mean of poses: dominant eigenvector of sum q q^T and the mean
/// translation. Independent of input order up to rounding.
Pose3d chordal_mean(std::span<const Pose3d> poses);

/// RMSE over all board points of all views after mapping board points to the
/// base frame through ee_pose * cam_to_ee * marker_in_cam.
double evaluate_handeye(std::span<const HandEyeView> views, const Pose3d& cam_to_ee,
                        const MarkerBoard& board);

/// Same as evaluate_handeye, one value per view.
std::vector<double> evaluate_handeye_per_view(std::span<const HandEyeView> views,
                                              const Pose3d& cam_to_ee, const MarkerBoard& board);

/// Reported hand-eye accuracies of the physical rig, mm.
inline constexpr double kReferenceHandEyeRmseRgbdMm = 0.89;
inline constexpr double kReferenceHandEyeRmsePolarizationMm = 0.83;

}  // namespace phocal
