#pragma once

#include <vector>

#include "phocal/geom.hpp"

namespace phocal {

/// End-effector poses T_ee->base recorded while the tool tip rests on one
/// fixed point.
struct PivotMeasurementSet {
    std::vector<Pose3d> poses;
};

struct PivotOptions {
    /// Poses must span at least this much rotation (max pairwise angle).
    double min_rotation_diversity_deg = 10.0;
    /// Stack every pose pair instead of consecutive pairs plus the closing row.
    bool all_pairs = false;
    /// Relative singular-value threshold for the rank decision.
    double rank_tolerance = 1e-9;
};

struct PivotResult {
    Point3d tip_offset = Point3d::Zero();   ///< tip in end-effector frame, mm
    Point3d pivot_point = Point3d::Zero();  ///< tip in base frame, mm
    double residual_rms = 0.0;              ///< mm
};

/// Throws ValidationError for fewer than 3 poses and DegenerateError when the
/// rotational diversity precheck fails.
void validate(const PivotMeasurementSet& m, const PivotOptions& opts = {});

/// Largest pairwise rotation_distance over the set, degrees.
double rotation_diversity(const PivotMeasurementSet& m);

/// Minimum-norm least-squares tip offset from stacked pose differences
///
///   [R_1 - R_2; R_2 - R_3; ...; R_n - R_1] * offset = [t_2 - t_1; ...; t_1 - t_n]
///
/// solved with a complete orthogonal decomposition. A rank below 3 raises
/// DegenerateError naming the rank.
PivotResult solve_pivot(const PivotMeasurementSet& m, const PivotOptions& opts = {});

/// Root mean squared distance of the per-pose tip locations from the pivot
/// point; the spread figure used to judge a tip calibration.
double tip_variance(const PivotMeasurementSet& m, const PivotResult& r);

/// Reference value for the spread of a physical tip calibration, mm.
inline constexpr double kReferenceTipVarianceMm = 0.057;

}  // namespace phocal
