#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "phocal/geom.hpp"

namespace phocal {

struct OrientedBox {
    Point3d center = Point3d::Zero();         ///< mm
    Eigen::Vector3d half_extents = Eigen::Vector3d::Ones();  ///< mm, strictly positive
    Rotationd rotation;

    double volume() const { return 8.0 * half_extents.prod(); }
    bool contains(const Point3d& p) const {
        const Point3d local = rotation.inverse() * (p - center);
        return (local.cwiseAbs().array() <= half_extents.array()).all();
    }
    std::array<Point3d, 8> corners() const;
};

/// Throws ValidationError for non-positive or non-finite extents.
void validate(const OrientedBox& box);

/// Exact intersection-over-union of two oriented boxes. The intersection is
/// the convex polytope bounded by the faces of each box clipped against the
/// other box's half-spaces; its volume follows from the divergence theorem.
double iou3d(const OrientedBox& a, const OrientedBox& b);

/// Volume of the intersection of two oriented boxes, mm^3.
double intersection_volume(const OrientedBox& a, const OrientedBox& b);

/// PhoCaL object categories.
inline const std::array<std::string, 8> kCategories = {"bottle", "box",    "can",     "cup",
                                                       "remote", "teapot", "cutlery", "glassware"};

struct Detection {
    std::string category;
    OrientedBox box;
    double score = 0.0;
};

struct GroundTruthBox {
    std::string category;
    OrientedBox box;
};

struct DetectionSet {
    std::vector<Detection> predictions;
    std::vector<GroundTruthBox> ground_truth;
};

struct ApReport {
    double iou_threshold = 0.0;
    std::map<std::string, double> per_category;  ///< categories with ground truth
    std::vector<std::string> undefined;          ///< predicted but no ground truth
    double mean = 0.0;                           ///< over per_category
};

/// Score-descending greedy matching (each ground truth used at most once,
/// best-IoU unmatched partner at or above the threshold), then the area under
/// the all-points interpolated precision/recall curve. Ties in score keep
/// input order. Throws ValidationError unless 0 < threshold < 1.
ApReport average_precision(const DetectionSet& d, double iou_threshold);

/// Root mean squared distance between apply(gt, p) and apply(est, p), mm.
/// Throws ValidationError for an empty point list.
double pointwise_rmse(std::span<const Point3d> points, const Pose3d& gt, const Pose3d& est);

/// Point RMSE of other annotation pipelines, for comparison against simulated runs.
struct ReferenceLine {
    std::string dataset;
    std::string labeling;
    double point_rmse_mm;
    bool lower_bound;  ///< value is a lower bound ("at least")
};

const std::vector<ReferenceLine>& annotation_reference_lines();

/// Aligned-text comparison of achieved per-camera RMSE against the
/// reference lines.
std::string annotation_comparison_table(const std::vector<std::pair<std::string, double>>& achieved);

}  // namespace phocal
