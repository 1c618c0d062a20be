#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "phocal/alignment.hpp"
#include "phocal/kdtree.hpp"
#include "phocal/mesh.hpp"

namespace phocal {

struct IcpParams {
    int max_iterations = 100;
    double converge_translation_mm = 1e-4;
    double converge_rotation_deg = 1e-4;
    /// Pairs farther apart than this are ignored; infinity disables the cap.
    double max_correspondence_mm = std::numeric_limits<double>::infinity();
    std::size_t surface_samples = 50'000;
};

/// Throws ValidationError unless every parameter is positive.
void validate(const IcpParams& p);

/// Dense surface samples of a mesh plus their spatial index; the ICP target.
class IcpTarget {
public:
    IcpTarget(const Mesh& mesh, std::size_t sample_count, RngStream& rng);
    explicit IcpTarget(std::vector<Point3d> samples);

    const KdTree& index() const { return index_; }
    const std::vector<Point3d>& samples() const { return index_.points(); }

private:
    KdTree index_;
};

struct IcpResult {
    Pose3d pose;  ///< model -> base
    int iterations = 0;
    bool converged = false;
    /// Mean nearest-sample distance at the final pose, mm.
    double mean_distance = 0.0;
    /// RMS correspondence distance at the start of each iteration; ICP
    /// minimizes this, so the sequence is non-increasing without a cap.
    std::vector<double> rms_history;
};

/// Point-to-point ICP refining the model-to-base pose so the measured points
/// (base frame) lie on the model surface. Non-convergence within
/// max_iterations is reported through `converged`, not thrown.
IcpResult icp_refine(std::span<const Point3d> measured, const IcpTarget& target,
                     const Pose3d& initial, const IcpParams& params = {});

IcpResult icp_refine(std::span<const Point3d> measured, const Mesh& mesh, const Pose3d& initial,
                     const IcpParams& params, RngStream& rng);

/// Full annotation: keypoint correspondences give the initial pose, ICP on
/// the surface points refines it.
struct AnnotationResult {
    AlignmentResult initial;
    IcpResult refined;
};

AnnotationResult annotate_object(const Correspondences& keypoints,
                                 std::span<const Point3d> surface_points, const IcpTarget& target,
                                 const IcpParams& params = {});

/// Reported recovery accuracy of the tip + ICP annotation.
inline constexpr double kReferenceIcpTranslationMm = 0.20;
inline constexpr double kReferenceIcpRotationDeg = 0.38;

}  // namespace phocal
