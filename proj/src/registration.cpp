#include "phocal/registration.hpp"

#include <cmath>
#include <string>

namespace phocal {

void validate(const IcpParams& p) {
    if (p.max_iterations <= 0) throw ValidationError("icp: max_iterations must be positive");
    if (!(p.converge_translation_mm > 0.0) || !(p.converge_rotation_deg > 0.0)) {
        throw ValidationError("icp: convergence thresholds must be positive");
    }
    if (!(p.max_correspondence_mm > 0.0)) {
        throw ValidationError("icp: correspondence distance cap must be positive");
    }
    if (p.surface_samples == 0) throw ValidationError("icp: surface sample count must be positive");
}

IcpTarget::IcpTarget(const Mesh& mesh, std::size_t sample_count, RngStream& rng)
    : index_(sample_surface(mesh, sample_count, rng)) {}

IcpTarget::IcpTarget(std::vector<Point3d> samples) : index_(std::move(samples)) {
    if (index_.empty()) throw ValidationError("icp: empty target sample set");
}

IcpResult icp_refine(std::span<const Point3d> measured, const IcpTarget& target,
                     const Pose3d& initial, const IcpParams& params) {
    validate(params);
    if (measured.size() < 3) {
        throw ValidationError("icp: need at least 3 measured points, got " +
                              std::to_string(measured.size()));
    }

    IcpResult out;
    out.pose = initial;
    std::vector<Point3d> model_pts, base_pts;
    model_pts.reserve(measured.size());
    base_pts.reserve(measured.size());

    for (int it = 0; it < params.max_iterations; ++it) {
        const Pose3d to_model = invert(out.pose);
        model_pts.clear();
        base_pts.clear();
        double sum_sq = 0.0;
        for (const auto& m : measured) {
            const auto nn = target.index().nearest(apply(to_model, m));
            if (std::sqrt(nn.squared_distance) > params.max_correspondence_mm) continue;
            model_pts.push_back(target.samples()[nn.index]);
            base_pts.push_back(m);
            sum_sq += nn.squared_distance;
        }
        if (model_pts.size() < 3 || is_collinear(model_pts)) break;
        out.rms_history.push_back(std::sqrt(sum_sq / static_cast<double>(model_pts.size())));

        const Pose3d next = absolute_orientation(model_pts, base_pts).pose;
        const PoseError delta = pose_error(out.pose, next);
        out.pose = next;
        out.iterations = it + 1;
        if (delta.translation_mm < params.converge_translation_mm &&
            delta.rotation_deg < params.converge_rotation_deg) {
            out.converged = true;
            break;
        }
    }

    const Pose3d to_model = invert(out.pose);
    double sum = 0.0;
    for (const auto& m : measured) {
        sum += std::sqrt(target.index().nearest(apply(to_model, m)).squared_distance);
    }
    out.mean_distance = sum / static_cast<double>(measured.size());
    return out;
}

IcpResult icp_refine(std::span<const Point3d> measured, const Mesh& mesh, const Pose3d& initial,
                     const IcpParams& params, RngStream& rng) {
    validate(params);
    const IcpTarget target(mesh, params.surface_samples, rng);
    return icp_refine(measured, target, initial, params);
}

AnnotationResult annotate_object(const Correspondences& keypoints,
                                 std::span<const Point3d> surface_points, const IcpTarget& target,
                                 const IcpParams& params) {
    AnnotationResult out;
    out.initial = absolute_orientation(keypoints);
    out.refined = icp_refine(surface_points, target, out.initial.pose, params);
    return out;
}

}  // namespace phocal
