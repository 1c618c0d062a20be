#include "phocal/alignment.hpp"

#include <cmath>
#include <string>

namespace phocal {

namespace {

Point3d centroid(std::span<const Point3d> pts) {
    Point3d c = Point3d::Zero();
    for (const auto& p : pts) c += p;
    return c / static_cast<double>(pts.size());
}

}  // namespace

bool is_collinear(std::span<const Point3d> points, double rel_tol) {
    if (points.size() < 3) return true;
    const Point3d c = centroid(points);
    Eigen::MatrixX3d centered(points.size(), 3);
    for (std::size_t i = 0; i < points.size(); ++i) centered.row(static_cast<Eigen::Index>(i)) = (points[i] - c).transpose();
    // SVD of the point matrix itself; the scatter matrix would square the
    // round-off and hide exact collinearity behind ~1e-8 noise.
    const Eigen::Vector3d sv = Eigen::JacobiSVD<Eigen::MatrixX3d>(centered).singularValues();
    if (!(sv(0) > 0.0)) return true;
    return sv(1) / sv(0) < rel_tol;
}

double alignment_rms(const Pose3d& pose, std::span<const Point3d> model,
                     std::span<const Point3d> measured) {
    double sum = 0.0;
    for (std::size_t i = 0; i < model.size(); ++i) {
        sum += (apply(pose, model[i]) - measured[i]).squaredNorm();
    }
    return model.empty() ? 0.0 : std::sqrt(sum / static_cast<double>(model.size()));
}

AlignmentResult absolute_orientation(std::span<const Point3d> model,
                                     std::span<const Point3d> measured) {
    if (model.size() != measured.size()) {
        throw ValidationError("absolute_orientation: point sets differ in size (" +
                              std::to_string(model.size()) + " vs " +
                              std::to_string(measured.size()) + ")");
    }
    if (model.size() < 3) {
        throw DegenerateError("absolute_orientation: need at least 3 point pairs, got " +
                              std::to_string(model.size()));
    }
    if (is_collinear(model)) {
        throw DegenerateError("absolute_orientation: model points are collinear");
    }

    const Point3d cm = centroid(model);
    const Point3d cs = centroid(measured);
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < model.size(); ++i) {
        cov += (measured[i] - cs) * (model[i] - cm).transpose();
    }

    Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
    if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
    const Eigen::Matrix3d r = svd.matrixU() * d * svd.matrixV().transpose();

    AlignmentResult out;
    out.pose.rotation = Rotationd(Eigen::Quaterniond(r));
    out.pose.translation = cs - out.pose.rotation * cm;
    out.residual_rms = alignment_rms(out.pose, model, measured);
    return out;
}

}  // namespace phocal
