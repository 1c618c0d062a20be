#include "phocal/handeye.hpp"

#include <cmath>
#include <string>

namespace phocal {

void validate(const MarkerBoard& board, const BoardCheck& check) {
    if (board.board_points.size() != check.point_count ||
        board.measured_points.size() != check.point_count) {
        throw ValidationError("marker board: expected " + std::to_string(check.point_count) +
                              " board/measured point pairs, got " +
                              std::to_string(board.board_points.size()) + "/" +
                              std::to_string(board.measured_points.size()));
    }
    for (std::size_t i = 0; i < check.point_count; ++i) {
        if (!board.board_points[i].allFinite() || !board.measured_points[i].allFinite()) {
            throw ValidationError("marker board: non-finite point at index " + std::to_string(i));
        }
    }
    for (std::size_t i = 0; i < check.point_count; ++i) {
        for (std::size_t j = i + 1; j < check.point_count; ++j) {
            const double nominal = (board.board_points[i] - board.board_points[j]).norm();
            const double measured = (board.measured_points[i] - board.measured_points[j]).norm();
            if (std::abs(nominal - measured) > check.rigidity_tolerance_mm) {
                throw ValidationError(
                    "marker board: inconsistent measurement, distance between points " +
                    std::to_string(i) + " and " + std::to_string(j) + " is " +
                    std::to_string(measured) + " mm measured vs " + std::to_string(nominal) +
                    " mm nominal (tolerance " + std::to_string(check.rigidity_tolerance_mm) +
                    " mm)");
            }
        }
    }
}

AlignmentResult marker_from_base(const MarkerBoard& board, const BoardCheck& check) {
    validate(board, check);
    if (is_collinear(board.board_points)) {
        throw DegenerateError("marker board: degenerate geometry, board points are collinear");
    }
    return absolute_orientation(board.board_points, board.measured_points);
}

Pose3d chordal_mean(std::span<const Pose3d> poses) {
    if (poses.empty()) throw ValidationError("chordal_mean: empty pose list");
    Eigen::Matrix4d acc = Eigen::Matrix4d::Zero();
    Point3d t = Point3d::Zero();
    for (const auto& p : poses) {
        const Eigen::Vector4d q = p.rotation.quaternion().coeffs();
        acc += q * q.transpose();  // sign-invariant
        t += p.translation;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(acc);
    Eigen::Vector4d q = es.eigenvectors().col(3);
    if (q(3) < 0.0) q = -q;  // coeffs() order is (x, y, z, w)
    Pose3d out;
    out.rotation = Rotationd(Eigen::Quaterniond(q(3), q(0), q(1), q(2)));
    out.translation = t / static_cast<double>(poses.size());
    return out;
}

HandEyeResult solve_handeye(std::span<const HandEyeView> views, const Pose3d& marker_base,
                            const MarkerBoard& board, const HandEyeOptions& opts) {
    if (views.empty()) throw ValidationError("handeye: at least one view is required");

    HandEyeResult out;
    out.per_view_estimates.reserve(views.size());
    for (const auto& v : views) {
        out.per_view_estimates.push_back(invert(v.ee_pose) * marker_base * invert(v.marker_in_cam));
    }
    out.cam_to_ee = views.size() == 1 ? out.per_view_estimates.front()
                                      : chordal_mean(out.per_view_estimates);
    for (std::size_t i = 0; i < out.per_view_estimates.size(); ++i) {
        if (rotation_distance(out.per_view_estimates[i].rotation, out.cam_to_ee.rotation) >
            opts.max_view_disagreement_deg) {
            out.flagged_views.push_back(i);
        }
    }
    out.per_view_rmse = evaluate_handeye_per_view(views, out.cam_to_ee, board);
    out.overall_rmse = evaluate_handeye(views, out.cam_to_ee, board);
    return out;
}

namespace {

double squared_error_sum(const HandEyeView& v, const Pose3d& cam_to_ee, const MarkerBoard& board) {
    const Pose3d marker_to_base = v.ee_pose * cam_to_ee * v.marker_in_cam;
    double sum = 0.0;
    for (std::size_t i = 0; i < board.board_points.size(); ++i) {
        sum += (apply(marker_to_base, board.board_points[i]) - board.measured_points[i]).squaredNorm();
    }
    return sum;
}

}  // namespace

double evaluate_handeye(std::span<const HandEyeView> views, const Pose3d& cam_to_ee,
                        const MarkerBoard& board) {
    if (views.empty() || board.board_points.empty()) return 0.0;
    if (board.board_points.size() != board.measured_points.size()) {
        throw ValidationError("evaluate_handeye: board and measured point counts differ");
    }
    double sum = 0.0;
    for (const auto& v : views) sum += squared_error_sum(v, cam_to_ee, board);
    return std::sqrt(sum / static_cast<double>(views.size() * board.board_points.size()));
}

std::vector<double> evaluate_handeye_per_view(std::span<const HandEyeView> views,
                                              const Pose3d& cam_to_ee, const MarkerBoard& board) {
    std::vector<double> out;
    out.reserve(views.size());
    for (const auto& v : views) {
        out.push_back(std::sqrt(squared_error_sum(v, cam_to_ee, board) /
                                static_cast<double>(board.board_points.size())));
    }
    return out;
}

}  // namespace phocal
