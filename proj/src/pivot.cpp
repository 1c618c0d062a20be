#include "phocal/pivot.hpp"

#include <algorithm>
#include <string>

namespace phocal {

double rotation_diversity(const PivotMeasurementSet& m) {
    double best = 0.0;
    for (std::size_t i = 0; i < m.poses.size(); ++i) {
        for (std::size_t j = i + 1; j < m.poses.size(); ++j) {
            best = std::max(best, rotation_distance(m.poses[i].rotation, m.poses[j].rotation));
        }
    }
    return best;
}

void validate(const PivotMeasurementSet& m, const PivotOptions& opts) {
    if (m.poses.size() < 3) {
        throw ValidationError("pivot: need at least 3 poses, got " +
                              std::to_string(m.poses.size()));
    }
    for (const auto& p : m.poses) {
        if (!p.translation.allFinite() || !p.rotation.quaternion().coeffs().allFinite()) {
            throw ValidationError("pivot: non-finite pose");
        }
    }
    const double diversity = rotation_diversity(m);
    if (diversity < opts.min_rotation_diversity_deg) {
        throw DegenerateError("pivot: degenerate configuration, rotational diversity " +
                              std::to_string(diversity) + " deg is below the required " +
                              std::to_string(opts.min_rotation_diversity_deg) + " deg");
    }
}

PivotResult solve_pivot(const PivotMeasurementSet& m, const PivotOptions& opts) {
    validate(m, opts);

    const auto n = static_cast<Eigen::Index>(m.poses.size());
    std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
    if (opts.all_pairs) {
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    } else {
        for (Eigen::Index i = 0; i < n; ++i) pairs.emplace_back(i, (i + 1) % n);
    }

    const auto rows = static_cast<Eigen::Index>(3 * pairs.size());
    Eigen::MatrixXd a(rows, 3);
    Eigen::VectorXd b(rows);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto [i, j] = pairs[k];
        const auto& pi = m.poses[static_cast<std::size_t>(i)];
        const auto& pj = m.poses[static_cast<std::size_t>(j)];
        const auto r = static_cast<Eigen::Index>(3 * k);
        a.middleRows<3>(r) = pi.rotation.matrix() - pj.rotation.matrix();
        // R_i x + t_i = R_j x + t_j  =>  (R_i - R_j) x = t_j - t_i
        b.segment<3>(r) = pj.translation - pi.translation;
    }

    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
    cod.setThreshold(opts.rank_tolerance);
    if (cod.rank() < 3) {
        throw DegenerateError("pivot: degenerate configuration, stacked rotation-difference matrix has rank " +
                              std::to_string(cod.rank()) + " (need 3)");
    }

    PivotResult out;
    out.tip_offset = cod.solve(b);
    Point3d sum = Point3d::Zero();
    for (const auto& p : m.poses) sum += apply(p, out.tip_offset);
    out.pivot_point = sum / static_cast<double>(n);
    out.residual_rms = tip_variance(m, out);
    return out;
}

double tip_variance(const PivotMeasurementSet& m, const PivotResult& r) {
    if (m.poses.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& p : m.poses) sum += (apply(p, r.tip_offset) - r.pivot_point).squaredNorm();
    return std::sqrt(sum / static_cast<double>(m.poses.size()));
}

}  // namespace phocal
