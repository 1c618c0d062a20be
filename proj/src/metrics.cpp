#include "phocal/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "phocal/errors.hpp"
#include "phocal/text.hpp"

namespace phocal {

std::array<Point3d, 8> OrientedBox::corners() const {
    std::array<Point3d, 8> out;
    for (int i = 0; i < 8; ++i) {
        const Point3d local((i & 1 ? 1.0 : -1.0) * half_extents.x(),
                            (i & 2 ? 1.0 : -1.0) * half_extents.y(),
                            (i & 4 ? 1.0 : -1.0) * half_extents.z());
        out[static_cast<std::size_t>(i)] = center + rotation * local;
    }
    return out;
}

void validate(const OrientedBox& box) {
    if (!box.center.allFinite() || !box.half_extents.allFinite() ||
        !(box.half_extents.array() > 0.0).all()) {
        throw ValidationError("oriented box: half extents must be finite and strictly positive");
    }
}

namespace {

using Polygon = std::vector<Point3d>;

struct Face {
    Point3d normal;  // outward, unit
    double offset;   // inside: normal . x <= offset
    Polygon polygon; // cyclic order
};

std::array<Face, 6> faces_of(const OrientedBox& b) {
    const Eigen::Matrix3d r = b.rotation.matrix();
    std::array<Face, 6> out;
    std::size_t f = 0;
    for (int k = 0; k < 3; ++k) {
        const int u = (k + 1) % 3, v = (k + 2) % 3;
        for (const double s : {-1.0, 1.0}) {
            Face face;
            face.normal = s * r.col(k);
            face.offset = face.normal.dot(b.center) + b.half_extents[k];
            const Point3d mid = b.center + s * b.half_extents[k] * r.col(k);
            const Point3d eu = b.half_extents[u] * r.col(u);
            const Point3d ev = b.half_extents[v] * r.col(v);
            face.polygon = {mid + eu + ev, mid - eu + ev, mid - eu - ev, mid + eu - ev};
            out[f++] = std::move(face);
        }
    }
    return out;
}

Polygon clip(const Polygon& poly, const Point3d& n, double offset, double eps) {
    Polygon out;
    if (poly.empty()) return out;
    out.reserve(poly.size() + 2);
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Point3d& p = poly[i];
        const Point3d& q = poly[(i + 1) % poly.size()];
        const double dp = n.dot(p) - offset;
        const double dq = n.dot(q) - offset;
        if (dp <= eps) out.push_back(p);
        if ((dp < -eps && dq > eps) || (dp > eps && dq < -eps)) {
            const double t = dp / (dp - dq);
            out.push_back(p + t * (q - p));
        }
    }
    return out;
}

/// Signed cone volume of a planar polygon with the given outward normal,
/// measured from `origin`.
double cone_volume(const Polygon& poly, const Point3d& normal, const Point3d& origin) {
    if (poly.size() < 3) return 0.0;
    Point3d area2 = Point3d::Zero();
    for (std::size_t i = 1; i + 1 < poly.size(); ++i) {
        area2 += (poly[i] - poly[0]).cross(poly[i + 1] - poly[0]);
    }
    const double area = 0.5 * area2.norm();
    return area * normal.dot(poly[0] - origin) / 3.0;
}

}  // namespace

double intersection_volume(const OrientedBox& a, const OrientedBox& b) {
    validate(a);
    validate(b);
    const double scale = std::max(a.half_extents.maxCoeff(), b.half_extents.maxCoeff()) +
                         (a.center - b.center).norm();
    const double eps = 1e-12 * scale;
    const auto fa = faces_of(a);
    const auto fb = faces_of(b);

    double volume = 0.0;
    // Boundary of the intersection: parts of b's faces inside a, plus parts
    // of a's faces inside b. A face of a coplanar with an equally oriented
    // face of b is already covered by b's face and is skipped.
    for (const auto& face : fb) {
        Polygon p = face.polygon;
        for (const auto& h : fa) p = clip(p, h.normal, h.offset, eps);
        volume += cone_volume(p, face.normal, a.center);
    }
    for (const auto& face : fa) {
        const bool duplicate = std::any_of(fb.begin(), fb.end(), [&](const Face& g) {
            return g.normal.dot(face.normal) > 1.0 - 1e-12 && std::abs(g.offset - face.offset) <= 1e-9 * scale;
        });
        if (duplicate) continue;
        Polygon p = face.polygon;
        for (const auto& h : fb) p = clip(p, h.normal, h.offset, eps);
        volume += cone_volume(p, face.normal, a.center);
    }
    return std::clamp(volume, 0.0, std::min(a.volume(), b.volume()));
}

double iou3d(const OrientedBox& a, const OrientedBox& b) {
    const double inter = intersection_volume(a, b);
    const double uni = a.volume() + b.volume() - inter;
    return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

ApReport average_precision(const DetectionSet& d, double iou_threshold) {
    if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
        throw ValidationError("average_precision: IoU threshold must lie in (0, 1)");
    }
    for (const auto& p : d.predictions) {
        if (!std::isfinite(p.score)) throw ValidationError("average_precision: non-finite score");
    }

    ApReport report;
    report.iou_threshold = iou_threshold;
    std::set<std::string> gt_categories, pred_categories;
    for (const auto& g : d.ground_truth) gt_categories.insert(g.category);
    for (const auto& p : d.predictions) pred_categories.insert(p.category);
    for (const auto& c : pred_categories) {
        if (!gt_categories.count(c)) report.undefined.push_back(c);
    }

    for (const auto& category : gt_categories) {
        std::vector<std::size_t> gts, preds;
        for (std::size_t i = 0; i < d.ground_truth.size(); ++i)
            if (d.ground_truth[i].category == category) gts.push_back(i);
        for (std::size_t i = 0; i < d.predictions.size(); ++i)
            if (d.predictions[i].category == category) preds.push_back(i);
        std::stable_sort(preds.begin(), preds.end(), [&](std::size_t x, std::size_t y) {
            return d.predictions[x].score > d.predictions[y].score;
        });

        std::vector<bool> used(gts.size(), false);
        std::vector<double> precision, recall;
        std::size_t tp = 0;
        for (std::size_t k = 0; k < preds.size(); ++k) {
            double best_iou = -1.0;
            std::size_t best = gts.size();
            for (std::size_t g = 0; g < gts.size(); ++g) {
                if (used[g]) continue;
                const double iou = iou3d(d.predictions[preds[k]].box, d.ground_truth[gts[g]].box);
                if (iou >= iou_threshold && iou > best_iou) {
                    best_iou = iou;
                    best = g;
                }
            }
            if (best < gts.size()) {
                used[best] = true;
                ++tp;
            }
            precision.push_back(static_cast<double>(tp) / static_cast<double>(k + 1));
            recall.push_back(static_cast<double>(tp) / static_cast<double>(gts.size()));
        }

        // Monotone precision envelope, then area under the step curve.
        for (std::size_t k = precision.size(); k-- > 1;) {
            precision[k - 1] = std::max(precision[k - 1], precision[k]);
        }
        double ap = 0.0, prev_recall = 0.0;
        for (std::size_t k = 0; k < precision.size(); ++k) {
            ap += (recall[k] - prev_recall) * precision[k];
            prev_recall = recall[k];
        }
        report.per_category[category] = ap;
    }

    if (!report.per_category.empty()) {
        double sum = 0.0;
        for (const auto& [c, ap] : report.per_category) sum += ap;
        report.mean = sum / static_cast<double>(report.per_category.size());
    }
    return report;
}

double pointwise_rmse(std::span<const Point3d> points, const Pose3d& gt, const Pose3d& est) {
    if (points.empty()) throw ValidationError("pointwise_rmse: empty point list");
    double sum = 0.0;
    for (const auto& p : points) sum += (apply(gt, p) - apply(est, p)).squaredNorm();
    return std::sqrt(sum / static_cast<double>(points.size()));
}

const std::vector<ReferenceLine>& annotation_reference_lines() {
    static const std::vector<ReferenceLine> lines = {
        {"RGBD dataset", "depth map", 17.0, true},
        {"TOD", "multi-view", 3.4, false},
        {"StereOBJ", "multi-view", 2.3, false},
        {"PhoCaL", "robot", 0.80, false},
    };
    return lines;
}

std::string annotation_comparison_table(const std::vector<std::pair<std::string, double>>& achieved) {
    std::vector<std::array<std::string, 3>> rows;
    rows.push_back({"source", "3D labeling", "point RMSE [mm]"});
    for (const auto& r : annotation_reference_lines()) {
        rows.push_back({r.dataset + " (reference)", r.labeling,
                        (r.lower_bound ? ">= " : "") + format_fixed(r.point_rmse_mm, 2)});
    }
    for (const auto& [name, rmse] : achieved) {
        rows.push_back({name + " (simulated)", "robot", format_fixed(rmse, 2)});
    }
    std::array<std::size_t, 3> width{};
    for (const auto& r : rows)
        for (std::size_t c = 0; c < 3; ++c) width[c] = std::max(width[c], r[c].size());
    std::ostringstream out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t c = 0; c < 3; ++c) {
            out << rows[i][c];
            if (c < 2) out << std::string(width[c] - rows[i][c].size() + 2, ' ');
        }
        out << '\n';
        if (i == 0) out << std::string(width[0] + width[1] + width[2] + 4, '-') << '\n';
    }
    return out.str();
}

}  // namespace phocal
