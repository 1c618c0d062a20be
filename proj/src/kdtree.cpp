#include "phocal/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "phocal/mesh.hpp"

namespace phocal {

KdTree::KdTree(std::vector<Point3d> points, std::size_t leaf_size)
    : points_(std::move(points)), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
    if (points_.size() >= std::numeric_limits<std::uint32_t>::max()) {
        throw ValidationError("KdTree: too many points");
    }
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0u);
    nodes_.reserve(2 * points_.size() / leaf_size_ + 1);
    if (!points_.empty()) build(0, static_cast<std::uint32_t>(points_.size()));
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(Node{begin, end});
    if (end - begin <= leaf_size_) return id;

    Aabb bounds;
    for (auto i = begin; i < end; ++i) {
        bounds.min = bounds.min.cwiseMin(points_[order_[i]]);
        bounds.max = bounds.max.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (bounds.max - bounds.min).maxCoeff(&axis);

    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                         return points_[a][axis] < points_[b][axis];
                     });
    const double split = points_[order_[mid]][axis];
    const auto left = build(begin, mid);
    const auto right = build(mid, end);
    Node& n = nodes_[static_cast<std::size_t>(id)];
    n.axis = axis;
    n.split = split;
    n.left = left;
    n.right = right;
    return id;
}

void KdTree::search(std::int32_t node_id, const Point3d& q, Neighbor& best) const {
    const Node& n = nodes_[static_cast<std::size_t>(node_id)];
    if (n.left < 0) {
        for (auto i = n.begin; i < n.end; ++i) {
            const auto idx = order_[i];
            const double d = (points_[idx] - q).squaredNorm();
            if (d < best.squared_distance || (d == best.squared_distance && idx < best.index)) {
                best = {idx, d};
            }
        }
        return;
    }
    // Left subtree holds coordinates <= split, right holds >= split.
    const double diff = q[n.axis] - n.split;
    const auto near = diff <= 0.0 ? n.left : n.right;
    const auto far = diff <= 0.0 ? n.right : n.left;
    search(near, q, best);
    if (diff * diff <= best.squared_distance) search(far, q, best);
}

KdTree::Neighbor KdTree::nearest(const Point3d& query) const {
    Neighbor best{std::numeric_limits<std::size_t>::max(), std::numeric_limits<double>::infinity()};
    search(0, query, best);
    return best;
}

}  // namespace phocal
