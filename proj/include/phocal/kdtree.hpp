#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "phocal/geom.hpp"

namespace phocal {

/// Static 3-D kd-tree over a point set for exact nearest-neighbor queries.
///
/// Built once by median splits on the widest axis; nodes are stored in an
/// implicit array over a permuted index list, so there are no per-node
/// allocations.
class KdTree {
public:
    struct Neighbor {
        std::size_t index = 0;  ///< index into the original point list
        double squared_distance = 0.0;
    };

    KdTree() = default;
    explicit KdTree(std::vector<Point3d> points, std::size_t leaf_size = 8);

    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }
    const std::vector<Point3d>& points() const { return points_; }

    /// Exact nearest neighbor. Ties resolve to the lowest original index.
    /// Precondition: !empty().
    Neighbor nearest(const Point3d& query) const;

private:
    struct Node {
        std::uint32_t begin = 0, end = 0;  // range in order_
        std::int32_t left = -1, right = -1;
        int axis = 0;
        double split = 0.0;
    };

    std::int32_t build(std::uint32_t begin, std::uint32_t end);
    void search(std::int32_t node, const Point3d& q, Neighbor& best) const;

    std::vector<Point3d> points_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
    std::size_t leaf_size_ = 8;
};

}  // namespace phocal
