#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Geometry>

#include "lrn/core_math.hpp"

namespace lrn {

/// Static 3-d tree over a borrowed array of positions. The positions must
/// outlive the tree and must not change while it is in use.
class KdTree {
public:
    static constexpr std::size_t kNoExclude = std::numeric_limits<std::size_t>::max();

    explicit KdTree(std::span<const Vec3> points, std::size_t leaf_size = 12);

    /// The k nearest points to `query`, ascending by (distance, index).
    /// `exclude` is skipped (use it to leave a query point out of its own list).
    std::vector<std::size_t> knn(const Vec3& query, std::size_t k, std::size_t exclude = kNoExclude) const;

    /// All indices with |p - query| <= radius, ascending by index.
    std::vector<std::size_t> radius_search(const Vec3& query, double radius,
                                           std::size_t exclude = kNoExclude) const;

    /// Index and squared distance of the nearest point.
    std::pair<std::size_t, double> nearest(const Vec3& query) const;

    std::size_t size() const noexcept { return points_.size(); }

private:
    struct Node {
        Eigen::AlignedBox3d box;
        std::uint32_t begin = 0, end = 0;   // range in order_
        std::int32_t left = -1, right = -1;
    };

    std::int32_t build(std::uint32_t begin, std::uint32_t end);

    std::span<const Vec3> points_;
    std::size_t leaf_size_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
};

}  // namespace lrn
