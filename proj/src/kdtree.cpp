#include "lrn/kdtree.hpp"

#include <algorithm>
#include <numeric>
#include <queue>

#include "lrn/errors.hpp"

namespace lrn {

namespace {

double box_distance2(const Eigen::AlignedBox3d& box, const Vec3& q) {
    double d2 = 0.0;
    for (int a = 0; a < 3; ++a) {
        double d = 0.0;
        if (q[a] < box.min()[a]) d = box.min()[a] - q[a];
        else if (q[a] > box.max()[a]) d = q[a] - box.max()[a];
        d2 += d * d;
    }
    return d2;
}

struct Candidate {
    double d2;
    std::size_t index;
    bool operator<(const Candidate& o) const { return d2 < o.d2 || (d2 == o.d2 && index < o.index); }
};

}  // namespace

KdTree::KdTree(std::span<const Vec3> points, std::size_t leaf_size)
    : points_(points), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
    if (points.size() >= std::numeric_limits<std::uint32_t>::max()) throw InvalidInput("KdTree: too many points");
    order_.resize(points.size());
    std::iota(order_.begin(), order_.end(), 0u);
    if (!points.empty()) {
        nodes_.reserve(2 * points.size() / leaf_size_ + 1);
        build(0, static_cast<std::uint32_t>(points.size()));
    }
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({});
    Eigen::AlignedBox3d box;
    for (std::uint32_t i = begin; i < end; ++i) box.extend(points_[order_[i]]);
    nodes_[id].box = box;
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    if (end - begin <= leaf_size_) return id;

    int axis = 0;
    box.sizes().maxCoeff(&axis);
    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                         const double pa = points_[a][axis], pb = points_[b][axis];
                         return pa < pb || (pa == pb && a < b);
                     });
    const auto left = build(begin, mid);
    const auto right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

std::vector<std::size_t> KdTree::knn(const Vec3& query, std::size_t k, std::size_t exclude) const {
    std::vector<std::size_t> out;
    if (k == 0 || nodes_.empty()) return out;

    // max-heap of the best k so far; top() is the current worst
    std::priority_queue<Candidate> best;
    auto worst = [&] { return best.size() < k ? std::numeric_limits<double>::infinity() : best.top().d2; };

    std::vector<std::pair<double, std::int32_t>> stack;
    stack.emplace_back(box_distance2(nodes_[0].box, query), 0);
    while (!stack.empty()) {
        auto [bound, id] = stack.back();
        stack.pop_back();
        // equal bounds must still be visited so smaller indices win ties
        if (bound > worst()) continue;
        const Node& node = nodes_[id];
        if (node.left < 0) {
            for (std::uint32_t i = node.begin; i < node.end; ++i) {
                const std::size_t idx = order_[i];
                if (idx == exclude) continue;
                const Candidate c{(points_[idx] - query).squaredNorm(), idx};
                if (best.size() < k) best.push(c);
                else if (c < best.top()) {
                    best.pop();
                    best.push(c);
                }
            }
            continue;
        }
        const double dl = box_distance2(nodes_[node.left].box, query);
        const double dr = box_distance2(nodes_[node.right].box, query);
        // push the farther child first so the nearer one is popped next
        if (dl <= dr) {
            stack.emplace_back(dr, node.right);
            stack.emplace_back(dl, node.left);
        } else {
            stack.emplace_back(dl, node.left);
            stack.emplace_back(dr, node.right);
        }
    }
    out.resize(best.size());
    for (std::size_t i = out.size(); i-- > 0;) {
        out[i] = best.top().index;
        best.pop();
    }
    return out;
}

std::vector<std::size_t> KdTree::radius_search(const Vec3& query, double radius, std::size_t exclude) const {
    std::vector<std::size_t> out;
    if (nodes_.empty() || !(radius >= 0.0)) return out;
    const double r2 = radius * radius;
    std::vector<std::int32_t> stack{0};
    while (!stack.empty()) {
        const Node& node = nodes_[stack.back()];
        stack.pop_back();
        if (box_distance2(node.box, query) > r2) continue;
        if (node.left < 0) {
            for (std::uint32_t i = node.begin; i < node.end; ++i) {
                const std::size_t idx = order_[i];
                if (idx != exclude && (points_[idx] - query).squaredNorm() <= r2) out.push_back(idx);
            }
            continue;
        }
        stack.push_back(node.left);
        stack.push_back(node.right);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::pair<std::size_t, double> KdTree::nearest(const Vec3& query) const {
    if (nodes_.empty()) throw InvalidInput("KdTree::nearest on empty tree");
    const auto idx = knn(query, 1).front();
    return {idx, (points_[idx] - query).squaredNorm()};
}

}  // namespace lrn
