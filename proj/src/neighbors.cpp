#include "shiftmatch/neighbors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace shiftmatch {

std::string to_string(Norm n) {
    switch (n) {
        case Norm::euclidean: return "euclidean";
        case Norm::l1: return "l1";
        case Norm::linf: return "linf";
    }
    return "euclidean";
}

Norm norm_from_string(const std::string& s) {
    if (s == "euclidean" || s == "l2") return Norm::euclidean;
    if (s == "l1") return Norm::l1;
    if (s == "linf") return Norm::linf;
    throw std::invalid_argument("unknown norm: " + s);
}

// Accumulation order is fixed (j ascending); the kd-tree box bound below uses
// the same order so that bound <= distance holds in floating point, not just
// in exact arithmetic.
double distance(std::span<const double> a, std::span<const double> b, Norm norm) {
    if (a.size() != b.size()) throw std::invalid_argument("distance: dimension mismatch");
    switch (norm) {
        case Norm::euclidean: {
            double s = 0.0;
            for (std::size_t j = 0; j < a.size(); ++j) {
                const double d = a[j] - b[j];
                s += d * d;
            }
            return std::sqrt(s);
        }
        case Norm::l1: {
            double s = 0.0;
            for (std::size_t j = 0; j < a.size(); ++j) s += std::abs(a[j] - b[j]);
            return s;
        }
        case Norm::linf: {
            double s = 0.0;
            for (std::size_t j = 0; j < a.size(); ++j) s = std::max(s, std::abs(a[j] - b[j]));
            return s;
        }
    }
    return 0.0;
}

void PointSet::validate() const {
    if (rows.rows() < 1) throw std::invalid_argument("PointSet: need at least one point");
    if (rows.cols() < 1) throw std::invalid_argument("PointSet: need dimension >= 1");
    if (!rows.allFinite()) throw std::invalid_argument("PointSet: coordinates must be finite");
}

PointSet make_point_set(const std::vector<std::vector<double>>& pts, Norm norm) {
    if (pts.empty()) throw std::invalid_argument("make_point_set: empty input");
    const std::size_t d = pts.front().size();
    RowMatrixXd m(static_cast<Eigen::Index>(pts.size()), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (pts[i].size() != d) throw std::invalid_argument("make_point_set: ragged rows");
        for (std::size_t j = 0; j < d; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = pts[i][j];
    }
    PointSet ps{std::move(m), norm};
    ps.validate();
    return ps;
}

namespace {

// (distance, index) pairs ordered lexicographically; the canonical k-NN set
// is the k smallest pairs under this order.
struct PairLess {
    bool operator()(const std::pair<double, int>& a, const std::pair<double, int>& b) const {
        if (a.first != b.first) return a.first < b.first;
        return a.second < b.second;
    }
};

NeighborResult finalize(std::vector<std::pair<double, int>>& best, int k) {
    std::sort(best.begin(), best.end(), PairLess{});
    NeighborResult out;
    const int have = static_cast<int>(best.size());
    const int take = std::min(k, have);
    out.indices.reserve(static_cast<std::size_t>(take));
    for (int i = 0; i < take; ++i) out.indices.push_back(best[static_cast<std::size_t>(i)].second);
    out.radius = have > k ? best[static_cast<std::size_t>(k)].first : std::numeric_limits<double>::infinity();
    return out;
}

}  // namespace

NeighborResult brute_force_knn(const PointSet& points, std::span<const double> z, int k) {
    if (k < 1) throw std::invalid_argument("knn: k must be >= 1");
    if (static_cast<int>(z.size()) != points.dim()) throw std::invalid_argument("knn: query dimension mismatch");
    const int n = points.size();
    const int cap = std::min(n, k + 1);
    std::vector<std::pair<double, int>> heap;  // max-heap of the cap best
    heap.reserve(static_cast<std::size_t>(cap) + 1);
    for (int i = 0; i < n; ++i) {
        const std::pair<double, int> cand{distance(points.point(i), z, points.norm), i};
        if (static_cast<int>(heap.size()) < cap) {
            heap.push_back(cand);
            std::push_heap(heap.begin(), heap.end(), PairLess{});
        } else if (PairLess{}(cand, heap.front())) {
            std::pop_heap(heap.begin(), heap.end(), PairLess{});
            heap.back() = cand;
            std::push_heap(heap.begin(), heap.end(), PairLess{});
        }
    }
    return finalize(heap, k);
}

NeighborIndex::NeighborIndex(PointSet points, std::optional<Norm> norm_override) : points_(std::move(points)) {
    if (norm_override) points_.norm = *norm_override;
    points_.validate();
    use_tree_ = points_.dim() <= kMaxTreeDim && points_.size() > 32;
    if (!use_tree_) return;
    order_.resize(static_cast<std::size_t>(points_.size()));
    std::iota(order_.begin(), order_.end(), 0);
    nodes_.reserve(static_cast<std::size_t>(2 * points_.size() / 8 + 8));
    build_node(0, points_.size());
}

int NeighborIndex::build_node(int begin, int end) {
    const int node_id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    Node& node = nodes_.back();
    node.begin = begin;
    node.end = end;
    const int d = points_.dim();
    for (int j = 0; j < d; ++j) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (int i = begin; i < end; ++i) {
            const double v = points_.rows(order_[static_cast<std::size_t>(i)], j);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        node.box_lo[j] = lo;
        node.box_hi[j] = hi;
    }
    constexpr int kLeafSize = 16;
    if (end - begin <= kLeafSize) return node_id;

    int axis = 0;
    double width = -1.0;
    for (int j = 0; j < d; ++j) {
        const double w = node.box_hi[j] - node.box_lo[j];
        if (w > width) {
            width = w;
            axis = j;
        }
    }
    if (width <= 0.0) return node_id;  // all points identical: keep as leaf

    const int mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end, [&](int a, int b) {
        const double va = points_.rows(a, axis), vb = points_.rows(b, axis);
        if (va != vb) return va < vb;
        return a < b;
    });
    // nodes_ may reallocate during recursion; write through the vector.
    nodes_[static_cast<std::size_t>(node_id)].axis = axis;
    nodes_[static_cast<std::size_t>(node_id)].split = points_.rows(order_[static_cast<std::size_t>(mid)], axis);
    const int left = build_node(begin, mid);
    nodes_[static_cast<std::size_t>(node_id)].left = left;
    const int right = build_node(mid, end);
    nodes_[static_cast<std::size_t>(node_id)].right = right;
    return node_id;
}

namespace {

// Distance from query to an axis-aligned box, same accumulation order as
// distance() so the bound never exceeds the true point distance in fp.
double box_distance(const double* lo, const double* hi, std::span<const double> z, Norm norm) {
    switch (norm) {
        case Norm::euclidean: {
            double s = 0.0;
            for (std::size_t j = 0; j < z.size(); ++j) {
                double d = 0.0;
                if (z[j] < lo[j]) d = lo[j] - z[j];
                else if (z[j] > hi[j]) d = z[j] - hi[j];
                s += d * d;
            }
            return std::sqrt(s);
        }
        case Norm::l1: {
            double s = 0.0;
            for (std::size_t j = 0; j < z.size(); ++j) {
                if (z[j] < lo[j]) s += lo[j] - z[j];
                else if (z[j] > hi[j]) s += z[j] - hi[j];
            }
            return s;
        }
        case Norm::linf: {
            double s = 0.0;
            for (std::size_t j = 0; j < z.size(); ++j) {
                if (z[j] < lo[j]) s = std::max(s, lo[j] - z[j]);
                else if (z[j] > hi[j]) s = std::max(s, z[j] - hi[j]);
            }
            return s;
        }
    }
    return 0.0;
}

}  // namespace

void NeighborIndex::query_node(int node_id, std::span<const double> z, int cap,
                               std::vector<std::pair<double, int>>& heap) const {
    const Node& node = nodes_[static_cast<std::size_t>(node_id)];
    // Prune only on strict excess: points tying the current worst distance
    // may still displace it through the index tie-break.
    if (static_cast<int>(heap.size()) == cap &&
        box_distance(node.box_lo, node.box_hi, z, points_.norm) > heap.front().first) {
        return;
    }
    if (node.left < 0) {
        for (int i = node.begin; i < node.end; ++i) {
            const int idx = order_[static_cast<std::size_t>(i)];
            const std::pair<double, int> cand{distance(points_.point(idx), z, points_.norm), idx};
            if (static_cast<int>(heap.size()) < cap) {
                heap.push_back(cand);
                std::push_heap(heap.begin(), heap.end(), PairLess{});
            } else if (PairLess{}(cand, heap.front())) {
                std::pop_heap(heap.begin(), heap.end(), PairLess{});
                heap.back() = cand;
                std::push_heap(heap.begin(), heap.end(), PairLess{});
            }
        }
        return;
    }
    // Descend toward the query side first.
    const bool left_first = z[static_cast<std::size_t>(node.axis)] < node.split;
    query_node(left_first ? node.left : node.right, z, cap, heap);
    query_node(left_first ? node.right : node.left, z, cap, heap);
}

NeighborResult NeighborIndex::knn(std::span<const double> z, int k) const {
    if (!use_tree_) return brute_force_knn(points_, z, k);
    if (k < 1) throw std::invalid_argument("knn: k must be >= 1");
    if (static_cast<int>(z.size()) != points_.dim()) throw std::invalid_argument("knn: query dimension mismatch");
    const int cap = std::min(points_.size(), k + 1);
    std::vector<std::pair<double, int>> heap;
    heap.reserve(static_cast<std::size_t>(cap) + 1);
    query_node(0, z, cap, heap);
    return finalize(heap, k);
}

}  // namespace shiftmatch
