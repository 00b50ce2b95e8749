#pragma once

#include <Eigen/Core>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace shiftmatch {

enum class Norm { euclidean, l1, linf };

std::string to_string(Norm n);
Norm norm_from_string(const std::string& s);

double distance(std::span<const double> a, std::span<const double> b, Norm norm);

// Row-major so that point(i) can hand out a contiguous span.
using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct PointSet {
    RowMatrixXd rows;  // n x d
    Norm norm = Norm::euclidean;

    int size() const { return static_cast<int>(rows.rows()); }
    int dim() const { return static_cast<int>(rows.cols()); }
    std::span<const double> point(int i) const {
        return {rows.data() + static_cast<std::ptrdiff_t>(i) * rows.cols(), static_cast<std::size_t>(rows.cols())};
    }
    void validate() const;
};

PointSet make_point_set(const std::vector<std::vector<double>>& pts, Norm norm = Norm::euclidean);

// Indices of the k nearest points (nearest first) and the (k+1)-th NN
// distance. Ties are broken by point index, so results are deterministic on
// discrete data. radius is +inf when fewer than k+1 points exist.
struct NeighborResult {
    std::vector<int> indices;
    double radius = 0.0;
};

NeighborResult brute_force_knn(const PointSet& points, std::span<const double> z, int k);

// Exact k-NN index. A kd-tree for moderate dimensions; above
// kMaxTreeDim the tree degenerates and queries fall back to a linear scan.
// Queries agree with brute_force_knn bit-for-bit, including tie handling.
class NeighborIndex {
  public:
    static constexpr int kMaxTreeDim = 16;

    explicit NeighborIndex(PointSet points, std::optional<Norm> norm_override = std::nullopt);

    NeighborResult knn(std::span<const double> z, int k) const;

    const PointSet& points() const { return points_; }
    int size() const { return points_.size(); }
    int dim() const { return points_.dim(); }

  private:
    struct Node {
        double box_lo[kMaxTreeDim];
        double box_hi[kMaxTreeDim];
        int begin = 0, end = 0;  // range in order_
        int left = -1, right = -1;
        int axis = -1;
        double split = 0.0;
    };

    int build_node(int begin, int end);
    void query_node(int node, std::span<const double> z, int cap, std::vector<std::pair<double, int>>& heap) const;

    PointSet points_;
    bool use_tree_ = false;
    std::vector<int> order_;
    std::vector<Node> nodes_;
};

}  // namespace shiftmatch
