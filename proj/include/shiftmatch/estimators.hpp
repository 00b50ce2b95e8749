#pragma once

#include "shiftmatch/basis.hpp"
#include "shiftmatch/neighbors.hpp"

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace shiftmatch {

// Labelled source sample plus unlabelled target sample. source_label holds
// the evaluated h(X_i, Y_i); source_y keeps the raw outcomes for the
// sampling-variant estimator which re-evaluates h per target point.
struct Dataset {
    PointSet source_x;
    std::vector<double> source_label;
    std::vector<double> source_y;
    PointSet target_x;

    void validate() const;
};

enum class LabelMode { matching, sampling };

std::string to_string(LabelMode m);
LabelMode label_mode_from_string(const std::string& s);

// h(z, y) evaluated at a target point z and a source outcome y.
using HFunc = std::function<double(std::span<const double>, double)>;

struct EstimatorConfig {
    int k = 0;  // 0 resolves to the default 2*kstar(d, L)
    int L = 0;
    double r0 = 1.0;
    Norm norm = Norm::euclidean;
    LabelMode label_mode = LabelMode::matching;
    double cond_threshold = 1e-10;

    int resolved_k(int d) const;
    // Throws std::invalid_argument when the least-squares problem cannot be
    // well-posed (k < kstar with L >= 1) or parameters are out of range.
    void validate(int d) const;
    // k floor from the theory; below it the estimator is still defined, so
    // callers only warn.
    std::int64_t recommended_k_floor(int d) const;
};

struct EstimateReport {
    double value = 0.0;
    std::optional<std::vector<double>> per_source_weights;
    double censored_fraction = 0.0;
    long fallback_count = 0;
};

struct QueryStats {
    bool censored = false;
    int fallbacks = 0;
};

// Order-0 fit: mean of the k nearest labels if the (k+1)-NN radius is within
// r0, else 0.
double pointwise_matching(const Dataset& data, const NeighborIndex& index, std::span<const double> z,
                          const EstimatorConfig& cfg);

// Order-L local polynomial fit; the prediction is the fitted constant term.
// Falls back to order L-1 when the design matrix is numerically
// rank-deficient, terminating at the order-0 mean.
double pointwise_polynomial(const Dataset& data, const NeighborIndex& index, std::span<const double> z,
                            const EstimatorConfig& cfg, const MultiIndexBasis& basis, QueryStats* stats = nullptr);

// Target-averaged estimator (1/m) sum_j h_hat(X*_j). In sampling mode h is
// required and source labels are replaced by h(X*_j, Y_i) per query.
// want_weights materialises the per-source weight representation (L = 0,
// matching mode only).
EstimateReport estimate_expectation(const Dataset& data, const EstimatorConfig& cfg, const HFunc& h = nullptr,
                                    bool want_weights = false);

struct AtePanel {
    PointSet x;
    std::vector<int> w;     // 0/1 treatment flags
    std::vector<double> y;  // observed outcome y_i(w_i)

    void validate() const;
};

// Returns the panel with flags flipped; observed outcomes stay attached to
// their units.
AtePanel flip(const AtePanel& panel);

struct AteReport {
    double mu_hat = 0.0;
    long censored_treated = 0;  // censored counterfactual queries into arm 1
    long censored_control = 0;  // censored counterfactual queries into arm 0
    long n_treated = 0;
    long n_control = 0;
};

AteReport estimate_ate(const AtePanel& panel, const EstimatorConfig& cfg);

}  // namespace shiftmatch
