#pragma once

#include "shiftmatch/neighbors.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace shiftmatch {

struct WeightDiagnostics {
    double objective = 0.0;
    int iterations = 0;
    double constraint_residual = 0.0;
    std::vector<double> objective_trace;
};

struct WeightVector {
    std::vector<double> weights;
    std::string method;
    WeightDiagnostics diag;
};

// Infeasible reference: the plain mean of the true target labels.
double oracle_estimate(std::span<const double> target_labels);

// Median pairwise distance of the pooled source+target sample; the usual
// bandwidth heuristic for the Gaussian kernel below.
double median_pairwise_distance(const PointSet& source, const PointSet& target);

struct KmmOptions {
    double bandwidth = 0.0;  // <= 0: median heuristic
    double B = 1000.0;
    double eps = -1.0;  // < 0: (sqrt(n)-1)/sqrt(n)
    int max_iter = 2000;
    double tol = 1e-8;
};

// Kernel mean matching by projected gradient descent on the box
// 0 <= beta <= B with |mean(beta) - 1| <= eps. The projection is exact
// (clip-and-shift), so every iterate is feasible and the recorded objective
// trace is non-increasing.
WeightVector kmm_weights(const PointSet& source_x, const PointSet& target_x, const KmmOptions& opt = {});

struct KliepOptions {
    int centers = 100;  // capped at m
    double bandwidth = 0.0;  // <= 0: median heuristic
    int max_iter = 2000;
    double tol = 1e-8;
    std::uint64_t seed = 0x6b6c696570ULL;  // center subsample stream
};

// KLIEP with Gaussian kernel centers on a target subsample, fitted by
// multiplicative (EM) updates under the constraint mean_i w(X_i) = 1. The
// log-likelihood trace is non-decreasing.
WeightVector kliep_weights(const PointSet& source_x, const PointSet& target_x, const KliepOptions& opt = {});

// (1/n) sum_i weights_i * label_i.
double weighted_estimate(std::span<const double> source_label, const WeightVector& weights);

}  // namespace shiftmatch
