#pragma once

#include "shiftmatch/synthdata.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace shiftmatch {

// Methods from the experiments: NN estimators, importance-weighting
// baselines, and the infeasible oracle.
enum class Method { matching, sampling, poly_l_m, poly_l_s, kmm, kliep, oracle };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct MethodSpec {
    Method method = Method::matching;
    int k = 0;  // 0: k=1 for matching/sampling, 2*kstar(d, L) for poly
    int L = 2;  // poly methods only
    double r0 = 1.0;

    std::string display_name() const;
    int resolved_k(int d) const;
};

enum class GridKind { sample_size, mu_p };

struct ExperimentConfig {
    SetupConfig setup;  // n, m, mu_p act as the fixed values off the grid axis
    std::vector<MethodSpec> methods;
    GridKind grid_kind = GridKind::sample_size;
    std::vector<double> grid;
    int replications = 200;
    std::uint64_t seed = 0;

    void validate() const;
};

struct BenchRow {
    std::string method;
    double grid_value = 0.0;
    double mean_bias = 0.0;      // mean(estimate - truth)
    double mse = 0.0;            // mean((estimate - truth)^2)
    double std_err_bias = 0.0;
    double std_err_mse = 0.0;
    double censored_fraction = 0.0;  // mean over replications
    double mean_abs_error = 0.0;     // mean |estimate - truth|; slope-fit input
    long replications = 0;
};

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    long dropped = 0;  // non-positive values excluded from the fit
};

struct BenchReport {
    ExperimentConfig config;
    double truth = 0.0;
    std::vector<BenchRow> rows;                // |methods| x |grid|, method-major
    std::map<std::string, SlopeFit> fitted;    // sample-size grids, NN methods + oracle
};

// Grid over n = m at fixed mu_p. Deterministic for a fixed master seed at any
// thread count: replication r of grid cell g draws from stream
// hash(seed, g, r), and aggregation order is fixed.
BenchReport run_bias_experiment(const ExperimentConfig& cfg);

// Grid over mu_p at fixed n = m.
BenchReport run_transfer_sweep(const ExperimentConfig& cfg);

// OLS of log2(value) on log2(n). Pairs with value <= 0 are dropped (counted);
// throws when nothing is left.
SlopeFit fit_loglog_slope(const std::vector<std::pair<double, double>>& pairs);

void write_csv(const BenchReport& report, std::ostream& out);
std::string to_json(const BenchReport& report);

ExperimentConfig experiment_config_from_json(const std::string& text);

}  // namespace shiftmatch
