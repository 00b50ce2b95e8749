#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace shiftmatch {

class CounterRng;

// One strict inequality lhs > rhs of a transferability condition system.
struct Inequality {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;  // lhs - rhs
};

struct TransferVerdict {
    bool satisfied = false;
    double margin = 0.0;  // smallest slack; negative when violated
    std::vector<Inequality> inequalities;
};

// Source/target Gaussian pair: requires 2*inv(Sigma_Q) - max(g_res, g_cov) *
// inv(Sigma_P) and inv(Sigma_Q) - g_bias * inv(Sigma_P) to be positive
// definite. Margins are the smallest eigenvalues; strictness cutoff is 1e-12
// relative to the largest eigenvalue magnitude.
TransferVerdict check_gaussian(const Eigen::MatrixXd& sigma_p, const Eigen::MatrixXd& sigma_q, double g_res,
                               double g_cov, double g_bias);

// Univariate Gamma pair (rate mu, shape s >= 1, embedded alongside uniform
// coordinates). include_fast_rate adds the optional 2 s_Q > s_P + 1
// inequality needed by the faster-rate regime; it is excluded from the
// default verdict.
TransferVerdict check_gamma(double mu_p, double s_p, double mu_q, double s_q, double g_res, double g_cov,
                            double g_bias, bool include_fast_rate = false);

// Pareto pair with a regression function growing like z^M.
TransferVerdict check_pareto(double mu_p, double mu_q, double M, double g_res, double g_cov, double g_bias);

// Power densities z_1^mu on the boundary-cusp support {z in [0,1]^d :
// z_i <= z_1^s}; single inequality in gamma.
TransferVerdict check_boundary_uniform(double s, int d, double mu_p, double mu_q, double gamma);

struct IntegralEstimate {
    double value = 0.0;
    double std_err = 0.0;
    bool diverging = false;
    long n_samples = 0;
};

// Monte Carlo estimates of the transferability integrals
//   m2     = int f_Q^2 / f_P   = E_Q[f_Q / f_P]
//   m_half = int f_Q / sqrt(f_P) = E_Q[1 / sqrt(f_P)].
// The diverging flag is a heuristic (tail-mass concentration or
// doubling instability), reported as a diagnostic, never as a proof.
std::pair<IntegralEstimate, IntegralEstimate> estimate_importance_integrals(
    const std::function<double(CounterRng&)>& q_sampler, const std::function<double(double)>& q_density,
    const std::function<double(double)>& p_density, long n_samples, std::uint64_t seed);

}  // namespace shiftmatch
