#include "shiftmatch/audit.hpp"

#include "shiftmatch/numeric.hpp"
#include "shiftmatch/rng.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace shiftmatch {

namespace {

TransferVerdict finish(std::vector<Inequality> ineqs) {
    TransferVerdict v;
    v.inequalities = std::move(ineqs);
    v.margin = std::numeric_limits<double>::infinity();
    v.satisfied = true;
    for (auto& q : v.inequalities) {
        q.slack = q.lhs - q.rhs;
        v.margin = std::min(v.margin, q.slack);
        if (!(q.slack > 0)) v.satisfied = false;
    }
    return v;
}

void require_spd(const Eigen::MatrixXd& m, const char* what) {
    if (m.rows() != m.cols() || m.rows() < 1) throw std::invalid_argument(std::string(what) + ": must be square");
    if (!m.isApprox(m.transpose(), 1e-12)) throw std::invalid_argument(std::string(what) + ": must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= 0) throw std::invalid_argument(std::string(what) + ": must be positive definite");
}

}  // namespace

TransferVerdict check_gaussian(const Eigen::MatrixXd& sigma_p, const Eigen::MatrixXd& sigma_q, double g_res,
                               double g_cov, double g_bias) {
    require_spd(sigma_p, "sigma_p");
    require_spd(sigma_q, "sigma_q");
    if (sigma_p.rows() != sigma_q.rows()) throw std::invalid_argument("check_gaussian: dimension mismatch");
    const Eigen::MatrixXd prec_p = sigma_p.inverse();
    const Eigen::MatrixXd prec_q = sigma_q.inverse();
    const double g_max = std::max(g_res, g_cov);

    // Strict positive definiteness with a relative eigenvalue cutoff.
    constexpr double kRelTol = 1e-12;
    auto min_eig = [&](const Eigen::MatrixXd& t, const char* name, std::vector<Inequality>& out) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t, Eigen::EigenvaluesOnly);
        const double lo = es.eigenvalues().minCoeff();
        const double scale = es.eigenvalues().cwiseAbs().maxCoeff();
        out.push_back({name, lo, kRelTol * scale, 0.0});
    };

    std::vector<Inequality> ineqs;
    min_eig(2.0 * prec_q - g_max * prec_p, "2*inv(sigma_q) - max(g_res,g_cov)*inv(sigma_p) > 0", ineqs);
    min_eig(prec_q - g_bias * prec_p, "inv(sigma_q) - g_bias*inv(sigma_p) > 0", ineqs);
    return finish(std::move(ineqs));
}

TransferVerdict check_gamma(double mu_p, double s_p, double mu_q, double s_q, double g_res, double g_cov,
                            double g_bias, bool include_fast_rate) {
    if (!(mu_p > 0) || !(mu_q > 0)) throw std::invalid_argument("check_gamma: rates must be positive");
    if (!(s_p >= 1) || !(s_q >= 1)) throw std::invalid_argument("check_gamma: shapes must be >= 1");
    const double g_max = std::max(g_res, g_cov);
    // All inequalities are written with 2*(target parameter) on the left so
    // slacks are comparable across them.
    std::vector<Inequality> ineqs{
        {"2*mu_q > max(g_res,g_cov)*mu_p", 2.0 * mu_q, g_max * mu_p, 0.0},
        {"2*mu_q > 2*g_bias*mu_p", 2.0 * mu_q, 2.0 * g_bias * mu_p, 0.0},
        {"2*s_q > max(g_res,g_cov)*s_p", 2.0 * s_q, g_max * s_p, 0.0},
        {"2*s_q > 2*g_bias*s_p", 2.0 * s_q, 2.0 * g_bias * s_p, 0.0},
    };
    if (include_fast_rate) ineqs.push_back({"2*s_q > s_p + 1 (fast-rate regime)", 2.0 * s_q, s_p + 1.0, 0.0});
    return finish(std::move(ineqs));
}

TransferVerdict check_pareto(double mu_p, double mu_q, double M, double g_res, double g_cov, double g_bias) {
    if (!(mu_p > 0) || !(mu_q > 0)) throw std::invalid_argument("check_pareto: exponents must be positive");
    if (M < 0) throw std::invalid_argument("check_pareto: M must be >= 0");
    std::vector<Inequality> ineqs{
        {"2*mu_q > 4*M", 2.0 * mu_q, 4.0 * M, 0.0},
        {"2*mu_q + 1 > g_cov*(mu_p+1)", 2.0 * mu_q + 1.0, g_cov * (mu_p + 1.0), 0.0},
        {"2*mu_q + 1 > 2*M + g_res*(mu_p+1)", 2.0 * mu_q + 1.0, 2.0 * M + g_res * (mu_p + 1.0), 0.0},
        {"2*mu_q > 2*M + 2*g_bias*(mu_p+1)", 2.0 * mu_q, 2.0 * M + 2.0 * g_bias * (mu_p + 1.0), 0.0},
    };
    return finish(std::move(ineqs));
}

TransferVerdict check_boundary_uniform(double s, int d, double mu_p, double mu_q, double gamma) {
    if (!(s >= 1)) throw std::invalid_argument("check_boundary_uniform: s must be >= 1");
    if (d < 1) throw std::invalid_argument("check_boundary_uniform: d must be >= 1");
    const double floor = -s * (d - 1);
    if (!(mu_p > floor) || !(mu_q > floor)) {
        throw std::invalid_argument("check_boundary_uniform: need mu > -s*(d-1)");
    }
    std::vector<Inequality> ineqs{{"2*mu_q + ((2-gamma)*s - 1 + gamma)*(d-1) > gamma*mu_p - 1",
                                   2.0 * mu_q + ((2.0 - gamma) * s - 1.0 + gamma) * (d - 1), gamma * mu_p - 1.0,
                                   0.0}};
    return finish(std::move(ineqs));
}

namespace {

struct Accumulated {
    std::vector<double> summands;
};

IntegralEstimate summarize(std::vector<double>& summands) {
    IntegralEstimate est;
    est.n_samples = static_cast<long>(summands.size());
    const MeanVar mv = mean_var(summands);
    est.value = mv.mean;
    est.std_err = mv.std_err;

    // Heavy-tail heuristics. Top-1% mass concentration:
    const std::size_t top = std::max<std::size_t>(1, summands.size() / 100);
    std::vector<double> copy = summands;
    std::nth_element(copy.begin(), copy.end() - static_cast<std::ptrdiff_t>(top), copy.end());
    const double top_sum = pairwise_sum(std::span<const double>(copy).last(top));
    const double total = pairwise_sum(copy);
    const bool concentrated = total > 0 && top_sum > 0.5 * total;
    // Doubling stability: first-half mean vs full mean.
    const double half_mean = mean(std::span<const double>(summands).first(summands.size() / 2));
    const bool unstable = est.std_err > 0 && std::abs(half_mean - est.value) > 5.0 * est.std_err;
    est.diverging = concentrated || unstable;
    return est;
}

}  // namespace

std::pair<IntegralEstimate, IntegralEstimate> estimate_importance_integrals(
    const std::function<double(CounterRng&)>& q_sampler, const std::function<double(double)>& q_density,
    const std::function<double(double)>& p_density, long n_samples, std::uint64_t seed) {
    if (n_samples < 1000) throw std::invalid_argument("estimate_importance_integrals: need n_samples >= 1000");

    constexpr long kChunk = 1 << 16;
    const long n_chunks = (n_samples + kChunk - 1) / kChunk;
    std::vector<double> ratio(static_cast<std::size_t>(n_samples));
    std::vector<double> inv_sqrt(static_cast<std::size_t>(n_samples));

    // Chunks own derived streams, so the draws (and therefore the result)
    // do not depend on the thread count.
    parallel_for(static_cast<std::size_t>(n_chunks), [&](std::size_t c) {
        CounterRng rng(derive_stream(seed, 0x696e7467ULL, static_cast<std::uint64_t>(c)));
        const long begin = static_cast<long>(c) * kChunk;
        const long end = std::min(begin + kChunk, n_samples);
        for (long i = begin; i < end; ++i) {
            const double z = q_sampler(rng);
            const double fq = q_density(z);
            const double fp = p_density(z);
            if (!(fq > 0) || !(fp > 0)) {
                throw std::domain_error("estimate_importance_integrals: non-positive density at a drawn point");
            }
            ratio[static_cast<std::size_t>(i)] = fq / fp;
            inv_sqrt[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(fp);
        }
    });

    return {summarize(ratio), summarize(inv_sqrt)};
}

}  // namespace shiftmatch
