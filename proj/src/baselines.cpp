#include "shiftmatch/baselines.hpp"

#include "shiftmatch/numeric.hpp"
#include "shiftmatch/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace shiftmatch {

double oracle_estimate(std::span<const double> target_labels) {
    if (target_labels.empty()) throw std::invalid_argument("oracle_estimate: empty input");
    return mean(target_labels);
}

double median_pairwise_distance(const PointSet& source, const PointSet& target) {
    if (source.dim() != target.dim()) throw std::invalid_argument("median_pairwise_distance: dimension mismatch");
    const int n = source.size(), m = target.size();
    auto point = [&](int i) { return i < n ? source.point(i) : target.point(i - n); };
    // Strided subsample keeps the pair count bounded; deterministic.
    constexpr int kMaxPoints = 2048;
    const int total = n + m;
    const int stride = (total + kMaxPoints - 1) / kMaxPoints;
    std::vector<int> pick;
    for (int i = 0; i < total; i += stride) pick.push_back(i);
    std::vector<double> dists;
    dists.reserve(pick.size() * (pick.size() - 1) / 2);
    for (std::size_t i = 0; i < pick.size(); ++i) {
        for (std::size_t j = i + 1; j < pick.size(); ++j) {
            dists.push_back(distance(point(pick[i]), point(pick[j]), source.norm));
        }
    }
    if (dists.empty()) return 1.0;
    const std::size_t mid = dists.size() / 2;
    std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid), dists.end());
    const double med = dists[mid];
    return med > 0 ? med : 1.0;
}

namespace {

Eigen::MatrixXd gaussian_gram(const PointSet& a, const PointSet& b, double bandwidth) {
    const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
    Eigen::MatrixXd k(a.size(), b.size());
    parallel_for(static_cast<std::size_t>(a.size()), [&](std::size_t i) {
        for (int j = 0; j < b.size(); ++j) {
            const double d = distance(a.point(static_cast<int>(i)), b.point(j), a.norm);
            k(static_cast<Eigen::Index>(i), j) = std::exp(-d * d * inv);
        }
    });
    if (!k.allFinite()) throw std::runtime_error("gaussian kernel produced non-finite entries");
    return k;
}

// Exact Euclidean projection onto {0 <= b <= B} intersected with
// {lo <= mean(b) <= hi}: clip to the box, then shift-and-clip onto the
// violated mean face (the classical water-filling projection).
void project_box_mean(Eigen::VectorXd& beta, double B, double lo_mean, double hi_mean) {
    const auto clip = [&](double t) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < beta.size(); ++i) s += std::clamp(beta(i) + t, 0.0, B);
        return s / static_cast<double>(beta.size());
    };
    for (Eigen::Index i = 0; i < beta.size(); ++i) beta(i) = std::clamp(beta(i), 0.0, B);
    const double m0 = beta.mean();
    double target = 0.0;
    if (m0 < lo_mean) target = lo_mean;
    else if (m0 > hi_mean) target = hi_mean;
    else return;
    double tlo = -B, thi = B;
    for (int it = 0; it < 200; ++it) {
        const double tmid = 0.5 * (tlo + thi);
        if (clip(tmid) < target) tlo = tmid;
        else thi = tmid;
    }
    const double t = 0.5 * (tlo + thi);
    for (Eigen::Index i = 0; i < beta.size(); ++i) beta(i) = std::clamp(beta(i) + t, 0.0, B);
}

}  // namespace

WeightVector kmm_weights(const PointSet& source_x, const PointSet& target_x, const KmmOptions& opt) {
    source_x.validate();
    target_x.validate();
    const int n = source_x.size();
    const int m = target_x.size();
    const double bw = opt.bandwidth > 0 ? opt.bandwidth : median_pairwise_distance(source_x, target_x);
    if (!(bw > 0)) throw std::invalid_argument("kmm_weights: bandwidth must be positive");
    const double eps = opt.eps >= 0 ? opt.eps : (std::sqrt(static_cast<double>(n)) - 1.0) / std::sqrt(static_cast<double>(n));

    const Eigen::MatrixXd K = gaussian_gram(source_x, source_x, bw);
    const Eigen::MatrixXd Knm = gaussian_gram(source_x, target_x, bw);
    const Eigen::VectorXd kappa = Knm.rowwise().sum() / static_cast<double>(m);
    const Eigen::MatrixXd Kmm = gaussian_gram(target_x, target_x, bw);
    const double target_term = Kmm.sum() / (static_cast<double>(m) * static_cast<double>(m));

    const double inv_n = 1.0 / static_cast<double>(n);
    auto objective = [&](const Eigen::VectorXd& b) {
        return inv_n * inv_n * b.dot(K * b) - 2.0 * inv_n * b.dot(kappa) + target_term;
    };

    Eigen::VectorXd beta = Eigen::VectorXd::Ones(n);
    project_box_mean(beta, opt.B, 1.0 - eps, 1.0 + eps);
    double obj = objective(beta);

    WeightVector out;
    out.method = "kmm";
    out.diag.objective_trace.push_back(obj);
    double step = static_cast<double>(n);  // gradient scales with 1/n^2
    int iter = 0;
    for (; iter < opt.max_iter; ++iter) {
        const Eigen::VectorXd grad = 2.0 * inv_n * inv_n * (K * beta) - 2.0 * inv_n * kappa;
        bool accepted = false;
        for (int bt = 0; bt < 40; ++bt) {
            Eigen::VectorXd cand = beta - step * grad;
            project_box_mean(cand, opt.B, 1.0 - eps, 1.0 + eps);
            const double cand_obj = objective(cand);
            if (cand_obj <= obj) {
                const double gain = obj - cand_obj;
                beta = std::move(cand);
                obj = cand_obj;
                accepted = true;
                step *= 1.5;
                out.diag.objective_trace.push_back(obj);
                if (gain < opt.tol * (1.0 + std::abs(obj))) iter = opt.max_iter;  // converged
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
    }
    out.diag.objective = obj;
    out.diag.iterations = static_cast<int>(out.diag.objective_trace.size()) - 1;
    out.diag.constraint_residual = std::max(0.0, std::abs(beta.mean() - 1.0) - eps);
    out.weights.assign(beta.data(), beta.data() + n);
    return out;
}

WeightVector kliep_weights(const PointSet& source_x, const PointSet& target_x, const KliepOptions& opt) {
    source_x.validate();
    target_x.validate();
    const int n = source_x.size();
    const int m = target_x.size();
    const int n_centers = std::min(opt.centers, m);
    if (n_centers < 1) throw std::invalid_argument("kliep_weights: need at least one center");
    const double bw = opt.bandwidth > 0 ? opt.bandwidth : median_pairwise_distance(source_x, target_x);

    // Seeded subsample of target points as kernel centers.
    std::vector<int> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), 0);
    CounterRng rng(derive_stream(opt.seed, 0x63656e74ULL));
    for (int i = m - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    RowMatrixXd centers(n_centers, source_x.dim());
    for (int c = 0; c < n_centers; ++c) centers.row(c) = target_x.rows.row(perm[static_cast<std::size_t>(c)]);
    const PointSet center_set{std::move(centers), source_x.norm};

    const Eigen::MatrixXd A = gaussian_gram(target_x, center_set, bw);   // m x C
    const Eigen::MatrixXd Ks = gaussian_gram(source_x, center_set, bw);  // n x C
    const Eigen::VectorXd b = Ks.colwise().sum() / static_cast<double>(n);
    for (int c = 0; c < n_centers; ++c) {
        if (!(b(c) > 0)) {
            throw std::runtime_error("kliep_weights: kernel column sums to zero (bandwidth too small)");
        }
    }

    // Mixture parametrisation pi_c = alpha_c * b_c with sum(pi) = 1; the EM
    // update keeps pi >= 0, keeps the source-mean constraint exact, and never
    // decreases the log-likelihood.
    Eigen::MatrixXd F = A;  // F_jc = A_jc / b_c
    for (int c = 0; c < n_centers; ++c) F.col(c) /= b(c);
    Eigen::VectorXd pi = Eigen::VectorXd::Constant(n_centers, 1.0 / static_cast<double>(n_centers));

    auto loglik = [&](const Eigen::VectorXd& p, Eigen::VectorXd& denom) {
        denom = F * p;
        double ll = 0.0;
        for (int j = 0; j < m; ++j) {
            if (!(denom(j) > 0)) throw std::runtime_error("kliep_weights: zero fitted ratio at a target point");
            ll += std::log(denom(j));
        }
        return ll / static_cast<double>(m);
    };

    WeightVector out;
    out.method = "kliep";
    Eigen::VectorXd denom(m);
    double ll = loglik(pi, denom);
    out.diag.objective_trace.push_back(ll);
    for (int iter = 0; iter < opt.max_iter; ++iter) {
        Eigen::VectorXd resp = Eigen::VectorXd::Zero(n_centers);
        for (int j = 0; j < m; ++j) resp += F.row(j).transpose() / denom(j);
        const Eigen::VectorXd next = pi.cwiseProduct(resp) / static_cast<double>(m);
        const double next_ll = loglik(next, denom);
        if (next_ll < ll - 1e-14) break;  // EM guarantees ascent; stop on numerical stall
        pi = next;
        const double gain = next_ll - ll;
        ll = next_ll;
        out.diag.objective_trace.push_back(ll);
        if (gain < opt.tol * (1.0 + std::abs(ll))) break;
    }
    // Renormalise so the constraint holds exactly up to rounding.
    pi /= pi.sum();
    const Eigen::VectorXd alpha = pi.cwiseQuotient(b);
    const Eigen::VectorXd w = Ks * alpha;
    out.diag.objective = ll;
    out.diag.iterations = static_cast<int>(out.diag.objective_trace.size()) - 1;
    out.diag.constraint_residual = std::abs(w.mean() - 1.0);
    out.weights.assign(w.data(), w.data() + n);
    return out;
}

double weighted_estimate(std::span<const double> source_label, const WeightVector& weights) {
    if (source_label.size() != weights.weights.size()) {
        throw std::invalid_argument("weighted_estimate: length mismatch");
    }
    std::vector<double> terms(source_label.size());
    for (std::size_t i = 0; i < terms.size(); ++i) terms[i] = weights.weights[i] * source_label[i];
    return pairwise_sum(terms) / static_cast<double>(terms.size());
}

}  // namespace shiftmatch
