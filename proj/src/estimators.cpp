#include "shiftmatch/estimators.hpp"

#include "shiftmatch/numeric.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace shiftmatch {

void Dataset::validate() const {
    source_x.validate();
    target_x.validate();
    if (source_x.dim() != target_x.dim()) throw std::invalid_argument("Dataset: source/target dimension mismatch");
    const std::size_t n = static_cast<std::size_t>(source_x.size());
    if (source_label.size() != n) throw std::invalid_argument("Dataset: label length != n");
    if (!source_y.empty() && source_y.size() != n) throw std::invalid_argument("Dataset: y length != n");
    for (double v : source_label) {
        if (!std::isfinite(v)) throw std::invalid_argument("Dataset: non-finite label");
    }
    for (double v : source_y) {
        if (!std::isfinite(v)) throw std::invalid_argument("Dataset: non-finite outcome");
    }
}

std::string to_string(LabelMode m) { return m == LabelMode::matching ? "matching" : "sampling"; }

LabelMode label_mode_from_string(const std::string& s) {
    if (s == "matching") return LabelMode::matching;
    if (s == "sampling") return LabelMode::sampling;
    throw std::invalid_argument("unknown label mode: " + s);
}

int EstimatorConfig::resolved_k(int d) const {
    if (k > 0) return k;
    const MultiIndexBasis b = build_basis(d, L);
    return 2 * b.kstar;
}

void EstimatorConfig::validate(int d) const {
    if (L < 0) throw std::invalid_argument("EstimatorConfig: L must be >= 0");
    if (k < 0) throw std::invalid_argument("EstimatorConfig: k must be positive (or 0 for the default)");
    if (!(r0 > 0)) throw std::invalid_argument("EstimatorConfig: r0 must be positive");
    if (!(cond_threshold > 0)) throw std::invalid_argument("EstimatorConfig: cond_threshold must be positive");
    if (L >= 1) {
        const std::int64_t kstar = binomial(d + L, d);
        if (resolved_k(d) < kstar) {
            throw std::invalid_argument("EstimatorConfig: k = " + std::to_string(resolved_k(d)) +
                                        " is below kstar(d, L) = " + std::to_string(kstar) +
                                        "; the local least-squares fit is under-determined");
        }
    }
}

std::int64_t EstimatorConfig::recommended_k_floor(int d) const {
    const MultiIndexBasis b = build_basis(d, L);
    return (2 * b.dconst + 1) * b.kstar;
}

namespace {

// The pointwise estimate is zeroed when the (k+1)-NN radius exceeds r0; an
// infinite radius (fewer than k+1 points) always censors, even with r0 = inf.
bool censored(double radius, double r0) { return std::isinf(radius) || !(radius <= r0); }

double mean_of(std::span<const double> values) {
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
}

// Least-squares fit of the local polynomial on the neighbour set; returns the
// constant term. labels[r] belongs to source point neigh[r]. Column-pivoted
// QR is rank-revealing; when the reciprocal condition estimate drops below
// cfg.cond_threshold the order is reduced and the fit retried, ending at the
// order-0 mean.
double fit_constant_term(const PointSet& source, std::span<const double> z, const std::vector<int>& neigh,
                         std::span<const double> labels, double radius, const EstimatorConfig& cfg,
                         const MultiIndexBasis& basis, QueryStats* stats) {
    const int k = static_cast<int>(neigh.size());
    const double scale = (std::isfinite(radius) && radius > 0) ? radius : (std::isfinite(cfg.r0) ? cfg.r0 : 1.0);
    const MultiIndexBasis* current = &basis;
    MultiIndexBasis reduced;
    for (int order = basis.L; order >= 1; --order) {
        if (order < basis.L) {
            reduced = build_basis(basis.d, order);
            current = &reduced;
        }
        if (current->kstar > k) continue;  // under-determined at this order
        Eigen::MatrixXd design(k, current->kstar);
        Eigen::VectorXd rhs(k);
        std::vector<double> row(static_cast<std::size_t>(current->kstar));
        for (int r = 0; r < k; ++r) {
            eval_monomials(*current, z, source.point(neigh[static_cast<std::size_t>(r)]), scale, row);
            for (int c = 0; c < current->kstar; ++c) design(r, c) = row[static_cast<std::size_t>(c)];
            rhs(r) = labels[static_cast<std::size_t>(r)];
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
        const auto& diag = qr.matrixR().diagonal();
        const double rmax = std::abs(diag(0));
        const double rmin = std::abs(diag(current->kstar - 1));
        if (rmax <= 0.0 || rmin / rmax < cfg.cond_threshold) {
            if (stats) ++stats->fallbacks;
            continue;
        }
        const Eigen::VectorXd beta = qr.solve(rhs);
        return beta(0);
    }
    return mean_of(labels);
}

}  // namespace

double pointwise_matching(const Dataset& data, const NeighborIndex& index, std::span<const double> z,
                          const EstimatorConfig& cfg) {
    const int k = cfg.resolved_k(data.source_x.dim());
    const NeighborResult nn = index.knn(z, k);
    if (censored(nn.radius, cfg.r0)) return 0.0;
    std::vector<double> labels(nn.indices.size());
    for (std::size_t r = 0; r < nn.indices.size(); ++r) {
        labels[r] = data.source_label[static_cast<std::size_t>(nn.indices[r])];
    }
    return mean_of(labels);
}

double pointwise_polynomial(const Dataset& data, const NeighborIndex& index, std::span<const double> z,
                            const EstimatorConfig& cfg, const MultiIndexBasis& basis, QueryStats* stats) {
    const int k = cfg.resolved_k(data.source_x.dim());
    if (basis.L >= 1 && k < basis.kstar) {
        throw std::invalid_argument("pointwise_polynomial: k < kstar");
    }
    const NeighborResult nn = index.knn(z, k);
    if (censored(nn.radius, cfg.r0)) {
        if (stats) stats->censored = true;
        return 0.0;
    }
    std::vector<double> labels(nn.indices.size());
    for (std::size_t r = 0; r < nn.indices.size(); ++r) {
        labels[r] = data.source_label[static_cast<std::size_t>(nn.indices[r])];
    }
    if (basis.L == 0) return mean_of(labels);
    return fit_constant_term(data.source_x, z, nn.indices, labels, nn.radius, cfg, basis, stats);
}

EstimateReport estimate_expectation(const Dataset& data, const EstimatorConfig& cfg, const HFunc& h,
                                    bool want_weights) {
    data.validate();
    const int d = data.source_x.dim();
    cfg.validate(d);
    const int k = cfg.resolved_k(d);
    if (cfg.label_mode == LabelMode::sampling) {
        if (!h) throw std::invalid_argument("estimate_expectation: sampling mode requires an h callback");
        if (data.source_y.size() != static_cast<std::size_t>(data.source_x.size())) {
            throw std::invalid_argument("estimate_expectation: sampling mode requires raw outcomes y");
        }
    }
    if (want_weights && (cfg.L != 0 || cfg.label_mode != LabelMode::matching)) {
        throw std::invalid_argument("estimate_expectation: weights are only materialised for L = 0, matching mode");
    }

    const NeighborIndex index(data.source_x, cfg.norm);
    const MultiIndexBasis basis = build_basis(d, cfg.L);
    const std::size_t m = static_cast<std::size_t>(data.target_x.size());

    std::vector<double> values(m, 0.0);
    std::vector<unsigned char> was_censored(m, 0);
    std::vector<int> fallbacks(m, 0);
    std::vector<std::vector<int>> memberships;
    if (want_weights) memberships.resize(m);

    parallel_for(m, [&](std::size_t j) {
        const auto z = data.target_x.point(static_cast<int>(j));
        const NeighborResult nn = index.knn(z, k);
        if (censored(nn.radius, cfg.r0)) {
            was_censored[j] = 1;
            return;
        }
        if (want_weights) memberships[j] = nn.indices;
        std::vector<double> labels(nn.indices.size());
        for (std::size_t r = 0; r < nn.indices.size(); ++r) {
            const std::size_t i = static_cast<std::size_t>(nn.indices[r]);
            labels[r] = cfg.label_mode == LabelMode::matching ? data.source_label[i] : h(z, data.source_y[i]);
        }
        if (cfg.L == 0) {
            values[j] = mean_of(labels);
        } else {
            QueryStats qs;
            values[j] = fit_constant_term(data.source_x, z, nn.indices, labels, nn.radius, cfg, basis, &qs);
            fallbacks[j] = qs.fallbacks;
        }
    });

    EstimateReport report;
    report.value = pairwise_sum(values) / static_cast<double>(m);
    long censored_count = 0;
    for (unsigned char c : was_censored) censored_count += c;
    report.censored_fraction = static_cast<double>(censored_count) / static_cast<double>(m);
    for (int f : fallbacks) report.fallback_count += f > 0 ? 1 : 0;
    if (want_weights) {
        std::vector<double> w(static_cast<std::size_t>(data.source_x.size()), 0.0);
        const double unit = 1.0 / (static_cast<double>(m) * static_cast<double>(k));
        for (std::size_t j = 0; j < m; ++j) {
            for (int i : memberships[j]) w[static_cast<std::size_t>(i)] += unit;
        }
        report.per_source_weights = std::move(w);
    }
    return report;
}

void AtePanel::validate() const {
    x.validate();
    const std::size_t n = static_cast<std::size_t>(x.size());
    if (w.size() != n || y.size() != n) throw std::invalid_argument("AtePanel: column lengths disagree");
    for (int f : w) {
        if (f != 0 && f != 1) throw std::invalid_argument("AtePanel: treatment flags must be 0/1");
    }
    for (double v : y) {
        if (!std::isfinite(v)) throw std::invalid_argument("AtePanel: non-finite outcome");
    }
}

AtePanel flip(const AtePanel& panel) {
    AtePanel out = panel;
    for (auto& f : out.w) f = 1 - f;
    return out;
}

AteReport estimate_ate(const AtePanel& panel, const EstimatorConfig& cfg) {
    panel.validate();
    const int d = panel.x.dim();
    cfg.validate(d);
    const int k = cfg.resolved_k(d);
    const std::size_t n = static_cast<std::size_t>(panel.x.size());

    std::vector<int> arm_rows[2];
    for (std::size_t i = 0; i < n; ++i) arm_rows[panel.w[i]].push_back(static_cast<int>(i));

    PointSet arm_points[2];
    std::vector<double> arm_labels[2];
    std::optional<NeighborIndex> arm_index[2];
    for (int a = 0; a < 2; ++a) {
        if (arm_rows[a].empty()) continue;
        RowMatrixXd rows(static_cast<Eigen::Index>(arm_rows[a].size()), d);
        arm_labels[a].resize(arm_rows[a].size());
        for (std::size_t r = 0; r < arm_rows[a].size(); ++r) {
            rows.row(static_cast<Eigen::Index>(r)) = panel.x.rows.row(arm_rows[a][r]);
            arm_labels[a][r] = panel.y[static_cast<std::size_t>(arm_rows[a][r])];
        }
        arm_points[a] = PointSet{std::move(rows), cfg.norm};
        arm_index[a].emplace(arm_points[a], cfg.norm);
    }

    const MultiIndexBasis basis = build_basis(d, cfg.L);
    std::vector<double> contributions(n, 0.0);
    std::vector<unsigned char> censored_flags(n, 0);
    parallel_for(n, [&](std::size_t i) {
        const int opposite = 1 - panel.w[i];
        const double sign = panel.w[i] == 1 ? 1.0 : -1.0;
        double ghat = 0.0;
        bool was_censored = true;
        if (arm_index[opposite]) {
            const NeighborResult nn = arm_index[opposite]->knn(panel.x.point(static_cast<int>(i)), k);
            if (!censored(nn.radius, cfg.r0)) {
                was_censored = false;
                std::vector<double> labels(nn.indices.size());
                for (std::size_t r = 0; r < nn.indices.size(); ++r) {
                    labels[r] = arm_labels[opposite][static_cast<std::size_t>(nn.indices[r])];
                }
                if (cfg.L == 0) {
                    ghat = mean_of(labels);
                } else {
                    ghat = fit_constant_term(arm_points[opposite], panel.x.point(static_cast<int>(i)), nn.indices,
                                             labels, nn.radius, cfg, basis, nullptr);
                }
            }
        }
        censored_flags[i] = was_censored ? 1 : 0;
        contributions[i] = sign * (panel.y[i] - ghat);
    });

    AteReport report;
    report.mu_hat = pairwise_sum(contributions) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        report.n_treated += panel.w[i];
        report.n_control += 1 - panel.w[i];
        if (censored_flags[i]) {
            // A unit's counterfactual is fitted on the opposite arm.
            if (panel.w[i] == 0) ++report.censored_treated;
            else ++report.censored_control;
        }
    }
    return report;
}

}  // namespace shiftmatch
