#include "shiftmatch/baselines.hpp"

#include "shiftmatch/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace shiftmatch;

namespace {

PointSet draw_points(CounterRng& rng, int n, int d, const std::function<double(CounterRng&)>& draw) {
    Eigen::MatrixXd m(n, d);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) m(i, j) = draw(rng);
    }
    return PointSet{std::move(m), Norm::euclidean};
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    auto ranks = [](const std::vector<double>& v) {
        std::vector<int> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](int x, int y) { return v[static_cast<std::size_t>(x)] < v[static_cast<std::size_t>(y)]; });
        std::vector<double> r(v.size());
        for (std::size_t pos = 0; pos < idx.size(); ++pos) r[static_cast<std::size_t>(idx[pos])] = static_cast<double>(pos);
        return r;
    };
    const std::vector<double> ra = ranks(a), rb = ranks(b);
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= static_cast<double>(ra.size());
    mb /= static_cast<double>(rb.size());
    double num = 0, da = 0, db = 0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        num += (ra[i] - ma) * (rb[i] - mb);
        da += (ra[i] - ma) * (ra[i] - ma);
        db += (rb[i] - mb) * (rb[i] - mb);
    }
    return num / std::sqrt(da * db);
}

}  // namespace

TEST_CASE("oracle estimate is the plain mean") {
    CHECK(oracle_estimate(std::vector<double>{3.0}) == 3.0);
    CHECK(oracle_estimate(std::vector<double>{1.0, 3.0}) == 2.0);
    CHECK_THROWS_AS(oracle_estimate(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("kmm: single matched point pins beta at the feasible center") {
    const PointSet p = make_point_set({{0.7, -0.2}});
    KmmOptions opt;
    opt.B = 1000.0;
    const WeightVector w = kmm_weights(p, p, opt);
    REQUIRE(w.weights.size() == 1);
    CHECK(w.weights[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(w.diag.objective <= 1e-12);
}

TEST_CASE("kmm: identical samples are matched exactly by uniform weights") {
    CounterRng rng(5);
    const PointSet p = draw_points(rng, 60, 2, [](CounterRng& r) { return r.uniform(-1, 1); });
    const WeightVector w = kmm_weights(p, p);
    CHECK(w.diag.objective <= 1e-8);
    for (double v : w.weights) CHECK(v >= 0.0);
}

TEST_CASE("kmm: constraints hold and the objective trace is monotone") {
    CounterRng rng(9);
    const PointSet source = draw_points(rng, 80, 1, [](CounterRng& r) { return r.exponential(0.5); });
    const PointSet target = draw_points(rng, 70, 1, [](CounterRng& r) { return r.exponential(1.0); });
    KmmOptions opt;
    const WeightVector w = kmm_weights(source, target, opt);
    double mean = 0.0;
    for (double v : w.weights) {
        CHECK(v >= 0.0);
        CHECK(v <= opt.B);
        mean += v;
    }
    mean /= static_cast<double>(w.weights.size());
    const double eps = (std::sqrt(80.0) - 1.0) / std::sqrt(80.0);
    CHECK(std::abs(mean - 1.0) <= eps + 1e-12);
    for (std::size_t i = 1; i < w.diag.objective_trace.size(); ++i) {
        CHECK(w.diag.objective_trace[i] <= w.diag.objective_trace[i - 1] + 1e-15);
    }
}

TEST_CASE("kliep: matched samples give near-uniform weights") {
    CounterRng rng(13);
    const PointSet p = draw_points(rng, 300, 1, [](CounterRng& r) { return r.normal(); });
    const WeightVector w = kliep_weights(p, p);
    double mean = 0.0;
    for (double v : w.weights) {
        CHECK(v >= 0.0);
        CHECK(v >= 0.5);
        CHECK(v <= 2.0);
        mean += v;
    }
    mean /= static_cast<double>(w.weights.size());
    CHECK(std::abs(mean - 1.0) <= 1e-6);
    for (std::size_t i = 1; i < w.diag.objective_trace.size(); ++i) {
        CHECK(w.diag.objective_trace[i] >= w.diag.objective_trace[i - 1] - 1e-12);
    }
}

TEST_CASE("kliep recovers the ordering of the true density ratio") {
    // Exponential rates: source 0.5, target 1; the true importance at x is
    // 2 exp(-x/2), a monotone function the fitted kernel mixture must track.
    CounterRng rng(21);
    const int n = 4000;
    const PointSet source = draw_points(rng, n, 1, [](CounterRng& r) { return r.exponential(0.5); });
    const PointSet target = draw_points(rng, n, 1, [](CounterRng& r) { return r.exponential(1.0); });
    const WeightVector w = kliep_weights(source, target);
    std::vector<double> truth(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) truth[static_cast<std::size_t>(i)] = 2.0 * std::exp(-0.5 * source.point(i)[0]);
    CHECK(spearman(w.weights, truth) >= 0.8);
    CHECK(std::abs(w.diag.constraint_residual) <= 1e-6);
}

TEST_CASE("weighted_estimate arithmetic") {
    WeightVector w;
    w.weights = {1.0, 1.0, 1.0};
    CHECK(weighted_estimate(std::vector<double>{1.0, 2.0, 6.0}, w) == 3.0);
    w.weights = {2.0, 0.0};
    CHECK(weighted_estimate(std::vector<double>{1.0, 5.0}, w) == 1.0);
    CHECK_THROWS_AS(weighted_estimate(std::vector<double>{1.0}, w), std::invalid_argument);
}

TEST_CASE("kliep weighting of matched samples stays near the plain mean") {
    CounterRng rng(29);
    const int n = 500;
    const PointSet p = draw_points(rng, n, 1, [](CounterRng& r) { return r.exponential(1.0); });
    std::vector<double> labels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = std::sin(p.point(i)[0]);
    const WeightVector w = kliep_weights(p, p);
    const double plain = oracle_estimate(labels);
    const double weighted = weighted_estimate(labels, w);
    double sd = 0.0;
    for (double v : labels) sd += (v - plain) * (v - plain);
    sd = std::sqrt(sd / (n - 1.0));
    CHECK(std::abs(weighted - plain) <= 3.0 * sd / std::sqrt(static_cast<double>(n)));
}
