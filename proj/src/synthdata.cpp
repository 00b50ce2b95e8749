#include "shiftmatch/synthdata.hpp"

#include "shiftmatch/numeric.hpp"
#include "shiftmatch/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace shiftmatch {

namespace {

// Stream tags; fixed so that samples are reproducible bit-for-bit.
constexpr std::uint64_t kTagSourceX = 1;
constexpr std::uint64_t kTagTargetX = 2;
constexpr std::uint64_t kTagSourceNoise = 3;
constexpr std::uint64_t kTagTargetNoise = 4;

double lgamma_pos(double s) { return std::lgamma(s); }

}  // namespace

std::string to_string(Setup s) { return s == Setup::exponential_sin ? "exponential_sin" : "normal_poly"; }

Setup setup_from_string(const std::string& s) {
    if (s == "exponential_sin" || s == "exponential-sin") return Setup::exponential_sin;
    if (s == "normal_poly" || s == "normal-poly") return Setup::normal_poly;
    throw std::invalid_argument("unknown setup: " + s);
}

void SetupConfig::validate() const {
    if (d0 < 1) throw std::invalid_argument("SetupConfig: d0 must be >= 1");
    if (d < d0) throw std::invalid_argument("SetupConfig: d must be >= d0");
    if (!(mu_p > 0)) throw std::invalid_argument("SetupConfig: mu_p must be positive");
    if (n < 1 || m < 1) throw std::invalid_argument("SetupConfig: n and m must be >= 1");
    if (setup == Setup::exponential_sin && d < 2) {
        throw std::invalid_argument("SetupConfig: exponential_sin uses the second coordinate; need d >= 2");
    }
}

Eigen::MatrixXd embed_manifold(const Eigen::MatrixXd& base, int d) {
    const int d0 = static_cast<int>(base.cols());
    if (d < d0) throw std::invalid_argument("embed_manifold: target dimension below base dimension");
    if (d == d0) return base;
    Eigen::MatrixXd out(base.rows(), d);
    out.leftCols(d0) = base;
    for (int j = d0; j < d; ++j) {
        const int which = (j - d0) % 3;
        const int src = (j - d0) % d0;
        for (Eigen::Index i = 0; i < base.rows(); ++i) {
            const double x = base(i, src);
            double v = 0.0;
            switch (which) {
                case 0: v = x * x; break;
                case 1: v = std::cos(x); break;
                case 2: v = 1.0 / (x * x + 1.0); break;
            }
            out(i, j) = v;
        }
    }
    return out;
}

namespace {

// Draw order: coordinates row-major from the covariate stream, then one noise
// draw per row from the noise stream.
Eigen::MatrixXd draw_coords(int rows, int d0, std::uint64_t key, const std::function<double(CounterRng&)>& coord) {
    Eigen::MatrixXd base(rows, d0);
    CounterRng rng(key);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < d0; ++j) base(i, j) = coord(rng);
    }
    return base;
}

LabeledSample assemble(Eigen::MatrixXd base, int d, std::uint64_t noise_key,
                       const std::function<double(std::span<const double>)>& f,
                       const std::function<double(std::span<const double>, double)>& h, double truth) {
    LabeledSample out;
    const int rows = static_cast<int>(base.rows());
    out.x = PointSet{embed_manifold(base, d), Norm::euclidean};
    out.y.resize(static_cast<std::size_t>(rows));
    out.label.resize(static_cast<std::size_t>(rows));
    CounterRng noise(noise_key);
    for (int i = 0; i < rows; ++i) {
        const auto xi = out.x.point(i);
        out.y[static_cast<std::size_t>(i)] = f(xi) + noise.normal();
        out.label[static_cast<std::size_t>(i)] = h(xi, out.y[static_cast<std::size_t>(i)]);
    }
    out.truth = truth;
    return out;
}

double exponential_sin_truth(int d0) {
    if (d0 >= 2) return 1.25;
    // d0 = 1: the second coordinate is the first embedded map x -> x^2, so
    // e(h) = 1 + E[cos(X^2) sin(X)], X ~ Exp(1). The integrand decays like
    // e^{-x}; [0, 60] is past double underflow of the tail.
    const double integral =
        integrate([](double x) { return std::cos(x * x) * std::sin(x) * std::exp(-x); }, 0.0, 60.0, 1e-12);
    return 1.0 + integral;
}

}  // namespace

std::pair<LabeledSample, LabeledSample> gen_exponential_sin(const SetupConfig& cfg) {
    cfg.validate();
    if (cfg.setup != Setup::exponential_sin) throw std::invalid_argument("gen_exponential_sin: wrong setup tag");
    const auto f = [](std::span<const double> x) { return std::sin(x[0]); };
    const auto h = [](std::span<const double> x, double y) { return std::cos(x[1]) * y + 1.0; };
    const double truth = exponential_sin_truth(cfg.d0);
    const double mu_p = cfg.mu_p;
    auto source = assemble(
        draw_coords(cfg.n, cfg.d0, derive_stream(cfg.seed, kTagSourceX),
                    [mu_p](CounterRng& r) { return r.exponential(mu_p); }),
        cfg.d, derive_stream(cfg.seed, kTagSourceNoise), f, h, truth);
    auto target = assemble(draw_coords(cfg.m, cfg.d0, derive_stream(cfg.seed, kTagTargetX),
                                       [](CounterRng& r) { return r.exponential(1.0); }),
                           cfg.d, derive_stream(cfg.seed, kTagTargetNoise), f, h, truth);
    return {std::move(source), std::move(target)};
}

double normal_poly_stated_truth(int d0) { return static_cast<double>(d0) * (d0 + 2) / 4.0; }

std::pair<LabeledSample, LabeledSample> gen_normal_poly(const SetupConfig& cfg) {
    cfg.validate();
    if (cfg.setup != Setup::normal_poly) throw std::invalid_argument("gen_normal_poly: wrong setup tag");
    const int d0 = cfg.d0;
    const auto f = [d0](std::span<const double> x) {
        double s = 0.0;
        for (int i = 0; i < d0; ++i) s += x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
        return s;
    };
    const auto h = [f](std::span<const double> x, double y) { return y * f(x); };
    // E[(f + eps) f] = E[f^2] = Var(chi2_d0) + (E chi2_d0)^2 = d0 (d0 + 2)
    // under the unit-variance target; verified by the Monte Carlo oracle.
    const double truth = static_cast<double>(d0) * (d0 + 2);
    const double sd_source = 1.0 / std::sqrt(cfg.mu_p);
    auto source = assemble(draw_coords(cfg.n, cfg.d0, derive_stream(cfg.seed, kTagSourceX),
                                       [sd_source](CounterRng& r) { return sd_source * r.normal(); }),
                           cfg.d, derive_stream(cfg.seed, kTagSourceNoise), f, h, truth);
    auto target = assemble(draw_coords(cfg.m, cfg.d0, derive_stream(cfg.seed, kTagTargetX),
                                       [](CounterRng& r) { return r.normal(); }),
                           cfg.d, derive_stream(cfg.seed, kTagTargetNoise), f, h, truth);
    return {std::move(source), std::move(target)};
}

std::pair<LabeledSample, LabeledSample> generate(const SetupConfig& cfg) {
    return cfg.setup == Setup::exponential_sin ? gen_exponential_sin(cfg) : gen_normal_poly(cfg);
}

HFunc setup_h(const SetupConfig& cfg) {
    if (cfg.setup == Setup::exponential_sin) {
        return [](std::span<const double> z, double y) { return std::cos(z[1]) * y + 1.0; };
    }
    const int d0 = cfg.d0;
    return [d0](std::span<const double> z, double y) {
        double s = 0.0;
        for (int i = 0; i < d0; ++i) s += z[static_cast<std::size_t>(i)] * z[static_cast<std::size_t>(i)];
        return y * s;
    };
}

std::string to_string(Family f) {
    switch (f) {
        case Family::exponential: return "exponential";
        case Family::gamma: return "gamma";
        case Family::pareto: return "pareto";
        case Family::gaussian: return "gaussian";
    }
    return "exponential";
}

Family family_from_string(const std::string& s) {
    if (s == "exponential") return Family::exponential;
    if (s == "gamma") return Family::gamma;
    if (s == "pareto") return Family::pareto;
    if (s == "gaussian") return Family::gaussian;
    throw std::invalid_argument("unknown family: " + s);
}

void FamilySpec::validate() const {
    switch (family) {
        case Family::exponential:
            if (!(param_a > 0)) throw std::invalid_argument("exponential: rate must be positive");
            break;
        case Family::gamma:
            if (!(param_a > 0)) throw std::invalid_argument("gamma: rate must be positive");
            if (!(param_b >= 1)) throw std::invalid_argument("gamma: shape must be >= 1");
            break;
        case Family::pareto:
            if (!(param_a > 0)) throw std::invalid_argument("pareto: exponent must be positive");
            break;
        case Family::gaussian:
            if (!(param_b > 0)) throw std::invalid_argument("gaussian: variance must be positive");
            break;
    }
}

double FamilySpec::density(double x) const {
    switch (family) {
        case Family::exponential:
            return x < 0 ? 0.0 : param_a * std::exp(-param_a * x);
        case Family::gamma: {
            if (x <= 0) return 0.0;
            const double s = param_b, mu = param_a;
            return std::exp(s * std::log(mu) - lgamma_pos(s) + (s - 1.0) * std::log(x) - mu * x);
        }
        case Family::pareto:
            return x < 1 ? 0.0 : param_a * std::pow(x, -param_a - 1.0);
        case Family::gaussian: {
            const double var = param_b;
            const double diff = x - param_a;
            return std::exp(-diff * diff / (2.0 * var)) / std::sqrt(6.283185307179586476925286766559 * var);
        }
    }
    return 0.0;
}

double FamilySpec::draw(CounterRng& rng) const {
    switch (family) {
        case Family::exponential: return rng.exponential(param_a);
        case Family::gamma: return rng.gamma(param_b, param_a);
        case Family::pareto: return rng.pareto(param_a);
        case Family::gaussian: return param_a + std::sqrt(param_b) * rng.normal();
    }
    return 0.0;
}

UnivariateSample gen_univariate_family(const FamilySpec& spec, int n, std::uint64_t seed) {
    spec.validate();
    if (n < 1) throw std::invalid_argument("gen_univariate_family: n must be >= 1");
    UnivariateSample out;
    out.values.resize(static_cast<std::size_t>(n));
    CounterRng rng(derive_stream(seed, 0x756e6976ULL));
    for (int i = 0; i < n; ++i) out.values[static_cast<std::size_t>(i)] = spec.draw(rng);
    FamilySpec copy = spec;
    out.density = [copy](double x) { return copy.density(x); };
    return out;
}

}  // namespace shiftmatch
