#include "shiftmatch/bench.hpp"

#include "shiftmatch/baselines.hpp"
#include "shiftmatch/estimators.hpp"
#include "shiftmatch/numeric.hpp"
#include "shiftmatch/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>
#include <set>
#include <stdexcept>

namespace shiftmatch {

using nlohmann::json;

std::string to_string(Method m) {
    switch (m) {
        case Method::matching: return "matching";
        case Method::sampling: return "sampling";
        case Method::poly_l_m: return "poly_l_m";
        case Method::poly_l_s: return "poly_l_s";
        case Method::kmm: return "kmm";
        case Method::kliep: return "kliep";
        case Method::oracle: return "oracle";
    }
    return "matching";
}

Method method_from_string(const std::string& s) {
    if (s == "matching") return Method::matching;
    if (s == "sampling") return Method::sampling;
    if (s == "poly_l_m") return Method::poly_l_m;
    if (s == "poly_l_s") return Method::poly_l_s;
    if (s == "kmm") return Method::kmm;
    if (s == "kliep") return Method::kliep;
    if (s == "oracle") return Method::oracle;
    throw std::invalid_argument("unknown method: " + s);
}

std::string MethodSpec::display_name() const {
    if (method == Method::poly_l_m) return "poly_" + std::to_string(L) + "_m";
    if (method == Method::poly_l_s) return "poly_" + std::to_string(L) + "_s";
    return to_string(method);
}

int MethodSpec::resolved_k(int d) const {
    if (k > 0) return k;
    if (method == Method::poly_l_m || method == Method::poly_l_s) {
        return 2 * static_cast<int>(binomial(d + L, d));
    }
    return 1;  // 1-NN matching / sampling, as in the experiments
}

void ExperimentConfig::validate() const {
    setup.validate();
    if (methods.empty()) throw std::invalid_argument("ExperimentConfig: no methods");
    if (grid.empty()) throw std::invalid_argument("ExperimentConfig: empty grid");
    if (replications < 2) throw std::invalid_argument("ExperimentConfig: need replications >= 2");
    std::set<std::string> names;
    for (const auto& m : methods) {
        if (!names.insert(m.display_name()).second) {
            throw std::invalid_argument("ExperimentConfig: duplicate method " + m.display_name());
        }
    }
    for (double g : grid) {
        if (grid_kind == GridKind::sample_size) {
            if (!(g >= 2) || g != std::floor(g)) {
                throw std::invalid_argument("ExperimentConfig: sample-size grid must hold integers >= 2");
            }
        } else if (!(g > 0)) {
            throw std::invalid_argument("ExperimentConfig: mu_p grid must be positive");
        }
    }
}

SlopeFit fit_loglog_slope(const std::vector<std::pair<double, double>>& pairs) {
    std::vector<std::pair<double, double>> kept;
    long dropped = 0;
    for (const auto& [n, v] : pairs) {
        if (v > 0 && n > 0) kept.emplace_back(std::log2(n), std::log2(v));
        else ++dropped;
    }
    if (kept.size() < 2) throw std::invalid_argument("fit_loglog_slope: need >= 2 positive pairs");
    double sx = 0, sy = 0;
    for (const auto& [x, y] : kept) {
        sx += x;
        sy += y;
    }
    const double mx = sx / static_cast<double>(kept.size());
    const double my = sy / static_cast<double>(kept.size());
    double sxx = 0, sxy = 0, syy = 0;
    for (const auto& [x, y] : kept) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if (sxx == 0) throw std::invalid_argument("fit_loglog_slope: degenerate abscissae");
    SlopeFit fit;
    fit.dropped = dropped;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ssr = 0;
    for (const auto& [x, y] : kept) {
        const double e = y - (fit.intercept + fit.slope * x);
        ssr += e * e;
    }
    fit.r2 = syy > 0 ? 1.0 - ssr / syy : (ssr == 0 ? 1.0 : 0.0);
    return fit;
}

namespace {

struct CellResult {
    double estimate = 0.0;
    double censored_fraction = 0.0;
};

CellResult run_method(const MethodSpec& spec, const SetupConfig& scfg, const LabeledSample& source,
                      const LabeledSample& target, std::uint64_t rep_seed) {
    CellResult out;
    const int d = source.x.dim();
    switch (spec.method) {
        case Method::oracle:
            out.estimate = oracle_estimate(target.label);
            return out;
        case Method::kmm: {
            const WeightVector w = kmm_weights(source.x, target.x);
            out.estimate = weighted_estimate(source.label, w);
            return out;
        }
        case Method::kliep: {
            KliepOptions opt;
            opt.seed = derive_stream(rep_seed, 0x6b6c70ULL);
            const WeightVector w = kliep_weights(source.x, target.x, opt);
            out.estimate = weighted_estimate(source.label, w);
            return out;
        }
        default: break;
    }
    Dataset data{source.x, source.label, source.y, target.x};
    EstimatorConfig ecfg;
    ecfg.k = spec.resolved_k(d);
    ecfg.L = (spec.method == Method::poly_l_m || spec.method == Method::poly_l_s) ? spec.L : 0;
    ecfg.r0 = spec.r0;
    const bool sampling = spec.method == Method::sampling || spec.method == Method::poly_l_s;
    ecfg.label_mode = sampling ? LabelMode::sampling : LabelMode::matching;
    const EstimateReport rep = estimate_expectation(data, ecfg, sampling ? setup_h(scfg) : HFunc{});
    out.estimate = rep.value;
    out.censored_fraction = rep.censored_fraction;
    return out;
}

BenchReport run_grid(const ExperimentConfig& cfg) {
    cfg.validate();
    const std::size_t n_grid = cfg.grid.size();
    const std::size_t n_methods = cfg.methods.size();
    const std::size_t reps = static_cast<std::size_t>(cfg.replications);

    // estimates[(g * reps + r) * n_methods + m]; indexed writes keep the
    // aggregation independent of the scheduling.
    std::vector<double> estimates(n_grid * reps * n_methods, 0.0);
    std::vector<double> censored(n_grid * reps * n_methods, 0.0);
    double truth = 0.0;
    {
        SetupConfig probe = cfg.setup;
        probe.n = probe.m = 2;
        truth = generate(probe).first.truth;
    }

    parallel_for(n_grid * reps, [&](std::size_t task) {
        const std::size_t g = task / reps;
        const std::size_t r = task % reps;
        SetupConfig scfg = cfg.setup;
        if (cfg.grid_kind == GridKind::sample_size) {
            scfg.n = scfg.m = static_cast<int>(cfg.grid[g]);
        } else {
            scfg.mu_p = cfg.grid[g];
        }
        const std::uint64_t rep_seed = derive_stream(cfg.seed, static_cast<std::uint64_t>(g),
                                                     static_cast<std::uint64_t>(r));
        scfg.seed = rep_seed;
        const auto [source, target] = generate(scfg);
        for (std::size_t mi = 0; mi < n_methods; ++mi) {
            const CellResult res = run_method(cfg.methods[mi], scfg, source, target, rep_seed);
            estimates[(g * reps + r) * n_methods + mi] = res.estimate;
            censored[(g * reps + r) * n_methods + mi] = res.censored_fraction;
        }
    });

    BenchReport report;
    report.config = cfg;
    report.truth = truth;
    report.rows.reserve(n_methods * n_grid);
    for (std::size_t mi = 0; mi < n_methods; ++mi) {
        for (std::size_t g = 0; g < n_grid; ++g) {
            std::vector<double> errs(reps), sq(reps), cens(reps), abs_errs(reps);
            for (std::size_t r = 0; r < reps; ++r) {
                const double est = estimates[(g * reps + r) * n_methods + mi];
                errs[r] = est - truth;
                sq[r] = errs[r] * errs[r];
                abs_errs[r] = std::abs(errs[r]);
                cens[r] = censored[(g * reps + r) * n_methods + mi];
            }
            const MeanVar bias = mean_var(errs);
            const MeanVar sqv = mean_var(sq);
            BenchRow row;
            row.method = cfg.methods[mi].display_name();
            row.grid_value = cfg.grid[g];
            row.mean_bias = bias.mean;
            row.mse = sqv.mean;
            row.std_err_bias = bias.std_err;
            row.std_err_mse = sqv.std_err;
            row.censored_fraction = mean(cens);
            row.mean_abs_error = mean(abs_errs);
            row.replications = cfg.replications;
            report.rows.push_back(std::move(row));
        }
    }

    if (cfg.grid_kind == GridKind::sample_size) {
        for (std::size_t mi = 0; mi < n_methods; ++mi) {
            const Method method = cfg.methods[mi].method;
            // Importance-weighting baselines need not follow a power law.
            if (method == Method::kmm || method == Method::kliep) continue;
            std::vector<std::pair<double, double>> pairs;
            std::size_t positive = 0;
            for (std::size_t g = 0; g < n_grid; ++g) {
                const BenchRow& row = report.rows[mi * n_grid + g];
                pairs.emplace_back(row.grid_value, row.mean_abs_error);
                positive += row.mean_abs_error > 0 ? 1 : 0;
            }
            if (positive >= 2) report.fitted[cfg.methods[mi].display_name()] = fit_loglog_slope(pairs);
        }
    }
    return report;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general);
    return std::string(buf, res.ptr);
}

}  // namespace

BenchReport run_bias_experiment(const ExperimentConfig& cfg) {
    if (cfg.grid_kind != GridKind::sample_size) {
        throw std::invalid_argument("run_bias_experiment: grid must range over sample sizes");
    }
    return run_grid(cfg);
}

BenchReport run_transfer_sweep(const ExperimentConfig& cfg) {
    if (cfg.grid_kind != GridKind::mu_p) {
        throw std::invalid_argument("run_transfer_sweep: grid must range over mu_p");
    }
    return run_grid(cfg);
}

void write_csv(const BenchReport& report, std::ostream& out) {
    out << "method,grid_value,mean_bias,mse,std_err_bias,std_err_mse,censored_fraction,replications\n";
    for (const auto& row : report.rows) {
        out << row.method << ',' << format_double(row.grid_value) << ',' << format_double(row.mean_bias) << ','
            << format_double(row.mse) << ',' << format_double(row.std_err_bias) << ','
            << format_double(row.std_err_mse) << ',' << format_double(row.censored_fraction) << ','
            << row.replications << '\n';
    }
}

namespace {

json config_to_json(const ExperimentConfig& cfg) {
    json methods = json::array();
    for (const auto& m : cfg.methods) {
        json jm{{"name", to_string(m.method)}};
        jm["k"] = m.resolved_k(cfg.setup.d);
        if (m.method == Method::poly_l_m || m.method == Method::poly_l_s) jm["L"] = m.L;
        jm["r0"] = m.r0;
        methods.push_back(jm);
    }
    return json{{"setup",
                 {{"name", to_string(cfg.setup.setup)},
                  {"d0", cfg.setup.d0},
                  {"d", cfg.setup.d},
                  {"mu_p", cfg.setup.mu_p},
                  {"n", cfg.setup.n},
                  {"m", cfg.setup.m}}},
                {"grid", {{"over", cfg.grid_kind == GridKind::sample_size ? "n" : "mu_p"}, {"values", cfg.grid}}},
                {"methods", methods},
                {"replications", cfg.replications},
                {"seed", cfg.seed}};
}

}  // namespace

std::string to_json(const BenchReport& report) {
    json rows = json::array();
    for (const auto& row : report.rows) {
        rows.push_back({{"method", row.method},
                        {"grid_value", row.grid_value},
                        {"mean_bias", row.mean_bias},
                        {"mse", row.mse},
                        {"std_err_bias", row.std_err_bias},
                        {"std_err_mse", row.std_err_mse},
                        {"censored_fraction", row.censored_fraction},
                        {"mean_abs_error", row.mean_abs_error},
                        {"replications", row.replications}});
    }
    json fitted = json::object();
    for (const auto& [name, fit] : report.fitted) {
        fitted[name] = {{"slope", fit.slope}, {"intercept", fit.intercept}, {"r2", fit.r2}, {"dropped", fit.dropped}};
    }
    json doc{{"config", config_to_json(report.config)}, {"truth", report.truth}, {"rows", rows}, {"fitted", fitted}};
    return doc.dump(2);
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("experiment config: ") + e.what());
    }
    ExperimentConfig cfg;
    const auto& setup = doc.at("setup");
    cfg.setup.setup = setup_from_string(setup.at("name").get<std::string>());
    cfg.setup.d0 = setup.value("d0", 2);
    cfg.setup.d = setup.value("d", cfg.setup.d0);
    cfg.setup.mu_p = setup.value("mu_p", 1.0);
    cfg.setup.n = setup.value("n", 1000);
    cfg.setup.m = setup.value("m", cfg.setup.n);
    const auto& grid = doc.at("grid");
    const std::string over = grid.at("over").get<std::string>();
    if (over == "n" || over == "sample_size") cfg.grid_kind = GridKind::sample_size;
    else if (over == "mu_p") cfg.grid_kind = GridKind::mu_p;
    else throw std::invalid_argument("experiment config: grid.over must be 'n' or 'mu_p'");
    cfg.grid = grid.at("values").get<std::vector<double>>();
    for (const auto& jm : doc.at("methods")) {
        MethodSpec spec;
        spec.method = method_from_string(jm.at("name").get<std::string>());
        spec.k = jm.value("k", 0);
        spec.L = jm.value("L", 2);
        spec.r0 = jm.value("r0", 1.0);
        cfg.methods.push_back(spec);
    }
    cfg.replications = doc.value("replications", 200);
    cfg.seed = doc.value("seed", 0ULL);
    cfg.validate();
    return cfg;
}

}  // namespace shiftmatch
