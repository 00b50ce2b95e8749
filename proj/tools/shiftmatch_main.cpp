// Command-line front end: data generation, expectation and ATE estimation,
// Monte Carlo benchmarking, and transferability audits.
//
// Exit codes: 0 ok, 1 usage error, 2 data error, 3 numerical failure.

#include "shiftmatch/audit.hpp"
#include "shiftmatch/baselines.hpp"
#include "shiftmatch/bench.hpp"
#include "shiftmatch/dataset_io.hpp"
#include "shiftmatch/estimators.hpp"
#include "shiftmatch/hexpr.hpp"
#include "shiftmatch/numeric.hpp"
#include "shiftmatch/rng.hpp"
#include "shiftmatch/synthdata.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

using nlohmann::json;
using namespace shiftmatch;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

void emit(const json& doc, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << doc.dump(2) << '\n';
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw DataError("cannot write " + out_path);
    out << doc.dump(2) << '\n';
}

double parse_r0(const std::string& text) {
    if (text == "inf" || text == "infinity") return std::numeric_limits<double>::infinity();
    try {
        return std::stod(text);
    } catch (const std::exception&) {
        throw CLI::ValidationError("--r0", "expected a positive real or 'inf'");
    }
}

struct EstimateArgs {
    std::string source_csv, target_csv, out, weights_out, h_expr;
    std::string norm = "euclidean", label_mode = "matching", r0_text = "1";
    int k = 0, L = 0;
};

int run_estimate(const EstimateArgs& args) {
    const CsvTable source = read_csv_file(args.source_csv);
    const CsvTable target = read_csv_file(args.target_csv);
    if (source.d != target.d) throw DataError("source and target dimension mismatch");

    EstimatorConfig cfg;
    cfg.k = args.k;
    cfg.L = args.L;
    cfg.r0 = parse_r0(args.r0_text);
    cfg.norm = norm_from_string(args.norm);
    cfg.label_mode = label_mode_from_string(args.label_mode);

    Dataset data;
    data.source_x = PointSet{source.x, cfg.norm};
    data.target_x = PointSet{target.x, cfg.norm};
    if (source.y) data.source_y = *source.y;

    std::optional<HExpr> expr;
    if (!args.h_expr.empty()) expr.emplace(HExpr::parse(args.h_expr, source.d));

    if (source.label) {
        data.source_label = *source.label;
    } else {
        if (!source.y) throw DataError("source CSV has no label column and no y column");
        if (!expr) throw DataError("source CSV has no label column; pass --h-expr to evaluate h(x, y)");
        data.source_label.resize(static_cast<std::size_t>(source.x.rows()));
        for (Eigen::Index i = 0; i < source.x.rows(); ++i) {
            data.source_label[static_cast<std::size_t>(i)] =
                expr->eval(data.source_x.point(static_cast<int>(i)), (*source.y)[static_cast<std::size_t>(i)]);
        }
    }

    HFunc h;
    if (cfg.label_mode == LabelMode::sampling) {
        if (!expr) throw std::invalid_argument("sampling mode requires --h-expr");
        if (!source.y) throw DataError("sampling mode requires a y column in the source CSV");
        const HExpr* e = &*expr;
        h = [e](std::span<const double> z, double y) { return e->eval(z, y); };
    }

    const std::int64_t floor = cfg.recommended_k_floor(source.d);
    if (cfg.resolved_k(source.d) < floor) {
        std::cerr << "warning: k = " << cfg.resolved_k(source.d) << " is below the theoretical floor (2D+1)K* = "
                  << floor << "; smaller k often performs better in practice\n";
    }

    const bool want_weights = !args.weights_out.empty();
    const EstimateReport report = estimate_expectation(data, cfg, h, want_weights);
    if (want_weights) {
        std::ofstream wout(args.weights_out);
        if (!wout) throw DataError("cannot write " + args.weights_out);
        write_weights_csv(*report.per_source_weights, wout);
    }

    json doc{{"value", report.value},
             {"censored_fraction", report.censored_fraction},
             {"fallback_count", report.fallback_count},
             {"n", source.x.rows()},
             {"m", target.x.rows()},
             {"config",
              {{"k", cfg.resolved_k(source.d)},
               {"L", cfg.L},
               {"r0", cfg.r0},
               {"norm", to_string(cfg.norm)},
               {"label_mode", to_string(cfg.label_mode)}}}};
    emit(doc, args.out);
    return kExitOk;
}

struct AteArgs {
    std::string panel_csv, out;
    std::string norm = "euclidean", r0_text = "1";
    int k = 0, L = 0;
    bool lenient = false;
};

int run_ate(const AteArgs& args) {
    const CsvTable table = read_csv_file(args.panel_csv);
    EstimatorConfig cfg;
    cfg.k = args.k;
    cfg.L = args.L;
    cfg.r0 = parse_r0(args.r0_text);
    cfg.norm = norm_from_string(args.norm);
    const AtePanel panel = panel_from_table(table, cfg.norm);

    long treated = 0;
    for (int w : panel.w) treated += w;
    const bool one_armed = treated == 0 || treated == static_cast<long>(panel.w.size());
    if (one_armed && !args.lenient) {
        throw DataError("panel has an empty treatment arm (use --lenient to estimate anyway)");
    }

    const AteReport report = estimate_ate(panel, cfg);
    json doc{{"mu_hat", report.mu_hat},
             {"censored_treated", report.censored_treated},
             {"censored_control", report.censored_control},
             {"n_treated", report.n_treated},
             {"n_control", report.n_control},
             {"fully_censored", one_armed}};
    emit(doc, args.out);
    return kExitOk;
}

struct GenArgs {
    std::string setup = "exponential_sin", out_prefix;
    int d0 = 2, d = 2, n = 1000, m = 1000;
    double mu_p = 1.0;
    std::uint64_t seed = 0;
};

int run_gen(const GenArgs& args) {
    SetupConfig cfg;
    cfg.setup = setup_from_string(args.setup);
    cfg.d0 = args.d0;
    cfg.d = args.d;
    cfg.mu_p = args.mu_p;
    cfg.n = args.n;
    cfg.m = args.m;
    cfg.seed = args.seed;
    const auto [source, target] = generate(cfg);

    write_sample_csv_file(source, args.out_prefix + "_source.csv");
    write_sample_csv_file(target, args.out_prefix + "_target.csv");
    json meta{{"setup", to_string(cfg.setup)}, {"d0", cfg.d0},     {"d", cfg.d},
              {"mu_p", cfg.mu_p},              {"n", cfg.n},       {"m", cfg.m},
              {"seed", cfg.seed},              {"truth", source.truth}};
    if (cfg.setup == Setup::normal_poly) meta["stated_truth"] = normal_poly_stated_truth(cfg.d0);
    std::ofstream meta_out(args.out_prefix + "_meta.json");
    if (!meta_out) throw DataError("cannot write " + args.out_prefix + "_meta.json");
    meta_out << meta.dump(2) << '\n';
    std::cerr << "wrote " << args.out_prefix << "_{source,target}.csv and _meta.json\n";
    return kExitOk;
}

struct BenchArgs {
    std::string config_path, out_dir;
};

int run_bench(const BenchArgs& args) {
    std::ifstream in(args.config_path);
    if (!in) throw DataError("cannot open " + args.config_path);
    std::stringstream buf;
    buf << in.rdbuf();
    const ExperimentConfig cfg = experiment_config_from_json(buf.str());
    const BenchReport report =
        cfg.grid_kind == GridKind::sample_size ? run_bias_experiment(cfg) : run_transfer_sweep(cfg);

    std::filesystem::create_directories(args.out_dir);
    {
        std::ofstream csv(args.out_dir + "/report.csv");
        if (!csv) throw DataError("cannot write " + args.out_dir + "/report.csv");
        write_csv(report, csv);
    }
    {
        std::ofstream summary(args.out_dir + "/summary.json");
        if (!summary) throw DataError("cannot write " + args.out_dir + "/summary.json");
        summary << to_json(report) << '\n';
    }
    std::cerr << "wrote " << args.out_dir << "/report.csv and summary.json\n";
    return kExitOk;
}

struct AuditArgs {
    std::string family, out;
    double g_res = 1.0, g_cov = 1.0, g_bias = 0.5;
    std::vector<double> sigma_p, sigma_q;
    double mu_p = 1.0, mu_q = 1.0, s_p = 1.0, s_q = 1.0, big_m = 0.0, s = 1.0, gamma = 1.0;
    int d = 1;
    bool fast_rate = false;
    // Monte Carlo mode
    bool mc = false;
    std::string q_family = "exponential", p_family = "exponential";
    double q_a = 1.0, q_b = 1.0, p_a = 1.0, p_b = 1.0;
    long samples = 1000000;
    std::uint64_t seed = 0;
};

Eigen::MatrixXd matrix_from_flag(const std::vector<double>& vals, const char* what) {
    if (vals.empty()) throw std::invalid_argument(std::string(what) + " is required for the gaussian family");
    const int d_full = static_cast<int>(std::lround(std::sqrt(static_cast<double>(vals.size()))));
    if (static_cast<std::size_t>(d_full) * static_cast<std::size_t>(d_full) == vals.size()) {
        Eigen::MatrixXd m(d_full, d_full);
        for (int i = 0; i < d_full; ++i) {
            for (int j = 0; j < d_full; ++j) m(i, j) = vals[static_cast<std::size_t>(i * d_full + j)];
        }
        return m;
    }
    // Not a square count: treat as a diagonal.
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(vals.size()),
                                              static_cast<Eigen::Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = vals[i];
    return m;
}

json verdict_to_json(const TransferVerdict& v) {
    json ineqs = json::array();
    for (const auto& q : v.inequalities) {
        ineqs.push_back({{"name", q.name}, {"lhs", q.lhs}, {"rhs", q.rhs}, {"slack", q.slack}});
    }
    return json{{"satisfied", v.satisfied}, {"margin", v.margin}, {"inequalities", ineqs}};
}

int run_audit(const AuditArgs& args) {
    if (args.mc) {
        FamilySpec q{family_from_string(args.q_family), args.q_a, args.q_b};
        FamilySpec p{family_from_string(args.p_family), args.p_a, args.p_b};
        q.validate();
        p.validate();
        const auto sampler = [q](CounterRng& rng) { return q.draw(rng); };
        const auto [m2, m_half] = estimate_importance_integrals(
            sampler, [q](double x) { return q.density(x); }, [p](double x) { return p.density(x); }, args.samples,
            args.seed);
        json doc{{"q", {{"family", args.q_family}, {"a", args.q_a}, {"b", args.q_b}}},
                 {"p", {{"family", args.p_family}, {"a", args.p_a}, {"b", args.p_b}}},
                 {"m2", {{"value", m2.value}, {"std_err", m2.std_err}, {"diverging", m2.diverging}}},
                 {"m_half", {{"value", m_half.value}, {"std_err", m_half.std_err}, {"diverging", m_half.diverging}}},
                 {"n_samples", args.samples}};
        emit(doc, args.out);
        return kExitOk;
    }

    TransferVerdict verdict;
    if (args.family == "gaussian") {
        verdict = check_gaussian(matrix_from_flag(args.sigma_p, "--sigma-p"), matrix_from_flag(args.sigma_q, "--sigma-q"),
                                 args.g_res, args.g_cov, args.g_bias);
    } else if (args.family == "gamma") {
        verdict = check_gamma(args.mu_p, args.s_p, args.mu_q, args.s_q, args.g_res, args.g_cov, args.g_bias,
                              args.fast_rate);
    } else if (args.family == "pareto") {
        verdict = check_pareto(args.mu_p, args.mu_q, args.big_m, args.g_res, args.g_cov, args.g_bias);
    } else if (args.family == "boundary-uniform") {
        verdict = check_boundary_uniform(args.s, args.d, args.mu_p, args.mu_q, args.gamma);
    } else {
        throw std::invalid_argument("--family must be gaussian|gamma|pareto|boundary-uniform");
    }
    json doc = verdict_to_json(verdict);
    doc["family"] = args.family;
    emit(doc, args.out);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"k-NN matching and local polynomial estimation under covariate shift"};
    app.require_subcommand(1);

    EstimateArgs est;
    auto* est_cmd = app.add_subcommand("estimate", "estimate E[h(X*, Y*)] from source/target CSVs");
    est_cmd->add_option("--source", est.source_csv, "labelled source CSV")->required();
    est_cmd->add_option("--target", est.target_csv, "unlabelled target CSV")->required();
    est_cmd->add_option("--k", est.k, "neighbour count (0 = default 2*kstar)");
    est_cmd->add_option("--L", est.L, "polynomial order");
    est_cmd->add_option("--r0", est.r0_text, "censor radius (positive real or 'inf')");
    est_cmd->add_option("--norm", est.norm, "euclidean|l1|linf");
    est_cmd->add_option("--label-mode", est.label_mode, "matching|sampling");
    est_cmd->add_option("--h-expr", est.h_expr, "h(x, y) expression, e.g. 'cos(x2)*y+1'");
    est_cmd->add_option("--weights-out", est.weights_out, "write per-source weights CSV (L=0, matching)");
    est_cmd->add_option("--out", est.out, "write the JSON report here instead of stdout");

    AteArgs ate;
    auto* ate_cmd = app.add_subcommand("ate", "average treatment effect from a panel CSV");
    ate_cmd->add_option("--panel", ate.panel_csv, "panel CSV with x1..xd, w, y")->required();
    ate_cmd->add_option("--k", ate.k, "neighbour count (0 = default)");
    ate_cmd->add_option("--L", ate.L, "polynomial order");
    ate_cmd->add_option("--r0", ate.r0_text, "censor radius (positive real or 'inf')");
    ate_cmd->add_option("--norm", ate.norm, "euclidean|l1|linf");
    ate_cmd->add_flag("--lenient", ate.lenient, "report instead of failing when an arm is empty");
    ate_cmd->add_option("--out", ate.out, "write the JSON report here instead of stdout");

    GenArgs gen;
    auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic source/target dataset");
    gen_cmd->add_option("--setup", gen.setup, "exponential_sin|normal_poly");
    gen_cmd->add_option("--d0", gen.d0, "intrinsic dimension");
    gen_cmd->add_option("--d", gen.d, "ambient dimension");
    gen_cmd->add_option("--mu-p", gen.mu_p, "source distribution parameter");
    gen_cmd->add_option("--n", gen.n, "source sample size");
    gen_cmd->add_option("--m", gen.m, "target sample size");
    gen_cmd->add_option("--seed", gen.seed, "master seed");
    gen_cmd->add_option("--out-prefix", gen.out_prefix, "output path prefix")->required();

    BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("bench", "run a Monte Carlo experiment from a JSON config");
    bench_cmd->add_option("--config", bench.config_path, "experiment config JSON")->required();
    bench_cmd->add_option("--out-dir", bench.out_dir, "output directory")->required();

    AuditArgs audit;
    auto* audit_cmd = app.add_subcommand("audit", "transferability condition checks and integral estimates");
    audit_cmd->add_option("--family", audit.family, "gaussian|gamma|pareto|boundary-uniform");
    audit_cmd->add_option("--g-res", audit.g_res, "residual exponent");
    audit_cmd->add_option("--g-cov", audit.g_cov, "covariance exponent");
    audit_cmd->add_option("--g-bias", audit.g_bias, "bias exponent");
    audit_cmd->add_option("--sigma-p", audit.sigma_p, "source covariance (row-major or diagonal)")->delimiter(',');
    audit_cmd->add_option("--sigma-q", audit.sigma_q, "target covariance (row-major or diagonal)")->delimiter(',');
    audit_cmd->add_option("--mu-p", audit.mu_p, "source rate/exponent");
    audit_cmd->add_option("--mu-q", audit.mu_q, "target rate/exponent");
    audit_cmd->add_option("--s-p", audit.s_p, "source shape (gamma)");
    audit_cmd->add_option("--s-q", audit.s_q, "target shape (gamma)");
    audit_cmd->add_option("--big-m", audit.big_m, "regression growth exponent (pareto)");
    audit_cmd->add_option("--s", audit.s, "cusp exponent (boundary-uniform)");
    audit_cmd->add_option("--d", audit.d, "dimension (boundary-uniform)");
    audit_cmd->add_option("--gamma", audit.gamma, "common exponent (boundary-uniform)");
    audit_cmd->add_flag("--fast-rate", audit.fast_rate, "include the optional 2 s_Q > s_P + 1 inequality");
    audit_cmd->add_flag("--mc", audit.mc, "Monte Carlo importance-integral estimation");
    audit_cmd->add_option("--q-family", audit.q_family, "target family (mc)");
    audit_cmd->add_option("--p-family", audit.p_family, "source family (mc)");
    audit_cmd->add_option("--q-a", audit.q_a, "target family parameter a (mc)");
    audit_cmd->add_option("--q-b", audit.q_b, "target family parameter b (mc)");
    audit_cmd->add_option("--p-a", audit.p_a, "source family parameter a (mc)");
    audit_cmd->add_option("--p-b", audit.p_b, "source family parameter b (mc)");
    audit_cmd->add_option("--samples", audit.samples, "Monte Carlo sample count (mc)");
    audit_cmd->add_option("--seed", audit.seed, "Monte Carlo seed (mc)");
    audit_cmd->add_option("--out", audit.out, "write the JSON verdict here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (est_cmd->parsed()) return run_estimate(est);
        if (ate_cmd->parsed()) return run_ate(ate);
        if (gen_cmd->parsed()) return run_gen(gen);
        if (bench_cmd->parsed()) return run_bench(bench);
        if (audit_cmd->parsed()) return run_audit(audit);
        std::cerr << "error: no subcommand\n";
        return kExitUsage;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const HExprError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::domain_error& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kExitNumeric;
    }
}
