// Integration tests for the command-line tool: spawns the binary given as
// argv[1] and checks outputs and the exit-code contract (0 ok, 1 usage,
// 2 data, 3 numerical).

#include <nlohmann/json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string g_cli;
fs::path g_dir;
int g_failures = 0;
int g_checks = 0;

void check(bool ok, const std::string& what) {
    ++g_checks;
    if (!ok) {
        ++g_failures;
        std::cerr << "FAILED: " << what << '\n';
    }
}

struct RunResult {
    int exit_code = -1;
    std::string out;
};

RunResult run(const std::string& args) {
    const fs::path out_file = g_dir / "stdout.txt";
    const std::string cmd = g_cli + " " + args + " > " + out_file.string() + " 2> " + (g_dir / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    RunResult res;
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(out_file);
    std::stringstream buf;
    buf << in.rdbuf();
    res.out = buf.str();
    return res;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

void test_gen_estimate_round_trip() {
    const std::string prefix = (g_dir / "expsin").string();
    const RunResult gen = run("gen --setup exponential_sin --d0 2 --d 2 --mu-p 0.5 --n 400 --m 400 --seed 7 "
                              "--out-prefix " + prefix);
    check(gen.exit_code == 0, "gen exits 0");
    const json meta = json::parse(slurp(prefix + "_meta.json"));
    check(meta.at("truth").get<double>() == 1.25, "gen sidecar records truth 1.25");

    const RunResult est = run("estimate --source " + prefix + "_source.csv --target " + prefix +
                              "_target.csv --k 1 --L 0");
    check(est.exit_code == 0, "estimate exits 0");
    const json rep = json::parse(est.out);
    check(std::abs(rep.at("value").get<double>() - 1.25) < 0.5, "estimate lands near the truth");
    check(rep.at("config").at("k").get<int>() == 1, "report echoes k");

    // Determinism of gen: identical bytes for identical seeds.
    const std::string prefix2 = (g_dir / "expsin2").string();
    run("gen --setup exponential_sin --d0 2 --d 2 --mu-p 0.5 --n 400 --m 400 --seed 7 --out-prefix " + prefix2);
    check(slurp(prefix + "_source.csv") == slurp(prefix2 + "_source.csv"), "gen is reproducible");
}

void test_estimate_fixture() {
    // Hand-computed 1-NN matches: targets 0.0 -> label 2, 1.0 -> label 6.
    write_file(g_dir / "src.csv", "x1,label\n0.1,2\n0.9,6\n0.5,4\n");
    write_file(g_dir / "tgt.csv", "x1\n0\n1\n");
    const RunResult est = run("estimate --source " + (g_dir / "src.csv").string() + " --target " +
                              (g_dir / "tgt.csv").string() + " --k 1 --L 0 --r0 1");
    check(est.exit_code == 0, "fixture estimate exits 0");
    const json rep = json::parse(est.out);
    check(rep.at("value").get<double>() == 4.0, "fixture value is the exact neighbour mean");
    check(rep.at("censored_fraction").get<double>() == 0.0, "fixture uncensored");

    const RunResult inf = run("estimate --source " + (g_dir / "src.csv").string() + " --target " +
                              (g_dir / "tgt.csv").string() + " --k 1 --L 0 --r0 inf");
    check(json::parse(inf.out).at("censored_fraction").get<double>() == 0.0, "r0=inf disables censoring");

    // h-expr independent of x: sampling equals matching.
    write_file(g_dir / "src_y.csv", "x1,y\n0.1,1\n0.9,3\n0.5,2\n");
    const std::string base = "estimate --source " + (g_dir / "src_y.csv").string() + " --target " +
                             (g_dir / "tgt.csv").string() + " --k 1 --L 0 --h-expr y*2+1";
    const json match = json::parse(run(base).out);
    const json sample = json::parse(run(base + " --label-mode sampling").out);
    check(match.at("value") == sample.at("value"), "sampling == matching when h ignores x");

    // Weights reproduce the estimate.
    const RunResult west = run(base + " --weights-out " + (g_dir / "w.csv").string());
    check(west.exit_code == 0, "weights-out accepted for L=0");
    const std::string wcsv = slurp(g_dir / "w.csv");
    check(wcsv.rfind("index,weight", 0) == 0, "weights CSV header");
}

void test_exit_codes() {
    check(run("estimate --source missing.csv --target missing.csv").exit_code == 2, "missing file -> 2");
    check(run("nonsense-subcommand").exit_code == 1, "unknown subcommand -> 1");
    check(run("estimate --source a.csv").exit_code == 1, "missing required flag -> 1");

    write_file(g_dir / "bad.csv", "x1,label\n0.1,not_a_number\n");
    write_file(g_dir / "tgt1.csv", "x1\n0\n");
    check(run("estimate --source " + (g_dir / "bad.csv").string() + " --target " + (g_dir / "tgt1.csv").string())
              .exit_code == 2,
          "malformed csv -> 2");

    write_file(g_dir / "src2.csv", "x1,x2,label\n0,0,1\n1,0,2\n0,1,3\n1,1,4\n");
    write_file(g_dir / "tgt2.csv", "x1,x2\n0.5,0.5\n");
    check(run("estimate --source " + (g_dir / "src2.csv").string() + " --target " + (g_dir / "tgt2.csv").string() +
              " --k 2 --L 2")
              .exit_code == 1,
          "k < kstar with L >= 1 -> 1");

    check(run("estimate --source " + (g_dir / "src2.csv").string() + " --target " + (g_dir / "tgt2.csv").string() +
              " --label-mode sampling")
              .exit_code == 1,
          "sampling without h-expr -> 1");

    write_file(g_dir / "src3.csv", "x1,y\n0.1,1\n");
    check(run("estimate --source " + (g_dir / "src3.csv").string() + " --target " + (g_dir / "tgt1.csv").string() +
              " --h-expr 'cos(('")
              .exit_code == 1,
          "bad h-expr -> 1");
}

void test_ate() {
    write_file(g_dir / "panel.csv", "x1,w,y\n0,0,10\n0.2,1,13\n1,0,20\n1.2,1,24\n");
    const RunResult r = run("ate --panel " + (g_dir / "panel.csv").string() + " --k 1 --r0 inf");
    check(r.exit_code == 0, "ate exits 0");
    check(json::parse(r.out).at("mu_hat").get<double>() == 3.5, "ate fixture value");

    write_file(g_dir / "panel_flip.csv", "x1,w,y\n0,1,10\n0.2,0,13\n1,1,20\n1.2,0,24\n");
    const RunResult rf = run("ate --panel " + (g_dir / "panel_flip.csv").string() + " --k 1 --r0 inf");
    check(json::parse(rf.out).at("mu_hat").get<double>() == -3.5, "swapped arms negate mu_hat");

    write_file(g_dir / "one_arm.csv", "x1,w,y\n0,0,1\n1,0,2\n");
    check(run("ate --panel " + (g_dir / "one_arm.csv").string()).exit_code == 2, "empty arm -> 2");
    const RunResult lenient = run("ate --panel " + (g_dir / "one_arm.csv").string() + " --lenient");
    check(lenient.exit_code == 0, "lenient one-arm panel exits 0");
    const json lj = json::parse(lenient.out);
    check(lj.at("fully_censored").get<bool>(), "lenient report flags full censoring");
    check(std::isfinite(lj.at("mu_hat").get<double>()), "lenient report still carries a value");
}

void test_bench_and_audit() {
    write_file(g_dir / "bench.json", R"({
      "setup": {"name": "exponential_sin", "d0": 2, "d": 2, "mu_p": 0.5, "n": 100, "m": 100},
      "grid": {"over": "n", "values": [100]},
      "methods": [{"name": "matching", "k": 1}],
      "replications": 2,
      "seed": 5
    })");
    const RunResult b = run("bench --config " + (g_dir / "bench.json").string() + " --out-dir " +
                            (g_dir / "bench_out").string());
    check(b.exit_code == 0, "bench exits 0");
    const std::string csv = slurp(g_dir / "bench_out" / "report.csv");
    int lines = 0;
    for (char c : csv) lines += c == '\n';
    check(lines == 2, "bench csv has header + 1 row");
    const json summary = json::parse(slurp(g_dir / "bench_out" / "summary.json"));
    check(summary.at("rows").size() == 1, "bench summary row count");

    write_file(g_dir / "sweep.json", R"({
      "setup": {"name": "exponential_sin", "d0": 2, "d": 2, "n": 100, "m": 100},
      "grid": {"over": "mu_p", "values": [1.0, 2.0]},
      "methods": [{"name": "matching", "k": 1}, {"name": "oracle"}],
      "replications": 2,
      "seed": 6
    })");
    const RunResult sw = run("bench --config " + (g_dir / "sweep.json").string() + " --out-dir " +
                             (g_dir / "sweep_out").string());
    check(sw.exit_code == 0, "mu_p sweep exits 0");
    const json sweep_summary = json::parse(slurp(g_dir / "sweep_out" / "summary.json"));
    check(sweep_summary.at("rows").size() == 4, "sweep rows = methods x grid");
    check(sweep_summary.at("fitted").empty(), "sweep has no slope fits");

    const RunResult a = run("audit --family gaussian --sigma-p 2 --sigma-q 1");
    check(a.exit_code == 0, "audit exits 0");
    const json verdict = json::parse(a.out);
    check(verdict.at("satisfied").get<bool>(), "critical gaussian example satisfied");

    const RunResult bdr = run("audit --family gamma --mu-p 2 --mu-q 1 --s-p 1 --s-q 1");
    check(!json::parse(bdr.out).at("satisfied").get<bool>(), "gamma boundary not satisfied");

    const RunResult mc = run("audit --mc --q-family exponential --q-a 1 --p-family exponential --p-a 0.5 "
                             "--samples 50000 --seed 3");
    check(mc.exit_code == 0, "audit --mc exits 0");
    const json mcj = json::parse(mc.out);
    check(std::abs(mcj.at("m2").at("value").get<double>() - 4.0 / 3.0) < 0.05, "mc integral near 4/3");
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: cli_tests <path-to-shiftmatch-binary>\n";
        return 2;
    }
    g_cli = argv[1];
    g_dir = fs::temp_directory_path() / "shiftmatch_cli_tests";
    fs::remove_all(g_dir);
    fs::create_directories(g_dir);

    test_gen_estimate_round_trip();
    test_estimate_fixture();
    test_exit_codes();
    test_ate();
    test_bench_and_audit();

    std::cout << (g_checks - g_failures) << "/" << g_checks << " cli checks passed\n";
    return g_failures == 0 ? 0 : 1;
}
