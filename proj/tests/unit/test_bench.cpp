#include "specicg/bench.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

using namespace specicg;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("specicg_bench_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

RunConfig parse(const std::string& text)
{
    std::istringstream in(text);
    return parse_run_config(in);
}

RunConfig small_config()
{
    return parse("instance = bmc\n"
                 "source = binomial\n"
                 "seed = 7\n"
                 "block_height = 10\n"
                 "block_width = 12\n"
                 "density = 0.5\n"
                 "thetas = 1\n"
                 "methods = IA, DA, ECG, AG\n"
                 "time_budget = 30\n"
                 "checkpoints = 10, 20, 30\n");
}

std::vector<std::vector<std::string>> read_csv(const std::string& path)
{
    std::ifstream in(path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            cells.push_back(cell);
        if (!line.empty() && line.back() == ',')
            cells.emplace_back();
        rows.push_back(cells);
    }
    return rows;
}

void write_file(const fs::path& path, const std::string& text)
{
    std::ofstream out(path);
    out << text;
}

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(ICGBENCH_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("parse_run_config reads every documented key")
{
    const RunConfig cfg = parse("# comment line\n"
                                "instance = MC   # trailing comment\n"
                                "source = trunc_normal\n"
                                "seed = 42\n"
                                "block_rows = 1\nblock_cols = 1\n"
                                "block_height = 20\nblock_width = 30\n"
                                "density = 0.3\n"
                                "alpha = 5\nbeta = 4\nmu = 1.5\n"
                                "thetas = 1, 0.1\n"
                                "methods = ia, Ecg\n"
                                "rho_hat = inf\n"
                                "relative_residual = false\n"
                                "time_budget = 12.5\n"
                                "checkpoints = 1,2\n"
                                "iteration_cap = 99\n"
                                "mode = strict\n");
    CHECK(cfg.instance == "mc");
    CHECK(cfg.source == "trunc_normal");
    CHECK(cfg.seed == 42);
    CHECK(cfg.block_height == 20);
    CHECK(cfg.block_width == 30);
    CHECK(cfg.density == 0.3);
    CHECK(cfg.alpha == 5.0);
    CHECK(cfg.beta == 4.0);
    CHECK(cfg.mu == 1.5);
    CHECK(cfg.thetas == std::vector<double>{1.0, 0.1});
    CHECK(cfg.methods == std::vector<BenchMethod>{BenchMethod::ia, BenchMethod::ecg});
    CHECK(std::isinf(cfg.rho_hat));
    CHECK_FALSE(cfg.relative_residual);
    CHECK(cfg.time_budget == 12.5);
    CHECK(cfg.checkpoints == std::vector<double>{1.0, 2.0});
    CHECK(cfg.iteration_cap == 99);
    CHECK(cfg.mode == SolverMode::strict);
}

TEST_CASE("parse_run_config defaults mirror the reporting format")
{
    const RunConfig cfg = parse("");
    CHECK(cfg.time_budget == 1000.0);
    CHECK(cfg.checkpoints == std::vector<double>{100.0, 200.0, 400.0, 800.0});
    CHECK(cfg.methods.size() == 4);
    CHECK(cfg.mode == SolverMode::practical);
}

TEST_CASE("parse_run_config rejects bad input")
{
    CHECK_THROWS_AS(parse("colour = blue\n"), ConfigError);
    CHECK_THROWS_AS(parse("no equals sign\n"), ConfigError);
    CHECK_THROWS_AS(parse("methods = IA, NCF\n"), ConfigError);
    CHECK_THROWS_AS(parse("instance = rpca\n"), ConfigError);
    CHECK_THROWS_AS(parse("density = lots\n"), ConfigError);
    CHECK_THROWS_AS(parse("density = 1.5\n"), ConfigError);
    CHECK_THROWS_AS(parse("thetas = \n"), ConfigError);
    CHECK_THROWS_AS(parse("methods = \n"), ConfigError);
    CHECK_THROWS_AS(parse("time_budget = 0\n"), ConfigError);
    CHECK_THROWS_AS(parse("rho_hat = -1\n"), ConfigError);
    CHECK_THROWS_AS(parse("source = csv\n"), ConfigError);
    CHECK_THROWS_AS(parse("instance = mc\nblock_rows = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse("mode = lenient\n"), ConfigError);
    CHECK_THROWS_AS(parse("relative_residual = maybe\n"), ConfigError);
    CHECK_THROWS_AS(load_run_config("/nonexistent/specicg.cfg"), ConfigError);
}

TEST_CASE("method names round-trip")
{
    for (BenchMethod m : {BenchMethod::ia, BenchMethod::da, BenchMethod::ecg, BenchMethod::ag})
        CHECK(parse_bench_method(to_string(m)) == m);
    CHECK(parse_bench_method("dA") == BenchMethod::da);
    CHECK_THROWS_AS(parse_bench_method("up"), ConfigError);
}

TEST_CASE("infinite rho_hat reports the first residual at every checkpoint")
{
    RunConfig cfg = small_config();
    cfg.rho_hat = kInfinity;
    const fs::path dir = scratch_dir("rho_inf");
    const BenchResult res = run_benchmark(cfg, dir.string());
    REQUIRE(res.trace_files.size() == 4);
    REQUIRE(res.rows.size() == 12);
    for (const SummaryRow& row : res.rows) {
        REQUIRE(row.min_resid.has_value());
        const std::string path =
            (dir / ("trace_theta1_" + std::string(to_string(row.method)) + ".csv")).string();
        const auto csv = read_csv(path);
        REQUIRE(csv.size() >= 2);
        // The last record carries the only refined residual.
        CHECK(std::stod(csv.back()[3]) == doctest::Approx(*row.min_resid).epsilon(1e-12));
        int with_resid = 0;
        for (std::size_t i = 1; i < csv.size(); ++i)
            with_resid += csv[i][3].empty() ? 0 : 1;
        CHECK(with_resid == 1);
    }
    CHECK(fs::exists(dir / "summary.csv"));
}

TEST_CASE("repeated runs differ only in elapsed time")
{
    RunConfig cfg = small_config();
    cfg.rho_hat = 1e-12;
    cfg.iteration_cap = 15;
    const fs::path a = scratch_dir("det_a");
    const fs::path b = scratch_dir("det_b");
    const BenchResult ra = run_benchmark(cfg, a.string(), 2);
    const BenchResult rb = run_benchmark(cfg, b.string(), 1);
    REQUIRE(ra.trace_files.size() == rb.trace_files.size());
    for (std::size_t i = 0; i < ra.trace_files.size(); ++i) {
        auto ta = read_csv(ra.trace_files[i]);
        auto tb = read_csv(rb.trace_files[i]);
        REQUIRE(ta.size() == tb.size());
        CHECK(ta.size() > 1);
        for (std::size_t r = 0; r < ta.size(); ++r) {
            REQUIRE(ta[r].size() == tb[r].size());
            for (std::size_t c = 0; c < ta[r].size(); ++c)
                if (c != 1)
                    CHECK(ta[r][c] == tb[r][c]);
        }
    }
}

TEST_CASE("summary and trace columns")
{
    RunConfig cfg = small_config();
    cfg.rho_hat = 1e-12;
    cfg.time_budget = 3.0;
    cfg.checkpoints = {0.5, 1.0, 3.0};
    const fs::path dir = scratch_dir("summary");
    const BenchResult res = run_benchmark(cfg, dir.string());
    const auto summary = read_csv((dir / "summary.csv").string());
    REQUIRE(!summary.empty());
    CHECK(summary.front() == std::vector<std::string>{"theta", "m", "M", "method", "checkpoint_s", "min_resid"});
    CHECK(summary.size() == 1 + res.rows.size());

    std::map<BenchMethod, double> prev;
    for (const SummaryRow& row : res.rows) {
        CHECK(std::round(row.m) == 169.0);
        CHECK(std::round(row.M) == 201.0);
        if (!row.min_resid)
            continue;
        auto it = prev.find(row.method);
        if (it != prev.end())
            CHECK(*row.min_resid <= it->second);
        prev[row.method] = *row.min_resid;
    }
    for (const auto& path : res.trace_files) {
        const auto csv = read_csv(path);
        CHECK(csv.front() ==
              std::vector<std::string>{"k", "elapsed_s", "phi", "resid", "min_resid", "lambda", "inner_iters"});
        double last = kInfinity;
        for (std::size_t i = 1; i < csv.size(); ++i) {
            if (csv[i][4].empty())
                continue;
            const double v = std::stod(csv[i][4]);
            CHECK(v <= last);
            last = v;
        }
    }
}

TEST_CASE("min_resid_at samples the last record before the deadline")
{
    RunTrace t;
    TraceRecord r;
    r.wall_seconds = 1.0;
    t.append(r);
    r.wall_seconds = 2.0;
    r.resid = 5.0;
    t.append(r);
    r.wall_seconds = 3.0;
    r.resid = 7.0;
    t.append(r);
    CHECK_FALSE(min_resid_at(t, 0.5).has_value());
    CHECK_FALSE(min_resid_at(t, 1.5).has_value());
    CHECK(*min_resid_at(t, 2.0) == 5.0);
    CHECK(*min_resid_at(t, 10.0) == 5.0);
}

TEST_CASE("IA beats ECG on a synthetic BMC instance at the final checkpoint")
{
    // The 5 x 5 grid of 50 x 100 blocks used for the blockwise experiments.
    RunConfig cfg = parse("seed = 1\nblock_rows = 5\nblock_cols = 5\nthetas = 1\nmethods = IA, ECG\n"
                          "rho_hat = 1e-10\ntime_budget = 20\ncheckpoints = 20\n");
    const fs::path dir = scratch_dir("trend");
    const BenchResult res = run_benchmark(cfg, dir.string());
    REQUIRE(res.rows.size() == 2);
    REQUIRE(res.rows[0].method == BenchMethod::ia);
    REQUIRE(res.rows[0].min_resid.has_value());
    REQUIRE(res.rows[1].min_resid.has_value());
    CHECK(*res.rows[0].min_resid <= *res.rows[1].min_resid);
}

TEST_CASE("emit_plotdata long-format tables")
{
    const fs::path dir = scratch_dir("plot");
    const fs::path one = dir / "trace_theta1_IA.csv";
    write_file(one, "k,elapsed_s,phi,resid,min_resid,lambda,inner_iters\n1,0.5,10,2,2,5,3\n");
    PlotReport rep = emit_plotdata({one.string()}, (dir / "out1").string());
    CHECK(rep.rows_written == 2);
    CHECK(rep.dropped_nonpositive == 0);
    auto phi = read_csv(rep.phi_path);
    REQUIRE(phi.size() == 2);
    CHECK(phi[0] == std::vector<std::string>{"series", "elapsed_s", "log10_value"});
    CHECK(phi[1][0] == "trace_theta1_IA");
    CHECK(std::stod(phi[1][2]) == doctest::Approx(1.0));

    const fs::path two = dir / "trace_theta1_ECG.csv";
    write_file(two, "k,elapsed_s,phi,resid,min_resid,lambda,inner_iters\n"
                    "1,0.1,-3,,,1,1\n"
                    "2,0.2,4,8,8,1,1\n"
                    "3,0.3,2,1,1,1,1\n");
    const fs::path da = dir / "trace_theta1_DA.csv";
    const fs::path ag = dir / "trace_theta1_AG.csv";
    write_file(da, "k,elapsed_s,phi,resid,min_resid,lambda,inner_iters\n1,0.5,10,3,3,5,3\n");
    write_file(ag, "k,elapsed_s,phi,resid,min_resid,lambda,inner_iters\n1,0.5,10,4,4,5,3\n");
    rep = emit_plotdata({one.string(), two.string(), da.string(), ag.string()}, (dir / "out2").string());
    CHECK(rep.dropped_nonpositive == 2);
    CHECK(rep.rows_written == 2 + 4 + 2 + 2);
    const auto resid = read_csv(rep.resid_path);
    std::map<std::string, std::vector<double>> series;
    for (std::size_t i = 1; i < resid.size(); ++i)
        series[resid[i][0]].push_back(std::stod(resid[i][2]));
    CHECK(series.size() == 4);
    for (const auto& [label, values] : series)
        for (std::size_t i = 1; i < values.size(); ++i)
            CHECK(values[i] <= values[i - 1]);

    const fs::path empty = dir / "empty.csv";
    write_file(empty, "k,elapsed_s,phi,resid,min_resid,lambda,inner_iters\n");
    CHECK_THROWS_AS(emit_plotdata({empty.string()}, (dir / "out3").string()), std::invalid_argument);
    CHECK_THROWS_AS(emit_plotdata({}, (dir / "out4").string()), std::invalid_argument);
}

TEST_CASE("icgbench exit codes")
{
    const fs::path dir = scratch_dir("cli");
    write_file(dir / "bad.cfg", "colour = blue\n");
    write_file(dir / "good.cfg", "block_height = 8\nblock_width = 10\ndensity = 0.5\nmethods = ECG, AG\n"
                                 "rho_hat = inf\ntime_budget = 5\ncheckpoints = 5\n");
    CHECK(run_cli("") != 0);
    CHECK(run_cli("run --config " + (dir / "bad.cfg").string()) == 2);
    CHECK(run_cli("run --config " + (dir / "missing.cfg").string()) == 2);
    CHECK(run_cli("run --config " + (dir / "good.cfg").string() + " --jobs 0") != 0);
    CHECK(run_cli("run --config " + (dir / "good.cfg").string() + " --mode lenient") != 0);
    CHECK(run_cli("run --config " + (dir / "good.cfg").string() + " --out " + (dir / "out").string() +
                  " --seed 5 --mode strict --jobs 2") == 0);
    CHECK(fs::exists(dir / "out" / "summary.csv"));
    CHECK(fs::exists(dir / "out" / "trace_theta1_ECG.csv"));
    CHECK(run_cli("plot " + (dir / "out" / "trace_theta1_ECG.csv").string() + " --out " +
                  (dir / "plots").string()) == 0);
    CHECK(fs::exists(dir / "plots" / "plot_phi.csv"));
    CHECK(run_cli("plot " + (dir / "nothing.csv").string()) != 0);
}
