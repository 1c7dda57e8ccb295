#pragma once

#include "specicg/baselines.hpp"
#include "specicg/icg.hpp"
#include "specicg/problems.hpp"

#include <cstdint>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace specicg {

class ConfigError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

enum class BenchMethod { ia, da, ecg, ag };
enum class SolverMode { strict, practical };

/// Accepts IA, DA, ECG, AG in any letter case.
BenchMethod parse_bench_method(const std::string& name);
const char* to_string(BenchMethod m);
SolverMode parse_solver_mode(const std::string& name);

/// Flat `key = value` configuration; `#` starts a comment. Keys:
///   instance          mc | bmc
///   source            binomial | trunc_normal | csv
///   csv_path          ratings file when source = csv
///   seed              data seed; the starting point uses seed + 1
///   block_rows, block_cols, block_height, block_width
///   density           observed fraction per block, in (0, 1]
///   alpha, beta, mu   model weights
///   thetas            comma-separated list
///   methods           comma-separated subset of IA, DA, ECG, AG
///   rho_hat           stopping tolerance (inf allowed)
///   relative_residual true | false
///   time_budget       seconds per run
///   checkpoints       comma-separated seconds
///   iteration_cap     outer iterations per run
///   mode              strict | practical
struct RunConfig {
    std::string instance = "bmc";
    std::string source = "binomial";
    std::string csv_path;
    std::uint64_t seed = 1;
    Index block_rows = 1;
    Index block_cols = 1;
    Index block_height = 50;
    Index block_width = 100;
    double density = 0.25;
    double alpha = 10.0;
    double beta = 20.0;
    double mu = 2.0;
    std::vector<double> thetas{1.0};
    std::vector<BenchMethod> methods{BenchMethod::ia, BenchMethod::da, BenchMethod::ecg, BenchMethod::ag};
    double rho_hat = 1e-6;
    bool relative_residual = true;
    double time_budget = 1000.0;
    std::vector<double> checkpoints{100.0, 200.0, 400.0, 800.0};
    int iteration_cap = 1000000;
    SolverMode mode = SolverMode::practical;

    /// Throws ConfigError when an invariant fails.
    void validate() const;
};

/// Throws ConfigError on unknown keys, malformed values, or failed invariants.
RunConfig parse_run_config(std::istream& in);
RunConfig load_run_config(const std::string& path);

/// Data matrix and starting point for a configuration (independent of theta).
struct BenchData {
    ObservedMatrix data;
    BlockLayout layout;
    Matrix z0;
};

BenchData make_bench_data(const RunConfig& cfg);

/// The composite problem for one theta; the starting point is projected onto
/// the domain ball before use.
CompositeProblem make_bench_problem(const RunConfig& cfg, const BenchData& data, double theta);

/// Runs one method. IA and DA use the dynamic wrapper under `mode`.
IcgOutcome run_method(BenchMethod method, SolverMode mode, const CompositeProblem& p, const Matrix& z0,
                      double rho_hat, bool relative_residual, double time_budget, int iteration_cap);

/// min_resid of the last record with wall_seconds <= checkpoint, if any and finite.
std::optional<double> min_resid_at(const RunTrace& trace, double checkpoint);

struct SummaryRow {
    double theta = 0.0;
    double m = 0.0;
    double M = 0.0;
    BenchMethod method = BenchMethod::ia;
    double checkpoint = 0.0;
    std::optional<double> min_resid;
};

struct BenchResult {
    std::vector<SummaryRow> rows;
    std::vector<std::string> trace_files;
};

/// Runs every (theta, method) pair on `jobs` worker threads, writing
/// trace_theta<θ>_<method>.csv per run and summary.csv into `out_dir`.
BenchResult run_benchmark(const RunConfig& cfg, const std::string& out_dir, int jobs = 1);

/// Trace CSV: k,elapsed_s,phi,resid,min_resid,lambda,inner_iters; NaN and
/// infinite values are written as empty fields. Written atomically.
void write_trace_csv(const RunTrace& trace, const std::string& path);
void write_summary_csv(const std::vector<SummaryRow>& rows, const std::string& path);

struct PlotReport {
    std::string phi_path;
    std::string resid_path;
    int rows_written = 0;
    int dropped_nonpositive = 0;
};

/// Long-format plot tables plot_phi.csv and plot_min_resid.csv with columns
/// series,elapsed_s,log10_value. The series label is the trace file stem.
/// Rows whose value is empty or nonpositive are dropped and counted.
/// Throws std::invalid_argument on an empty trace.
PlotReport emit_plotdata(const std::vector<std::string>& trace_files, const std::string& out_dir);

}  // namespace specicg
