#include "specicg/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace specicg {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!trim(item).empty())
            out.push_back(trim(item));
    return out;
}

double parse_double(const std::string& key, const std::string& v)
{
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used == v.size())
            return x;
    } catch (const std::exception&) {
    }
    throw ConfigError("config: " + key + " expects a number, got '" + v + "'");
}

long long parse_integer(const std::string& key, const std::string& v)
{
    try {
        std::size_t used = 0;
        const long long x = std::stoll(v, &used);
        if (used == v.size())
            return x;
    } catch (const std::exception&) {
    }
    throw ConfigError("config: " + key + " expects an integer, got '" + v + "'");
}

bool parse_bool(const std::string& key, const std::string& v)
{
    const std::string l = lower(v);
    if (l == "true" || l == "1" || l == "yes")
        return true;
    if (l == "false" || l == "0" || l == "no")
        return false;
    throw ConfigError("config: " + key + " expects true or false, got '" + v + "'");
}

std::vector<double> parse_double_list(const std::string& key, const std::string& v)
{
    std::vector<double> out;
    for (const auto& item : split_list(v))
        out.push_back(parse_double(key, item));
    return out;
}

std::string format_number(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string format_cell(double x)
{
    return std::isfinite(x) ? format_number(x) : std::string();
}

std::string theta_tag(double theta)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", theta);
    return buf;
}

void write_atomically(const std::string& path, const std::string& content)
{
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot open " + tmp + " for writing");
        out << content;
        if (!out)
            throw std::runtime_error("write failed: " + tmp);
    }
    fs::rename(tmp, path);
}

}  // namespace

BenchMethod parse_bench_method(const std::string& name)
{
    const std::string l = lower(trim(name));
    if (l == "ia")
        return BenchMethod::ia;
    if (l == "da")
        return BenchMethod::da;
    if (l == "ecg")
        return BenchMethod::ecg;
    if (l == "ag")
        return BenchMethod::ag;
    throw ConfigError("unknown method '" + name + "' (expected IA, DA, ECG, AG)");
}

const char* to_string(BenchMethod m)
{
    switch (m) {
    case BenchMethod::ia: return "IA";
    case BenchMethod::da: return "DA";
    case BenchMethod::ecg: return "ECG";
    case BenchMethod::ag: return "AG";
    }
    return "?";
}

SolverMode parse_solver_mode(const std::string& name)
{
    const std::string l = lower(trim(name));
    if (l == "strict")
        return SolverMode::strict;
    if (l == "practical")
        return SolverMode::practical;
    throw ConfigError("unknown mode '" + name + "' (expected strict or practical)");
}

void RunConfig::validate() const
{
    if (instance != "mc" && instance != "bmc")
        throw ConfigError("config: instance must be mc or bmc, got '" + instance + "'");
    if (source == "csv") {
        if (csv_path.empty())
            throw ConfigError("config: source = csv needs csv_path");
    } else if (source != "binomial" && source != "trunc_normal") {
        throw ConfigError("config: source must be binomial, trunc_normal, or csv, got '" + source + "'");
    }
    if (block_rows < 1 || block_cols < 1)
        throw ConfigError("config: block_rows and block_cols must be positive");
    if (source != "csv" && (block_height < 1 || block_width < 1))
        throw ConfigError("config: block_height and block_width must be positive");
    if (instance == "mc" && (block_rows != 1 || block_cols != 1))
        throw ConfigError("config: instance = mc needs a 1 x 1 block layout");
    if (!(density > 0.0 && density <= 1.0))
        throw ConfigError("config: density must lie in (0, 1]");
    if (!(alpha > 0.0 && beta > 0.0 && mu > 0.0))
        throw ConfigError("config: alpha, beta, mu must be positive");
    if (thetas.empty())
        throw ConfigError("config: at least one theta is required");
    for (double t : thetas)
        if (!(t > 0.0) || !std::isfinite(t))
            throw ConfigError("config: thetas must be positive and finite");
    if (methods.empty())
        throw ConfigError("config: at least one method is required");
    if (!(rho_hat > 0.0))
        throw ConfigError("config: rho_hat must be positive");
    if (!(time_budget > 0.0))
        throw ConfigError("config: time_budget must be positive");
    for (double c : checkpoints)
        if (!(c > 0.0))
            throw ConfigError("config: checkpoints must be positive");
    if (iteration_cap < 1)
        throw ConfigError("config: iteration_cap must be positive");
}

RunConfig parse_run_config(std::istream& in)
{
    RunConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string v = trim(line.substr(eq + 1));
        if (key == "instance")
            cfg.instance = lower(v);
        else if (key == "source")
            cfg.source = lower(v);
        else if (key == "csv_path")
            cfg.csv_path = v;
        else if (key == "seed")
            cfg.seed = static_cast<std::uint64_t>(parse_integer(key, v));
        else if (key == "block_rows")
            cfg.block_rows = parse_integer(key, v);
        else if (key == "block_cols")
            cfg.block_cols = parse_integer(key, v);
        else if (key == "block_height")
            cfg.block_height = parse_integer(key, v);
        else if (key == "block_width")
            cfg.block_width = parse_integer(key, v);
        else if (key == "density")
            cfg.density = parse_double(key, v);
        else if (key == "alpha")
            cfg.alpha = parse_double(key, v);
        else if (key == "beta")
            cfg.beta = parse_double(key, v);
        else if (key == "mu")
            cfg.mu = parse_double(key, v);
        else if (key == "thetas")
            cfg.thetas = parse_double_list(key, v);
        else if (key == "methods") {
            cfg.methods.clear();
            for (const auto& m : split_list(v))
                cfg.methods.push_back(parse_bench_method(m));
        } else if (key == "rho_hat")
            cfg.rho_hat = parse_double(key, v);
        else if (key == "relative_residual")
            cfg.relative_residual = parse_bool(key, v);
        else if (key == "time_budget")
            cfg.time_budget = parse_double(key, v);
        else if (key == "checkpoints")
            cfg.checkpoints = parse_double_list(key, v);
        else if (key == "iteration_cap")
            cfg.iteration_cap = static_cast<int>(parse_integer(key, v));
        else if (key == "mode")
            cfg.mode = parse_solver_mode(v);
        else
            throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file " + path);
    return parse_run_config(in);
}

BenchData make_bench_data(const RunConfig& cfg)
{
    cfg.validate();
    BenchData out;
    if (cfg.source == "csv") {
        out.data = load_ratings_csv(cfg.csv_path);
        const Index rows = out.data.A.rows();
        const Index cols = out.data.A.cols();
        if (rows % cfg.block_rows != 0 || cols % cfg.block_cols != 0)
            throw ConfigError("config: block counts do not divide the ratings matrix shape");
        out.layout = {cfg.block_rows, cfg.block_cols, rows / cfg.block_rows, cols / cfg.block_cols};
    } else {
        out.layout = {cfg.block_rows, cfg.block_cols, cfg.block_height, cfg.block_width};
        out.data = synth_matrix(parse_synth_kind(cfg.source), out.layout, cfg.density, cfg.seed);
    }
    out.z0 = starting_point(out.data, cfg.seed + 1);
    return out;
}

CompositeProblem make_bench_problem(const RunConfig& cfg, const BenchData& data, double theta)
{
    McParams params;
    params.alpha = cfg.alpha;
    params.beta = cfg.beta;
    params.mu = cfg.mu;
    params.theta = theta;
    params.data = data.data;
    return bmc_instance(params, data.layout);
}

IcgOutcome run_method(BenchMethod method, SolverMode mode, const CompositeProblem& p, const Matrix& z0,
                      double rho_hat, bool relative_residual, double time_budget, int iteration_cap)
{
    const Matrix start = ball_projection(z0, p.domain_radius);
    if (method == BenchMethod::ecg || method == BenchMethod::ag) {
        BaselineConfig cfg;
        cfg.method = method == BenchMethod::ecg ? BaselineMethod::ecg : BaselineMethod::ag;
        cfg.rho_hat = rho_hat;
        cfg.relative_residual = relative_residual;
        cfg.time_budget = time_budget;
        cfg.iteration_cap = iteration_cap;
        return method == BenchMethod::ecg ? ecg_run(p, cfg, start) : ag_run(p, cfg, start);
    }
    IcgConfig cfg;
    if (mode == SolverMode::practical) {
        cfg = practical_icg_config(p.curvature, rho_hat);
    } else {
        if (!(p.curvature.M1 > 0.0))
            throw std::invalid_argument("run_method: strict mode needs M1 > 0");
        cfg = strict_icg_config(0.2 / p.curvature.M1, 0.5, rho_hat);
        cfg.xi0 = p.curvature.M1;
    }
    cfg.relative_residual = relative_residual;
    cfg.time_budget = time_budget;
    cfg.outer_iteration_cap = iteration_cap;
    return dynamic_icg(method == BenchMethod::ia ? IcgVariant::ia : IcgVariant::da, p, cfg, start);
}

std::optional<double> min_resid_at(const RunTrace& trace, double checkpoint)
{
    const TraceRecord* last = nullptr;
    for (const auto& r : trace.records) {
        if (r.wall_seconds > checkpoint)
            break;
        last = &r;
    }
    if (last == nullptr || !std::isfinite(last->min_resid))
        return std::nullopt;
    return last->min_resid;
}

void write_trace_csv(const RunTrace& trace, const std::string& path)
{
    std::ostringstream out;
    out << "k,elapsed_s,phi,resid,min_resid,lambda,inner_iters\n";
    for (const auto& r : trace.records)
        out << r.k << ',' << format_cell(r.wall_seconds) << ',' << format_cell(r.phi) << ',' << format_cell(r.resid)
            << ',' << format_cell(r.min_resid) << ',' << format_cell(r.lambda) << ',' << r.inner_iterations << '\n';
    write_atomically(path, out.str());
}

void write_summary_csv(const std::vector<SummaryRow>& rows, const std::string& path)
{
    std::ostringstream out;
    out << "theta,m,M,method,checkpoint_s,min_resid\n";
    for (const auto& r : rows)
        out << format_number(r.theta) << ',' << format_number(r.m) << ',' << format_number(r.M) << ','
            << to_string(r.method) << ',' << format_number(r.checkpoint) << ','
            << (r.min_resid ? format_number(*r.min_resid) : std::string()) << '\n';
    write_atomically(path, out.str());
}

BenchResult run_benchmark(const RunConfig& cfg, const std::string& out_dir, int jobs)
{
    cfg.validate();
    if (jobs < 1)
        throw std::invalid_argument("run_benchmark: jobs must be positive");
    fs::create_directories(out_dir);

    const BenchData data = make_bench_data(cfg);
    std::vector<CompositeProblem> problems;
    for (double theta : cfg.thetas)
        problems.push_back(make_bench_problem(cfg, data, theta));

    struct Job {
        std::size_t theta_index;
        BenchMethod method;
        RunTrace trace;
        std::string path;
    };
    std::vector<Job> queue;
    for (std::size_t t = 0; t < cfg.thetas.size(); ++t)
        for (BenchMethod m : cfg.methods) {
            const std::string name = "trace_theta" + theta_tag(cfg.thetas[t]) + "_" + to_string(m) + ".csv";
            queue.push_back({t, m, {}, (fs::path(out_dir) / name).string()});
        }

    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= queue.size())
                return;
            try {
                Job& job = queue[i];
                IcgOutcome out = run_method(job.method, cfg.mode, problems[job.theta_index], data.z0, cfg.rho_hat,
                                            cfg.relative_residual, cfg.time_budget, cfg.iteration_cap);
                write_trace_csv(out.trace, job.path);
                job.trace = std::move(out.trace);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error)
                    first_error = std::current_exception();
            }
        }
    };
    const int workers = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(jobs), queue.size()));
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();
    if (first_error)
        std::rethrow_exception(first_error);

    BenchResult result;
    for (const auto& job : queue) {
        const CurvatureBounds& c = problems[job.theta_index].curvature;
        for (double cp : cfg.checkpoints)
            result.rows.push_back({cfg.thetas[job.theta_index], c.m1 + c.m2, c.M1 + c.M2, job.method, cp,
                                   min_resid_at(job.trace, cp)});
        result.trace_files.push_back(job.path);
    }
    write_summary_csv(result.rows, (fs::path(out_dir) / "summary.csv").string());
    return result;
}

PlotReport emit_plotdata(const std::vector<std::string>& trace_files, const std::string& out_dir)
{
    if (trace_files.empty())
        throw std::invalid_argument("emit_plotdata: no trace files given");
    fs::create_directories(out_dir);
    PlotReport rep;
    std::ostringstream phi_out;
    std::ostringstream resid_out;
    phi_out << "series,elapsed_s,log10_value\n";
    resid_out << "series,elapsed_s,log10_value\n";

    for (const auto& path : trace_files) {
        std::ifstream in(path);
        if (!in)
            throw std::invalid_argument("emit_plotdata: cannot open " + path);
        const std::string label = fs::path(path).stem().string();
        std::string line;
        if (!std::getline(in, line))
            throw std::invalid_argument("emit_plotdata: empty trace " + path);
        std::map<std::string, std::size_t> col;
        {
            const auto names = split_list(line);
            for (std::size_t i = 0; i < names.size(); ++i)
                col[names[i]] = i;
        }
        for (const char* need : {"elapsed_s", "phi", "min_resid"})
            if (!col.count(need))
                throw std::invalid_argument("emit_plotdata: " + path + " lacks column " + need);

        int data_rows = 0;
        while (std::getline(in, line)) {
            if (trim(line).empty())
                continue;
            ++data_rows;
            std::vector<std::string> cells;
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ','))
                cells.push_back(trim(cell));
            while (cells.size() < col.size())
                cells.emplace_back();
            const std::string& t = cells[col["elapsed_s"]];
            auto emit = [&](std::ostringstream& out, const std::string& v) {
                double x = 0.0;
                try {
                    x = v.empty() ? 0.0 : std::stod(v);
                } catch (const std::exception&) {
                    throw std::invalid_argument("emit_plotdata: malformed value '" + v + "' in " + path);
                }
                if (!(x > 0.0) || !std::isfinite(x)) {
                    ++rep.dropped_nonpositive;
                    return;
                }
                out << label << ',' << t << ',' << format_number(std::log10(x)) << '\n';
                ++rep.rows_written;
            };
            emit(phi_out, cells[col["phi"]]);
            emit(resid_out, cells[col["min_resid"]]);
        }
        if (data_rows == 0)
            throw std::invalid_argument("emit_plotdata: empty trace " + path);
    }
    rep.phi_path = (fs::path(out_dir) / "plot_phi.csv").string();
    rep.resid_path = (fs::path(out_dir) / "plot_min_resid.csv").string();
    write_atomically(rep.phi_path, phi_out.str());
    write_atomically(rep.resid_path, resid_out.str());
    return rep;
}

}  // namespace specicg
