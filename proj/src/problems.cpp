#include "specicg/problems.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace specicg {

Matrix ObservedMatrix::mask() const
{
    Matrix m = Matrix::Zero(A.rows(), A.cols());
    for (const Cell& c : omega)
        m(c.row, c.col) = 1.0;
    return m;
}

double ObservedMatrix::min_observed() const
{
    if (omega.empty())
        throw std::invalid_argument("ObservedMatrix: no observed cells");
    double v = A(omega.front().row, omega.front().col);
    for (const Cell& c : omega)
        v = std::min(v, A(c.row, c.col));
    return v;
}

double ObservedMatrix::max_observed() const
{
    if (omega.empty())
        throw std::invalid_argument("ObservedMatrix: no observed cells");
    double v = A(omega.front().row, omega.front().col);
    for (const Cell& c : omega)
        v = std::max(v, A(c.row, c.col));
    return v;
}

CurvatureBounds mc_curvature(double alpha, double beta, double mu, double theta)
{
    CurvatureBounds c;
    c.m1 = 0.0;
    c.M1 = 1.0;
    c.m2 = 2.0 * beta * mu / (theta * theta) + (2.0 * alpha * beta / theta) * std::exp(-1.5 * theta);
    c.M2 = alpha * beta / theta;
    return c;
}

double log_sum_smooth_value(const Vector& z, double mu, double beta, double theta)
{
    const Eigen::ArrayXd a = z.array().abs() / theta;
    return mu * beta * (a.log1p() - a).sum();
}

Vector log_sum_smooth_grad(const Vector& z, double mu, double beta, double theta)
{
    return (-mu * beta / theta) * (z.array() / (theta + z.array().abs())).matrix();
}

double tau_alpha_value(const Vector& z, double alpha, double beta, double theta)
{
    return -alpha * beta * std::expm1(-z.squaredNorm() / (2.0 * theta));
}

Vector tau_alpha_grad(const Vector& z, double alpha, double beta, double theta)
{
    return (alpha * beta / theta) * std::exp(-z.squaredNorm() / (2.0 * theta)) * z;
}

Vector weighted_l1_ball_prox(const Vector& c, double w, double R)
{
    if (!(w >= 0.0))
        throw std::invalid_argument("weighted_l1_ball_prox: weight must be nonnegative");
    if (!(R > 0.0))
        throw std::invalid_argument("weighted_l1_ball_prox: radius must be positive");
    Vector u = (c.array().abs() - w).max(0.0) * c.array().sign();
    return ball_projection(u, R);
}

double mc_domain_radius(const Matrix& A)
{
    const double amax = A.size() == 0 ? 0.0 : A.cwiseAbs().maxCoeff();
    const double r2 = std::sqrt(static_cast<double>(A.rows()) * static_cast<double>(A.cols())) * amax;
    if (!(r2 > 0.0))
        throw std::invalid_argument("mc_domain_radius: data matrix is identically zero");
    return std::sqrt(r2);
}

namespace {

void check_params(const McParams& prm)
{
    if (!(prm.alpha > 0.0) || !(prm.beta > 0.0) || !(prm.mu > 0.0) || !(prm.theta > 0.0))
        throw std::invalid_argument("McParams: alpha, beta, mu, theta must be positive");
    if (prm.data.omega.empty())
        throw std::invalid_argument("McParams: empty observation set");
    for (const Cell& c : prm.data.omega)
        if (c.row < 0 || c.col < 0 || c.row >= prm.data.A.rows() || c.col >= prm.data.A.cols())
            throw std::invalid_argument("McParams: observed cell out of bounds");
}

}  // namespace

CompositeProblem bmc_instance(const McParams& prm, const BlockLayout& layout)
{
    check_params(prm);
    const Matrix& A = prm.data.A;
    if (layout.total_rows() != A.rows() || layout.total_cols() != A.cols())
        throw std::invalid_argument("bmc_instance: block layout does not tile the data matrix");
    if (layout.block_height <= 0 || layout.block_width <= 0)
        throw std::invalid_argument("bmc_instance: empty blocks");

    const double alpha = prm.alpha, beta = prm.beta, mu = prm.mu, theta = prm.theta;
    const Index r = layout.values_per_block();
    const Index nb = layout.num_blocks();
    const double R = mc_domain_radius(A);
    const double w = mu * beta / theta;

    CompositeProblem p;
    p.rows = A.rows();
    p.cols = A.cols();
    p.layout = layout;

    const Matrix mask = prm.data.mask();
    const Matrix PA = mask.cwiseProduct(A);
    p.f1_value = [mask, PA](const Matrix& U) { return 0.5 * (mask.cwiseProduct(U) - PA).squaredNorm(); };
    p.f1_grad = [mask, PA](const Matrix& U) -> Matrix { return mask.cwiseProduct(U) - PA; };

    p.f2v_value = [=](const Vector& z) {
        double v = log_sum_smooth_value(z, mu, beta, theta);
        for (Index b = 0; b < nb; ++b)
            v += tau_alpha_value(z.segment(b * r, r), alpha, beta, theta);
        return v;
    };
    p.f2v_grad = [=](const Vector& z) -> Vector {
        Vector g = log_sum_smooth_grad(z, mu, beta, theta);
        for (Index b = 0; b < nb; ++b)
            g.segment(b * r, r) += tau_alpha_grad(z.segment(b * r, r), alpha, beta, theta);
        return g;
    };
    p.hv_value = [w, R](const Vector& z) {
        if (z.norm() > R * (1.0 + 1e-9))
            return kInfinity;
        return w * z.lpNorm<1>();
    };
    p.hv_prox = [w, R](const Vector& c, double t) -> Vector { return weighted_l1_ball_prox(c, t * w, R); };

    p.curvature = mc_curvature(alpha, beta, mu, theta);
    p.domain_radius = R;
    p.omega_project = [R](const Matrix& U) -> Matrix { return ball_projection(U, R); };
    validate_problem(p);
    return p;
}

CompositeProblem mc_instance(const McParams& prm)
{
    check_params(prm);
    return bmc_instance(prm, BlockLayout::whole(prm.data.A.rows(), prm.data.A.cols()));
}

SynthKind parse_synth_kind(const std::string& name)
{
    if (name == "binomial")
        return SynthKind::binomial;
    if (name == "trunc_normal" || name == "truncnormal" || name == "tnormal")
        return SynthKind::trunc_normal;
    throw std::invalid_argument("unknown synthetic data kind '" + name + "'");
}

ObservedMatrix synth_matrix(SynthKind kind, const BlockLayout& layout, double density, std::uint64_t seed,
                            std::optional<double> fixed_p)
{
    if (!(density > 0.0 && density <= 1.0))
        throw std::invalid_argument("synth_matrix: density must lie in (0, 1]");
    if (layout.block_rows <= 0 || layout.block_cols <= 0 || layout.block_height <= 0 || layout.block_width <= 0)
        throw std::invalid_argument("synth_matrix: empty layout");
    if (fixed_p && !(*fixed_p >= 0.0 && *fixed_p <= 1.0))
        throw std::invalid_argument("synth_matrix: fixed probability must lie in [0, 1]");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const Index ph = layout.block_height;
    const Index qw = layout.block_width;
    const Index cells = ph * qw;
    const Index count = std::clamp<Index>(static_cast<Index>(std::llround(density * static_cast<double>(cells))),
                                          1, cells);

    // Draw all block probabilities first so that they do not depend on the
    // entry distribution.
    std::vector<double> probs;
    for (Index b = 0; b < layout.num_blocks(); ++b) {
        const double u = unif(rng);
        probs.push_back(fixed_p ? *fixed_p : u);
    }

    ObservedMatrix out;
    out.A = Matrix::Zero(layout.total_rows(), layout.total_cols());
    std::vector<Index> idx(static_cast<std::size_t>(cells));
    Index b = 0;
    for (Index bi = 0; bi < layout.block_rows; ++bi)
        for (Index bj = 0; bj < layout.block_cols; ++bj, ++b) {
            const double p = probs[static_cast<std::size_t>(b)];
            std::iota(idx.begin(), idx.end(), Index{0});
            std::shuffle(idx.begin(), idx.end(), rng);
            std::vector<Index> chosen(idx.begin(), idx.begin() + count);
            std::sort(chosen.begin(), chosen.end());

            std::binomial_distribution<int> binom(10, p);
            const double mean = 10.0 * p;
            const double sd = std::sqrt(10.0 * p * (1.0 - p));
            std::normal_distribution<double> normal(mean, sd > 0.0 ? sd : 1.0);
            for (Index k : chosen) {
                double value;
                if (kind == SynthKind::binomial) {
                    value = binom(rng);
                } else if (sd == 0.0) {
                    value = std::clamp(mean, 0.0, 10.0);
                } else {
                    do {
                        value = normal(rng);
                    } while (value < 0.0 || value > 10.0);
                }
                const Index r = bi * ph + k / qw;
                const Index c = bj * qw + k % qw;
                out.A(r, c) = value;
                out.omega.push_back({r, c});
            }
        }
    return out;
}

Matrix starting_point(const ObservedMatrix& data, std::uint64_t seed)
{
    if (data.omega.empty())
        throw std::invalid_argument("starting_point: empty observation set");
    double nonzero_sum = 0.0;
    std::size_t nonzero = 0;
    for (const Cell& c : data.omega) {
        const double v = data.A(c.row, c.col);
        if (v != 0.0) {
            nonzero_sum += v;
            ++nonzero;
        }
    }
    const double mean = nonzero > 0 ? nonzero_sum / static_cast<double>(nonzero) : 0.0;
    const double amin = data.min_observed();
    const double range = data.max_observed() - amin;
    const int a = std::max(1, static_cast<int>(std::ceil(range)));
    const double p = std::clamp(mean / a, 0.0, 1.0);

    std::mt19937_64 rng(seed);
    std::binomial_distribution<int> binom(a, p);
    Matrix Z(data.A.rows(), data.A.cols());
    for (Index j = 0; j < Z.cols(); ++j)
        for (Index i = 0; i < Z.rows(); ++i)
            Z(i, j) = binom(rng) - amin;
    return Z;
}

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool parse_long(const std::string& tok, long long& out)
{
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

bool parse_double(const std::string& tok, double& out)
{
    if (tok.empty())
        return false;
    std::size_t used = 0;
    try {
        out = std::stod(tok, &used);
    } catch (const std::exception&) {
        return false;
    }
    return used == tok.size() && std::isfinite(out);
}

}  // namespace

ObservedMatrix load_ratings_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("load_ratings_csv: cannot open '" + path + "'");

    std::map<std::pair<long long, long long>, double> cells;
    std::vector<std::pair<long long, long long>> order;
    int duplicates = 0;
    long long max_row = 0;
    long long max_col = 0;
    std::string line;
    int lineno = 0;
    bool first_content = true;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty())
            continue;
        std::vector<std::string> tok;
        std::stringstream ss(t);
        std::string item;
        while (std::getline(ss, item, ','))
            tok.push_back(trim(item));
        if (first_content) {
            first_content = false;
            double probe;
            if (!tok.empty() && !parse_double(tok[0], probe))
                continue;  // header line
        }
        long long r = 0, c = 0;
        double v = 0.0;
        if (tok.size() != 3 || !parse_long(tok[0], r) || !parse_long(tok[1], c) || !parse_double(tok[2], v))
            throw ParseError("load_ratings_csv: malformed line " + std::to_string(lineno) + " in '" + path + "'",
                             lineno);
        if (r < 1 || c < 1)
            throw ParseError("load_ratings_csv: ids must be 1-based on line " + std::to_string(lineno), lineno);
        const auto key = std::make_pair(r - 1, c - 1);
        auto it = cells.find(key);
        if (it != cells.end()) {
            ++duplicates;
            it->second = v;
        } else {
            cells.emplace(key, v);
            order.push_back(key);
        }
        max_row = std::max(max_row, r);
        max_col = std::max(max_col, c);
    }
    if (cells.empty())
        throw std::invalid_argument("load_ratings_csv: no ratings in '" + path + "'");

    ObservedMatrix out;
    out.A = Matrix::Zero(static_cast<Index>(max_row), static_cast<Index>(max_col));
    out.duplicates = duplicates;
    for (const auto& key : order) {
        out.A(static_cast<Index>(key.first), static_cast<Index>(key.second)) = cells.at(key);
        out.omega.push_back({static_cast<Index>(key.first), static_cast<Index>(key.second)});
    }
    return out;
}

}  // namespace specicg
