#pragma once

#include "specicg/model.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace specicg {

struct Cell {
    Index row = 0;
    Index col = 0;
    bool operator==(const Cell&) const = default;
};

/// A partially observed data matrix: dense storage with zeros off `omega`.
struct ObservedMatrix {
    Matrix A;
    std::vector<Cell> omega;
    /// Number of repeated cells overwritten while loading (CSV only).
    int duplicates = 0;

    /// 1 on observed cells, 0 elsewhere.
    Matrix mask() const;
    double min_observed() const;
    double max_observed() const;
};

struct McParams {
    double alpha = 10.0;
    double beta = 20.0;
    double mu = 2.0;
    double theta = 1.0;
    ObservedMatrix data;
};

/// (m1, M1, m2, M2) = (0, 1, 2 beta mu / theta^2 + (2 alpha beta / theta) e^{-3 theta / 2}, alpha beta / theta).
CurvatureBounds mc_curvature(double alpha, double beta, double mu, double theta);

/// mu beta sum_i [ log(1 + |z_i| / theta) - |z_i| / theta ]: the smooth,
/// concave part of the log-sum penalty once its l1 slope at the origin is moved
/// into h. Differentiable everywhere with zero gradient at the origin.
double log_sum_smooth_value(const Vector& z, double mu, double beta, double theta);
Vector log_sum_smooth_grad(const Vector& z, double mu, double beta, double theta);

/// alpha beta [1 - exp(-|z|^2 / (2 theta))].
double tau_alpha_value(const Vector& z, double alpha, double beta, double theta);
Vector tau_alpha_grad(const Vector& z, double alpha, double beta, double theta);

/// argmin_u { w |u|_1 + delta_{|u| <= R}(u) + 1/2 |u - c|^2 }: soft-threshold
/// by w, then radial projection onto the ball.
Vector weighted_l1_ball_prox(const Vector& c, double w, double R);

/// Frobenius radius R with R^2 = sqrt(rows * cols) * max |A_ij|.
double mc_domain_radius(const Matrix& A);

/// f1 = 1/2 |P_Omega(U - A)|_F^2,
/// f2v = log_sum_smooth + tau_alpha,
/// hv = (mu beta / theta) |.|_1 + delta_{|.| <= R}.
CompositeProblem mc_instance(const McParams& params);

/// Blockwise variant: the spectral terms act on each block's singular values
/// (tau_alpha per block), the ball on the whole matrix. A 1 x 1 layout gives
/// the same oracles as mc_instance.
CompositeProblem bmc_instance(const McParams& params, const BlockLayout& layout);

enum class SynthKind { binomial, trunc_normal };

SynthKind parse_synth_kind(const std::string& name);

/// Per-block p ~ U[0, 1] drawn in row-major block order, then
/// round(density * p_rows * q_cols) observed cells per block with entries
/// Binomial(10, p) or TruncatedNormal(10 p, sqrt(10 p (1 - p))) on [0, 10].
/// `fixed_p` bypasses the uniform draw.
ObservedMatrix synth_matrix(SynthKind kind, const BlockLayout& layout, double density, std::uint64_t seed,
                            std::optional<double> fixed_p = std::nullopt);

/// Entries ~ Binomial(a, mean / a) - A_min with mean, range, and minimum of
/// the observed ratings and a = max(1, ceil(range)).
Matrix starting_point(const ObservedMatrix& data, std::uint64_t seed);

class ParseError : public std::runtime_error {
  public:
    ParseError(const std::string& what, int line) : std::runtime_error(what), line_(line) {}
    int line() const { return line_; }

  private:
    int line_;
};

/// Lines "user,item,rating" with 1-based ids; an optional header line is
/// skipped when its first token is not numeric. Later duplicates win.
ObservedMatrix load_ratings_csv(const std::string& path);

}  // namespace specicg
