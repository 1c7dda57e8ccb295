#pragma once

#include "specicg/model.hpp"
#include "specicg/racg.hpp"
#include "specicg/spectral_racg.hpp"

#include <functional>
#include <limits>
#include <vector>

namespace specicg {

enum class IcgStatus { success, failure, budget_exceeded };

const char* to_string(IcgStatus s);

/// One outer iteration (or one rejected attempt) of an outer method.
struct TraceRecord {
    int k = 0;
    double wall_seconds = 0.0;
    double phi = 0.0;
    /// |v_hat_k|_F; NaN for attempts that produced no refined pair.
    double resid = std::numeric_limits<double>::quiet_NaN();
    /// resid divided by the relative-residual scale (equal to resid in absolute mode).
    double measure = std::numeric_limits<double>::quiet_NaN();
    /// min_{i <= k} resid_i (+inf before the first refined pair).
    double min_resid = std::numeric_limits<double>::infinity();
    double lambda = 0.0;
    int inner_iterations = 0;
    AcgStatus acg_status = AcgStatus::success;
    bool accepted = false;
    /// Convexity shift in force during the iteration.
    double xi = 0.0;
    /// |z_k - x0|_F^2 and phi(x0) for the reference point x0 of the descent check.
    double step_sq = 0.0;
    double phi_ref = 0.0;
};

struct RunTrace {
    std::vector<TraceRecord> records;

    /// Assigns min_resid from the previous record.
    void append(TraceRecord r);
    double best_resid() const;
    bool empty() const { return records.empty(); }
};

using TraceCallback = std::function<void(const TraceRecord&)>;

struct IcgConfig {
    double lambda = 0.0;
    double theta = 0.5;
    double rho_hat = 1e-6;
    /// Stop on |v_hat| / (|grad f1(Z0) + grad f2(Z0)|_F + 1) <= rho_hat.
    bool relative_residual = false;
    double xi0 = 0.0;
    /// mu handed to the inner solver and to the outer acceptance test.
    double mu = 1.0;
    /// Update lambda after each outer step from adaptive_lambda_ratio. Updates
    /// never go below (1/2 - theta^2) / M1 of the unshifted problem when
    /// M1 > 0 and theta^2 < 1/2.
    bool adaptive_lambda = false;
    /// Accept inner solutions through the objective-decrease test
    /// |z - x0|^2, |v|^2, 2 eps <= 4 lambda [phi(x0) - l_phi(z; x0) - M1/2 |z - x0|^2].
    bool relax_descent = false;
    /// Relax the inner termination inequality by theta^2 (|X0|_F^2 - |x0|^2).
    bool relax_tau = false;
    /// Halve/double the inner curvature estimate M around lambda M2^+ + 1.
    bool curvature_line_search = false;
    double time_budget = std::numeric_limits<double>::infinity();
    int outer_iteration_cap = 1000000;
    TraceCallback on_record;
};

/// mu = 1 and every practical relaxation off. The step-size restriction
/// lambda M1 + theta^2 <= 1/2 is checked by the solvers.
IcgConfig strict_icg_config(double lambda, double theta, double rho_hat);

/// (xi0, lambda, theta) = (M1, 5/M1, 1/2), mu = 1/2, adaptive lambda, both
/// relaxations and the curvature line search. Requires M1 > 0.
IcgConfig practical_icg_config(const CurvatureBounds& c, double rho_hat);

struct IcgOutcome {
    IcgStatus status = IcgStatus::failure;
    Matrix z_hat;
    Matrix v_hat;
    double resid = std::numeric_limits<double>::infinity();
    RunTrace trace;
    double xi_final = 0.0;
    int restarts = 0;
    int outer_iterations = 0;
    double lambda_final = 0.0;
    /// Warm-start data: last accepted z (IA) or (A, x, y) (DA).
    Matrix z_last;
    double A_last = 0.0;
    Matrix x_last;
};

/// Specialized refinement procedure in matrix space:
/// refine with M = lambda M2^+ + 1 on the subproblem centered at X0, then
/// V_hat = (V_r + X0 - Z_hat)/lambda + grad f1(Z_hat) - grad f1(X0), which lies in
/// grad f1(Z_hat) + grad f2(Z_hat) + dh(Z_hat).
RefinedPair<Matrix> srp(const CompositeProblem& p, double lambda, const Matrix& Z, const Matrix& V, const Matrix& X0);

/// (1 + lambda [M2^+ + L1 + L2]) / sqrt(1 + lambda M2^+).
double c_lambda(double lambda, double M2_plus, double L1, double L2);

/// Three-case update: keep on r in [0.5, 2], shrink by sqrt(0.5) below,
/// grow by sqrt(2) above.
double adaptive_lambda(double lambda_old, double r);

/// r = c |Z - Z_hat| / |V_hat - c (Z - Z_hat)| with c = lambda * curvature_sum + 1;
/// +inf on a zero denominator.
double adaptive_lambda_ratio(double lambda, double curvature_sum, const Matrix& Z, const Matrix& Z_hat,
                             const Matrix& V_hat);

/// a = (1 + sqrt(1 + 4A)) / 2.
inline double da_next_a(double A) { return 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * A)); }

/// ceil(log2(2 m2^+ / xi0)), clamped at 0; 0 when m2^+ = 0.
int restart_bound(double m2_plus, double xi0);

/// k^{-p} |a|_1 |b|_{1/(p-1)}, an upper bound on min_i |a_i b_i| for p > 1.
double min_product_bound(const Vector& a, const Vector& b, double p);

/// Denominator of the relative stopping rule: |grad f1(Z0) + grad f2(Z0)|_F + 1.
double relative_residual_scale(const CompositeProblem& p, const Matrix& Z0);

IcgOutcome static_ia_icg(const CompositeProblem& p, const IcgConfig& cfg, const Matrix& z0);
IcgOutcome static_da_icg(const CompositeProblem& p, const IcgConfig& cfg, const Matrix& y0);

enum class IcgVariant { ia, da };

/// Runs the static method on shift_convexity(p, xi), doubling xi after every
/// failure and warm-starting from the last accepted iterates.
IcgOutcome dynamic_icg(IcgVariant variant, const CompositeProblem& p, const IcgConfig& cfg, const Matrix& z0);

}  // namespace specicg
