#pragma once

#include "specicg/model.hpp"
#include "specicg/racg.hpp"

namespace specicg {

/// The prox subproblem
///   min lambda [ l_{f1}(U; X0) + f2(U) + h(U) ] + 1/2 |U - X0|_F^2
/// reduced to singular-value coordinates of X0_lam = X0 - lambda grad f1(X0).
struct SpectralSubproblem {
    double lambda = 0.0;
    Matrix X0;
    Matrix X0_lam;
    Matrix grad_f1_X0;
    double f1_X0 = 0.0;
    SpectralFrame frame;
    /// sigma(X0_lam), block by block.
    Vector c;
    /// frame.vectorize(X0).
    Vector x0_vec;
    /// frame.vectorize(grad f1(X0)).
    Vector g1_vec;
    double X0_sq = 0.0;
    /// theta^2 (|X0|_F^2 - |x0_vec|^2).
    double tau_relax = 0.0;
    /// psi_s(lift(u)) = psi_s^V(u) + B0.
    double B0 = 0.0;
    /// psi_s^V = lambda f2v - <c, .> + 1/2 |.|^2 and psi_n^V = lambda hv.
    AcgOracles<Vector> oracles;

    Matrix lift(const Vector& u) const { return frame.lift(u); }
    /// |lift(u) - X0|_F^2 without forming the matrix.
    double dist_sq_to_center(const Vector& u) const;
    /// f1(X0) + <grad f1(X0), lift(u) - X0>.
    double linearized_f1(const Vector& u) const;
};

SpectralSubproblem build_subproblem(const CompositeProblem& p, double lambda, double theta, const Matrix& X0);

/// M = lambda M2^+ + 1, floored just above mu so that the inner method is
/// well defined when f2 has no positive upper curvature.
double subproblem_curvature(const CompositeProblem& p, double lambda, double mu);

struct SpectralAcgOptions {
    double mu = 1.0;
    /// 0 selects subproblem_curvature(p, lambda, mu).
    double M = 0.0;
    bool relax_tau = false;
    bool check_upper_curvature = false;
    int max_iterations = 0;
    /// Extra termination test OR-ed with the theta inequality.
    std::function<bool(const SpectralSubproblem&, const Vector& z, const Vector& r, double eta)> accept;
    std::function<void(const AcgState<Vector>&)> observer;
};

struct SpectralAcgOutcome {
    AcgOutcome<Vector> vec;
    /// Lifted (z, v); filled whenever vec carries a point and a residual.
    Matrix Z;
    Matrix V;
    double eps = 0.0;
    double M = 0.0;

    AcgStatus status() const { return vec.status; }
    bool ok() const { return vec.ok(); }
    int iterations() const { return vec.iterations; }
};

SpectralAcgOutcome spectral_racg_run(const CompositeProblem& p, const SpectralSubproblem& sub, double theta,
                                     const SpectralAcgOptions& opts);

SpectralAcgOutcome spectral_racg_run(const CompositeProblem& p, double lambda, double theta, const Matrix& X0,
                                     const SpectralAcgOptions& opts = {});

/// The subproblem oracles acting directly on matrices (one SVD per f2
/// gradient and per prox). Used for the generic refinement procedure and as
/// a reference in tests.
AcgOracles<Matrix> matrix_subproblem_oracles(const CompositeProblem& p, double lambda, const Matrix& X0);

/// Specialized refinement of a vector-space pair (z, v) of the subproblem,
/// performed in the frame of `sub`. Returns (Z_hat, V_hat) with
///   V_hat in grad f1(Z_hat) + grad f2(Z_hat) + dh(Z_hat).
RefinedPair<Matrix> spectral_srp(const CompositeProblem& p, const SpectralSubproblem& sub, const Vector& z,
                                 const Vector& v);

}  // namespace specicg
