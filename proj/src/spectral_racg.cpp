#include "specicg/spectral_racg.hpp"

#include <cmath>
#include <stdexcept>

namespace specicg {

double SpectralSubproblem::dist_sq_to_center(const Vector& u) const
{
    return std::max(0.0, u.squaredNorm() - 2.0 * u.dot(x0_vec) + X0_sq);
}

double SpectralSubproblem::linearized_f1(const Vector& u) const
{
    return f1_X0 + u.dot(g1_vec) - frob_inner(grad_f1_X0, X0);
}

SpectralSubproblem build_subproblem(const CompositeProblem& p, double lambda, double theta, const Matrix& X0)
{
    if (!(lambda > 0.0))
        throw std::invalid_argument("build_subproblem: lambda must be positive");
    if (X0.rows() != p.rows || X0.cols() != p.cols)
        throw std::invalid_argument("build_subproblem: X0 shape does not match the problem");
    if (!X0.allFinite())
        throw std::invalid_argument("build_subproblem: X0 has non-finite entries");

    SpectralSubproblem sub;
    sub.lambda = lambda;
    sub.X0 = X0;
    sub.grad_f1_X0 = p.f1_grad(X0);
    sub.f1_X0 = p.f1_value(X0);
    sub.X0_lam = X0 - lambda * sub.grad_f1_X0;
    sub.frame = SpectralFrame(sub.X0_lam, p.layout);
    sub.c = sub.frame.singular_values();
    sub.x0_vec = sub.frame.vectorize(X0);
    sub.g1_vec = sub.frame.vectorize(sub.grad_f1_X0);
    sub.X0_sq = X0.squaredNorm();
    sub.tau_relax = std::max(0.0, theta * theta * (sub.X0_sq - sub.x0_vec.squaredNorm()));
    sub.B0 = lambda * sub.f1_X0 - lambda * frob_inner(sub.grad_f1_X0, X0) + 0.5 * sub.X0_sq;

    const Vector c = sub.c;
    sub.oracles.psi_s_value = [f = p.f2v_value, c, lambda](const Vector& u) {
        return lambda * f(u) - c.dot(u) + 0.5 * u.squaredNorm();
    };
    sub.oracles.psi_s_grad = [g = p.f2v_grad, c, lambda](const Vector& u) -> Vector {
        return lambda * g(u) - c + u;
    };
    sub.oracles.psi_n_value = [h = p.hv_value, lambda](const Vector& u) { return lambda * h(u); };
    sub.oracles.psi_n_prox = [prox = p.hv_prox, lambda](const Vector& w, double t) -> Vector {
        return prox(w, t * lambda);
    };
    return sub;
}

double subproblem_curvature(const CompositeProblem& p, double lambda, double mu)
{
    return std::max(lambda * p.curvature.M2_plus() + 1.0, mu * (1.0 + 1e-6));
}

SpectralAcgOutcome spectral_racg_run(const CompositeProblem& p, const SpectralSubproblem& sub, double theta,
                                     const SpectralAcgOptions& opts)
{
    AcgParams<Vector> prm;
    prm.mu = opts.mu;
    prm.M = opts.M > 0.0 ? opts.M : subproblem_curvature(p, sub.lambda, opts.mu);
    prm.theta = theta;
    prm.tau = opts.relax_tau ? sub.tau_relax : 0.0;
    prm.check_upper_curvature = opts.check_upper_curvature;
    prm.max_iterations = opts.max_iterations;
    prm.observer = opts.observer;
    if (opts.accept)
        prm.accept = [&sub, &accept = opts.accept](const Vector& z, const Vector& r, double eta) {
            return accept(sub, z, r, eta);
        };

    SpectralAcgOutcome out;
    out.M = prm.M;
    out.vec = racg_run(sub.oracles, prm, sub.x0_vec);
    if (out.vec.v.size() == out.vec.z.size() && out.vec.z.size() > 0) {
        out.Z = sub.lift(out.vec.z);
        out.V = sub.lift(out.vec.v);
    }
    out.eps = out.vec.eps;
    return out;
}

SpectralAcgOutcome spectral_racg_run(const CompositeProblem& p, double lambda, double theta, const Matrix& X0,
                                     const SpectralAcgOptions& opts)
{
    const SpectralSubproblem sub = build_subproblem(p, lambda, theta, X0);
    return spectral_racg_run(p, sub, theta, opts);
}

AcgOracles<Matrix> matrix_subproblem_oracles(const CompositeProblem& p, double lambda, const Matrix& X0)
{
    const Matrix g1 = p.f1_grad(X0);
    const double f1x0 = p.f1_value(X0);
    AcgOracles<Matrix> o;
    o.psi_s_value = [&p, lambda, X0, g1, f1x0](const Matrix& U) {
        const Vector s = block_singular_values(U, p.layout);
        return lambda * (f1x0 + frob_inner(g1, U - X0) + p.f2v_value(s)) + 0.5 * (U - X0).squaredNorm();
    };
    o.psi_s_grad = [&p, lambda, X0, g1](const Matrix& U) -> Matrix {
        return lambda * (g1 + grad_f2_matrix(p, U)) + U - X0;
    };
    o.psi_n_value = [&p, lambda](const Matrix& U) {
        return lambda * p.hv_value(block_singular_values(U, p.layout));
    };
    o.psi_n_prox = [&p, lambda](const Matrix& W, double t) -> Matrix { return prox_h_matrix(p, W, t * lambda); };
    return o;
}

RefinedPair<Matrix> spectral_srp(const CompositeProblem& p, const SpectralSubproblem& sub, const Vector& z,
                                 const Vector& v)
{
    const double M = sub.lambda * p.curvature.M2_plus() + 1.0;
    const RefinedPair<Vector> r = refine(z, v, M, sub.oracles);
    RefinedPair<Matrix> out;
    out.z_r = sub.lift(r.z_r);
    out.v_r = (sub.lift(r.v_r) + sub.X0 - out.z_r) / sub.lambda + p.f1_grad(out.z_r) - sub.grad_f1_X0;
    return out;
}

}  // namespace specicg
