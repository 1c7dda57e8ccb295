#include "specicg/model.hpp"

#include <cmath>
#include <stdexcept>

namespace specicg {

void validate_problem(const CompositeProblem& p)
{
    if (!p.f1_value || !p.f1_grad || !p.f2v_value || !p.f2v_grad || !p.hv_value || !p.hv_prox)
        throw std::invalid_argument("CompositeProblem: missing oracle");
    if (p.rows <= 0 || p.cols <= 0)
        throw std::invalid_argument("CompositeProblem: nonpositive shape");
    if (p.layout.total_rows() != p.rows || p.layout.total_cols() != p.cols)
        throw std::invalid_argument("CompositeProblem: block layout does not tile the matrix shape");
    const CurvatureBounds& c = p.curvature;
    if (!std::isfinite(c.m1) || !std::isfinite(c.M1) || !std::isfinite(c.m2) || !std::isfinite(c.M2))
        throw std::invalid_argument("CompositeProblem: curvature constants must be finite");
    if (!(p.domain_radius > 0.0))
        throw std::invalid_argument("CompositeProblem: domain radius must be positive");
}

namespace {

void check_shape(const CompositeProblem& p, const Matrix& U, const char* who)
{
    if (U.rows() != p.rows || U.cols() != p.cols)
        throw std::invalid_argument(std::string(who) + ": matrix shape does not match the problem");
}

}  // namespace

FunctionValueBundle phi_eval(const CompositeProblem& p, const Matrix& U)
{
    check_shape(p, U, "phi_eval");
    const Vector s = block_singular_values(U, p.layout);
    return phi_eval_in_frame(p, U, s);
}

FunctionValueBundle phi_eval_in_frame(const CompositeProblem& p, const Matrix& U, const Vector& u)
{
    check_shape(p, U, "phi_eval_in_frame");
    FunctionValueBundle out;
    out.f1 = p.f1_value(U);
    out.f2 = p.f2v_value(u);
    out.h = p.hv_value(u);
    out.phi = out.f1 + out.f2 + out.h;
    return out;
}

Matrix grad_f2_matrix(const CompositeProblem& p, const Matrix& U)
{
    check_shape(p, U, "grad_f2_matrix");
    const SpectralFrame frame(U, p.layout);
    return frame.lift(p.f2v_grad(frame.singular_values()));
}

Matrix prox_h_matrix(const CompositeProblem& p, const Matrix& W, double t)
{
    check_shape(p, W, "prox_h_matrix");
    const SpectralFrame frame(W, p.layout);
    return frame.lift(p.hv_prox(frame.singular_values(), t));
}

CompositeProblem shift_convexity(const CompositeProblem& p, double xi)
{
    if (!(xi > 0.0))
        throw std::invalid_argument("shift_convexity: xi must be positive");
    CompositeProblem out = p;
    out.f1_value = [f = p.f1_value, xi](const Matrix& U) { return f(U) - 0.5 * xi * U.squaredNorm(); };
    out.f1_grad = [g = p.f1_grad, xi](const Matrix& U) -> Matrix { return g(U) - xi * U; };
    out.f2v_value = [f = p.f2v_value, xi](const Vector& u) { return f(u) + 0.5 * xi * u.squaredNorm(); };
    out.f2v_grad = [g = p.f2v_grad, xi](const Vector& u) -> Vector { return g(u) + xi * u; };
    out.curvature.m1 = p.curvature.m1 + xi;
    out.curvature.M1 = p.curvature.M1 - xi;
    out.curvature.m2 = p.curvature.m2 - xi;
    out.curvature.M2 = p.curvature.M2 + xi;
    out.shift = p.shift + xi;
    return out;
}

Matrix ball_projection(const Matrix& U, double radius)
{
    const double norm = U.norm();
    if (norm <= radius)
        return U;
    return (radius / norm) * U;
}

Vector ball_projection(const Vector& u, double radius)
{
    const double norm = u.norm();
    if (norm <= radius)
        return u;
    return (radius / norm) * u;
}

}  // namespace specicg
