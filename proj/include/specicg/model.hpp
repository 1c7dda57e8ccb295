#pragma once

#include "specicg/spectral.hpp"

#include <functional>
#include <limits>

namespace specicg {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Lower/upper curvature constants of f1 and f2:
///   -m_i/2 |u-y|^2 <= f_i(u) - l_{f_i}(u; y) <= M_i/2 |u-y|^2.
/// No ordering between m_i and M_i is imposed; only finiteness.
struct CurvatureBounds {
    double m1 = 0.0;
    double M1 = 0.0;
    double m2 = 0.0;
    double M2 = 0.0;

    double L1() const { return std::max(std::abs(m1), std::abs(M1)); }
    double L2() const { return std::max(std::abs(m2), std::abs(M2)); }
    double m1_plus() const { return std::max(m1, 0.0); }
    double M1_plus() const { return std::max(M1, 0.0); }
    double m2_plus() const { return std::max(m2, 0.0); }
    double M2_plus() const { return std::max(M2, 0.0); }
};

using MatrixValueFn = std::function<double(const Matrix&)>;
using MatrixMapFn = std::function<Matrix(const Matrix&)>;
using VectorValueFn = std::function<double(const Vector&)>;
using VectorMapFn = std::function<Vector(const Vector&)>;
/// (c, t) -> argmin_u { t * h(u) + 1/2 |u - c|^2 }.
using VectorProxFn = std::function<Vector(const Vector&, double)>;

/// phi(U) = f1(U) + f2v(sigma(U)) + hv(sigma(U)).
///
/// sigma is the concatenation of the per-block singular values under
/// `layout` (a single block for plain spectral problems). f2v and hv must be
/// invariant under signed permutations inside each block; f2v must be
/// differentiable everywhere. hv returns +inf outside its domain.
struct CompositeProblem {
    Index rows = 0;
    Index cols = 0;
    BlockLayout layout;

    MatrixValueFn f1_value;
    MatrixMapFn f1_grad;
    VectorValueFn f2v_value;
    VectorMapFn f2v_grad;
    VectorValueFn hv_value;
    VectorProxFn hv_prox;

    CurvatureBounds curvature;
    /// Frobenius radius of dom h (infinite when unconstrained).
    double domain_radius = kInfinity;
    /// Projection onto a bounded set containing dom h. Defaults to the
    /// dom h ball when built through the problems module.
    MatrixMapFn omega_project;
    /// Total convexity shift applied through shift_convexity.
    double shift = 0.0;
};

/// Throws std::invalid_argument when an oracle is missing or the layout does
/// not tile the declared shape.
void validate_problem(const CompositeProblem& p);

struct FunctionValueBundle {
    double phi = 0.0;
    double f1 = 0.0;
    double f2 = 0.0;
    double h = 0.0;
};

/// One block SVD of U.
FunctionValueBundle phi_eval(const CompositeProblem& p, const Matrix& U);

/// Same as phi_eval for a point already expressed in a spectral frame,
/// U = frame.lift(u); avoids the SVD.
FunctionValueBundle phi_eval_in_frame(const CompositeProblem& p, const Matrix& U, const Vector& u);

/// lift(svd(U), grad f2v(sigma(U))).
Matrix grad_f2_matrix(const CompositeProblem& p, const Matrix& U);

/// argmin_U { t * h(U) + 1/2 |U - W|_F^2 } through one block SVD of W.
Matrix prox_h_matrix(const CompositeProblem& p, const Matrix& W, double t);

/// f1 <- f1 - xi/2 |.|^2, f2v <- f2v + xi/2 |.|^2, with the curvature
/// constants moved accordingly. phi is unchanged pointwise.
CompositeProblem shift_convexity(const CompositeProblem& p, double xi);

/// Radial projection onto the Frobenius ball of the given radius.
Matrix ball_projection(const Matrix& U, double radius);
Vector ball_projection(const Vector& u, double radius);

}  // namespace specicg
