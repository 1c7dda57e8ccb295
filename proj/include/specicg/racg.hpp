#pragma once

// Relaxed accelerated composite gradient (R-ACG) inner solver for
//   min psi_s(u) + psi_n(u)
// over a generic Eigen point type (vectors or matrices), together with the
// refinement procedure and the certificate checks used by the outer methods.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace specicg {

/// Raised when an iteration cap meant as a bug signal is hit. Distinct from
/// an algorithmic failure status.
class BudgetExceeded : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Raised when a point outside dom psi is passed where a finite value is required.
class InfeasiblePoint : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

// Relative slack added to inequalities that hold in exact arithmetic but are
// evaluated through cancelling sums of function values.
inline constexpr double kRoundingSlack = 1e-12;

template <typename Point>
double inner(const Point& a, const Point& b)
{
    return a.cwiseProduct(b).sum();
}

template <typename Point>
struct AcgOracles {
    std::function<double(const Point&)> psi_s_value;
    std::function<Point(const Point&)> psi_s_grad;
    std::function<double(const Point&)> psi_n_value;
    /// (c, t) -> argmin_u { t * psi_n(u) + 1/2 |u - c|^2 }.
    std::function<Point(const Point&, double)> psi_n_prox;

    double psi(const Point& u) const { return psi_s_value(u) + psi_n_value(u); }
};

enum class AcgStatus { success, failure, curvature_rejected };
enum class AcgFailureStage { none, invariant_check, delta_check };

inline const char* to_string(AcgStatus s)
{
    switch (s) {
    case AcgStatus::success: return "success";
    case AcgStatus::failure: return "failure";
    case AcgStatus::curvature_rejected: return "curvature_rejected";
    }
    return "?";
}

/// Snapshot handed to the per-iteration observer.
///
/// Gamma_j is stored centered at z0:
///   Gamma_j(u) = Gamma_const + <Gamma_lin, u - z0> + mu/2 |u - z0|^2.
template <typename Point>
struct AcgState {
    int j = 0;
    double B = 0.0;
    const Point* z = nullptr;
    const Point* zc = nullptr;
    const Point* z0 = nullptr;
    const Point* Gamma_lin = nullptr;
    double Gamma_const = 0.0;
    const Point* r = nullptr;
    double eta = 0.0;
    double mu = 0.0;
    double M = 0.0;
};

template <typename Point>
struct AcgParams {
    double mu = 1.0;
    double M = 2.0;
    double theta = 0.5;
    /// Additive relaxation of the termination inequality (0 = strict).
    double tau = 0.0;
    /// Reject the run when psi_s exceeds its M-upper model at an iterate.
    bool check_upper_curvature = false;
    /// 0 selects the default safety cap.
    int max_iterations = 0;
    /// Optional extra termination test on (z_j, r_j, eta_j), OR-ed with the
    /// theta inequality. The refinement-gap check still follows.
    std::function<bool(const Point&, const Point&, double)> accept;
    std::function<void(const AcgState<Point>&)> observer;
};

template <typename Point>
struct RefinedPair {
    Point z_r;
    Point v_r;
};

template <typename Point>
struct AcgOutcome {
    AcgStatus status = AcgStatus::failure;
    AcgFailureStage failure_stage = AcgFailureStage::none;
    Point z;
    Point v;
    double eps = 0.0;
    /// Refined pair computed in the final check; valid whenever the run
    /// reached it (success or delta-check failure).
    RefinedPair<Point> refined;
    bool has_refined = false;
    int iterations = 0;

    bool ok() const { return status == AcgStatus::success; }
};

/// Default safety cap: 10 (1 + sqrt(M/mu)) ln(1 + M K^2 (1 + mu K^2)) + 100,
/// with K = 1 + sqrt(2)/theta.
inline int racg_iteration_cap(double mu, double M, double theta)
{
    const double K = 1.0 + std::sqrt(2.0) / theta;
    const double v = 10.0 * (1.0 + std::sqrt(M / mu)) *
                         std::log(1.0 + M * K * K * (1.0 + mu * K * K)) +
                     100.0;
    if (!std::isfinite(v) || v > 1e8)
        return 100000000;
    return static_cast<int>(std::ceil(v));
}

/// Lower bound on B_j: (1/M) max{ j^2/4, (1 + sqrt(mu/(4M)))^(2(j-1)) }.
inline double racg_B_lower_bound(int j, double mu, double M)
{
    const double poly = 0.25 * j * j;
    const double geo = std::pow(1.0 + std::sqrt(mu / (4.0 * M)), 2.0 * (j - 1));
    return std::max(poly, geo) / M;
}

/// psi(y) - psi(u) - <v, y - u> + mu/2 |u - y|^2.
template <typename Point>
double delta_mu(const Point& u, const Point& y, const Point& v, double mu, const AcgOracles<Point>& o)
{
    const double psi_u = o.psi(u);
    const double psi_y = o.psi(y);
    if (!std::isfinite(psi_u) || !std::isfinite(psi_y))
        throw InfeasiblePoint("delta_mu: point outside dom psi");
    return psi_y - psi_u - inner<Point>(v, y - u) + 0.5 * mu * (u - y).squaredNorm();
}

/// One prox-gradient step on psi_s - <v, .> from z with stepsize 1/M.
template <typename Point>
RefinedPair<Point> refine(const Point& z, const Point& v, double M, const AcgOracles<Point>& o)
{
    if (!(M > 0.0))
        throw std::invalid_argument("refine: M must be positive");
    const Point gz = o.psi_s_grad(z);
    RefinedPair<Point> out;
    out.z_r = o.psi_n_prox(z - (gz - v) / M, 1.0 / M);
    out.v_r = v + M * (z - out.z_r) + o.psi_s_grad(out.z_r) - gz;
    return out;
}

/// Checks |v|^2 + 2 eps <= theta^2 |z - z0|^2 and Delta_mu(u; z, v) <= eps + slack
/// at every probe u.
template <typename Point>
bool check_problem_a(const Point& z, const Point& v, double eps, double mu, double theta,
                     const Point& z0, const AcgOracles<Point>& o, const std::vector<Point>& probes,
                     double slack = 1e-9)
{
    if (v.squaredNorm() + 2.0 * eps > theta * theta * (z - z0).squaredNorm())
        return false;
    for (const Point& u : probes)
        if (delta_mu(u, z, v, mu, o) > eps + slack)
            return false;
    return true;
}

/// The R-ACG algorithm started at z0.
///
/// Returns success with (z, v, eps) solving the weak certificate problem, or
/// a failure status tagged with the check that tripped. Throws BudgetExceeded
/// past the safety cap or when B_j overflows.
template <typename Point>
AcgOutcome<Point> racg_run(const AcgOracles<Point>& o, const AcgParams<Point>& prm, const Point& z0)
{
    const double mu = prm.mu;
    const double M = prm.M;
    const double theta = prm.theta;
    if (!(mu > 0.0) || !(M > mu))
        throw std::invalid_argument("racg_run: need M > mu > 0");
    if (!(theta > 0.0 && theta < 1.0))
        throw std::invalid_argument("racg_run: theta must lie in (0, 1)");
    if (!(prm.tau >= 0.0))
        throw std::invalid_argument("racg_run: tau must be nonnegative");
    const int cap = prm.max_iterations > 0 ? prm.max_iterations : racg_iteration_cap(mu, M, theta);

    AcgOutcome<Point> out;
    Point z = z0;
    Point zc = z0;
    double B = 0.0;
    Point G_lin = Point::Zero(z0.rows(), z0.cols());
    double G_const = 0.0;

    for (int j = 1;; ++j) {
        if (j > cap)
            throw BudgetExceeded("racg_run: iteration cap " + std::to_string(cap) + " exceeded");

        // Step 1.
        const double xi = (1.0 + mu * B) / (M - mu);
        const double b = 0.5 * (xi + std::sqrt(xi * xi + 4.0 * xi * B));
        const double B_new = B + b;
        if (!std::isfinite(B_new))
            throw BudgetExceeded("racg_run: B_j overflowed at iteration " + std::to_string(j));
        const Point zt = (B / B_new) * z + (b / B_new) * zc;
        const double psi_s_zt = o.psi_s_value(zt);
        const Point g_zt = o.psi_s_grad(zt);
        Point z_new = o.psi_n_prox(zt - g_zt / M, 1.0 / M);
        const Point step = zt - z_new;
        Point zc_new = (zc - (b * (M - mu)) * step + mu * (B * zc + b * z_new)) / (1.0 + mu * B_new);

        const double psi_s_z = o.psi_s_value(z_new);
        const double psi_n_z = o.psi_n_value(z_new);
        const double psi_z = psi_s_z + psi_n_z;
        if (!std::isfinite(psi_z))
            throw InfeasiblePoint("racg_run: prox output outside dom psi_n");

        const double lin_model = psi_s_zt - inner<Point>(g_zt, step);
        if (prm.check_upper_curvature) {
            const double upper = lin_model + 0.5 * M * step.squaredNorm();
            if (psi_s_z > upper + kRoundingSlack * (1.0 + std::abs(psi_s_z) + std::abs(upper))) {
                out.status = AcgStatus::curvature_rejected;
                out.iterations = j;
                out.z = std::move(z_new);
                return out;
            }
        }

        // Step 2. gamma_j in coordinates d = u - z0.
        const double gt_z = lin_model + psi_n_z + 0.5 * mu * step.squaredNorm();
        const Point e = z_new - z0;
        const double g_const = gt_z - (M - mu) * inner<Point>(step, e) + 0.5 * mu * e.squaredNorm();
        const Point g_lin = (M - mu) * step - mu * e;
        G_const = (B / B_new) * G_const + (b / B_new) * g_const;
        G_lin = (B / B_new) * G_lin + (b / B_new) * g_lin;

        const Point dc = zc_new - z0;
        const double Gamma_zc = G_const + inner<Point>(G_lin, dc) + 0.5 * mu * dc.squaredNorm();
        const Point r = (z0 - zc_new) / B_new + mu * (zc_new - z_new);
        const Point zz = z_new - zc_new;
        const double eta_raw = psi_z - Gamma_zc - inner<Point>(r, zz) + 0.5 * mu * zz.squaredNorm();
        const double eta = std::max(0.0, eta_raw);

        B = B_new;
        z = std::move(z_new);
        zc = std::move(zc_new);

        if (prm.observer) {
            AcgState<Point> st;
            st.j = j;
            st.B = B;
            st.z = &z;
            st.zc = &zc;
            st.z0 = &z0;
            st.Gamma_lin = &G_lin;
            st.Gamma_const = G_const;
            st.r = &r;
            st.eta = eta;
            st.mu = mu;
            st.M = M;
            prm.observer(st);
        }

        // Step 3.
        const double dist_sq = (z - z0).squaredNorm();
        const double lhs = (B * r + z - z0).squaredNorm() / (1.0 + mu * B) + 2.0 * B * eta;
        const double slack3 =
            kRoundingSlack * (1.0 + lhs + dist_sq + 2.0 * B * (std::abs(psi_z) + std::abs(Gamma_zc)));
        if (lhs > dist_sq + slack3) {
            out.status = AcgStatus::failure;
            out.failure_stage = AcgFailureStage::invariant_check;
            out.iterations = j;
            out.z = z;
            out.v = r;
            out.eps = eta;
            return out;
        }

        // Step 4.
        const bool theta_ok = r.squaredNorm() + 2.0 * eta <= theta * theta * dist_sq + prm.tau;
        if (!theta_ok && !(prm.accept && prm.accept(z, r, eta)))
            continue;

        // Step 5.
        out.iterations = j;
        out.z = z;
        out.v = r;
        out.eps = eta;
        out.refined = refine(z, r, M, o);
        out.has_refined = true;
        const double psi_zr = o.psi(out.refined.z_r);
        const double gap = psi_z - psi_zr - inner<Point>(r, z - out.refined.z_r) +
                           0.5 * mu * (out.refined.z_r - z).squaredNorm();
        const double slack5 =
            kRoundingSlack * (1.0 + std::abs(eta) + std::abs(psi_z) + std::abs(psi_zr));
        if (gap <= eta + slack5) {
            out.status = AcgStatus::success;
        } else {
            out.status = AcgStatus::failure;
            out.failure_stage = AcgFailureStage::delta_check;
        }
        return out;
    }
}

}  // namespace specicg
