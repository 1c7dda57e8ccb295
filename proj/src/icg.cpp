#include "specicg/icg.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

namespace specicg {

const char* to_string(IcgStatus s)
{
    switch (s) {
    case IcgStatus::success: return "success";
    case IcgStatus::failure: return "failure";
    case IcgStatus::budget_exceeded: return "budget_exceeded";
    }
    return "?";
}

void RunTrace::append(TraceRecord r)
{
    const double prev = records.empty() ? kInfinity : records.back().min_resid;
    r.min_resid = std::isnan(r.resid) ? prev : std::min(prev, r.resid);
    records.push_back(r);
}

double RunTrace::best_resid() const { return records.empty() ? kInfinity : records.back().min_resid; }

IcgConfig strict_icg_config(double lambda, double theta, double rho_hat)
{
    IcgConfig cfg;
    cfg.lambda = lambda;
    cfg.theta = theta;
    cfg.rho_hat = rho_hat;
    cfg.mu = 1.0;
    return cfg;
}

IcgConfig practical_icg_config(const CurvatureBounds& c, double rho_hat)
{
    if (!(c.M1 > 0.0))
        throw std::invalid_argument("practical_icg_config: default (xi0, lambda) needs M1 > 0");
    IcgConfig cfg;
    cfg.xi0 = c.M1;
    cfg.lambda = 5.0 / c.M1;
    cfg.theta = 0.5;
    cfg.rho_hat = rho_hat;
    cfg.mu = 0.5;
    cfg.adaptive_lambda = true;
    cfg.relax_descent = true;
    cfg.relax_tau = true;
    cfg.curvature_line_search = true;
    return cfg;
}

RefinedPair<Matrix> srp(const CompositeProblem& p, double lambda, const Matrix& Z, const Matrix& V, const Matrix& X0)
{
    if (!(lambda > 0.0))
        throw std::invalid_argument("srp: lambda must be positive");
    const double M = lambda * p.curvature.M2_plus() + 1.0;
    const AcgOracles<Matrix> o = matrix_subproblem_oracles(p, lambda, X0);
    RefinedPair<Matrix> r = refine(Z, V, M, o);
    RefinedPair<Matrix> out;
    out.v_r = (r.v_r + X0 - r.z_r) / lambda + p.f1_grad(r.z_r) - p.f1_grad(X0);
    out.z_r = std::move(r.z_r);
    return out;
}

double c_lambda(double lambda, double M2_plus, double L1, double L2)
{
    if (!(lambda > 0.0))
        throw std::invalid_argument("c_lambda: lambda must be positive");
    return (1.0 + lambda * (M2_plus + L1 + L2)) / std::sqrt(1.0 + lambda * M2_plus);
}

double adaptive_lambda(double lambda_old, double r)
{
    if (!(lambda_old > 0.0) || !(r >= 0.0))
        throw std::invalid_argument("adaptive_lambda: need lambda > 0 and r >= 0");
    if (r < 0.5)
        return lambda_old * std::sqrt(0.5);
    if (r > 2.0)
        return lambda_old * std::sqrt(2.0);
    return lambda_old;
}

double adaptive_lambda_ratio(double lambda, double curvature_sum, const Matrix& Z, const Matrix& Z_hat,
                             const Matrix& V_hat)
{
    const double c = lambda * curvature_sum + 1.0;
    const Matrix d = Z - Z_hat;
    const double den = (V_hat - c * d).norm();
    if (den == 0.0)
        return kInfinity;
    return c * d.norm() / den;
}

int restart_bound(double m2_plus, double xi0)
{
    if (!(xi0 > 0.0))
        throw std::invalid_argument("restart_bound: xi0 must be positive");
    if (m2_plus <= 0.0)
        return 0;
    return std::max(0, static_cast<int>(std::ceil(std::log2(2.0 * m2_plus / xi0))));
}

double min_product_bound(const Vector& a, const Vector& b, double p)
{
    if (!(p > 1.0))
        throw std::invalid_argument("min_product_bound: p must exceed 1");
    if (a.size() != b.size() || a.size() == 0)
        throw std::invalid_argument("min_product_bound: vectors must be nonempty and equally long");
    const double q = 1.0 / (p - 1.0);
    const double bq = std::pow(b.array().abs().pow(q).sum(), 1.0 / q);
    return std::pow(static_cast<double>(a.size()), -p) * a.lpNorm<1>() * bq;
}

double relative_residual_scale(const CompositeProblem& p, const Matrix& Z0)
{
    return (p.f1_grad(Z0) + grad_f2_matrix(p, Z0)).norm() + 1.0;
}

namespace {

using Clock = std::chrono::steady_clock;
using AcceptFn = std::function<bool(const SpectralSubproblem&, const Vector&, const Vector&, double)>;

struct RunContext {
    Clock::time_point start = Clock::now();
    const IcgConfig* cfg = nullptr;
    double scale = 1.0;
    /// M2^+ + 2 m2^+ of the unshifted problem, used by the adaptive lambda ratio.
    double lambda_curvature = 0.0;
    /// Lower limit for adaptive lambda updates.
    double lambda_floor = 0.0;
    double xi = 0.0;
    int k = 0;
    RunTrace trace;
    Matrix best_z;
    Matrix best_v;
    double best_resid = kInfinity;

    double elapsed() const { return std::chrono::duration<double>(Clock::now() - start).count(); }
    bool out_of_budget() const { return elapsed() >= cfg->time_budget || k >= cfg->outer_iteration_cap; }

    void record(TraceRecord r)
    {
        r.k = k;
        r.wall_seconds = elapsed();
        r.xi = xi;
        trace.append(r);
        if (cfg->on_record)
            cfg->on_record(trace.records.back());
    }

    void offer(const RefinedPair<Matrix>& rp, double resid)
    {
        if (resid < best_resid) {
            best_resid = resid;
            best_z = rp.z_r;
            best_v = rp.v_r;
        }
    }
};

/// Step size and inner curvature estimate carried across outer iterations.
struct StepSize {
    double lambda = 0.0;
    double M_est = 0.0;

    void set_lambda(double lam)
    {
        if (M_est > 0.0)
            M_est = 1.0 + (M_est - 1.0) * lam / lambda;
        lambda = lam;
    }
};

struct InnerResult {
    SpectralSubproblem sub;
    SpectralAcgOutcome acg;
    int iterations = 0;
};

InnerResult inner_solve(const CompositeProblem& p, const IcgConfig& cfg, StepSize& st, const Matrix& X0,
                        const AcceptFn& accept)
{
    InnerResult res;
    res.sub = build_subproblem(p, st.lambda, cfg.theta, X0);
    const double bound = subproblem_curvature(p, st.lambda, cfg.mu);
    const double floor = cfg.mu * (1.0 + 1e-6);
    double M = bound;
    if (cfg.curvature_line_search && st.M_est > 0.0)
        M = std::clamp(0.5 * st.M_est, floor, bound);
    for (;;) {
        SpectralAcgOptions o;
        o.mu = cfg.mu;
        o.M = M;
        o.relax_tau = cfg.relax_tau;
        o.check_upper_curvature = cfg.curvature_line_search && M < bound;
        o.accept = accept;
        try {
            res.acg = spectral_racg_run(p, res.sub, cfg.theta, o);
        } catch (const BudgetExceeded&) {
            // The inner run cannot certify anything; treat it as a failed call.
            res.acg = SpectralAcgOutcome{};
            res.acg.vec.status = AcgStatus::failure;
        }
        res.iterations += res.acg.iterations();
        if (res.acg.ok() || M >= bound)
            break;
        M = std::min(2.0 * M, bound);
    }
    st.M_est = M;
    return res;
}

/// 4 lambda [phi(x0) - l_phi(z; x0) - M1/2 |z - x0|^2] for z = lift(y) in the frame of sub.
double delta_phi(const CompositeProblem& p, const SpectralSubproblem& sub, double phi_ref, const Vector& y)
{
    const double lphi = sub.linearized_f1(y) + p.f2v_value(y) + p.hv_value(y);
    return 4.0 * sub.lambda * (phi_ref - lphi - 0.5 * p.curvature.M1 * sub.dist_sq_to_center(y));
}

bool three_way(double dphi, double dist_sq, double v_sq, double eps)
{
    return dist_sq <= dphi && v_sq <= dphi && 2.0 * eps <= dphi;
}

/// phi at a fixed point, evaluated on first use.
class LazyPhi {
  public:
    LazyPhi(const CompositeProblem& p, const Matrix& X) : p_(&p), X_(&X) {}
    explicit LazyPhi(double value) : value_(value) {}

    double get()
    {
        if (!value_)
            value_ = phi_eval(*p_, *X_).phi;
        return *value_;
    }

  private:
    const CompositeProblem* p_ = nullptr;
    const Matrix* X_ = nullptr;
    std::optional<double> value_;
};

/// The returned predicate keeps a reference to `phi_ref`.
AcceptFn make_accept(const CompositeProblem& p, const IcgConfig& cfg, LazyPhi& phi_ref)
{
    if (!cfg.relax_descent)
        return {};
    return [&p, &phi_ref](const SpectralSubproblem& sub, const Vector& y, const Vector& r, double eta) {
        return three_way(delta_phi(p, sub, phi_ref.get(), y), sub.dist_sq_to_center(y), r.squaredNorm(), eta);
    };
}

double adaptive_lambda_floor(const CompositeProblem& p, double theta)
{
    const double M1 = p.curvature.M1 + p.shift;
    if (!(M1 > 0.0) || !(theta * theta < 0.5))
        return 0.0;
    return (0.5 - theta * theta) / M1;
}

/// Delta_mu(U; Z, V) - eps for the subproblem of `sub`, with Z = lift(y).
/// Returns the signed margin after the rounding slack.
double outer_delta_margin(const CompositeProblem& p, const SpectralSubproblem& sub, const Matrix& Z,
                          const Vector& y, const Matrix& V, const Matrix& U, const FunctionValueBundle& fU,
                          double mu, double eps)
{
    const double lam = sub.lambda;
    const double f2z = p.f2v_value(y);
    const double hz = p.hv_value(y);
    const Matrix ZU = Z - U;
    const double lin = frob_inner(sub.grad_f1_X0, ZU);
    const double dz = (Z - sub.X0).squaredNorm();
    const double du = (U - sub.X0).squaredNorm();
    const double vz = frob_inner(V, ZU);
    const double dpsi = lam * (lin + f2z - fU.f2 + hz - fU.h) + 0.5 * (dz - du);
    const double delta = dpsi - vz + 0.5 * mu * ZU.squaredNorm();
    const double slack =
        kRoundingSlack * (1.0 + std::abs(eps) +
                          lam * (std::abs(lin) + std::abs(f2z) + std::abs(fU.f2) + std::abs(hz) + std::abs(fU.h)) +
                          dz + du + std::abs(vz));
    return eps + slack - delta;
}

void check_entry(const CompositeProblem& p, const IcgConfig& cfg, const Matrix& z0, double M1)
{
    validate_problem(p);
    if (!(cfg.lambda > 0.0))
        throw std::invalid_argument("ICG: lambda must be positive");
    if (!(cfg.theta > 0.0 && cfg.theta < 1.0))
        throw std::invalid_argument("ICG: theta must lie in (0, 1)");
    if (!(cfg.rho_hat > 0.0))
        throw std::invalid_argument("ICG: rho_hat must be positive");
    if (!(cfg.mu > 0.0 && cfg.mu <= 1.0))
        throw std::invalid_argument("ICG: mu must lie in (0, 1]");
    if (z0.rows() != p.rows || z0.cols() != p.cols)
        throw std::invalid_argument("ICG: starting point shape does not match the problem");
    if (!std::isfinite(p.hv_value(block_singular_values(z0, p.layout))))
        throw std::invalid_argument("ICG: starting point outside dom h");
    if (!cfg.relax_descent && cfg.lambda * M1 + cfg.theta * cfg.theta > 0.5 + 1e-12)
        throw std::invalid_argument("ICG: step size violates lambda M1 + theta^2 <= 1/2");
}

struct IaWarm {
    Matrix z;
};

struct DaWarm {
    double A = 0.0;
    Matrix x;
    Matrix y;
};

IcgStatus run_ia(const CompositeProblem& p, const IcgConfig& cfg, RunContext& ctx, StepSize& st, IaWarm& warm,
                 RefinedPair<Matrix>& result)
{
    Matrix z = warm.z;
    FunctionValueBundle fz = phi_eval(p, z);
    for (;;) {
        if (ctx.out_of_budget())
            return IcgStatus::budget_exceeded;
        ++ctx.k;
        const double lam = st.lambda;
        LazyPhi phi_z(fz.phi);
        InnerResult in = inner_solve(p, cfg, st, z, make_accept(p, cfg, phi_z));

        TraceRecord rec;
        rec.lambda = lam;
        rec.inner_iterations = in.iterations;
        rec.acg_status = in.acg.status();
        rec.phi_ref = fz.phi;
        rec.phi = fz.phi;
        if (!in.acg.ok()) {
            ctx.record(rec);
            return IcgStatus::failure;
        }

        const Vector& y = in.acg.vec.z;
        const Vector& v = in.acg.vec.v;
        const double eps = in.acg.eps;
        const Matrix& Z = in.acg.Z;
        const FunctionValueBundle fZ = phi_eval_in_frame(p, Z, y);
        bool ok = outer_delta_margin(p, in.sub, Z, y, in.acg.V, z, fz, cfg.mu, eps) >= 0.0;
        if (!ok && cfg.relax_descent)
            ok = three_way(delta_phi(p, in.sub, fz.phi, y), in.sub.dist_sq_to_center(y), v.squaredNorm(), eps);
        rec.step_sq = (Z - z).squaredNorm();
        if (!ok) {
            rec.acg_status = AcgStatus::failure;
            ctx.record(rec);
            return IcgStatus::failure;
        }

        RefinedPair<Matrix> rp = spectral_srp(p, in.sub, y, v);
        const double resid = rp.v_r.norm();
        rec.phi = fZ.phi;
        rec.resid = resid;
        rec.measure = resid / ctx.scale;
        rec.accepted = true;
        ctx.offer(rp, resid);
        ctx.record(rec);

        z = Z;
        fz = fZ;
        warm.z = z;
        if (rec.measure <= cfg.rho_hat) {
            result = std::move(rp);
            return IcgStatus::success;
        }
        if (cfg.adaptive_lambda)
            st.set_lambda(std::max(ctx.lambda_floor,
                                    adaptive_lambda(lam, adaptive_lambda_ratio(lam, ctx.lambda_curvature, Z, rp.z_r, rp.v_r))));
    }
}

Matrix project_omega(const CompositeProblem& p, const Matrix& U)
{
    if (p.omega_project)
        return p.omega_project(U);
    if (std::isfinite(p.domain_radius))
        return ball_projection(U, p.domain_radius);
    return U;
}

IcgStatus run_da(const CompositeProblem& p, const IcgConfig& cfg, RunContext& ctx, StepSize& st, DaWarm& warm,
                 RefinedPair<Matrix>& result)
{
    FunctionValueBundle fy = phi_eval(p, warm.y);
    for (;;) {
        if (ctx.out_of_budget())
            return IcgStatus::budget_exceeded;
        ++ctx.k;
        const double lam = st.lambda;
        const double a = da_next_a(warm.A);
        const double A_new = warm.A + a;
        const Matrix xt = (warm.A * warm.y + a * warm.x) / A_new;
        LazyPhi phi_xt(p, xt);
        InnerResult in = inner_solve(p, cfg, st, xt, make_accept(p, cfg, phi_xt));

        TraceRecord rec;
        rec.lambda = lam;
        rec.inner_iterations = in.iterations;
        rec.acg_status = in.acg.status();
        rec.phi_ref = fy.phi;
        rec.phi = fy.phi;
        if (!in.acg.ok()) {
            ctx.record(rec);
            return IcgStatus::failure;
        }

        const Vector& y = in.acg.vec.z;
        const Vector& v = in.acg.vec.v;
        const double eps = in.acg.eps;
        const Matrix& Ya = in.acg.Z;
        const Matrix& V = in.acg.V;
        const FunctionValueBundle fYa = phi_eval_in_frame(p, Ya, y);
        bool ok = outer_delta_margin(p, in.sub, Ya, y, V, warm.y, fy, cfg.mu, eps) >= 0.0;
        if (!ok && cfg.relax_descent)
            ok = three_way(delta_phi(p, in.sub, phi_xt.get(), y), in.sub.dist_sq_to_center(y), v.squaredNorm(), eps);
        rec.step_sq = (Ya - xt).squaredNorm();
        if (!ok) {
            rec.acg_status = AcgStatus::failure;
            ctx.record(rec);
            return IcgStatus::failure;
        }

        RefinedPair<Matrix> rp = spectral_srp(p, in.sub, y, v);
        const double resid = rp.v_r.norm();

        warm.x = project_omega(p, warm.x - a * (V + xt - Ya));
        if (fYa.phi <= fy.phi) {
            warm.y = Ya;
            fy = fYa;
        }
        warm.A = A_new;

        rec.phi = fy.phi;
        rec.resid = resid;
        rec.measure = resid / ctx.scale;
        rec.accepted = true;
        ctx.offer(rp, resid);
        ctx.record(rec);
        if (rec.measure <= cfg.rho_hat) {
            result = std::move(rp);
            return IcgStatus::success;
        }
        if (cfg.adaptive_lambda)
            st.set_lambda(std::max(ctx.lambda_floor,
                                    adaptive_lambda(lam, adaptive_lambda_ratio(lam, ctx.lambda_curvature, Ya, rp.z_r, rp.v_r))));
    }
}

void finish(IcgOutcome& out, IcgStatus status, RunContext& ctx, const StepSize& st, RefinedPair<Matrix>& result)
{
    out.status = status;
    if (status == IcgStatus::success) {
        out.z_hat = std::move(result.z_r);
        out.v_hat = std::move(result.v_r);
        out.resid = out.v_hat.norm();
    } else {
        out.z_hat = ctx.best_z;
        out.v_hat = ctx.best_v;
        out.resid = ctx.best_resid;
    }
    out.outer_iterations = ctx.k;
    out.lambda_final = st.lambda;
    out.trace = std::move(ctx.trace);
}

}  // namespace

IcgOutcome static_ia_icg(const CompositeProblem& p, const IcgConfig& cfg, const Matrix& z0)
{
    check_entry(p, cfg, z0, p.curvature.M1);
    RunContext ctx;
    ctx.cfg = &cfg;
    ctx.scale = cfg.relative_residual ? relative_residual_scale(p, z0) : 1.0;
    ctx.lambda_curvature = p.curvature.M2_plus() + 2.0 * p.curvature.m2_plus();
    ctx.lambda_floor = adaptive_lambda_floor(p, cfg.theta);
    ctx.xi = p.shift;
    StepSize st{cfg.lambda, 0.0};
    IaWarm warm{z0};
    RefinedPair<Matrix> result;
    const IcgStatus s = run_ia(p, cfg, ctx, st, warm, result);
    IcgOutcome out;
    out.z_last = warm.z;
    finish(out, s, ctx, st, result);
    return out;
}

IcgOutcome static_da_icg(const CompositeProblem& p, const IcgConfig& cfg, const Matrix& y0)
{
    check_entry(p, cfg, y0, p.curvature.M1);
    RunContext ctx;
    ctx.cfg = &cfg;
    ctx.scale = cfg.relative_residual ? relative_residual_scale(p, y0) : 1.0;
    ctx.lambda_curvature = p.curvature.M2_plus() + 2.0 * p.curvature.m2_plus();
    ctx.lambda_floor = adaptive_lambda_floor(p, cfg.theta);
    ctx.xi = p.shift;
    StepSize st{cfg.lambda, 0.0};
    DaWarm warm{0.0, y0, y0};
    RefinedPair<Matrix> result;
    const IcgStatus s = run_da(p, cfg, ctx, st, warm, result);
    IcgOutcome out;
    out.z_last = warm.y;
    out.A_last = warm.A;
    out.x_last = warm.x;
    finish(out, s, ctx, st, result);
    return out;
}

IcgOutcome dynamic_icg(IcgVariant variant, const CompositeProblem& p, const IcgConfig& cfg, const Matrix& z0)
{
    if (!(cfg.xi0 > 0.0))
        throw std::invalid_argument("dynamic_icg: xi0 must be positive");
    check_entry(p, cfg, z0, p.curvature.M1 - cfg.xi0);

    RunContext ctx;
    ctx.cfg = &cfg;
    ctx.scale = cfg.relative_residual ? relative_residual_scale(p, z0) : 1.0;
    ctx.lambda_curvature = p.curvature.M2_plus() + 2.0 * p.curvature.m2_plus();
    ctx.lambda_floor = adaptive_lambda_floor(p, cfg.theta);
    StepSize st{cfg.lambda, 0.0};
    IaWarm ia{z0};
    DaWarm da{0.0, z0, z0};
    RefinedPair<Matrix> result;

    double xi = cfg.xi0;
    int restarts = 0;
    IcgStatus s;
    for (;;) {
        const CompositeProblem ps = shift_convexity(p, xi);
        ctx.xi = ps.shift;
        s = variant == IcgVariant::ia ? run_ia(ps, cfg, ctx, st, ia, result) : run_da(ps, cfg, ctx, st, da, result);
        if (s != IcgStatus::failure)
            break;
        xi *= 2.0;
        ++restarts;
    }

    IcgOutcome out;
    out.xi_final = xi;
    out.restarts = restarts;
    if (variant == IcgVariant::ia) {
        out.z_last = ia.z;
    } else {
        out.z_last = da.y;
        out.A_last = da.A;
        out.x_last = da.x;
    }
    finish(out, s, ctx, st, result);
    return out;
}

}  // namespace specicg
