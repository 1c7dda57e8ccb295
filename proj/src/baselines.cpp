#include "specicg/baselines.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace specicg {

namespace {

using Clock = std::chrono::steady_clock;

void check_start(const CompositeProblem& p, const BaselineConfig& cfg, const Matrix& z0)
{
    validate_problem(p);
    if (!(cfg.rho_hat > 0.0))
        throw std::invalid_argument("baseline: rho_hat must be positive");
    if (z0.rows() != p.rows || z0.cols() != p.cols)
        throw std::invalid_argument("baseline: starting point shape does not match the problem");
    if (!std::isfinite(p.hv_value(block_singular_values(z0, p.layout))))
        throw std::invalid_argument("baseline: starting point outside dom h");
}

/// A point expressed in its own spectral frame, with f1 + f2 value and gradient.
struct SmoothPoint {
    Matrix U;
    Vector s;
    double F = 0.0;
    double h = 0.0;
    Matrix grad;
};

SmoothPoint evaluate_in_frame(const CompositeProblem& p, const SpectralFrame& frame, const Vector& s)
{
    SmoothPoint out;
    out.U = frame.lift(s);
    out.s = s;
    out.F = p.f1_value(out.U) + p.f2v_value(s);
    out.h = p.hv_value(s);
    out.grad = p.f1_grad(out.U) + frame.lift(p.f2v_grad(s));
    return out;
}

SmoothPoint evaluate(const CompositeProblem& p, const Matrix& U)
{
    const SpectralFrame frame(U, p.layout);
    SmoothPoint out = evaluate_in_frame(p, frame, frame.singular_values());
    out.U = U;
    return out;
}

struct Runner {
    explicit Runner(const BaselineConfig& c) : cfg(&c) {}

    const BaselineConfig* cfg;
    Clock::time_point start = Clock::now();
    double scale = 1.0;
    int k = 0;
    RunTrace trace;
    Matrix best_z;
    Matrix best_v;
    double best_resid = kInfinity;

    double elapsed() const { return std::chrono::duration<double>(Clock::now() - start).count(); }
    bool out_of_budget() const { return elapsed() >= cfg->time_budget || k >= cfg->iteration_cap; }

    /// Returns true when the stopping rule is met.
    bool record(double phi, const Matrix& z_hat, const Matrix& v_hat, double lambda, int trials)
    {
        TraceRecord r;
        r.k = k;
        r.wall_seconds = elapsed();
        r.phi = phi;
        r.resid = v_hat.norm();
        r.measure = r.resid / scale;
        r.lambda = lambda;
        r.inner_iterations = trials;
        r.accepted = true;
        trace.append(r);
        if (cfg->on_record)
            cfg->on_record(trace.records.back());
        if (r.resid < best_resid) {
            best_resid = r.resid;
            best_z = z_hat;
            best_v = v_hat;
        }
        return r.measure <= cfg->rho_hat;
    }

    IcgOutcome finish(IcgStatus status, double lambda)
    {
        IcgOutcome out;
        out.status = status;
        out.z_hat = best_z;
        out.v_hat = best_v;
        out.resid = best_resid;
        out.outer_iterations = k;
        out.lambda_final = lambda;
        out.z_last = best_z;
        out.trace = std::move(trace);
        return out;
    }
};

}  // namespace

IcgOutcome ecg_run(const CompositeProblem& p, const BaselineConfig& cfg, const Matrix& z0)
{
    check_start(p, cfg, z0);
    const CurvatureBounds& c = p.curvature;
    const double L = std::max(std::abs(c.m1 + c.m2), std::abs(c.M1 + c.M2));
    if (!(L > 0.0))
        throw std::invalid_argument("ecg_run: curvature constants are all zero");
    if (!(cfg.gamma_u > 1.0) || !(cfg.gamma_d >= 1.0))
        throw std::invalid_argument("ecg_run: need gamma_u > 1 and gamma_d >= 1");
    const double lambda0 = cfg.lambda0 > 0.0 ? cfg.lambda0 : 100.0 / L;
    const double M_floor = L * 1e-12;

    Runner run(cfg);
    run.scale = cfg.relative_residual ? relative_residual_scale(p, z0) : 1.0;
    double M = 1.0 / lambda0;
    SmoothPoint y = evaluate(p, z0);
    for (;;) {
        if (run.out_of_budget())
            return run.finish(IcgStatus::budget_exceeded, 1.0 / M);
        ++run.k;
        int trials = 0;
        SmoothPoint T;
        for (;;) {
            ++trials;
            const SpectralFrame frame(y.U - y.grad / M, p.layout);
            const Vector t = p.hv_prox(frame.singular_values(), 1.0 / M);
            T = evaluate_in_frame(p, frame, t);
            const Matrix D = T.U - y.U;
            const double model = y.F + frob_inner(y.grad, D) + 0.5 * M * D.squaredNorm();
            if (T.F <= model)
                break;
            // Near a stationary point the value test drowns in cancellation;
            // within rounding, fall back to its second-order form, exact for quadratics.
            if (T.F <= model + kRoundingSlack * (1.0 + std::abs(T.F) + std::abs(y.F)) &&
                frob_inner(T.grad - y.grad, D) <= M * D.squaredNorm())
                break;
            M *= cfg.gamma_u;
        }
        const Matrix v_hat = M * (y.U - T.U) + T.grad - y.grad;
        const double lambda = 1.0 / M;
        y = std::move(T);
        if (run.record(y.F + y.h, y.U, v_hat, lambda, trials))
            return run.finish(IcgStatus::success, lambda);
        M = std::max(M / cfg.gamma_d, M_floor);
    }
}

IcgOutcome ag_run(const CompositeProblem& p, const BaselineConfig& cfg, const Matrix& z0)
{
    check_start(p, cfg, z0);
    const double Msum = p.curvature.M1 + p.curvature.M2;
    double beta = cfg.beta;
    if (!(beta > 0.0)) {
        if (!(Msum > 0.0))
            throw std::invalid_argument("ag_run: default beta needs M1 + M2 > 0");
        beta = 1.0 / (2.0 * Msum);
    }

    Runner run(cfg);
    run.scale = cfg.relative_residual ? relative_residual_scale(p, z0) : 1.0;
    Matrix x = z0;
    Matrix x_ag = z0;
    for (;;) {
        if (run.out_of_budget())
            return run.finish(IcgStatus::budget_exceeded, beta);
        ++run.k;
        const double k = run.k;
        const double alpha = 2.0 / (k + 1.0);
        const double lam = k * beta / 2.0;
        const Matrix x_md = (1.0 - alpha) * x_ag + alpha * x;
        const SmoothPoint md = evaluate(p, x_md);
        x = prox_h_matrix(p, x - lam * md.grad, lam);
        const SpectralFrame frame(x_md - beta * md.grad, p.layout);
        const SmoothPoint ag = evaluate_in_frame(p, frame, p.hv_prox(frame.singular_values(), beta));
        x_ag = ag.U;
        const Matrix v_hat = (x_md - x_ag) / beta + ag.grad - md.grad;
        if (run.record(ag.F + ag.h, x_ag, v_hat, beta, 1))
            return run.finish(IcgStatus::success, beta);
    }
}

}  // namespace specicg
