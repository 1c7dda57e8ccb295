#pragma once

#include "specicg/icg.hpp"
#include "specicg/model.hpp"

namespace specicg {

enum class BaselineMethod { ecg, ag };

struct BaselineConfig {
    BaselineMethod method = BaselineMethod::ecg;
    /// ECG: initial stepsize; 0 selects 100 / L with L = max(m1 + m2, M1 + M2).
    double lambda0 = 0.0;
    double gamma_u = 2.0;
    double gamma_d = 2.0;
    /// AG: constant beta_k; 0 selects 1 / (2 (M1 + M2)).
    double beta = 0.0;
    double rho_hat = 1e-6;
    bool relative_residual = false;
    double time_budget = kInfinity;
    int iteration_cap = 10000000;
    TraceCallback on_record;
};

/// Composite gradient method with Nesterov's adaptive backtracking: trial
/// steps 1/M accepted on the upper quadratic model of f1 + f2, M multiplied by
/// gamma_u on rejection and divided by gamma_d after acceptance.
IcgOutcome ecg_run(const CompositeProblem& p, const BaselineConfig& cfg, const Matrix& z0);

/// Accelerated composite gradient method for nonconvex problems with
/// alpha_k = 2/(k+1), constant beta_k, and lambda_k = k beta_k / 2.
/// The residual is the composite gradient mapping at the aggregated point.
IcgOutcome ag_run(const CompositeProblem& p, const BaselineConfig& cfg, const Matrix& z0);

}  // namespace specicg
