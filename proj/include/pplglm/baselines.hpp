#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pplglm/error.hpp"
#include "pplglm/glm.hpp"
#include "pplglm/selective.hpp"
#include "pplglm/truncnorm.hpp"

namespace pplglm {

/**
 * Wald intervals from the refitted submodel GLM, ignoring selection. The
 * standard errors come from the inverse observed information (for beta
 * regression the joint information in intercept, slopes and phi).
 */
inline std::vector<CoefficientInference> naive_wald(const Dataset& data, const Family& family,
                                                    const IndexSet& model, double alpha,
                                                    const FitOptions& fit_opts = {}) {
    if (!(alpha > 0 && alpha < 1)) fail(ErrorKind::Config, "alpha must lie in (0, 1)");
    Dataset sub{detail::columns(data.X, model), data.y, {}};
    GlmFit fit = fit_mle(sub, family, fit_opts);
    MatrixXd info = observed_information(sub, family, fit.beta0, fit.beta, fit.phi);
    if (fit.ridge_used) info.block(1, 1, sub.p(), sub.p()).diagonal().array() += 2.0 * fit.ridge;
    Eigen::FullPivLU<MatrixXd> lu(info);
    if (!lu.isInvertible()) fail(ErrorKind::Numeric, "observed information of the submodel is singular");
    MatrixXd cov = lu.inverse();
    const double z = normal::quantile(1.0 - alpha / 2.0);

    std::vector<CoefficientInference> out;
    for (std::size_t k = 0; k < model.size(); ++k) {
        CoefficientInference ci;
        ci.method = Method::Naive;
        ci.index = model[k];
        ci.name = data.column_name(model[k]);
        const Index pos = static_cast<Index>(k) + 1;
        double var = cov(pos, pos);
        if (!(var > 0)) fail(ErrorKind::Numeric, "non-positive variance from the observed information");
        ci.estimate = fit.beta(static_cast<Index>(k));
        ci.sd = std::sqrt(var);
        ci.lo = ci.estimate - z * ci.sd;
        ci.hi = ci.estimate + z * ci.sd;
        ci.p_value = 2.0 * std::exp(normal::log_upper(std::abs(ci.estimate) / ci.sd));
        if (fit.ridge_used) ci.diagnostics.push_back("ridge fallback used in the submodel fit");
        out.push_back(std::move(ci));
    }
    return out;
}

/**
 * Sign-conditioned (polyhedral) inference on the same contrast line: the
 * truncation set is the interval of tau values containing the observed
 * statistic on which the lasso keeps both the model and its signs (and,
 * with a data-driven penalty, the same penalty choice).
 */
inline CoefficientInference polyhedral_coefficient(const SelectiveProblem& prob,
                                                   const LassoSolution& observed,
                                                   const IndexSet& model, Index j, double alpha,
                                                   const PenaltySelection* penalty = nullptr,
                                                   double window_sigmas = 30.0) {
    CoefficientInference out;
    out.method = Method::Polyhedral;
    out.index = model[static_cast<std::size_t>(j)];
    ContrastLine line = contrast_line(prob, model, j);
    EventResult ev = model_event(line, observed, model, &observed.signs, prob.lin.noise_scale,
                                 window_sigmas);
    out.diagnostics = ev.diagnostics;
    IntervalUnion<double> event = ev.support;
    if (penalty) event = event.intersect(penalty_event(*penalty, prob.lin, line, ev.s_lo, ev.s_hi));
    const double sd = std::sqrt(prob.lin.noise_scale * line.c_norm2);
    auto idx = event.find(line.tau_obs, 1e-6 * sd);
    if (idx < 0) fail(ErrorKind::Numeric, "observed statistic lies outside its sign event");
    if (event.size() > 1)
        out.diagnostics.push_back("sign event has " + std::to_string(event.size()) +
                                  " pieces; using the one containing the statistic");
    const auto& piece = event.intervals()[static_cast<std::size_t>(idx)];
    truncated_inference(out, line.tau_obs, sd * sd, IntervalUnion<double>(piece.lo, piece.hi), alpha);
    return out;
}

/// Convenience wrapper matching the pipeline's inputs: polyhedral inference
/// for position j of the model selected at `lambda`.
inline CoefficientInference polyhedral_infer(const LinearizedData& lin, double lambda,
                                             const IndexSet& model, const std::vector<int>& signs,
                                             Index j, double alpha) {
    SelectiveProblem prob(lin);
    LassoSolution sol = solve_lasso(prob.full, lambda);
    if (sol.active != model || sol.signs != signs)
        fail(ErrorKind::Config, "model and signs do not match the lasso solution at this lambda");
    return polyhedral_coefficient(prob, sol, model, j, alpha);
}

}  // namespace pplglm
