#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pplglm/baselines.hpp"
#include "pplglm/error.hpp"
#include "pplglm/family.hpp"
#include "pplglm/glm.hpp"
#include "pplglm/lasso.hpp"
#include "pplglm/selective.hpp"

namespace pplglm {

/// How user-facing penalty values map to the solver's per-observation lambda.
/// Total: the value bounds |U0'(z0 - U0 t)| directly (solver lambda = value / n).
/// Mean: the value is the solver lambda itself.
enum class LambdaScale { Total, Mean };

inline std::string_view to_string(LambdaScale s) { return s == LambdaScale::Total ? "total" : "mean"; }

inline LambdaScale parse_lambda_scale(std::string_view s) {
    if (s == "total") return LambdaScale::Total;
    if (s == "mean") return LambdaScale::Mean;
    fail(ErrorKind::Config, "unknown lambda scale '" + std::string(s) + "'");
}

inline LambdaMode parse_lambda_mode(std::string_view s) {
    if (s == "fixed") return LambdaMode::Fixed;
    if (s == "datadriven" || s == "data-driven") return LambdaMode::DataDriven;
    fail(ErrorKind::Config, "unknown lambda mode '" + std::string(s) + "'");
}

/// Geometric grid lo, ..., hi with k points.
inline std::vector<double> lambda_grid(double lo, double hi, int k) {
    if (!(lo > 0) || !(lo < hi) || !std::isfinite(hi)) fail(ErrorKind::Config, "lambda grid needs 0 < lo < hi");
    if (k < 2) fail(ErrorKind::Config, "lambda grid needs at least two points");
    std::vector<double> out(static_cast<std::size_t>(k));
    const double a = std::log(lo), b = std::log(hi);
    for (int i = 0; i < k; ++i) out[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (k - 1));
    out.front() = lo;
    out.back() = hi;
    return out;
}

struct InferenceOptions {
    LambdaMode mode = LambdaMode::DataDriven;
    double lambda = 2.0;              ///< fixed mode
    std::vector<double> grid;         ///< data-driven mode; empty means automatic
    double alpha = 0.05;
    double split_frac = 0.7;
    std::uint64_t seed = 1;
    std::vector<Method> methods{Method::Ppl};
    double window_sigmas = 30.0;
    LambdaScale scale = LambdaScale::Total;
    FitOptions fit;
};

/// Full-model fit and linearization, shared by every penalty value.
struct Prepared {
    GlmFit fit;
    SelectiveProblem prob;
};

inline Prepared prepare(const Dataset& data, const Family& family, const FitOptions& fit_opts = {}) {
    validate(data, family);
    GlmFit fit = fit_mle(data, family, fit_opts);
    return {fit, SelectiveProblem(linearize(data, family, fit))};
}

inline double solver_lambda(double value, Index n, LambdaScale scale) {
    return scale == LambdaScale::Total ? value / static_cast<double>(n) : value;
}

/// Smallest penalty (user scale) at which the lasso selects nothing.
inline double lambda_max(const Prepared& prep, LambdaScale scale) {
    const auto& uz = prep.prob.full.uz;
    double m = uz.size() ? uz.cwiseAbs().maxCoeff() : 0.0;
    return scale == LambdaScale::Total ? m : m / static_cast<double>(prep.prob.lin.n());
}

/// Twenty log-spaced values from lambda_max / 20 to lambda_max.
inline std::vector<double> automatic_grid(const Prepared& prep, LambdaScale scale) {
    double hi = lambda_max(prep, scale);
    if (!(hi > 0)) fail(ErrorKind::Data, "pseudo-response is orthogonal to every covariate");
    return lambda_grid(hi / 20.0, hi, 20);
}

/// Lasso selection at one penalty, or the data-driven choice over a grid.
struct Selection {
    LassoSolution sol;
    double lambda = 0.0;  ///< on the user scale
    std::vector<double> grid;
    std::optional<PenaltySelection> penalty;
};

inline Selection choose_model(const Prepared& prep, const InferenceOptions& opts,
                              std::uint64_t replicate = 0) {
    const Index n = prep.prob.lin.n();
    Selection sel;
    if (opts.mode == LambdaMode::Fixed) {
        if (!(opts.lambda > 0)) fail(ErrorKind::Config, "lambda must be positive");
        sel.lambda = opts.lambda;
    } else {
        std::vector<double> grid = opts.grid.empty() ? automatic_grid(prep, opts.scale) : opts.grid;
        if (grid.size() < 2) fail(ErrorKind::Config, "data-driven lambda needs a grid of at least two values");
        for (double v : grid)
            if (!(v > 0) || !std::isfinite(v)) fail(ErrorKind::Config, "lambda grid values must be positive");
        std::sort(grid.begin(), grid.end());
        sel.grid = grid;
        std::vector<double> internal;
        for (double v : grid) internal.push_back(solver_lambda(v, n, opts.scale));
        Split split = make_split(n, opts.split_frac, opts.seed, replicate);
        sel.penalty = select_penalty(prep.prob.lin, split, internal);
        sel.lambda = grid[sel.penalty->chosen];
    }
    sel.sol = solve_lasso(prep.prob.full, solver_lambda(sel.lambda, n, opts.scale));
    return sel;
}

/// Inference for every selected coefficient under one method. Failures for
/// one coefficient are recorded in its entry and do not stop the others.
inline std::vector<CoefficientInference> infer(const Dataset& data, const Family& family,
                                               const Prepared& prep, const Selection& sel,
                                               Method method, const InferenceOptions& opts) {
    const IndexSet& model = sel.sol.active;
    std::vector<CoefficientInference> out;
    if (method == Method::Naive) {
        try {
            out = naive_wald(data, family, model, opts.alpha, opts.fit);
        } catch (const Error& e) {
            for (Index j : model) {
                CoefficientInference ci;
                ci.method = method;
                ci.index = j;
                ci.name = data.column_name(j);
                ci.ok = false;
                ci.error = e.what();
                out.push_back(std::move(ci));
            }
        }
        return out;
    }
    for (std::size_t k = 0; k < model.size(); ++k) {
        CoefficientInference ci;
        try {
            if (method == Method::Ppl) {
                ci = ppl_coefficient(prep.prob, sel.sol, model, static_cast<Index>(k), opts.alpha,
                                     sel.penalty ? &*sel.penalty : nullptr, opts.window_sigmas);
            } else {
                ci = polyhedral_coefficient(prep.prob, sel.sol, model, static_cast<Index>(k), opts.alpha,
                                            sel.penalty ? &*sel.penalty : nullptr, opts.window_sigmas);
            }
        } catch (const Error& e) {
            ci = CoefficientInference{};
            ci.method = method;
            ci.index = model[k];
            ci.ok = false;
            ci.error = e.what();
        }
        ci.name = data.column_name(model[k]);
        out.push_back(std::move(ci));
    }
    return out;
}

struct InferenceReport {
    Family family;
    Index n = 0;
    Index p = 0;
    IndexSet model;
    std::vector<std::string> names;
    std::vector<int> signs;
    double lambda = 0.0;
    LambdaMode mode = LambdaMode::DataDriven;
    std::vector<double> grid;
    double alpha = 0.05;
    double beta0 = 0.0;
    double phi = 1.0;
    bool ridge_used = false;
    std::vector<CoefficientInference> coefficients;
    std::vector<std::string> diagnostics;
    std::map<std::string, std::string> settings;
};

/// Fit, linearize, select and run every requested method. Throws an
/// EmptyModel error when the lasso selects nothing.
inline InferenceReport run_inference(const Dataset& data, const Family& family,
                                     const InferenceOptions& opts) {
    Prepared prep = prepare(data, family, opts.fit);
    Selection sel = choose_model(prep, opts);
    if (sel.sol.active.empty()) fail(ErrorKind::EmptyModel, "no covariates selected");

    InferenceReport rep;
    rep.family = family;
    rep.n = data.n();
    rep.p = data.p();
    rep.model = sel.sol.active;
    for (Index j : rep.model) rep.names.push_back(data.column_name(j));
    rep.signs = sel.sol.signs;
    rep.lambda = sel.lambda;
    rep.mode = opts.mode;
    rep.grid = sel.grid;
    rep.alpha = opts.alpha;
    rep.beta0 = prep.fit.beta0;
    rep.phi = prep.fit.phi;
    rep.ridge_used = prep.fit.ridge_used;
    if (prep.fit.ridge_used) rep.diagnostics.push_back("ridge fallback used in the full-model fit");
    for (Method m : opts.methods) {
        auto part = infer(data, family, prep, sel, m, opts);
        rep.coefficients.insert(rep.coefficients.end(), part.begin(), part.end());
    }
    return rep;
}

}  // namespace pplglm
