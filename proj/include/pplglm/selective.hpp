#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "pplglm/error.hpp"
#include "pplglm/glm.hpp"
#include "pplglm/interval_union.hpp"
#include "pplglm/lasso.hpp"
#include "pplglm/parametric_path.hpp"
#include "pplglm/random.hpp"
#include "pplglm/truncnorm.hpp"

namespace pplglm {

enum class Method { Ppl, Polyhedral, Naive };

inline std::string_view to_string(Method m) {
    switch (m) {
        case Method::Ppl: return "ppl";
        case Method::Polyhedral: return "polyhedral";
        case Method::Naive: return "naive";
    }
    return "unknown";
}

inline Method parse_method(std::string_view s) {
    if (s == "ppl") return Method::Ppl;
    if (s == "polyhedral") return Method::Polyhedral;
    if (s == "naive") return Method::Naive;
    fail(ErrorKind::Config, "unknown method '" + std::string(s) + "'");
}

enum class LambdaMode { Fixed, DataDriven };

inline std::string_view to_string(LambdaMode m) {
    return m == LambdaMode::Fixed ? "fixed" : "datadriven";
}

/// Inference for one selected coefficient under one method.
struct CoefficientInference {
    Index index = -1;  ///< 0-based column in the full design
    std::string name;
    Method method = Method::Ppl;
    double estimate = std::numeric_limits<double>::quiet_NaN();
    double lo = std::numeric_limits<double>::quiet_NaN();
    double hi = std::numeric_limits<double>::quiet_NaN();
    double p_value = std::numeric_limits<double>::quiet_NaN();
    double sd = std::numeric_limits<double>::quiet_NaN();  ///< pre-truncation sd of the estimate
    IntervalUnion<double> support;  ///< truncation set on the estimate's axis (empty for naive)
    std::vector<std::string> diagnostics;
    bool ok = true;
    std::string error;

    bool covers(double value) const { return ok && lo <= value && value <= hi; }
};

/// Data shared by every contrast of one linearized dataset.
struct SelectiveProblem {
    LinearizedData lin;
    GramProblem full;

    explicit SelectiveProblem(LinearizedData l)
        : lin(std::move(l)), full(GramProblem::from(lin.U0, lin.z0)) {}
};

/// The contrast for position j of `model`, expressed on the line system.
struct ContrastLine {
    VectorXd c;
    double tau_obs = 0.0;
    double c_norm2 = 0.0;
    LineSystem sys;
};

inline ContrastLine contrast_line(const SelectiveProblem& prob, const IndexSet& model, Index j) {
    const Index k = static_cast<Index>(model.size());
    if (j < 0 || j >= k) fail(ErrorKind::Config, "contrast position outside the model");
    MatrixXd gmm(k, k);
    MatrixXd g_all(prob.full.gram.rows(), k);
    for (Index c = 0; c < k; ++c) {
        g_all.col(c) = prob.full.gram.col(model[c]);
        for (Index r = 0; r < k; ++r) gmm(r, c) = prob.full.gram(model[r], model[c]);
    }
    auto llt = factor_gram(gmm);
    VectorXd v = llt.solve(VectorXd::Unit(k, j));
    ContrastLine out;
    out.c_norm2 = v(j);
    out.c = detail::columns(prob.lin.U0, model) * v;
    VectorXd a_m(k);
    for (Index r = 0; r < k; ++r) a_m(r) = prob.full.uz(model[r]);
    out.tau_obs = v.dot(a_m);
    out.sys = {prob.full.gram, prob.full.uz, g_all * v / out.c_norm2, prob.full.zz, prob.full.rows};
    return out;
}

struct EventResult {
    IntervalUnion<double> support;  ///< on the absolute tau axis
    double s_lo = 0.0;              ///< final window, relative to tau_obs
    double s_hi = 0.0;
    std::vector<std::string> diagnostics;
};

/**
 * Selection event along the contrast line: tau values whose lasso fit has
 * active set `model` (and, when given, the sign vector). The window starts
 * at +-window_sigmas pre-truncation standard deviations and doubles while an
 * end segment still carries the target label.
 */
inline EventResult model_event(const ContrastLine& line, const LassoSolution& observed,
                               const IndexSet& model, const std::vector<int>* signs,
                               double noise_scale, double window_sigmas = 30.0,
                               const PathOptions& opts = {}) {
    const double sd = std::sqrt(noise_scale * line.c_norm2);
    double half = window_sigmas * sd;
    auto matches = [&](const PathSegment& seg) {
        return seg.active == model && (!signs || seg.signs == *signs);
    };
    EventResult out;
    for (int attempt = 0;; ++attempt) {
        TauPath path = trace_line(line.sys, observed.lambda, -half, half, observed, opts);
        bool grow_low = matches(path.segments.front()) && !path.unbounded_below;
        bool grow_high = matches(path.segments.back()) && !path.unbounded_above;
        if ((grow_low || grow_high) && attempt < 20) {
            half *= 2.0;
            continue;
        }
        if (grow_low || grow_high) out.diagnostics.push_back("event window stopped growing at its limit");
        out.diagnostics.insert(out.diagnostics.end(), path.diagnostics.begin(), path.diagnostics.end());
        IntervalUnion<double> rel = signs ? sign_event(path, model, *signs) : selection_event(path, model);
        std::vector<Interval<double>> pieces;
        for (const auto& iv : rel) pieces.push_back({iv.lo + line.tau_obs, iv.hi + line.tau_obs});
        out.support = IntervalUnion<double>(std::move(pieces));
        out.s_lo = -half;
        out.s_hi = half;
        return out;
    }
}

/**
 * Train/validation sufficient statistics that do not depend on the contrast,
 * plus the train-row lasso fits at the observed data for every grid value.
 */
struct PenaltySelection {
    Split split;
    VectorXd train_mask;
    VectorXd val_mask;
    GramProblem train;
    MatrixXd val_gram;
    VectorXd val_uz;
    double val_zz = 0.0;
    std::vector<double> grid;
    std::vector<LassoSolution> train_solutions;
    std::size_t chosen = 0;
};

inline Split make_split(Index n, double train_frac, std::uint64_t seed, std::uint64_t replicate = 0) {
    if (!(train_frac > 0 && train_frac < 1)) fail(ErrorKind::Config, "split fraction must lie in (0, 1)");
    auto perm = permutation(static_cast<std::size_t>(n), seed, replicate);
    auto n_train = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(n)));
    n_train = std::clamp<std::size_t>(n_train, 1, static_cast<std::size_t>(n) - 1);
    Split split;
    for (std::size_t k = 0; k < perm.size(); ++k)
        (k < n_train ? split.train : split.validation).push_back(static_cast<Index>(perm[k]));
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.validation.begin(), split.validation.end());
    return split;
}

inline PenaltySelection select_penalty(const LinearizedData& lin, const Split& split,
                                       std::vector<double> grid) {
    if (grid.empty()) fail(ErrorKind::Config, "lambda grid is empty");
    std::sort(grid.begin(), grid.end());
    PenaltySelection ps;
    ps.split = split;
    ps.grid = std::move(grid);
    ps.train_mask = VectorXd::Zero(lin.n());
    ps.val_mask = VectorXd::Zero(lin.n());
    for (Index i : split.train) ps.train_mask(i) = 1.0;
    for (Index i : split.validation) ps.val_mask(i) = 1.0;
    MatrixXd Ut = detail::rows_of(lin.U0, split.train);
    VectorXd zt = detail::rows_of(lin.z0, split.train);
    MatrixXd Uv = detail::rows_of(lin.U0, split.validation);
    VectorXd zv = detail::rows_of(lin.z0, split.validation);
    ps.train = GramProblem::from(Ut, zt);
    ps.val_gram = Uv.transpose() * Uv;
    ps.val_uz = Uv.transpose() * zv;
    ps.val_zz = zv.squaredNorm();

    double best = std::numeric_limits<double>::infinity();
    const VectorXd* warm = nullptr;
    for (std::size_t k = 0; k < ps.grid.size(); ++k) {
        LassoSolution sol = solve_lasso(ps.train, ps.grid[k], {}, warm);
        const VectorXd& b = sol.beta_lambda;
        double err = ps.val_zz - 2.0 * b.dot(ps.val_uz) + b.dot(ps.val_gram * b);
        if (err < best) {
            best = err;
            ps.chosen = k;
        }
        ps.train_solutions.push_back(std::move(sol));
        warm = &ps.train_solutions.back().beta_lambda;
    }
    return ps;
}

/// Penalty-selection event for one contrast, on the absolute tau axis.
inline IntervalUnion<double> penalty_event(const PenaltySelection& ps, const LinearizedData& lin,
                                           const ContrastLine& line, double s_lo, double s_hi) {
    VectorXd dir = line.c / line.c_norm2;
    VectorXd dt = dir.cwiseProduct(ps.train_mask);
    VectorXd dv = dir.cwiseProduct(ps.val_mask);
    LambdaSelectionLine sel;
    sel.train = {ps.train.gram, ps.train.uz, lin.U0.transpose() * dt, ps.train.zz, ps.train.rows};
    sel.train_dd = dt.squaredNorm();
    sel.train_zd = lin.z0.dot(dt);
    sel.val_gram = ps.val_gram;
    sel.val_uz = ps.val_uz;
    sel.val_ud = lin.U0.transpose() * dv;
    sel.val_zz = ps.val_zz;
    sel.val_zd = lin.z0.dot(dv);
    sel.val_dd = dv.squaredNorm();
    auto rel = lambda_event_on_line(sel, ps.grid, ps.chosen, ps.train_solutions, s_lo, s_hi);
    std::vector<Interval<double>> pieces;
    for (const auto& iv : rel) pieces.push_back({iv.lo + line.tau_obs, iv.hi + line.tau_obs});
    return IntervalUnion<double>(std::move(pieces));
}

/// Confidence interval and p-value from a truncated-normal statistic.
inline void truncated_inference(CoefficientInference& out, double stat, double var,
                                const IntervalUnion<double>& support, double alpha) {
    out.estimate = stat;
    out.sd = std::sqrt(var);
    out.support = support;
    auto ci = confidence_interval(stat, var, support, alpha, &out.diagnostics);
    out.lo = ci.lo;
    out.hi = ci.hi;
    out.p_value = p_value(stat, var, support, &out.diagnostics);
}

/**
 * Parametric-programming inference for position j of the selected model:
 * the estimate c'z0 is a normal variable truncated to the tau values that
 * reproduce the selection (intersected with the penalty-selection event when
 * the penalty was chosen from data).
 */
inline CoefficientInference ppl_coefficient(const SelectiveProblem& prob, const LassoSolution& observed,
                                            const IndexSet& model, Index j, double alpha,
                                            const PenaltySelection* penalty = nullptr,
                                            double window_sigmas = 30.0) {
    CoefficientInference out;
    out.method = Method::Ppl;
    out.index = model[static_cast<std::size_t>(j)];
    ContrastLine line = contrast_line(prob, model, j);
    EventResult ev = model_event(line, observed, model, nullptr, prob.lin.noise_scale, window_sigmas);
    out.diagnostics = ev.diagnostics;
    IntervalUnion<double> support = ev.support;
    if (penalty) support = support.intersect(penalty_event(*penalty, prob.lin, line, ev.s_lo, ev.s_hi));
    if (support.is_empty()) fail(ErrorKind::Numeric, "selection event is empty");
    truncated_inference(out, line.tau_obs, prob.lin.noise_scale * line.c_norm2, support, alpha);
    return out;
}

}  // namespace pplglm
