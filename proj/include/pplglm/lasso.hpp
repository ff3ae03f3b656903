#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pplglm/error.hpp"
#include "pplglm/glm.hpp"

namespace pplglm {

/// Settings for cyclic coordinate descent.
struct LassoOptions {
    double coef_tol = 1e-10;
    double gap_tol = 1e-10;
    long max_sweeps = 100000;
    double zero_threshold = 1e-12;  ///< |t| below this counts as exactly zero
};

/**
 * Solution of  min_t (2m)^-1 ||z - U t||^2 + lambda ||t||_1.
 *
 * `corr` holds U'(z - U t); at the optimum active entries equal m * lambda
 * times the coefficient sign and inactive entries are bounded by m * lambda.
 */
struct LassoSolution {
    VectorXd beta_lambda;
    double lambda = 0.0;
    IndexSet active;
    std::vector<int> signs;
    VectorXd corr;
    double objective = 0.0;
    double gap = 0.0;
    long sweeps = 0;
    Index rows = 0;  ///< m in the objective
};

/// Sufficient statistics of a least-squares problem: U'U, U'z, z'z and the row count.
struct GramProblem {
    MatrixXd gram;
    VectorXd uz;
    double zz = 0.0;
    Index rows = 0;

    static GramProblem from(const MatrixXd& U, const VectorXd& z) {
        return {U.transpose() * U, U.transpose() * z, z.squaredNorm(), U.rows()};
    }
};

inline double lasso_objective(const GramProblem& prob, const VectorXd& t, double lambda) {
    double rss = prob.zz - 2.0 * t.dot(prob.uz) + t.dot(prob.gram * t);
    return std::max(rss, 0.0) / (2.0 * static_cast<double>(prob.rows)) + lambda * t.lpNorm<1>();
}

namespace detail {

inline double soft_threshold(double x, double k) {
    if (x > k) return x - k;
    if (x < -k) return x + k;
    return 0.0;
}

// Duality gap of the lasso at t, on the (2m)^-1 objective scale.
inline double lasso_gap(const GramProblem& prob, const VectorXd& t, const VectorXd& corr,
                        double lambda) {
    const double m = static_cast<double>(prob.rows);
    double bound = m * lambda;
    double rr = std::max(prob.zz - 2.0 * t.dot(prob.uz) + t.dot(prob.gram * t), 0.0);
    double zr = prob.zz - t.dot(prob.uz);
    double cmax = corr.size() ? corr.cwiseAbs().maxCoeff() : 0.0;
    double kappa = cmax > bound ? bound / cmax : 1.0;
    // dual point theta = kappa * r; D = (||z||^2 - ||z - theta||^2) / 2
    double dual = kappa * zr - 0.5 * kappa * kappa * rr;
    double primal = 0.5 * rr + bound * t.lpNorm<1>();
    return std::max(primal - dual, 0.0) / m;
}

}  // namespace detail

inline LassoSolution solve_lasso(const GramProblem& prob, double lambda,
                                 const LassoOptions& opts = {},
                                 const VectorXd* warm_start = nullptr) {
    if (!(lambda > 0) || !std::isfinite(lambda)) fail(ErrorKind::Config, "lambda must be positive");
    const Index p = prob.gram.rows();
    const double bound = static_cast<double>(prob.rows) * lambda;
    VectorXd t = warm_start ? *warm_start : VectorXd::Zero(p);
    VectorXd corr = prob.uz - prob.gram * t;

    LassoSolution sol;
    double gap = 0.0;
    long sweep = 0;
    bool done = p == 0;
    while (!done && sweep < opts.max_sweeps) {
        ++sweep;
        double max_change = 0.0;
        for (Index j = 0; j < p; ++j) {
            double gjj = prob.gram(j, j);
            if (!(gjj > 0)) continue;
            double old = t(j);
            double next = detail::soft_threshold(corr(j) + gjj * old, bound) / gjj;
            double delta = next - old;
            if (delta != 0.0) {
                t(j) = next;
                corr.noalias() -= prob.gram.col(j) * delta;
                max_change = std::max(max_change, std::abs(delta));
            }
        }
        if (max_change < opts.coef_tol) {
            corr = prob.uz - prob.gram * t;
            done = true;
            break;
        }
        if (sweep % 10 == 0) {
            corr = prob.uz - prob.gram * t;
            gap = detail::lasso_gap(prob, t, corr, lambda);
            if (gap < opts.gap_tol) done = true;
        }
    }
    gap = detail::lasso_gap(prob, t, corr, lambda);
    if (!done) {
        fail(ErrorKind::Numeric,
             "lasso coordinate descent did not converge (duality gap " + std::to_string(gap) + ")");
    }

    for (Index j = 0; j < p; ++j) {
        if (std::abs(t(j)) < opts.zero_threshold) {
            t(j) = 0.0;
        } else {
            sol.active.push_back(j);
            sol.signs.push_back(t(j) > 0 ? 1 : -1);
        }
    }
    sol.beta_lambda = std::move(t);
    sol.lambda = lambda;
    sol.corr = prob.uz - prob.gram * sol.beta_lambda;
    sol.objective = lasso_objective(prob, sol.beta_lambda, lambda);
    sol.gap = gap;
    sol.sweeps = sweep;
    sol.rows = prob.rows;
    return sol;
}

inline LassoSolution solve_lasso(const LinearizedData& lin, double lambda,
                                 const LassoOptions& opts = {}) {
    return solve_lasso(GramProblem::from(lin.U0, lin.z0), lambda, opts);
}

inline IndexSet select_model(const LassoSolution& sol) { return sol.active; }

/// Least-squares coefficients of z0 on the columns of U0 in `model`.
inline VectorXd refit_ls(const LinearizedData& lin, const IndexSet& model) {
    MatrixXd UM = detail::columns(lin.U0, model);
    auto llt = factor_gram(UM.transpose() * UM);
    return llt.solve(UM.transpose() * lin.z0);
}

}  // namespace pplglm
