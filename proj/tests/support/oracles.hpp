#pragma once

// Independent reference computations used by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "pplglm/pplglm.hpp"

namespace oracle {

using pplglm::Dataset;
using pplglm::Family;
using pplglm::FamilyKind;
using pplglm::Index;
using pplglm::IndexSet;
using pplglm::MatrixXd;
using pplglm::VectorXd;

/// Adaptive Gauss-Kronrod integral of f over [a, b] (either end may be infinite).
template <typename F>
double integrate(F f, double a, double b) {
    double err = 0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-13, &err);
}

/// Tanh-sinh integral over a finite interval; tolerates endpoint singularities.
template <typename F>
double integrate_singular(F f, double a, double b) {
    boost::math::quadrature::tanh_sinh<double> rule;
    return rule.integrate(f, a, b);
}

/**
 * Truncated normal CDF by quadrature. The density is rescaled by
 * exp(shift) where shift is the smallest squared standardized distance of
 * the support from mu, so remote supports stay representable.
 */
inline double truncated_cdf(double x, double mu, double var, const std::vector<std::pair<double, double>>& support) {
    const double sd = std::sqrt(var);
    double shift = std::numeric_limits<double>::infinity();
    for (auto [lo, hi] : support) {
        double zl = (lo - mu) / sd, zh = (hi - mu) / sd;
        double d = (zl <= 0 && zh >= 0) ? 0.0 : std::min(zl * zl, zh * zh);
        shift = std::min(shift, d);
    }
    auto dens = [&](double t) {
        double z = (t - mu) / sd;
        return std::exp(-0.5 * (z * z - shift));
    };
    double below = 0, total = 0;
    for (auto [lo, hi] : support) {
        double piece = integrate(dens, lo, hi);
        total += piece;
        if (x >= hi)
            below += piece;
        else if (x > lo)
            below += integrate(dens, lo, x);
    }
    return below / total;
}

/// Two-sided Kolmogorov-Smirnov p-value of a sample against the CDF `cdf`.
template <typename Cdf>
double ks_pvalue(std::vector<double> sample, Cdf cdf) {
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        double f = cdf(sample[i]);
        d = std::max({d, (i + 1) / n - f, f - i / n});
    }
    double lam = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
    double p = 0;
    for (int k = 1; k <= 200; ++k) p += 2.0 * (k % 2 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lam * lam);
    return std::clamp(p, 0.0, 1.0);
}

inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Random GLM data with iid N(0,1) covariates.
inline Dataset random_glm(std::mt19937_64& rng, const Family& family, Index n, Index p, double beta0,
                          const VectorXd& beta, double phi = 10.0) {
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unif;
    Dataset d;
    d.X.resize(n, p);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < p; ++j) d.X(i, j) = gauss(rng);
    d.y.resize(n);
    for (Index i = 0; i < n; ++i) {
        double eta = beta0 + d.X.row(i).dot(beta);
        double mu = 1.0 / (1.0 + std::exp(-eta));
        switch (family.kind) {
            case FamilyKind::Logistic: d.y(i) = unif(rng) < mu ? 1.0 : 0.0; break;
            case FamilyKind::Poisson: d.y(i) = std::poisson_distribution<int>(std::exp(eta))(rng); break;
            case FamilyKind::Beta: {
                double a = std::gamma_distribution<double>(mu * phi)(rng);
                double b = std::gamma_distribution<double>((1 - mu) * phi)(rng);
                d.y(i) = std::clamp(a / (a + b), 1e-12, 1 - 1e-12);
                break;
            }
        }
    }
    return d;
}

/// Active set of a fresh coordinate-descent lasso at response z.
inline IndexSet lasso_active(const MatrixXd& U, const VectorXd& z, double lambda) {
    return pplglm::solve_lasso(pplglm::GramProblem::from(U, z), lambda).active;
}

/// True when x lies within tol of any segment endpoint of the path.
inline bool near_breakpoint(const pplglm::TauPath& path, double x, double tol) {
    for (const auto& s : path.segments)
        if (std::abs(x - s.lo) <= tol || std::abs(x - s.hi) <= tol) return true;
    return false;
}

}  // namespace oracle
