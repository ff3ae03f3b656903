#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pplglm/error.hpp"
#include "pplglm/family.hpp"

namespace pplglm {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Sorted 0-based column indices of a (sub)model.
using IndexSet = std::vector<Index>;

struct Dataset {
    MatrixXd X;  ///< n x p covariates, one observation per row
    VectorXd y;
    std::vector<std::string> names;  ///< optional column names, size p when present

    Index n() const { return X.rows(); }
    Index p() const { return X.cols(); }

    std::string column_name(Index j) const {
        if (static_cast<std::size_t>(j) < names.size()) return names[static_cast<std::size_t>(j)];
        return "x" + std::to_string(j + 1);
    }
};

/// Checks the response domain of the family and finiteness of all entries.
inline void validate(const Dataset& data, const Family& family) {
    if (data.y.size() != data.X.rows())
        fail(ErrorKind::Data, "response length does not match the number of rows of X");
    if (!data.X.allFinite()) fail(ErrorKind::Data, "covariate matrix has non-finite entries");
    for (Index i = 0; i < data.y.size(); ++i) {
        double v = data.y(i);
        bool ok = std::isfinite(v);
        switch (family.kind) {
            case FamilyKind::Logistic: ok = ok && (v == 0.0 || v == 1.0); break;
            case FamilyKind::Poisson: ok = ok && v >= 0.0 && v == std::floor(v); break;
            case FamilyKind::Beta: ok = ok && v > 0.0 && v < 1.0; break;
        }
        if (!ok) {
            fail(ErrorKind::Data, "response at row " + std::to_string(i + 1) + " (value " +
                                      std::to_string(v) + ") is outside the " +
                                      std::string(to_string(family.kind)) + " domain");
        }
    }
}

struct FitOptions {
    double tol = 1e-8;           ///< max absolute coefficient change at convergence
    int max_iter = 100;
    double ridge = 1e-4;         ///< fallback penalty: ridge * ||t||^2 / n on the mean log-likelihood
    double phi_tol = 1e-8;       ///< Newton tolerance on log(phi)
    bool allow_ridge = true;
};

struct GlmFit {
    double beta0 = 0.0;
    VectorXd beta;
    double phi = 1.0;
    VectorXd eta;
    bool converged = false;
    int iterations = 0;
    bool ridge_used = false;
    double ridge = 0.0;  ///< ridge coefficient actually applied to the sum log-likelihood
};

/// Thrown when IRLS does not converge; carries the last iterate.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, GlmFit last)
        : Error(ErrorKind::Numeric, what), last_(std::move(last)) {}
    const GlmFit& last_iterate() const { return last_; }

private:
    GlmFit last_;
};

namespace detail {

inline MatrixXd columns(const MatrixXd& X, const IndexSet& cols) {
    MatrixXd out(X.rows(), static_cast<Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Index>(k)) = X.col(cols[k]);
    return out;
}

inline bool response_degenerate(const Dataset& data, const Family& family) {
    const auto& y = data.y;
    if (y.size() == 0) return true;
    double lo = y.minCoeff();
    double hi = y.maxCoeff();
    switch (family.kind) {
        case FamilyKind::Logistic: return lo == hi;
        case FamilyKind::Poisson: return hi == 0.0;
        case FamilyKind::Beta: return lo == hi;
    }
    return false;
}

// Sum of beta log-densities given linear predictors.
inline double beta_loglik(const VectorXd& y, const VectorXd& eta, double phi) {
    double ll = 0.0;
    for (Index i = 0; i < y.size(); ++i) ll += beta_log_density(y(i), logistic_sigmoid(eta(i)), phi);
    return ll;
}

// Maximizes the beta log-likelihood in phi for fixed means by Newton steps on log(phi).
inline double update_phi(const VectorXd& y, const VectorXd& eta, double phi, double tol) {
    using boost::math::digamma;
    using boost::math::trigamma;
    const Index n = y.size();
    VectorXd mu(n), ly(n), l1y(n);
    for (Index i = 0; i < n; ++i) {
        mu(i) = logistic_sigmoid(eta(i));
        ly(i) = std::log(y(i));
        l1y(i) = std::log1p(-y(i));
    }
    auto loglik = [&](double ph) {
        double s = 0.0;
        for (Index i = 0; i < n; ++i) {
            double a = mu(i) * ph, c = (1.0 - mu(i)) * ph;
            s += std::lgamma(ph) - std::lgamma(a) - std::lgamma(c) + (a - 1.0) * ly(i) +
                 (c - 1.0) * l1y(i);
        }
        return s;
    };
    double theta = std::log(phi);
    double current = loglik(phi);
    for (int it = 0; it < 200; ++it) {
        double ph = std::exp(theta);
        double g = 0.0, h = 0.0;
        for (Index i = 0; i < n; ++i) {
            double m = mu(i), v = 1.0 - m;
            g += digamma(ph) - m * digamma(m * ph) - v * digamma(v * ph) + m * ly(i) + v * l1y(i);
            h += trigamma(ph) - m * m * trigamma(m * ph) - v * v * trigamma(v * ph);
        }
        double g_theta = ph * g;
        double h_theta = ph * g + ph * ph * h;
        double step = h_theta < 0 ? -g_theta / h_theta : (g_theta > 0 ? 1.0 : -1.0);
        step = std::clamp(step, -3.0, 3.0);
        double next = theta + step;
        double value = loglik(std::exp(next));
        int halvings = 0;
        while (!(value >= current - 1e-12 * std::abs(current)) && halvings < 40) {
            step *= 0.5;
            next = theta + step;
            value = loglik(std::exp(next));
            ++halvings;
        }
        theta = next;
        current = value;
        if (std::abs(step) < tol) break;
    }
    double out = std::exp(theta);
    if (!std::isfinite(out) || !(out > 0))
        fail(ErrorKind::Numeric, "beta precision estimate diverged");
    return out;
}

}  // namespace detail

/// Sum log-likelihood up to terms free of the parameters (canonical families)
/// or the full beta log-likelihood.
inline double log_likelihood(const Dataset& data, const Family& family, double beta0,
                             const VectorXd& beta, double phi = 1.0) {
    VectorXd eta = (data.X * beta).array() + beta0;
    if (family.is_beta()) return detail::beta_loglik(data.y, eta, phi);
    double ll = 0.0;
    for (Index i = 0; i < eta.size(); ++i) ll += data.y(i) * eta(i) - family_eval(family, eta(i)).b;
    return ll / family.dispersion(phi);
}

/// Gradient of the log-likelihood in (beta0, beta), plus d/dphi as the last
/// entry for beta regression.
inline VectorXd score(const Dataset& data, const Family& family, double beta0,
                      const VectorXd& beta, double phi = 1.0) {
    const Index n = data.n(), p = data.p();
    VectorXd eta = (data.X * beta).array() + beta0;
    VectorXd resid(n);
    double dphi = 0.0;
    for (Index i = 0; i < n; ++i) {
        if (family.is_beta()) {
            BetaTerms t = beta_terms(eta(i), phi, data.y(i));
            resid(i) = phi * (t.y_star - t.mu_star) * t.mu * t.nu;
            dphi += boost::math::digamma(phi) - t.mu * boost::math::digamma(t.mu * phi) -
                    t.nu * boost::math::digamma(t.nu * phi) + t.mu * std::log(data.y(i)) +
                    t.nu * std::log1p(-data.y(i));
        } else {
            resid(i) = data.y(i) - family_eval(family, eta(i)).b1;
        }
    }
    VectorXd g(p + 1 + (family.is_beta() ? 1 : 0));
    g(0) = resid.sum();
    g.segment(1, p) = data.X.transpose() * resid;
    if (family.is_beta()) g(p + 1) = dphi;
    return g;
}

/// Negative Hessian of the log-likelihood in (beta0, beta[, phi]).
inline MatrixXd observed_information(const Dataset& data, const Family& family, double beta0,
                                     const VectorXd& beta, double phi = 1.0) {
    using boost::math::trigamma;
    const Index n = data.n(), p = data.p();
    const Index dim = p + 1 + (family.is_beta() ? 1 : 0);
    MatrixXd design(n, p + 1);
    design.col(0).setOnes();
    design.rightCols(p) = data.X;
    VectorXd eta = design.rightCols(p) * beta;
    eta.array() += beta0;

    MatrixXd info = MatrixXd::Zero(dim, dim);
    VectorXd curv(n);
    if (!family.is_beta()) {
        for (Index i = 0; i < n; ++i) curv(i) = family_eval(family, eta(i)).b2;
        info.topLeftCorner(p + 1, p + 1) =
            design.transpose() * curv.asDiagonal() * design / family.dispersion(phi);
        return info;
    }
    VectorXd cross(n);
    double phiphi = 0.0;
    for (Index i = 0; i < n; ++i) {
        BetaTerms t = beta_terms(eta(i), phi, data.y(i));
        double mn = t.mu * t.nu;
        double tri_a = trigamma(t.mu * phi), tri_c = trigamma(t.nu * phi);
        double resid = t.y_star - t.mu_star;
        // -d2l/deta2
        curv(i) = phi * phi * (tri_a + tri_c) * mn * mn - phi * resid * mn * (t.nu - t.mu);
        // -d2l/deta dphi
        cross(i) = -mn * (resid - phi * (t.mu * tri_a - t.nu * tri_c));
        phiphi -= trigamma(phi) - t.mu * t.mu * tri_a - t.nu * t.nu * tri_c;
    }
    info.topLeftCorner(p + 1, p + 1) = design.transpose() * curv.asDiagonal() * design;
    VectorXd off = design.transpose() * cross;
    info.block(0, p + 1, p + 1, 1) = off;
    info.block(p + 1, 0, 1, p + 1) = off.transpose();
    info(p + 1, p + 1) = phiphi;
    return info;
}

/**
 * Maximum likelihood fit with intercept by iteratively reweighted least
 * squares (Fisher scoring for beta regression, alternated with a Newton
 * update of log(phi)).
 *
 * When p >= n, or when the unpenalized iteration fails (separation,
 * divergence), the fit is repeated with a weak ridge penalty on the slopes
 * and `ridge_used` is set.
 */
inline GlmFit fit_mle(const Dataset& data, const Family& family, const FitOptions& opts = {}) {
    validate(data, family);
    const Index n = data.n(), p = data.p();
    if (n < 2) fail(ErrorKind::Data, "at least two observations are required");
    if (detail::response_degenerate(data, family))
        fail(ErrorKind::Data, "response is constant on the boundary of its domain; the MLE does not exist");

    MatrixXd design(n, p + 1);
    design.col(0).setOnes();
    design.rightCols(p) = data.X;

    auto penalized_loglik = [&](const VectorXd& coef, double phi, double ridge) {
        VectorXd eta = design * coef;
        double ll = 0.0;
        if (family.is_beta()) {
            ll = detail::beta_loglik(data.y, eta, phi);
        } else {
            for (Index i = 0; i < n; ++i) ll += data.y(i) * eta(i) - family_eval(family, eta(i)).b;
        }
        return ll - ridge * coef.tail(p).squaredNorm();
    };

    // sup-norm of the penalized log-likelihood gradient in (beta0, beta)
    auto gradient_norm = [&](const VectorXd& coef, double phi, double ridge) {
        VectorXd eta = design * coef;
        VectorXd r(n);
        for (Index i = 0; i < n; ++i) {
            if (family.is_beta()) {
                BetaTerms t = beta_terms(eta(i), phi, data.y(i));
                r(i) = phi * t.mu * t.nu * (t.y_star - t.mu_star);
            } else {
                r(i) = data.y(i) - family_eval(family, eta(i)).b1;
            }
        }
        VectorXd g = design.transpose() * r;
        g.tail(p) -= 2.0 * ridge * coef.tail(p);
        return g.cwiseAbs().maxCoeff();
    };

    auto attempt = [&](double ridge) -> GlmFit {
        VectorXd coef = VectorXd::Zero(p + 1);
        double phi = 1.0;
        GlmFit fit;
        fit.ridge_used = ridge > 0;
        fit.ridge = ridge;
        int saturated_growth = 0;
        if (family.is_beta()) phi = detail::update_phi(data.y, design * coef, phi, opts.phi_tol);
        for (int it = 1; it <= opts.max_iter; ++it) {
            VectorXd eta = design * coef;
            VectorXd w(n), z(n);
            bool saturated = false;
            bool invalid = false;
            for (Index i = 0; i < n; ++i) {
                if (family.is_beta()) {
                    BetaTerms t = beta_terms(eta(i), phi, data.y(i));
                    w(i) = t.weight;
                    z(i) = w(i) * eta(i) + t.mu * t.nu * (t.y_star - t.mu_star) / w(i);
                } else {
                    Cumulant c = family_eval(family, eta(i));
                    w(i) = std::sqrt(c.b2);
                    z(i) = w(i) * eta(i) + (data.y(i) - c.b1) / w(i);
                    if (family.kind == FamilyKind::Logistic && c.b2 < 1e-10) saturated = true;
                }
                if (!(w(i) > 0) || !std::isfinite(z(i))) invalid = true;
            }
            if (invalid) break;
            MatrixXd A = w.asDiagonal() * design;
            MatrixXd normal = A.transpose() * A;
            // ridge * ||t||^2 on the log-likelihood scale; for beta the Fisher weights
            // carry an extra 1/phi relative to the information.
            double pen = 2.0 * ridge * (family.is_beta() ? 1.0 / phi : 1.0);
            normal.diagonal().tail(p).array() += pen;
            Eigen::LDLT<MatrixXd> ldlt(normal);
            if (ldlt.info() != Eigen::Success) break;
            VectorXd target = ldlt.solve(A.transpose() * z);
            if (!target.allFinite()) break;

            VectorXd step = target - coef;
            double before = penalized_loglik(coef, phi, ridge);
            VectorXd next = target;
            double after = penalized_loglik(next, phi, ridge);
            for (int h = 0; h < 30 && !(after >= before - 1e-10 * std::abs(before)); ++h) {
                step *= 0.5;
                next = coef + step;
                after = penalized_loglik(next, phi, ridge);
            }
            double change = (next - coef).cwiseAbs().maxCoeff();
            double growth = next.tail(p).cwiseAbs().maxCoeff() - coef.tail(p).cwiseAbs().maxCoeff();
            coef = next;
            fit.iterations = it;
            saturated_growth = (saturated && growth > 0) ? saturated_growth + 1 : 0;
            bool phi_settled = true;
            if (family.is_beta()) {
                double refreshed = detail::update_phi(data.y, design * coef, phi, opts.phi_tol);
                phi_settled = std::abs(std::log(refreshed / phi)) < opts.tol;
                phi = refreshed;
            }
            if (change < opts.tol && phi_settled && gradient_norm(coef, phi, ridge) < opts.tol) {
                fit.converged = true;
                break;
            }
            if (ridge == 0.0 && saturated_growth >= 5) break;  // separation
        }
        fit.beta0 = coef(0);
        fit.beta = coef.tail(p);
        fit.phi = phi;
        fit.eta = design * coef;
        return fit;
    };

    const double ridge = opts.ridge;  // on the mean log-likelihood divided by n: ridge/n * n
    GlmFit fit;
    if (p >= n && opts.allow_ridge) {
        fit = attempt(ridge);
    } else {
        fit = attempt(0.0);
        if (!fit.converged && opts.allow_ridge) fit = attempt(ridge);
    }
    if (!fit.converged)
        throw ConvergenceError("GLM fit did not converge after " + std::to_string(opts.max_iter) +
                                   " iterations",
                               fit);
    return fit;
}

/// Fit restricted to the covariates in `model` (intercept always included).
inline GlmFit fit_submodel(const Dataset& data, const Family& family, const IndexSet& model,
                           const FitOptions& opts = {}) {
    Dataset sub{detail::columns(data.X, model), data.y, {}};
    return fit_mle(sub, family, opts);
}

/**
 * Centered pseudo-data of the converged IRLS step. Least squares of z0 on
 * U0 reproduces the GLM coefficients; u0 is the intercept direction that
 * has been projected out of both.
 */
struct LinearizedData {
    VectorXd z0;
    MatrixXd U0;
    VectorXd u0;
    double noise_scale = 1.0;

    Index n() const { return U0.rows(); }
    Index p() const { return U0.cols(); }
};

/// Pseudo-data at arbitrary parameter values. With the true parameters this
/// gives the idealized linear model used for simulation targets.
inline LinearizedData linearize_at(const Dataset& data, const Family& family, double beta0,
                                   const VectorXd& beta, double phi) {
    const Index n = data.n();
    VectorXd eta = (data.X * beta).array() + beta0;
    VectorXd w(n), z(n);
    for (Index i = 0; i < n; ++i) {
        if (family.is_beta()) {
            BetaTerms t = beta_terms(eta(i), phi, data.y(i));
            w(i) = t.weight;
            z(i) = w(i) * eta(i) + t.mu * t.nu * (t.y_star - t.mu_star) / w(i);
        } else {
            Cumulant c = family_eval(family, eta(i));
            w(i) = std::sqrt(c.b2);
            z(i) = w(i) * eta(i) + (data.y(i) - c.b1) / w(i);
        }
        if (!(w(i) > 0) || !std::isfinite(z(i))) {
            fail(ErrorKind::Numeric, "saturated fit: zero working weight at observation " +
                                         std::to_string(i + 1));
        }
    }
    LinearizedData lin;
    lin.u0 = w;
    double uu = w.squaredNorm();
    MatrixXd U = w.asDiagonal() * data.X;
    lin.z0 = z - w * (w.dot(z) / uu);
    lin.U0 = U - w * ((w.transpose() * U) / uu);
    lin.noise_scale = family.dispersion(phi);
    return lin;
}

inline LinearizedData linearize(const Dataset& data, const Family& family, const GlmFit& fit) {
    if (fit.beta.size() != data.p()) fail(ErrorKind::Config, "fit does not match the dataset");
    return linearize_at(data, family, fit.beta0, fit.beta, fit.phi);
}

/// Gram matrix of the selected columns, factorized; throws on rank deficiency.
inline Eigen::LLT<MatrixXd> factor_gram(const MatrixXd& gram_mm) {
    Eigen::LLT<MatrixXd> llt(gram_mm);
    bool ok = llt.info() == Eigen::Success;
    if (ok) {
        const auto& L = llt.matrixL();
        double dmax = 0, dmin = std::numeric_limits<double>::infinity();
        for (Index k = 0; k < gram_mm.rows(); ++k) {
            double d = L(k, k);
            dmax = std::max(dmax, d);
            dmin = std::min(dmin, d);
        }
        ok = dmin > 1e-7 * dmax;
    }
    if (!ok) fail(ErrorKind::Numeric, "selected columns of the pseudo-design are rank deficient");
    return llt;
}

/// Contrast c with c' z0 equal to the j-th least-squares coefficient on the
/// columns in `model` (j is a position within `model`).
inline VectorXd contrast(const MatrixXd& U0, const IndexSet& model, Index j) {
    if (j < 0 || j >= static_cast<Index>(model.size()))
        fail(ErrorKind::Config, "contrast position outside the model");
    MatrixXd UM = detail::columns(U0, model);
    auto llt = factor_gram(UM.transpose() * UM);
    VectorXd e = VectorXd::Unit(UM.cols(), j);
    return UM * llt.solve(e);
}

/// c'(z0 - U0 beta) / ||c||; approximately N(0, a(phi)) when model contains the truth.
inline double pivot_statistic(const LinearizedData& lin, const IndexSet& model, Index j,
                              const VectorXd& beta_true) {
    VectorXd c = contrast(lin.U0, model, j);
    return c.dot(lin.z0 - lin.U0 * beta_true) / c.norm();
}

}  // namespace pplglm
