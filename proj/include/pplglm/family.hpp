#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "pplglm/error.hpp"

namespace pplglm {

enum class FamilyKind { Logistic, Poisson, Beta };

/// Response family. Beta regression carries its precision phi as a model
/// parameter estimated jointly with the coefficients.
struct Family {
    FamilyKind kind = FamilyKind::Logistic;

    static Family logistic() { return {FamilyKind::Logistic}; }
    static Family poisson() { return {FamilyKind::Poisson}; }
    static Family beta() { return {FamilyKind::Beta}; }

    bool is_beta() const { return kind == FamilyKind::Beta; }

    /// Variance unit a(phi): 1 for logistic and Poisson, 1/phi for beta.
    double dispersion(double phi) const {
        if (kind != FamilyKind::Beta) return 1.0;
        if (!(phi > 0)) fail(ErrorKind::Numeric, "beta precision must be positive");
        return 1.0 / phi;
    }

    bool operator==(const Family&) const = default;
};

inline std::string_view to_string(FamilyKind kind) {
    switch (kind) {
        case FamilyKind::Logistic: return "logistic";
        case FamilyKind::Poisson: return "poisson";
        case FamilyKind::Beta: return "beta";
    }
    return "unknown";
}

inline Family parse_family(std::string_view name) {
    if (name == "logistic" || name == "binomial") return Family::logistic();
    if (name == "poisson") return Family::poisson();
    if (name == "beta") return Family::beta();
    fail(ErrorKind::Config, "unknown family '" + std::string(name) + "'");
}

/// Cumulant b(eta) and its first two derivatives.
struct Cumulant {
    double b;
    double b1;
    double b2;
};

inline double logistic_sigmoid(double eta) {
    if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
    double e = std::exp(eta);
    return e / (1.0 + e);
}

/// Cumulant evaluation for the canonical families. Beta regression is not a
/// canonical GLM; use beta_terms() for it.
inline Cumulant family_eval(const Family& family, double eta) {
    if (!std::isfinite(eta)) fail(ErrorKind::Numeric, "non-finite linear predictor");
    switch (family.kind) {
        case FamilyKind::Logistic: {
            double b = eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
            double p = logistic_sigmoid(eta);
            double q = logistic_sigmoid(-eta);
            return {b, p, p * q};
        }
        case FamilyKind::Poisson: {
            double e = std::exp(eta);
            return {e, e, e};
        }
        case FamilyKind::Beta:
            break;
    }
    fail(ErrorKind::Config, "family_eval is undefined for beta regression; use beta_terms");
}

/// Per-observation quantities of beta regression with logit mean link.
struct BetaTerms {
    double mu;       ///< mean
    double nu;       ///< 1 - mean
    double weight;   ///< sqrt(phi) mu nu sqrt(trigamma(mu phi) + trigamma(nu phi))
    double y_star;   ///< log(y / (1 - y))
    double mu_star;  ///< digamma(mu phi) - digamma(nu phi), the mean of y_star
};

inline BetaTerms beta_terms(double eta, double phi, double y) {
    if (!std::isfinite(eta)) fail(ErrorKind::Numeric, "non-finite linear predictor");
    BetaTerms t{};
    t.mu = logistic_sigmoid(eta);
    t.nu = logistic_sigmoid(-eta);
    double a = t.mu * phi;
    double c = t.nu * phi;
    t.weight = std::sqrt(phi) * t.mu * t.nu *
               std::sqrt(boost::math::trigamma(a) + boost::math::trigamma(c));
    t.y_star = std::log(y) - std::log1p(-y);
    t.mu_star = boost::math::digamma(a) - boost::math::digamma(c);
    return t;
}

/// Log density of Beta(mu phi, nu phi) at y.
inline double beta_log_density(double y, double mu, double phi) {
    double a = mu * phi;
    double c = (1.0 - mu) * phi;
    return std::lgamma(phi) - std::lgamma(a) - std::lgamma(c) + (a - 1.0) * std::log(y) +
           (c - 1.0) * std::log1p(-y);
}

}  // namespace pplglm
