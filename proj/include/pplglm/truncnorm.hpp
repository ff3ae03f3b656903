#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "pplglm/error.hpp"
#include "pplglm/interval_union.hpp"

namespace pplglm {

namespace normal {

inline constexpr double inv_sqrt2 = 0.70710678118654752440;
inline constexpr double inv_sqrtpi = 0.56418958354775628695;

/// exp(x^2) erfc(x) for x >= 0.
inline double erfcx(double x) {
    if (x < 25.0) return std::exp(x * x) * std::erfc(x);
    // continued fraction, converges quickly for large x
    double f = x;
    for (int k = 60; k >= 1; --k) f = x + (k * 0.5) / f;
    return inv_sqrtpi / f;
}

/// log of the upper tail Q(x) = P(Z > x).
inline double log_upper(double x) {
    if (x == std::numeric_limits<double>::infinity()) return -std::numeric_limits<double>::infinity();
    if (x == -std::numeric_limits<double>::infinity()) return 0.0;
    if (x >= 0) return std::log(0.5 * erfcx(x * inv_sqrt2)) - 0.5 * x * x;
    return std::log1p(-0.5 * std::erfc(-x * inv_sqrt2));
}

/// log(exp(a) - exp(b)) for a >= b.
inline double log_diff(double a, double b) {
    if (b == -std::numeric_limits<double>::infinity()) return a;
    if (!(a > b)) return -std::numeric_limits<double>::infinity();
    return a + std::log(-std::expm1(b - a));
}

inline double log_add(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    double m = std::max(a, b);
    return m + std::log1p(std::exp(std::min(a, b) - m));
}

/**
 * log P(a < Z < b) + s^2/2 for a standard normal Z. The difference is formed
 * on the tail that keeps both terms small, so intervals far beyond the mean
 * keep full relative precision. A nonzero anchor s requires a and b on one
 * side of zero with s <= min(|a|, |b|); the Gaussian factor exp(-s^2/2) is
 * then removed exactly, which keeps ratios of remote masses accurate.
 */
inline double log_mass(double a, double b, double s = 0.0) {
    if (!(a < b)) return -std::numeric_limits<double>::infinity();
    // both endpoints on one side: log Q(lo) + log(1 - Q(hi)/Q(lo)) with the
    // ratio formed from erfcx so the Gaussian factors cancel exactly
    auto one_side = [s](double lo, double hi) {
        double head = s == 0.0 ? log_upper(lo)
                               : std::log(0.5 * erfcx(lo * inv_sqrt2)) - 0.5 * (lo - s) * (lo + s);
        if (hi == std::numeric_limits<double>::infinity()) return head;
        double delta = -0.5 * (hi - lo) * (hi + lo) +
                       std::log(erfcx(hi * inv_sqrt2) / erfcx(lo * inv_sqrt2));
        return head + std::log(-std::expm1(delta));
    };
    if (a >= 0) return one_side(a, b);
    if (b <= 0) return one_side(-b, -a);
    return log_add(one_side(0.0, b), one_side(0.0, -a));
}

inline double cdf(double x) { return 0.5 * std::erfc(-x * inv_sqrt2); }

/// Standard normal quantile by Newton refinement of the Acklam rational start.
inline double quantile(double p) {
    if (!(p > 0 && p < 1)) fail(ErrorKind::Config, "normal quantile needs p in (0, 1)");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                               1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                               6.680131188771972e+01, -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                               -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                               3.754408661907416e+00};
    double x;
    if (p < 0.02425) {
        double q = std::sqrt(-2 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    } else if (p > 1 - 0.02425) {
        double q = std::sqrt(-2 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    } else {
        double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
    }
    for (int it = 0; it < 3; ++it) {
        double err = cdf(x) - p;
        double dens = std::exp(-0.5 * x * x) * inv_sqrtpi * inv_sqrt2;
        x -= err / dens;
    }
    return x;
}

}  // namespace normal

/// Normal(mu, var) restricted to a nonempty union of intervals.
class TruncatedGaussian {
public:
    TruncatedGaussian(double mu, double var, IntervalUnion<double> support)
        : mu_(mu), sd_(std::sqrt(var)), support_(std::move(support)) {
        if (!(var > 0) || !std::isfinite(var)) fail(ErrorKind::Numeric, "variance must be positive");
        if (support_.is_empty()) fail(ErrorKind::Numeric, "truncation support is empty");
        const auto hull = support_.hull();
        if (z(hull.lo) > 0)
            anchor_ = z(hull.lo);
        else if (z(hull.hi) < 0)
            anchor_ = -z(hull.hi);
        log_total_ = relative_below(std::numeric_limits<double>::infinity());
        if (!std::isfinite(log_total_ - 0.5 * anchor_ * anchor_))
            fail(ErrorKind::Numeric, "support too remote: truncated mass underflows");
    }

    double mu() const { return mu_; }
    double sd() const { return sd_; }
    const IntervalUnion<double>& support() const { return support_; }

    double cdf(double x) const { return std::exp(log_cdf(x)); }

    /// 1 - cdf(x), computed from the upper pieces directly.
    double sf(double x) const { return std::exp(log_sf(x)); }

    double log_cdf(double x) const { return relative_below(x) - log_total_; }
    double log_sf(double x) const { return relative_above(x) - log_total_; }

    double log_mass_below(double x) const { return relative_below(x) - 0.5 * anchor_ * anchor_; }
    double log_mass_above(double x) const { return relative_above(x) - 0.5 * anchor_ * anchor_; }

private:
    double z(double x) const { return (x - mu_) / sd_; }

    // log masses scaled by exp(anchor^2 / 2)
    double relative_below(double x) const {
        double acc = -std::numeric_limits<double>::infinity();
        for (const auto& iv : support_) {
            if (iv.lo >= x) break;
            acc = normal::log_add(acc, normal::log_mass(z(iv.lo), z(std::min(iv.hi, x)), anchor_));
        }
        return acc;
    }

    double relative_above(double x) const {
        double acc = -std::numeric_limits<double>::infinity();
        for (const auto& iv : support_) {
            if (iv.hi <= x) continue;
            acc = normal::log_add(acc, normal::log_mass(z(std::max(iv.lo, x)), z(iv.hi), anchor_));
        }
        return acc;
    }

    double mu_;
    double sd_;
    IntervalUnion<double> support_;
    double anchor_ = 0.0;  ///< distance in sd from mu to the support when it lies on one side
    double log_total_;
};

inline double cdf(double x, const TruncatedGaussian& d) { return d.cdf(x); }

namespace detail {

// Moves stat inside the support when it sits on (or numerically just outside)
// a boundary; throws when it is clearly outside.
inline double interior_statistic(double stat, double sd, const IntervalUnion<double>& support,
                                 std::vector<std::string>* notes) {
    const double nudge = 1e-8 * sd;
    const double reject = 1e-6 * sd;
    auto idx = support.find(stat, reject);
    if (idx < 0) {
        fail(ErrorKind::Numeric,
             "observed statistic lies outside its selection event (inconsistent event)");
    }
    const auto& iv = support.intervals()[static_cast<std::size_t>(idx)];
    double lo = iv.lo, hi = iv.hi;
    double moved = stat;
    if (hi - lo <= 2 * nudge) {
        moved = 0.5 * (lo + hi);
    } else if (stat < lo + nudge) {
        moved = lo + nudge;
    } else if (stat > hi - nudge) {
        moved = hi - nudge;
    }
    if (moved != stat && notes) notes->push_back("statistic nudged off a truncation boundary");
    return moved;
}

}  // namespace detail

/// Two-sided selective p-value for H0: mean = 0.
inline double p_value(double stat, double var, const IntervalUnion<double>& support,
                      std::vector<std::string>* notes = nullptr) {
    double sd = std::sqrt(var);
    double x = detail::interior_statistic(stat, sd, support, notes);
    TruncatedGaussian null_dist(0.0, var, support);
    double lower = null_dist.cdf(x);
    double upper = null_dist.sf(x);
    return std::clamp(2.0 * std::min(lower, upper), 0.0, 1.0);
}

struct ConfidenceInterval {
    double lo;
    double hi;
};

/**
 * { mu : alpha/2 <= F(stat; mu, var) <= 1 - alpha/2 }, where F is the
 * truncated normal CDF. F decreases in mu, so each endpoint is found by
 * bisection after a doubling bracket search; a bracket that is not found
 * within 1e4 standard deviations gives an infinite endpoint.
 */
inline ConfidenceInterval confidence_interval(double stat, double var,
                                              const IntervalUnion<double>& support, double alpha,
                                              std::vector<std::string>* notes = nullptr) {
    if (!(alpha > 0 && alpha <= 0.5)) fail(ErrorKind::Config, "alpha must lie in (0, 1/2]");
    const double sd = std::sqrt(var);
    const double x = detail::interior_statistic(stat, sd, support, notes);
    const double inf = std::numeric_limits<double>::infinity();

    // log F and log(1 - F) at mean mu, compared against the target on the
    // smaller side to keep precision in both tails.
    auto excess = [&](double mu, double target) {
        TruncatedGaussian d(mu, var, support);
        // F - target, evaluated as a sign-preserving difference
        if (target <= 0.5) return d.log_cdf(x) - std::log(target);
        return std::log1p(-target) - d.log_sf(x);
    };

    auto solve = [&](double target) -> double {
        // find mu with F(mu) = target; F decreasing in mu
        double f0 = excess(x, target);
        if (f0 == 0.0) return x;
        double direction = f0 > 0 ? 1.0 : -1.0;  // F too large -> increase mu
        double near = x, far = x;
        double step = sd;
        bool bracketed = false;
        while (step <= 1e4 * sd * 1.0000001) {
            far = x + direction * step;
            double f = excess(far, target);
            if ((f > 0) != (f0 > 0) || f == 0.0) {
                bracketed = true;
                break;
            }
            near = far;
            step *= 2.0;
        }
        if (!bracketed) {
            if (notes) notes->push_back("confidence bound not bracketed within 1e4 sd; reported infinite");
            return direction * inf;
        }
        double a = near, b = far;
        while (std::abs(b - a) > 1e-8 * sd) {
            double mid = 0.5 * (a + b);
            double f = excess(mid, target);
            if ((f > 0) == (f0 > 0))
                a = mid;
            else
                b = mid;
        }
        return 0.5 * (a + b);
    };

    ConfidenceInterval ci{solve(1.0 - alpha / 2.0), solve(alpha / 2.0)};
    return ci;
}

}  // namespace pplglm
