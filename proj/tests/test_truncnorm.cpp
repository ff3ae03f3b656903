#include <cmath>

#include <gtest/gtest.h>

#include "support/oracles.hpp"

using namespace pplglm;

namespace {
const double inf = std::numeric_limits<double>::infinity();
}

TEST(Normal, ErfcxAndTails) {
    for (double x : {0.0, 0.5, 3.0, 10.0, 24.9, 25.1, 40.0})
        EXPECT_NEAR(normal::erfcx(x) / (x < 25 ? std::exp(x * x) * std::erfc(x) : normal::erfcx(x)), 1.0, 1e-12);
    // asymptotic expansion of erfcx(x) = 1/(x sqrt(pi)) (1 - 1/(2x^2) + 3/(4x^4) ...)
    double x = 30.0;
    double series = (1 - 0.5 / (x * x) + 0.75 / std::pow(x, 4) - 1.875 / std::pow(x, 6)) / (x * std::sqrt(M_PI));
    EXPECT_NEAR(normal::erfcx(x) / series, 1.0, 1e-10);
    EXPECT_NEAR(normal::log_upper(40.0), -0.5 * 1600 - std::log(40.0 * std::sqrt(2 * M_PI)) + std::log1p(-1.0 / 1600 + 3.0 / (1600.0 * 1600)), 1e-8);
    EXPECT_NEAR(std::exp(normal::log_upper(1.0)), 0.5 * std::erfc(1.0 / std::sqrt(2.0)), 1e-15);
}

TEST(Normal, Quantile) {
    EXPECT_NEAR(normal::quantile(0.975), 1.959963984540054, 1e-12);
    for (double p : {1e-12, 0.01, 0.3, 0.5, 0.8, 1 - 1e-9}) EXPECT_NEAR(normal::cdf(normal::quantile(p)), p, 1e-12 * std::max(1.0, p / (1 - p)));
    EXPECT_THROW(normal::quantile(1.0), Error);
}

TEST(TruncatedGaussian, UntruncatedMedian) {
    TruncatedGaussian d(0, 1, IntervalUnion<double>::real_line());
    EXPECT_NEAR(d.cdf(0.0), 0.5, 1e-15);
}

TEST(TruncatedGaussian, HalfNormal) {
    TruncatedGaussian d(0, 1, IntervalUnion<double>(0, inf));
    for (double x : {0.0, 0.3, 1.0, 2.5, 6.0}) EXPECT_NEAR(d.cdf(x), 2 * oracle::std_normal_cdf(x) - 1, 1e-14);
    EXPECT_EQ(d.cdf(-1.0), 0.0);
}

TEST(TruncatedGaussian, TwoIntervalsMatchQuadrature) {
    IntervalUnion<double> s({{-2, -1}, {1, 3}});
    TruncatedGaussian d(0.5, 2.0, s);
    EXPECT_NEAR(d.cdf(1.7), oracle::truncated_cdf(1.7, 0.5, 2.0, {{-2, -1}, {1, 3}}), 1e-10);
}

TEST(TruncatedGaussian, RemoteSupport) {
    // support 40 sd above the mean: mass underflows in linear space only
    TruncatedGaussian d(0, 1, IntervalUnion<double>(40, 41));
    double ref = oracle::truncated_cdf(40.01, 0, 1, {{40, 41}});
    EXPECT_NEAR(d.cdf(40.01), ref, 1e-10);
    EXPECT_NEAR(d.cdf(40.01) + d.sf(40.01), 1.0, 1e-13);
    // 1e5 sd out is still representable in log space
    TruncatedGaussian far(0, 1, IntervalUnion<double>(1e5, 1e5 + 1));
    const double x = 1e5 + 1e-6, step = x - 1e5;  // step is exact
    EXPECT_NEAR(far.cdf(x), -std::expm1(-step * (1e5 + 0.5 * step)), 1e-9);
    EXPECT_THROW(TruncatedGaussian(0, 1, IntervalUnion<double>(1e160, 2e160)), Error);
    EXPECT_THROW(TruncatedGaussian(0, 1, IntervalUnion<double>()), Error);
}

TEST(TruncatedGaussian, MonotoneInXAndMu) {
    IntervalUnion<double> s({{-3, -0.5}, {0.2, 0.9}, {2, inf}});
    double prev = -1;
    for (double x = -4; x <= 6; x += 0.05) {
        double f = TruncatedGaussian(0.3, 1.5, s).cdf(x);
        EXPECT_GE(f, prev - 1e-15);
        prev = f;
    }
    prev = 2;
    for (double mu = -8; mu <= 8; mu += 0.1) {
        double f = TruncatedGaussian(mu, 1.5, s).cdf(0.5);
        EXPECT_LE(f, prev + 1e-15);
        prev = f;
    }
    EXPECT_GT(TruncatedGaussian(-30, 1.5, s).cdf(0.5), 1 - 1e-9);
    EXPECT_LT(TruncatedGaussian(30, 1.5, s).cdf(0.5), 1e-9);
}

TEST(PValue, Untruncated) {
    auto line = IntervalUnion<double>::real_line();
    EXPECT_NEAR(p_value(0.0, 1.0, line), 1.0, 1e-15);
    EXPECT_NEAR(p_value(1.959964 * 2.0, 4.0, line), 0.05, 1e-6);
}

TEST(PValue, TwoIntervalsMatchQuadrature) {
    std::vector<std::pair<double, double>> pieces{{-4, -1.2}, {0.7, 2.5}};
    IntervalUnion<double> s({{-4, -1.2}, {0.7, 2.5}});
    for (double stat : {-3.0, -1.5, 1.0, 2.2}) {
        double f = oracle::truncated_cdf(stat, 0.0, 1.3, pieces);
        EXPECT_NEAR(p_value(stat, 1.3, s), 2 * std::min(f, 1 - f), 1e-8);
    }
    EXPECT_THROW(p_value(0.0, 1.3, s), Error);
}

TEST(ConfidenceInterval, Untruncated) {
    auto ci = confidence_interval(1.0, 4.0, IntervalUnion<double>::real_line(), 0.05);
    EXPECT_NEAR(ci.lo, 1.0 - 1.959963984540054 * 2, 1e-8);
    EXPECT_NEAR(ci.hi, 1.0 + 1.959963984540054 * 2, 1e-8);
}

TEST(ConfidenceInterval, HalfLevel) {
    IntervalUnion<double> s({{-1, 0.5}, {1, 4}});
    auto ci = confidence_interval(1.2, 1.0, s, 0.5);
    EXPECT_LT(ci.lo, ci.hi);
    EXPECT_NEAR(TruncatedGaussian(ci.lo, 1.0, s).cdf(1.2), 0.75, 1e-8);
    EXPECT_NEAR(TruncatedGaussian(ci.hi, 1.0, s).cdf(1.2), 0.25, 1e-8);
    double f_mid = TruncatedGaussian(0.5 * (ci.lo + ci.hi), 1.0, s).cdf(1.2);
    EXPECT_GT(f_mid, 0.25);
    EXPECT_LT(f_mid, 0.75);
}

TEST(ConfidenceInterval, GridInversion) {
    IntervalUnion<double> s({{-2.5, -0.4}, {0.3, 1.1}});
    const double stat = 0.9, var = 0.8, alpha = 0.1;
    auto ci = confidence_interval(stat, var, s, alpha);
    auto inside = [&](double mu) {
        double f = oracle::truncated_cdf(stat, mu, var, {{-2.5, -0.4}, {0.3, 1.1}});
        return alpha / 2 <= f && f <= 1 - alpha / 2;
    };
    // coarse 1e-2 scan of the acceptance set, then 1e-4 steps across each edge
    double lo = inf, hi = -inf;
    for (double mu = -30; mu <= 30; mu += 1e-2) {
        if (inside(mu)) {
            lo = std::min(lo, mu);
            hi = std::max(hi, mu);
        }
    }
    ASSERT_TRUE(std::isfinite(lo) && std::isfinite(hi));
    for (double mu = lo - 1e-2; mu < lo; mu += 1e-4)
        if (inside(mu)) {
            lo = mu;
            break;
        }
    for (double mu = hi + 1e-2; mu > hi; mu -= 1e-4)
        if (inside(mu)) {
            hi = mu;
            break;
        }
    EXPECT_NEAR(ci.lo, lo, 1e-3);
    EXPECT_NEAR(ci.hi, hi, 1e-3);
}

TEST(ConfidenceInterval, UnboundedEndpoint) {
    // a statistic at the very edge of a one-sided support gives an infinite endpoint
    IntervalUnion<double> s(0.0, inf);
    std::vector<std::string> notes;
    auto ci = confidence_interval(1e-5, 1.0, s, 0.05, &notes);
    EXPECT_EQ(ci.lo, -inf);
    EXPECT_TRUE(std::isfinite(ci.hi));
    EXPECT_FALSE(notes.empty());
    EXPECT_THROW(confidence_interval(1.0, 1.0, s, 0.7), Error);
}
