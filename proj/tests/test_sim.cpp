#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "pplglm/io.hpp"
#include "support/oracles.hpp"

using namespace pplglm;

namespace {

CoefficientInference decision(Index j, bool rejects) {
    CoefficientInference ci;
    ci.index = j;
    ci.lo = rejects ? 0.1 : -0.1;
    ci.hi = 1.0;
    return ci;
}

}  // namespace

TEST(Generate, Deterministic) {
    Scenario s = Scenario::defaults(FamilyKind::Beta);
    Dataset a = generate_dataset(s, 3), b = generate_dataset(s, 3), c = generate_dataset(s, 4);
    EXPECT_EQ(a.X, b.X);
    EXPECT_EQ(a.y, b.y);
    EXPECT_NE(a.X, c.X);
    s.seed = 2;
    EXPECT_NE(generate_dataset(s, 3).y, a.y);
}

TEST(Generate, CovariateMoments) {
    Scenario s = Scenario::defaults(FamilyKind::Logistic);
    Dataset d = generate_dataset(s, 0);
    const double tol = 5.0 / std::sqrt(static_cast<double>(s.n));
    for (Index j = 0; j < s.p; ++j) {
        double mean = d.X.col(j).mean();
        double var = (d.X.col(j).array() - mean).square().sum() / (s.n - 1);
        EXPECT_NEAR(mean, 0.0, tol);
        EXPECT_NEAR(var, 1.0, tol);
    }
    validate(d, s.family);
}

TEST(Generate, PoissonMeanAtZero) {
    Scenario s = Scenario::defaults(FamilyKind::Poisson);
    s.n = 10000;
    s.p = 1;
    s.beta0 = 0.0;
    s.support = {};
    s.beta_values = {};
    Dataset d = generate_dataset(s, 0);
    EXPECT_NEAR(d.y.mean(), 1.0, 3e-2);
}

TEST(Generate, BetaResponsesInUnitInterval) {
    Scenario s = Scenario::defaults(FamilyKind::Beta);
    Dataset d = generate_dataset(s, 1);
    EXPECT_GT(d.y.minCoeff(), 0.0);
    EXPECT_LT(d.y.maxCoeff(), 1.0);
}

TEST(LambdaGrid, Examples) {
    auto g = lambda_grid(2, 12, 20);
    ASSERT_EQ(g.size(), 20u);
    EXPECT_EQ(g.front(), 2.0);
    EXPECT_EQ(g.back(), 12.0);
    for (std::size_t k = 2; k < g.size(); ++k) EXPECT_NEAR(g[k] / g[k - 1], g[1] / g[0], 1e-12);
    auto h = lambda_grid(1, 4, 3);
    EXPECT_NEAR(h[1], 2.0, 1e-14);
    EXPECT_THROW(lambda_grid(1, 1, 5), Error);
    EXPECT_THROW(lambda_grid(1, 2, 1), Error);
}

TEST(TypeIError, Examples) {
    VectorXd beta = VectorXd::Zero(6);
    beta(0) = beta(1) = beta(2) = 1.0;
    EXPECT_EQ(type_i_error({decision(0, true), decision(1, false), decision(2, true)}, beta), 0.0);
    EXPECT_EQ(type_i_error({decision(0, true), decision(1, true), decision(2, true), decision(3, true),
                            decision(4, false)},
                           beta),
              0.5);
    EXPECT_EQ(type_i_error({decision(3, true)}, beta), 1.0);
}

TEST(Split, SizesAndDeterminism) {
    Split a = make_split(100, 0.7, 5), b = make_split(100, 0.7, 5), c = make_split(100, 0.7, 5, 1);
    EXPECT_EQ(a.train.size(), 70u);
    EXPECT_EQ(a.validation.size(), 30u);
    EXPECT_EQ(a.train, b.train);
    EXPECT_NE(a.train, c.train);
    std::vector<Index> all = a.train;
    all.insert(all.end(), a.validation.begin(), a.validation.end());
    std::sort(all.begin(), all.end());
    for (Index i = 0; i < 100; ++i) EXPECT_EQ(all[static_cast<std::size_t>(i)], i);
    EXPECT_THROW(make_split(100, 1.0, 5), Error);
}

TEST(Targets, TrueCoefficientsWhenModelCoversSupport) {
    Scenario s = Scenario::defaults(FamilyKind::Logistic);
    Dataset d = generate_dataset(s, 0);
    VectorXd t = selection_targets(d, s, {0, 1, 2, 7});
    EXPECT_EQ(t(0), 2.0);
    EXPECT_EQ(t(2), 1.0);
    EXPECT_EQ(t(3), 0.0);
    // projected target for a model missing a true covariate
    VectorXd proj = selection_targets(d, s, {0, 1});
    LinearizedData ideal = linearize_at(d, s.family, s.beta0, s.beta_true(), s.phi);
    MatrixXd UM = detail::columns(ideal.U0, {0, 1});
    VectorXd ref = UM.householderQr().solve(ideal.U0 * s.beta_true());
    EXPECT_LT((proj - ref).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Replications, DegenerateScenarioRunsToCompletion) {
    Scenario s = Scenario::defaults(FamilyKind::Logistic);
    s.n = 20;
    s.p = 3;
    s.beta0 = 0.0;
    s.support = {};
    s.beta_values = {};
    s.tracked = {0};
    s.fixed_lambdas = {50.0};
    s.replicates = 6;
    s.methods = {Method::Ppl, Method::Polyhedral, Method::Naive};
    SummaryTable t = run_replications(s);
    ASSERT_EQ(t.rows.size(), 3u);
    for (const auto& r : t.rows) {
        EXPECT_EQ(r.replicates, 6);
        EXPECT_EQ(r.empty, 6);
        EXPECT_EQ(r.avg_type1, 0.0);
        EXPECT_EQ(r.tracked[0].excluded, 6);
    }
}

TEST(Replications, OneReplicate) {
    Scenario s = Scenario::defaults(FamilyKind::Poisson);
    s.n = 100;
    s.p = 5;
    s.tracked = {1, 3};
    s.replicates = 1;
    s.fixed_lambdas = {10.0};
    SummaryTable t = run_replications(s);
    EXPECT_EQ(t.rows.size(), s.methods.size());
}

TEST(Replications, ThreadCountDoesNotChangeResults) {
    Scenario s = Scenario::defaults(FamilyKind::Logistic);
    s.n = 150;
    s.p = 6;
    s.tracked = {1, 3};
    s.fixed_lambdas = {2.0, 4.0};
    s.replicates = 7;
    s.methods = {Method::Ppl, Method::Polyhedral, Method::Naive};
    std::ostringstream one, three;
    io::write_summary_csv(one, summarize(s, run_all(s, 1)));
    io::write_summary_csv(three, summarize(s, run_all(s, 3)));
    EXPECT_EQ(one.str(), three.str());
    std::ostringstream again;
    io::write_summary_csv(again, run_replications(s));
    EXPECT_EQ(one.str(), again.str());
}

TEST(Replications, DataDrivenRow) {
    Scenario s = Scenario::defaults(FamilyKind::Logistic);
    s.n = 150;
    s.p = 6;
    s.tracked = {1};
    s.mode = LambdaMode::DataDriven;
    s.lambda_count = 5;
    s.replicates = 3;
    SummaryTable t = run_replications(s);
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_TRUE(std::isnan(t.rows[0].lambda));
    EXPECT_EQ(t.rows[0].failed, 0);
}
