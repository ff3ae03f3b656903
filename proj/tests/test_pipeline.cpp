#include <cmath>

#include <gtest/gtest.h>

#include "pplglm/io.hpp"
#include "support/oracles.hpp"

using namespace pplglm;

namespace {

Dataset scenario_data(FamilyKind kind, std::uint64_t rep, Index n = 200, Index p = 6) {
    Scenario s = Scenario::defaults(kind);
    s.n = n;
    s.p = p;
    return generate_dataset(s, rep);
}

InferenceOptions all_methods(LambdaMode mode, double lambda) {
    InferenceOptions o;
    o.mode = mode;
    o.lambda = lambda;
    o.methods = {Method::Ppl, Method::Polyhedral, Method::Naive};
    return o;
}

}  // namespace

TEST(Pipeline, ReportIsDeterministic) {
    Dataset d = scenario_data(FamilyKind::Poisson, 1);
    InferenceOptions o = all_methods(LambdaMode::DataDriven, 0);
    std::string a = io::report_json(run_inference(d, Family::poisson(), o)).dump();
    std::string b = io::report_json(run_inference(d, Family::poisson(), o)).dump();
    EXPECT_EQ(a, b);
}

TEST(Pipeline, MethodsShareTheSelectedModel) {
    for (FamilyKind kind : {FamilyKind::Logistic, FamilyKind::Poisson, FamilyKind::Beta}) {
        Family f{kind};
        Dataset d = scenario_data(kind, 2);
        InferenceReport rep = run_inference(d, f, all_methods(LambdaMode::Fixed, 3.0));
        ASSERT_FALSE(rep.model.empty());
        ASSERT_EQ(rep.coefficients.size(), 3 * rep.model.size());
        for (std::size_t m = 0; m < 3; ++m)
            for (std::size_t k = 0; k < rep.model.size(); ++k) {
                const auto& ci = rep.coefficients[m * rep.model.size() + k];
                EXPECT_EQ(ci.index, rep.model[k]);
                EXPECT_EQ(ci.name, d.column_name(rep.model[k]));
                ASSERT_TRUE(ci.ok) << ci.error;
                EXPECT_LE(ci.lo, ci.estimate);
                EXPECT_GE(ci.hi, ci.estimate);
                EXPECT_GE(ci.p_value, 0.0);
                EXPECT_LE(ci.p_value, 1.0);
            }
        // the two selective methods report the same linearized estimate
        for (std::size_t k = 0; k < rep.model.size(); ++k)
            EXPECT_DOUBLE_EQ(rep.coefficients[k].estimate, rep.coefficients[rep.model.size() + k].estimate);
    }
}

TEST(Pipeline, DataDrivenEventContainsObservation) {
    for (FamilyKind kind : {FamilyKind::Logistic, FamilyKind::Poisson, FamilyKind::Beta}) {
        Family f{kind};
        Dataset d = scenario_data(kind, 3);
        InferenceOptions o = all_methods(LambdaMode::DataDriven, 0);
        Prepared prep = prepare(d, f);
        Selection sel = choose_model(prep, o);
        ASSERT_TRUE(sel.penalty.has_value());
        ASSERT_EQ(sel.grid.size(), 20u);
        EXPECT_EQ(sel.lambda, sel.grid[sel.penalty->chosen]);
        if (sel.sol.active.empty()) continue;
        for (Index j = 0; j < static_cast<Index>(sel.sol.active.size()); ++j) {
            ContrastLine line = contrast_line(prep.prob, sel.sol.active, j);
            EventResult ev = model_event(line, sel.sol, sel.sol.active, nullptr, prep.prob.lin.noise_scale);
            IntervalUnion<double> pen = penalty_event(*sel.penalty, prep.prob.lin, line, ev.s_lo, ev.s_hi);
            EXPECT_TRUE(ev.support.contains(line.tau_obs, 1e-9));
            EXPECT_TRUE(pen.contains(line.tau_obs, 1e-9));
            CoefficientInference ci = ppl_coefficient(prep.prob, sel.sol, sel.sol.active, j, 0.05, &*sel.penalty);
            EXPECT_EQ(ci.support, ev.support.intersect(pen));
        }
    }
}

TEST(Pipeline, EmptyModelIsReported) {
    Dataset d = scenario_data(FamilyKind::Logistic, 4);
    try {
        run_inference(d, Family::logistic(), all_methods(LambdaMode::Fixed, 1e4));
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EmptyModel);
        EXPECT_EQ(exit_code(e.kind()), 4);
    }
}

TEST(Pipeline, NaiveMatchesSubmodelFit) {
    Dataset d = scenario_data(FamilyKind::Logistic, 5);
    InferenceOptions o = all_methods(LambdaMode::Fixed, 4.0);
    o.methods = {Method::Naive};
    InferenceReport rep = run_inference(d, Family::logistic(), o);
    Dataset sub{detail::columns(d.X, rep.model), d.y, {}};
    GlmFit fit = fit_mle(sub, Family::logistic());
    for (std::size_t k = 0; k < rep.model.size(); ++k)
        EXPECT_NEAR(rep.coefficients[k].estimate, fit.beta(static_cast<Index>(k)), 1e-10);
}
