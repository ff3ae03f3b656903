#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "support/oracles.hpp"

using namespace pplglm;

namespace {

LinearizedData random_lin(std::uint64_t seed, Index n, Index p) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    LinearizedData lin;
    lin.U0.resize(n, p);
    for (Index i = 0; i < lin.U0.size(); ++i) lin.U0.data()[i] = g(rng);
    VectorXd beta = VectorXd::Zero(p);
    beta(0) = 0.7;
    beta(1) = -0.4;
    lin.z0 = lin.U0 * beta;
    for (Index i = 0; i < n; ++i) lin.z0(i) += g(rng);
    return lin;
}

// Lasso coefficients at tau embedded in R^p, from the segment covering tau.
VectorXd embed(const PathSegment& seg, double tau, Index p) {
    VectorXd out = VectorXd::Zero(p);
    VectorXd v = seg.coef_at(tau);
    for (std::size_t k = 0; k < seg.active.size(); ++k) out(seg.active[k]) = v(static_cast<Index>(k));
    return out;
}

struct PathCase {
    LinearizedData lin;
    TauParameterization par;
    double lambda;
    IndexSet model;
    TauPath path;
    double lo, hi;
};

PathCase path_case(std::uint64_t seed, Index n = 40, Index p = 5, double frac = 0.4) {
    PathCase pc;
    pc.lin = random_lin(seed, n, p);
    double crit = (pc.lin.U0.transpose() * pc.lin.z0).cwiseAbs().maxCoeff() / static_cast<double>(n);
    pc.lambda = frac * crit;
    LassoSolution sol = solve_lasso(GramProblem::from(pc.lin.U0, pc.lin.z0), pc.lambda);
    pc.model = sol.active;
    pc.par = parameterize(pc.lin, contrast(pc.lin.U0, pc.model, 0));
    double sd = pc.par.c.norm();
    pc.lo = pc.par.tau_obs - 8 * sd;
    pc.hi = pc.par.tau_obs + 8 * sd;
    pc.path = lasso_path_in_tau(pc.par, pc.lin.U0, pc.lambda, pc.lo, pc.hi);
    return pc;
}

}  // namespace

TEST(Parameterize, ResponseAlongContrast) {
    LinearizedData lin = random_lin(1, 20, 3);
    VectorXd c = lin.U0.col(0);
    lin.z0 = 2.5 * c;
    TauParameterization par = parameterize(lin, c);
    EXPECT_LT(par.q.norm(), 1e-12);
    EXPECT_NEAR(par.tau_obs, c.dot(lin.z0), 1e-12);
}

TEST(Parameterize, ResponseOrthogonalToContrast) {
    LinearizedData lin = random_lin(2, 20, 3);
    VectorXd c = lin.U0.col(0);
    lin.z0 -= c * (c.dot(lin.z0) / c.squaredNorm());
    TauParameterization par = parameterize(lin, c);
    EXPECT_NEAR(par.tau_obs, 0.0, 1e-12);
    EXPECT_LT((par.q - lin.z0).norm(), 1e-12);
}

TEST(Parameterize, Reconstruction) {
    LinearizedData lin = random_lin(3, 30, 4);
    TauParameterization par = parameterize(lin, contrast(lin.U0, {0, 2}, 1));
    EXPECT_LE((par.z_at(par.tau_obs) - lin.z0).norm(), 1e-8 * lin.z0.norm());
    EXPECT_NEAR(par.c.dot(par.q), 0.0, 1e-10);
    for (double tau : {-3.0, 0.5, 11.0}) EXPECT_NEAR(par.c.dot(par.z_at(tau)), tau, 1e-10);
    EXPECT_THROW(parameterize(lin, VectorXd::Zero(30)), Error);
}

TEST(Path, SingleVariableAnalytic) {
    const Index n = 25;
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    VectorXd u(n), w(n);
    for (Index i = 0; i < n; ++i) {
        u(i) = g(rng);
        w(i) = g(rng);
    }
    w -= u * (u.dot(w) / u.squaredNorm());
    LinearizedData lin;
    lin.U0 = u;
    lin.z0 = 0.3 * u + w;
    const double lambda = 0.2;
    TauParameterization par = parameterize(lin, u / u.squaredNorm());
    TauPath path = lasso_path_in_tau(par, lin.U0, lambda, -50.0, 50.0);
    // u' dir = ||u||^2 here, so breakpoints sit at +- n lambda / ||u||^2
    const double bp = n * lambda / u.squaredNorm();
    ASSERT_EQ(path.segments.size(), 3u);
    EXPECT_NEAR(path.segments[0].hi, -bp, 1e-10);
    EXPECT_NEAR(path.segments[2].lo, bp, 1e-10);
    EXPECT_EQ(path.segments[0].signs, std::vector<int>{-1});
    EXPECT_TRUE(path.segments[1].active.empty());
    EXPECT_TRUE(path.unbounded_below);
    EXPECT_TRUE(path.unbounded_above);
    IntervalUnion<double> pos = sign_event(path, {0}, {1});
    ASSERT_EQ(pos.size(), 1u);
    EXPECT_NEAR(pos.intervals()[0].lo, bp, 1e-10);
    EXPECT_EQ(pos.intervals()[0].hi, std::numeric_limits<double>::infinity());
    IntervalUnion<double> sel = selection_event(path, {0});
    EXPECT_EQ(sel.size(), 2u);
}

TEST(Path, ConsistentAtObservedPoint) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        PathCase pc = path_case(seed);
        for (const auto& seg : pc.path.segments) {
            if (seg.lo <= pc.par.tau_obs && pc.par.tau_obs <= seg.hi) {
                EXPECT_EQ(seg.active, pc.model);
            }
        }
        EXPECT_TRUE(selection_event(pc.path, pc.model).contains(pc.par.tau_obs, 1e-9));
    }
}

TEST(Path, TilesWindowAndIsContinuous) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        PathCase pc = path_case(seed, 40, 6, 0.2);
        const auto& segs = pc.path.segments;
        EXPECT_EQ(segs.front().lo, pc.lo);
        EXPECT_EQ(segs.back().hi, pc.hi);
        for (std::size_t k = 1; k < segs.size(); ++k) {
            EXPECT_EQ(segs[k].lo, segs[k - 1].hi);
            double t = segs[k].lo;
            VectorXd left = embed(segs[k - 1], t, 6), right = embed(segs[k], t, 6);
            EXPECT_LE((left - right).cwiseAbs().maxCoeff(), 1e-8) << "seed " << seed << " break " << k;
        }
    }
}

TEST(Path, SegmentsSatisfyKkt) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        PathCase pc = path_case(seed, 40, 5, 0.3);
        for (const auto& seg : pc.path.segments) {
            for (int probe = 1; probe <= 5; ++probe) {
                double tau = seg.lo + (seg.hi - seg.lo) * probe / 6.0;
                LassoSolution fresh = solve_lasso(GramProblem::from(pc.lin.U0, pc.par.z_at(tau)), pc.lambda);
                EXPECT_LE((fresh.beta_lambda - embed(seg, tau, 5)).cwiseAbs().maxCoeff(), 1e-6);
            }
        }
    }
}

TEST(Path, GridOracle) {
    const double tol = 1e-6;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        PathCase pc = path_case(seed);
        int checked = 0;
        for (int g = 0; g < 1000; ++g) {
            double tau = pc.lo + (pc.hi - pc.lo) * g / 999.0;
            if (oracle::near_breakpoint(pc.path, tau, tol)) continue;
            IndexSet fresh = oracle::lasso_active(pc.lin.U0, pc.par.z_at(tau), pc.lambda);
            for (const auto& seg : pc.path.segments)
                if (seg.lo < tau && tau < seg.hi) {
                    ASSERT_EQ(seg.active, fresh) << "tau " << tau;
                }
            EXPECT_EQ(selection_event(pc.path, pc.model).contains(tau), fresh == pc.model);
            ++checked;
        }
        EXPECT_GT(checked, 990);
    }
}

TEST(Path, EventsPartitionWindow) {
    PathCase pc = path_case(7, 40, 5, 0.25);
    std::map<IndexSet, IntervalUnion<double>> events;
    for (const auto& seg : pc.path.segments)
        if (!events.count(seg.active)) events[seg.active] = selection_event(pc.path, seg.active);
    double total = 0;
    for (auto it = events.begin(); it != events.end(); ++it) {
        total += it->second.measure();
        for (auto jt = std::next(it); jt != events.end(); ++jt)
            EXPECT_LT(it->second.intersect(jt->second).measure(), 1e-12);
    }
    EXPECT_NEAR(total, pc.hi - pc.lo, 1e-9 * (pc.hi - pc.lo));
}

TEST(Path, SignEventInsideSelectionEvent) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        PathCase pc = path_case(seed);
        LassoSolution sol = solve_lasso(GramProblem::from(pc.lin.U0, pc.lin.z0), pc.lambda);
        IntervalUnion<double> se = sign_event(pc.path, pc.model, sol.signs);
        IntervalUnion<double> me = selection_event(pc.path, pc.model);
        EXPECT_EQ(se.intersect(me), se);
        EXPECT_TRUE(se.contains(pc.par.tau_obs, 1e-9));
        EXPECT_TRUE(selection_event(pc.path, {0, 1, 2, 3, 4, 99}).is_empty());
    }
}

TEST(Path, WindowMustContainObservation) {
    PathCase pc = path_case(1);
    EXPECT_THROW(lasso_path_in_tau(pc.par, pc.lin.U0, pc.lambda, pc.par.tau_obs + 1, pc.par.tau_obs + 2), Error);
    EXPECT_THROW(lasso_path_in_tau(pc.par, pc.lin.U0, 0.0, pc.lo, pc.hi), Error);
}

TEST(LambdaSelection, SingleCandidateIsWholeWindow) {
    PathCase pc = path_case(2);
    Split split = make_split(40, 0.7, 9);
    auto ev = lambda_selection_event(pc.lin, pc.par.c, split, {pc.lambda}, pc.lambda, pc.lo, pc.hi);
    EXPECT_EQ(ev, IntervalUnion<double>(pc.lo, pc.hi));
}

TEST(LambdaSelection, GridOracle) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const Index n = 50;
        LinearizedData lin = random_lin(100 + seed, n, 5);
        Split split = make_split(n, 0.7, seed);
        double crit = (lin.U0.transpose() * lin.z0).cwiseAbs().maxCoeff() / static_cast<double>(n);
        std::vector<double> grid{0.1 * crit, 0.3 * crit, 0.6 * crit};
        VectorXd c = contrast(lin.U0, {0}, 0);
        TauParameterization par = parameterize(lin, c);
        double sd = c.norm();
        double lo = par.tau_obs - 6 * sd, hi = par.tau_obs + 6 * sd;

        // observed choice, by brute force
        auto choose = [&](const VectorXd& z) {
            MatrixXd Ut = detail::rows_of(lin.U0, split.train), Uv = detail::rows_of(lin.U0, split.validation);
            VectorXd zt = detail::rows_of(z, split.train), zv = detail::rows_of(z, split.validation);
            std::size_t best = 0;
            double err = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < grid.size(); ++k) {
                VectorXd b = solve_lasso(GramProblem::from(Ut, zt), grid[k]).beta_lambda;
                double e = (zv - Uv * b).squaredNorm();
                if (e < err) {
                    err = e;
                    best = k;
                }
            }
            return best;
        };
        std::size_t star = choose(lin.z0);
        auto ev = lambda_selection_event(lin, c, split, grid, grid[star], lo, hi);
        EXPECT_TRUE(ev.contains(par.tau_obs, 1e-9));

        std::vector<double> edges;
        for (const auto& iv : ev) {
            edges.push_back(iv.lo);
            edges.push_back(iv.hi);
        }
        int disagreements = 0;
        for (int g = 0; g < 2000; ++g) {
            double tau = lo + (hi - lo) * g / 1999.0;
            bool near = false;
            for (double e : edges) near = near || std::abs(e - tau) < 1e-6;
            if (near) continue;
            if (ev.contains(tau) != (choose(par.z_at(tau)) == star)) ++disagreements;
        }
        EXPECT_EQ(disagreements, 0) << "seed " << seed;
    }
}
