#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

#include "pplglm/error.hpp"
#include "pplglm/family.hpp"
#include "pplglm/glm.hpp"
#include "pplglm/inference.hpp"
#include "pplglm/random.hpp"
#include "pplglm/selective.hpp"
#include "pplglm/truncnorm.hpp"

namespace pplglm {

struct Scenario {
    Family family;
    Index n = 500;
    Index p = 20;
    double beta0 = -2.0;
    IndexSet support{0, 1, 2};  ///< 0-based
    std::vector<double> beta_values{2.0, 2.0, 1.0};
    double phi = 10.0;          ///< beta regression only
    LambdaMode mode = LambdaMode::Fixed;
    double lambda_lo = 2.0;
    double lambda_hi = 12.0;
    int lambda_count = 20;
    std::vector<double> fixed_lambdas;  ///< replaces the grid in fixed mode when nonempty
    double split_frac = 0.7;
    LambdaScale scale = LambdaScale::Total;
    int replicates = 100;
    std::uint64_t seed = 1;
    double alpha = 0.05;
    std::vector<Method> methods{Method::Ppl, Method::Naive};
    IndexSet tracked{1, 3, 5};  ///< 0-based coefficients summarized individually

    static Scenario defaults(FamilyKind kind) {
        Scenario s;
        s.family = Family{kind};
        switch (kind) {
            case FamilyKind::Logistic:
                s.beta_values = {2.0, 2.0, 1.0};
                s.lambda_lo = 2.0;
                s.lambda_hi = 12.0;
                break;
            case FamilyKind::Poisson:
                s.beta_values = {1.0, 1.0, -1.0};
                s.lambda_lo = 8.0;
                s.lambda_hi = 56.0;
                break;
            case FamilyKind::Beta:
                s.beta_values = {1.0, -0.5, 0.5};
                s.lambda_lo = 2.0;
                s.lambda_hi = 10.0;
                break;
        }
        return s;
    }

    VectorXd beta_true() const {
        VectorXd b = VectorXd::Zero(p);
        for (std::size_t k = 0; k < support.size(); ++k) b(support[k]) = beta_values[k];
        return b;
    }

    std::vector<double> lambdas() const {
        if (mode == LambdaMode::Fixed && !fixed_lambdas.empty()) return fixed_lambdas;
        return lambda_grid(lambda_lo, lambda_hi, lambda_count);
    }

    void check() const {
        if (n < 4 || p < 1) fail(ErrorKind::Config, "scenario needs n >= 4 and p >= 1");
        if (support.size() != beta_values.size())
            fail(ErrorKind::Config, "support and beta values differ in length");
        for (Index j : support)
            if (j < 0 || j >= p) fail(ErrorKind::Config, "support index outside 1..p");
        for (Index j : tracked)
            if (j < 0 || j >= p) fail(ErrorKind::Config, "tracked index outside 1..p");
        if (replicates < 1) fail(ErrorKind::Config, "replicates must be positive");
        if (family.is_beta() && !(phi > 0)) fail(ErrorKind::Config, "phi must be positive");
        if (!(alpha > 0 && alpha <= 0.5)) fail(ErrorKind::Config, "alpha must lie in (0, 1/2]");
        if (methods.empty()) fail(ErrorKind::Config, "no methods requested");
        for (double v : fixed_lambdas)
            if (!(v > 0) || !std::isfinite(v)) fail(ErrorKind::Config, "lambdas must be positive");
        lambda_grid(lambda_lo, lambda_hi, lambda_count);
    }
};

/// Replicate `rep` of the scenario: iid N(0, 1) covariates and responses
/// from the family at eta = beta0 + x'beta.
inline Dataset generate_dataset(const Scenario& s, std::uint64_t rep) {
    Dataset d;
    d.X.resize(s.n, s.p);
    Philox4x32 xeng(s.seed, rep, Stream::Covariates);
    boost::random::normal_distribution<double> gauss;
    for (Index i = 0; i < s.n; ++i)
        for (Index j = 0; j < s.p; ++j) d.X(i, j) = gauss(xeng);

    VectorXd eta = (d.X * s.beta_true()).array() + s.beta0;
    d.y.resize(s.n);
    Philox4x32 yeng(s.seed, rep, Stream::Response);
    for (Index i = 0; i < s.n; ++i) {
        switch (s.family.kind) {
            case FamilyKind::Logistic:
                d.y(i) = uniform01(yeng) < logistic_sigmoid(eta(i)) ? 1.0 : 0.0;
                break;
            case FamilyKind::Poisson: {
                boost::random::poisson_distribution<long, double> pois(std::exp(eta(i)));
                d.y(i) = static_cast<double>(pois(yeng));
                break;
            }
            case FamilyKind::Beta: {
                double mu = logistic_sigmoid(eta(i));
                boost::random::gamma_distribution<double> ga(mu * s.phi), gb((1.0 - mu) * s.phi);
                double a = ga(yeng), b = gb(yeng);
                double y = a / (a + b);
                const double tiny = std::numeric_limits<double>::min();
                d.y(i) = std::clamp(y, tiny, 1.0 - std::numeric_limits<double>::epsilon() / 2);
                break;
            }
        }
    }
    return d;
}

/// Share of selected null coefficients (true value zero) whose interval
/// excludes zero; zero when the model holds no nulls. Failed entries are skipped.
inline double type_i_error(const std::vector<CoefficientInference>& rows, const VectorXd& beta_true) {
    int nulls = 0, rejected = 0;
    for (const auto& ci : rows) {
        if (!ci.ok || beta_true(ci.index) != 0.0) continue;
        ++nulls;
        if (!(ci.lo <= 0.0 && 0.0 <= ci.hi)) ++rejected;
    }
    return nulls == 0 ? 0.0 : static_cast<double>(rejected) / nulls;
}

/// Population targets of the selected coefficients: the true coefficients when
/// the model contains the true support, otherwise the least-squares projection
/// of U0 beta onto the selected columns of the pseudo-design at the truth.
inline VectorXd selection_targets(const Dataset& data, const Scenario& s, const IndexSet& model) {
    VectorXd beta = s.beta_true();
    bool covers = std::all_of(s.support.begin(), s.support.end(), [&](Index j) {
        return std::binary_search(model.begin(), model.end(), j);
    });
    VectorXd out(static_cast<Index>(model.size()));
    if (covers) {
        for (std::size_t k = 0; k < model.size(); ++k) out(static_cast<Index>(k)) = beta(model[k]);
        return out;
    }
    LinearizedData ideal = linearize_at(data, s.family, s.beta0, beta, s.phi);
    MatrixXd UM = detail::columns(ideal.U0, model);
    auto llt = factor_gram(UM.transpose() * UM);
    return llt.solve(UM.transpose() * (ideal.U0 * beta));
}

struct TrackedOutcome {
    bool selected = false;
    bool ok = false;
    double lo = 0.0, hi = 0.0;
    double target = 0.0;
    bool covered = false;
    double pivot = std::numeric_limits<double>::quiet_NaN();  ///< F(stat; target) for truncated methods
};

/// One replicate under one penalty setting and one method.
struct CellOutcome {
    enum Status { Ok, Empty, Failed } status = Ok;
    std::string error;
    int model_size = 0;
    double type1 = 0.0;
    int coef_errors = 0;
    std::vector<TrackedOutcome> tracked;
};

/// cells[setting][method]
struct ReplicateOutcome {
    std::vector<std::vector<CellOutcome>> cells;
};

inline InferenceOptions scenario_options(const Scenario& s) {
    InferenceOptions o;
    o.mode = s.mode;
    o.alpha = s.alpha;
    o.split_frac = s.split_frac;
    o.seed = s.seed;
    o.scale = s.scale;
    o.methods = s.methods;
    if (s.mode == LambdaMode::DataDriven) o.grid = s.lambdas();
    return o;
}

inline std::vector<double> scenario_settings(const Scenario& s) {
    if (s.mode == LambdaMode::DataDriven) return {std::numeric_limits<double>::quiet_NaN()};
    return s.lambdas();
}

inline ReplicateOutcome run_replicate(const Scenario& s, std::uint64_t rep) {
    const auto settings = scenario_settings(s);
    ReplicateOutcome out;
    out.cells.assign(settings.size(), std::vector<CellOutcome>(s.methods.size()));
    auto fail_all = [&](const std::string& msg) {
        for (auto& row : out.cells)
            for (auto& cell : row) {
                cell.status = CellOutcome::Failed;
                cell.error = msg;
            }
    };
    Dataset data = generate_dataset(s, rep);
    const VectorXd beta = s.beta_true();
    std::optional<Prepared> prep;
    try {
        prep.emplace(prepare(data, s.family));
    } catch (const Error& e) {
        fail_all(e.what());
        return out;
    }
    InferenceOptions opts = scenario_options(s);
    for (std::size_t li = 0; li < settings.size(); ++li) {
        if (s.mode == LambdaMode::Fixed) opts.lambda = settings[li];
        Selection sel;
        try {
            sel = choose_model(*prep, opts, rep);
        } catch (const Error& e) {
            for (auto& cell : out.cells[li]) {
                cell.status = CellOutcome::Failed;
                cell.error = e.what();
            }
            continue;
        }
        const IndexSet& model = sel.sol.active;
        VectorXd targets;
        if (!model.empty()) {
            try {
                targets = selection_targets(data, s, model);
            } catch (const Error&) {
                targets = VectorXd::Constant(static_cast<Index>(model.size()),
                                             std::numeric_limits<double>::quiet_NaN());
            }
        }
        for (std::size_t mi = 0; mi < s.methods.size(); ++mi) {
            CellOutcome& cell = out.cells[li][mi];
            cell.model_size = static_cast<int>(model.size());
            cell.tracked.assign(s.tracked.size(), TrackedOutcome{});
            if (model.empty()) {
                cell.status = CellOutcome::Empty;
                continue;
            }
            auto rows = infer(data, s.family, *prep, sel, s.methods[mi], opts);
            cell.type1 = type_i_error(rows, beta);
            for (const auto& r : rows) cell.coef_errors += !r.ok;
            for (std::size_t t = 0; t < s.tracked.size(); ++t) {
                auto pos = std::lower_bound(model.begin(), model.end(), s.tracked[t]);
                if (pos == model.end() || *pos != s.tracked[t]) continue;
                const auto k = static_cast<std::size_t>(pos - model.begin());
                const CoefficientInference& r = rows[k];
                TrackedOutcome& tr = cell.tracked[t];
                tr.selected = true;
                tr.ok = r.ok && std::isfinite(targets(static_cast<Index>(k)));
                if (!tr.ok) continue;
                tr.lo = r.lo;
                tr.hi = r.hi;
                tr.target = targets(static_cast<Index>(k));
                tr.covered = r.lo <= tr.target && tr.target <= r.hi;
                if (s.methods[mi] != Method::Naive) {
                    try {
                        TruncatedGaussian d(tr.target, r.sd * r.sd, r.support);
                        tr.pivot = d.cdf(r.estimate);
                    } catch (const Error&) {
                    }
                }
            }
        }
    }
    return out;
}

/// Worker threads for replicates: PPLGLM_THREADS when set, else 1.
inline unsigned simulation_threads() {
    if (const char* env = std::getenv("PPLGLM_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return static_cast<unsigned>(std::min<long>(v, 256));
    }
    return 1;
}

/// Runs every replicate; results are stored by replicate index, so the
/// output is identical for any thread count.
inline std::vector<ReplicateOutcome> run_all(const Scenario& s, unsigned threads = simulation_threads()) {
    s.check();
    std::vector<ReplicateOutcome> out(static_cast<std::size_t>(s.replicates));
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(s.replicates)));
    if (threads == 1) {
        for (std::size_t r = 0; r < out.size(); ++r) out[r] = run_replicate(s, r);
        return out;
    }
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t r = t; r < out.size(); r += threads) out[r] = run_replicate(s, r);
        });
    }
    for (auto& th : pool) th.join();
    return out;
}

struct TrackedSummary {
    Index index = 0;
    int selected = 0;
    int excluded = 0;   ///< replicates where the coefficient was not selected or failed
    int infinite = 0;   ///< selected replicates with an infinite endpoint
    double avg_lo = std::numeric_limits<double>::quiet_NaN();
    double avg_hi = std::numeric_limits<double>::quiet_NaN();
    double avg_width = std::numeric_limits<double>::quiet_NaN();
    double coverage = std::numeric_limits<double>::quiet_NaN();
};

struct SummaryRow {
    double lambda = 0.0;  ///< NaN for data-driven rows
    Method method = Method::Ppl;
    int replicates = 0;
    double avg_type1 = 0.0;
    double avg_model_size = 0.0;
    int empty = 0;
    int failed = 0;
    int coef_errors = 0;
    std::vector<TrackedSummary> tracked;
};

struct SummaryTable {
    Scenario scenario;
    std::vector<SummaryRow> rows;
};

inline SummaryTable summarize(const Scenario& s, const std::vector<ReplicateOutcome>& reps) {
    const auto settings = scenario_settings(s);
    SummaryTable table{s, {}};
    for (std::size_t li = 0; li < settings.size(); ++li) {
        for (std::size_t mi = 0; mi < s.methods.size(); ++mi) {
            SummaryRow row;
            row.lambda = settings[li];
            row.method = s.methods[mi];
            row.replicates = static_cast<int>(reps.size());
            double t1 = 0, size = 0;
            int counted = 0;
            std::vector<double> lo(s.tracked.size()), hi(s.tracked.size()), width(s.tracked.size());
            std::vector<int> finite(s.tracked.size()), covered(s.tracked.size());
            row.tracked.resize(s.tracked.size());
            for (const auto& rep : reps) {
                const CellOutcome& cell = rep.cells[li][mi];
                if (cell.status == CellOutcome::Failed) {
                    ++row.failed;
                    continue;
                }
                ++counted;
                if (cell.status == CellOutcome::Empty) ++row.empty;
                t1 += cell.type1;
                size += cell.model_size;
                row.coef_errors += cell.coef_errors;
                for (std::size_t t = 0; t < s.tracked.size(); ++t) {
                    const TrackedOutcome& tr = cell.tracked[t];
                    TrackedSummary& ts = row.tracked[t];
                    if (!tr.selected || !tr.ok) continue;
                    ++ts.selected;
                    covered[t] += tr.covered;
                    if (std::isfinite(tr.lo) && std::isfinite(tr.hi)) {
                        ++finite[t];
                        lo[t] += tr.lo;
                        hi[t] += tr.hi;
                        width[t] += tr.hi - tr.lo;
                    } else {
                        ++ts.infinite;
                    }
                }
            }
            if (counted > 0) {
                row.avg_type1 = t1 / counted;
                row.avg_model_size = size / counted;
            }
            for (std::size_t t = 0; t < s.tracked.size(); ++t) {
                TrackedSummary& ts = row.tracked[t];
                ts.index = s.tracked[t];
                ts.excluded = row.replicates - ts.selected;
                if (finite[t] > 0) {
                    ts.avg_lo = lo[t] / finite[t];
                    ts.avg_hi = hi[t] / finite[t];
                    ts.avg_width = width[t] / finite[t];
                }
                if (ts.selected > 0) ts.coverage = static_cast<double>(covered[t]) / ts.selected;
            }
            table.rows.push_back(std::move(row));
        }
    }
    return table;
}

inline SummaryTable run_replications(const Scenario& s) { return summarize(s, run_all(s)); }

}  // namespace pplglm
