#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pplglm/error.hpp"
#include "pplglm/glm.hpp"
#include "pplglm/interval_union.hpp"
#include "pplglm/lasso.hpp"

namespace pplglm {

/// Pseudo-response moved along the contrast direction:
/// z0(tau) = q + tau * dir, with c' z0(tau) = tau.
struct TauParameterization {
    VectorXd q;
    VectorXd dir;
    VectorXd c;
    double tau_obs = 0.0;

    VectorXd z_at(double tau) const { return q + tau * dir; }
};

inline TauParameterization parameterize(const LinearizedData& lin, const VectorXd& c) {
    double cc = c.squaredNorm();
    if (!(cc > 0) || !std::isfinite(cc)) fail(ErrorKind::Numeric, "contrast vector is zero");
    TauParameterization par;
    par.c = c;
    par.tau_obs = c.dot(lin.z0);
    par.dir = c / cc;
    par.q = lin.z0 - par.dir * par.tau_obs;
    return par;
}

/// One piece of the lasso path: constant active set and signs on [lo, hi],
/// coefficients affine in tau as value + slope * (tau - anchor).
struct PathSegment {
    double lo = 0.0;
    double hi = 0.0;
    IndexSet active;
    std::vector<int> signs;
    VectorXd value;
    VectorXd slope;
    double anchor = 0.0;

    VectorXd coef_at(double tau) const { return value + slope * (tau - anchor); }
};

/// Segments tiling a window; the open flags say the first/last state
/// persists to -inf/+inf because no breakpoint exists beyond the window.
struct TauPath {
    std::vector<PathSegment> segments;
    bool unbounded_below = false;
    bool unbounded_above = false;
    std::vector<std::string> diagnostics;
};

/**
 * Lasso restricted to a line of responses z(s) = z_ref + s * dir, reduced to
 * Gram quantities: gram = U'U, a = U'z_ref, d = U'dir. Path computations are
 * O(p^3) per breakpoint and never touch the n-dimensional data.
 */
struct LineSystem {
    MatrixXd gram;
    VectorXd a;
    VectorXd d;
    double zz = 0.0;  ///< z_ref' z_ref, needed only for the coordinate-descent objective
    Index rows = 0;

    GramProblem at(double s, double dd, double zd) const {
        return {gram, a + s * d, zz + 2.0 * s * zd + s * s * dd, rows};
    }
};

struct PathOptions {
    double tie_tol = 1e-9;
    int max_events = 100000;
};

namespace detail {

struct RawSegment {
    double lo, hi;
    IndexSet active;
    std::vector<int> signs;
    VectorXd alpha0;  // coefficients at s = 0
    VectorXd alpha1;  // slope in s
};

inline void affine_coefficients(const LineSystem& sys, double bound, const IndexSet& active,
                                const std::vector<int>& signs, VectorXd& alpha0,
                                VectorXd& alpha1) {
    const Index k = static_cast<Index>(active.size());
    alpha0.resize(k);
    alpha1.resize(k);
    if (k == 0) return;
    MatrixXd gaa(k, k);
    VectorXd rhs0(k), rhs1(k);
    for (Index r = 0; r < k; ++r) {
        for (Index c = 0; c < k; ++c) gaa(r, c) = sys.gram(active[r], active[c]);
        rhs0(r) = sys.a(active[r]) - bound * signs[static_cast<std::size_t>(r)];
        rhs1(r) = sys.d(active[r]);
    }
    auto llt = factor_gram(gaa);
    alpha0 = llt.solve(rhs0);
    alpha1 = llt.solve(rhs1);
}

// Follows the path for s increasing from 0 to s_end starting at (active, signs).
// Sets `open_end` when no further breakpoint exists beyond s_end.
inline std::vector<RawSegment> trace_up(const LineSystem& sys, double lambda, double s_end,
                                        IndexSet active, std::vector<int> signs,
                                        const PathOptions& opts, bool& open_end,
                                        std::vector<std::string>& diagnostics) {
    const Index p = sys.gram.rows();
    const double bound = static_cast<double>(sys.rows) * lambda;
    std::vector<RawSegment> out;
    double s = 0.0;
    Index last_changed = -1;
    int stalled = 0;
    std::set<std::pair<IndexSet, std::vector<int>>> seen_here;
    open_end = false;

    for (int event = 0; event < opts.max_events; ++event) {
        VectorXd alpha0, alpha1;
        affine_coefficients(sys, bound, active, signs, alpha0, alpha1);

        std::vector<char> in_model(static_cast<std::size_t>(p), 0);
        for (Index j : active) in_model[static_cast<std::size_t>(j)] = 1;

        // correlations of inactive columns: rho0 + rho1 * s
        VectorXd rho0 = sys.a, rho1 = sys.d;
        for (std::size_t k = 0; k < active.size(); ++k) {
            rho0.noalias() -= sys.gram.col(active[k]) * alpha0(static_cast<Index>(k));
            rho1.noalias() -= sys.gram.col(active[k]) * alpha1(static_cast<Index>(k));
        }

        struct Candidate {
            double t;
            Index j;
            int sign;  // sign for an entering column, 0 for a leaving one
        };
        std::vector<Candidate> cands;
        auto consider = [&](double t, Index j, int sgn) {
            if (std::isnan(t)) return;
            if (j == last_changed && t <= s + opts.tie_tol) return;
            cands.push_back({std::max(t, s), j, sgn});
        };
        for (std::size_t k = 0; k < active.size(); ++k) {
            double a0 = alpha0(static_cast<Index>(k)), a1 = alpha1(static_cast<Index>(k));
            if (signs[k] * a1 < 0) consider(-a0 / a1, active[k], 0);
        }
        for (Index j = 0; j < p; ++j) {
            if (in_model[static_cast<std::size_t>(j)]) continue;
            double r0 = rho0(j), r1 = rho1(j);
            if (r1 > 0)
                consider((bound - r0) / r1, j, +1);
            else if (r1 < 0)
                consider((-bound - r0) / r1, j, -1);
        }
        double best = std::numeric_limits<double>::infinity();
        for (const auto& cd : cands) best = std::min(best, cd.t);
        Index best_j = -1;
        int best_sign = 0;
        if (std::isfinite(best)) {
            // coincident breakpoints: smallest column index first
            for (const auto& cd : cands) {
                if (cd.t <= best + opts.tie_tol && (best_j < 0 || cd.j < best_j)) {
                    best_j = cd.j;
                    best_sign = cd.sign;
                }
            }
            if (best_j >= 0 && cands.size() > 1) {
                int coincident = 0;
                for (const auto& cd : cands) coincident += cd.t <= best + opts.tie_tol;
                if (coincident > 1) diagnostics.push_back("coincident breakpoints near s=" + std::to_string(best));
            }
        }

        if (best >= s_end) {
            out.push_back({s, s_end, active, signs, alpha0, alpha1});
            open_end = !std::isfinite(best);
            return out;
        }
        if (best > s) {
            out.push_back({s, best, active, signs, alpha0, alpha1});
            s = best;
            seen_here.clear();
            stalled = 0;
        } else if (++stalled > 4 * static_cast<int>(p) + 8) {
            fail(ErrorKind::Numeric, "lasso path cycling detected at a breakpoint");
        }
        if (!seen_here.insert({active, signs}).second)
            fail(ErrorKind::Numeric, "lasso path revisited an active set at one breakpoint");

        auto pos = std::find(active.begin(), active.end(), best_j);
        if (pos != active.end()) {
            signs.erase(signs.begin() + (pos - active.begin()));
            active.erase(pos);
        } else {
            auto at = std::lower_bound(active.begin(), active.end(), best_j);
            signs.insert(signs.begin() + (at - active.begin()), best_sign);
            active.insert(at, best_j);
        }
        last_changed = best_j;
    }
    diagnostics.push_back("path event limit reached");
    fail(ErrorKind::Numeric, "lasso path exceeded the event limit");
}

}  // namespace detail

/**
 * Piecewise-affine lasso solution over s in [s_lo, s_hi] (s_lo <= 0 <= s_hi)
 * for the line system, starting from the solution at s = 0. Segments are
 * returned in s coordinates with anchor 0.
 */
inline TauPath trace_line(const LineSystem& sys, double lambda, double s_lo, double s_hi,
                          const LassoSolution& at_origin, const PathOptions& opts = {}) {
    if (!(s_lo <= 0.0 && 0.0 <= s_hi)) fail(ErrorKind::Config, "window must contain the observed point");
    TauPath path;
    bool open_up = false, open_down = false;
    auto up = detail::trace_up(sys, lambda, s_hi, at_origin.active, at_origin.signs, opts, open_up,
                               path.diagnostics);
    LineSystem mirrored = sys;
    mirrored.d = -sys.d;
    auto down = detail::trace_up(mirrored, lambda, -s_lo, at_origin.active, at_origin.signs, opts,
                                 open_down, path.diagnostics);

    for (auto it = down.rbegin(); it != down.rend(); ++it) {
        if (it->hi - it->lo <= 0 && down.size() > 1) continue;
        PathSegment seg;
        seg.lo = -it->hi;
        seg.hi = -it->lo;
        seg.active = it->active;
        seg.signs = it->signs;
        seg.value = it->alpha0;
        seg.slope = -it->alpha1;
        path.segments.push_back(std::move(seg));
    }
    for (const auto& raw : up) {
        if (raw.hi - raw.lo <= 0 && !path.segments.empty()) continue;
        PathSegment seg{raw.lo, raw.hi, raw.active, raw.signs, raw.alpha0, raw.alpha1, 0.0};
        if (!path.segments.empty() && path.segments.back().active == seg.active &&
            path.segments.back().signs == seg.signs) {
            path.segments.back().hi = seg.hi;
        } else {
            path.segments.push_back(std::move(seg));
        }
    }
    std::vector<PathSegment> tidy;
    for (auto& seg : path.segments) {
        if (seg.hi <= seg.lo && path.segments.size() > 1) continue;
        if (!tidy.empty() && tidy.back().active == seg.active && tidy.back().signs == seg.signs) {
            tidy.back().hi = seg.hi;
        } else {
            tidy.push_back(std::move(seg));
        }
    }
    path.segments = std::move(tidy);
    path.unbounded_below = open_down;
    path.unbounded_above = open_up;
    return path;
}

/// Line system for z0(tau) with the observed point as origin (s = tau - tau_obs).
inline LineSystem line_system(const MatrixXd& U0, const TauParameterization& par) {
    VectorXd z_obs = par.z_at(par.tau_obs);
    return {U0.transpose() * U0, U0.transpose() * z_obs, U0.transpose() * par.dir,
            z_obs.squaredNorm(), U0.rows()};
}

inline TauPath shift_path(TauPath path, double offset) {
    for (auto& seg : path.segments) {
        seg.lo += offset;
        seg.hi += offset;
        seg.anchor += offset;
    }
    return path;
}

/// Lasso path over the window [tau_min, tau_max] as tau varies.
inline TauPath lasso_path_in_tau(const TauParameterization& par, const MatrixXd& U0, double lambda,
                                 double tau_min, double tau_max, const PathOptions& opts = {}) {
    if (!(lambda > 0)) fail(ErrorKind::Config, "lambda must be positive");
    if (!(tau_min <= par.tau_obs && par.tau_obs <= tau_max))
        fail(ErrorKind::Config, "tau window does not contain the observed statistic");
    LineSystem sys = line_system(U0, par);
    VectorXd z_obs = par.z_at(par.tau_obs);
    LassoSolution origin = solve_lasso(GramProblem{sys.gram, sys.a, sys.zz, sys.rows}, lambda);
    TauPath path = trace_line(sys, lambda, tau_min - par.tau_obs, tau_max - par.tau_obs, origin, opts);
    return shift_path(std::move(path), par.tau_obs);
}

namespace detail {

template <typename Pred>
IntervalUnion<double> collect_event(const TauPath& path, Pred&& pred) {
    std::vector<Interval<double>> pieces;
    const auto& segs = path.segments;
    for (std::size_t k = 0; k < segs.size(); ++k) {
        if (!pred(segs[k])) continue;
        double lo = segs[k].lo, hi = segs[k].hi;
        if (k == 0 && path.unbounded_below) lo = -std::numeric_limits<double>::infinity();
        if (k + 1 == segs.size() && path.unbounded_above) hi = std::numeric_limits<double>::infinity();
        pieces.push_back({lo, hi});
    }
    return IntervalUnion<double>(std::move(pieces));
}

}  // namespace detail

/// Values of tau at which the lasso selects exactly `model` (signs ignored).
inline IntervalUnion<double> selection_event(const TauPath& path, const IndexSet& model) {
    return detail::collect_event(path, [&](const PathSegment& s) { return s.active == model; });
}

/// Values of tau at which the lasso selects `model` with the given signs.
inline IntervalUnion<double> sign_event(const TauPath& path, const IndexSet& model,
                                        const std::vector<int>& signs) {
    return detail::collect_event(
        path, [&](const PathSegment& s) { return s.active == model && s.signs == signs; });
}

inline IntervalUnion<double> intersect(const IntervalUnion<double>& a, const IntervalUnion<double>& b) {
    return a.intersect(b);
}

/// Fixed train/validation partition of the rows.
struct Split {
    std::vector<Index> train;
    std::vector<Index> validation;
};

namespace detail {

inline MatrixXd rows_of(const MatrixXd& M, const std::vector<Index>& rows) {
    MatrixXd out(static_cast<Index>(rows.size()), M.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Index>(k)) = M.row(rows[k]);
    return out;
}

inline VectorXd rows_of(const VectorXd& v, const std::vector<Index>& rows) {
    VectorXd out(static_cast<Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) out(static_cast<Index>(k)) = v(rows[k]);
    return out;
}

// a*s^2 + 2*b*s + c
struct Quadratic {
    double a = 0, b = 0, c = 0;
    double operator()(double s) const { return (a * s + 2.0 * b) * s + c; }
};

// Sub-intervals of [lo, hi] where q(s) <= 0.
inline std::vector<Interval<double>> nonpositive_set(const Quadratic& q, double lo, double hi) {
    std::vector<double> pts{lo};
    auto push_root = [&](double r) {
        if (std::isfinite(r) && r > lo && r < hi) pts.push_back(r);
    };
    if (q.a == 0.0) {
        if (q.b != 0.0) push_root(-q.c / (2.0 * q.b));
    } else {
        double disc = q.b * q.b - q.a * q.c;
        if (disc >= 0) {
            double sq = std::sqrt(disc);
            double t = -(q.b + std::copysign(sq, q.b));
            if (t != 0.0) {
                push_root(t / q.a);
                push_root(q.c / t);
            } else {
                push_root(0.0);
            }
        }
    }
    pts.push_back(hi);
    std::sort(pts.begin(), pts.end());
    std::vector<Interval<double>> out;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        if (!(pts[k] < pts[k + 1])) continue;
        double mid = 0.5 * (pts[k] + pts[k + 1]);
        if (q(mid) <= 0) out.push_back({pts[k], pts[k + 1]});
    }
    return out;
}

}  // namespace detail

/**
 * Precomputed train/validation pieces for penalty selection along a contrast
 * line. Train lasso fits use (2 * n_train)^-1 scaling with the same lambda
 * values as the full-data fit.
 */
struct LambdaSelectionLine {
    LineSystem train;
    double train_dd = 0.0, train_zd = 0.0;
    MatrixXd val_gram;
    VectorXd val_uz, val_ud;
    double val_zz = 0.0, val_zd = 0.0, val_dd = 0.0;
};

inline LambdaSelectionLine lambda_selection_line(const LinearizedData& lin,
                                                 const TauParameterization& par,
                                                 const Split& split) {
    LambdaSelectionLine out;
    VectorXd z_obs = par.z_at(par.tau_obs);
    MatrixXd Ut = detail::rows_of(lin.U0, split.train);
    VectorXd zt = detail::rows_of(z_obs, split.train);
    VectorXd dt = detail::rows_of(par.dir, split.train);
    out.train = {Ut.transpose() * Ut, Ut.transpose() * zt, Ut.transpose() * dt, zt.squaredNorm(),
                 Ut.rows()};
    out.train_dd = dt.squaredNorm();
    out.train_zd = zt.dot(dt);
    MatrixXd Uv = detail::rows_of(lin.U0, split.validation);
    VectorXd zv = detail::rows_of(z_obs, split.validation);
    VectorXd dv = detail::rows_of(par.dir, split.validation);
    out.val_gram = Uv.transpose() * Uv;
    out.val_uz = Uv.transpose() * zv;
    out.val_ud = Uv.transpose() * dv;
    out.val_zz = zv.squaredNorm();
    out.val_zd = zv.dot(dv);
    out.val_dd = dv.squaredNorm();
    return out;
}

/// Index into `grid` of the penalty minimizing validation error at the
/// observed data; ties go to the earliest grid entry.
inline std::size_t select_lambda(const LambdaSelectionLine& line, const std::vector<double>& grid,
                                 std::vector<LassoSolution>* train_solutions = nullptr) {
    GramProblem prob{line.train.gram, line.train.a, line.train.zz, line.train.rows};
    std::size_t best = 0;
    double best_err = std::numeric_limits<double>::infinity();
    if (train_solutions) train_solutions->clear();
    for (std::size_t k = 0; k < grid.size(); ++k) {
        LassoSolution sol = solve_lasso(prob, grid[k]);
        const VectorXd& b = sol.beta_lambda;
        double err = line.val_zz - 2.0 * b.dot(line.val_uz) + b.dot(line.val_gram * b);
        if (err < best_err) {
            best_err = err;
            best = k;
        }
        if (train_solutions) train_solutions->push_back(std::move(sol));
    }
    return best;
}

/**
 * Values of s = tau - tau_obs, within [s_lo, s_hi], at which validation
 * error selects grid[star] among all grid values. `train_solutions[k]` is the
 * train-row lasso solution at s = 0 for grid[k].
 */
inline IntervalUnion<double> lambda_event_on_line(const LambdaSelectionLine& line,
                                                  const std::vector<double>& grid, std::size_t star,
                                                  const std::vector<LassoSolution>& train_solutions,
                                                  double s_lo, double s_hi,
                                                  const PathOptions& opts = {}) {
    if (star >= grid.size()) fail(ErrorKind::Config, "selected lambda is not in the grid");
    if (grid.size() == 1) return IntervalUnion<double>(s_lo, s_hi);

    struct Piece {
        double lo, hi;
        detail::Quadratic err;
    };
    std::vector<std::vector<Piece>> curves(grid.size());
    std::vector<double> breaks{s_lo, s_hi};
    for (std::size_t k = 0; k < grid.size(); ++k) {
        TauPath path = trace_line(line.train, grid[k], s_lo, s_hi, train_solutions[k], opts);
        for (const auto& seg : path.segments) {
            detail::Quadratic q;
            q.a = line.val_dd;
            q.b = line.val_zd;
            q.c = line.val_zz;
            const Index m = static_cast<Index>(seg.active.size());
            if (m > 0) {
                VectorXd uz(m), ud(m);
                MatrixXd g(m, m);
                for (Index r = 0; r < m; ++r) {
                    uz(r) = line.val_uz(seg.active[r]);
                    ud(r) = line.val_ud(seg.active[r]);
                    for (Index c = 0; c < m; ++c) g(r, c) = line.val_gram(seg.active[r], seg.active[c]);
                }
                const VectorXd& a0 = seg.value;
                const VectorXd& a1 = seg.slope;
                VectorXd g0 = g * a0, g1 = g * a1;
                q.c += -2.0 * a0.dot(uz) + a0.dot(g0);
                q.b += -a0.dot(ud) - a1.dot(uz) + a0.dot(g1);
                q.a += -2.0 * a1.dot(ud) + a1.dot(g1);
            }
            curves[k].push_back({seg.lo, seg.hi, q});
            breaks.push_back(seg.lo);
            breaks.push_back(seg.hi);
        }
    }
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    std::vector<std::size_t> cursor(grid.size(), 0);
    std::vector<Interval<double>> winning;
    for (std::size_t b = 0; b + 1 < breaks.size(); ++b) {
        double lo = breaks[b], hi = breaks[b + 1];
        if (!(lo < hi)) continue;
        double mid = 0.5 * (lo + hi);
        auto piece_at = [&](std::size_t k) -> const detail::Quadratic& {
            auto& cur = cursor[k];
            while (cur + 1 < curves[k].size() && curves[k][cur].hi <= mid) ++cur;
            return curves[k][cur].err;
        };
        const detail::Quadratic& qs = piece_at(star);
        std::vector<Interval<double>> current{{lo, hi}};
        for (std::size_t k = 0; k < grid.size() && !current.empty(); ++k) {
            if (k == star) continue;
            const detail::Quadratic& qk = piece_at(k);
            detail::Quadratic diff{qs.a - qk.a, qs.b - qk.b, qs.c - qk.c};
            double scale = std::max({std::abs(qs.a), std::abs(qs.b), std::abs(qs.c), 1.0});
            bool identical = std::abs(diff.a) <= 1e-12 * scale && std::abs(diff.b) <= 1e-12 * scale &&
                             std::abs(diff.c) <= 1e-12 * scale;
            if (identical) {
                if (k < star) current.clear();
                continue;
            }
            auto ok = detail::nonpositive_set(diff, lo, hi);
            IntervalUnion<double> keep = IntervalUnion<double>(current).intersect(IntervalUnion<double>(ok, 0.0));
            current = keep.intervals();
        }
        winning.insert(winning.end(), current.begin(), current.end());
    }
    return IntervalUnion<double>(std::move(winning));
}

/// Values of tau in [tau_min, tau_max] at which the train/validation
/// procedure picks lambda_star from `grid`.
inline IntervalUnion<double> lambda_selection_event(const LinearizedData& lin, const VectorXd& c,
                                                    const Split& split,
                                                    const std::vector<double>& grid,
                                                    double lambda_star, double tau_min,
                                                    double tau_max) {
    auto it = std::find(grid.begin(), grid.end(), lambda_star);
    if (it == grid.end()) fail(ErrorKind::Config, "lambda_star is not in the grid");
    TauParameterization par = parameterize(lin, c);
    if (!(tau_min <= par.tau_obs && par.tau_obs <= tau_max))
        fail(ErrorKind::Config, "tau window does not contain the observed statistic");
    LambdaSelectionLine line = lambda_selection_line(lin, par, split);
    std::vector<LassoSolution> train_solutions;
    select_lambda(line, grid, &train_solutions);
    auto event = lambda_event_on_line(line, grid, static_cast<std::size_t>(it - grid.begin()),
                                      train_solutions, tau_min - par.tau_obs, tau_max - par.tau_obs);
    std::vector<Interval<double>> shifted;
    for (const auto& iv : event) shifted.push_back({iv.lo + par.tau_obs, iv.hi + par.tau_obs});
    return IntervalUnion<double>(std::move(shifted));
}

}  // namespace pplglm
