#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <vector>

namespace pplglm {

/// Closed interval on the extended real line. Endpoints may be infinite.
template <typename Real>
struct Interval {
    Real lo;
    Real hi;

    Real length() const { return hi - lo; }
    bool contains(Real x) const { return lo <= x && x <= hi; }
    bool operator==(const Interval&) const = default;
};

/**
 * A finite union of disjoint intervals, kept in canonical form: sorted by
 * lower endpoint, every interval has lo < hi, and neighbours are separated by
 * a gap larger than the merge tolerance.
 *
 * Selection events on the contrast axis are stored this way, so membership
 * and measure queries are exact on the stored endpoints.
 */
template <typename Real = double>
class IntervalUnion {
public:
    using interval_type = Interval<Real>;

    static constexpr Real default_merge_tol = Real(1e-10);
    static constexpr Real inf = std::numeric_limits<Real>::infinity();

    IntervalUnion() = default;

    explicit IntervalUnion(std::vector<interval_type> pieces,
                           Real merge_tol = default_merge_tol)
        : pieces_(std::move(pieces)) {
        canonicalize(merge_tol);
    }

    IntervalUnion(Real lo, Real hi) : IntervalUnion(std::vector<interval_type>{{lo, hi}}) {}

    static IntervalUnion real_line() { return IntervalUnion(-inf, inf); }
    static IntervalUnion empty() { return IntervalUnion(); }

    const std::vector<interval_type>& intervals() const noexcept { return pieces_; }
    std::size_t size() const noexcept { return pieces_.size(); }
    bool is_empty() const noexcept { return pieces_.empty(); }

    auto begin() const noexcept { return pieces_.begin(); }
    auto end() const noexcept { return pieces_.end(); }

    Real measure() const {
        Real total = 0;
        for (const auto& iv : pieces_) total += iv.length();
        return total;
    }

    bool contains(Real x, Real tol = Real(0)) const {
        auto it = std::upper_bound(pieces_.begin(), pieces_.end(), x,
                                   [](Real v, const interval_type& iv) { return v < iv.lo; });
        if (it != pieces_.end() && it->lo - tol <= x) return true;
        if (it == pieces_.begin()) return false;
        --it;
        return x <= it->hi + tol;
    }

    /// Index of the interval containing x (within tol), or -1.
    std::ptrdiff_t find(Real x, Real tol = Real(0)) const {
        for (std::size_t i = 0; i < pieces_.size(); ++i) {
            if (pieces_[i].lo - tol <= x && x <= pieces_[i].hi + tol)
                return static_cast<std::ptrdiff_t>(i);
        }
        return -1;
    }

    /// Convex hull; undefined for the empty union.
    interval_type hull() const { return {pieces_.front().lo, pieces_.back().hi}; }

    void add(Real lo, Real hi, Real merge_tol = default_merge_tol) {
        pieces_.push_back({lo, hi});
        canonicalize(merge_tol);
    }

    IntervalUnion unite(const IntervalUnion& other) const {
        std::vector<interval_type> all = pieces_;
        all.insert(all.end(), other.pieces_.begin(), other.pieces_.end());
        return IntervalUnion(std::move(all));
    }

    IntervalUnion intersect(const IntervalUnion& other) const {
        std::vector<interval_type> out;
        std::size_t i = 0, k = 0;
        while (i < pieces_.size() && k < other.pieces_.size()) {
            const auto& a = pieces_[i];
            const auto& b = other.pieces_[k];
            Real lo = std::max(a.lo, b.lo);
            Real hi = std::min(a.hi, b.hi);
            if (lo < hi) out.push_back({lo, hi});
            if (a.hi < b.hi)
                ++i;
            else
                ++k;
        }
        IntervalUnion result;
        result.pieces_ = std::move(out);
        return result;
    }

    IntervalUnion complement() const {
        std::vector<interval_type> out;
        Real cursor = -inf;
        for (const auto& iv : pieces_) {
            if (cursor < iv.lo) out.push_back({cursor, iv.lo});
            cursor = iv.hi;
        }
        if (cursor < inf) out.push_back({cursor, inf});
        IntervalUnion result;
        result.pieces_ = std::move(out);
        return result;
    }

    bool operator==(const IntervalUnion&) const = default;

private:
    void canonicalize(Real merge_tol) {
        std::erase_if(pieces_, [](const interval_type& iv) {
            return !(iv.lo < iv.hi) || std::isnan(iv.lo) || std::isnan(iv.hi);
        });
        std::sort(pieces_.begin(), pieces_.end(),
                  [](const interval_type& a, const interval_type& b) { return a.lo < b.lo; });
        std::vector<interval_type> merged;
        merged.reserve(pieces_.size());
        for (const auto& iv : pieces_) {
            if (!merged.empty() && iv.lo <= merged.back().hi + merge_tol) {
                merged.back().hi = std::max(merged.back().hi, iv.hi);
            } else {
                merged.push_back(iv);
            }
        }
        pieces_ = std::move(merged);
    }

    std::vector<interval_type> pieces_;
};

template <typename Real>
std::ostream& operator<<(std::ostream& os, const IntervalUnion<Real>& u) {
    if (u.is_empty()) return os << "{}";
    bool first = true;
    for (const auto& iv : u) {
        if (!first) os << " U ";
        os << '[' << iv.lo << ", " << iv.hi << ']';
        first = false;
    }
    return os;
}

}  // namespace pplglm
