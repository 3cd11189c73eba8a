#pragma once

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "selinf/errors.hpp"

namespace selinf {

/// Closed interval over the extended reals.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Gap below which adjacent intervals are merged during normalization, so
/// floating-point roots cannot split a region with a zero-measure crack.
inline constexpr double kIntervalMergeGap = 1e-12;

/// A finite union of closed intervals, kept sorted and strictly disjoint.
/// The empty list is the empty set; endpoints may be infinite.
class IntervalSet {
public:
    IntervalSet() = default;

    explicit IntervalSet(std::vector<Interval> raw) {
        for (const Interval& iv : raw) {
            if (std::isnan(iv.lo) || std::isnan(iv.hi))
                throw ValidationError("interval endpoint is NaN");
        }
        std::sort(raw.begin(), raw.end(),
                  [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
        for (const Interval& iv : raw) {
            if (iv.lo > iv.hi) continue;  // empty piece
            if (!intervals_.empty() && iv.lo <= intervals_.back().hi + kIntervalMergeGap)
                intervals_.back().hi = std::max(intervals_.back().hi, iv.hi);
            else
                intervals_.push_back(iv);
        }
    }

    IntervalSet(std::initializer_list<Interval> raw) : IntervalSet(std::vector<Interval>(raw)) {}

    static IntervalSet empty_set() { return IntervalSet(); }

    static IntervalSet all() {
        return IntervalSet({Interval{-std::numeric_limits<double>::infinity(),
                                     std::numeric_limits<double>::infinity()}});
    }

    static IntervalSet single(double lo, double hi) { return IntervalSet({Interval{lo, hi}}); }

    const std::vector<Interval>& intervals() const { return intervals_; }
    bool empty() const { return intervals_.empty(); }
    std::size_t size() const { return intervals_.size(); }

    bool contains(double x, double slack = 0.0) const {
        for (const Interval& iv : intervals_)
            if (x >= iv.lo - slack && x <= iv.hi + slack) return true;
        return false;
    }

    IntervalSet intersect(const IntervalSet& other) const {
        std::vector<Interval> out;
        std::size_t i = 0, j = 0;
        while (i < intervals_.size() && j < other.intervals_.size()) {
            const Interval& a = intervals_[i];
            const Interval& b = other.intervals_[j];
            const double lo = std::max(a.lo, b.lo);
            const double hi = std::min(a.hi, b.hi);
            if (lo <= hi) out.push_back({lo, hi});
            // Advance whichever interval ends first.
            if (a.hi < b.hi)
                ++i;
            else
                ++j;
        }
        return IntervalSet(std::move(out));
    }

    /// Image under s -> s * factor. A negative factor reverses interval order
    /// and swaps endpoints; factor must be nonzero.
    IntervalSet scaled(double factor) const {
        if (factor == 0.0 || std::isnan(factor))
            throw ValidationError("interval scaling factor must be nonzero");
        std::vector<Interval> out;
        out.reserve(intervals_.size());
        for (const Interval& iv : intervals_) {
            const double a = iv.lo * factor;
            const double b = iv.hi * factor;
            out.push_back(factor > 0.0 ? Interval{a, b} : Interval{b, a});
        }
        return IntervalSet(std::move(out));
    }

    /// Translation s -> s + shift.
    IntervalSet shifted(double shift) const {
        std::vector<Interval> out;
        out.reserve(intervals_.size());
        for (const Interval& iv : intervals_) out.push_back({iv.lo + shift, iv.hi + shift});
        return IntervalSet(std::move(out));
    }

    std::string describe() const {
        if (intervals_.empty()) return "{}";
        std::ostringstream os;
        for (std::size_t k = 0; k < intervals_.size(); ++k) {
            if (k) os << " u ";
            os << '[' << intervals_[k].lo << ", " << intervals_[k].hi << ']';
        }
        return os.str();
    }

    bool operator==(const IntervalSet& other) const {
        if (intervals_.size() != other.intervals_.size()) return false;
        for (std::size_t k = 0; k < intervals_.size(); ++k)
            if (intervals_[k].lo != other.intervals_[k].lo ||
                intervals_[k].hi != other.intervals_[k].hi)
                return false;
        return true;
    }

private:
    std::vector<Interval> intervals_;
};

/// Fold intersection over a list; the empty list yields the whole line.
inline IntervalSet intersect(const std::vector<IntervalSet>& sets) {
    IntervalSet acc = IntervalSet::all();
    for (const IntervalSet& s : sets) acc = acc.intersect(s);
    return acc;
}

}  // namespace selinf
