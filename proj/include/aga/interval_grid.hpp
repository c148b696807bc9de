#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace aga {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double v) const { return v >= lo && v <= hi; }
};

// Overlapping sliding windows [l0 + j*step, h0 + j*step] over an attribute
// range, plus the synthesis target values for that attribute.
struct IntervalGrid {
    std::string attribute;
    std::vector<Interval> intervals;
    std::vector<double> targets;
    double range_min = 0.0;
    double range_max = 0.0;
};

// Windows are generated until the upper edge reaches range_max; a window
// whose upper edge lands at or beyond range_max is the last one.
inline IntervalGrid build_grid(std::string attribute, double l0, double h0, double step,
                               double range_min, double range_max, std::vector<double> targets) {
    if (!(h0 > l0)) throw std::invalid_argument("build_grid: first interval is empty (h0 <= l0)");
    if (!(step > 0.0)) throw std::invalid_argument("build_grid: step must be positive");
    if (step > h0 - l0)
        throw std::invalid_argument("build_grid: step exceeds interval width, grid would leave gaps");
    if (!(range_max > range_min)) throw std::invalid_argument("build_grid: empty attribute range");
    if (targets.empty()) throw std::invalid_argument("build_grid: needs at least one target value");
    for (double t : targets)
        if (!std::isfinite(t)) throw std::invalid_argument("build_grid: non-finite target value");

    IntervalGrid grid;
    grid.attribute = std::move(attribute);
    grid.range_min = range_min;
    grid.range_max = range_max;
    grid.targets = std::move(targets);
    for (std::size_t j = 0;; ++j) {
        const double lo = l0 + static_cast<double>(j) * step;
        const double hi = h0 + static_cast<double>(j) * step;
        grid.intervals.push_back({lo, hi});
        if (hi >= range_max) break;
    }
    return grid;
}

// Indices of every interval containing `value`. A value outside the covered
// span snaps to the nearest interval so that callers always get at least one
// window to work with.
inline std::vector<std::size_t> containing_intervals(const IntervalGrid& grid, double value) {
    if (!std::isfinite(value)) throw std::invalid_argument("containing_intervals: non-finite value");
    if (grid.intervals.empty()) throw std::invalid_argument("containing_intervals: empty grid");
    std::vector<std::size_t> hits;
    for (std::size_t i = 0; i < grid.intervals.size(); ++i)
        if (grid.intervals[i].contains(value)) hits.push_back(i);
    if (!hits.empty()) return hits;

    std::size_t best = 0;
    double best_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.intervals.size(); ++i) {
        const Interval& iv = grid.intervals[i];
        const double gap = value < iv.lo ? iv.lo - value : value - iv.hi;
        if (gap < best_gap) {
            best_gap = gap;
            best = i;
        }
    }
    return {best};
}

// Strict-membership partition: slot i lists the positions of every value
// inside interval i. Values covered by several windows appear in each of
// them; values outside all windows appear nowhere (no snapping here).
inline std::vector<std::vector<std::size_t>> partition_by_intervals(const IntervalGrid& grid,
                                                                    std::span<const double> values) {
    std::vector<std::vector<std::size_t>> subsets(grid.intervals.size());
    for (std::size_t v = 0; v < values.size(); ++v) {
        if (!std::isfinite(values[v]))
            throw std::invalid_argument("partition_by_intervals: non-finite value at position " +
                                        std::to_string(v));
        for (std::size_t i = 0; i < grid.intervals.size(); ++i)
            if (grid.intervals[i].contains(values[v])) subsets[i].push_back(v);
    }
    return subsets;
}

}  // namespace aga
