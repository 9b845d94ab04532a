#pragma once

#include "sheetguard/flowgraph.hpp"
#include "sheetguard/roles.hpp"
#include "sheetguard/workbook.hpp"

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace sheetguard {

/// Closed interval [lo, hi] with finite endpoints, or TOP (unbounded).
class Interval {
public:
    static Interval top() noexcept { return Interval(); }
    static Interval point(double v) noexcept { return Interval(v, v); }
    /// Requires finite lo <= hi.
    Interval(double lo, double hi);

    bool is_top() const noexcept { return top_; }
    bool is_point() const noexcept { return !top_ && lo_ == hi_; }
    double lo() const noexcept { return lo_; }
    double hi() const noexcept { return hi_; }

    bool contains(double v) const noexcept { return top_ || (lo_ <= v && v <= hi_); }
    /// TOP is a subset only of TOP.
    bool subset_of(const Interval& other) const noexcept;
    bool intersects(const Interval& other) const noexcept;
    Interval hull(const Interval& other) const noexcept;

    friend bool operator==(const Interval&, const Interval&) = default;

private:
    Interval() = default;

    bool top_ = true;
    double lo_ = 0;
    double hi_ = 0;
};

/// "[0, 20]" or "TOP"
std::string to_string(const Interval& iv);

using AssertionSet = std::map<CellId, Interval>;

/// Parsed policy file: expected ranges plus role overrides. Later lines win.
struct Policy {
    AssertionSet assertions;
    std::map<CellId, Role> role_overrides;
};

/// Lines: `assert <Sheet!A1> in [lo, hi]`, `role <Sheet!A1> input|code|output|label`,
/// `#` comments. Throws ParseError with the line number.
Policy parse_policy(std::string_view text);

struct IntervalResult {
    /// Interval of every non-empty cell.
    std::map<CellId, Interval> intervals;
    /// Constants feeding a formula that took the point interval of their current
    /// value because no assertion covered them.
    std::set<CellId> unasserted_inputs;
};

/// Forward interval propagation in topological order. Asserted constants take
/// their asserted interval; formulas are computed from their precedents.
IntervalResult eval_intervals(const Workbook& w, const FlowGraph& g, const AssertionSet& assertions);

enum class VerdictStatus { Safe, Borderline, RangeViolation, ActualOut, Indeterminate };

std::string_view to_string(VerdictStatus status) noexcept;

struct Verdict {
    CellId cell;
    Interval computed = Interval::top();
    Interval expected = Interval::top();
    CellValue actual;
    VerdictStatus status = VerdictStatus::Indeterminate;
};

/// Classifies one assertion. RANGE_VIOLATION (disjoint) outranks ACTUAL_OUT,
/// which outranks SAFE/BORDERLINE; TOP or an error actual is INDETERMINATE.
VerdictStatus classify(const Interval& computed, const Interval& expected, const CellValue& actual);

struct AssertionReport {
    std::vector<Verdict> verdicts;  // workbook order
    /// Assertions naming a cell that does not exist.
    std::vector<std::string> policy_errors;
    /// Unasserted constants that feed (transitively) an asserted cell.
    std::vector<CellId> unasserted_inputs;
};

AssertionReport check_assertions(const Workbook& w, const FlowGraph& g, const AssertionSet& assertions);

}  // namespace sheetguard
