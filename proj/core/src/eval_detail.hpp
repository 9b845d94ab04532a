#pragma once

#include "sheetguard/flowgraph.hpp"

#include <optional>
#include <variant>
#include <vector>

namespace sheetguard::detail {

/// Cells covered by a range written at `host`, row-major; nullopt when the
/// range exceeds kMaxRangeCells.
std::optional<std::vector<CellId>> expand_range(const RangeNode& range, const CellId& host);

struct Empty {
    friend bool operator==(Empty, Empty) { return true; }
};

/// Evaluation-time value; Empty only appears for references to empty cells.
using Scalar = std::variant<Empty, double, std::string, bool, ErrorValue>;

CellValue to_cell_value(const Scalar& s);

/// ROUND semantics: digits truncated toward zero, halves away from zero.
double round_half_away(double x, double digits);

class Evaluator {
public:
    Evaluator(const Workbook& w, const FlowGraph& g);

    const Scalar& node_value(FlowGraph::Node n) const { return values_.at(n); }

private:
    Scalar eval(const Expr& e, const CellId& host) const;
    Scalar eval_ref(const CellRef& ref, const CellId& host) const;
    Scalar eval_call(const CallNode& call, const CellId& host) const;
    Scalar eval_binary(const BinaryNode& b, const CellId& host) const;

    const Workbook& w_;
    const FlowGraph& g_;
    std::vector<Scalar> values_;
};

}  // namespace sheetguard::detail
