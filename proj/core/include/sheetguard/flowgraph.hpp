#pragma once

#include "sheetguard/workbook.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace sheetguard {

enum class ErrorCode { Div0, Cycle, Value, Ext, Ref };

std::string_view to_string(ErrorCode code) noexcept;

struct ErrorValue {
    ErrorCode code;
    friend bool operator==(const ErrorValue&, const ErrorValue&) = default;
};

/// Result of evaluating a cell. Numbers are always finite.
using CellValue = std::variant<double, std::string, bool, ErrorValue>;

/// Same alternative and, for numbers, bit-identical representation.
bool values_identical(const CellValue& a, const CellValue& b);
/// "200", "\"text\"", "TRUE", "#DIV0"
std::string print_value(const CellValue& v);

/// Precedent -> dependent edges among cells. Nodes are every non-empty cell
/// plus every empty cell a formula references (materialized as implicit
/// nodes); they are stored in workbook order and addressed by index.
class FlowGraph {
public:
    using Node = std::size_t;

    const std::vector<CellId>& nodes() const noexcept { return nodes_; }
    /// Sorted, duplicate-free (precedent, dependent) pairs.
    const std::vector<std::pair<Node, Node>>& edges() const noexcept { return edges_; }
    /// Non-cyclic nodes; every edge between two of them points forward.
    const std::vector<Node>& topo_order() const noexcept { return topo_; }
    /// Strongly connected components of size >= 2, plus self-loops.
    const std::vector<std::vector<Node>>& cycles() const noexcept { return cycles_; }

    std::optional<Node> index_of(const CellId& id) const;
    const CellId& id(Node n) const { return nodes_.at(n); }

    const std::vector<Node>& direct_precedents(Node n) const { return preds_.at(n); }
    const std::vector<Node>& direct_dependents(Node n) const { return succs_.at(n); }

    bool implicit(Node n) const { return implicit_.at(n); }
    bool in_cycle(Node n) const { return in_cycle_.at(n); }
    /// In a cycle or transitively depending on one.
    bool cycle_tainted(Node n) const { return tainted_.at(n); }
    /// Position in topo_order, or npos for cyclic nodes.
    std::size_t topo_rank(Node n) const { return rank_.at(n); }

    /// External-book references written in each formula cell ("[Ext]S!B2").
    const std::map<CellId, std::vector<std::string>>& external_refs() const noexcept { return external_; }
    /// Formula cells that reference a sheet missing from the workbook.
    const std::set<CellId>& ref_errors() const noexcept { return ref_errors_; }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    friend FlowGraph build_flow_graph(const Workbook& w);

    std::vector<CellId> nodes_;
    std::map<CellId, Node> index_;
    std::vector<std::pair<Node, Node>> edges_;
    std::vector<Node> topo_;
    std::vector<std::vector<Node>> cycles_;
    std::vector<std::vector<Node>> preds_;
    std::vector<std::vector<Node>> succs_;
    std::vector<bool> implicit_;
    std::vector<bool> in_cycle_;
    std::vector<bool> tainted_;
    std::vector<std::size_t> rank_;
    std::map<CellId, std::vector<std::string>> external_;
    std::set<CellId> ref_errors_;
};

/// Ranges covering more cells than this are not expanded; the referencing
/// cell gets a REF annotation instead.
inline constexpr std::size_t kMaxRangeCells = std::size_t{1} << 20;

FlowGraph build_flow_graph(const Workbook& w);

/// Resolved target of a reference written at `host`: the sheet a bare
/// reference points to is the host's sheet. External refs return nullopt.
std::optional<CellId> resolve_ref(const CellRef& ref, const CellId& host);

using ValueMap = std::map<CellId, CellValue>;

/// Values of every non-empty cell. Cycle members and their transitive
/// dependents evaluate to #CYCLE.
ValueMap evaluate(const Workbook& w, const FlowGraph& g);

/// Direct or transitive precedents, ordered against the flow (reverse topological).
std::vector<CellId> precedents(const FlowGraph& g, const CellId& cell, bool transitive);
/// Direct or transitive dependents, ordered along the flow (topological).
std::vector<CellId> dependents(const FlowGraph& g, const CellId& cell, bool transitive);

}  // namespace sheetguard
