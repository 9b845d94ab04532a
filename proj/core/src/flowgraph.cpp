#include "sheetguard/flowgraph.hpp"
#include "sheetguard/error.hpp"
#include "eval_detail.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <queue>

namespace sheetguard {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::Div0: return "DIV0";
        case ErrorCode::Cycle: return "CYCLE";
        case ErrorCode::Value: return "VALUE";
        case ErrorCode::Ext: return "EXT";
        case ErrorCode::Ref: return "REF";
    }
    return "?";
}

bool values_identical(const CellValue& a, const CellValue& b) {
    if (a.index() != b.index()) return false;
    if (const auto* d = std::get_if<double>(&a)) {
        return std::bit_cast<std::uint64_t>(*d) == std::bit_cast<std::uint64_t>(std::get<double>(b));
    }
    return a == b;
}

std::string print_value(const CellValue& v) {
    if (const auto* d = std::get_if<double>(&v)) return format_number(*d);
    if (const auto* s = std::get_if<std::string>(&v)) return quote_text(*s);
    if (const auto* b = std::get_if<bool>(&v)) return *b ? "TRUE" : "FALSE";
    return "#" + std::string(to_string(std::get<ErrorValue>(v).code));
}

std::optional<FlowGraph::Node> FlowGraph::index_of(const CellId& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::optional<CellId> resolve_ref(const CellRef& ref, const CellId& host) {
    if (ref.external()) return std::nullopt;
    return CellId{ref.sheet.value_or(host.sheet), Address{ref.col, ref.row}};
}

namespace detail {

std::optional<std::vector<CellId>> expand_range(const RangeNode& range, const CellId& host) {
    auto sheet = range.first.sheet.value_or(host.sheet);
    int c0 = std::min(range.first.col, range.last.col);
    int c1 = std::max(range.first.col, range.last.col);
    int r0 = std::min(range.first.row, range.last.row);
    int r1 = std::max(range.first.row, range.last.row);
    auto count = static_cast<std::size_t>(c1 - c0 + 1) * static_cast<std::size_t>(r1 - r0 + 1);
    if (count > kMaxRangeCells) return std::nullopt;
    std::vector<CellId> out;
    out.reserve(count);
    for (int r = r0; r <= r1; ++r) {
        for (int c = c0; c <= c1; ++c) out.push_back({sheet, {c, r}});
    }
    return out;
}

}  // namespace detail

namespace {

// Iterative Tarjan; returns component id per node.
std::vector<std::size_t> strongly_connected(const std::vector<std::vector<std::size_t>>& succs, std::size_t& count) {
    const auto n = succs.size();
    constexpr auto unvisited = static_cast<std::size_t>(-1);
    std::vector<std::size_t> index(n, unvisited), low(n, 0), comp(n, unvisited);
    std::vector<bool> on_stack(n, false);
    std::vector<std::size_t> stack;
    std::vector<std::pair<std::size_t, std::size_t>> work;  // (node, next child)
    std::size_t next_index = 0;
    count = 0;

    for (std::size_t root = 0; root < n; ++root) {
        if (index[root] != unvisited) continue;
        work.emplace_back(root, 0);
        while (!work.empty()) {
            auto& [v, child] = work.back();
            if (child == 0 && index[v] == unvisited) {
                index[v] = low[v] = next_index++;
                stack.push_back(v);
                on_stack[v] = true;
            }
            if (child < succs[v].size()) {
                auto w = succs[v][child++];
                if (index[w] == unvisited) {
                    work.emplace_back(w, 0);
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
                continue;
            }
            if (low[v] == index[v]) {
                std::size_t w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    comp[w] = count;
                } while (w != v);
                ++count;
            }
            auto finished = v;
            work.pop_back();
            if (!work.empty()) {
                auto parent = work.back().first;
                low[parent] = std::min(low[parent], low[finished]);
            }
        }
    }
    return comp;
}

}  // namespace

FlowGraph build_flow_graph(const Workbook& w) {
    FlowGraph g;

    struct Reference {
        CellId from;
        CellId to;
    };
    std::vector<Reference> refs;
    std::set<CellId> implicit;

    for (const auto& sheet : w.sheets()) {
        for (const auto& [addr, cell] : sheet.cells()) {
            if (!cell.is_formula()) continue;
            CellId host{sheet.name(), addr};
            auto add_target = [&](const CellId& target) {
                if (!w.find_sheet(target.sheet)) {
                    g.ref_errors_.insert(host);
                    return;
                }
                if (!w.find(target)) implicit.insert(target);
                refs.push_back({host, target});
            };
            for_each_reference(*cell.formula(), [&](const Expr& e) {
                if (const auto* r = std::get_if<RefNode>(&e.node)) {
                    if (r->ref.external()) {
                        g.external_[host].push_back(print_ref(r->ref));
                        return;
                    }
                    add_target(*resolve_ref(r->ref, host));
                    return;
                }
                const auto& range = std::get<RangeNode>(e.node);
                if (range.first.external()) {
                    g.external_[host].push_back(print_ref(range.first) + ":" +
                                                print_ref(CellRef{std::nullopt, std::nullopt, range.last.col, range.last.row,
                                                                  range.last.col_abs, range.last.row_abs}));
                    return;
                }
                auto cells = detail::expand_range(range, host);
                if (!cells) {
                    g.ref_errors_.insert(host);
                    return;
                }
                for (const auto& target : *cells) add_target(target);
            });
        }
    }

    g.nodes_ = w.cell_ids();
    g.nodes_.insert(g.nodes_.end(), implicit.begin(), implicit.end());
    std::sort(g.nodes_.begin(), g.nodes_.end(), [&](const CellId& a, const CellId& b) { return w.workbook_less(a, b); });
    const auto n = g.nodes_.size();
    for (std::size_t i = 0; i < n; ++i) g.index_.emplace(g.nodes_[i], i);
    g.implicit_.assign(n, false);
    for (const auto& id : implicit) g.implicit_[g.index_.at(id)] = true;

    g.edges_.reserve(refs.size());
    for (const auto& r : refs) g.edges_.emplace_back(g.index_.at(r.to), g.index_.at(r.from));
    std::sort(g.edges_.begin(), g.edges_.end());
    g.edges_.erase(std::unique(g.edges_.begin(), g.edges_.end()), g.edges_.end());

    g.preds_.assign(n, {});
    g.succs_.assign(n, {});
    for (const auto& [p, d] : g.edges_) {
        g.succs_[p].push_back(d);
        g.preds_[d].push_back(p);
    }
    for (auto& v : g.preds_) std::sort(v.begin(), v.end());

    std::size_t comp_count = 0;
    auto comp = strongly_connected(g.succs_, comp_count);
    std::vector<std::vector<std::size_t>> members(comp_count);
    for (std::size_t v = 0; v < n; ++v) members[comp[v]].push_back(v);
    g.in_cycle_.assign(n, false);
    for (auto& m : members) {
        bool cyclic = m.size() >= 2;
        if (m.size() == 1) {
            const auto& s = g.succs_[m[0]];
            cyclic = std::find(s.begin(), s.end(), m[0]) != s.end();
        }
        if (!cyclic) continue;
        for (auto v : m) g.in_cycle_[v] = true;
        g.cycles_.push_back(m);
    }
    std::sort(g.cycles_.begin(), g.cycles_.end());

    g.tainted_ = g.in_cycle_;
    std::vector<std::size_t> queue;
    for (std::size_t v = 0; v < n; ++v) {
        if (g.tainted_[v]) queue.push_back(v);
    }
    while (!queue.empty()) {
        auto v = queue.back();
        queue.pop_back();
        for (auto d : g.succs_[v]) {
            if (!g.tainted_[d]) {
                g.tainted_[d] = true;
                queue.push_back(d);
            }
        }
    }

    // Kahn over the acyclic remainder; smallest workbook position first.
    std::vector<std::size_t> indegree(n, 0);
    for (const auto& [p, d] : g.edges_) {
        if (!g.in_cycle_[p] && !g.in_cycle_[d]) ++indegree[d];
    }
    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
    for (std::size_t v = 0; v < n; ++v) {
        if (!g.in_cycle_[v] && indegree[v] == 0) ready.push(v);
    }
    g.rank_.assign(n, FlowGraph::npos);
    while (!ready.empty()) {
        auto v = ready.top();
        ready.pop();
        g.rank_[v] = g.topo_.size();
        g.topo_.push_back(v);
        for (auto d : g.succs_[v]) {
            if (g.in_cycle_[d]) continue;
            if (--indegree[d] == 0) ready.push(d);
        }
    }
    return g;
}

ValueMap evaluate(const Workbook& w, const FlowGraph& g) {
    detail::Evaluator ev(w, g);
    ValueMap out;
    for (std::size_t v = 0; v < g.nodes().size(); ++v) {
        if (g.implicit(v)) continue;
        out.emplace(g.id(v), detail::to_cell_value(ev.node_value(v)));
    }
    return out;
}

namespace {

std::vector<std::size_t> reach(const FlowGraph& g, std::size_t start, bool transitive, bool backward) {
    std::vector<bool> seen(g.nodes().size(), false);
    std::vector<std::size_t> out;
    std::vector<std::size_t> frontier{start};
    while (!frontier.empty()) {
        auto v = frontier.back();
        frontier.pop_back();
        const auto& next = backward ? g.direct_precedents(v) : g.direct_dependents(v);
        for (auto u : next) {
            if (seen[u]) continue;
            seen[u] = true;
            out.push_back(u);
            if (transitive) frontier.push_back(u);
        }
    }
    seen[start] = false;
    std::erase(out, start);
    return out;
}

std::size_t require_node(const FlowGraph& g, const CellId& cell) {
    auto idx = g.index_of(cell);
    if (!idx) throw NotFoundError("unknown cell " + to_string(cell));
    return *idx;
}

}  // namespace

std::vector<CellId> precedents(const FlowGraph& g, const CellId& cell, bool transitive) {
    auto found = reach(g, require_node(g, cell), transitive, true);
    // Against the flow: highest topological rank first; cyclic nodes lead.
    std::sort(found.begin(), found.end(), [&](std::size_t a, std::size_t b) {
        auto ra = g.topo_rank(a);
        auto rb = g.topo_rank(b);
        if (ra != rb) return ra > rb;
        return a < b;
    });
    std::vector<CellId> out;
    for (auto v : found) out.push_back(g.id(v));
    return out;
}

std::vector<CellId> dependents(const FlowGraph& g, const CellId& cell, bool transitive) {
    auto found = reach(g, require_node(g, cell), transitive, false);
    std::sort(found.begin(), found.end(), [&](std::size_t a, std::size_t b) {
        auto ra = g.topo_rank(a);
        auto rb = g.topo_rank(b);
        if (ra != rb) return ra < rb;
        return a < b;
    });
    std::vector<CellId> out;
    for (auto v : found) out.push_back(g.id(v));
    return out;
}

}  // namespace sheetguard
