#include "oracles.hpp"

#include <algorithm>
#include <functional>
#include <map>

namespace sheetguard::testing {

namespace {

bool is_literal(const Expr& e) {
    return std::holds_alternative<NumberNode>(e.node) || std::holds_alternative<TextNode>(e.node) ||
           std::holds_alternative<BooleanNode>(e.node);
}

bool is_reference(const Expr& e) {
    return std::holds_alternative<RefNode>(e.node) || std::holds_alternative<RangeNode>(e.node);
}

bool same_ref(const CellRef& a, Address ha, const CellRef& b, Address hb) {
    if (a.book != b.book || a.sheet != b.sheet || a.col_abs != b.col_abs || a.row_abs != b.row_abs) return false;
    const bool col = a.col_abs ? a.col == b.col : a.col - ha.col == b.col - hb.col;
    const bool row = a.row_abs ? a.row == b.row : a.row - ha.row == b.row - hb.row;
    return col && row;
}

}  // namespace

bool equivalent(const Expr& a, Address ha, const Expr& b, Address hb, EquivalenceLevel level) {
    if (level != EquivalenceLevel::Copy && is_literal(a) && is_literal(b)) return true;
    if (level == EquivalenceLevel::Structural && is_reference(a) && is_reference(b)) return true;
    if (a.node.index() != b.node.index()) return false;
    if (const auto* n = std::get_if<NumberNode>(&a.node)) return n->value == std::get<NumberNode>(b.node).value;
    if (const auto* t = std::get_if<TextNode>(&a.node)) return t->value == std::get<TextNode>(b.node).value;
    if (const auto* x = std::get_if<BooleanNode>(&a.node)) return x->value == std::get<BooleanNode>(b.node).value;
    if (const auto* r = std::get_if<RefNode>(&a.node)) return same_ref(r->ref, ha, std::get<RefNode>(b.node).ref, hb);
    if (const auto* r = std::get_if<RangeNode>(&a.node)) {
        const auto& o = std::get<RangeNode>(b.node);
        return same_ref(r->first, ha, o.first, hb) && same_ref(r->last, ha, o.last, hb);
    }
    if (const auto* u = std::get_if<UnaryNode>(&a.node)) {
        const auto& o = std::get<UnaryNode>(b.node);
        return u->op == o.op && equivalent(*u->operand, ha, *o.operand, hb, level);
    }
    if (const auto* x = std::get_if<BinaryNode>(&a.node)) {
        const auto& o = std::get<BinaryNode>(b.node);
        return x->op == o.op && equivalent(*x->lhs, ha, *o.lhs, hb, level) && equivalent(*x->rhs, ha, *o.rhs, hb, level);
    }
    const auto& c = std::get<CallNode>(a.node);
    const auto& o = std::get<CallNode>(b.node);
    if (c.fn != o.fn || c.args.size() != o.args.size()) return false;
    for (std::size_t i = 0; i < c.args.size(); ++i) {
        if (!equivalent(*c.args[i], ha, *o.args[i], hb, level)) return false;
    }
    return true;
}

CellGroups oracle_partition(const Workbook& w, EquivalenceLevel level) {
    std::vector<std::vector<CellId>> groups;
    for (const auto& id : w.cell_ids()) {
        const auto* cell = w.find(id);
        if (!cell->is_formula()) continue;
        bool placed = false;
        for (auto& g : groups) {
            const auto& rep = g.front();
            if (equivalent(*cell->formula(), id.addr, *w.find(rep)->formula(), rep.addr, level)) {
                g.push_back(id);
                placed = true;
                break;
            }
        }
        if (!placed) groups.push_back({id});
    }
    CellGroups out;
    for (const auto& g : groups) out.insert(std::set<CellId>(g.begin(), g.end()));
    return out;
}

CellGroups as_groups(const std::vector<LogicalArea>& areas) {
    CellGroups out;
    for (const auto& a : areas) out.insert(std::set<CellId>(a.members.begin(), a.members.end()));
    return out;
}

CycleOracle oracle_cycles(const Workbook& w) {
    // precedent -> dependents, resolved straight from the formulas
    std::map<CellId, std::set<CellId>> succ;
    for (const auto& id : w.cell_ids()) {
        const auto* cell = w.find(id);
        if (!cell->is_formula()) continue;
        auto target_sheet = [&](const CellRef& r) -> std::optional<std::string> {
            if (r.book) return std::nullopt;
            std::string s = r.sheet.value_or(id.sheet);
            if (!w.find_sheet(s)) return std::nullopt;
            return s;
        };
        for_each_reference(*cell->formula(), [&](const Expr& e) {
            if (const auto* r = std::get_if<RefNode>(&e.node)) {
                if (auto s = target_sheet(r->ref)) succ[{*s, {r->ref.col, r->ref.row}}].insert(id);
                return;
            }
            const auto& range = std::get<RangeNode>(e.node);
            auto s = target_sheet(range.first);
            if (!s) return;
            for (int c = std::min(range.first.col, range.last.col); c <= std::max(range.first.col, range.last.col); ++c) {
                for (int r = std::min(range.first.row, range.last.row); r <= std::max(range.first.row, range.last.row); ++r) {
                    succ[{*s, {c, r}}].insert(id);
                }
            }
        });
    }
    auto reach = [&](const CellId& from) {
        std::set<CellId> seen;
        std::vector<CellId> stack{from};
        while (!stack.empty()) {
            auto v = stack.back();
            stack.pop_back();
            auto it = succ.find(v);
            if (it == succ.end()) continue;
            for (const auto& d : it->second) {
                if (seen.insert(d).second) stack.push_back(d);
            }
        }
        return seen;
    };
    CycleOracle out;
    std::map<CellId, std::set<CellId>> reachable;
    for (const auto& [v, ignored] : succ) reachable[v] = reach(v);
    for (const auto& [v, r] : reachable) {
        if (r.count(v)) out.on_cycle.insert(v);
    }
    for (const auto& c : out.on_cycle) {
        out.tainted.insert(c);
        out.tainted.insert(reachable[c].begin(), reachable[c].end());
    }
    return out;
}

std::set<std::pair<CellId, AnomalyKind>> oracle_breaks(const Workbook& w, const std::vector<LogicalArea>& copy_areas,
                                                       int threshold) {
    std::map<CellId, long> area_of;
    for (const auto& a : copy_areas) {
        for (const auto& m : a.members) area_of[m] = a.id;
    }
    std::set<std::pair<CellId, AnomalyKind>> out;
    for (const auto& sheet : w.sheets()) {
        if (sheet.cells().empty()) continue;
        int max_col = 1;
        int max_row = 1;
        for (const auto& [addr, cell] : sheet.cells()) {
            max_col = std::max(max_col, addr.col);
            max_row = std::max(max_row, addr.row);
        }
        // Dense label grid with a one-cell margin of empties.
        const int W = max_col + 2;
        const int H = max_row + 2;
        std::vector<std::vector<long>> grid(H + 1, std::vector<long>(W + 1, -2));
        for (const auto& [addr, cell] : sheet.cells()) {
            grid[addr.row][addr.col] = cell.is_formula() ? area_of.at({sheet.name(), addr}) : -1;
        }
        auto at = [&](int c, int r) { return (c < 1 || r < 1 || c > W || r > H) ? -3L : grid[r][c]; };
        for (int r = 1; r <= H; ++r) {
            for (int c = 1; c <= W; ++c) {
                for (auto kind : {AnomalyKind::ColBreak, AnomalyKind::RowBreak}) {
                    const int dc = kind == AnomalyKind::RowBreak ? 1 : 0;
                    const int dr = 1 - dc;
                    const long before = at(c - dc, r - dr);
                    if (before < 0 || before != at(c + dc, r + dr) || at(c, r) == before) continue;
                    int len = 1;
                    for (int k = 1; at(c - k * dc, r - k * dr) == before; ++k) ++len;
                    for (int k = 1; at(c + k * dc, r + k * dr) == before; ++k) ++len;
                    if (len >= threshold) out.insert({{sheet.name(), {c, r}}, kind});
                }
            }
        }
    }
    return out;
}

int oracle_max_repeats(const SheetFingerprints& fp, int height) {
    const int rows = static_cast<int>(fp.rows.size());
    int best = 0;
    for (int s = 0; s + height <= rows; ++s) {
        int count = 0;
        int next_free = 0;
        for (int t = 0; t + height <= rows; ++t) {
            if (t < next_free) continue;
            bool same = true;
            for (int k = 0; k < height && same; ++k) same = fp.rows[s + k] == fp.rows[t + k];
            if (same) {
                ++count;
                next_free = t + height;
            }
        }
        best = std::max(best, count);
    }
    return best;
}

}  // namespace sheetguard::testing
