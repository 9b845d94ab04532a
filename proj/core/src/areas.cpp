#include "sheetguard/areas.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>

namespace sheetguard {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Replaces literals (and, for Structural, references) with fixed placeholder
// nodes so the normalized printer can produce the signature.
ExprPtr mask(const ExprPtr& e, EquivalenceLevel level) {
    static const ExprPtr literal_marker = make_text("#");
    static const ExprPtr ref_marker = make_ref(CellRef{std::nullopt, std::nullopt, 0, 0, false, false});
    return std::visit(
        Overloaded{
            [&](const NumberNode&) { return literal_marker; },
            [&](const TextNode&) { return literal_marker; },
            [&](const BooleanNode&) { return literal_marker; },
            [&](const RefNode&) { return level == EquivalenceLevel::Structural ? ref_marker : e; },
            [&](const RangeNode&) { return level == EquivalenceLevel::Structural ? ref_marker : e; },
            [&](const UnaryNode& u) { return make_unary(u.op, mask(u.operand, level)); },
            [&](const BinaryNode& b) { return make_binary(b.op, mask(b.lhs, level), mask(b.rhs, level)); },
            [&](const CallNode& c) {
                std::vector<ExprPtr> args;
                for (const auto& a : c.args) args.push_back(mask(a, level));
                return make_call(c.fn, std::move(args));
            },
        },
        e->node);
}

void collect_subtree_texts(const ExprPtr& e, std::set<std::string>& out) {
    out.insert(NormalizedFormula{e}.text());
    std::visit(Overloaded{
                   [&](const UnaryNode& u) { collect_subtree_texts(u.operand, out); },
                   [&](const BinaryNode& b) {
                       collect_subtree_texts(b.lhs, out);
                       collect_subtree_texts(b.rhs, out);
                   },
                   [&](const CallNode& c) {
                       for (const auto& a : c.args) collect_subtree_texts(a, out);
                   },
                   [](const auto&) {},
               },
               e->node);
}

// a's normalized form occurs as a subtree of b's (or is equal to it).
bool embeds(const NormalizedFormula& a, const NormalizedFormula& b) {
    std::set<std::string> subtrees;
    collect_subtree_texts(b.ast, subtrees);
    return subtrees.count(a.text()) > 0;
}

std::string range_text(const std::string& sheet, Address from, Address to) {
    return sheet + "!" + to_a1(from) + ":" + to_a1(to);
}

}  // namespace

std::string_view to_string(EquivalenceLevel level) noexcept {
    switch (level) {
        case EquivalenceLevel::Copy: return "COPY";
        case EquivalenceLevel::Logical: return "LOGICAL";
        case EquivalenceLevel::Structural: return "STRUCTURAL";
    }
    return "?";
}

std::optional<EquivalenceLevel> parse_level(std::string_view text) noexcept {
    if (text == "copy" || text == "COPY") return EquivalenceLevel::Copy;
    if (text == "logical" || text == "LOGICAL") return EquivalenceLevel::Logical;
    if (text == "structural" || text == "STRUCTURAL") return EquivalenceLevel::Structural;
    return std::nullopt;
}

std::string_view to_string(AnomalyKind kind) noexcept {
    switch (kind) {
        case AnomalyKind::RowBreak: return "ROW_BREAK";
        case AnomalyKind::ColBreak: return "COL_BREAK";
        case AnomalyKind::NearClone: return "NEAR_CLONE";
        case AnomalyKind::HiddenFormula: return "HIDDEN_FORMULA";
        case AnomalyKind::ExternalRef: return "EXTERNAL_REF";
        case AnomalyKind::RefToHidden: return "REF_TO_HIDDEN";
    }
    return "?";
}

std::string_view to_string(Severity severity) noexcept {
    switch (severity) {
        case Severity::Info: return "INFO";
        case Severity::Warn: return "WARN";
        case Severity::Alert: return "ALERT";
    }
    return "?";
}

std::optional<AnomalyKind> parse_anomaly_kind(std::string_view text) noexcept {
    for (auto k : {AnomalyKind::RowBreak, AnomalyKind::ColBreak, AnomalyKind::NearClone, AnomalyKind::HiddenFormula,
                   AnomalyKind::ExternalRef, AnomalyKind::RefToHidden}) {
        if (to_string(k) == text) return k;
    }
    return std::nullopt;
}

std::optional<Severity> parse_severity(std::string_view text) noexcept {
    for (auto s : {Severity::Info, Severity::Warn, Severity::Alert}) {
        if (to_string(s) == text) return s;
    }
    return std::nullopt;
}

std::string area_signature(const Expr& ast, Address host, EquivalenceLevel level) {
    auto normalized = normalize_copy_relative(ast, host);
    if (level == EquivalenceLevel::Copy) return normalized.text();
    return NormalizedFormula{mask(normalized.ast, level)}.text();
}

std::vector<LogicalArea> partition(const Workbook& w, EquivalenceLevel level) {
    std::vector<LogicalArea> areas;
    std::unordered_map<std::string, std::size_t> by_signature;
    for (const auto& sheet : w.sheets()) {
        for (const auto& [addr, cell] : sheet.cells()) {
            if (!cell.is_formula()) continue;
            auto sig = area_signature(*cell.formula(), addr, level);
            auto [it, inserted] = by_signature.try_emplace(sig, areas.size());
            if (inserted) {
                LogicalArea area;
                area.id = static_cast<int>(areas.size());
                area.level = level;
                area.signature = std::move(sig);
                areas.push_back(std::move(area));
            }
            areas[it->second].members.push_back({sheet.name(), addr});
        }
    }
    return areas;
}

std::vector<Anomaly> detect_anomalies(const Workbook& w, const std::vector<LogicalArea>& copy_areas, const FlowGraph& g,
                                      const AnomalyOptions& options) {
    std::vector<Anomaly> out;
    std::map<CellId, int> area_of;
    for (const auto& area : copy_areas) {
        for (const auto& m : area.members) area_of.emplace(m, area.id);
    }

    for (const auto& sheet : w.sheets()) {
        auto label = [&](Address a) -> long {
            const auto* cell = sheet.find(a);
            if (!cell) return kFingerprintEmpty;
            if (!cell->is_formula()) return kFingerprintConst;
            return area_of.at({sheet.name(), a});
        };
        auto in_grid = [](Address a) { return a.col >= 1 && a.row >= 1 && a.col <= kMaxColumn && a.row <= kMaxRow; };

        // Breaks: a focus cell whose two neighbours along a line share an area
        // it does not belong to. Anchors are the formula cells before the focus.
        std::set<std::pair<Address, AnomalyKind>> reported;
        for (const auto& [addr, cell] : sheet.cells()) {
            if (!cell.is_formula()) continue;
            const long area = label(addr);
            for (auto kind : {AnomalyKind::ColBreak, AnomalyKind::RowBreak}) {
                const int dc = kind == AnomalyKind::RowBreak ? 1 : 0;
                const int dr = kind == AnomalyKind::ColBreak ? 1 : 0;
                Address focus{addr.col + dc, addr.row + dr};
                Address after{focus.col + dc, focus.row + dr};
                if (!in_grid(after) || label(focus) == area || label(after) != area) continue;
                if (reported.count({focus, kind})) continue;
                int before_len = 0;
                for (Address p = addr; in_grid(p) && label(p) == area; p = {p.col - dc, p.row - dr}) ++before_len;
                int after_len = 0;
                for (Address p = after; in_grid(p) && label(p) == area; p = {p.col + dc, p.row + dr}) ++after_len;
                if (before_len + 1 + after_len < options.run_threshold) continue;
                reported.insert({focus, kind});
                Address run_start{focus.col - dc * before_len, focus.row - dr * before_len};
                Address run_end{focus.col + dc * after_len, focus.row + dr * after_len};
                const auto* focus_cell = sheet.find(focus);
                std::string what = !focus_cell ? "an empty cell"
                                   : !focus_cell->is_formula()
                                       ? "a constant"
                                       : "area " + std::to_string(label(focus)) + " " + copy_areas[label(focus)].signature;
                out.push_back({kind,
                               {sheet.name(), focus},
                               std::string(kind == AnomalyKind::ColBreak ? "column" : "row") + " run " +
                                   range_text(sheet.name(), run_start, run_end) + " of area " + std::to_string(area) + " " +
                                   copy_areas[area].signature + " interrupted by " + what,
                               Severity::Warn});
            }
        }

        // Near clones: a singleton area next to a large area it nearly copies.
        for (const auto& [addr, cell] : sheet.cells()) {
            if (!cell.is_formula()) continue;
            const auto& own = copy_areas[label(addr)];
            if (own.members.size() != 1) continue;
            auto own_norm = normalize_copy_relative(*cell.formula(), addr);
            auto own_logical = area_signature(*cell.formula(), addr, EquivalenceLevel::Logical);
            std::set<long> seen;
            for (Address n : {Address{addr.col, addr.row - 1}, Address{addr.col, addr.row + 1}, Address{addr.col - 1, addr.row},
                              Address{addr.col + 1, addr.row}}) {
                if (!in_grid(n)) continue;
                const auto* nc = sheet.find(n);
                if (!nc || !nc->is_formula()) continue;
                const long nid = label(n);
                const auto& neighbour = copy_areas[nid];
                if (neighbour.members.size() < options.near_clone_min_area || !seen.insert(nid).second) continue;
                auto n_norm = normalize_copy_relative(*nc->formula(), n);
                const bool logical = area_signature(*nc->formula(), n, EquivalenceLevel::Logical) == own_logical;
                if (!logical && !embeds(n_norm, own_norm) && !embeds(own_norm, n_norm)) continue;
                out.push_back({AnomalyKind::NearClone,
                               {sheet.name(), addr},
                               "singleton " + own.signature + (logical ? " differs only in constants from" : " nearly copies") +
                                   " area " + std::to_string(nid) + " " + neighbour.signature + " (" +
                                   std::to_string(neighbour.members.size()) + " cells)",
                               Severity::Warn});
            }
        }

        for (const auto& [addr, cell] : sheet.cells()) {
            CellId id{sheet.name(), addr};
            if (cell.hidden && cell.is_formula()) {
                out.push_back({AnomalyKind::HiddenFormula, id, "hidden formula " + print_content(cell), Severity::Warn});
            }
            if (auto ext = g.external_refs().find(id); ext != g.external_refs().end()) {
                std::string refs;
                for (const auto& r : ext->second) refs += (refs.empty() ? "" : ", ") + r;
                out.push_back({AnomalyKind::ExternalRef, id, "references external book: " + refs, Severity::Alert});
            }
            if (!cell.hidden && cell.is_formula()) {
                auto idx = g.index_of(id);
                if (!idx) continue;
                std::string hidden;
                for (auto p : g.direct_precedents(*idx)) {
                    const auto* pc = w.find(g.id(p));
                    if (pc && pc->hidden) hidden += (hidden.empty() ? "" : ", ") + to_string(g.id(p));
                }
                if (!hidden.empty()) {
                    out.push_back({AnomalyKind::RefToHidden, id, "visible cell depends on hidden " + hidden, Severity::Info});
                }
            }
        }
    }

    std::stable_sort(out.begin(), out.end(), [&](const Anomaly& a, const Anomaly& b) {
        if (a.cell != b.cell) return w.workbook_less(a.cell, b.cell);
        return a.kind < b.kind;
    });
    return out;
}

SheetFingerprints row_fingerprints(const Sheet& sheet, const std::vector<LogicalArea>& copy_areas) {
    SheetFingerprints fp;
    if (sheet.cells().empty()) return fp;
    std::map<Address, long> area_of;
    for (const auto& area : copy_areas) {
        for (const auto& m : area.members) {
            if (m.sheet == sheet.name()) area_of.emplace(m.addr, area.id);
        }
    }
    int cmin = kMaxColumn;
    int cmax = 1;
    for (const auto& [addr, cell] : sheet.cells()) {
        cmin = std::min(cmin, addr.col);
        cmax = std::max(cmax, addr.col);
    }
    fp.first_row = sheet.cells().begin()->first.row;
    const int last_row = sheet.cells().rbegin()->first.row;
    fp.column_span = {cmin, cmax};
    fp.rows.assign(static_cast<std::size_t>(last_row - fp.first_row + 1),
                   std::vector<long>(static_cast<std::size_t>(cmax - cmin + 1), kFingerprintEmpty));
    for (const auto& [addr, cell] : sheet.cells()) {
        auto& slot = fp.rows[addr.row - fp.first_row][addr.col - cmin];
        slot = cell.is_formula() ? area_of.at(addr) : kFingerprintConst;
    }
    return fp;
}

std::vector<SemanticClass> detect_semantic_classes(const Workbook& w, const std::vector<LogicalArea>& copy_areas) {
    std::vector<SemanticClass> out;
    for (const auto& sheet : w.sheets()) {
        auto fp = row_fingerprints(sheet, copy_areas);
        const auto rows = fp.rows.size();
        if (rows < 2) continue;

        // Intern row fingerprints so blocks compare as integer sequences.
        std::map<std::vector<long>, int> intern;
        std::vector<int> seq(rows);
        std::vector<bool> blank_id;
        for (std::size_t r = 0; r < rows; ++r) {
            auto [it, inserted] = intern.try_emplace(fp.rows[r], static_cast<int>(intern.size()));
            if (inserted) {
                blank_id.push_back(std::all_of(fp.rows[r].begin(), fp.rows[r].end(), [](long v) { return v == kFingerprintEmpty; }));
            }
            seq[r] = it->second;
        }

        struct Candidate {
            std::size_t height;
            std::vector<std::size_t> starts;
        };
        std::vector<Candidate> candidates;
        for (std::size_t h = 1; h * 2 <= rows; ++h) {
            std::map<std::vector<int>, std::vector<std::size_t>> groups;
            for (std::size_t s = 0; s + h <= rows; ++s) {
                groups[std::vector<int>(seq.begin() + static_cast<long>(s), seq.begin() + static_cast<long>(s + h))].push_back(s);
            }
            for (auto& [block, starts] : groups) {
                if (std::all_of(block.begin(), block.end(), [&](int id) { return blank_id[id]; })) continue;
                // Skip blocks that are themselves a repetition of a shorter block.
                bool primitive = true;
                for (std::size_t p = 1; p < h && primitive; ++p) {
                    if (h % p != 0) continue;
                    bool periodic = true;
                    for (std::size_t i = p; i < h && periodic; ++i) periodic = block[i] == block[i - p];
                    if (periodic) primitive = false;
                }
                if (!primitive) continue;
                std::vector<std::size_t> chosen;
                for (auto s : starts) {
                    if (chosen.empty() || s >= chosen.back() + h) chosen.push_back(s);
                }
                if (chosen.size() >= 2) candidates.push_back({h, std::move(chosen)});
            }
        }

        // Most rows covered first; a candidate whose rows are all covered by
        // classes already reported is subsumed.
        std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
            auto ca = a.height * a.starts.size();
            auto cb = b.height * b.starts.size();
            if (ca != cb) return ca > cb;
            if (a.height != b.height) return a.height > b.height;
            return a.starts.front() < b.starts.front();
        });
        std::vector<bool> covered(rows, false);
        std::vector<SemanticClass> sheet_classes;
        for (const auto& c : candidates) {
            bool all_covered = true;
            for (auto s : c.starts) {
                for (std::size_t r = s; r < s + c.height && all_covered; ++r) all_covered = covered[r];
            }
            if (all_covered) continue;
            for (auto s : c.starts) {
                for (std::size_t r = s; r < s + c.height; ++r) covered[r] = true;
            }
            SemanticClass cls;
            cls.sheet = sheet.name();
            cls.block_height = static_cast<int>(c.height);
            cls.column_span = fp.column_span;
            for (auto s : c.starts) cls.occurrences.push_back(fp.first_row + static_cast<int>(s));
            for (std::size_t i = 0; i < c.height; ++i) cls.row_fingerprints.push_back(fp.rows[c.starts.front() + i]);
            sheet_classes.push_back(std::move(cls));
        }
        std::stable_sort(sheet_classes.begin(), sheet_classes.end(), [](const SemanticClass& a, const SemanticClass& b) {
            if (a.block_height != b.block_height) return a.block_height > b.block_height;
            return a.occurrences.front() < b.occurrences.front();
        });
        for (auto& c : sheet_classes) out.push_back(std::move(c));
    }
    return out;
}

}  // namespace sheetguard
