#include "properties.hpp"

#include <sheetguard/areas.hpp>
#include <sheetguard/flowgraph.hpp>

#include <algorithm>
#include <cmath>

namespace sheetguard::testing {

GenOptions soundness_options(Rng& rng) {
    GenOptions o;
    o.sheets = uniform(rng, 1, 2);
    o.rows = uniform(rng, 6, 14);
    o.cols = uniform(rng, 3, 6);
    o.max_cells = 200;
    o.numeric_only = true;
    o.hidden_ratio = 0;
    o.max_depth = 3;
    return o;
}

void check_soundness(Rng& rng, const Workbook& w, int draws, SoundnessStats& stats) {
    auto g = build_flow_graph(w);
    AssertionSet assertions;
    std::vector<CellId> sources;
    for (const auto& id : w.cell_ids()) {
        const auto* cell = w.find(id);
        if (cell->is_formula() || !std::holds_alternative<double>(cell->literal())) continue;
        if (g.direct_dependents(*g.index_of(id)).empty()) continue;
        const double v = std::get<double>(cell->literal());
        if (chance(rng, 0.15)) {
            assertions.emplace(id, Interval::point(v));
        } else {
            const double spread = std::abs(v) + 5;
            assertions.emplace(id, Interval(v - uniform_real(rng, 0, spread), v + uniform_real(rng, 0, spread)));
        }
        sources.push_back(id);
    }
    const auto computed = eval_intervals(w, g, assertions).intervals;

    for (int d = 0; d < draws; ++d) {
        Workbook drawn = w;
        for (const auto& s : sources) {
            const auto& iv = assertions.at(s);
            const int mode = uniform(rng, 0, 9);
            double x = mode == 0 ? iv.lo() : mode == 1 ? iv.hi() : uniform_real(rng, iv.lo(), iv.hi());
            if (mode == 2 && iv.contains(std::round(x))) x = std::round(x);
            const auto* cell = w.find(s);
            drawn.set(s, Cell::constant(x, cell->hidden, cell->locked));
        }
        ++stats.draws;
        const auto values = evaluate(drawn, g);
        for (const auto& [id, v] : values) {
            const auto* x = std::get_if<double>(&v);
            if (!x) continue;
            const auto& iv = computed.at(id);
            if (iv.is_top()) continue;
            ++stats.checks;
            if (!iv.contains(*x)) {
                ++stats.violations;
                if (stats.examples.size() < 5) {
                    stats.examples.push_back(to_string(id) + " = " + format_number(*x) + " outside " + to_string(iv) +
                                             "\n" + print_workbook(drawn));
                }
            }
        }
    }
}

bool planted_detected(const Workbook& w, const CellId& target, PlantKind kind) {
    auto g = build_flow_graph(w);
    auto list = detect_anomalies(w, partition(w, EquivalenceLevel::Copy), g);
    return std::any_of(list.begin(), list.end(), [&](const Anomaly& a) {
        if (a.cell != target) return false;
        const bool structural = a.kind == AnomalyKind::ColBreak || a.kind == AnomalyKind::RowBreak ||
                                a.kind == AnomalyKind::NearClone;
        if (kind == PlantKind::HiddenExternal) {
            return structural || a.kind == AnomalyKind::HiddenFormula || a.kind == AnomalyKind::ExternalRef;
        }
        return structural;
    });
}

namespace {

ExprPtr altered_formula(Rng& rng, const ExprPtr& f) {
    switch (uniform(rng, 0, 2)) {
        case 0: {
            bool moved = false;
            auto out = map_refs(f, [&](const CellRef& r) {
                if (moved) return r;
                moved = true;
                CellRef n = r;
                n.row += 1;
                return n;
            });
            if (moved) return out;
            [[fallthrough]];
        }
        case 1: return make_binary(BinaryOp::Mul, f, make_number(uniform(rng, 2, 9)));
        default: return make_binary(BinaryOp::Add, f, make_number(0));
    }
}

Literal altered_literal(const Literal& lit) {
    if (const auto* d = std::get_if<double>(&lit)) return *d + 1;
    if (const auto* s = std::get_if<std::string>(&lit)) return *s + "x";
    return !std::get<bool>(lit);
}

}  // namespace

std::string mutate_sealed(Rng& rng, Workbook& w, const RoleMap& roles) {
    const auto ids = w.cell_ids();
    const int pick = uniform(rng, 0, 99);
    if (pick < 10 || ids.empty()) {
        const auto& sheet = w.sheets()[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(w.sheets().size()) - 1))];
        CellId at{sheet.name(), {uniform(rng, 1, 30), uniform(rng, 1, 40)}};
        while (w.find(at)) at.addr.row += 1;
        if (chance(rng, 0.5)) {
            w.set(at, Cell::formula_cell(make_ref(CellRef{"Ext", "S", 2, 2, false, false}), true));
            return "added hidden " + to_string(at);
        }
        w.set(at, Cell::constant(std::string("note")));
        return "added label " + to_string(at);
    }
    const auto& target = ids[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(ids.size()) - 1))];
    Cell cell = *w.find(target);
    const bool input = roles.at(target) == Role::Input;
    if (pick < 15) {
        w.find_sheet(target.sheet)->erase(target.addr);
        return "removed " + to_string(target);
    }
    if (pick < 40 || (input && pick < 70)) {
        cell.hidden = !cell.hidden;
        w.set(target, cell);
        return "toggled hidden on " + to_string(target);
    }
    if (pick < 60 || input) {
        cell.locked = !cell.locked;
        w.set(target, cell);
        return "toggled locked on " + to_string(target);
    }
    if (cell.is_formula()) {
        if (chance(rng, 0.3)) {
            w.set(target, Cell::constant(random_number(rng), cell.hidden, cell.locked));
            return "overwrote formula " + to_string(target);
        }
        cell.content = Formula{altered_formula(rng, cell.formula())};
        w.set(target, cell);
        return "edited formula " + to_string(target);
    }
    cell.content = altered_literal(cell.literal());
    w.set(target, cell);
    return "edited label " + to_string(target);
}

bool mutate_input(Rng& rng, Workbook& w, const RoleMap& roles) {
    std::vector<CellId> inputs;
    for (const auto& [id, role] : roles.roles) {
        if (role == Role::Input) inputs.push_back(id);
    }
    if (inputs.empty()) return false;
    const auto& target = inputs[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(inputs.size()) - 1))];
    Cell cell = *w.find(target);
    cell.content = Literal(random_number(rng) + uniform(rng, 1, 1000));
    w.set(target, cell);
    return true;
}

namespace {

bool single_reference(const Cell& c) { return c.is_formula() && std::holds_alternative<RefNode>(c.formula()->node); }

}  // namespace

std::string check_separation(const Workbook& w, const RoleMap& roles, const Separation& s) {
    const auto& out = s.workbook;
    if (out.sheets().empty() || out.sheets().front().name() != kFrontSheet) return "Front is not the first sheet";
    if (!s.report.preserved) return "report says not preserved";

    const auto before = evaluate(w, build_flow_graph(w));
    const auto after = evaluate(out, build_flow_graph(out));
    for (const auto& [id, role] : roles.roles) {
        if (role != Role::Output) continue;
        if (!values_identical(before.at(id), after.at(id))) {
            return "output " + to_string(id) + " changed from " + print_value(before.at(id)) + " to " +
                   print_value(after.at(id));
        }
    }

    // Front holds constants and single references only.
    const auto& front = out.sheets().front();
    for (const auto& [addr, cell] : front.cells()) {
        if (cell.is_formula() && !single_reference(cell)) return "Front!" + to_a1(addr) + " is not a single reference";
    }
    std::size_t inputs = 0;
    for (const auto& [id, role] : roles.roles) {
        if (role != Role::Input) continue;
        ++inputs;
        const auto* moved = out.find(id);
        if (!moved || !single_reference(*moved)) return to_string(id) + " still holds an input constant";
        const auto& ref = std::get<RefNode>(moved->formula()->node).ref;
        if (ref.sheet != std::string(kFrontSheet)) return to_string(id) + " does not point at Front";
        const auto* value = front.find({ref.col, ref.row});
        if (!value || value->is_formula() || !literal_equal(value->literal(), w.find(id)->literal())) {
            return "Front value for " + to_string(id) + " is wrong";
        }
        if (value->locked) return "Front input for " + to_string(id) + " is locked";
    }
    if (s.report.inputs.size() != inputs) return "input mapping is incomplete";

    const auto after_roles = infer_roles(out, build_flow_graph(out));
    for (const auto& [id, role] : after_roles.roles) {
        if (id.sheet == kFrontSheet) continue;
        if (role == Role::Input) return to_string(id) + " is an INPUT outside Front";
        if (!out.find(id)->locked) return to_string(id) + " is not locked";
    }
    return "";
}

std::string check_audit_economy(Rng& rng, const Workbook& w) {
    const auto g = build_flow_graph(w);
    const auto copy = partition(w, EquivalenceLevel::Copy);
    const auto anomalies = detect_anomalies(w, copy, g);
    const auto digest = program_digest(w);
    std::size_t formulas = 0;
    for (const auto& id : w.cell_ids()) formulas += w.find(id)->is_formula() ? 1 : 0;

    struct Run {
        Strategy strategy;
        bool forward;
    };
    for (auto run : {Run{Strategy::Scan, false}, Run{Strategy::Flow, false}, Run{Strategy::Flow, true},
                     Run{Strategy::Areas, false}}) {
        const auto plan = plan_audit(w, g, &copy, anomalies, run.strategy, run.forward);
        const std::string name(to_string(run.strategy));
        std::size_t flags = 0;
        for (const auto& item : plan.items) flags += item.flags.size();
        if (!plan.items.empty() && flags != anomalies.size()) return name + ": anomalies not attached exactly once";
        if (run.strategy == Strategy::Areas) {
            if (plan.items.size() != copy.size()) return "AREAS: item count differs from area count";
            if (plan.items.size() > formulas) return "AREAS: more items than formula cells";
            bool unflagged_seen = false;
            for (const auto& item : plan.items) {
                if (item.flags.empty() && item.covered_cells.size() > 1) unflagged_seen = true;
                if (!item.flags.empty() && unflagged_seen) return "AREAS: flagged item after an unflagged area";
            }
        }
        if (run.strategy == Strategy::Scan) {
            auto all = w.cell_ids();
            if (plan.universe() != std::set<CellId>(all.begin(), all.end())) return "SCAN: universe is not every cell";
        }

        AuditSession s("t", plan, 30, digest, "2026-01-01T00:00:00Z");
        double last = s.coverage();
        double clock = 0;
        while (const auto* item = s.next_item()) {
            const int id = item->id;
            if (chance(rng, 0.2)) {
                s.mark(id, ItemState::Suspect, "looks wrong");
                if (chance(rng, 0.5)) s.mark(id, ItemState::Checked, "resolved");
            } else {
                s.mark(id, ItemState::Checked);
            }
            clock += uniform_real(rng, 0, 2);
            s.set_elapsed(clock);
            if (s.coverage() < last) return name + ": coverage decreased";
            last = s.coverage();
        }
        if (s.coverage() != 1.0) return name + ": coverage " + std::to_string(s.coverage()) + " after completion";
        if (s.status() != "done" && s.status() != "over budget") return name + ": status " + s.status();
    }
    return "";
}

}  // namespace sheetguard::testing
