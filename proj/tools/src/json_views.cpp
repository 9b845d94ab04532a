#include "json_views.hpp"

#include <sheetguard/digest.hpp>
#include <sheetguard/error.hpp>

namespace sheetguard::tools::views {

std::string render(const json& doc) { return doc.dump(2) + "\n"; }

json value(const CellValue& v) {
    if (const auto* d = std::get_if<double>(&v)) return *d;
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    if (const auto* b = std::get_if<bool>(&v)) return *b;
    return {{"error", to_string(std::get<ErrorValue>(v).code)}};
}

json interval(const Interval& iv) {
    if (iv.is_top()) return {{"top", true}, {"text", "TOP"}};
    return {{"lo", iv.lo()}, {"hi", iv.hi()}, {"text", to_string(iv)}};
}

json anomaly(const Anomaly& a) {
    return {{"kind", to_string(a.kind)},
            {"cell", to_string(a.cell)},
            {"severity", to_string(a.severity)},
            {"context", a.context}};
}

namespace {

json cell_list(const std::vector<CellId>& cells) {
    json out = json::array();
    for (const auto& c : cells) out.push_back(to_string(c));
    return out;
}

}  // namespace

json workbook(const Analysis& a) {
    json sheets = json::array();
    for (const auto& sheet : a.workbook.sheets()) {
        json cells = json::array();
        for (const auto& [addr, cell] : sheet.cells()) {
            CellId id{sheet.name(), addr};
            cells.push_back({{"cell", to_a1(addr)},
                             {"kind", cell.is_formula() ? "formula" : "constant"},
                             {"content", print_content(cell)},
                             {"hidden", cell.hidden},
                             {"locked", cell.locked},
                             {"role", to_string(a.roles.at(id))}});
        }
        sheets.push_back({{"name", sheet.name()}, {"cells", cells}});
    }
    return {{"name", a.workbook.name()}, {"sheets", sheets}};
}

json values(const Workbook& w, const ValueMap& values) {
    json out = json::array();
    for (const auto& id : w.cell_ids()) {
        const auto& v = values.at(id);
        out.push_back({{"cell", to_string(id)}, {"value", value(v)}, {"display", print_value(v)}});
    }
    return {{"values", out}};
}

json areas(const Analysis& a, EquivalenceLevel level) {
    const auto list = level == EquivalenceLevel::Copy ? a.copy_areas : partition(a.workbook, level);
    json out = json::array();
    for (const auto& area : list) {
        out.push_back({{"id", area.id},
                       {"level", to_string(area.level)},
                       {"size", area.members.size()},
                       {"signature", area.signature},
                       {"members", cell_list(area.members)}});
    }
    return {{"level", to_string(level)}, {"areas", out}};
}

json anomalies(const std::vector<Anomaly>& list) {
    json out = json::array();
    json counts = {{"ALERT", 0}, {"WARN", 0}, {"INFO", 0}};
    for (const auto& a : list) {
        out.push_back(anomaly(a));
        counts[std::string(to_string(a.severity))] = counts[std::string(to_string(a.severity))].get<int>() + 1;
    }
    return {{"anomalies", out}, {"counts", counts}};
}

json classes(const Analysis& a) {
    json out = json::array();
    for (const auto& c : detect_semantic_classes(a.workbook, a.copy_areas)) {
        out.push_back({{"sheet", c.sheet},
                       {"height", c.block_height},
                       {"occurrences", c.occurrences},
                       {"columns", {column_letters(c.column_span.first), column_letters(c.column_span.second)}},
                       {"row_fingerprints", c.row_fingerprints}});
    }
    return {{"classes", out}};
}

json flow(const Analysis& a, const std::string& cell, const std::string& direction) {
    const auto& g = a.graph;
    if (cell.empty()) {
        json nodes = json::array();
        for (FlowGraph::Node v = 0; v < g.nodes().size(); ++v) {
            auto rank = g.topo_rank(v);
            nodes.push_back({{"cell", to_string(g.id(v))},
                             {"implicit", g.implicit(v)},
                             {"in_cycle", g.in_cycle(v)},
                             {"cycle_tainted", g.cycle_tainted(v)},
                             {"rank", rank == FlowGraph::npos ? json(nullptr) : json(rank)}});
        }
        json edges = json::array();
        for (const auto& [from, to] : g.edges()) edges.push_back({to_string(g.id(from)), to_string(g.id(to))});
        json cycles = json::array();
        for (const auto& cycle : g.cycles()) {
            json members = json::array();
            for (auto v : cycle) members.push_back(to_string(g.id(v)));
            cycles.push_back(members);
        }
        json order = json::array();
        for (auto v : g.topo_order()) order.push_back(to_string(g.id(v)));
        return {{"nodes", nodes}, {"edges", edges}, {"cycles", cycles}, {"order", order}};
    }

    auto id = parse_cell_id(cell);
    if (!id) throw UsageError("bad cell '" + cell + "'");
    if (!g.index_of(*id)) throw NotFoundError("cell " + cell + " is not in the flow graph");
    const auto dir = direction.empty() ? std::string("precedents") : direction;
    if (dir != "precedents" && dir != "dependents") throw UsageError("direction must be precedents or dependents");
    auto query = dir == "precedents" ? precedents : dependents;
    return {{"cell", to_string(*id)},
            {"direction", dir},
            {"direct", cell_list(query(g, *id, false))},
            {"transitive", cell_list(query(g, *id, true))}};
}

namespace {

json verdict_list(const AssertionReport& report) {
    json out = json::array();
    for (const auto& v : report.verdicts) {
        out.push_back({{"cell", to_string(v.cell)},
                       {"computed", interval(v.computed)},
                       {"expected", interval(v.expected)},
                       {"actual", value(v.actual)},
                       {"status", to_string(v.status)}});
    }
    return out;
}

}  // namespace

json intervals(const Analysis& a) {
    auto result = eval_intervals(a.workbook, a.graph, a.policy.assertions);
    auto report = check_assertions(a.workbook, a.graph, a.policy.assertions);
    json cells = json::array();
    for (const auto& id : a.workbook.cell_ids()) {
        auto it = result.intervals.find(id);
        if (it == result.intervals.end()) continue;
        cells.push_back({{"cell", to_string(id)}, {"interval", interval(it->second)}});
    }
    return {{"intervals", cells},
            {"verdicts", verdict_list(report)},
            {"unasserted_inputs", cell_list(report.unasserted_inputs)},
            {"policy_errors", report.policy_errors}};
}

json roles(const RoleMap& roles) {
    json out = json::array();
    for (const auto& [id, role] : roles.roles) out.push_back({{"cell", to_string(id)}, {"role", to_string(role)}});
    return {{"roles", out}, {"warnings", roles.warnings}};
}

json separation(const Separation& s) {
    auto pairs = [](const std::vector<std::pair<CellId, CellId>>& list) {
        json out = json::array();
        for (const auto& [from, to] : list) out.push_back({{"cell", to_string(from)}, {"front", to_string(to)}});
        return out;
    };
    return {{"inputs", pairs(s.report.inputs)},
            {"outputs", pairs(s.report.outputs)},
            {"preserved", s.report.preserved},
            {"value_diffs", s.report.value_diffs},
            {"workbook", print_workbook(s.workbook)}};
}

json manifest(const SealManifest& m) { return json::parse(manifest_to_json(m)); }

json seal_status(const Analysis& a, const SealInput& input) {
    json doc = {{"digest", a.program_digest()},
                {"role_digest", sha256_hex(serialize_roles(a.roles))},
                {"policy_digest", a.policy_digest}};
    if (!input.manifest) {
        doc["status"] = "UNSEALED";
        return doc;
    }
    std::optional<std::string_view> retained;
    if (input.retained) retained = *input.retained;
    std::optional<std::string_view> policy;
    if (a.policy_digest != "-") policy = a.policy_digest;
    auto r = verify_seal(a.workbook, a.roles, *input.manifest, retained, policy);
    doc["status"] = r.match ? "MATCH" : "MISMATCH";
    doc["manifest"] = manifest(*input.manifest);
    doc["checks"] = {{"digest", r.digest_match}, {"role_digest", r.role_match}, {"policy_digest", r.policy_match}};
    json diff = json::array();
    for (const auto& d : r.diff) {
        diff.push_back({{"change", to_string(d.kind)}, {"cell", d.cell}, {"before", d.before}, {"after", d.after}});
    }
    doc["diff_available"] = r.diff_available;
    doc["diff"] = diff;
    return doc;
}

json item(const AuditItem& item) {
    json flags = json::array();
    for (const auto& f : item.flags) flags.push_back(anomaly(f));
    json doc = {{"id", item.id},
                {"subject", item.subject},
                {"covered_cells", cell_list(item.covered_cells)},
                {"flags", flags},
                {"state", to_string(item.state)},
                {"note", item.note}};
    if (item.depth >= 0) doc["depth"] = item.depth;
    return doc;
}

json session(const AuditSession& s) {
    json items = json::array();
    for (const auto& i : s.plan().items) items.push_back(item(i));
    json findings = json::array();
    for (const auto& f : s.findings()) {
        findings.push_back({{"subject", f.subject}, {"severity", to_string(f.severity)}, {"text", f.text}});
    }
    return {{"id", s.id()},
            {"strategy", to_string(s.plan().strategy)},
            {"forward", s.plan().forward},
            {"status", s.status()},
            {"coverage", s.coverage()},
            {"budget_minutes", s.budget_minutes()},
            {"elapsed_minutes", s.elapsed_minutes()},
            {"over_budget", s.over_budget()},
            {"workbook_digest", s.workbook_digest()},
            {"created_at", s.created_at()},
            {"findings", findings},
            {"items", items}};
}

json next(const AuditSession& s) {
    const auto* i = s.next_item();
    return {{"session", s.id()}, {"done", i == nullptr}, {"item", i ? item(*i) : json(nullptr)}};
}

json whatif(const Analysis& a, const json& request) {
    if (!request.is_object() || !request.contains("values") || !request["values"].is_object()) {
        throw UsageError("expected {\"values\": {\"Sheet!A1\": value, ...}}");
    }
    Workbook w = a.workbook;
    for (const auto& [key, v] : request["values"].items()) {
        auto id = parse_cell_id(key);
        auto role = id ? a.roles.roles.find(*id) : a.roles.roles.end();
        if (role == a.roles.roles.end() || role->second != Role::Input) throw UsageError("not an input cell: " + key);
        Literal lit;
        if (v.is_number()) {
            lit = v.get<double>();
        } else if (v.is_string()) {
            lit = v.get<std::string>();
        } else if (v.is_boolean()) {
            lit = v.get<bool>();
        } else {
            throw UsageError("bad value for " + key);
        }
        auto cell = *w.find(*id);
        cell.content = lit;
        w.set(*id, cell);
    }
    auto g = build_flow_graph(w);
    auto doc = values(w, evaluate(w, g));
    doc["verdicts"] = verdict_list(check_assertions(w, g, a.policy.assertions));
    doc["digest"] = sha256_hex(canonical_serialize_program(w, a.roles));
    return doc;
}

json error(const std::string& message) { return {{"error", message}}; }

}  // namespace sheetguard::tools::views
