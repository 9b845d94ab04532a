#include "sheetguard/audit.hpp"
#include "sheetguard/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <deque>
#include <limits>

namespace sheetguard {

using nlohmann::json;

namespace {

std::string upper(std::string_view text) {
    std::string out(text);
    for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

}  // namespace

std::string_view to_string(Strategy s) noexcept {
    switch (s) {
        case Strategy::Scan: return "SCAN";
        case Strategy::Flow: return "FLOW";
        case Strategy::Areas: return "AREAS";
    }
    return "?";
}

std::string_view to_string(ItemState s) noexcept {
    switch (s) {
        case ItemState::Unseen: return "UNSEEN";
        case ItemState::Checked: return "CHECKED";
        case ItemState::Suspect: return "SUSPECT";
    }
    return "?";
}

std::optional<Strategy> parse_strategy(std::string_view text) noexcept {
    auto up = upper(text);
    for (auto s : {Strategy::Scan, Strategy::Flow, Strategy::Areas}) {
        if (to_string(s) == up) return s;
    }
    return std::nullopt;
}

std::optional<ItemState> parse_item_state(std::string_view text) noexcept {
    auto up = upper(text);
    for (auto s : {ItemState::Unseen, ItemState::Checked, ItemState::Suspect}) {
        if (to_string(s) == up) return s;
    }
    return std::nullopt;
}

std::set<CellId> AuditPlan::universe() const {
    std::set<CellId> out;
    for (const auto& item : items) out.insert(item.covered_cells.begin(), item.covered_cells.end());
    return out;
}

namespace {

std::vector<AuditItem> scan_items(const Workbook& w) {
    std::vector<AuditItem> items;
    for (const auto& id : w.cell_ids()) {
        AuditItem item;
        item.subject = to_string(id);
        item.covered_cells = {id};
        items.push_back(std::move(item));
    }
    return items;
}

std::vector<AuditItem> flow_items(const Workbook& w, const FlowGraph& g, bool forward) {
    const auto n = g.nodes().size();
    std::vector<int> depth(n, -1);
    std::deque<FlowGraph::Node> queue;
    for (FlowGraph::Node v = 0; v < n; ++v) {
        bool start = forward ? g.direct_precedents(v).empty() : (!g.implicit(v) && g.direct_dependents(v).empty() &&
                                                                 w.find(g.id(v))->is_formula());
        if (start) {
            depth[v] = 0;
            queue.push_back(v);
        }
    }
    while (!queue.empty()) {
        auto v = queue.front();
        queue.pop_front();
        const auto& next = forward ? g.direct_dependents(v) : g.direct_precedents(v);
        for (auto u : next) {
            if (depth[u] >= 0) continue;
            depth[u] = depth[v] + 1;
            queue.push_back(u);
        }
    }

    std::vector<FlowGraph::Node> chosen;
    for (FlowGraph::Node v = 0; v < n; ++v) {
        if (depth[v] < 0 || g.implicit(v)) continue;
        // Forward traces skip constants that feed nothing (labels).
        if (forward && g.direct_dependents(v).empty() && !w.find(g.id(v))->is_formula()) continue;
        chosen.push_back(v);
    }
    std::sort(chosen.begin(), chosen.end(), [&](auto a, auto b) {
        if (depth[a] != depth[b]) return depth[a] < depth[b];
        return w.workbook_less(g.id(a), g.id(b));
    });

    std::vector<AuditItem> items;
    for (auto v : chosen) {
        AuditItem item;
        item.subject = to_string(g.id(v));
        item.covered_cells = {g.id(v)};
        item.depth = depth[v];
        items.push_back(std::move(item));
    }
    return items;
}

std::vector<AuditItem> area_items(const std::vector<LogicalArea>& areas) {
    std::vector<AuditItem> items;
    for (const auto& area : areas) {
        AuditItem item;
        item.subject = "area " + std::to_string(area.id);
        item.covered_cells = area.members;
        items.push_back(std::move(item));
    }
    return items;
}

void attach(std::vector<AuditItem>& items, const std::vector<Anomaly>& anomalies) {
    for (const auto& anomaly : anomalies) {
        AuditItem* target = nullptr;
        for (auto& item : items) {
            if (std::find(item.covered_cells.begin(), item.covered_cells.end(), anomaly.cell) != item.covered_cells.end()) {
                target = &item;
                break;
            }
        }
        if (!target) {
            long best = std::numeric_limits<long>::max();
            for (auto& item : items) {
                for (const auto& c : item.covered_cells) {
                    if (c.sheet != anomaly.cell.sheet) continue;
                    long d = std::labs(static_cast<long>(c.addr.row) - anomaly.cell.addr.row) +
                             std::labs(static_cast<long>(c.addr.col) - anomaly.cell.addr.col);
                    if (d < best) {
                        best = d;
                        target = &item;
                    }
                }
            }
        }
        if (!target && !items.empty()) target = &items.front();
        if (target) target->flags.push_back(anomaly);
    }
}

}  // namespace

AuditPlan plan_audit(const Workbook& w, const FlowGraph& g, const std::vector<LogicalArea>* copy_areas,
                     const std::vector<Anomaly>& anomalies, Strategy strategy, bool forward) {
    AuditPlan plan;
    plan.strategy = strategy;
    plan.forward = strategy == Strategy::Flow && forward;
    switch (strategy) {
        case Strategy::Scan: plan.items = scan_items(w); break;
        case Strategy::Flow: plan.items = flow_items(w, g, plan.forward); break;
        case Strategy::Areas:
            if (!copy_areas) throw UsageError("AREAS strategy requires the area analysis");
            plan.items = area_items(*copy_areas);
            break;
    }
    attach(plan.items, anomalies);
    if (strategy == Strategy::Areas) {
        std::stable_sort(plan.items.begin(), plan.items.end(), [](const AuditItem& a, const AuditItem& b) {
            auto key = [](const AuditItem& i) {
                return std::make_tuple(i.flags.empty(), i.covered_cells.size() != 1, i.covered_cells.size());
            };
            return key(a) < key(b);
        });
    }
    for (std::size_t i = 0; i < plan.items.size(); ++i) plan.items[i].id = static_cast<int>(i + 1);
    return plan;
}

AuditSession::AuditSession(std::string id, AuditPlan plan, double budget_minutes, std::string workbook_digest,
                           std::string created_at)
    : id_(std::move(id)),
      plan_(std::move(plan)),
      budget_(budget_minutes),
      created_at_(std::move(created_at)),
      digest_(std::move(workbook_digest)) {
    if (!(budget_minutes >= 0)) throw UsageError("budget must be non-negative");
}

std::string AuditSession::status() const {
    if (invalidated_) return "INVALIDATED";
    if (over_budget()) return "over budget";
    if (!next_item()) return "done";
    return "active";
}

namespace {

std::pair<std::size_t, std::size_t> covered_counts(const AuditPlan& plan) {
    std::set<CellId> covered;
    for (const auto& item : plan.items) {
        if (item.state == ItemState::Unseen) continue;
        covered.insert(item.covered_cells.begin(), item.covered_cells.end());
    }
    return {covered.size(), plan.universe().size()};
}

}  // namespace

double AuditSession::coverage() const {
    auto [covered, total] = covered_counts(plan_);
    if (total == 0) return 1.0;
    return static_cast<double>(covered) / static_cast<double>(total);
}

const AuditItem* AuditSession::next_item() const {
    if (invalidated_) throw UsageError("session " + id_ + " is invalidated");
    for (const auto& item : plan_.items) {
        if (item.state == ItemState::Unseen) return &item;
    }
    return nullptr;
}

const AuditItem& AuditSession::mark(int item_id, ItemState state, std::string note) {
    if (invalidated_) throw UsageError("session " + id_ + " is invalidated");
    if (item_id < 1 || item_id > static_cast<int>(plan_.items.size())) {
        throw NotFoundError("unknown item " + std::to_string(item_id));
    }
    auto& item = plan_.items[static_cast<std::size_t>(item_id - 1)];
    const bool legal = (item.state == ItemState::Unseen && state != ItemState::Unseen) ||
                       (item.state == ItemState::Suspect && state == ItemState::Checked);
    if (!legal) {
        throw TransitionError("illegal transition " + std::string(to_string(item.state)) + " -> " +
                              std::string(to_string(state)));
    }
    bool blank = std::all_of(note.begin(), note.end(), [](unsigned char c) { return std::isspace(c); });
    if (state == ItemState::Suspect && blank) throw UsageError("SUSPECT requires a note");
    if (item.state == ItemState::Suspect && blank) throw UsageError("resolving a SUSPECT item requires a note");

    if (state == ItemState::Suspect) {
        Severity severity = Severity::Warn;
        for (const auto& f : item.flags) severity = std::max(severity, f.severity);
        findings_.push_back({item.subject, severity, note});
    }
    item.state = state;
    item.note = std::move(note);
    return item;
}

void AuditSession::set_elapsed(double minutes) {
    if (!(minutes >= elapsed_)) throw UsageError("elapsed time may not decrease");
    elapsed_ = minutes;
}

bool operator==(const AuditItem& a, const AuditItem& b) {
    auto same_flags = std::equal(a.flags.begin(), a.flags.end(), b.flags.begin(), b.flags.end(),
                                 [](const Anomaly& x, const Anomaly& y) {
                                     return x.kind == y.kind && x.cell == y.cell && x.context == y.context &&
                                            x.severity == y.severity;
                                 });
    return a.id == b.id && a.subject == b.subject && a.covered_cells == b.covered_cells && same_flags &&
           a.state == b.state && a.note == b.note && a.depth == b.depth;
}

bool operator==(const AuditSession& a, const AuditSession& b) {
    return a.id_ == b.id_ && a.plan_.strategy == b.plan_.strategy && a.plan_.forward == b.plan_.forward &&
           a.plan_.items == b.plan_.items && a.budget_ == b.budget_ && a.elapsed_ == b.elapsed_ &&
           a.findings_ == b.findings_ && a.created_at_ == b.created_at_ && a.digest_ == b.digest_ &&
           a.invalidated_ == b.invalidated_;
}

std::string save_session(const AuditSession& s) {
    json items = json::array();
    for (const auto& item : s.plan().items) {
        json cells = json::array();
        for (const auto& c : item.covered_cells) cells.push_back(to_string(c));
        json flags = json::array();
        for (const auto& f : item.flags) {
            flags.push_back({{"kind", to_string(f.kind)},
                             {"cell", to_string(f.cell)},
                             {"context", f.context},
                             {"severity", to_string(f.severity)}});
        }
        items.push_back({{"id", item.id},
                         {"subject", item.subject},
                         {"covered_cells", cells},
                         {"flags", flags},
                         {"state", to_string(item.state)},
                         {"note", item.note},
                         {"depth", item.depth}});
    }
    json findings = json::array();
    for (const auto& f : s.findings()) {
        findings.push_back({{"subject", f.subject}, {"severity", to_string(f.severity)}, {"text", f.text}});
    }
    json doc = {
        {"format", "sgwsession 1"},
        {"id", s.id()},
        {"strategy", to_string(s.plan().strategy)},
        {"forward", s.plan().forward},
        {"items", items},
        {"budget_minutes", s.budget_minutes()},
        {"elapsed_minutes", s.elapsed_minutes()},
        {"findings", findings},
        {"created_at", s.created_at()},
        {"workbook_digest", s.workbook_digest()},
    };
    return doc.dump(2) + "\n";
}

namespace {

[[noreturn]] void malformed(const std::string& what) { throw ParseError("malformed session: " + what, 0, 0); }

template <class T>
T field(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) malformed(std::string("missing '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        malformed(std::string("bad '") + key + "'");
    }
}

CellId cell_field(const json& j, const char* key) {
    auto text = field<std::string>(j, key);
    auto id = parse_cell_id(text);
    if (!id) malformed("bad cell '" + text + "'");
    return *id;
}

}  // namespace

AuditSession load_session(std::string_view document, std::string_view current_digest) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        malformed(e.what());
    }
    if (field<std::string>(doc, "format") != "sgwsession 1") malformed("unknown format");
    auto strategy = parse_strategy(field<std::string>(doc, "strategy"));
    if (!strategy) malformed("unknown strategy");

    AuditPlan plan;
    plan.strategy = *strategy;
    plan.forward = field<bool>(doc, "forward");
    auto items = field<json>(doc, "items");
    if (!items.is_array()) malformed("items is not an array");
    for (const auto& j : items) {
        AuditItem item;
        item.id = field<int>(j, "id");
        if (item.id != static_cast<int>(plan.items.size()) + 1) malformed("item ids out of sequence");
        item.subject = field<std::string>(j, "subject");
        auto cells = field<json>(j, "covered_cells");
        if (!cells.is_array()) malformed("covered_cells is not an array");
        for (const auto& c : cells) {
            auto id = c.is_string() ? parse_cell_id(c.get<std::string>()) : std::nullopt;
            if (!id) malformed("bad covered cell");
            item.covered_cells.push_back(*id);
        }
        auto flags = field<json>(j, "flags");
        if (!flags.is_array()) malformed("flags is not an array");
        for (const auto& f : flags) {
            auto kind = parse_anomaly_kind(field<std::string>(f, "kind"));
            auto severity = parse_severity(field<std::string>(f, "severity"));
            if (!kind || !severity) malformed("bad flag");
            item.flags.push_back({*kind, cell_field(f, "cell"), field<std::string>(f, "context"), *severity});
        }
        auto state = parse_item_state(field<std::string>(j, "state"));
        if (!state) malformed("bad item state");
        item.state = *state;
        item.note = field<std::string>(j, "note");
        item.depth = field<int>(j, "depth");
        plan.items.push_back(std::move(item));
    }

    AuditSession s(field<std::string>(doc, "id"), std::move(plan), field<double>(doc, "budget_minutes"),
                   field<std::string>(doc, "workbook_digest"), field<std::string>(doc, "created_at"));
    s.elapsed_ = field<double>(doc, "elapsed_minutes");
    if (!(s.elapsed_ >= 0)) malformed("negative elapsed time");
    auto findings = field<json>(doc, "findings");
    if (!findings.is_array()) malformed("findings is not an array");
    for (const auto& f : findings) {
        auto severity = parse_severity(field<std::string>(f, "severity"));
        if (!severity) malformed("bad finding severity");
        s.findings_.push_back({field<std::string>(f, "subject"), *severity, field<std::string>(f, "text")});
    }
    if (s.digest_ != current_digest) s.invalidated_ = true;
    return s;
}

namespace {

std::string percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f%%", fraction * 100.0);
    return buf;
}

std::string seal_status(const AuditSession& s, const ReportContext& ctx) {
    if (s.invalidated()) return "INVALIDATED";
    if (ctx.current_digest.empty()) return "UNKNOWN";
    return ctx.current_digest == s.workbook_digest() ? "MATCH" : "MISMATCH";
}

}  // namespace

std::string report(const AuditSession& s, const ReportContext& ctx, ReportFormat format) {
    auto [covered, total] = covered_counts(s.plan());
    std::map<std::string, int> by_severity{{"ALERT", 0}, {"WARN", 0}, {"INFO", 0}};
    std::map<std::string, int> by_kind;
    for (const auto& a : ctx.anomalies) {
        ++by_severity[std::string(to_string(a.severity))];
        ++by_kind[std::string(to_string(a.kind))];
    }
    std::map<std::string, int> by_status;
    for (auto st : {VerdictStatus::Safe, VerdictStatus::Borderline, VerdictStatus::RangeViolation, VerdictStatus::ActualOut,
                    VerdictStatus::Indeterminate}) {
        by_status[std::string(to_string(st))] = 0;
    }
    for (const auto& v : ctx.verdicts) ++by_status[std::string(to_string(v.status))];
    const auto seal = seal_status(s, ctx);

    if (format == ReportFormat::Json) {
        json findings = json::array();
        for (const auto& f : s.findings()) {
            findings.push_back({{"subject", f.subject}, {"severity", to_string(f.severity)}, {"text", f.text}});
        }
        json doc = {
            {"session", s.id()},
            {"strategy", to_string(s.plan().strategy)},
            {"coverage", {{"fraction", s.coverage()}, {"covered_cells", covered}, {"total_cells", total}}},
            {"findings", findings},
            {"anomalies", {{"total", ctx.anomalies.size()}, {"by_severity", by_severity}, {"by_kind", by_kind}}},
            {"verdicts", {{"total", ctx.verdicts.size()}, {"by_status", by_status}}},
            {"seal", {{"status", seal}, {"workbook_digest", s.workbook_digest()}}},
            {"budget",
             {{"budget_minutes", s.budget_minutes()},
              {"elapsed_minutes", s.elapsed_minutes()},
              {"over_budget", s.over_budget()}}},
        };
        return doc.dump(2) + "\n";
    }

    std::string out;
    out += "session " + s.id() + "\n";
    out += "strategy: " + std::string(to_string(s.plan().strategy)) + "\n";
    out += "coverage: " + percent(s.coverage()) + " (" + std::to_string(covered) + "/" + std::to_string(total) +
           " cells)\n";
    out += "budget: " + format_number(s.elapsed_minutes()) + " of " + format_number(s.budget_minutes()) + " minutes" +
           (s.over_budget() ? " (over budget)" : "") + "\n";
    out += "seal: " + seal + " " + s.workbook_digest() + "\n";
    out += "findings: " + std::to_string(s.findings().size()) + "\n";
    for (const auto& f : s.findings()) {
        out += "  " + f.subject + " [" + std::string(to_string(f.severity)) + "] " + f.text + "\n";
    }
    out += "anomalies: " + std::to_string(ctx.anomalies.size()) + " (ALERT " + std::to_string(by_severity["ALERT"]) +
           ", WARN " + std::to_string(by_severity["WARN"]) + ", INFO " + std::to_string(by_severity["INFO"]) + ")\n";
    for (const auto& [kind, n] : by_kind) out += "  " + kind + " " + std::to_string(n) + "\n";
    out += "verdicts: " + std::to_string(ctx.verdicts.size()) + "\n";
    for (const auto& [status, n] : by_status) {
        if (n) out += "  " + status + " " + std::to_string(n) + "\n";
    }
    return out;
}

}  // namespace sheetguard
