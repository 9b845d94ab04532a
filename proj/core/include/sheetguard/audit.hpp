#pragma once

#include "sheetguard/areas.hpp"
#include "sheetguard/flowgraph.hpp"
#include "sheetguard/intervals.hpp"
#include "sheetguard/roles.hpp"
#include "sheetguard/workbook.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace sheetguard {

enum class Strategy { Scan, Flow, Areas };
enum class ItemState { Unseen, Checked, Suspect };

std::string_view to_string(Strategy s) noexcept;
std::string_view to_string(ItemState s) noexcept;
/// Case-insensitive.
std::optional<Strategy> parse_strategy(std::string_view text) noexcept;
std::optional<ItemState> parse_item_state(std::string_view text) noexcept;

struct AuditItem {
    int id = 0;  // 1-based position in the plan
    /// "Main!B4" for cell items, "area 3" for area items.
    std::string subject;
    std::vector<CellId> covered_cells;
    std::vector<Anomaly> flags;
    ItemState state = ItemState::Unseen;
    std::string note;
    /// FLOW only: distance from the starting cells; -1 otherwise.
    int depth = -1;
};

struct AuditPlan {
    Strategy strategy = Strategy::Scan;
    /// FLOW only: trace along the flow instead of against it.
    bool forward = false;
    std::vector<AuditItem> items;

    std::set<CellId> universe() const;
};

/// SCAN covers every non-empty cell, sheet by sheet, row-major. FLOW covers
/// the cells reachable from the outputs against the flow (or from the sources
/// along it), grouped by depth. AREAS has one item per area in `copy_areas`,
/// flagged items first, then singletons, then by size. Each anomaly is attached
/// to the item covering its cell, else to the nearest item on the same sheet.
/// AREAS without `copy_areas` is a UsageError.
AuditPlan plan_audit(const Workbook& w, const FlowGraph& g, const std::vector<LogicalArea>* copy_areas,
                     const std::vector<Anomaly>& anomalies, Strategy strategy, bool forward = false);

struct Finding {
    std::string subject;
    Severity severity = Severity::Warn;
    std::string text;

    friend bool operator==(const Finding&, const Finding&) = default;
};

class AuditSession {
public:
    AuditSession(std::string id, AuditPlan plan, double budget_minutes, std::string workbook_digest,
                 std::string created_at);

    const std::string& id() const noexcept { return id_; }
    const AuditPlan& plan() const noexcept { return plan_; }
    double budget_minutes() const noexcept { return budget_; }
    double elapsed_minutes() const noexcept { return elapsed_; }
    const std::vector<Finding>& findings() const noexcept { return findings_; }
    const std::string& created_at() const noexcept { return created_at_; }
    const std::string& workbook_digest() const noexcept { return digest_; }

    bool invalidated() const noexcept { return invalidated_; }
    void invalidate() noexcept { invalidated_ = true; }
    bool over_budget() const noexcept { return elapsed_ > budget_; }
    /// "INVALIDATED", "over budget", "done" or "active".
    std::string status() const;

    /// Fraction of the plan's universe covered by CHECKED or SUSPECT items;
    /// 1.0 for an empty universe.
    double coverage() const;

    /// First UNSEEN item, nullptr when done. Throws UsageError if invalidated.
    const AuditItem* next_item() const;

    /// Throws NotFoundError for an unknown item, TransitionError for an illegal
    /// transition, UsageError for SUSPECT without a note or an invalidated session.
    const AuditItem& mark(int item_id, ItemState state, std::string note = "");

    /// Records a clock reading in minutes since the session started. Readings
    /// may not go backwards.
    void set_elapsed(double minutes);

    friend bool operator==(const AuditSession&, const AuditSession&);
    friend AuditSession load_session(std::string_view document, std::string_view current_digest);

private:
    std::string id_;
    AuditPlan plan_;
    double budget_;
    double elapsed_ = 0;
    std::vector<Finding> findings_;
    std::string created_at_;
    std::string digest_;
    bool invalidated_ = false;
};

bool operator==(const AuditItem& a, const AuditItem& b);

/// Indented JSON document with every session field.
std::string save_session(const AuditSession& s);
/// Throws ParseError on malformed documents. The session comes back
/// invalidated when `current_digest` differs from the stored digest.
AuditSession load_session(std::string_view document, std::string_view current_digest);

enum class ReportFormat { Text, Json };

struct ReportContext {
    std::vector<Anomaly> anomalies;
    std::vector<Verdict> verdicts;
    /// Digest of the workbook in hand; empty when unknown.
    std::string current_digest;
};

/// Keys (JSON): strategy, coverage, findings, anomalies, verdicts, seal, budget.
std::string report(const AuditSession& s, const ReportContext& ctx, ReportFormat format);

}  // namespace sheetguard
