#pragma once

#include "analysis.hpp"

#include <sheetguard/audit.hpp>

#include <json.hpp>

#include <optional>
#include <string>

// JSON documents shared by the CLI (--json) and the HTTP service, so both
// print byte-identical output for the same workbook state.
namespace sheetguard::tools::views {

using nlohmann::json;

/// The exact bytes written for a document.
std::string render(const json& doc);

json value(const CellValue& v);
json interval(const Interval& iv);
json anomaly(const Anomaly& a);

json workbook(const Analysis& a);
json values(const Workbook& w, const ValueMap& values);
json areas(const Analysis& a, EquivalenceLevel level);
json anomalies(const std::vector<Anomaly>& list);
json classes(const Analysis& a);
/// Whole graph when `cell` is empty; otherwise the precedents or dependents
/// of `cell` (`direction` "precedents" or "dependents"). Throws NotFoundError
/// for a cell outside the graph, UsageError for an unknown direction.
json flow(const Analysis& a, const std::string& cell, const std::string& direction);
json intervals(const Analysis& a);
json roles(const RoleMap& roles);
json separation(const Separation& s);
json manifest(const SealManifest& m);

struct SealInput {
    std::optional<SealManifest> manifest;
    std::optional<std::string> retained;
};
/// Current digests plus MATCH/MISMATCH against `input.manifest`, or UNSEALED.
json seal_status(const Analysis& a, const SealInput& input);

json item(const AuditItem& item);
json session(const AuditSession& s);
json next(const AuditSession& s);

/// Re-evaluation with substituted INPUT values. Throws UsageError
/// "not an input cell" for anything else.
json whatif(const Analysis& a, const json& request);

json error(const std::string& message);

}  // namespace sheetguard::tools::views
