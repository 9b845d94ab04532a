#pragma once

#include <sheetguard/areas.hpp>
#include <sheetguard/flowgraph.hpp>
#include <sheetguard/guard.hpp>
#include <sheetguard/intervals.hpp>
#include <sheetguard/workbook.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace sheetguard::tools {

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view data);

/// `flag` if set, else SOURCE_DATE_EPOCH, else the wall clock, as
/// "YYYY-MM-DDTHH:MM:SSZ".
std::string resolve_created_at(const std::string& flag);

/// A workbook with everything derived from it. Immutable once built.
struct Analysis {
    Workbook workbook;
    FlowGraph graph;
    ValueMap values;
    Policy policy;
    std::string policy_digest = "-";
    RoleMap roles;
    std::vector<LogicalArea> copy_areas;
    std::vector<Anomaly> anomalies;

    static Analysis build(Workbook w, Policy policy = {}, std::string policy_digest = "-");
    static Analysis load(const std::filesystem::path& workbook, const std::optional<std::filesystem::path>& policy);

    std::string program_digest() const;
};

}  // namespace sheetguard::tools
