#include "analysis.hpp"

#include <sheetguard/digest.hpp>
#include <sheetguard/error.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

namespace sheetguard::tools {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot write " + path.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw UsageError("cannot write " + path.string());
}

std::string resolve_created_at(const std::string& flag) {
    if (!flag.empty()) return flag;
    std::time_t t = 0;
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch) {
        char* end = nullptr;
        auto v = std::strtoll(epoch, &end, 10);
        if (*end != '\0' || v < 0) throw UsageError("SOURCE_DATE_EPOCH is not a non-negative integer");
        t = static_cast<std::time_t>(v);
    } else {
        t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    }
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

Analysis Analysis::build(Workbook w, Policy policy, std::string policy_digest) {
    Analysis a{std::move(w), {}, {}, std::move(policy), std::move(policy_digest), {}, {}, {}};
    a.graph = build_flow_graph(a.workbook);
    a.values = evaluate(a.workbook, a.graph);
    a.roles = infer_roles(a.workbook, a.graph, a.policy.role_overrides);
    a.copy_areas = partition(a.workbook, EquivalenceLevel::Copy);
    a.anomalies = detect_anomalies(a.workbook, a.copy_areas, a.graph);
    return a;
}

Analysis Analysis::load(const std::filesystem::path& workbook, const std::optional<std::filesystem::path>& policy) {
    auto w = parse_workbook(read_file(workbook), workbook.stem().string());
    if (!policy) return build(std::move(w));
    auto text = read_file(*policy);
    return build(std::move(w), parse_policy(text), sha256_hex(text));
}

std::string Analysis::program_digest() const { return sha256_hex(canonical_serialize_program(workbook, roles)); }

}  // namespace sheetguard::tools
