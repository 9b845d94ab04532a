#pragma once

#include "sheetguard/flowgraph.hpp"
#include "sheetguard/roles.hpp"
#include "sheetguard/workbook.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sheetguard {

inline constexpr std::string_view kToolVersion = "sheetguard 1.0.0";
inline constexpr std::string_view kFrontSheet = "Front";

struct RoleMap {
    std::map<CellId, Role> roles;
    std::vector<std::string> warnings;

    /// Throws NotFoundError for cells without a role.
    Role at(const CellId& cell) const;
};

/// Constants referenced by a formula are INPUT, other constants LABEL;
/// formulas with dependents are CODE, the rest OUTPUT. Overrides win but must
/// keep constants constant-roled and formulas formula-roled (UsageError otherwise).
RoleMap infer_roles(const Workbook& w, const FlowGraph& g, const std::map<CellId, Role>& overrides = {});

/// "sgwroles 1" header, then `<Sheet!A1>\t<ROLE>` per cell, sorted by CellId.
std::string serialize_roles(const RoleMap& roles);

struct SeparationReport {
    std::vector<std::pair<CellId, CellId>> inputs;   // original -> front cell
    std::vector<std::pair<CellId, CellId>> outputs;  // original -> front cell
    bool preserved = true;
    std::vector<std::string> value_diffs;
};

struct Separation {
    Workbook workbook;
    SeparationReport report;
};

/// Moves INPUT values onto a new first sheet "Front" and gives it a reference
/// to every OUTPUT. Throws UsageError if "Front" already exists.
Separation separate(const Workbook& w, const RoleMap& roles);

/// The byte sequence that defines "the program": everything but INPUT values.
std::string canonical_serialize_program(const Workbook& w, const RoleMap& roles);

struct SealManifest {
    std::string digest;
    std::string role_digest;
    std::string policy_digest = "-";
    std::string created_at;
    std::string tool_version{kToolVersion};
    std::string prev = "-";

    friend bool operator==(const SealManifest&, const SealManifest&) = default;
};

/// Seal digest of `w` with inferred roles (plus overrides).
std::string program_digest(const Workbook& w, const std::map<CellId, Role>& overrides = {});

SealManifest seal(const Workbook& w, const RoleMap& roles, std::string policy_digest = "-", std::string prev = "-",
                  std::string created_at = "");

/// One-line JSON with exactly the manifest fields, keys sorted.
std::string manifest_to_json(const SealManifest& m);
/// Throws ParseError on malformed documents or missing/extra fields.
SealManifest manifest_from_json(std::string_view text);
/// Digest used for `prev` links: SHA-256 of manifest_to_json.
std::string manifest_digest(const SealManifest& m);

struct SealDiffEntry {
    enum class Kind { Added, Removed, Changed };
    Kind kind;
    std::string cell;
    std::string before;  // serialized fields, empty for Added
    std::string after;   // empty for Removed
};

std::string_view to_string(SealDiffEntry::Kind kind) noexcept;

struct VerifyResult {
    bool match = false;
    bool digest_match = false;
    bool role_match = false;
    /// Only checked when a policy digest is supplied.
    bool policy_match = true;
    /// True when a retained serialization allowed a cell-level diff.
    bool diff_available = false;
    std::vector<SealDiffEntry> diff;
};

/// Recomputes the seal of `w`. With the serialization that was sealed, a
/// mismatch is explained cell by cell.
VerifyResult verify_seal(const Workbook& w, const RoleMap& roles, const SealManifest& manifest,
                         std::optional<std::string_view> retained_serialization = std::nullopt,
                         std::optional<std::string_view> policy_digest = std::nullopt);

/// Line diff of two program serializations, keyed by cell.
std::vector<SealDiffEntry> diff_serializations(std::string_view before, std::string_view after);

/// Newline-delimited manifest history. Appends hold an exclusive lock on the file.
class SealChain {
public:
    explicit SealChain(std::filesystem::path path);

    /// Links `m.prev` to the current newest entry and appends it.
    SealManifest append(SealManifest m) const;
    /// Entries in file (creation) order. Throws ParseError on a malformed line.
    std::vector<SealManifest> read() const;

    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

/// Walks prev links from the newest entry. Returns the indices visited, which
/// for an intact chain is every index in strictly decreasing order.
std::vector<std::size_t> walk_chain(const std::vector<SealManifest>& entries);
bool chain_intact(const std::vector<SealManifest>& entries);

}  // namespace sheetguard
