#pragma once

#include "sheetguard/flowgraph.hpp"
#include "sheetguard/workbook.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sheetguard {

/// How much two formulas may differ and still share a logical area.
///   Copy       - identical after copy-relative normalization
///   Logical    - additionally ignoring literal values
///   Structural - additionally ignoring which cells are referenced
enum class EquivalenceLevel { Copy, Logical, Structural };

std::string_view to_string(EquivalenceLevel level) noexcept;
std::optional<EquivalenceLevel> parse_level(std::string_view text) noexcept;

struct LogicalArea {
    int id = 0;
    EquivalenceLevel level = EquivalenceLevel::Copy;
    std::vector<CellId> members;  // workbook order
    std::string signature;
};

/// Normalized text shared by every formula equivalent to `ast` at `level`.
std::string area_signature(const Expr& ast, Address host, EquivalenceLevel level);

/// Partitions all formula cells. Areas are numbered 0.. in the workbook order
/// of their first member.
std::vector<LogicalArea> partition(const Workbook& w, EquivalenceLevel level);

enum class AnomalyKind { RowBreak, ColBreak, NearClone, HiddenFormula, ExternalRef, RefToHidden };
enum class Severity { Info, Warn, Alert };

std::string_view to_string(AnomalyKind kind) noexcept;
std::string_view to_string(Severity severity) noexcept;
std::optional<AnomalyKind> parse_anomaly_kind(std::string_view text) noexcept;
std::optional<Severity> parse_severity(std::string_view text) noexcept;

struct Anomaly {
    AnomalyKind kind;
    CellId cell;
    std::string context;
    Severity severity;
};

struct AnomalyOptions {
    /// Minimum length of a row/column run (focus cell included) for a break.
    int run_threshold = 3;
    /// Minimum size of the neighbouring area for a near-clone.
    std::size_t near_clone_min_area = 3;
};

/// `copy_areas` must come from partition(w, EquivalenceLevel::Copy).
/// Results are ordered by cell (workbook order) then kind.
std::vector<Anomaly> detect_anomalies(const Workbook& w, const std::vector<LogicalArea>& copy_areas, const FlowGraph& g,
                                      const AnomalyOptions& options = {});

/// Fingerprint entries for non-formula cells.
inline constexpr long kFingerprintConst = -1;
inline constexpr long kFingerprintEmpty = -2;

struct SemanticClass {
    std::string sheet;
    int block_height = 0;
    std::vector<int> occurrences;     // starting rows, ascending
    std::pair<int, int> column_span;  // first, last column
    /// One tuple per row of the block: area id, kFingerprintConst or kFingerprintEmpty per column.
    std::vector<std::vector<long>> row_fingerprints;
};

struct SheetFingerprints {
    int first_row = 1;
    std::pair<int, int> column_span{1, 0};
    /// rows[i] is the fingerprint of row first_row + i.
    std::vector<std::vector<long>> rows;
};

/// Row fingerprints over the sheet's used range (empty sheet -> no rows).
SheetFingerprints row_fingerprints(const Sheet& sheet, const std::vector<LogicalArea>& copy_areas);

/// Repeating row-block patterns. Tallest classes first.
std::vector<SemanticClass> detect_semantic_classes(const Workbook& w, const std::vector<LogicalArea>& copy_areas);

}  // namespace sheetguard
