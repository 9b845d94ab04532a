#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace sheetguard {

inline constexpr int kMaxColumn = 16384;
inline constexpr int kMaxRow = 1048576;

/// 1-based grid coordinate. Ordering is row-major: (row, col).
struct Address {
    int col = 1;
    int row = 1;

    friend bool operator==(const Address&, const Address&) = default;
    friend std::strong_ordering operator<=>(const Address& a, const Address& b) {
        if (auto c = a.row <=> b.row; c != 0) return c;
        return a.col <=> b.col;
    }
};

std::string column_letters(int col);
std::string to_a1(Address a);

/// Parses a plain A1 reference without `$` markers ("B12"). Letters may be lowercase.
std::optional<Address> parse_a1(std::string_view text);

bool is_identifier(std::string_view name);

/// A cell qualified by its sheet. Ordering is (sheet name bytewise, row, col).
struct CellId {
    std::string sheet;
    Address addr;

    friend bool operator==(const CellId&, const CellId&) = default;
    friend std::strong_ordering operator<=>(const CellId& a, const CellId& b) {
        if (auto c = a.sheet.compare(b.sheet); c != 0) return c < 0 ? std::strong_ordering::less : std::strong_ordering::greater;
        return a.addr <=> b.addr;
    }
};

/// "Sheet!A1"
std::string to_string(const CellId& id);
std::optional<CellId> parse_cell_id(std::string_view text);

}  // namespace sheetguard
