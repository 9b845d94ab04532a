#pragma once

#include <sheetguard/workbook.hpp>

#include <string>
#include <string_view>

namespace sheetguard::testing {

/// `lines` are "cell ..." lines (or anything else valid) on sheet Main.
inline Workbook main_sheet(std::string_view lines) {
    return parse_workbook("sgw 1\nsheet Main\n" + std::string(lines), "book");
}

/// The revenue example: a label, one input and one output.
inline Workbook revenue_book() {
    return main_sheet("cell A1 - \"Revenue\"\ncell B1 - 1000\ncell B3 - =B1*0.2\n");
}

inline constexpr std::string_view kRevenueSgw = "sgw 1\nsheet Main\ncell A1 - \"Revenue\"\ncell B1 - 1000\ncell B3 - =B1*0.2\n";

/// Column B2..B6 copied from "=A<r>*2", with B4 tampered to "=A4*2+10".
inline Workbook split_column_book() {
    std::string s;
    for (int r = 1; r <= 6; ++r) s += "cell A" + std::to_string(r) + " - " + std::to_string(r * 10) + "\n";
    for (int r = 2; r <= 6; ++r) {
        s += "cell B" + std::to_string(r) + " - =A" + std::to_string(r) + "*2" + (r == 4 ? "+10" : "") + "\n";
    }
    return main_sheet(s);
}

inline CellId id(std::string_view text) { return *parse_cell_id(text); }

}  // namespace sheetguard::testing
