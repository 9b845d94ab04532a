#pragma once

#include "sheetguard/address.hpp"
#include "sheetguard/formula.hpp"

#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace sheetguard {

/// A constant: finite double, text, or boolean.
using Literal = std::variant<double, std::string, bool>;

/// Canonical spelling of a literal: shortest number, quoted text, TRUE/FALSE.
std::string print_literal(const Literal& lit);
/// Inverse of print_literal. Throws ParseError (column-only) on malformed input.
Literal parse_literal(std::string_view text);
/// Numbers compare bitwise after -0 normalization.
bool literal_equal(const Literal& a, const Literal& b);

struct Formula {
    ExprPtr ast;
};

struct Cell {
    std::variant<Literal, Formula> content;
    bool hidden = false;
    bool locked = false;

    bool is_formula() const noexcept { return std::holds_alternative<Formula>(content); }
    const ExprPtr& formula() const { return std::get<Formula>(content).ast; }
    const Literal& literal() const { return std::get<Literal>(content); }

    static Cell constant(Literal lit, bool hidden = false, bool locked = false);
    static Cell formula_cell(ExprPtr ast, bool hidden = false, bool locked = false);
};

/// "1000", "\"x\"", "=(B1*0.2)"
std::string print_content(const Cell& cell);
bool cells_equal(const Cell& a, const Cell& b);

class Sheet {
public:
    explicit Sheet(std::string name);

    const std::string& name() const noexcept { return name_; }
    const std::map<Address, Cell>& cells() const noexcept { return cells_; }

    const Cell* find(Address a) const;
    /// Inserts or replaces.
    void set(Address a, Cell cell);
    bool erase(Address a);

private:
    std::string name_;
    std::map<Address, Cell> cells_;
};

class Workbook {
public:
    explicit Workbook(std::string name = "workbook");

    const std::string& name() const noexcept { return name_; }
    const std::vector<Sheet>& sheets() const noexcept { return sheets_; }

    /// Throws UsageError on an invalid or duplicate name.
    Sheet& add_sheet(std::string name);
    /// Inserts the sheet at the front (used by the front-sheet transform).
    Sheet& prepend_sheet(std::string name);

    const Sheet* find_sheet(std::string_view name) const;
    Sheet* find_sheet(std::string_view name);
    /// Position of the sheet in workbook order, or -1.
    int sheet_index(std::string_view name) const;

    const Cell* find(const CellId& id) const;
    void set(const CellId& id, Cell cell);

    std::size_t cell_count() const;

    /// Orders cells by (sheet position, row, col).
    bool workbook_less(const CellId& a, const CellId& b) const;
    /// Every non-empty cell in workbook order.
    std::vector<CellId> cell_ids() const;

private:
    std::string name_;
    std::vector<Sheet> sheets_;
};

/// Structural equality: same sheets in the same order with equal cells.
bool workbooks_equal(const Workbook& a, const Workbook& b);

Workbook parse_workbook(std::string_view text, std::string name = "workbook");
std::string print_workbook(const Workbook& w);

}  // namespace sheetguard
