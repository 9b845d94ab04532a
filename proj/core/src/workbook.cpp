#include "sheetguard/workbook.hpp"
#include "sheetguard/error.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>

namespace sheetguard {

namespace {

std::uint64_t bits_of(double v) { return std::bit_cast<std::uint64_t>(v == 0.0 ? 0.0 : v); }

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            if (start < text.size()) lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    for (auto& line : lines) {
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    }
    return lines;
}

}  // namespace

std::string print_literal(const Literal& lit) {
    if (const auto* d = std::get_if<double>(&lit)) return format_number(*d);
    if (const auto* s = std::get_if<std::string>(&lit)) return quote_text(*s);
    return std::get<bool>(lit) ? "TRUE" : "FALSE";
}

Literal parse_literal(std::string_view text) {
    if (text == "TRUE") return true;
    if (text == "FALSE") return false;
    if (!text.empty() && text.front() == '"') {
        if (auto s = unquote_text(text)) return *s;
        throw ParseError("malformed string literal", 0, 0);
    }
    if (auto v = parse_number(text)) return *v;
    throw ParseError("malformed literal '" + std::string(text) + "'", 0, 0);
}

bool literal_equal(const Literal& a, const Literal& b) {
    if (a.index() != b.index()) return false;
    if (const auto* d = std::get_if<double>(&a)) return bits_of(*d) == bits_of(std::get<double>(b));
    return a == b;
}

Cell Cell::constant(Literal lit, bool hidden, bool locked) { return Cell{std::move(lit), hidden, locked}; }

Cell Cell::formula_cell(ExprPtr ast, bool hidden, bool locked) { return Cell{Formula{std::move(ast)}, hidden, locked}; }

std::string print_content(const Cell& cell) {
    if (cell.is_formula()) return print_formula_canonical(*cell.formula());
    return print_literal(cell.literal());
}

bool cells_equal(const Cell& a, const Cell& b) {
    if (a.hidden != b.hidden || a.locked != b.locked || a.is_formula() != b.is_formula()) return false;
    if (a.is_formula()) return structurally_equal(*a.formula(), *b.formula());
    return literal_equal(a.literal(), b.literal());
}

Sheet::Sheet(std::string name) : name_(std::move(name)) {}

const Cell* Sheet::find(Address a) const {
    auto it = cells_.find(a);
    return it == cells_.end() ? nullptr : &it->second;
}

void Sheet::set(Address a, Cell cell) { cells_.insert_or_assign(a, std::move(cell)); }

bool Sheet::erase(Address a) { return cells_.erase(a) > 0; }

Workbook::Workbook(std::string name) : name_(std::move(name)) {}

Sheet& Workbook::add_sheet(std::string name) {
    if (!is_identifier(name)) throw UsageError("invalid sheet name '" + name + "'");
    if (find_sheet(name)) throw UsageError("duplicate sheet " + name);
    return sheets_.emplace_back(std::move(name));
}

Sheet& Workbook::prepend_sheet(std::string name) {
    if (!is_identifier(name)) throw UsageError("invalid sheet name '" + name + "'");
    if (find_sheet(name)) throw UsageError("sheet name collision: " + name);
    return *sheets_.emplace(sheets_.begin(), std::move(name));
}

const Sheet* Workbook::find_sheet(std::string_view name) const {
    for (const auto& s : sheets_) {
        if (s.name() == name) return &s;
    }
    return nullptr;
}

Sheet* Workbook::find_sheet(std::string_view name) {
    for (auto& s : sheets_) {
        if (s.name() == name) return &s;
    }
    return nullptr;
}

int Workbook::sheet_index(std::string_view name) const {
    for (std::size_t i = 0; i < sheets_.size(); ++i) {
        if (sheets_[i].name() == name) return static_cast<int>(i);
    }
    return -1;
}

const Cell* Workbook::find(const CellId& id) const {
    const auto* s = find_sheet(id.sheet);
    return s ? s->find(id.addr) : nullptr;
}

void Workbook::set(const CellId& id, Cell cell) {
    auto* s = find_sheet(id.sheet);
    if (!s) throw NotFoundError("no sheet named " + id.sheet);
    s->set(id.addr, std::move(cell));
}

std::size_t Workbook::cell_count() const {
    std::size_t n = 0;
    for (const auto& s : sheets_) n += s.cells().size();
    return n;
}

bool Workbook::workbook_less(const CellId& a, const CellId& b) const {
    // Unknown sheets sort after known ones, then by name.
    auto ia = sheet_index(a.sheet);
    auto ib = sheet_index(b.sheet);
    auto ka = ia < 0 ? static_cast<int>(sheets_.size()) : ia;
    auto kb = ib < 0 ? static_cast<int>(sheets_.size()) : ib;
    if (ka != kb) return ka < kb;
    if (a.sheet != b.sheet) return a.sheet < b.sheet;
    return a.addr < b.addr;
}

std::vector<CellId> Workbook::cell_ids() const {
    std::vector<CellId> out;
    out.reserve(cell_count());
    for (const auto& s : sheets_) {
        for (const auto& [addr, cell] : s.cells()) out.push_back({s.name(), addr});
    }
    return out;
}

bool workbooks_equal(const Workbook& a, const Workbook& b) {
    if (a.sheets().size() != b.sheets().size()) return false;
    for (std::size_t i = 0; i < a.sheets().size(); ++i) {
        const auto& sa = a.sheets()[i];
        const auto& sb = b.sheets()[i];
        if (sa.name() != sb.name() || sa.cells().size() != sb.cells().size()) return false;
        auto ib = sb.cells().begin();
        for (const auto& [addr, cell] : sa.cells()) {
            if (addr != ib->first || !cells_equal(cell, ib->second)) return false;
            ++ib;
        }
    }
    return true;
}

Workbook parse_workbook(std::string_view text, std::string name) {
    Workbook w(std::move(name));
    auto lines = split_lines(text);
    if (lines.empty() || lines.front() != "sgw 1") throw ParseError("bad version header, expected 'sgw 1'", 1, 0);

    Sheet* current = nullptr;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const int lineno = static_cast<int>(i) + 1;
        auto line = lines[i];
        if (line.empty() || line.front() == '#') continue;

        if (line.rfind("sheet ", 0) == 0) {
            auto sheet_name = std::string(line.substr(6));
            if (!is_identifier(sheet_name)) throw ParseError("invalid sheet name '" + sheet_name + "'", lineno, 7);
            if (w.find_sheet(sheet_name)) throw ParseError("duplicate sheet " + sheet_name, lineno, 7);
            current = &w.add_sheet(std::move(sheet_name));
            continue;
        }
        if (line.rfind("cell ", 0) != 0) throw ParseError("expected 'sheet' or 'cell'", lineno, 1);
        if (!current) throw ParseError("cell before any sheet", lineno, 1);

        auto rest = line.substr(5);
        auto sp1 = rest.find(' ');
        auto sp2 = sp1 == std::string_view::npos ? sp1 : rest.find(' ', sp1 + 1);
        if (sp2 == std::string_view::npos) throw ParseError("expected 'cell <ref> <flags> <content>'", lineno, 6);
        auto ref_text = rest.substr(0, sp1);
        auto flags = rest.substr(sp1 + 1, sp2 - sp1 - 1);
        auto content = rest.substr(sp2 + 1);
        const int content_col = static_cast<int>(5 + sp2 + 2);

        auto addr = parse_a1(ref_text);
        if (!addr) throw ParseError("invalid cell reference '" + std::string(ref_text) + "'", lineno, 6);
        if (current->find(*addr)) throw ParseError("duplicate cell " + current->name() + "!" + to_a1(*addr), lineno, 6);

        bool hidden = false;
        bool locked = false;
        if (flags != "-") {
            if (flags == "h") {
                hidden = true;
            } else if (flags == "l") {
                locked = true;
            } else if (flags == "hl") {
                hidden = locked = true;
            } else {
                throw ParseError("unknown flag '" + std::string(flags) + "'", lineno, static_cast<int>(5 + sp1 + 2));
            }
        }
        if (content.empty()) throw ParseError("missing cell content", lineno, content_col);

        try {
            if (content.front() == '=') {
                current->set(*addr, Cell::formula_cell(parse_formula(content, *addr), hidden, locked));
            } else {
                current->set(*addr, Cell::constant(parse_literal(content), hidden, locked));
            }
        } catch (const ParseError& e) {
            throw ParseError(e.message(), lineno, e.column() > 0 ? content_col + e.column() - 1 : content_col);
        }
    }
    return w;
}

std::string print_workbook(const Workbook& w) {
    std::string out = "sgw 1\n";
    for (const auto& s : w.sheets()) {
        out += "sheet " + s.name() + "\n";
        for (const auto& [addr, cell] : s.cells()) {
            out += "cell " + to_a1(addr) + " ";
            if (cell.hidden || cell.locked) {
                if (cell.hidden) out += 'h';
                if (cell.locked) out += 'l';
            } else {
                out += '-';
            }
            out += " " + print_content(cell) + "\n";
        }
    }
    return out;
}

}  // namespace sheetguard
