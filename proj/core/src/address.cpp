#include "sheetguard/address.hpp"
#include "sheetguard/error.hpp"

#include <cctype>

namespace sheetguard {

ParseError::ParseError(const std::string& message, int line, int column)
    : Error(line > 0 ? (column > 0 ? "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message
                                   : "line " + std::to_string(line) + ": " + message)
                     : (column > 0 ? "column " + std::to_string(column) + ": " + message : message)),
      message_(message),
      line_(line),
      column_(column) {}

std::string column_letters(int col) {
    std::string out;
    while (col > 0) {
        int rem = (col - 1) % 26;
        out.insert(out.begin(), static_cast<char>('A' + rem));
        col = (col - 1) / 26;
    }
    return out;
}

std::string to_a1(Address a) { return column_letters(a.col) + std::to_string(a.row); }

std::optional<Address> parse_a1(std::string_view text) {
    std::size_t i = 0;
    long col = 0;
    while (i < text.size() && std::isalpha(static_cast<unsigned char>(text[i]))) {
        col = col * 26 + (std::toupper(static_cast<unsigned char>(text[i])) - 'A' + 1);
        if (col > kMaxColumn) return std::nullopt;
        ++i;
    }
    if (i == 0 || i == text.size() || text[i] == '0') return std::nullopt;
    long row = 0;
    for (; i < text.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(text[i]))) return std::nullopt;
        row = row * 10 + (text[i] - '0');
        if (row > kMaxRow) return std::nullopt;
    }
    return Address{static_cast<int>(col), static_cast<int>(row)};
}

bool is_identifier(std::string_view name) {
    if (name.empty()) return false;
    auto first = static_cast<unsigned char>(name[0]);
    if (!std::isalpha(first) && first != '_') return false;
    for (char ch : name) {
        auto c = static_cast<unsigned char>(ch);
        if (!std::isalnum(c) && c != '_') return false;
    }
    return true;
}

std::string to_string(const CellId& id) { return id.sheet + "!" + to_a1(id.addr); }

std::optional<CellId> parse_cell_id(std::string_view text) {
    auto bang = text.find('!');
    if (bang == std::string_view::npos) return std::nullopt;
    auto sheet = text.substr(0, bang);
    if (!is_identifier(sheet)) return std::nullopt;
    auto addr = parse_a1(text.substr(bang + 1));
    if (!addr) return std::nullopt;
    return CellId{std::string(sheet), *addr};
}

}  // namespace sheetguard
