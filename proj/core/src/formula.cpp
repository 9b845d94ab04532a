#include "sheetguard/formula.hpp"
#include "sheetguard/error.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>

namespace sheetguard {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; }

std::string upper(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

class FormulaParser {
public:
    FormulaParser(std::string_view text, Address host) : text_(text), host_(host) {}

    ExprPtr parse() {
        skip_ws();
        if (!consume('=')) fail("formula must start with '='");
        auto expr = parse_comparison();
        skip_ws();
        if (pos_ != text_.size()) fail(std::string("unexpected '") + text_[pos_] + "'");
        return expr;
    }

private:
    [[noreturn]] void fail(const std::string& message) const {
        throw ParseError(message + " in formula at " + to_a1(host_), 0, static_cast<int>(pos_) + 1);
    }

    void skip_ws() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
    }

    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

    bool consume(char c) {
        skip_ws();
        if (peek() == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    std::optional<BinaryOp> comparison_op() {
        skip_ws();
        auto rest = text_.substr(pos_);
        static constexpr std::array<std::pair<std::string_view, BinaryOp>, 6> ops{{
            {"<=", BinaryOp::Le}, {">=", BinaryOp::Ge}, {"<>", BinaryOp::Ne},
            {"<", BinaryOp::Lt},  {">", BinaryOp::Gt},  {"=", BinaryOp::Eq},
        }};
        for (const auto& [tok, op] : ops) {
            if (rest.substr(0, tok.size()) == tok) {
                pos_ += tok.size();
                return op;
            }
        }
        return std::nullopt;
    }

    ExprPtr parse_comparison() {
        auto lhs = parse_additive();
        if (auto op = comparison_op()) {
            auto rhs = parse_additive();
            auto save = pos_;
            if (comparison_op()) {
                pos_ = save;
                fail("comparison operators do not associate; parenthesize");
            }
            return make_binary(*op, std::move(lhs), std::move(rhs));
        }
        return lhs;
    }

    ExprPtr parse_additive() {
        auto lhs = parse_multiplicative();
        for (;;) {
            skip_ws();
            if (consume('+')) {
                lhs = make_binary(BinaryOp::Add, std::move(lhs), parse_multiplicative());
            } else if (consume('-')) {
                lhs = make_binary(BinaryOp::Sub, std::move(lhs), parse_multiplicative());
            } else {
                return lhs;
            }
        }
    }

    ExprPtr parse_multiplicative() {
        auto lhs = parse_power();
        for (;;) {
            if (consume('*')) {
                lhs = make_binary(BinaryOp::Mul, std::move(lhs), parse_power());
            } else if (consume('/')) {
                lhs = make_binary(BinaryOp::Div, std::move(lhs), parse_power());
            } else {
                return lhs;
            }
        }
    }

    ExprPtr parse_power() {
        auto lhs = parse_unary();
        while (consume('^')) lhs = make_binary(BinaryOp::Pow, std::move(lhs), parse_unary());
        return lhs;
    }

    ExprPtr parse_unary() {
        if (consume('-')) return make_unary(UnaryOp::Negate, parse_unary());
        return parse_atom();
    }

    ExprPtr parse_atom() {
        skip_ws();
        char c = peek();
        if (c == '\0') fail("unexpected end of formula");
        if (c == '(') {
            ++pos_;
            auto inner = parse_comparison();
            if (!consume(')')) fail("expected ')'");
            return inner;
        }
        if (c == '"') return make_text(parse_string());
        if (is_digit(c) || c == '.') return make_number(parse_number_token());
        if (c == '[') return parse_reference_or_range(parse_book_prefix());
        if (c == '$' || is_alpha(c) || c == '_') return parse_word();
        fail(std::string("unexpected '") + c + "'");
    }

    std::string parse_string() {
        std::string out;
        ++pos_;  // opening quote
        while (pos_ < text_.size()) {
            char c = text_[pos_++];
            if (c == '"') return out;
            if (c == '\\') {
                if (pos_ >= text_.size()) break;
                char e = text_[pos_++];
                switch (e) {
                    case '"': out += '"'; break;
                    case '\\': out += '\\'; break;
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    case 'r': out += '\r'; break;
                    default: --pos_; fail(std::string("unknown escape '\\") + e + "'");
                }
            } else {
                out += c;
            }
        }
        fail("unterminated string");
    }

    double parse_number_token() {
        auto start = pos_;
        while (is_digit(peek())) ++pos_;
        if (peek() == '.') {
            ++pos_;
            while (is_digit(peek())) ++pos_;
        }
        if (pos_ - start == 1 && text_[start] == '.') {
            pos_ = start;
            fail("malformed number");
        }
        if (peek() == 'e' || peek() == 'E') {
            auto save = pos_;
            ++pos_;
            if (peek() == '+' || peek() == '-') ++pos_;
            if (!is_digit(peek())) {
                pos_ = save;
            } else {
                while (is_digit(peek())) ++pos_;
            }
        }
        auto value = parse_number(text_.substr(start, pos_ - start));
        if (!value) {
            pos_ = start;
            fail("number out of range");
        }
        return *value;
    }

    struct Prefix {
        std::optional<std::string> book;
        std::optional<std::string> sheet;
    };

    Prefix parse_book_prefix() {
        ++pos_;  // '['
        auto start = pos_;
        while (pos_ < text_.size() && (is_ident_char(text_[pos_]) || text_[pos_] == '.' || text_[pos_] == '-')) ++pos_;
        if (pos_ == start || peek() != ']') fail("malformed external book name");
        Prefix prefix;
        prefix.book = std::string(text_.substr(start, pos_ - start));
        ++pos_;
        auto sheet_start = pos_;
        while (is_ident_char(peek())) ++pos_;
        auto sheet = text_.substr(sheet_start, pos_ - sheet_start);
        if (!is_identifier(sheet) || peek() != '!') fail("external reference needs 'Sheet!' after the book name");
        ++pos_;
        prefix.sheet = std::string(sheet);
        return prefix;
    }

    // Matches `$?letters$?digits` at pos_ without consuming. Returns the length
    // of the match if it is followed by something that cannot continue a word.
    std::size_t match_ref(std::size_t at) const {
        auto i = at;
        if (i < text_.size() && text_[i] == '$') ++i;
        auto letters = i;
        while (i < text_.size() && is_alpha(text_[i])) ++i;
        if (i == letters || i - letters > 3) return 0;
        if (i < text_.size() && text_[i] == '$') ++i;
        auto digits = i;
        while (i < text_.size() && is_digit(text_[i])) ++i;
        if (i == digits) return 0;
        if (i < text_.size() && (is_ident_char(text_[i]) || text_[i] == '!' || text_[i] == '$')) return 0;
        return i - at;
    }

    CellRef parse_ref_token(const Prefix& prefix) {
        auto len = match_ref(pos_);
        if (len == 0) fail("expected a cell reference");
        auto tok = text_.substr(pos_, len);
        CellRef ref;
        ref.book = prefix.book;
        ref.sheet = prefix.sheet;
        std::size_t i = 0;
        if (tok[i] == '$') {
            ref.col_abs = true;
            ++i;
        }
        long col = 0;
        while (i < tok.size() && is_alpha(tok[i])) {
            col = col * 26 + (std::toupper(static_cast<unsigned char>(tok[i])) - 'A' + 1);
            ++i;
        }
        if (tok[i] == '$') {
            ref.row_abs = true;
            ++i;
        }
        long row = 0;
        for (; i < tok.size(); ++i) {
            row = row * 10 + (tok[i] - '0');
            if (row > kMaxRow) break;
        }
        if (col > kMaxColumn || row < 1 || row > kMaxRow) fail("reference outside the grid");
        ref.col = static_cast<int>(col);
        ref.row = static_cast<int>(row);
        pos_ += len;
        return ref;
    }

    ExprPtr parse_reference_or_range(const Prefix& prefix) {
        auto first = parse_ref_token(prefix);
        if (peek() == ':') {
            ++pos_;
            if (peek() == '[' || (match_ref(pos_) == 0 && peek() != '\0')) fail("range end must be a plain reference");
            auto last = parse_ref_token(prefix);
            return make_range(std::move(first), std::move(last));
        }
        return make_ref(std::move(first));
    }

    ExprPtr parse_word() {
        if (match_ref(pos_) != 0) return parse_reference_or_range({});
        if (peek() == '$') fail("malformed reference");
        auto start = pos_;
        while (is_ident_char(peek())) ++pos_;
        auto word = text_.substr(start, pos_ - start);
        if (peek() == '!') {
            ++pos_;
            Prefix prefix;
            prefix.sheet = std::string(word);
            return parse_reference_or_range(prefix);
        }
        auto up = upper(word);
        skip_ws();
        if (peek() == '(') {
            auto fn = function_by_name(up);
            if (!fn) {
                pos_ = start;
                fail("unknown function " + up);
            }
            ++pos_;
            return parse_call(*fn, start);
        }
        if (up == "TRUE") return make_boolean(true);
        if (up == "FALSE") return make_boolean(false);
        pos_ = start;
        fail("unknown name '" + std::string(word) + "'");
    }

    ExprPtr parse_call(Function fn, std::size_t name_pos) {
        std::vector<ExprPtr> args;
        skip_ws();
        if (peek() != ')') {
            do {
                args.push_back(parse_comparison());
            } while (consume(','));
        }
        if (!consume(')')) fail("expected ')' or ','");
        std::size_t want_min = 1;
        std::size_t want_max = SIZE_MAX;
        switch (fn) {
            case Function::If: want_min = want_max = 3; break;
            case Function::Abs: want_min = want_max = 1; break;
            case Function::Round: want_min = want_max = 2; break;
            default: break;
        }
        if (args.size() < want_min || args.size() > want_max) {
            pos_ = name_pos;
            fail(std::string(name(fn)) + " called with " + std::to_string(args.size()) + " argument(s)");
        }
        return make_call(fn, std::move(args));
    }

    std::string_view text_;
    Address host_;
    std::size_t pos_ = 0;
};

using RefPrinter = std::function<std::string(const CellRef&, bool range_tail)>;

void print_expr(const Expr& e, const RefPrinter& ref_printer, std::string& out) {
    std::visit(Overloaded{
                   [&](const NumberNode& n) { out += format_number(n.value); },
                   [&](const TextNode& t) { out += quote_text(t.value); },
                   [&](const BooleanNode& b) { out += b.value ? "TRUE" : "FALSE"; },
                   [&](const RefNode& r) { out += ref_printer(r.ref, false); },
                   [&](const RangeNode& r) {
                       out += ref_printer(r.first, false);
                       out += ':';
                       out += ref_printer(r.last, true);
                   },
                   [&](const UnaryNode& u) {
                       out += "(-";
                       print_expr(*u.operand, ref_printer, out);
                       out += ')';
                   },
                   [&](const BinaryNode& b) {
                       out += '(';
                       print_expr(*b.lhs, ref_printer, out);
                       out += symbol(b.op);
                       print_expr(*b.rhs, ref_printer, out);
                       out += ')';
                   },
                   [&](const CallNode& c) {
                       out += name(c.fn);
                       out += '(';
                       for (std::size_t i = 0; i < c.args.size(); ++i) {
                           if (i) out += ',';
                           print_expr(*c.args[i], ref_printer, out);
                       }
                       out += ')';
                   },
               },
               e.node);
}

std::string prefix_text(const CellRef& r) {
    std::string out;
    if (r.book) out += "[" + *r.book + "]";
    if (r.sheet) out += *r.sheet + "!";
    return out;
}

std::string r1c1_axis(char tag, int value, bool absolute) {
    std::string out(1, tag);
    if (absolute) {
        out += std::to_string(value);
    } else if (value != 0) {
        out += "[" + std::to_string(value) + "]";
    }
    return out;
}

}  // namespace

bool is_comparison(BinaryOp op) noexcept {
    switch (op) {
        case BinaryOp::Eq:
        case BinaryOp::Ne:
        case BinaryOp::Lt:
        case BinaryOp::Le:
        case BinaryOp::Gt:
        case BinaryOp::Ge: return true;
        default: return false;
    }
}

std::string_view symbol(BinaryOp op) noexcept {
    switch (op) {
        case BinaryOp::Add: return "+";
        case BinaryOp::Sub: return "-";
        case BinaryOp::Mul: return "*";
        case BinaryOp::Div: return "/";
        case BinaryOp::Pow: return "^";
        case BinaryOp::Eq: return "=";
        case BinaryOp::Ne: return "<>";
        case BinaryOp::Lt: return "<";
        case BinaryOp::Le: return "<=";
        case BinaryOp::Gt: return ">";
        case BinaryOp::Ge: return ">=";
    }
    return "?";
}

std::string_view name(Function fn) noexcept {
    switch (fn) {
        case Function::Sum: return "SUM";
        case Function::Average: return "AVERAGE";
        case Function::Min: return "MIN";
        case Function::Max: return "MAX";
        case Function::Count: return "COUNT";
        case Function::Abs: return "ABS";
        case Function::Round: return "ROUND";
        case Function::If: return "IF";
    }
    return "?";
}

std::optional<Function> function_by_name(std::string_view upper_name) noexcept {
    static constexpr std::array<Function, 8> all{Function::Sum, Function::Average, Function::Min,   Function::Max,
                                                 Function::Count, Function::Abs,   Function::Round, Function::If};
    for (auto fn : all) {
        if (name(fn) == upper_name) return fn;
    }
    return std::nullopt;
}

ExprPtr make_number(double v) { return std::make_shared<const Expr>(Expr{NumberNode{v}}); }
ExprPtr make_text(std::string v) { return std::make_shared<const Expr>(Expr{TextNode{std::move(v)}}); }
ExprPtr make_boolean(bool v) { return std::make_shared<const Expr>(Expr{BooleanNode{v}}); }
ExprPtr make_ref(CellRef r) { return std::make_shared<const Expr>(Expr{RefNode{std::move(r)}}); }
ExprPtr make_range(CellRef first, CellRef last) {
    return std::make_shared<const Expr>(Expr{RangeNode{std::move(first), std::move(last)}});
}
ExprPtr make_unary(UnaryOp op, ExprPtr operand) {
    return std::make_shared<const Expr>(Expr{UnaryNode{op, std::move(operand)}});
}
ExprPtr make_binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs) {
    return std::make_shared<const Expr>(Expr{BinaryNode{op, std::move(lhs), std::move(rhs)}});
}
ExprPtr make_call(Function fn, std::vector<ExprPtr> args) {
    return std::make_shared<const Expr>(Expr{CallNode{fn, std::move(args)}});
}

bool structurally_equal(const Expr& a, const Expr& b) {
    if (a.node.index() != b.node.index()) return false;
    return std::visit(
        Overloaded{
            [&](const NumberNode& n) { return n.value == std::get<NumberNode>(b.node).value; },
            [&](const TextNode& t) { return t.value == std::get<TextNode>(b.node).value; },
            [&](const BooleanNode& v) { return v.value == std::get<BooleanNode>(b.node).value; },
            [&](const RefNode& r) { return r.ref == std::get<RefNode>(b.node).ref; },
            [&](const RangeNode& r) {
                const auto& o = std::get<RangeNode>(b.node);
                return r.first == o.first && r.last == o.last;
            },
            [&](const UnaryNode& u) {
                const auto& o = std::get<UnaryNode>(b.node);
                return u.op == o.op && structurally_equal(*u.operand, *o.operand);
            },
            [&](const BinaryNode& n) {
                const auto& o = std::get<BinaryNode>(b.node);
                return n.op == o.op && structurally_equal(*n.lhs, *o.lhs) && structurally_equal(*n.rhs, *o.rhs);
            },
            [&](const CallNode& c) {
                const auto& o = std::get<CallNode>(b.node);
                if (c.fn != o.fn || c.args.size() != o.args.size()) return false;
                for (std::size_t i = 0; i < c.args.size(); ++i) {
                    if (!structurally_equal(*c.args[i], *o.args[i])) return false;
                }
                return true;
            },
        },
        a.node);
}

ExprPtr parse_formula(std::string_view text, Address host) { return FormulaParser(text, host).parse(); }

std::string print_ref(const CellRef& r) {
    return prefix_text(r) + (r.col_abs ? "$" : "") + column_letters(r.col) + (r.row_abs ? "$" : "") + std::to_string(r.row);
}

std::string print_formula_canonical(const Expr& ast) {
    std::string out = "=";
    print_expr(
        ast,
        [](const CellRef& r, bool tail) {
            if (!tail) return print_ref(r);
            CellRef bare = r;
            bare.book.reset();
            bare.sheet.reset();
            return print_ref(bare);
        },
        out);
    return out;
}

std::string format_number(double v) {
    if (v == 0.0) return "0";
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), end);
}

std::optional<double> parse_number(std::string_view text) {
    if (text.empty()) return std::nullopt;
    bool negative = text.front() == '-';
    auto body = negative ? text.substr(1) : text;
    if (body.empty() || !(is_digit(body.front()) || body.front() == '.')) return std::nullopt;
    double value = 0;
    auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), value, std::chars_format::general);
    if (ec != std::errc() || ptr != body.data() + body.size() || !std::isfinite(value)) return std::nullopt;
    return negative ? -value : value;
}

std::string quote_text(std::string_view text) {
    std::string out = "\"";
    for (char c : text) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default: out += c;
        }
    }
    out += '"';
    return out;
}

std::optional<std::string> unquote_text(std::string_view text) {
    if (text.size() < 2 || text.front() != '"' || text.back() != '"') return std::nullopt;
    std::string out;
    for (std::size_t i = 1; i + 1 < text.size(); ++i) {
        char c = text[i];
        if (c == '"') return std::nullopt;
        if (c != '\\') {
            out += c;
            continue;
        }
        if (i + 2 >= text.size()) return std::nullopt;
        switch (text[++i]) {
            case '"': out += '"'; break;
            case '\\': out += '\\'; break;
            case 'n': out += '\n'; break;
            case 't': out += '\t'; break;
            case 'r': out += '\r'; break;
            default: return std::nullopt;
        }
    }
    return out;
}

ExprPtr map_refs(const ExprPtr& ast, const std::function<CellRef(const CellRef&)>& fn) {
    return std::visit(
        Overloaded{
            [&](const RefNode& r) { return make_ref(fn(r.ref)); },
            [&](const RangeNode& r) { return make_range(fn(r.first), fn(r.last)); },
            [&](const UnaryNode& u) { return make_unary(u.op, map_refs(u.operand, fn)); },
            [&](const BinaryNode& b) { return make_binary(b.op, map_refs(b.lhs, fn), map_refs(b.rhs, fn)); },
            [&](const CallNode& c) {
                std::vector<ExprPtr> args;
                args.reserve(c.args.size());
                for (const auto& a : c.args) args.push_back(map_refs(a, fn));
                return make_call(c.fn, std::move(args));
            },
            [&](const auto&) { return ast; },
        },
        ast->node);
}

void for_each_reference(const Expr& ast, const std::function<void(const Expr&)>& fn) {
    std::visit(Overloaded{
                   [&](const RefNode&) { fn(ast); },
                   [&](const RangeNode&) { fn(ast); },
                   [&](const UnaryNode& u) { for_each_reference(*u.operand, fn); },
                   [&](const BinaryNode& b) {
                       for_each_reference(*b.lhs, fn);
                       for_each_reference(*b.rhs, fn);
                   },
                   [&](const CallNode& c) {
                       for (const auto& a : c.args) for_each_reference(*a, fn);
                   },
                   [](const auto&) {},
               },
               ast.node);
}

std::string NormalizedFormula::text() const {
    std::string out = "=";
    print_expr(
        *ast,
        [](const CellRef& r, bool tail) {
            return (tail ? std::string() : prefix_text(r)) + r1c1_axis('R', r.row, r.row_abs) + r1c1_axis('C', r.col, r.col_abs);
        },
        out);
    return out;
}

NormalizedFormula normalize_copy_relative(const Expr& ast, Address host) {
    auto root = std::make_shared<const Expr>(ast);
    return {map_refs(root, [host](const CellRef& r) {
        CellRef out = r;
        if (!r.col_abs) out.col = r.col - host.col;
        if (!r.row_abs) out.row = r.row - host.row;
        return out;
    })};
}

std::optional<ExprPtr> anchor_at(const NormalizedFormula& normalized, Address host) {
    bool ok = true;
    auto ast = map_refs(normalized.ast, [&](const CellRef& r) {
        CellRef out = r;
        if (!r.col_abs) out.col = r.col + host.col;
        if (!r.row_abs) out.row = r.row + host.row;
        if (out.col < 1 || out.col > kMaxColumn || out.row < 1 || out.row > kMaxRow) ok = false;
        return out;
    });
    if (!ok) return std::nullopt;
    return ast;
}

}  // namespace sheetguard
