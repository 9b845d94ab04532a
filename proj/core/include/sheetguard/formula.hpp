#pragma once

#include "sheetguard/address.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace sheetguard {

/// A cell reference as written in a formula. In a formula authored at a host
/// cell, `col`/`row` are grid coordinates. Inside a NormalizedFormula the
/// non-absolute axes hold signed offsets from the host instead.
struct CellRef {
    std::optional<std::string> book;
    std::optional<std::string> sheet;
    int col = 1;
    int row = 1;
    bool col_abs = false;
    bool row_abs = false;

    bool external() const noexcept { return book.has_value(); }

    friend bool operator==(const CellRef&, const CellRef&) = default;
};

enum class UnaryOp { Negate };
enum class BinaryOp { Add, Sub, Mul, Div, Pow, Eq, Ne, Lt, Le, Gt, Ge };
enum class Function { Sum, Average, Min, Max, Count, Abs, Round, If };

bool is_comparison(BinaryOp op) noexcept;
std::string_view symbol(BinaryOp op) noexcept;
std::string_view name(Function fn) noexcept;
std::optional<Function> function_by_name(std::string_view upper_name) noexcept;

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct NumberNode { double value; };
struct TextNode { std::string value; };
struct BooleanNode { bool value; };
struct RefNode { CellRef ref; };
/// Both endpoints carry the same book/sheet prefix.
struct RangeNode { CellRef first; CellRef last; };
struct UnaryNode { UnaryOp op; ExprPtr operand; };
struct BinaryNode { BinaryOp op; ExprPtr lhs; ExprPtr rhs; };
struct CallNode { Function fn; std::vector<ExprPtr> args; };

struct Expr {
    std::variant<NumberNode, TextNode, BooleanNode, RefNode, RangeNode, UnaryNode, BinaryNode, CallNode> node;
};

ExprPtr make_number(double v);
ExprPtr make_text(std::string v);
ExprPtr make_boolean(bool v);
ExprPtr make_ref(CellRef r);
ExprPtr make_range(CellRef first, CellRef last);
ExprPtr make_unary(UnaryOp op, ExprPtr operand);
ExprPtr make_binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs);
ExprPtr make_call(Function fn, std::vector<ExprPtr> args);

/// Deep structural equality. Numbers compare by value with -0 == 0.
bool structurally_equal(const Expr& a, const Expr& b);

/// Parses formula text starting with '='. The host is kept for error messages
/// only; references stay in A1 form with their `$` markers.
ExprPtr parse_formula(std::string_view text, Address host = {});

/// "=" followed by the canonical, fully parenthesized, whitespace-free form.
std::string print_formula_canonical(const Expr& ast);

/// Shortest decimal that round-trips to the same double; -0 prints as "0".
std::string format_number(double v);
/// Parses a decimal number literal (optional leading '-'), rejecting non-finite results.
std::optional<double> parse_number(std::string_view text);
/// Double-quoted with backslash escapes for '"', '\\', newline, tab and CR.
std::string quote_text(std::string_view text);
/// Inverse of quote_text; nullopt if `text` is not exactly one quoted string.
std::optional<std::string> unquote_text(std::string_view text);

std::string print_ref(const CellRef& r);

/// Formula in copy-relative form: relative axes are offsets from the host.
struct NormalizedFormula {
    ExprPtr ast;

    /// "=(R[-1]C*2)"-style text; identical for copy-equivalent formulas.
    std::string text() const;
};

NormalizedFormula normalize_copy_relative(const Expr& ast, Address host);

/// Inverse of normalization: places a normalized formula at `host`. Returns
/// nullopt if a relative reference would leave the grid.
std::optional<ExprPtr> anchor_at(const NormalizedFormula& normalized, Address host);

/// Applies `fn` to every reference (plain refs and both range endpoints) and
/// rebuilds the tree. Subtrees without references are shared.
ExprPtr map_refs(const ExprPtr& ast, const std::function<CellRef(const CellRef&)>& fn);

/// Visits every Ref and Range node, in source order.
void for_each_reference(const Expr& ast, const std::function<void(const Expr&)>& fn);

}  // namespace sheetguard
