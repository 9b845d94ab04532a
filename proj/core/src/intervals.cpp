#include "sheetguard/intervals.hpp"
#include "sheetguard/error.hpp"
#include "eval_detail.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

namespace sheetguard {

Interval::Interval(double lo, double hi) : top_(false), lo_(lo), hi_(hi) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi) throw UsageError("invalid interval");
}

bool Interval::subset_of(const Interval& other) const noexcept {
    if (other.top_) return true;
    if (top_) return false;
    return other.lo_ <= lo_ && hi_ <= other.hi_;
}

bool Interval::intersects(const Interval& other) const noexcept {
    if (top_ || other.top_) return true;
    return lo_ <= other.hi_ && other.lo_ <= hi_;
}

Interval Interval::hull(const Interval& other) const noexcept {
    if (top_ || other.top_) return top();
    return Interval(std::min(lo_, other.lo_), std::max(hi_, other.hi_));
}

std::string to_string(const Interval& iv) {
    if (iv.is_top()) return "TOP";
    return "[" + format_number(iv.lo()) + ", " + format_number(iv.hi()) + "]";
}

std::string_view to_string(Role role) noexcept {
    switch (role) {
        case Role::Input: return "INPUT";
        case Role::Code: return "CODE";
        case Role::Output: return "OUTPUT";
        case Role::Label: return "LABEL";
    }
    return "?";
}

std::optional<Role> parse_role(std::string_view text) noexcept {
    std::string up(text);
    for (auto& c : up) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (up == "INPUT") return Role::Input;
    if (up == "CODE") return Role::Code;
    if (up == "OUTPUT") return Role::Output;
    if (up == "LABEL") return Role::Label;
    return std::nullopt;
}

std::string_view to_string(VerdictStatus status) noexcept {
    switch (status) {
        case VerdictStatus::Safe: return "SAFE";
        case VerdictStatus::Borderline: return "BORDERLINE";
        case VerdictStatus::RangeViolation: return "RANGE_VIOLATION";
        case VerdictStatus::ActualOut: return "ACTUAL_OUT";
        case VerdictStatus::Indeterminate: return "INDETERMINATE";
    }
    return "?";
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> words(std::string_view s, std::size_t max_words) {
    std::vector<std::string_view> out;
    s = trim(s);
    while (!s.empty() && out.size() + 1 < max_words) {
        auto sp = s.find_first_of(" \t");
        if (sp == std::string_view::npos) break;
        out.push_back(s.substr(0, sp));
        s = trim(s.substr(sp));
    }
    if (!s.empty()) out.push_back(s);
    return out;
}

}  // namespace

Policy parse_policy(std::string_view text) {
    Policy policy;
    int lineno = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto nl = text.find('\n', start);
        auto raw = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
        start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++lineno;
        auto line = trim(raw);
        if (line.empty() || line.front() == '#') continue;

        auto parts = words(line, 4);
        auto cell_of = [&](std::string_view token) {
            auto id = parse_cell_id(token);
            if (!id) throw ParseError("expected a Sheet!A1 cell, got '" + std::string(token) + "'", lineno, 0);
            return *id;
        };
        if (parts[0] == "assert") {
            if (parts.size() != 4 || parts[2] != "in") throw ParseError("expected 'assert <Sheet!A1> in [lo, hi]'", lineno, 0);
            auto cell = cell_of(parts[1]);
            auto body = parts[3];
            if (body.size() < 2 || body.front() != '[' || body.back() != ']') {
                throw ParseError("interval must be written [lo, hi]", lineno, 0);
            }
            body = body.substr(1, body.size() - 2);
            auto comma = body.find(',');
            if (comma == std::string_view::npos) throw ParseError("interval must be written [lo, hi]", lineno, 0);
            auto lo = parse_number(trim(body.substr(0, comma)));
            auto hi = parse_number(trim(body.substr(comma + 1)));
            if (!lo || !hi) throw ParseError("malformed interval bound", lineno, 0);
            if (*lo > *hi) throw ParseError("empty interval", lineno, 0);
            policy.assertions.insert_or_assign(cell, Interval(*lo, *hi));
        } else if (parts[0] == "role") {
            if (parts.size() != 3) throw ParseError("expected 'role <Sheet!A1> input|code|output|label'", lineno, 0);
            auto cell = cell_of(parts[1]);
            auto role = parse_role(parts[2]);
            if (!role) throw ParseError("unknown role '" + std::string(parts[2]) + "'", lineno, 0);
            policy.role_overrides.insert_or_assign(cell, *role);
        } else {
            throw ParseError("unknown directive '" + std::string(parts[0]) + "'", lineno, 0);
        }
    }
    return policy;
}

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

/// Interval-valued evaluation result. `kind` tracks whether the concrete value
/// is certainly a number, certainly an empty reference, or could be either.
struct IVal {
    enum class Kind { Number, Empty, Mixed };
    Interval iv = Interval::top();
    Kind kind = Kind::Number;

    bool top() const { return iv.is_top(); }
};

IVal top_value() { return {}; }
IVal number(Interval iv) { return {iv, IVal::Kind::Number}; }

/// Builds [lo, hi]; when any operand was a proper interval the bounds move one
/// ULP outward. Non-finite bounds give TOP.
IVal bounded(double lo, double hi, bool exact) {
    if (!exact) {
        lo = std::nextafter(lo, -std::numeric_limits<double>::infinity());
        hi = std::nextafter(hi, std::numeric_limits<double>::infinity());
    }
    if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi) return top_value();
    return number(Interval(lo, hi));
}

IVal add(const Interval& a, const Interval& b) { return bounded(a.lo() + b.lo(), a.hi() + b.hi(), a.is_point() && b.is_point()); }

IVal sub(const Interval& a, const Interval& b) { return bounded(a.lo() - b.hi(), a.hi() - b.lo(), a.is_point() && b.is_point()); }

IVal corners(double p1, double p2, double p3, double p4, bool exact) {
    return bounded(std::min({p1, p2, p3, p4}), std::max({p1, p2, p3, p4}), exact);
}

IVal mul(const Interval& a, const Interval& b) {
    return corners(a.lo() * b.lo(), a.lo() * b.hi(), a.hi() * b.lo(), a.hi() * b.hi(), a.is_point() && b.is_point());
}

IVal div(const Interval& a, const Interval& b) {
    if (b.lo() <= 0.0 && 0.0 <= b.hi()) return top_value();
    return corners(a.lo() / b.lo(), a.lo() / b.hi(), a.hi() / b.lo(), a.hi() / b.hi(), a.is_point() && b.is_point());
}

IVal power(const Interval& base, double k) {
    if (k == 0) return number(Interval::point(1.0));
    const bool exact = base.is_point();
    const double a = base.lo();
    const double b = base.hi();
    const bool even = std::fmod(k, 2.0) == 0.0;
    if (!even || a >= 0) return bounded(std::pow(a, k), std::pow(b, k), exact);
    if (b <= 0) return bounded(std::pow(b, k), std::pow(a, k), exact);
    return bounded(0.0, std::pow(std::max(-a, b), k), exact);
}

enum class Decision { True, False, Unknown };

Decision decide(BinaryOp op, const Interval& l, const Interval& r) {
    if (l.is_top() || r.is_top()) return Decision::Unknown;
    const double a = l.lo(), b = l.hi(), c = r.lo(), d = r.hi();
    auto pick = [](bool yes, bool no) { return yes ? Decision::True : (no ? Decision::False : Decision::Unknown); };
    switch (op) {
        case BinaryOp::Lt: return pick(b < c, a >= d);
        case BinaryOp::Le: return pick(b <= c, a > d);
        case BinaryOp::Gt: return pick(a > d, b <= c);
        case BinaryOp::Ge: return pick(a >= d, b < c);
        case BinaryOp::Eq: return pick(a == b && c == d && a == c, b < c || d < a);
        case BinaryOp::Ne: return pick(b < c || d < a, a == b && c == d && a == c);
        default: return Decision::Unknown;
    }
}

class IntervalEvaluator {
public:
    IntervalEvaluator(const Workbook& w, const FlowGraph& g, const AssertionSet& assertions, IntervalResult& result)
        : g_(g), values_(g.nodes().size()) {
        for (std::size_t v = 0; v < g.nodes().size(); ++v) {
            if (g.implicit(v)) values_[v] = {Interval::point(0.0), IVal::Kind::Empty};
        }
        for (auto v : g.topo_order()) {
            if (g.implicit(v)) continue;
            const auto& id = g.id(v);
            const auto* cell = w.find(id);
            if (!cell->is_formula()) {
                const auto* number_value = std::get_if<double>(&cell->literal());
                if (!number_value) continue;  // text and booleans stay TOP
                if (auto a = assertions.find(id); a != assertions.end()) {
                    values_[v] = number(a->second);
                } else {
                    values_[v] = number(Interval::point(*number_value));
                    if (!g.direct_dependents(v).empty()) result.unasserted_inputs.insert(id);
                }
                continue;
            }
            if (g.cycle_tainted(v)) continue;
            auto r = eval(*cell->formula(), id);
            if (r.kind != IVal::Kind::Number) r = number(r.iv.is_top() ? Interval::top() : r.iv.hull(Interval::point(0.0)));
            values_[v] = r;
        }
        for (std::size_t v = 0; v < g.nodes().size(); ++v) {
            if (!g.implicit(v)) result.intervals.emplace(g.id(v), values_[v].iv);
        }
    }

private:
    IVal node(const CellId& id) const {
        auto idx = g_.index_of(id);
        if (!idx) return top_value();
        return values_[*idx];
    }

    IVal eval(const Expr& e, const CellId& host) const {
        return std::visit(
            Overloaded{
                [](const NumberNode& n) { return number(Interval::point(n.value)); },
                [](const TextNode&) { return top_value(); },
                [](const BooleanNode&) { return top_value(); },
                [&](const RefNode& r) {
                    if (r.ref.external()) return top_value();
                    return node(*resolve_ref(r.ref, host));
                },
                [](const RangeNode&) { return top_value(); },
                [&](const UnaryNode& u) {
                    auto x = eval(*u.operand, host);
                    if (x.top()) return top_value();
                    return number(Interval(-x.iv.hi(), -x.iv.lo()));
                },
                [&](const BinaryNode& b) { return eval_binary(b, host); },
                [&](const CallNode& c) { return eval_call(c, host); },
            },
            e.node);
    }

    IVal eval_binary(const BinaryNode& b, const CellId& host) const {
        if (is_comparison(b.op)) return top_value();
        auto l = eval(*b.lhs, host);
        if (b.op == BinaryOp::Pow) {
            const auto* k = std::get_if<NumberNode>(&b.rhs->node);
            if (!k && !l.top() && l.iv.is_point()) {
                // point base and point exponent: same as the concrete evaluation
                auto r = eval(*b.rhs, host);
                if (r.top() || !r.iv.is_point()) return top_value();
                const double p = std::pow(l.iv.lo(), r.iv.lo());
                return std::isfinite(p) ? number(Interval::point(p)) : top_value();
            }
            if (l.top() || !k || k->value < 0 || k->value != std::floor(k->value)) return top_value();
            return power(l.iv, k->value);
        }
        auto r = eval(*b.rhs, host);
        if (l.top() || r.top()) return top_value();
        switch (b.op) {
            case BinaryOp::Add: return add(l.iv, r.iv);
            case BinaryOp::Sub: return sub(l.iv, r.iv);
            case BinaryOp::Mul: return mul(l.iv, r.iv);
            default: return div(l.iv, r.iv);
        }
    }

    IVal eval_call(const CallNode& call, const CellId& host) const {
        switch (call.fn) {
            case Function::If: {
                auto decision = Decision::Unknown;
                const auto& cond = call.args[0]->node;
                if (const auto* lit = std::get_if<BooleanNode>(&cond)) {
                    decision = lit->value ? Decision::True : Decision::False;
                } else if (const auto* cmp = std::get_if<BinaryNode>(&cond); cmp && is_comparison(cmp->op)) {
                    decision = decide(cmp->op, eval(*cmp->lhs, host).iv, eval(*cmp->rhs, host).iv);
                }
                if (decision == Decision::True) return eval(*call.args[1], host);
                if (decision == Decision::False) return eval(*call.args[2], host);
                auto a = eval(*call.args[1], host);
                auto b = eval(*call.args[2], host);
                if (a.top() || b.top()) return top_value();
                auto kind = a.kind == b.kind ? a.kind : IVal::Kind::Mixed;
                return {a.iv.hull(b.iv), kind};
            }
            case Function::Abs: {
                auto x = eval(*call.args[0], host);
                if (x.top()) return top_value();
                const double a = x.iv.lo(), b = x.iv.hi();
                if (a >= 0) return number(Interval(a, b));
                if (b <= 0) return number(Interval(-b, -a));
                return number(Interval(0.0, std::max(-a, b)));
            }
            case Function::Round: {
                auto x = eval(*call.args[0], host);
                auto n = eval(*call.args[1], host);
                if (x.top() || n.top() || !n.iv.is_point()) return top_value();
                return bounded(detail::round_half_away(x.iv.lo(), n.iv.lo()), detail::round_half_away(x.iv.hi(), n.iv.lo()),
                               x.iv.is_point());
            }
            default: break;
        }

        std::vector<IVal> items;
        for (const auto& arg : call.args) {
            if (const auto* range = std::get_if<RangeNode>(&arg->node)) {
                if (range->first.external()) return top_value();
                auto cells = detail::expand_range(*range, host);
                if (!cells) return top_value();
                for (const auto& id : *cells) items.push_back(node(id));
            } else {
                items.push_back(eval(*arg, host));
            }
        }
        if (call.fn == Function::Count) {
            double certain = 0;
            double possible = 0;
            for (const auto& item : items) {
                if (item.top() || item.kind == IVal::Kind::Mixed) {
                    possible += 1;
                } else if (item.kind == IVal::Kind::Number) {
                    certain += 1;
                }
            }
            return number(Interval(certain, certain + possible));
        }
        for (const auto& item : items) {
            if (item.top()) return top_value();
        }
        switch (call.fn) {
            case Function::Sum:
            case Function::Average: {
                IVal sum = number(items.front().iv);
                for (std::size_t i = 1; i < items.size(); ++i) {
                    sum = add(sum.iv, items[i].iv);
                    if (sum.top()) return sum;
                }
                if (call.fn == Function::Sum) return sum;
                return div(sum.iv, Interval::point(static_cast<double>(items.size())));
            }
            case Function::Min:
            case Function::Max: {
                const bool is_min = call.fn == Function::Min;
                double lo = items.front().iv.lo();
                double hi = items.front().iv.hi();
                for (const auto& item : items) {
                    lo = is_min ? std::fmin(lo, item.iv.lo()) : std::fmax(lo, item.iv.lo());
                    hi = is_min ? std::fmin(hi, item.iv.hi()) : std::fmax(hi, item.iv.hi());
                }
                return number(Interval(lo, hi));
            }
            default: return top_value();
        }
    }

    const FlowGraph& g_;
    std::vector<IVal> values_;
};

}  // namespace

IntervalResult eval_intervals(const Workbook& w, const FlowGraph& g, const AssertionSet& assertions) {
    IntervalResult result;
    IntervalEvaluator(w, g, assertions, result);
    return result;
}

VerdictStatus classify(const Interval& computed, const Interval& expected, const CellValue& actual) {
    if (computed.is_top() || std::holds_alternative<ErrorValue>(actual)) return VerdictStatus::Indeterminate;
    const auto* x = std::get_if<double>(&actual);
    if (!x) return VerdictStatus::Indeterminate;
    if (!computed.intersects(expected)) return VerdictStatus::RangeViolation;
    if (!expected.contains(*x)) return VerdictStatus::ActualOut;
    if (computed.subset_of(expected)) return VerdictStatus::Safe;
    return VerdictStatus::Borderline;
}

AssertionReport check_assertions(const Workbook& w, const FlowGraph& g, const AssertionSet& assertions) {
    AssertionReport report;
    auto intervals = eval_intervals(w, g, assertions);
    auto values = evaluate(w, g);

    std::vector<CellId> asserted;
    for (const auto& [cell, expected] : assertions) {
        if (!w.find(cell)) {
            report.policy_errors.push_back("assertion on empty or unknown cell " + to_string(cell));
            continue;
        }
        asserted.push_back(cell);
    }
    std::sort(asserted.begin(), asserted.end(), [&](const CellId& a, const CellId& b) { return w.workbook_less(a, b); });

    std::set<CellId> feeding;
    for (const auto& cell : asserted) {
        Verdict v;
        v.cell = cell;
        v.computed = intervals.intervals.at(cell);
        v.expected = assertions.at(cell);
        v.actual = values.at(cell);
        v.status = classify(v.computed, v.expected, v.actual);
        report.verdicts.push_back(std::move(v));
        for (const auto& p : precedents(g, cell, true)) {
            if (intervals.unasserted_inputs.count(p)) feeding.insert(p);
        }
    }
    report.unasserted_inputs.assign(feeding.begin(), feeding.end());
    std::sort(report.unasserted_inputs.begin(), report.unasserted_inputs.end(),
              [&](const CellId& a, const CellId& b) { return w.workbook_less(a, b); });
    return report;
}

}  // namespace sheetguard
