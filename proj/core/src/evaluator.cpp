#include "eval_detail.hpp"

#include <cmath>

namespace sheetguard::detail {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

const ErrorValue* as_error(const Scalar& s) { return std::get_if<ErrorValue>(&s); }

Scalar error(ErrorCode code) { return ErrorValue{code}; }

Scalar finite_or_div0(double v) {
    if (!std::isfinite(v)) return error(ErrorCode::Div0);
    return v;
}

/// Empty -> 0; text and booleans are type errors.
std::optional<double> to_number(const Scalar& s) {
    if (std::holds_alternative<Empty>(s)) return 0.0;
    if (const auto* d = std::get_if<double>(&s)) return *d;
    return std::nullopt;
}

}  // namespace

double round_half_away(double x, double digits) {
    auto n = std::trunc(digits);
    if (n >= 0) {
        auto scale = std::pow(10.0, n);
        return std::round(x * scale) / scale;
    }
    auto scale = std::pow(10.0, -n);
    return std::round(x / scale) * scale;
}

CellValue to_cell_value(const Scalar& s) {
    return std::visit(Overloaded{
                          [](Empty) -> CellValue { return 0.0; },
                          [](double d) -> CellValue { return d; },
                          [](const std::string& t) -> CellValue { return t; },
                          [](bool b) -> CellValue { return b; },
                          [](ErrorValue e) -> CellValue { return e; },
                      },
                      s);
}

Evaluator::Evaluator(const Workbook& w, const FlowGraph& g) : w_(w), g_(g), values_(g.nodes().size(), Empty{}) {
    for (std::size_t v = 0; v < g.nodes().size(); ++v) {
        if (g.in_cycle(v)) values_[v] = error(ErrorCode::Cycle);
    }
    for (auto v : g.topo_order()) {
        if (g.implicit(v)) continue;
        const auto& id = g.id(v);
        const auto* cell = w.find(id);
        if (!cell->is_formula()) {
            std::visit([&](const auto& lit) { values_[v] = lit; }, cell->literal());
            continue;
        }
        if (g.cycle_tainted(v)) {
            values_[v] = error(ErrorCode::Cycle);
            continue;
        }
        auto result = eval(*cell->formula(), id);
        if (std::holds_alternative<Empty>(result)) result = 0.0;
        values_[v] = std::move(result);
    }
}

Scalar Evaluator::eval_ref(const CellRef& ref, const CellId& host) const {
    if (ref.external()) return error(ErrorCode::Ext);
    auto target = resolve_ref(ref, host);
    auto idx = g_.index_of(*target);
    if (!idx) return error(ErrorCode::Ref);
    return values_[*idx];
}

Scalar Evaluator::eval(const Expr& e, const CellId& host) const {
    return std::visit(
        Overloaded{
            [](const NumberNode& n) -> Scalar { return n.value; },
            [](const TextNode& t) -> Scalar { return t.value; },
            [](const BooleanNode& b) -> Scalar { return b.value; },
            [&](const RefNode& r) -> Scalar { return eval_ref(r.ref, host); },
            [&](const RangeNode& r) -> Scalar {
                if (r.first.external()) return error(ErrorCode::Ext);
                return error(ErrorCode::Value);
            },
            [&](const UnaryNode& u) -> Scalar {
                auto v = eval(*u.operand, host);
                if (const auto* err = as_error(v)) return *err;
                auto x = to_number(v);
                if (!x) return error(ErrorCode::Value);
                return -*x;
            },
            [&](const BinaryNode& b) -> Scalar { return eval_binary(b, host); },
            [&](const CallNode& c) -> Scalar { return eval_call(c, host); },
        },
        e.node);
}

Scalar Evaluator::eval_binary(const BinaryNode& b, const CellId& host) const {
    auto lhs = eval(*b.lhs, host);
    auto rhs = eval(*b.rhs, host);
    if (const auto* err = as_error(lhs)) return *err;
    if (const auto* err = as_error(rhs)) return *err;

    if (is_comparison(b.op)) {
        // Empty compares as the number 0; mixed types are a VALUE error.
        auto l = std::holds_alternative<Empty>(lhs) ? Scalar{0.0} : lhs;
        auto r = std::holds_alternative<Empty>(rhs) ? Scalar{0.0} : rhs;
        if (l.index() != r.index()) return error(ErrorCode::Value);
        int cmp = 0;
        if (const auto* x = std::get_if<double>(&l)) {
            auto y = std::get<double>(r);
            cmp = *x < y ? -1 : (*x > y ? 1 : 0);
        } else if (const auto* s = std::get_if<std::string>(&l)) {
            auto c = s->compare(std::get<std::string>(r));
            cmp = c < 0 ? -1 : (c > 0 ? 1 : 0);
        } else {
            cmp = static_cast<int>(std::get<bool>(l)) - static_cast<int>(std::get<bool>(r));
        }
        switch (b.op) {
            case BinaryOp::Eq: return cmp == 0;
            case BinaryOp::Ne: return cmp != 0;
            case BinaryOp::Lt: return cmp < 0;
            case BinaryOp::Le: return cmp <= 0;
            case BinaryOp::Gt: return cmp > 0;
            default: return cmp >= 0;
        }
    }

    auto x = to_number(lhs);
    auto y = to_number(rhs);
    if (!x || !y) return error(ErrorCode::Value);
    switch (b.op) {
        case BinaryOp::Add: return finite_or_div0(*x + *y);
        case BinaryOp::Sub: return finite_or_div0(*x - *y);
        case BinaryOp::Mul: return finite_or_div0(*x * *y);
        case BinaryOp::Div:
            if (*y == 0.0) return error(ErrorCode::Div0);
            return finite_or_div0(*x / *y);
        default: return finite_or_div0(std::pow(*x, *y));
    }
}

Scalar Evaluator::eval_call(const CallNode& call, const CellId& host) const {
    switch (call.fn) {
        case Function::If: {
            auto cond = eval(*call.args[0], host);
            if (const auto* err = as_error(cond)) return *err;
            const auto* b = std::get_if<bool>(&cond);
            if (!b) return error(ErrorCode::Value);
            return eval(*call.args[*b ? 1 : 2], host);
        }
        case Function::Abs: {
            auto v = eval(*call.args[0], host);
            if (const auto* err = as_error(v)) return *err;
            auto x = to_number(v);
            if (!x) return error(ErrorCode::Value);
            return std::fabs(*x);
        }
        case Function::Round: {
            auto v = eval(*call.args[0], host);
            auto n = eval(*call.args[1], host);
            if (const auto* err = as_error(v)) return *err;
            if (const auto* err = as_error(n)) return *err;
            auto x = to_number(v);
            auto d = to_number(n);
            if (!x || !d) return error(ErrorCode::Value);
            return finite_or_div0(round_half_away(*x, *d));
        }
        default: break;
    }

    // Aggregates: flatten arguments into items, left to right.
    std::vector<Scalar> items;
    for (const auto& arg : call.args) {
        if (const auto* range = std::get_if<RangeNode>(&arg->node)) {
            if (range->first.external()) {
                items.emplace_back(error(ErrorCode::Ext));
                continue;
            }
            auto cells = expand_range(*range, host);
            if (!cells) {
                items.emplace_back(error(ErrorCode::Ref));
                continue;
            }
            for (const auto& id : *cells) {
                auto idx = g_.index_of(id);
                items.push_back(idx ? values_[*idx] : error(ErrorCode::Ref));
            }
        } else {
            items.push_back(eval(*arg, host));
        }
    }
    for (const auto& item : items) {
        if (const auto* err = as_error(item)) return *err;
    }
    if (call.fn == Function::Count) {
        double n = 0;
        for (const auto& item : items) n += std::holds_alternative<double>(item) ? 1 : 0;
        return n;
    }
    std::vector<double> numbers;
    numbers.reserve(items.size());
    for (const auto& item : items) {
        auto x = to_number(item);
        if (!x) return error(ErrorCode::Value);
        numbers.push_back(*x);
    }
    switch (call.fn) {
        case Function::Sum:
        case Function::Average: {
            double sum = 0.0;
            for (auto x : numbers) sum += x;
            if (!std::isfinite(sum)) return error(ErrorCode::Div0);
            if (call.fn == Function::Sum) return sum;
            return finite_or_div0(sum / static_cast<double>(numbers.size()));
        }
        case Function::Min: {
            double m = numbers.front();
            for (auto x : numbers) m = std::fmin(m, x);
            return m;
        }
        default: {
            double m = numbers.front();
            for (auto x : numbers) m = std::fmax(m, x);
            return m;
        }
    }
}

}  // namespace sheetguard::detail
