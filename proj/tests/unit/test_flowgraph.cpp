#include "fixtures.hpp"
#include "generators.hpp"
#include "oracles.hpp"

#include <sheetguard/flowgraph.hpp>

#include <doctest.h>

#include <algorithm>

using namespace sheetguard;
using namespace sheetguard::testing;

namespace {

std::vector<std::string> names(const FlowGraph& g, const std::vector<FlowGraph::Node>& nodes) {
    std::vector<std::string> out;
    for (auto n : nodes) out.push_back(to_string(g.id(n)));
    return out;
}

std::vector<std::string> names(const std::vector<CellId>& cells) {
    std::vector<std::string> out;
    for (const auto& c : cells) out.push_back(to_string(c));
    return out;
}

CellValue value_of(std::string_view lines, std::string_view cell) {
    auto w = main_sheet(lines);
    return evaluate(w, build_flow_graph(w)).at(id(cell));
}

bool is_error(const CellValue& v, ErrorCode code) {
    const auto* e = std::get_if<ErrorValue>(&v);
    return e && e->code == code;
}

double number(const CellValue& v) { return std::get<double>(v); }

}  // namespace

TEST_CASE("build_flow_graph examples") {
    auto w = main_sheet("cell B1 - 1000\ncell B3 - =B1*0.2\n");
    auto g = build_flow_graph(w);
    REQUIRE(g.edges().size() == 1);
    CHECK(to_string(g.id(g.edges()[0].first)) == "Main!B1");
    CHECK(to_string(g.id(g.edges()[0].second)) == "Main!B3");
    CHECK(names(g, g.topo_order()) == std::vector<std::string>{"Main!B1", "Main!B3"});

    auto cyc = main_sheet("cell A1 - =B1\ncell B1 - =A1\n");
    auto gc = build_flow_graph(cyc);
    REQUIRE(gc.cycles().size() == 1);
    CHECK(names(gc, gc.cycles()[0]) == std::vector<std::string>{"Main!A1", "Main!B1"});
    CHECK(gc.topo_order().empty());

    auto rng = main_sheet("cell C1 - =SUM(A1:A3)\n");
    auto gr = build_flow_graph(rng);
    CHECK(gr.edges().size() == 3);
    for (auto src : {"Main!A1", "Main!A2", "Main!A3"}) {
        auto n = gr.index_of(id(src));
        REQUIRE(n);
        CHECK(gr.implicit(*n));
        CHECK(names(gr, gr.direct_dependents(*n)) == std::vector<std::string>{"Main!C1"});
    }
}

TEST_CASE("self loops are cycles") {
    auto w = main_sheet("cell A1 - =A1+1\ncell B1 - =A1\ncell C1 - 5\n");
    auto g = build_flow_graph(w);
    REQUIRE(g.cycles().size() == 1);
    CHECK(g.in_cycle(*g.index_of(id("Main!A1"))));
    CHECK_FALSE(g.in_cycle(*g.index_of(id("Main!B1"))));
    CHECK(g.cycle_tainted(*g.index_of(id("Main!B1"))));
    auto v = evaluate(w, g);
    CHECK(is_error(v.at(id("Main!A1")), ErrorCode::Cycle));
    CHECK(is_error(v.at(id("Main!B1")), ErrorCode::Cycle));
    CHECK(number(v.at(id("Main!C1"))) == 5);
}

TEST_CASE("external and dangling references") {
    auto w = main_sheet("cell D9 h =[Ext]S!B2\ncell E1 - =Nowhere!A1\ncell E2 - =E1+1\n");
    auto g = build_flow_graph(w);
    CHECK(g.external_refs().at(id("Main!D9")) == std::vector<std::string>{"[Ext]S!B2"});
    CHECK(g.ref_errors().count(id("Main!E1")));
    CHECK(g.edges().size() == 1);
    auto v = evaluate(w, g);
    CHECK(is_error(v.at(id("Main!D9")), ErrorCode::Ext));
    CHECK(is_error(v.at(id("Main!E1")), ErrorCode::Ref));
    CHECK(is_error(v.at(id("Main!E2")), ErrorCode::Ref));
}

TEST_CASE("evaluate examples") {
    CHECK(number(value_of("cell B1 - 1000\ncell B3 - =B1*0.2\n", "Main!B3")) == 200);
    CHECK(is_error(value_of("cell A1 - =1/0\n", "Main!A1"), ErrorCode::Div0));
    CHECK(number(value_of("cell A1 - =IF(2>1,10,20)\n", "Main!A1")) == 10);
}

TEST_CASE("evaluation semantics") {
    CHECK(number(value_of("cell A1 - =B1+1\n", "Main!A1")) == 1);
    CHECK(number(value_of("cell A1 - =SUM(B1:B3)\ncell B2 - 4\n", "Main!A1")) == 4);
    CHECK(number(value_of("cell A1 - =COUNT(B1:B4)\ncell B2 - 4\ncell B3 - \"x\"\ncell B4 - TRUE\n", "Main!A1")) == 1);
    CHECK(number(value_of("cell A1 - =AVERAGE(B1:B2,6)\ncell B1 - 2\ncell B2 - 4\n", "Main!A1")) == 4);
    CHECK(number(value_of("cell A1 - =MIN(B1:B2)\ncell B1 - 2\ncell B2 - -4\n", "Main!A1")) == -4);
    CHECK(number(value_of("cell A1 - =MAX(B1:B2)\ncell B1 - 2\ncell B2 - -4\n", "Main!A1")) == 2);
    CHECK(is_error(value_of("cell A1 - =B1*2\ncell B1 - \"x\"\n", "Main!A1"), ErrorCode::Value));
    CHECK(is_error(value_of("cell A1 - =IF(1,2,3)\n", "Main!A1"), ErrorCode::Value));
    CHECK(number(value_of("cell A1 - =ROUND(2.5,0)\n", "Main!A1")) == 3);
    CHECK(number(value_of("cell A1 - =ROUND(-2.5,0)\n", "Main!A1")) == -3);
    CHECK(number(value_of("cell A1 - =ROUND(1234.5,-2.9)\n", "Main!A1")) == 1200);
    CHECK(number(value_of("cell A1 - =ROUND(0.125,2)\n", "Main!A1")) == doctest::Approx(0.13));
    CHECK(number(value_of("cell A1 - =ABS(-3)\n", "Main!A1")) == 3);
    CHECK(number(value_of("cell A1 - =2^3^2\n", "Main!A1")) == 64);
    CHECK(is_error(value_of("cell A1 - =10^400\n", "Main!A1"), ErrorCode::Div0));
    CHECK(is_error(value_of("cell A1 - =0/0\n", "Main!A1"), ErrorCode::Div0));
    // Leftmost error wins.
    CHECK(is_error(value_of("cell A1 - =(1/0)+B1\ncell B1 - \"x\"\ncell C1 - =B1*1+1/0\n", "Main!A1"), ErrorCode::Div0));
    CHECK(is_error(value_of("cell C1 - =B1*1+1/0\ncell B1 - \"x\"\n", "Main!C1"), ErrorCode::Value));
    CHECK(std::get<bool>(value_of("cell A1 - =\"a\"<\"b\"\n", "Main!A1")));
    CHECK(std::get<std::string>(value_of("cell A1 - =IF(TRUE,\"yes\",1)\n", "Main!A1")) == "yes");
    CHECK(number(value_of("cell A1 - =IF(FALSE,1/0,7)\n", "Main!A1")) == 7);
}

TEST_CASE("precedents and dependents") {
    auto w = main_sheet("cell B1 - 1000\ncell B3 - =B1*0.2\n");
    auto g = build_flow_graph(w);
    CHECK(names(precedents(g, id("Main!B3"), false)) == std::vector<std::string>{"Main!B1"});
    CHECK(names(dependents(g, id("Main!B1"), false)) == std::vector<std::string>{"Main!B3"});
    CHECK(dependents(g, id("Main!B3"), true).empty());

    auto chain = main_sheet("cell A1 - 1\ncell B1 - =A1\ncell C1 - =B1\n");
    auto gc = build_flow_graph(chain);
    CHECK(names(precedents(gc, id("Main!C1"), true)) == std::vector<std::string>{"Main!B1", "Main!A1"});
    CHECK(precedents(gc, id("Main!A1"), true).empty());
    CHECK(names(dependents(gc, id("Main!A1"), true)) == std::vector<std::string>{"Main!B1", "Main!C1"});

    auto dup = main_sheet("cell A1 - 1\ncell B1 - =A1+A1\n");
    auto gd = build_flow_graph(dup);
    CHECK(names(dependents(gd, id("Main!A1"), false)) == std::vector<std::string>{"Main!B1"});
    CHECK(gd.edges().size() == 1);

    CHECK_THROWS(precedents(gd, id("Main!Z9"), false));
}

TEST_CASE("cycle completeness against a reachability oracle") {
    Rng rng(21);
    int with_cycles = 0;
    for (int i = 0; i < 300; ++i) {
        GenOptions o;
        o.cycles = true;
        o.sheets = uniform(rng, 1, 2);
        o.rows = uniform(rng, 3, 8);
        o.cols = uniform(rng, 2, 5);
        o.max_depth = 2;
        auto w = random_workbook(rng, o);
        auto g = build_flow_graph(w);
        auto values = evaluate(w, g);
        auto oracle = oracle_cycles(w);
        if (!oracle.on_cycle.empty()) ++with_cycles;
        for (FlowGraph::Node n = 0; n < g.nodes().size(); ++n) {
            const auto& cell = g.id(n);
            REQUIRE(g.in_cycle(n) == (oracle.on_cycle.count(cell) == 1));
            REQUIRE(g.cycle_tainted(n) == (oracle.tainted.count(cell) == 1));
        }
        for (const auto& [cell, v] : values) {
            INFO(to_string(cell));
            CHECK(is_error(v, ErrorCode::Cycle) == (oracle.tainted.count(cell) == 1));
        }
        std::size_t cyclic = oracle.on_cycle.size();
        std::size_t counted = 0;
        for (const auto& c : g.cycles()) counted += c.size();
        CHECK(counted == cyclic);
    }
    CHECK(with_cycles > 50);
}

TEST_CASE("topological soundness, determinism and locality") {
    Rng rng(22);
    for (int i = 0; i < 200; ++i) {
        GenOptions o;
        o.sheets = uniform(rng, 1, 3);
        o.cycles = chance(rng, 0.3);
        auto w = random_workbook(rng, o);
        auto g = build_flow_graph(w);
        for (const auto& [p, d] : g.edges()) {
            if (g.in_cycle(p) || g.in_cycle(d)) continue;
            REQUIRE(g.topo_rank(p) < g.topo_rank(d));
        }
        std::size_t non_cyclic = 0;
        for (FlowGraph::Node n = 0; n < g.nodes().size(); ++n) non_cyclic += g.in_cycle(n) ? 0 : 1;
        CHECK(g.topo_order().size() == non_cyclic);

        auto v1 = evaluate(w, g);
        auto v2 = evaluate(w, build_flow_graph(w));
        REQUIRE(v1.size() == v2.size());
        for (const auto& [cell, v] : v1) CHECK(values_identical(v, v2.at(cell)));

        // Changing a constant's literal keeps the edge set.
        auto w2 = w;
        for (const auto& cid : w.cell_ids()) {
            const auto* c = w.find(cid);
            if (!c->is_formula()) {
                w2.set(cid, Cell::constant(random_number(rng), c->hidden, c->locked));
                break;
            }
        }
        auto g2 = build_flow_graph(w2);
        CHECK(g2.edges() == g.edges());
        CHECK(g2.nodes() == g.nodes());
    }
}

TEST_CASE("values_identical and print_value") {
    CHECK(values_identical(CellValue(0.0), CellValue(-0.0)) == false);
    CHECK(values_identical(CellValue(1.0), CellValue(1.0)));
    CHECK_FALSE(values_identical(CellValue(1.0), CellValue(true)));
    CHECK(print_value(CellValue(200.0)) == "200");
    CHECK(print_value(CellValue(std::string("t"))) == "\"t\"");
    CHECK(print_value(CellValue(true)) == "TRUE");
    CHECK(print_value(CellValue(ErrorValue{ErrorCode::Div0})) == "#DIV0");
}
