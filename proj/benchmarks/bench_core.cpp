#include <sheetguard/areas.hpp>
#include <sheetguard/flowgraph.hpp>
#include <sheetguard/guard.hpp>
#include <sheetguard/intervals.hpp>
#include <sheetguard/workbook.hpp>

#include <benchmark/benchmark.h>

#include <string>

using namespace sheetguard;

namespace {

// A ledger-like sheet: inputs in A, copied formulas in B..E, one tampered row in the middle.
std::string ledger(int rows) {
    std::string s = "sgw 1\nsheet Main\n";
    for (int r = 1; r <= rows; ++r) {
        const auto n = std::to_string(r);
        s += "cell A" + n + " - " + std::to_string(r % 97 + 1) + "\n";
        s += "cell B" + n + " - =A" + n + "*1.2" + (r == rows / 2 ? "+1" : "") + "\n";
        s += "cell C" + n + " - =SUM(B$1:B" + n + ")\n";
        s += "cell D" + n + " - =IF(C" + n + ">100,C" + n + "-B" + n + ",B" + n + ")\n";
        s += "cell E" + n + " - =ROUND(D" + n + "/A" + n + ",2)\n";
    }
    return s;
}

std::string policy(int rows) {
    std::string s;
    for (int r = 1; r <= rows; ++r) s += "assert Main!A" + std::to_string(r) + " in [1, 100]\n";
    return s;
}

void BM_ParseWorkbook(benchmark::State& state) {
    const auto text = ledger(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(parse_workbook(text));
    state.SetItemsProcessed(state.iterations() * state.range(0) * 5);
}
BENCHMARK(BM_ParseWorkbook)->Range(16, 1024);

void BM_Evaluate(benchmark::State& state) {
    const auto w = parse_workbook(ledger(static_cast<int>(state.range(0))));
    for (auto _ : state) {
        auto g = build_flow_graph(w);
        benchmark::DoNotOptimize(evaluate(w, g));
    }
}
BENCHMARK(BM_Evaluate)->Range(16, 1024);

void BM_Partition(benchmark::State& state) {
    const auto w = parse_workbook(ledger(static_cast<int>(state.range(0))));
    const auto level = static_cast<EquivalenceLevel>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(partition(w, level));
}
BENCHMARK(BM_Partition)->ArgsProduct({{64, 512}, {0, 1, 2}});

void BM_DetectAnomalies(benchmark::State& state) {
    const auto w = parse_workbook(ledger(static_cast<int>(state.range(0))));
    const auto g = build_flow_graph(w);
    const auto copy = partition(w, EquivalenceLevel::Copy);
    for (auto _ : state) benchmark::DoNotOptimize(detect_anomalies(w, copy, g));
}
BENCHMARK(BM_DetectAnomalies)->Range(16, 1024);

void BM_Intervals(benchmark::State& state) {
    const auto rows = static_cast<int>(state.range(0));
    const auto w = parse_workbook(ledger(rows));
    const auto g = build_flow_graph(w);
    const auto p = parse_policy(policy(rows));
    for (auto _ : state) benchmark::DoNotOptimize(eval_intervals(w, g, p.assertions));
}
BENCHMARK(BM_Intervals)->Range(16, 1024);

void BM_Seal(benchmark::State& state) {
    const auto w = parse_workbook(ledger(static_cast<int>(state.range(0))));
    const auto roles = infer_roles(w, build_flow_graph(w));
    for (auto _ : state) benchmark::DoNotOptimize(seal(w, roles));
}
BENCHMARK(BM_Seal)->Range(16, 1024);

void BM_VerifySeal(benchmark::State& state) {
    const auto w = parse_workbook(ledger(static_cast<int>(state.range(0))));
    const auto roles = infer_roles(w, build_flow_graph(w));
    const auto m = seal(w, roles);
    for (auto _ : state) {
        auto r = infer_roles(w, build_flow_graph(w));
        benchmark::DoNotOptimize(verify_seal(w, r, m));
    }
}
BENCHMARK(BM_VerifySeal)->Range(16, 1024);

void BM_Separate(benchmark::State& state) {
    const auto w = parse_workbook(ledger(static_cast<int>(state.range(0))));
    const auto roles = infer_roles(w, build_flow_graph(w));
    for (auto _ : state) benchmark::DoNotOptimize(separate(w, roles));
}
BENCHMARK(BM_Separate)->Range(16, 256);

}  // namespace

BENCHMARK_MAIN();
