// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include "fixtures.hpp"
#include "generators.hpp"
#include "oracles.hpp"
#include "properties.hpp"
#include "tempdir.hpp"

#include <sheetguard/audit.hpp>
#include <sheetguard/guard.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#ifndef SHEETGUARD_EXE
#error "SHEETGUARD_EXE must name the sheetguard executable"
#endif

using namespace sheetguard;
using namespace sheetguard::testing;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fixed(double v, int digits = 1) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(digits);
    s << v;
    return s.str();
}

Outcome interval_soundness(std::uint64_t seed) {
    constexpr int kWorkbooks = 100;
    constexpr int kDrawsPerWorkbook = 100;
    Rng rng(seed);
    SoundnessStats stats;
    const auto start = Clock::now();
    std::size_t largest = 0;
    for (int i = 0; i < kWorkbooks; ++i) {
        auto w = random_workbook(rng, soundness_options(rng));
        largest = std::max(largest, w.cell_count());
        check_soundness(rng, w, kDrawsPerWorkbook, stats);
    }
    const double elapsed = seconds_since(start);
    Outcome o;
    o.pass = stats.violations == 0 && stats.draws >= 10000 && largest <= 200 && elapsed <= 60.0;
    o.detail = std::to_string(kWorkbooks) + " workbooks (max " + std::to_string(largest) + " cells), " +
               std::to_string(stats.draws) + " draws, " + std::to_string(stats.checks) + " checked values, " +
               std::to_string(stats.violations) + " violations, " + fixed(elapsed) + " s";
    if (!stats.examples.empty()) o.detail += "\n  first violation: " + stats.examples.front();
    return o;
}

Outcome planted_fraud(std::uint64_t seed) {
    constexpr int kPerClass = 125;
    Rng rng(seed);
    int planted = 0;
    int detected = 0;
    std::array<int, 4> per_class{};
    std::string first_miss;
    for (int k = 0; k < 4; ++k) {
        const auto kind = static_cast<PlantKind>(k);
        for (int i = 0; i < kPerClass; ++i) {
            auto f = copy_run_fixture(rng, kind);
            auto target = plant(rng, f, kind);
            ++planted;
            if (planted_detected(f.workbook, target, kind)) {
                ++detected;
                ++per_class[static_cast<std::size_t>(k)];
            } else if (first_miss.empty()) {
                first_miss = to_string(target) + "\n" + print_workbook(f.workbook);
            }
        }
    }
    Outcome o;
    o.pass = planted >= 500 && detected == planted;
    o.detail = std::to_string(detected) + "/" + std::to_string(planted) + " detected (constant " +
               std::to_string(per_class[0]) + ", range " + std::to_string(per_class[1]) + ", overwrite " +
               std::to_string(per_class[2]) + ", hidden external " + std::to_string(per_class[3]) + ")";
    if (!first_miss.empty()) o.detail += "\n  first miss: " + first_miss;
    return o;
}

Outcome seal_integrity(std::uint64_t seed) {
    constexpr int kCases = 1000;
    Rng rng(seed);
    int mutations = 0;
    int mismatches = 0;
    int input_changes = 0;
    int matches = 0;
    std::string first_problem;
    while (mutations < kCases || input_changes < kCases) {
        GenOptions opts;
        opts.sheets = uniform(rng, 1, 3);
        opts.external = chance(rng, 0.2);
        auto w = random_workbook(rng, opts);
        auto roles = infer_roles(w, build_flow_graph(w));
        auto manifest = seal(w, roles);
        if (mutations < kCases) {
            auto mutated = w;
            auto what = mutate_sealed(rng, mutated, roles);
            ++mutations;
            if (!verify_seal(mutated, infer_roles(mutated, build_flow_graph(mutated)), manifest).match) {
                ++mismatches;
            } else if (first_problem.empty()) {
                first_problem = "undetected: " + what;
            }
        }
        if (input_changes < kCases) {
            auto changed = w;
            if (mutate_input(rng, changed, roles)) {
                ++input_changes;
                if (verify_seal(changed, infer_roles(changed, build_flow_graph(changed)), manifest).match) {
                    ++matches;
                } else if (first_problem.empty()) {
                    first_problem = "input change reported MISMATCH";
                }
            }
        }
    }
    Outcome o;
    o.pass = mismatches == mutations && matches == input_changes;
    o.detail = std::to_string(mismatches) + "/" + std::to_string(mutations) + " mutations MISMATCH, " +
               std::to_string(matches) + "/" + std::to_string(input_changes) + " input changes MATCH";
    if (!first_problem.empty()) o.detail += "\n  " + first_problem;
    return o;
}

Outcome separation(std::uint64_t seed) {
    constexpr int kWorkbooks = 200;
    Rng rng(seed);
    int good = 0;
    std::size_t outputs = 0;
    std::string first_problem;
    for (int i = 0; i < kWorkbooks; ++i) {
        GenOptions opts;
        opts.sheets = uniform(rng, 1, 3);
        opts.external = chance(rng, 0.2);
        opts.cycles = chance(rng, 0.1);
        auto w = random_workbook(rng, opts);
        auto roles = infer_roles(w, build_flow_graph(w));
        auto s = separate(w, roles);
        outputs += s.report.outputs.size();
        auto problem = check_separation(w, roles, s);
        if (problem.empty()) {
            ++good;
        } else if (first_problem.empty()) {
            first_problem = problem;
        }
    }
    Outcome o;
    o.pass = good == kWorkbooks;
    o.detail = std::to_string(good) + "/" + std::to_string(kWorkbooks) + " workbooks preserved and pure (" +
               std::to_string(outputs) + " outputs compared)";
    if (!first_problem.empty()) o.detail += "\n  " + first_problem;
    return o;
}

Outcome oracle_equivalence(std::uint64_t seed) {
    constexpr int kInstances = 100;
    Rng rng(seed);
    int instances = 0;
    int exact = 0;
    std::size_t largest = 0;
    std::string first_problem;
    while (instances < kInstances) {
        GenOptions opts;
        opts.sheets = uniform(rng, 1, 2);
        opts.rows = uniform(rng, 4, 12);
        opts.cols = uniform(rng, 2, 5);
        opts.external = chance(rng, 0.2);
        auto w = random_workbook(rng, opts);
        std::size_t formulas = 0;
        for (const auto& id : w.cell_ids()) formulas += w.find(id)->is_formula() ? 1 : 0;
        if (formulas == 0 || formulas > 50) continue;
        ++instances;
        largest = std::max(largest, formulas);
        bool all = true;
        for (auto level : {EquivalenceLevel::Copy, EquivalenceLevel::Logical, EquivalenceLevel::Structural}) {
            if (as_groups(partition(w, level)) != oracle_partition(w, level)) {
                all = false;
                if (first_problem.empty()) first_problem = std::string(to_string(level)) + " differs\n" + print_workbook(w);
            }
        }
        exact += all ? 1 : 0;
    }
    Outcome o;
    o.pass = exact == instances;
    o.detail = std::to_string(exact) + "/" + std::to_string(instances) +
               " instances exact at COPY, LOGICAL and STRUCTURAL (max " + std::to_string(largest) + " formula cells)";
    if (!first_problem.empty()) o.detail += "\n  " + first_problem;
    return o;
}

std::string session_behaviour() {
    auto w = split_column_book();
    auto g = build_flow_graph(w);
    auto copy = partition(w, EquivalenceLevel::Copy);
    auto plan = plan_audit(w, g, &copy, detect_anomalies(w, copy, g), Strategy::Areas);
    if (plan.items.empty() || plan.items.front().covered_cells != std::vector<CellId>{id("Main!B4")}) {
        return "AREAS plan does not start at the B4 singleton";
    }
    AuditSession s("acceptance", plan, 30, program_digest(w), "2026-01-01T00:00:00Z");
    s.mark(1, ItemState::Suspect, "adds 10");
    s.set_elapsed(4);
    const auto doc = save_session(s);
    if (!(load_session(doc, program_digest(w)) == s)) return "round-trip changed the session";

    auto code_edit = w;
    code_edit.set(id("Main!B4"), Cell::formula_cell(parse_formula("=A4*2+11")));
    if (!load_session(doc, program_digest(code_edit)).invalidated()) return "code edit did not invalidate";

    auto input_edit = w;
    input_edit.set(id("Main!A4"), Cell::constant(99.0));
    if (load_session(doc, program_digest(input_edit)).invalidated()) return "input edit invalidated the session";
    return "";
}

Outcome audit_economy(std::uint64_t seed) {
    constexpr int kWorkbooks = 200;
    Rng rng(seed);
    int good = 0;
    std::string first_problem;
    for (int i = 0; i < kWorkbooks; ++i) {
        GenOptions opts;
        opts.sheets = uniform(rng, 1, 3);
        opts.external = chance(rng, 0.2);
        opts.cycles = chance(rng, 0.1);
        auto w = random_workbook(rng, opts);
        auto problem = check_audit_economy(rng, w);
        if (problem.empty()) {
            ++good;
        } else if (first_problem.empty()) {
            first_problem = problem;
        }
    }
    auto session = session_behaviour();
    Outcome o;
    o.pass = good == kWorkbooks && session.empty();
    o.detail = std::to_string(good) + "/" + std::to_string(kWorkbooks) +
               " workbooks economical with full coverage under SCAN, FLOW and AREAS; session round-trip and "
               "invalidation " +
               (session.empty() ? "ok" : "failed: " + session);
    if (!first_problem.empty()) o.detail += "\n  " + first_problem;
    return o;
}

std::string capture(const std::string& command) {
    std::string out;
    FILE* pipe = ::popen(command.c_str(), "r");
    if (!pipe) return "<popen failed>";
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
    ::pclose(pipe);
    return out;
}

Outcome determinism(std::uint64_t seed) {
    Rng rng(seed);
    TempDir dir;
    std::vector<std::string> books{dir.write("split.sgw", print_workbook(split_column_book())),
                                   dir.write("revenue.sgw", kRevenueSgw)};
    for (int i = 0; i < 4; ++i) {
        GenOptions opts;
        opts.sheets = uniform(rng, 1, 3);
        opts.external = true;
        books.push_back(dir.write("random" + std::to_string(i) + ".sgw", print_workbook(random_workbook(rng, opts))));
    }
    const std::string exe = SHEETGUARD_EXE;
    int compared = 0;
    int identical = 0;
    std::string first_problem;
    for (const auto& book : books) {
        std::vector<std::string> commands;
        for (const char* cmd : {"parse", "eval", "areas", "anomalies", "classes", "flow", "intervals", "roles",
                                "separate", "verify"}) {
            commands.push_back("'" + exe + "' " + cmd + " '" + book + "' --json");
        }
        commands.push_back("'" + exe + "' areas '" + book + "' --json --level structural");
        commands.push_back("SOURCE_DATE_EPOCH=1767225600 '" + exe + "' seal '" + book + "' --json");
        commands.push_back("'" + exe + "' seal '" + book + "' --created-at 2026-01-01T00:00:00Z");
        for (const auto& c : commands) {
            auto a = capture(c + " 2>/dev/null");
            auto b = capture(c + " 2>/dev/null");
            ++compared;
            if (a == b && !a.empty()) {
                ++identical;
            } else if (first_problem.empty()) {
                first_problem = "differs: " + c;
            }
        }
    }
    Outcome o;
    o.pass = identical == compared;
    o.detail = std::to_string(identical) + "/" + std::to_string(compared) +
               " command outputs byte-identical across two runs (" + std::to_string(books.size()) + " workbooks)";
    if (!first_problem.empty()) o.detail += "\n  " + first_problem;
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app("sheetguard acceptance suite");
    std::uint64_t seed = 20261016;
    std::string only;
    app.add_option("--seed", seed, "Base RNG seed");
    app.add_option("--only", only, "Run a single criterion");
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<std::string, std::function<Outcome(std::uint64_t)>>> criteria{
        {"interval-soundness", interval_soundness}, {"planted-fraud", planted_fraud},
        {"seal-integrity", seal_integrity},         {"separation-preservation", separation},
        {"oracle-equivalence", oracle_equivalence}, {"audit-economy", audit_economy},
        {"determinism", determinism},
    };
    bool all = true;
    std::uint64_t k = 0;
    for (const auto& [name, check] : criteria) {
        ++k;
        if (!only.empty() && only != name) continue;
        Outcome o;
        try {
            o = check(seed + k);
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        all = all && o.pass;
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    }
    return all ? 0 : 1;
}
