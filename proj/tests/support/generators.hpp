#pragma once

#include <sheetguard/workbook.hpp>

#include <random>
#include <vector>

namespace sheetguard::testing {

using Rng = std::mt19937_64;

struct GenOptions {
    int sheets = 1;
    int rows = 12;
    int cols = 5;
    /// Upper bound on non-empty cells per workbook.
    int max_cells = 200;
    /// Probability that a free slot in columns >= 2 starts a copied run.
    double run_ratio = 0.45;
    double formula_ratio = 0.5;
    double text_ratio = 0.05;
    double bool_ratio = 0.02;
    double hidden_ratio = 0.03;
    double locked_ratio = 0.1;
    /// References may point anywhere, so cycles can form.
    bool cycles = false;
    bool external = false;
    /// Only numbers and numeric operations (no text literals or comparisons on text).
    bool numeric_only = false;
    int max_depth = 3;
};

/// Random workbook. Column 1 holds constants; other columns mix copied runs,
/// lone formulas, constants and gaps. Without `cycles`, a formula only refers
/// to columns to its left or to earlier sheets, so the workbook is acyclic and
/// copying down a column keeps it so.
Workbook random_workbook(Rng& rng, const GenOptions& options = {});

/// Random formula for a cell at `host` on sheet `sheet` (index `sheet_index`
/// into `sheet_names`).
ExprPtr random_formula(Rng& rng, const GenOptions& options, const std::vector<std::string>& sheet_names,
                       int sheet_index, Address host);

/// Random sheet-local formula pair/triple material for equivalence law tests.
ExprPtr random_expr(Rng& rng, int depth, Address host, bool numeric_only = false);

double random_number(Rng& rng);

inline int uniform(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
inline double uniform_real(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
inline bool chance(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng); }

/// A copied run of `length` cells along a column (or row) of sheet "Main",
/// with constants to the left/top feeding it.
struct RunFixture {
    Workbook workbook;
    std::vector<CellId> run;  // in order along the run
    bool vertical = true;
};

enum class PlantKind { ConstantTweak, RangeShortening, FormulaToConstant, HiddenExternal };

/// Builds a run whose template suits `kind` (a numeric literal for tweaks, an
/// aggregate range for shortening).
RunFixture copy_run_fixture(Rng& rng, PlantKind kind);

/// Mutates one strictly interior run cell; returns it.
CellId plant(Rng& rng, RunFixture& fixture, PlantKind kind);

}  // namespace sheetguard::testing
