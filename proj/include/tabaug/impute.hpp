#pragma once

#include "tabaug/arf.hpp"
#include "tabaug/table.hpp"

namespace tabaug {

enum class ImputerKind { MeanMode, MissArf };

// Fit-on-train / apply-anywhere imputer. MeanMode stores per-column
// mean/mode; MissARF stores a fitted ArfModel and fills by conditional
// sampling given each row's observed cells.
struct ImputerModel {
    ImputerKind kind = ImputerKind::MeanMode;
    Schema schema;  // fitted schema
    std::size_t n = 0;
    std::vector<std::size_t> missing_counts;  // per column at fit
    std::vector<double> means;                // numeric columns (0 elsewhere)
    std::vector<int> modes;                   // categorical columns (-1 elsewhere)
    std::optional<ArfModel> arf;              // MissARF
    std::uint64_t seed = 0;
};

ImputerModel fit_meanmode(const Table& table);

// Completes the table once by per-column marginal draws from its observed
// values (internal only, never returned), then fits an ArfModel on it.
ImputerModel fit_missarf(const Table& table, const ArfParams& params, std::uint64_t seed);

struct ImputeStats {
    std::size_t rows_imputed = 0;
    std::size_t fallback_bounds_dropped = 0;  // conditional filter rescued by dropping bounds
    std::size_t fallback_unconditional = 0;   // reverted to unconditional leaf weights
};

// Input columns must be a subset of the fitted schema with matching kinds;
// the output carries the full fitted schema with absent columns imputed too.
// Observed cells pass through untouched. `draw` indexes independent draw
// streams for repeated (multiple) imputation; default single imputation.
Table apply_imputer(const ImputerModel& model, const Table& table, std::size_t draw = 0,
                    ImputeStats* stats = nullptr);

// Internal entry point with an explicit stream seed (MissARF row seeds
// derive from it); comimp_combine uses it for independent per-table streams.
Table apply_imputer_seeded(const ImputerModel& model, const Table& table, std::uint64_t stream_seed,
                           ImputeStats* stats = nullptr);

enum class ComImpMode { Joint, Transfer };

struct ComImpPlan {
    ComImpMode mode = ComImpMode::Joint;
    ImputerKind imputer = ImputerKind::MeanMode;
    ArfParams arf;  // used when imputer == MissArf
    std::string source_feature_name = "source";
    std::vector<std::string> source_labels;  // one per input table
    std::size_t reference = 0;               // Transfer: reference table index
};

struct ComImpResult {
    Table combined;        // complete, source column appended, rows in input order
    ImputerModel imputer;  // the fitted imputer (reusable on test data)
    ImputeStats stats;
};

// Joint: union schemas, align, stack, append the source column, fit the
// imputer on the whole stack (source participates), apply it. Transfer:
// restrict everything to the reference table's features, fit on the
// reference alone, apply to each table with independent streams, stack,
// append the source column afterwards.
ComImpResult comimp_combine(const std::vector<Table>& tables, const ComImpPlan& plan,
                            std::uint64_t seed);

}  // namespace tabaug
