#include "tabaug/impute.hpp"

#include <algorithm>

#include "tabaug/rng.hpp"

namespace tabaug {

namespace {

constexpr std::uint64_t kFillTag = 0x66696c6c;  // "fill"
constexpr std::uint64_t kArfTag = 0x617266;     // "arf"
constexpr std::uint64_t kDrawTag = 0x64726177;  // "draw"
constexpr std::uint64_t kTableTag = 0x7461626c; // "tabl"

void check_columns_observed(const Table& table) {
    for (std::size_t j = 0; j < table.n_cols(); ++j) {
        const std::size_t missing = count_missing(table, j);
        if (missing == table.n_rows()) {
            throw FitError("column '" + table.schema().features[j].name +
                           "' has no observed values to fit on");
        }
    }
}

std::vector<std::size_t> column_missing_counts(const Table& table) {
    std::vector<std::size_t> counts(table.n_cols());
    for (std::size_t j = 0; j < table.n_cols(); ++j) counts[j] = count_missing(table, j);
    return counts;
}

}  // namespace

ImputerModel fit_meanmode(const Table& table) {
    check_columns_observed(table);
    ImputerModel model;
    model.kind = ImputerKind::MeanMode;
    model.schema = table.schema();
    model.n = table.n_rows();
    model.missing_counts = column_missing_counts(table);
    model.means.assign(table.n_cols(), 0.0);
    model.modes.assign(table.n_cols(), -1);
    for (std::size_t j = 0; j < table.n_cols(); ++j) {
        const ColumnSummary s = column_stats(table, table.schema().features[j].name);
        if (table.schema().features[j].kind.is_numeric()) {
            model.means[j] = s.mean;
        } else {
            model.modes[j] = s.mode;
        }
    }
    return model;
}

ImputerModel fit_missarf(const Table& table, const ArfParams& params, std::uint64_t seed) {
    check_columns_observed(table);
    // Internal bootstrap fill: per-column marginal draws from observed values.
    const std::size_t n = table.n_rows();
    const std::size_t p = table.n_cols();
    std::vector<Cell> cells(table.cells());
    rng::Rng rng(rng::derive(seed, kFillTag));
    for (std::size_t j = 0; j < p; ++j) {
        std::vector<Cell> observed;
        for (std::size_t i = 0; i < n; ++i) {
            if (!table.at(i, j).is_missing()) observed.push_back(table.at(i, j));
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (cells[i * p + j].is_missing()) {
                cells[i * p + j] = observed[rng.uniform_int(observed.size())];
            }
        }
    }
    const Table completed(table.schema(), std::move(cells));

    ImputerModel model;
    model.kind = ImputerKind::MissArf;
    model.schema = table.schema();
    model.n = n;
    model.missing_counts = column_missing_counts(table);
    model.seed = seed;
    model.arf = fit_arf(completed, params, rng::derive(seed, kArfTag));
    return model;
}

Table apply_imputer_seeded(const ImputerModel& model, const Table& table, std::uint64_t stream_seed,
                           ImputeStats* stats) {
    // Input columns must all exist in the fitted schema; align_to_schema
    // rejects kind conflicts and unknown levels, and re-adds absent columns
    // as all-missing so they are imputed as well.
    const Table aligned = align_to_schema(table, model.schema);
    const std::size_t n = aligned.n_rows();
    const std::size_t p = aligned.n_cols();
    std::vector<Cell> cells(aligned.cells());

    if (model.kind == ImputerKind::MeanMode) {
        for (std::size_t i = 0; i < n; ++i) {
            bool row_touched = false;
            for (std::size_t j = 0; j < p; ++j) {
                if (!cells[i * p + j].is_missing()) continue;
                cells[i * p + j] = model.schema.features[j].kind.is_numeric()
                                       ? Cell::number(model.means[j])
                                       : Cell::category(model.modes[j]);
                row_touched = true;
            }
            if (stats && row_touched) ++stats->rows_imputed;
        }
        return Table(model.schema, std::move(cells));
    }

    // MissARF: one conditional draw per incomplete row, evidence = the row's
    // observed cells, seeded per row.
    const ArfModel& arf = *model.arf;
    for (std::size_t i = 0; i < n; ++i) {
        bool any_missing = false;
        Evidence evidence;
        for (std::size_t j = 0; j < p; ++j) {
            const Cell& c = cells[i * p + j];
            if (c.is_missing()) {
                any_missing = true;
            } else {
                evidence.emplace(model.schema.features[j].name, c);
            }
        }
        if (!any_missing) continue;
        const ConditionalSample draw =
            sample_conditional(arf, evidence, 1, rng::derive(stream_seed, i));
        if (stats) {
            ++stats->rows_imputed;
            if (draw.fallback == ConditionalFallback::BoundsDropped) ++stats->fallback_bounds_dropped;
            if (draw.fallback == ConditionalFallback::Unconditional) ++stats->fallback_unconditional;
        }
        for (std::size_t j = 0; j < p; ++j) {
            if (cells[i * p + j].is_missing()) cells[i * p + j] = draw.table.at(0, j);
        }
    }
    return Table(model.schema, std::move(cells));
}

Table apply_imputer(const ImputerModel& model, const Table& table, std::size_t draw,
                    ImputeStats* stats) {
    return apply_imputer_seeded(model, table, rng::derive(model.seed, kDrawTag, draw), stats);
}

ComImpResult comimp_combine(const std::vector<Table>& tables, const ComImpPlan& plan,
                            std::uint64_t seed) {
    if (tables.empty()) throw ConfigError("comimp_combine needs at least one table");
    if (plan.source_labels.size() != tables.size()) {
        throw ConfigError("comimp_combine needs one source label per table");
    }
    for (const auto& t : tables) {
        if (t.schema().index_of(plan.source_feature_name) >= 0) {
            throw SchemaError("source feature name '" + plan.source_feature_name +
                              "' collides with an existing feature");
        }
    }

    auto fit = [&](const Table& t, std::uint64_t s) {
        return plan.imputer == ImputerKind::MeanMode ? fit_meanmode(t)
                                                     : fit_missarf(t, plan.arf, s);
    };
    const Feature source_feature{plan.source_feature_name,
                                 FeatureKind::categorical(plan.source_labels)};

    if (plan.mode == ComImpMode::Joint) {
        std::vector<Schema> schemas;
        for (const auto& t : tables) schemas.push_back(t.schema());
        const Schema combined = union_schema(schemas);
        std::vector<Table> aligned;
        std::vector<Cell> source_col;
        for (std::size_t t = 0; t < tables.size(); ++t) {
            aligned.push_back(align_to_schema(tables[t], combined));
            source_col.insert(source_col.end(), tables[t].n_rows(),
                              Cell::category(static_cast<int>(t)));
        }
        Table stacked = append_column(stack(aligned), source_feature, source_col);
        {
            Schema s = stacked.schema();
            s.source_feature = plan.source_feature_name;
            stacked = Table(s, stacked.cells());
        }
        ImputerModel imputer = fit(stacked, rng::derive(seed, 0));
        ImputeStats stats;
        Table complete =
            apply_imputer_seeded(imputer, stacked, rng::derive(imputer.seed, kDrawTag, 0), &stats);
        return ComImpResult{std::move(complete), std::move(imputer), stats};
    }

    // Transfer: reduce everything to the reference table's features; the
    // imputer sees the reference data only.
    if (plan.reference >= tables.size()) throw ConfigError("transfer reference index out of range");
    const Schema& ref_schema = tables[plan.reference].schema();
    ImputerModel imputer = fit(tables[plan.reference], rng::derive(seed, 0));
    ImputeStats stats;
    std::vector<Table> blocks;
    std::vector<Cell> source_col;
    for (std::size_t t = 0; t < tables.size(); ++t) {
        Table restricted = tables[t];
        if (t != plan.reference) {
            std::vector<std::string> shared;
            for (const auto& f : tables[t].schema().features) {
                if (ref_schema.index_of(f.name) >= 0) shared.push_back(f.name);
            }
            restricted = align_to_schema(select_columns(tables[t], shared), ref_schema);
        }
        // Independent draw stream per input table.
        blocks.push_back(apply_imputer_seeded(imputer, restricted,
                                              rng::derive(imputer.seed, kTableTag, t), &stats));
        source_col.insert(source_col.end(), tables[t].n_rows(), Cell::category(static_cast<int>(t)));
    }
    Table combined = append_column(stack(blocks), source_feature, source_col);
    {
        Schema s = combined.schema();
        s.source_feature = plan.source_feature_name;
        combined = Table(s, combined.cells());
    }
    return ComImpResult{std::move(combined), std::move(imputer), stats};
}

}  // namespace tabaug
