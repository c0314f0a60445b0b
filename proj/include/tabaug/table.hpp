#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tabaug/error.hpp"

namespace tabaug {

enum class FeatureType { Numeric, Categorical };

// Column type: numeric, or categorical with an ordered, duplicate-free
// level list. Level order is significant (mode tie-breaks, one-hot
// encoding references, split masks).
struct FeatureKind {
    FeatureType type = FeatureType::Numeric;
    std::vector<std::string> levels;  // Categorical only

    static FeatureKind numeric() { return {FeatureType::Numeric, {}}; }
    static FeatureKind categorical(std::vector<std::string> lv);

    bool is_numeric() const { return type == FeatureType::Numeric; }
    bool is_categorical() const { return type == FeatureType::Categorical; }
    // Index of a level, or -1 if unknown.
    int level_index(const std::string& level) const;

    bool operator==(const FeatureKind&) const = default;
};

struct Feature {
    std::string name;
    FeatureKind kind;
    bool operator==(const Feature&) const = default;
};

struct Schema {
    std::vector<Feature> features;
    std::optional<std::string> target;          // must be categorical
    std::optional<std::string> source_feature;  // dataset-origin indicator

    std::size_t size() const { return features.size(); }
    // Index of a feature name, or -1 if absent.
    int index_of(const std::string& name) const;
    // Index of a feature name; throws SchemaError if absent.
    std::size_t require(const std::string& name) const;
    const Feature& at(std::size_t i) const { return features[i]; }

    // Checks name uniqueness, target/source existence, target categorical.
    void validate() const;

    bool operator==(const Schema&) const = default;
};

// One cell: missing, a finite number, or a categorical level (stored as an
// index into the column's level list).
class Cell {
public:
    Cell() = default;  // missing

    static Cell missing() { return Cell(); }
    static Cell number(double v);
    static Cell category(int level_index);

    bool is_missing() const { return tag_ == Tag::Missing; }
    bool is_number() const { return tag_ == Tag::Number; }
    bool is_category() const { return tag_ == Tag::Category; }

    double number() const { return num_; }
    int category() const { return cat_; }

    bool operator==(const Cell&) const = default;

private:
    enum class Tag : std::uint8_t { Missing, Number, Category };
    Tag tag_ = Tag::Missing;
    double num_ = 0.0;
    int cat_ = -1;
};

// Immutable rectangular mixed-type data with explicit missingness.
// Constructed once, validated against its schema, then read-only; safe to
// share across threads.
class Table {
public:
    Table() = default;
    // cells is row-major, n_rows * schema.size() entries. Validates every
    // non-missing cell against the column kind.
    Table(Schema schema, std::vector<Cell> cells);

    const Schema& schema() const { return schema_; }
    std::size_t n_rows() const { return schema_.size() == 0 ? 0 : cells_.size() / schema_.size(); }
    std::size_t n_cols() const { return schema_.size(); }

    const Cell& at(std::size_t row, std::size_t col) const {
        return cells_[row * schema_.size() + col];
    }
    // Level string of a categorical cell.
    const std::string& level_of(std::size_t row, std::size_t col) const;

    const std::vector<Cell>& cells() const { return cells_; }

private:
    Schema schema_;
    std::vector<Cell> cells_;
};

struct ColumnSummary {
    std::string feature;
    std::size_t n_observed = 0;
    std::size_t n_missing = 0;
    // Numeric columns
    double mean = 0.0;
    double sd = 0.0;  // sample sd (n-1); 0 when n_observed < 2
    double min = 0.0;
    double max = 0.0;
    // Categorical columns
    std::vector<std::size_t> level_counts;  // aligned with kind.levels
    int mode = -1;                          // level index; ties break by level order
};

// Statistics over observed cells of one column.
ColumnSummary column_stats(const Table& table, const std::string& feature);

// Union of feature sets: each name once, first-appearance order, categorical
// levels unioned (also first-appearance). Throws SchemaError on kind
// conflicts. target/source are taken from the first schema that sets them.
Schema union_schema(const std::vector<Schema>& schemas);

// Reorder/extend a table to a combined schema: output has exactly the
// combined columns in combined order; columns absent from the input are
// all-missing; categorical level indices are remapped to the combined level
// lists. Row count and row order unchanged.
Table align_to_schema(const Table& table, const Schema& combined);

// Concatenate tables sharing one schema; row order preserved within and
// across inputs.
Table stack(const std::vector<Table>& tables);

Table drop_columns(const Table& table, const std::vector<std::string>& names);
Table select_columns(const Table& table, const std::vector<std::string>& names);
Table select_rows(const Table& table, const std::vector<std::size_t>& indices);

// True if the table has no missing cell.
bool is_complete(const Table& table);
// Row indices whose cell in `col` is missing / any cell missing.
std::size_t count_missing(const Table& table, std::size_t col);

// Appends a categorical constant-per-block column. `values` has one level
// index per row into `kind.levels`.
Table append_column(const Table& table, const Feature& feature, const std::vector<Cell>& column);

}  // namespace tabaug
