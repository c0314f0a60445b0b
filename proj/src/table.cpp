#include "tabaug/table.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

namespace tabaug {

FeatureKind FeatureKind::categorical(std::vector<std::string> lv) {
    if (lv.empty()) throw SchemaError("categorical feature needs at least one level");
    std::unordered_set<std::string> seen;
    for (const auto& l : lv) {
        if (!seen.insert(l).second) throw SchemaError("duplicate categorical level '" + l + "'");
    }
    return {FeatureType::Categorical, std::move(lv)};
}

int FeatureKind::level_index(const std::string& level) const {
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (levels[i] == level) return static_cast<int>(i);
    }
    return -1;
}

int Schema::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (features[i].name == name) return static_cast<int>(i);
    }
    return -1;
}

std::size_t Schema::require(const std::string& name) const {
    const int i = index_of(name);
    if (i < 0) throw SchemaError("unknown feature '" + name + "'");
    return static_cast<std::size_t>(i);
}

void Schema::validate() const {
    std::unordered_set<std::string> seen;
    for (const auto& f : features) {
        if (!seen.insert(f.name).second) throw SchemaError("duplicate feature name '" + f.name + "'");
        if (f.kind.is_categorical() && f.kind.levels.empty()) {
            throw SchemaError("categorical feature '" + f.name + "' has no levels");
        }
    }
    if (target) {
        const int i = index_of(*target);
        if (i < 0) throw SchemaError("target '" + *target + "' is not a feature");
        if (!features[i].kind.is_categorical()) {
            throw SchemaError("target '" + *target + "' must be categorical");
        }
    }
    if (source_feature && index_of(*source_feature) < 0) {
        throw SchemaError("source feature '" + *source_feature + "' is not a feature");
    }
}

Cell Cell::number(double v) {
    if (!std::isfinite(v)) throw Error("numeric cell must be finite");
    Cell c;
    c.tag_ = Tag::Number;
    c.num_ = v;
    return c;
}

Cell Cell::category(int level_index) {
    if (level_index < 0) throw Error("categorical cell needs a non-negative level index");
    Cell c;
    c.tag_ = Tag::Category;
    c.cat_ = level_index;
    return c;
}

Table::Table(Schema schema, std::vector<Cell> cells)
    : schema_(std::move(schema)), cells_(std::move(cells)) {
    schema_.validate();
    const std::size_t p = schema_.size();
    if (p == 0) {
        if (!cells_.empty()) throw SchemaError("cells provided for an empty schema");
        return;
    }
    if (cells_.size() % p != 0) throw SchemaError("cell count is not a multiple of the column count");
    const std::size_t n = cells_.size() / p;
    for (std::size_t j = 0; j < p; ++j) {
        const auto& kind = schema_.features[j].kind;
        for (std::size_t i = 0; i < n; ++i) {
            const Cell& c = cells_[i * p + j];
            if (c.is_missing()) continue;
            if (kind.is_numeric()) {
                if (!c.is_number()) {
                    throw SchemaError("non-numeric value in numeric column '" + schema_.features[j].name + "'");
                }
            } else {
                if (!c.is_category() || c.category() >= static_cast<int>(kind.levels.size())) {
                    throw SchemaError("invalid level in categorical column '" + schema_.features[j].name + "'");
                }
            }
        }
    }
}

const std::string& Table::level_of(std::size_t row, std::size_t col) const {
    const Cell& c = at(row, col);
    return schema_.features[col].kind.levels[static_cast<std::size_t>(c.category())];
}

ColumnSummary column_stats(const Table& table, const std::string& feature) {
    const std::size_t j = table.schema().require(feature);
    const auto& kind = table.schema().features[j].kind;
    ColumnSummary s;
    s.feature = feature;
    const std::size_t n = table.n_rows();
    if (kind.is_numeric()) {
        double sum = 0.0;
        s.min = INFINITY;
        s.max = -INFINITY;
        std::vector<double> vals;
        for (std::size_t i = 0; i < n; ++i) {
            const Cell& c = table.at(i, j);
            if (c.is_missing()) {
                ++s.n_missing;
                continue;
            }
            ++s.n_observed;
            sum += c.number();
            s.min = std::min(s.min, c.number());
            s.max = std::max(s.max, c.number());
            vals.push_back(c.number());
        }
        if (s.n_observed > 0) s.mean = sum / static_cast<double>(s.n_observed);
        if (s.n_observed > 1) {
            double ss = 0.0;
            for (double v : vals) ss += (v - s.mean) * (v - s.mean);
            s.sd = std::sqrt(ss / static_cast<double>(s.n_observed - 1));
        }
        if (s.n_observed == 0) {
            s.min = 0.0;
            s.max = 0.0;
        }
    } else {
        s.level_counts.assign(kind.levels.size(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const Cell& c = table.at(i, j);
            if (c.is_missing()) {
                ++s.n_missing;
                continue;
            }
            ++s.n_observed;
            ++s.level_counts[static_cast<std::size_t>(c.category())];
        }
        // Mode; ties break toward the earlier level.
        std::size_t best = 0;
        bool any = false;
        for (std::size_t l = 0; l < s.level_counts.size(); ++l) {
            if (s.level_counts[l] > 0 && (!any || s.level_counts[l] > best)) {
                best = s.level_counts[l];
                s.mode = static_cast<int>(l);
                any = true;
            }
        }
    }
    return s;
}

namespace {

FeatureKind merge_kinds(const std::string& name, const FeatureKind& a, const FeatureKind& b) {
    if (a.type != b.type) {
        throw SchemaError("kind conflict for feature '" + name + "' (numeric vs categorical)");
    }
    if (a.is_numeric()) return a;
    FeatureKind merged = a;
    for (const auto& l : b.levels) {
        if (merged.level_index(l) < 0) merged.levels.push_back(l);
    }
    return merged;
}

}  // namespace

Schema union_schema(const std::vector<Schema>& schemas) {
    Schema out;
    for (const auto& s : schemas) {
        for (const auto& f : s.features) {
            const int idx = out.index_of(f.name);
            if (idx < 0) {
                out.features.push_back(f);
            } else {
                out.features[static_cast<std::size_t>(idx)].kind =
                    merge_kinds(f.name, out.features[static_cast<std::size_t>(idx)].kind, f.kind);
            }
        }
        if (!out.target && s.target) out.target = s.target;
        if (!out.source_feature && s.source_feature) out.source_feature = s.source_feature;
    }
    out.validate();
    return out;
}

Table align_to_schema(const Table& table, const Schema& combined) {
    const Schema& in = table.schema();
    const std::size_t p_out = combined.size();
    // Per output column: source column index (or -1) and level remap.
    std::vector<int> src(p_out, -1);
    std::vector<std::vector<int>> remap(p_out);
    for (std::size_t j = 0; j < in.size(); ++j) {
        const auto& f = in.features[j];
        const int oj = combined.index_of(f.name);
        if (oj < 0) throw SchemaError("feature '" + f.name + "' not present in the combined schema");
        const auto& ok = combined.features[static_cast<std::size_t>(oj)].kind;
        if (ok.type != f.kind.type) {
            throw SchemaError("kind conflict for feature '" + f.name + "' during alignment");
        }
        src[static_cast<std::size_t>(oj)] = static_cast<int>(j);
        if (f.kind.is_categorical()) {
            std::vector<int> m(f.kind.levels.size(), -1);
            for (std::size_t l = 0; l < f.kind.levels.size(); ++l) {
                m[l] = ok.level_index(f.kind.levels[l]);
                if (m[l] < 0) {
                    throw SchemaError("level '" + f.kind.levels[l] + "' of feature '" + f.name +
                                      "' missing from the combined schema");
                }
            }
            remap[static_cast<std::size_t>(oj)] = std::move(m);
        }
    }
    const std::size_t n = table.n_rows();
    std::vector<Cell> cells(n * p_out);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t oj = 0; oj < p_out; ++oj) {
            if (src[oj] < 0) continue;  // stays missing
            const Cell& c = table.at(i, static_cast<std::size_t>(src[oj]));
            if (c.is_category()) {
                cells[i * p_out + oj] = Cell::category(remap[oj][static_cast<std::size_t>(c.category())]);
            } else {
                cells[i * p_out + oj] = c;
            }
        }
    }
    return Table(combined, std::move(cells));
}

Table stack(const std::vector<Table>& tables) {
    if (tables.empty()) throw SchemaError("stack needs at least one table");
    const Schema& schema = tables.front().schema();
    for (const auto& t : tables) {
        if (!(t.schema() == schema)) throw SchemaError("stack requires identical schemas");
    }
    std::vector<Cell> cells;
    std::size_t total = 0;
    for (const auto& t : tables) total += t.cells().size();
    cells.reserve(total);
    for (const auto& t : tables) {
        cells.insert(cells.end(), t.cells().begin(), t.cells().end());
    }
    return Table(schema, std::move(cells));
}

namespace {

Table project(const Table& table, const std::vector<std::size_t>& keep) {
    Schema out_schema;
    out_schema.features.reserve(keep.size());
    for (std::size_t j : keep) out_schema.features.push_back(table.schema().features[j]);
    auto keeps_name = [&](const std::optional<std::string>& name) {
        return name && out_schema.index_of(*name) >= 0;
    };
    if (keeps_name(table.schema().target)) out_schema.target = table.schema().target;
    if (keeps_name(table.schema().source_feature)) out_schema.source_feature = table.schema().source_feature;
    const std::size_t n = table.n_rows();
    std::vector<Cell> cells;
    cells.reserve(n * keep.size());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j : keep) cells.push_back(table.at(i, j));
    }
    return Table(std::move(out_schema), std::move(cells));
}

}  // namespace

Table drop_columns(const Table& table, const std::vector<std::string>& names) {
    std::vector<bool> drop(table.n_cols(), false);
    for (const auto& name : names) drop[table.schema().require(name)] = true;
    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < table.n_cols(); ++j) {
        if (!drop[j]) keep.push_back(j);
    }
    return project(table, keep);
}

Table select_columns(const Table& table, const std::vector<std::string>& names) {
    std::vector<std::size_t> keep;
    keep.reserve(names.size());
    for (const auto& name : names) keep.push_back(table.schema().require(name));
    return project(table, keep);
}

Table select_rows(const Table& table, const std::vector<std::size_t>& indices) {
    const std::size_t p = table.n_cols();
    std::vector<Cell> cells;
    cells.reserve(indices.size() * p);
    for (std::size_t i : indices) {
        if (i >= table.n_rows()) throw Error("row index " + std::to_string(i) + " out of range");
        for (std::size_t j = 0; j < p; ++j) cells.push_back(table.at(i, j));
    }
    return Table(table.schema(), std::move(cells));
}

bool is_complete(const Table& table) {
    for (const auto& c : table.cells()) {
        if (c.is_missing()) return false;
    }
    return true;
}

std::size_t count_missing(const Table& table, std::size_t col) {
    std::size_t k = 0;
    for (std::size_t i = 0; i < table.n_rows(); ++i) {
        if (table.at(i, col).is_missing()) ++k;
    }
    return k;
}

Table append_column(const Table& table, const Feature& feature, const std::vector<Cell>& column) {
    if (column.size() != table.n_rows()) throw SchemaError("appended column has wrong length");
    if (table.schema().index_of(feature.name) >= 0) {
        throw SchemaError("feature '" + feature.name + "' already exists");
    }
    Schema schema = table.schema();
    schema.features.push_back(feature);
    const std::size_t p = table.n_cols();
    std::vector<Cell> cells;
    cells.reserve(table.n_rows() * (p + 1));
    for (std::size_t i = 0; i < table.n_rows(); ++i) {
        for (std::size_t j = 0; j < p; ++j) cells.push_back(table.at(i, j));
        cells.push_back(column[i]);
    }
    return Table(std::move(schema), std::move(cells));
}

}  // namespace tabaug
