#include "tabaug/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace tabaug {

namespace {

// Splits raw CSV text into records of fields, honoring quotes.
std::vector<std::vector<std::string>> split_records(const std::string& text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> fields;
    std::string field;
    bool in_quotes = false;
    bool row_started = false;
    std::size_t line = 1;
    auto end_field = [&] {
        fields.push_back(std::move(field));
        field.clear();
    };
    auto end_record = [&] {
        end_field();
        records.push_back(std::move(fields));
        fields.clear();
        row_started = false;
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
                if (c == '\n') ++line;
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!field.empty()) {
                    throw ParseError("quote inside unquoted field", line, fields.size() + 1);
                }
                in_quotes = true;
                row_started = true;
                break;
            case ',':
                end_field();
                row_started = true;
                break;
            case '\r':
                if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
                [[fallthrough]];
            case '\n':
                end_record();
                ++line;
                break;
            default:
                field.push_back(c);
                row_started = true;
        }
    }
    if (in_quotes) throw ParseError("unterminated quoted field", line, fields.size() + 1);
    if (row_started || !fields.empty()) end_record();
    return records;
}

bool parse_number(const std::string& s, double& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && std::isfinite(out);
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

Table parse_csv(const std::string& text, const std::optional<Schema>& schema,
                const std::set<std::string>& missing_tokens) {
    auto records = split_records(text);
    if (records.empty()) throw ParseError("missing header row", 1, 1);
    const auto& header = records.front();
    const std::size_t p = header.size();

    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != p) {
            throw ParseError("ragged row: expected " + std::to_string(p) + " fields, got " +
                                 std::to_string(records[r].size()),
                             r + 1, 1);
        }
    }

    if (schema) {
        if (p != schema->size()) {
            throw SchemaError("header has " + std::to_string(p) + " columns, schema has " +
                              std::to_string(schema->size()));
        }
        // Header may reorder schema columns but must name exactly the same set.
        std::vector<std::size_t> schema_col(p);
        for (std::size_t j = 0; j < p; ++j) schema_col[j] = schema->require(header[j]);
        const std::size_t n = records.size() - 1;
        std::vector<Cell> cells(n * p);
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t j = 0; j < p; ++j) {
                const std::string& tok = records[r + 1][j];
                const std::size_t sj = schema_col[j];
                if (missing_tokens.count(tok)) continue;
                const auto& kind = schema->features[sj].kind;
                if (kind.is_numeric()) {
                    double v;
                    if (!parse_number(tok, v)) {
                        throw ParseError("malformed number '" + tok + "'", r + 2, j + 1);
                    }
                    cells[r * p + sj] = Cell::number(v);
                } else {
                    const int l = kind.level_index(tok);
                    if (l < 0) {
                        throw SchemaError("unknown level '" + tok + "' for feature '" +
                                          schema->features[sj].name + "' at row " + std::to_string(r + 2));
                    }
                    cells[r * p + sj] = Cell::category(l);
                }
            }
        }
        return Table(*schema, std::move(cells));
    }

    // No schema: infer. A column is numeric iff all observed values parse.
    const std::size_t n = records.size() - 1;
    std::vector<bool> numeric(p, true);
    for (std::size_t j = 0; j < p; ++j) {
        bool any = false;
        for (std::size_t r = 0; r < n; ++r) {
            const std::string& tok = records[r + 1][j];
            if (missing_tokens.count(tok)) continue;
            any = true;
            double v;
            if (!parse_number(tok, v)) {
                numeric[j] = false;
                break;
            }
        }
        if (!any) numeric[j] = false;  // all-missing columns default to categorical
    }
    Schema inferred;
    inferred.features.resize(p);
    for (std::size_t j = 0; j < p; ++j) {
        inferred.features[j].name = header[j];
        if (numeric[j]) {
            inferred.features[j].kind = FeatureKind::numeric();
        } else {
            inferred.features[j].kind.type = FeatureType::Categorical;
            for (std::size_t r = 0; r < n; ++r) {
                const std::string& tok = records[r + 1][j];
                if (missing_tokens.count(tok)) continue;
                if (inferred.features[j].kind.level_index(tok) < 0) {
                    inferred.features[j].kind.levels.push_back(tok);
                }
            }
            if (inferred.features[j].kind.levels.empty()) {
                inferred.features[j].kind.levels.push_back("__empty__");
            }
        }
    }
    std::vector<Cell> cells(n * p);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t j = 0; j < p; ++j) {
            const std::string& tok = records[r + 1][j];
            if (missing_tokens.count(tok)) continue;
            if (numeric[j]) {
                double v;
                parse_number(tok, v);
                cells[r * p + j] = Cell::number(v);
            } else {
                cells[r * p + j] = Cell::category(inferred.features[j].kind.level_index(tok));
            }
        }
    }
    return Table(std::move(inferred), std::move(cells));
}

namespace {

void emit_field(std::string& out, const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) {
        out += s;
        return;
    }
    out.push_back('"');
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
}

}  // namespace

std::string emit_csv(const Table& table) {
    std::string out;
    const std::size_t p = table.n_cols();
    for (std::size_t j = 0; j < p; ++j) {
        if (j) out.push_back(',');
        emit_field(out, table.schema().features[j].name);
    }
    out.push_back('\n');
    for (std::size_t i = 0; i < table.n_rows(); ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            if (j) out.push_back(',');
            const Cell& c = table.at(i, j);
            if (c.is_missing()) continue;
            if (c.is_number()) {
                out += format_double(c.number());
            } else {
                emit_field(out, table.level_of(i, j));
            }
        }
        out.push_back('\n');
    }
    return out;
}

Table read_csv_file(const std::string& path, const std::optional<Schema>& schema,
                    const std::set<std::string>& missing_tokens) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str(), schema, missing_tokens);
}

void write_csv_file(const std::string& path, const Table& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << emit_csv(table);
}

Schema schema_from_json_text(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    Schema s;
    if (!j.contains("features") || !j["features"].is_array()) {
        throw SchemaError("schema JSON needs a 'features' array");
    }
    for (const auto& f : j["features"]) {
        Feature feat;
        feat.name = f.at("name").get<std::string>();
        const std::string kind = f.at("kind").get<std::string>();
        if (kind == "numeric") {
            feat.kind = FeatureKind::numeric();
        } else if (kind == "categorical") {
            feat.kind = FeatureKind::categorical(f.at("levels").get<std::vector<std::string>>());
        } else {
            throw SchemaError("unknown feature kind '" + kind + "'");
        }
        s.features.push_back(std::move(feat));
    }
    if (j.contains("target") && !j["target"].is_null()) s.target = j["target"].get<std::string>();
    if (j.contains("source_feature") && !j["source_feature"].is_null()) {
        s.source_feature = j["source_feature"].get<std::string>();
    }
    s.validate();
    return s;
}

std::string schema_to_json_text(const Schema& schema) {
    nlohmann::json j;
    j["features"] = nlohmann::json::array();
    for (const auto& f : schema.features) {
        nlohmann::json fj;
        fj["name"] = f.name;
        fj["kind"] = f.kind.is_numeric() ? "numeric" : "categorical";
        if (f.kind.is_categorical()) fj["levels"] = f.kind.levels;
        j["features"].push_back(fj);
    }
    j["target"] = schema.target ? nlohmann::json(*schema.target) : nlohmann::json();
    j["source_feature"] =
        schema.source_feature ? nlohmann::json(*schema.source_feature) : nlohmann::json();
    return j.dump(2);
}

Schema read_schema_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return schema_from_json_text(ss.str());
}

void write_schema_file(const std::string& path, const Schema& schema) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << schema_to_json_text(schema);
}

}  // namespace tabaug
