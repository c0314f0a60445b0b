#pragma once

#include <set>
#include <string>

#include "tabaug/table.hpp"

namespace tabaug {

inline std::set<std::string> default_missing_tokens() { return {"", "NA"}; }

// RFC-4180-style parser: comma separated, double-quote quoting with ""
// escapes, CRLF or LF line ends, header row required. With a schema, header
// names must match the schema's names exactly (as a set) and categorical
// values must be known levels; without one, column types are inferred (a
// column is numeric iff every observed value parses as a finite number) and
// categorical levels are collected in first-appearance order.
Table parse_csv(const std::string& text, const std::optional<Schema>& schema,
                const std::set<std::string>& missing_tokens = default_missing_tokens());

// Emits the table: header row, missing cells as empty fields, numeric cells
// in shortest round-trip form (<= 17 significant digits), LF line ends.
std::string emit_csv(const Table& table);

Table read_csv_file(const std::string& path, const std::optional<Schema>& schema,
                    const std::set<std::string>& missing_tokens = default_missing_tokens());
void write_csv_file(const std::string& path, const Table& table);

// Schema file format: JSON object
//   {"features":[{"name":...,"kind":"numeric"|"categorical","levels":[...]}],
//    "target":..., "source_feature":...}
Schema schema_from_json_text(const std::string& text);
std::string schema_to_json_text(const Schema& schema);
Schema read_schema_file(const std::string& path);
void write_schema_file(const std::string& path, const Schema& schema);

// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace tabaug
