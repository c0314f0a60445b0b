#pragma once

#include <optional>
#include <vector>

namespace tabaug {

struct Aggregate {
    double mean = 0.0;
    double sd = 0.0;  // sample sd (n-1); 0 when n < 2
    std::size_t n = 0;
    std::size_t n_undefined = 0;  // skipped (undefined) values
};

enum class AggregationMode { Pooled, PerRepetitionMean };

// Pooled mean/SD over all defined values; undefined entries are excluded
// and counted, never imputed.
Aggregate aggregate(const std::vector<std::optional<double>>& values);

// PerRepetitionMean first averages the defined values inside each
// repetition, then aggregates those means.
Aggregate aggregate(const std::vector<std::pair<int, std::optional<double>>>& rep_values,
                    AggregationMode mode);

}  // namespace tabaug
