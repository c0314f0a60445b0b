#include "tabaug/aggregate.hpp"

#include <cmath>
#include <map>

namespace tabaug {

Aggregate aggregate(const std::vector<std::optional<double>>& values) {
    Aggregate a;
    double sum = 0.0;
    for (const auto& v : values) {
        if (!v) {
            ++a.n_undefined;
            continue;
        }
        sum += *v;
        ++a.n;
    }
    if (a.n == 0) return a;
    a.mean = sum / static_cast<double>(a.n);
    if (a.n > 1) {
        double ss = 0.0;
        for (const auto& v : values) {
            if (v) ss += (*v - a.mean) * (*v - a.mean);
        }
        a.sd = std::sqrt(ss / static_cast<double>(a.n - 1));
    }
    return a;
}

Aggregate aggregate(const std::vector<std::pair<int, std::optional<double>>>& rep_values,
                    AggregationMode mode) {
    if (mode == AggregationMode::Pooled) {
        std::vector<std::optional<double>> flat;
        flat.reserve(rep_values.size());
        for (const auto& [rep, v] : rep_values) flat.push_back(v);
        return aggregate(flat);
    }
    std::map<int, std::pair<double, std::size_t>> per_rep;  // sum, count
    std::size_t undefined = 0;
    for (const auto& [rep, v] : rep_values) {
        if (!v) {
            ++undefined;
            continue;
        }
        auto& [sum, count] = per_rep[rep];
        sum += *v;
        ++count;
    }
    std::vector<std::optional<double>> means;
    for (const auto& [rep, sc] : per_rep) {
        means.push_back(sc.first / static_cast<double>(sc.second));
    }
    Aggregate a = aggregate(means);
    a.n_undefined = undefined;
    return a;
}

}  // namespace tabaug
