#include "support/sim_data.hpp"

#include <cmath>

#include "tabaug/rng.hpp"

namespace tabaug::sim {

Table bivariate_gaussian(std::size_t n, double rho, std::uint64_t seed) {
    Schema schema;
    schema.features = {{"x", FeatureKind::numeric()}, {"y", FeatureKind::numeric()}};
    rng::Rng rng(seed);
    std::vector<Cell> cells;
    cells.reserve(n * 2);
    const double comp = std::sqrt(1.0 - rho * rho);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = rng.normal();
        const double y = rho * x + comp * rng.normal();
        cells.push_back(Cell::number(x));
        cells.push_back(Cell::number(y));
    }
    return Table(std::move(schema), std::move(cells));
}

Table categorical_column(std::size_t n, const std::vector<std::string>& levels,
                         const std::vector<double>& probs, std::uint64_t seed) {
    Schema schema;
    schema.features = {{"c", FeatureKind::categorical(levels)}};
    rng::Rng rng(seed);
    std::vector<Cell> cells;
    cells.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = rng.uniform();
        double acc = 0.0;
        int pick = static_cast<int>(levels.size()) - 1;
        for (std::size_t l = 0; l < probs.size(); ++l) {
            acc += probs[l];
            if (u < acc) {
                pick = static_cast<int>(l);
                break;
            }
        }
        cells.push_back(Cell::category(pick));
    }
    return Table(std::move(schema), std::move(cells));
}

Table gaussian_blobs(std::size_t n, double separation, std::uint64_t seed) {
    Schema schema;
    schema.features = {{"f1", FeatureKind::numeric()},
                       {"f2", FeatureKind::numeric()},
                       {"label", FeatureKind::categorical({"a", "b"})}};
    schema.target = "label";
    rng::Rng rng(seed);
    std::vector<Cell> cells;
    cells.reserve(n * 3);
    for (std::size_t i = 0; i < n; ++i) {
        const int cls = i < n / 2 ? 0 : 1;
        const double shift = cls == 0 ? 0.0 : separation;
        cells.push_back(Cell::number(shift + rng.normal()));
        cells.push_back(Cell::number(shift + rng.normal()));
        cells.push_back(Cell::category(cls));
    }
    return Table(std::move(schema), std::move(cells));
}

Table logistic_sim(std::size_t n, double slope, std::uint64_t seed) {
    Schema schema;
    schema.features = {{"x", FeatureKind::numeric()},
                       {"y", FeatureKind::categorical({"neg", "pos"})}};
    schema.target = "y";
    rng::Rng rng(seed);
    std::vector<Cell> cells;
    cells.reserve(n * 2);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = rng.normal();
        const double p = 1.0 / (1.0 + std::exp(-slope * x));
        cells.push_back(Cell::number(x));
        cells.push_back(Cell::category(rng.uniform() < p ? 1 : 0));
    }
    return Table(std::move(schema), std::move(cells));
}

Table logistic_sim_with_noise(std::size_t n, double slope, std::uint64_t seed) {
    Schema schema;
    schema.features = {{"x1", FeatureKind::numeric()},
                       {"x2", FeatureKind::numeric()},
                       {"y", FeatureKind::categorical({"neg", "pos"})}};
    schema.target = "y";
    rng::Rng rng(seed);
    std::vector<Cell> cells;
    cells.reserve(n * 3);
    for (std::size_t i = 0; i < n; ++i) {
        const double x1 = rng.normal();
        const double x2 = rng.normal();
        const double p = 1.0 / (1.0 + std::exp(-slope * x1));
        cells.push_back(Cell::number(x1));
        cells.push_back(Cell::number(x2));
        cells.push_back(Cell::category(rng.uniform() < p ? 1 : 0));
    }
    return Table(std::move(schema), std::move(cells));
}

Table mask_mcar(const Table& table, double rate, std::uint64_t seed) {
    rng::Rng rng(seed);
    std::vector<Cell> cells(table.cells());
    const std::size_t p = table.n_cols();
    const int target = table.schema().target ? table.schema().index_of(*table.schema().target) : -1;
    for (std::size_t i = 0; i < table.n_rows(); ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            if (static_cast<int>(j) == target) continue;
            if (rng.uniform() < rate) cells[i * p + j] = Cell::missing();
        }
    }
    return Table(table.schema(), std::move(cells));
}

double pearson(const Table& table, std::size_t col_a, std::size_t col_b) {
    const std::size_t n = table.n_rows();
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += table.at(i, col_a).number();
        mb += table.at(i, col_b).number();
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = table.at(i, col_a).number() - ma;
        const double db = table.at(i, col_b).number() - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    return sab / std::sqrt(saa * sbb);
}

}  // namespace tabaug::sim
