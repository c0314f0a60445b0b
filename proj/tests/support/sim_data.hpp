#pragma once

#include <cstdint>

#include "tabaug/table.hpp"

namespace tabaug::sim {

// Bivariate normal (x, y) with the given correlation, N(0,1) marginals.
Table bivariate_gaussian(std::size_t n, double rho, std::uint64_t seed);

// Single categorical column "c" with P(level i) = probs[i].
Table categorical_column(std::size_t n, const std::vector<std::string>& levels,
                         const std::vector<double>& probs, std::uint64_t seed);

// Two spherical Gaussian blobs in 2d separated by `separation` sds, labels
// "a"/"b" in column "label", n/2 rows each.
Table gaussian_blobs(std::size_t n, double separation, std::uint64_t seed);

// 1 feature x ~ N(0,1), binary label with P(y=1|x) = logistic(slope * x).
Table logistic_sim(std::size_t n, double slope, std::uint64_t seed);

// Like logistic_sim plus an independent noise feature "x2".
Table logistic_sim_with_noise(std::size_t n, double slope, std::uint64_t seed);

// Independently masks each non-target cell with probability `rate`.
Table mask_mcar(const Table& table, double rate, std::uint64_t seed);

double pearson(const Table& table, std::size_t col_a, std::size_t col_b);

}  // namespace tabaug::sim
