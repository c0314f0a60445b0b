#pragma once

#include <functional>

#include "tabaug/metrics.hpp"
#include "tabaug/table.hpp"

namespace tabaug {

enum class PfiMetric { LogLoss, Brier, OneMinusAccuracy };

struct PfiFeatureResult {
    std::string feature;
    double importance = 0.0;  // mean over permutations of (permuted - base) error
    double sd = 0.0;          // sample sd over permutations (0 when n_permutations == 1)
};

struct PfiResult {
    std::vector<PfiFeatureResult> features;
    PfiMetric metric = PfiMetric::LogLoss;
    std::size_t n_permutations = 0;
    double base_error = 0.0;
};

double pfi_error(PfiMetric metric, const PredictionMatrix& pred, const std::vector<int>& truth);

// Held-out permutation importance: per feature, n_permutations independent
// within-column shuffles of the test table; importance is the mean error
// increase over the unpermuted base error (computed once). Model-agnostic
// through the predict callback. Deterministic in `seed`.
PfiResult pfi(const std::function<PredictionMatrix(const Table&)>& predict, const Table& test,
              const std::vector<int>& truth, PfiMetric metric, std::size_t n_permutations,
              std::uint64_t seed);

}  // namespace tabaug
