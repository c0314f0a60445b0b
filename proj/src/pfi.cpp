#include "tabaug/pfi.hpp"

#include <cmath>

#include "tabaug/rng.hpp"

namespace tabaug {

double pfi_error(PfiMetric metric, const PredictionMatrix& pred, const std::vector<int>& truth) {
    switch (metric) {
        case PfiMetric::LogLoss:
            return log_loss(pred, truth);
        case PfiMetric::Brier:
            return brier_multiclass(pred, truth);
        case PfiMetric::OneMinusAccuracy:
            return 1.0 - accuracy(pred, truth);
    }
    throw ConfigError("unknown PFI metric");
}

PfiResult pfi(const std::function<PredictionMatrix(const Table&)>& predict, const Table& test,
              const std::vector<int>& truth, PfiMetric metric, std::size_t n_permutations,
              std::uint64_t seed) {
    if (n_permutations < 1) throw ConfigError("pfi needs at least one permutation");
    if (!is_complete(test)) throw Error("pfi requires a complete test table");
    const std::size_t n = test.n_rows();
    const std::size_t p = test.n_cols();

    PfiResult result;
    result.metric = metric;
    result.n_permutations = n_permutations;
    result.base_error = pfi_error(metric, predict(test), truth);

    for (std::size_t f = 0; f < p; ++f) {
        std::vector<double> increases;
        increases.reserve(n_permutations);
        for (std::size_t perm = 0; perm < n_permutations; ++perm) {
            rng::Rng rng(rng::derive(seed, f, perm));
            std::vector<std::size_t> order(n);
            for (std::size_t i = 0; i < n; ++i) order[i] = i;
            for (std::size_t i = n; i > 1; --i) {
                std::swap(order[i - 1], order[rng.uniform_int(i)]);
            }
            std::vector<Cell> cells(test.cells());
            for (std::size_t i = 0; i < n; ++i) {
                cells[i * p + f] = test.at(order[i], f);
            }
            const Table permuted(test.schema(), std::move(cells));
            increases.push_back(pfi_error(metric, predict(permuted), truth) - result.base_error);
        }
        PfiFeatureResult fr;
        fr.feature = test.schema().features[f].name;
        double sum = 0.0;
        for (double v : increases) sum += v;
        fr.importance = sum / static_cast<double>(n_permutations);
        if (n_permutations > 1) {
            double ss = 0.0;
            for (double v : increases) ss += (v - fr.importance) * (v - fr.importance);
            fr.sd = std::sqrt(ss / static_cast<double>(n_permutations - 1));
        }
        result.features.push_back(std::move(fr));
    }
    return result;
}

}  // namespace tabaug
