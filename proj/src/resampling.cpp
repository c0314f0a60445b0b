#include "tabaug/resampling.hpp"

#include "tabaug/rng.hpp"

namespace tabaug {

std::vector<std::size_t> ResamplingPlan::test_rows(std::size_t repetition, std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of[repetition].size(); ++i) {
        if (fold_of[repetition][i] == static_cast<int>(fold)) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> ResamplingPlan::train_rows(std::size_t repetition, std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of[repetition].size(); ++i) {
        if (fold_of[repetition][i] != static_cast<int>(fold)) out.push_back(i);
    }
    return out;
}

namespace {

void shuffle(std::vector<std::size_t>& v, rng::Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::swap(v[i - 1], v[rng.uniform_int(i)]);
    }
}

}  // namespace

ResamplingPlan make_folds(const std::vector<int>& labels, std::size_t n_classes, std::size_t k,
                          std::size_t repetitions, bool stratified, std::uint64_t seed) {
    const std::size_t n = labels.size();
    if (k < 2) throw ConfigError("k must be at least 2");
    if (k > n) throw ConfigError("k exceeds the number of rows");
    if (repetitions < 1) throw ConfigError("repetitions must be positive");

    ResamplingPlan plan;
    plan.k = k;
    plan.repetitions = repetitions;
    plan.stratified = stratified;
    plan.seed = seed;
    plan.fold_of.assign(repetitions, std::vector<int>(n, -1));

    for (std::size_t rep = 0; rep < repetitions; ++rep) {
        rng::Rng rng(rng::derive(seed, rep));
        auto& fold_of = plan.fold_of[rep];
        if (stratified) {
            std::size_t offset = 0;
            for (std::size_t c = 0; c < n_classes; ++c) {
                std::vector<std::size_t> rows;
                for (std::size_t i = 0; i < n; ++i) {
                    if (labels[i] == static_cast<int>(c)) rows.push_back(i);
                }
                shuffle(rows, rng);
                for (std::size_t i = 0; i < rows.size(); ++i) {
                    fold_of[rows[i]] = static_cast<int>((offset + i) % k);
                }
                offset = (offset + rows.size()) % k;
            }
        } else {
            std::vector<std::size_t> rows(n);
            for (std::size_t i = 0; i < n; ++i) rows[i] = i;
            shuffle(rows, rng);
            for (std::size_t i = 0; i < n; ++i) {
                fold_of[rows[i]] = static_cast<int>(i % k);
            }
        }
    }
    return plan;
}

}  // namespace tabaug
