#pragma once

#include <cstdint>
#include <vector>

#include "tabaug/error.hpp"

namespace tabaug {

struct ResamplingPlan {
    std::size_t k = 5;
    std::size_t repetitions = 1;
    bool stratified = true;
    std::uint64_t seed = 0;
    std::vector<std::vector<int>> fold_of;  // [repetition][row] -> fold id

    std::vector<std::size_t> test_rows(std::size_t repetition, std::size_t fold) const;
    std::vector<std::size_t> train_rows(std::size_t repetition, std::size_t fold) const;
};

// Stratified mode shuffles each class and deals it round-robin across folds,
// with the starting fold rotating by the running row count so remainders
// spread evenly (global fold sizes differ by at most 1 whenever possible).
// Unstratified mode deals one global shuffle. Deterministic in `seed`.
ResamplingPlan make_folds(const std::vector<int>& labels, std::size_t n_classes, std::size_t k,
                          std::size_t repetitions, bool stratified, std::uint64_t seed);

}  // namespace tabaug
