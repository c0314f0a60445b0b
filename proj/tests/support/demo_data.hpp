#pragma once

#include <cstdint>

#include "tabaug/table.hpp"

namespace tabaug::demo {

// Deterministic mixed-type demo datasets shaped like a small geriatric
// cohort study: a primary dataset (169 rows, 31 features + 4-level target
// "destination", class counts 75/9/79/6, sparse missingness) and an
// auxiliary register extract (82 rows, 21 shared features + 2 extras,
// heavier missingness, shifted distributions). Feature union is 33.
Table make_primary(std::uint64_t seed);
Table make_auxiliary(std::uint64_t seed);

}  // namespace tabaug::demo
