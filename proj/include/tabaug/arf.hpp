#pragma once

#include <map>

#include "tabaug/forest.hpp"
#include "tabaug/table.hpp"

namespace tabaug {

struct ArfParams {
    int n_trees = 100;
    int mtry = 0;                  // 0 = ceil(sqrt(p))
    int min_node_size = 5;
    double delta = 0.05;           // tolerance on the 0.5 stop rule
    int max_iters = 10;
    std::size_t synthetic_per_round = 0;  // 0 = n
    bool smoothing = true;  // Laplace-smooth categorical leaf densities (conditional use)
};

// Per-leaf univariate densities estimated from the real rows the leaf
// covers. Numeric features carry normal parameters (truncated at sampling
// time to the leaf region intersected with the global observed range);
// categorical features carry a probability vector over levels, zero outside
// the leaf's path-allowed levels.
struct LeafDensity {
    int tree = 0;
    int node = 0;
    double weight = 0.0;
    std::vector<double> num_mu, num_sd;  // per column; 0 for categorical slots
    std::vector<double> num_lo, num_hi;  // leaf path bounds; +-inf when unbounded
    std::vector<std::vector<double>> cat_probs;  // per column; empty for numeric slots
};

struct ArfModel {
    Schema schema;  // full data schema; the target is an ordinary feature here
    Forest forest;  // the final discriminator
    std::vector<LeafDensity> leaves;  // coverage > 0, ordered by (tree, node)
    std::vector<double> col_min, col_max, col_sd;  // global observed stats, numeric columns
    std::vector<double> accuracy_history;          // per-iteration discriminator OOB accuracy
    double delta = 0.05;
    bool converged = false;
    bool smoothing = true;
    std::uint64_t seed = 0;
};

// Fixed values to condition on, keyed by feature name.
using Evidence = std::map<std::string, Cell>;

// Column-wise bootstrap: each synthetic cell drawn independently and
// uniformly from the observed values of its column. Destroys dependence by
// construction; the adversarial loop's starting point.
Table initial_synthetic(const Table& table, std::size_t m, std::uint64_t seed);

// Adversarial loop: fit a real-vs-synthetic discriminator forest, stop once
// its OOB accuracy is within delta of 0.5, otherwise regenerate the
// synthetic corpus by within-leaf marginal resampling of the current forest
// and repeat. Density estimation then runs on the final forest's leaves over
// the real rows they cover; leaf weight = coverage / (n * n_trees).
ArfModel fit_arf(const Table& table, const ArfParams& params, std::uint64_t seed);

// Draw m rows: leaf ~ weights, then each feature from its leaf density.
// Per-row seeds derive from (seed, row), so generation parallelizes and is
// bit-deterministic either way.
Table generate(const ArfModel& model, std::size_t m, std::uint64_t seed);

enum class ConditionalFallback { None, BoundsDropped, Unconditional };

struct ConditionalLeaves {
    std::vector<std::size_t> leaf_indices;  // into model.leaves
    std::vector<double> weights;            // renormalized, sum 1
    ConditionalFallback fallback = ConditionalFallback::None;
};

// Leaves whose region admits the evidence, reweighted by the product of
// evidence likelihoods under their densities. Empty evidence returns every
// leaf at its original weight. If no leaf survives, the bounds filter is
// dropped (untruncated likelihoods); if still empty, unconditional weights.
// Both fallbacks are flagged.
ConditionalLeaves conditional_leaves(const ArfModel& model, const Evidence& evidence);

struct ConditionalSample {
    Table table;
    ConditionalFallback fallback = ConditionalFallback::None;
};

// Evidence features are copied verbatim; the rest are sampled from a
// conditionally drawn leaf. Per-row seeds as in generate().
ConditionalSample sample_conditional(const ArfModel& model, const Evidence& evidence,
                                     std::size_t m, std::uint64_t seed);

}  // namespace tabaug
