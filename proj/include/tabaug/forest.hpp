#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "tabaug/metrics.hpp"
#include "tabaug/table.hpp"

namespace tabaug {

// Feature columns of a table in routing-friendly form: one double column per
// feature, categorical cells stored as level indices, missing as NaN.
struct FeatureFrame {
    Schema schema;  // feature columns only (no target)
    std::vector<std::vector<double>> columns;
    std::size_t n_rows = 0;

    // Encodes every column except `exclude` (usually the target).
    static FeatureFrame from_table(const Table& table, const std::optional<std::string>& exclude);

    bool is_missing(std::size_t row, std::size_t col) const {
        return std::isnan(columns[col][row]);
    }
};

// Axis-aligned split. Numeric: left iff value <= threshold. Categorical:
// left iff the level's bit is set in level_mask.
struct SplitRule {
    int feature = -1;
    double threshold = 0.0;
    std::uint64_t level_mask = 0;
};

struct TreeNode {
    bool leaf = true;
    SplitRule split;
    int left = -1;
    int right = -1;
    std::vector<std::uint32_t> class_counts;  // leaf only, in-bag
    std::vector<std::uint32_t> inbag_rows;    // leaf only, in-bag training rows
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root; children follow in preorder

    // Routes a complete (on split features) row; throws RoutingError when a
    // split feature is missing.
    int route(const FeatureFrame& frame, std::size_t row) const;
    std::vector<int> leaf_ids() const;
};

// Per-leaf region accumulated along the root path: numeric intervals
// (lo, hi], categorical allowed-level masks. Indexed by node id.
struct TreeBounds {
    std::vector<std::vector<double>> num_lo;              // [node][feature]
    std::vector<std::vector<double>> num_hi;
    std::vector<std::vector<std::uint64_t>> cat_allowed;  // [node][feature]
};

// Derives leaf bounds from the split structure (computed on demand; only the
// generative side needs them).
TreeBounds compute_tree_bounds(const Tree& tree, const Schema& feature_schema);

struct ForestParams {
    int n_trees = 500;
    int mtry = 0;  // 0 = ceil(sqrt(p))
    int min_node_size = 1;
    bool bootstrap = true;
};

struct Forest {
    ForestParams params;
    std::uint64_t seed = 0;
    Schema feature_schema;
    std::string target_name;
    std::vector<std::string> classes;  // target level order
    std::vector<int> train_labels;     // class index per training row
    bool single_class_warning = false;
    std::vector<Tree> trees;
    std::vector<std::vector<std::uint32_t>> oob_rows;  // per tree, ascending
    std::vector<std::uint32_t> oob_votes;              // n x K hard-vote counts, filled at fit
};

// Core fit on an encoded frame plus labels; every tree is grown on a
// bootstrap (or the full) sample by recursive Gini splitting over mtry
// candidate features, extended past mtry when no candidate yields a valid
// split (so impure distinguishable nodes always split). Deterministic in
// `seed`. Frame must be complete. When `size_counts` is given, only rows
// flagged true count toward min_node_size (the ARF discriminator counts its
// real rows there, so every leaf supports a density estimate).
Forest fit_forest(const FeatureFrame& frame, const std::vector<int>& labels,
                  const std::vector<std::string>& classes, const std::string& target_name,
                  ForestParams params, std::uint64_t seed,
                  const std::vector<bool>* size_counts = nullptr);

// Table front-end: complete table, categorical target. Fewer than 2 observed
// classes yields a degenerate constant model with the warning flag set.
Forest fit_classifier(const Table& table, const std::string& target, ForestParams params,
                      std::uint64_t seed);

// Average over trees of within-leaf class proportions. Table schema must
// equal the training feature schema.
PredictionMatrix predict_proba(const Forest& forest, const Table& table);
PredictionMatrix predict_proba(const Forest& forest, const FeatureFrame& frame);

struct OobResult {
    double accuracy = 0.0;
    std::size_t n_evaluated = 0;
    std::size_t n_uncovered = 0;  // rows that are in-bag in every tree
};

// OOB-majority-vote accuracy; uncovered rows are excluded and reported.
OobResult oob_accuracy(const Forest& forest);

// Per-tree leaf id per row. Missing cells are tolerated on features no
// encountered split uses; otherwise RoutingError.
std::vector<std::vector<int>> leaf_assignments(const Forest& forest, const FeatureFrame& frame);
std::vector<std::vector<int>> leaf_assignments(const Forest& forest, const Table& table);

}  // namespace tabaug
