#include "tabaug/arf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tabaug/rng.hpp"

namespace tabaug {

namespace {

constexpr std::uint64_t kInitTag = 0x696e6974;  // "init"
constexpr std::uint64_t kDiscTag = 0x64697363;  // "disc"
constexpr std::uint64_t kGenTag = 0x67656e;     // "gen"
constexpr std::uint64_t kRowTag = 0x726f77;     // "row"

}  // namespace

Table initial_synthetic(const Table& table, std::size_t m, std::uint64_t seed) {
    const std::size_t n = table.n_rows();
    const std::size_t p = table.n_cols();
    if (n == 0) throw FitError("initial_synthetic needs a non-empty table");
    std::vector<Cell> cells(m * p);
    for (std::size_t r = 0; r < m; ++r) {
        rng::Rng rng(rng::derive(seed, kRowTag, r));
        for (std::size_t j = 0; j < p; ++j) {
            cells[r * p + j] = table.at(rng.uniform_int(n), j);
        }
    }
    return Table(table.schema(), std::move(cells));
}

namespace {

struct LeafCoverage {
    // Per tree: leaf node ids with positive real coverage, the real rows in
    // each, and cumulative counts for coverage-proportional draws.
    struct TreeCover {
        std::vector<int> leaf_nodes;
        std::vector<std::vector<std::uint32_t>> rows;
        std::vector<std::uint32_t> cum;  // cumulative row counts, last == n
    };
    std::vector<TreeCover> trees;
};

LeafCoverage route_real_rows(const Forest& forest, const FeatureFrame& real_frame) {
    LeafCoverage cover;
    cover.trees.resize(forest.trees.size());
    for (std::size_t t = 0; t < forest.trees.size(); ++t) {
        const Tree& tree = forest.trees[t];
        std::map<int, std::vector<std::uint32_t>> by_leaf;
        for (std::size_t i = 0; i < real_frame.n_rows; ++i) {
            by_leaf[tree.route(real_frame, i)].push_back(static_cast<std::uint32_t>(i));
        }
        auto& tc = cover.trees[t];
        std::uint32_t running = 0;
        for (auto& [node, rows] : by_leaf) {
            tc.leaf_nodes.push_back(node);
            running += static_cast<std::uint32_t>(rows.size());
            tc.cum.push_back(running);
            tc.rows.push_back(std::move(rows));
        }
    }
    return cover;
}

// Generator step: per synthetic row, pick a tree uniformly, a leaf by real
// coverage, then each feature independently from the real values in that leaf.
Table resample_within_leaves(const Table& real, const LeafCoverage& cover, std::size_t m,
                             std::uint64_t seed) {
    const std::size_t p = real.n_cols();
    const std::size_t n_trees = cover.trees.size();
    std::vector<Cell> cells(m * p);
    for (std::size_t r = 0; r < m; ++r) {
        rng::Rng rng(rng::derive(seed, kRowTag, r));
        const auto& tc = cover.trees[rng.uniform_int(n_trees)];
        const auto u = static_cast<std::uint32_t>(rng.uniform_int(tc.cum.back()));
        const std::size_t leaf =
            static_cast<std::size_t>(std::upper_bound(tc.cum.begin(), tc.cum.end(), u) - tc.cum.begin());
        const auto& rows = tc.rows[leaf];
        for (std::size_t j = 0; j < p; ++j) {
            cells[r * p + j] = real.at(rows[rng.uniform_int(rows.size())], j);
        }
    }
    return Table(real.schema(), std::move(cells));
}

// Gathers the real rows of every leaf underneath `node`.
void collect_subtree_rows(const Tree& tree, int node,
                          const std::map<int, std::vector<std::uint32_t>>& leaf_rows,
                          std::vector<std::uint32_t>& out) {
    const auto& nd = tree.nodes[static_cast<std::size_t>(node)];
    if (nd.leaf) {
        auto it = leaf_rows.find(node);
        if (it != leaf_rows.end()) out.insert(out.end(), it->second.begin(), it->second.end());
        return;
    }
    collect_subtree_rows(tree, nd.left, leaf_rows, out);
    collect_subtree_rows(tree, nd.right, leaf_rows, out);
}

}  // namespace

ArfModel fit_arf(const Table& table, const ArfParams& params, std::uint64_t seed) {
    const std::size_t n = table.n_rows();
    if (!is_complete(table)) throw FitError("fit_arf requires a complete table");
    if (n < 2 * static_cast<std::size_t>(std::max(1, params.min_node_size))) {
        throw FitError("fit_arf needs at least 2*min_node_size rows");
    }
    const std::size_t m = params.synthetic_per_round == 0 ? n : params.synthetic_per_round;

    ForestParams disc;
    disc.n_trees = params.n_trees;
    disc.mtry = params.mtry;
    disc.min_node_size = params.min_node_size;
    disc.bootstrap = true;

    const std::vector<std::string> disc_classes = {"synthetic", "real"};
    FeatureFrame real_frame = FeatureFrame::from_table(table, std::nullopt);

    ArfModel model;
    model.schema = table.schema();
    model.delta = params.delta;
    model.smoothing = params.smoothing;
    model.seed = seed;

    // min_node_size counts the real rows: the density estimates live on them.
    std::vector<bool> size_counts(n + m, false);
    std::fill(size_counts.begin(), size_counts.begin() + static_cast<long>(n), true);

    Table synth = initial_synthetic(table, m, rng::derive(seed, kInitTag));
    for (int iter = 1; iter <= std::max(1, params.max_iters); ++iter) {
        const Table corpus = stack({table, synth});
        std::vector<int> labels(n + m, 0);
        std::fill(labels.begin(), labels.begin() + static_cast<long>(n), 1);
        FeatureFrame frame = FeatureFrame::from_table(corpus, std::nullopt);
        model.forest = fit_forest(frame, labels, disc_classes, "", disc,
                                  rng::derive(seed, kDiscTag, static_cast<std::uint64_t>(iter)),
                                  &size_counts);
        const double acc = oob_accuracy(model.forest).accuracy;
        model.accuracy_history.push_back(acc);
        if (acc <= 0.5 + params.delta) {
            model.converged = true;
            break;
        }
        if (iter == std::max(1, params.max_iters)) break;  // non-converged, keep last forest
        const LeafCoverage cover = route_real_rows(model.forest, real_frame);
        synth = resample_within_leaves(table, cover, m,
                                       rng::derive(seed, kGenTag, static_cast<std::uint64_t>(iter)));
    }

    // Density estimation on the final forest.
    const std::size_t p = table.n_cols();
    model.col_min.assign(p, 0.0);
    model.col_max.assign(p, 0.0);
    model.col_sd.assign(p, 0.0);
    for (std::size_t j = 0; j < p; ++j) {
        if (!model.schema.features[j].kind.is_numeric()) continue;
        const ColumnSummary s = column_stats(table, model.schema.features[j].name);
        model.col_min[j] = s.min;
        model.col_max[j] = s.max;
        model.col_sd[j] = s.sd;
    }

    const double n_trees = static_cast<double>(model.forest.trees.size());
    for (std::size_t t = 0; t < model.forest.trees.size(); ++t) {
        const Tree& tree = model.forest.trees[t];
        std::map<int, std::vector<std::uint32_t>> leaf_rows;
        for (std::size_t i = 0; i < n; ++i) {
            leaf_rows[tree.route(real_frame, i)].push_back(static_cast<std::uint32_t>(i));
        }
        const TreeBounds bounds = compute_tree_bounds(tree, model.schema);
        // Parent map and subtree coverage for the <=1-row pooling fallback.
        std::vector<int> parent(tree.nodes.size(), -1);
        for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
            if (tree.nodes[id].leaf) continue;
            parent[static_cast<std::size_t>(tree.nodes[id].left)] = static_cast<int>(id);
            parent[static_cast<std::size_t>(tree.nodes[id].right)] = static_cast<int>(id);
        }
        std::vector<std::uint32_t> subtree_count(tree.nodes.size(), 0);
        for (std::size_t id = tree.nodes.size(); id-- > 0;) {
            if (tree.nodes[id].leaf) {
                auto it = leaf_rows.find(static_cast<int>(id));
                subtree_count[id] = it == leaf_rows.end() ? 0 : static_cast<std::uint32_t>(it->second.size());
            } else {
                subtree_count[id] = subtree_count[static_cast<std::size_t>(tree.nodes[id].left)] +
                                    subtree_count[static_cast<std::size_t>(tree.nodes[id].right)];
            }
        }

        for (const auto& [node, rows] : leaf_rows) {
            LeafDensity leaf;
            leaf.tree = static_cast<int>(t);
            leaf.node = node;
            leaf.weight = static_cast<double>(rows.size()) / (static_cast<double>(n) * n_trees);
            leaf.num_mu.assign(p, 0.0);
            leaf.num_sd.assign(p, 0.0);
            leaf.num_lo = bounds.num_lo[static_cast<std::size_t>(node)];
            leaf.num_hi = bounds.num_hi[static_cast<std::size_t>(node)];
            leaf.cat_probs.resize(p);

            // Statistics come from the leaf's rows, or from the nearest
            // ancestor covering >= 2 rows when the leaf covers <= 1.
            const std::vector<std::uint32_t>* stat_rows = &rows;
            std::vector<std::uint32_t> pooled;
            if (rows.size() <= 1) {
                int anc = node;
                while (parent[static_cast<std::size_t>(anc)] >= 0 &&
                       subtree_count[static_cast<std::size_t>(anc)] < 2) {
                    anc = parent[static_cast<std::size_t>(anc)];
                }
                collect_subtree_rows(tree, anc, leaf_rows, pooled);
                stat_rows = &pooled;
            }
            const auto& allowed = bounds.cat_allowed[static_cast<std::size_t>(node)];

            for (std::size_t j = 0; j < p; ++j) {
                const auto& kind = model.schema.features[j].kind;
                if (kind.is_numeric()) {
                    double sum = 0.0;
                    for (std::uint32_t r : *stat_rows) sum += real_frame.columns[j][r];
                    const double mu = sum / static_cast<double>(stat_rows->size());
                    double ss = 0.0;
                    for (std::uint32_t r : *stat_rows) {
                        const double d = real_frame.columns[j][r] - mu;
                        ss += d * d;
                    }
                    double sd = stat_rows->size() > 1
                                    ? std::sqrt(ss / static_cast<double>(stat_rows->size() - 1))
                                    : 0.0;
                    sd = std::max(sd, 1e-3 * model.col_sd[j]);
                    leaf.num_mu[j] = mu;
                    leaf.num_sd[j] = sd;
                } else {
                    const std::size_t n_levels = kind.levels.size();
                    std::vector<double> counts(n_levels, 0.0);
                    double total = 0.0;
                    for (std::uint32_t r : *stat_rows) {
                        const auto l = static_cast<std::size_t>(real_frame.columns[j][r]);
                        // Pooled ancestor rows may sit outside the leaf's
                        // allowed levels; those are clipped.
                        if ((allowed[j] >> l) & 1ULL) {
                            counts[l] += 1.0;
                            total += 1.0;
                        }
                    }
                    std::vector<double> probs(n_levels, 0.0);
                    double n_allowed = 0.0;
                    for (std::size_t l = 0; l < n_levels; ++l) {
                        if ((allowed[j] >> l) & 1ULL) n_allowed += 1.0;
                    }
                    if (model.smoothing) {
                        const double alpha = 1.0 / (total + static_cast<double>(n_levels));
                        const double denom = total + alpha * n_allowed;
                        for (std::size_t l = 0; l < n_levels; ++l) {
                            if ((allowed[j] >> l) & 1ULL) probs[l] = (counts[l] + alpha) / denom;
                        }
                    } else {
                        for (std::size_t l = 0; l < n_levels; ++l) {
                            if (total > 0.0) probs[l] = counts[l] / total;
                        }
                    }
                    leaf.cat_probs[j] = std::move(probs);
                }
            }
            model.leaves.push_back(std::move(leaf));
        }
    }
    return model;
}

namespace {

// Truncation interval for sampling: leaf path bounds intersected with the
// global observed range.
std::pair<double, double> truncation(const ArfModel& model, const LeafDensity& leaf, std::size_t j) {
    return {std::max(leaf.num_lo[j], model.col_min[j]), std::min(leaf.num_hi[j], model.col_max[j])};
}

Cell sample_feature(const ArfModel& model, const LeafDensity& leaf, std::size_t j, rng::Rng& rng) {
    const auto& kind = model.schema.features[j].kind;
    if (kind.is_numeric()) {
        const auto [lo, hi] = truncation(model, leaf, j);
        return Cell::number(rng.trunc_normal(leaf.num_mu[j], leaf.num_sd[j], lo, hi));
    }
    const auto& probs = leaf.cat_probs[j];
    const double u = rng.uniform();
    double acc = 0.0;
    int last = -1;
    for (std::size_t l = 0; l < probs.size(); ++l) {
        if (probs[l] <= 0.0) continue;
        acc += probs[l];
        last = static_cast<int>(l);
        if (u < acc) return Cell::category(static_cast<int>(l));
    }
    if (last < 0) throw Error("leaf density has an all-zero categorical vector");
    return Cell::category(last);
}

std::size_t draw_index(const std::vector<double>& cum_weights, double u) {
    return static_cast<std::size_t>(
        std::upper_bound(cum_weights.begin(), cum_weights.end(), u) - cum_weights.begin());
}

}  // namespace

Table generate(const ArfModel& model, std::size_t m, std::uint64_t seed) {
    if (model.leaves.empty()) throw Error("ARF model has no leaves");
    const std::size_t p = model.schema.size();
    std::vector<double> cum;
    cum.reserve(model.leaves.size());
    double acc = 0.0;
    for (const auto& leaf : model.leaves) {
        acc += leaf.weight;
        cum.push_back(acc);
    }
    std::vector<Cell> cells(m * p);
    for (std::size_t r = 0; r < m; ++r) {
        rng::Rng rng(rng::derive(seed, kRowTag, r));
        const std::size_t li = std::min(draw_index(cum, rng.uniform() * acc), model.leaves.size() - 1);
        const LeafDensity& leaf = model.leaves[li];
        for (std::size_t j = 0; j < p; ++j) {
            cells[r * p + j] = sample_feature(model, leaf, j, rng);
        }
    }
    return Table(model.schema, std::move(cells));
}

namespace {

struct ResolvedEvidence {
    std::vector<int> cols;         // column indices with evidence
    std::vector<Cell> values;      // aligned with cols
    std::vector<double> as_double; // numeric value or level index
};

ResolvedEvidence resolve_evidence(const Schema& schema, const Evidence& evidence) {
    ResolvedEvidence res;
    for (const auto& [name, cell] : evidence) {
        const std::size_t j = schema.require(name);
        const auto& kind = schema.features[j].kind;
        if (cell.is_missing()) throw Error("evidence value for '" + name + "' is missing");
        if (kind.is_numeric()) {
            if (!cell.is_number()) throw SchemaError("evidence for numeric feature '" + name + "' must be a number");
            res.as_double.push_back(cell.number());
        } else {
            if (!cell.is_category() || cell.category() >= static_cast<int>(kind.levels.size())) {
                throw SchemaError("evidence for categorical feature '" + name + "' has an invalid level");
            }
            res.as_double.push_back(static_cast<double>(cell.category()));
        }
        res.cols.push_back(static_cast<int>(j));
        res.values.push_back(cell);
    }
    return res;
}

// Likelihood of the evidence under one leaf's densities, in log space.
// truncated=true uses the sampling truncation (out-of-interval evidence
// scores -inf); truncated=false uses the plain normal density.
double evidence_log_likelihood(const ArfModel& model, const LeafDensity& leaf,
                               const ResolvedEvidence& ev, bool truncated) {
    double ll = 0.0;
    for (std::size_t e = 0; e < ev.cols.size(); ++e) {
        const auto j = static_cast<std::size_t>(ev.cols[e]);
        const auto& kind = model.schema.features[j].kind;
        if (kind.is_numeric()) {
            const double v = ev.as_double[e];
            const double mu = leaf.num_mu[j];
            const double sd = leaf.num_sd[j];
            if (!(sd > 0.0)) {
                if (v != mu) return -INFINITY;
                continue;  // point mass, factor 1
            }
            if (truncated) {
                const auto [lo, hi] = truncation(model, leaf, j);
                if (v < lo || v > hi) return -INFINITY;
                const double norm = rng::norm_cdf((hi - mu) / sd) - rng::norm_cdf((lo - mu) / sd);
                if (!(norm > 0.0)) {
                    if (v != std::clamp(mu, lo, hi)) return -INFINITY;
                    continue;
                }
                const double z = (v - mu) / sd;
                ll += -0.5 * z * z - std::log(sd) - std::log(norm);
            } else {
                const double z = (v - mu) / sd;
                ll += -0.5 * z * z - std::log(sd);
            }
        } else {
            const double pr = leaf.cat_probs[j][static_cast<std::size_t>(ev.as_double[e])];
            if (!(pr > 0.0)) return -INFINITY;
            ll += std::log(pr);
        }
    }
    return ll;
}

// Descends a tree following evidence; branches both ways when a split tests
// an unconditioned feature. Yields leaves whose region admits the evidence.
void route_evidence(const Tree& tree, const Schema& schema, const std::vector<double>& ev_by_col,
                    int node, std::vector<int>& out) {
    const auto& nd = tree.nodes[static_cast<std::size_t>(node)];
    if (nd.leaf) {
        out.push_back(node);
        return;
    }
    const auto f = static_cast<std::size_t>(nd.split.feature);
    const double v = ev_by_col[f];
    if (std::isnan(v)) {
        route_evidence(tree, schema, ev_by_col, nd.left, out);
        route_evidence(tree, schema, ev_by_col, nd.right, out);
        return;
    }
    const bool go_left = schema.features[f].kind.is_numeric()
                             ? v <= nd.split.threshold
                             : ((nd.split.level_mask >> static_cast<unsigned>(v)) & 1ULL) != 0;
    route_evidence(tree, schema, ev_by_col, go_left ? nd.left : nd.right, out);
}

std::size_t find_leaf_density(const ArfModel& model, int tree, int node) {
    // model.leaves is ordered by (tree, node).
    auto it = std::lower_bound(model.leaves.begin(), model.leaves.end(), std::make_pair(tree, node),
                               [](const LeafDensity& l, const std::pair<int, int>& key) {
                                   return std::make_pair(l.tree, l.node) < key;
                               });
    if (it == model.leaves.end() || it->tree != tree || it->node != node) {
        return model.leaves.size();
    }
    return static_cast<std::size_t>(it - model.leaves.begin());
}

ConditionalLeaves normalize(std::vector<std::size_t> idx, std::vector<double> logw,
                            ConditionalFallback fallback) {
    ConditionalLeaves out;
    out.fallback = fallback;
    double max_lw = -INFINITY;
    for (double lw : logw) max_lw = std::max(max_lw, lw);
    if (!(max_lw > -INFINITY)) return out;  // caller falls back
    double total = 0.0;
    std::vector<double> w(logw.size());
    for (std::size_t i = 0; i < logw.size(); ++i) {
        w[i] = std::exp(logw[i] - max_lw);
        total += w[i];
    }
    for (std::size_t i = 0; i < logw.size(); ++i) {
        if (w[i] > 0.0) {
            out.leaf_indices.push_back(idx[i]);
            out.weights.push_back(w[i] / total);
        }
    }
    return out;
}

}  // namespace

ConditionalLeaves conditional_leaves(const ArfModel& model, const Evidence& evidence) {
    const ResolvedEvidence ev = resolve_evidence(model.schema, evidence);
    const std::size_t p = model.schema.size();

    // Stage 1: region filter (by routing) + truncated likelihood reweighting.
    std::vector<double> ev_by_col(p, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t e = 0; e < ev.cols.size(); ++e) {
        ev_by_col[static_cast<std::size_t>(ev.cols[e])] = ev.as_double[e];
    }
    std::vector<std::size_t> idx;
    std::vector<double> logw;
    for (std::size_t t = 0; t < model.forest.trees.size(); ++t) {
        std::vector<int> nodes;
        route_evidence(model.forest.trees[t], model.schema, ev_by_col, 0, nodes);
        for (int node : nodes) {
            const std::size_t li = find_leaf_density(model, static_cast<int>(t), node);
            if (li >= model.leaves.size()) continue;  // zero-coverage leaf
            const double ll = evidence_log_likelihood(model, model.leaves[li], ev, true);
            if (ll == -INFINITY) continue;
            idx.push_back(li);
            logw.push_back(std::log(model.leaves[li].weight) + ll);
        }
    }
    ConditionalLeaves out = normalize(std::move(idx), std::move(logw), ConditionalFallback::None);
    if (!out.leaf_indices.empty()) return out;

    // Stage 2: drop the bounds filter, keep (untruncated) likelihoods.
    idx.clear();
    logw.clear();
    for (std::size_t li = 0; li < model.leaves.size(); ++li) {
        const double ll = evidence_log_likelihood(model, model.leaves[li], ev, false);
        if (ll == -INFINITY) continue;
        idx.push_back(li);
        logw.push_back(std::log(model.leaves[li].weight) + ll);
    }
    out = normalize(std::move(idx), std::move(logw), ConditionalFallback::BoundsDropped);
    if (!out.leaf_indices.empty()) return out;

    // Stage 3: unconditional weights.
    out = ConditionalLeaves{};
    out.fallback = ConditionalFallback::Unconditional;
    for (std::size_t li = 0; li < model.leaves.size(); ++li) {
        out.leaf_indices.push_back(li);
        out.weights.push_back(model.leaves[li].weight);
    }
    return out;
}

ConditionalSample sample_conditional(const ArfModel& model, const Evidence& evidence,
                                     std::size_t m, std::uint64_t seed) {
    const ConditionalLeaves cond = conditional_leaves(model, evidence);
    const ResolvedEvidence ev = resolve_evidence(model.schema, evidence);
    const std::size_t p = model.schema.size();
    std::vector<bool> is_evidence(p, false);
    for (int j : ev.cols) is_evidence[static_cast<std::size_t>(j)] = true;

    std::vector<double> cum;
    double acc = 0.0;
    for (double w : cond.weights) {
        acc += w;
        cum.push_back(acc);
    }
    std::vector<Cell> cells(m * p);
    for (std::size_t r = 0; r < m; ++r) {
        rng::Rng rng(rng::derive(seed, kRowTag, r));
        const std::size_t pick = std::min(draw_index(cum, rng.uniform() * acc), cum.size() - 1);
        const LeafDensity& leaf = model.leaves[cond.leaf_indices[pick]];
        for (std::size_t j = 0; j < p; ++j) {
            if (is_evidence[j]) continue;
            cells[r * p + j] = sample_feature(model, leaf, j, rng);
        }
        for (std::size_t e = 0; e < ev.cols.size(); ++e) {
            cells[r * p + static_cast<std::size_t>(ev.cols[e])] = ev.values[e];
        }
    }
    ConditionalSample out{Table(model.schema, std::move(cells)), cond.fallback};
    return out;
}

}  // namespace tabaug
