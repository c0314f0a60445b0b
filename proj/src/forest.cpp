#include "tabaug/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tabaug/rng.hpp"

namespace tabaug {

FeatureFrame FeatureFrame::from_table(const Table& table, const std::optional<std::string>& exclude) {
    FeatureFrame frame;
    frame.n_rows = table.n_rows();
    for (std::size_t j = 0; j < table.n_cols(); ++j) {
        const auto& f = table.schema().features[j];
        if (exclude && f.name == *exclude) continue;
        frame.schema.features.push_back(f);
        std::vector<double> col(frame.n_rows);
        for (std::size_t i = 0; i < frame.n_rows; ++i) {
            const Cell& c = table.at(i, j);
            if (c.is_missing()) {
                col[i] = std::numeric_limits<double>::quiet_NaN();
            } else if (c.is_number()) {
                col[i] = c.number();
            } else {
                col[i] = static_cast<double>(c.category());
            }
        }
        frame.columns.push_back(std::move(col));
    }
    return frame;
}

int Tree::route(const FeatureFrame& frame, std::size_t row) const {
    int id = 0;
    while (!nodes[static_cast<std::size_t>(id)].leaf) {
        const auto& node = nodes[static_cast<std::size_t>(id)];
        const std::size_t f = static_cast<std::size_t>(node.split.feature);
        const double v = frame.columns[f][row];
        if (std::isnan(v)) throw RoutingError(row, frame.schema.features[f].name);
        bool go_left;
        if (frame.schema.features[f].kind.is_numeric()) {
            go_left = v <= node.split.threshold;
        } else {
            go_left = (node.split.level_mask >> static_cast<unsigned>(v)) & 1ULL;
        }
        id = go_left ? node.left : node.right;
    }
    return id;
}

std::vector<int> Tree::leaf_ids() const {
    std::vector<int> ids;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].leaf) ids.push_back(static_cast<int>(i));
    }
    return ids;
}

TreeBounds compute_tree_bounds(const Tree& tree, const Schema& feature_schema) {
    const std::size_t p = feature_schema.size();
    TreeBounds b;
    b.num_lo.resize(tree.nodes.size());
    b.num_hi.resize(tree.nodes.size());
    b.cat_allowed.resize(tree.nodes.size());

    std::vector<double> lo(p, -std::numeric_limits<double>::infinity());
    std::vector<double> hi(p, std::numeric_limits<double>::infinity());
    std::vector<std::uint64_t> allowed(p, 0);
    for (std::size_t j = 0; j < p; ++j) {
        const auto& kind = feature_schema.features[j].kind;
        if (kind.is_categorical()) {
            allowed[j] = kind.levels.size() >= 64 ? ~0ULL : ((1ULL << kind.levels.size()) - 1);
        }
    }

    struct Item {
        int node;
        std::vector<double> lo, hi;
        std::vector<std::uint64_t> allowed;
    };
    std::vector<Item> stack;
    stack.push_back({0, std::move(lo), std::move(hi), std::move(allowed)});
    while (!stack.empty()) {
        Item it = std::move(stack.back());
        stack.pop_back();
        const auto& node = tree.nodes[static_cast<std::size_t>(it.node)];
        if (node.leaf) {
            b.num_lo[static_cast<std::size_t>(it.node)] = std::move(it.lo);
            b.num_hi[static_cast<std::size_t>(it.node)] = std::move(it.hi);
            b.cat_allowed[static_cast<std::size_t>(it.node)] = std::move(it.allowed);
            continue;
        }
        const std::size_t f = static_cast<std::size_t>(node.split.feature);
        Item left{node.left, it.lo, it.hi, it.allowed};
        Item right{node.right, std::move(it.lo), std::move(it.hi), std::move(it.allowed)};
        if (feature_schema.features[f].kind.is_numeric()) {
            left.hi[f] = std::min(left.hi[f], node.split.threshold);
            right.lo[f] = std::max(right.lo[f], node.split.threshold);
        } else {
            left.allowed[f] &= node.split.level_mask;
            right.allowed[f] &= ~node.split.level_mask;
        }
        stack.push_back(std::move(right));
        stack.push_back(std::move(left));
    }
    return b;
}

namespace {

struct SplitCandidate {
    bool valid = false;
    double score = std::numeric_limits<double>::infinity();  // weighted child impurity, minimized
    SplitRule rule;
    // Order: lower score wins, then lower feature index, then lower
    // threshold, then lower mask.
    bool better_than(const SplitCandidate& other) const {
        if (!valid) return false;
        if (!other.valid) return true;
        if (score != other.score) return score < other.score;
        if (rule.feature != other.rule.feature) return rule.feature < other.rule.feature;
        if (rule.threshold != other.rule.threshold) return rule.threshold < other.rule.threshold;
        return rule.level_mask < other.rule.level_mask;
    }
};

class TreeGrower {
public:
    TreeGrower(const FeatureFrame& frame, const std::vector<int>& labels, std::size_t n_classes,
               const ForestParams& params, rng::Rng& rng, const std::vector<bool>* size_counts)
        : frame_(frame), labels_(labels), n_classes_(n_classes), params_(params), rng_(rng),
          size_counts_(size_counts) {}

    Tree grow(std::vector<std::uint32_t> rows) {
        tree_.nodes.clear();
        build(std::move(rows));
        return std::move(tree_);
    }

private:
    bool counted(std::uint32_t r) const { return !size_counts_ || (*size_counts_)[r]; }

    int build(std::vector<std::uint32_t> rows) {
        std::vector<std::uint32_t> counts(n_classes_, 0);
        std::uint32_t m_counted = 0;
        for (std::uint32_t r : rows) {
            ++counts[static_cast<std::size_t>(labels_[r])];
            if (counted(r)) ++m_counted;
        }
        const std::uint32_t m = static_cast<std::uint32_t>(rows.size());
        const bool pure =
            std::any_of(counts.begin(), counts.end(), [&](std::uint32_t c) { return c == m; });
        SplitCandidate best;
        if (!pure && m >= 2 && m_counted >= 2 * static_cast<std::uint32_t>(params_.min_node_size)) {
            best = find_split(rows, counts, m);
        }
        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();
        if (!best.valid) {
            tree_.nodes[static_cast<std::size_t>(id)].class_counts = std::move(counts);
            tree_.nodes[static_cast<std::size_t>(id)].inbag_rows = std::move(rows);
            return id;
        }
        std::vector<std::uint32_t> left_rows, right_rows;
        const std::size_t f = static_cast<std::size_t>(best.rule.feature);
        const bool numeric = frame_.schema.features[f].kind.is_numeric();
        for (std::uint32_t r : rows) {
            const double v = frame_.columns[f][r];
            const bool go_left =
                numeric ? v <= best.rule.threshold
                        : ((best.rule.level_mask >> static_cast<unsigned>(v)) & 1ULL) != 0;
            (go_left ? left_rows : right_rows).push_back(r);
        }
        rows = {};
        tree_.nodes[static_cast<std::size_t>(id)].leaf = false;
        tree_.nodes[static_cast<std::size_t>(id)].split = best.rule;
        const int left = build(std::move(left_rows));
        const int right = build(std::move(right_rows));
        tree_.nodes[static_cast<std::size_t>(id)].left = left;
        tree_.nodes[static_cast<std::size_t>(id)].right = right;
        return id;
    }

    SplitCandidate find_split(const std::vector<std::uint32_t>& rows,
                              const std::vector<std::uint32_t>& counts, std::uint32_t m) {
        const std::size_t p = frame_.schema.size();
        std::vector<std::size_t> order(p);
        std::iota(order.begin(), order.end(), 0);
        for (std::size_t i = p; i > 1; --i) {
            std::swap(order[i - 1], order[static_cast<std::size_t>(rng_.uniform_int(i))]);
        }
        const auto mtry = static_cast<std::size_t>(params_.mtry);
        SplitCandidate best;
        std::size_t evaluated = 0;
        // Scans past mtry until some candidate yields a valid split, so an
        // impure node with distinguishable rows always splits.
        for (std::size_t f : order) {
            if (evaluated >= mtry && best.valid) break;
            ++evaluated;
            SplitCandidate cand = frame_.schema.features[f].kind.is_numeric()
                                      ? numeric_split(f, rows, m)
                                      : categorical_split(f, rows, counts, m);
            if (cand.better_than(best)) best = cand;
        }
        return best;
    }

    SplitCandidate numeric_split(std::size_t f, const std::vector<std::uint32_t>& rows,
                                 std::uint32_t m) {
        pairs_.clear();
        pairs_.reserve(m);
        std::uint32_t total_counted = 0;
        for (std::uint32_t r : rows) {
            pairs_.push_back({frame_.columns[f][r], labels_[r], counted(r)});
            if (counted(r)) ++total_counted;
        }
        std::sort(pairs_.begin(), pairs_.end(),
                  [](const auto& a, const auto& b) { return a.value < b.value; });
        std::vector<std::uint32_t> total(n_classes_, 0);
        for (const auto& pr : pairs_) ++total[static_cast<std::size_t>(pr.label)];
        std::vector<std::uint32_t> left(n_classes_, 0);
        std::uint32_t left_counted = 0;
        double left_ss = 0.0;
        SplitCandidate best;
        const auto minsz = static_cast<std::uint32_t>(params_.min_node_size);
        for (std::uint32_t i = 0; i + 1 < m; ++i) {
            const auto y = static_cast<std::size_t>(pairs_[i].label);
            left_ss += 2.0 * static_cast<double>(left[y]) + 1.0;
            ++left[y];
            if (pairs_[i].counted) ++left_counted;
            if (pairs_[i].value == pairs_[i + 1].value) continue;
            const std::uint32_t nl = i + 1;
            const std::uint32_t nr = m - nl;
            if (left_counted < minsz || total_counted - left_counted < minsz) continue;
            if (nl == 0 || nr == 0) continue;
            double right_ss = 0.0;
            for (std::size_t k = 0; k < n_classes_; ++k) {
                const double c = static_cast<double>(total[k] - left[k]);
                right_ss += c * c;
            }
            const double score =
                (static_cast<double>(nl) - left_ss / nl + static_cast<double>(nr) - right_ss / nr) /
                static_cast<double>(m);
            // Midpoint guarded so the split always separates the two values.
            double t = pairs_[i].value + (pairs_[i + 1].value - pairs_[i].value) / 2.0;
            if (!(t < pairs_[i + 1].value)) t = pairs_[i].value;
            SplitCandidate cand;
            cand.valid = true;
            cand.score = score;
            cand.rule.feature = static_cast<int>(f);
            cand.rule.threshold = t;
            if (cand.better_than(best)) best = cand;
        }
        return best;
    }

    SplitCandidate categorical_split(std::size_t f, const std::vector<std::uint32_t>& rows,
                                     const std::vector<std::uint32_t>& node_counts,
                                     std::uint32_t m) {
        const std::size_t n_levels = frame_.schema.features[f].kind.levels.size();
        std::vector<std::uint32_t> lv_class(n_levels * n_classes_, 0);
        std::vector<std::uint32_t> lv_total(n_levels, 0);
        std::vector<std::uint32_t> lv_counted(n_levels, 0);
        std::uint32_t total_counted = 0;
        for (std::uint32_t r : rows) {
            const auto l = static_cast<std::size_t>(frame_.columns[f][r]);
            ++lv_class[l * n_classes_ + static_cast<std::size_t>(labels_[r])];
            ++lv_total[l];
            if (counted(r)) {
                ++lv_counted[l];
                ++total_counted;
            }
        }
        std::vector<std::size_t> present;
        for (std::size_t l = 0; l < n_levels; ++l) {
            if (lv_total[l] > 0) present.push_back(l);
        }
        if (present.size() < 2) return {};

        const auto minsz = static_cast<std::uint32_t>(params_.min_node_size);
        SplitCandidate best;
        auto evaluate_mask = [&](std::uint64_t mask) {
            std::uint32_t nl = 0;
            std::uint32_t nl_counted = 0;
            std::vector<std::uint32_t> left(n_classes_, 0);
            for (std::size_t l : present) {
                if ((mask >> l) & 1ULL) {
                    nl += lv_total[l];
                    nl_counted += lv_counted[l];
                    for (std::size_t k = 0; k < n_classes_; ++k) {
                        left[k] += lv_class[l * n_classes_ + k];
                    }
                }
            }
            const std::uint32_t nr = m - nl;
            if (nl == 0 || nr == 0) return;
            if (nl_counted < minsz || total_counted - nl_counted < minsz) return;
            double left_ss = 0.0, right_ss = 0.0;
            for (std::size_t k = 0; k < n_classes_; ++k) {
                const double cl = static_cast<double>(left[k]);
                const double cr = static_cast<double>(node_counts[k] - left[k]);
                left_ss += cl * cl;
                right_ss += cr * cr;
            }
            const double score =
                (static_cast<double>(nl) - left_ss / nl + static_cast<double>(nr) - right_ss / nr) /
                static_cast<double>(m);
            SplitCandidate cand;
            cand.valid = true;
            cand.score = score;
            cand.rule.feature = static_cast<int>(f);
            cand.rule.level_mask = mask;
            if (cand.better_than(best)) best = cand;
        };

        if (n_levels <= 10) {
            // Exhaustive over partitions of present levels; the first present
            // level is anchored right to skip mirror duplicates.
            const std::size_t k = present.size();
            for (std::uint64_t bits = 1; bits < (1ULL << (k - 1)); ++bits) {
                std::uint64_t mask = 0;
                for (std::size_t i = 0; i + 1 < k; ++i) {
                    if ((bits >> i) & 1ULL) mask |= 1ULL << present[i + 1];
                }
                evaluate_mask(mask);
            }
        } else {
            // One-vs-rest in level order.
            for (std::size_t l : present) evaluate_mask(1ULL << l);
        }
        return best;
    }

    const FeatureFrame& frame_;
    const std::vector<int>& labels_;
    std::size_t n_classes_;
    const ForestParams& params_;
    rng::Rng& rng_;
    const std::vector<bool>* size_counts_;
    Tree tree_;
    struct ValueLabel {
        double value;
        int label;
        bool counted;
    };
    std::vector<ValueLabel> pairs_;
};

std::size_t tree_hard_vote(const Tree& tree, const FeatureFrame& frame, std::size_t row) {
    const int leaf = tree.route(frame, row);
    const auto& counts = tree.nodes[static_cast<std::size_t>(leaf)].class_counts;
    std::size_t best = 0;
    for (std::size_t k = 1; k < counts.size(); ++k) {
        if (counts[k] > counts[best]) best = k;
    }
    return best;
}

}  // namespace

Forest fit_forest(const FeatureFrame& frame, const std::vector<int>& labels,
                  const std::vector<std::string>& classes, const std::string& target_name,
                  ForestParams params, std::uint64_t seed, const std::vector<bool>* size_counts) {
    const std::size_t n = frame.n_rows;
    const std::size_t p = frame.schema.size();
    if (labels.size() != n) throw FitError("label count does not match row count");
    if (n == 0 || p == 0) throw FitError("empty training data");
    if (classes.empty()) throw FitError("no target classes");
    for (std::size_t j = 0; j < p; ++j) {
        const auto& kind = frame.schema.features[j].kind;
        if (kind.is_categorical() && kind.levels.size() > 64) {
            throw FitError("feature '" + frame.schema.features[j].name +
                           "' has more than 64 levels");
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (frame.is_missing(i, j)) {
                throw FitError("missing cell in feature '" + frame.schema.features[j].name +
                               "' at row " + std::to_string(i) + "; complete the data first");
            }
        }
    }
    if (params.mtry <= 0) params.mtry = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(p))));
    params.mtry = std::min<int>(params.mtry, static_cast<int>(p));
    if (params.min_node_size < 1) params.min_node_size = 1;
    if (params.n_trees < 1) throw FitError("n_trees must be positive");

    Forest forest;
    forest.params = params;
    forest.seed = seed;
    forest.feature_schema = frame.schema;
    forest.target_name = target_name;
    forest.classes = classes;
    forest.train_labels = labels;

    {
        std::vector<bool> seen(classes.size(), false);
        std::size_t observed = 0;
        for (int y : labels) {
            if (y < 0 || y >= static_cast<int>(classes.size())) throw FitError("label out of range");
            if (!seen[static_cast<std::size_t>(y)]) {
                seen[static_cast<std::size_t>(y)] = true;
                ++observed;
            }
        }
        forest.single_class_warning = observed < 2;
    }

    forest.trees.resize(static_cast<std::size_t>(params.n_trees));
    forest.oob_rows.resize(static_cast<std::size_t>(params.n_trees));
    forest.oob_votes.assign(n * classes.size(), 0);
    for (int t = 0; t < params.n_trees; ++t) {
        rng::Rng rng(rng::derive(seed, 0x74726565ULL, static_cast<std::uint64_t>(t)));
        std::vector<std::uint32_t> rows;
        rows.reserve(n);
        if (params.bootstrap) {
            std::vector<bool> inbag(n, false);
            for (std::size_t i = 0; i < n; ++i) {
                const auto r = static_cast<std::uint32_t>(rng.uniform_int(n));
                rows.push_back(r);
                inbag[r] = true;
            }
            auto& oob = forest.oob_rows[static_cast<std::size_t>(t)];
            for (std::size_t i = 0; i < n; ++i) {
                if (!inbag[i]) oob.push_back(static_cast<std::uint32_t>(i));
            }
        } else {
            for (std::size_t i = 0; i < n; ++i) rows.push_back(static_cast<std::uint32_t>(i));
        }
        TreeGrower grower(frame, labels, classes.size(), params, rng, size_counts);
        Tree tree = grower.grow(std::move(rows));
        // OOB hard votes are accumulated now, while the frame is at hand.
        for (std::uint32_t r : forest.oob_rows[static_cast<std::size_t>(t)]) {
            const std::size_t vote = tree_hard_vote(tree, frame, r);
            ++forest.oob_votes[r * classes.size() + vote];
        }
        forest.trees[static_cast<std::size_t>(t)] = std::move(tree);
    }
    return forest;
}

Forest fit_classifier(const Table& table, const std::string& target, ForestParams params,
                      std::uint64_t seed) {
    if (!is_complete(table)) throw FitError("fit_classifier requires a complete table");
    const std::size_t tj = table.schema().require(target);
    if (!table.schema().features[tj].kind.is_categorical()) {
        throw FitError("target '" + target + "' must be categorical");
    }
    std::vector<int> labels(table.n_rows());
    for (std::size_t i = 0; i < table.n_rows(); ++i) labels[i] = table.at(i, tj).category();
    FeatureFrame frame = FeatureFrame::from_table(table, target);
    return fit_forest(frame, labels, table.schema().features[tj].kind.levels, target, params, seed);
}

PredictionMatrix predict_proba(const Forest& forest, const FeatureFrame& frame) {
    if (!(frame.schema.features == forest.feature_schema.features)) {
        throw SchemaError("prediction schema does not match the training feature schema");
    }
    const std::size_t n = frame.n_rows;
    const std::size_t k = forest.classes.size();
    PredictionMatrix pm;
    pm.classes = forest.classes;
    pm.n_rows = n;
    pm.probs.assign(n * k, 0.0);
    for (const auto& tree : forest.trees) {
        for (std::size_t i = 0; i < n; ++i) {
            const int leaf = tree.route(frame, i);
            const auto& counts = tree.nodes[static_cast<std::size_t>(leaf)].class_counts;
            double total = 0.0;
            for (auto c : counts) total += c;
            for (std::size_t c = 0; c < k; ++c) {
                pm.probs[i * k + c] += static_cast<double>(counts[c]) / total;
            }
        }
    }
    const double inv = 1.0 / static_cast<double>(forest.trees.size());
    for (double& v : pm.probs) v *= inv;
    return pm;
}

PredictionMatrix predict_proba(const Forest& forest, const Table& table) {
    return predict_proba(forest, FeatureFrame::from_table(table, std::nullopt));
}

OobResult oob_accuracy(const Forest& forest) {
    const std::size_t n = forest.train_labels.size();
    const std::size_t k = forest.classes.size();
    OobResult res;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t total = 0;
        std::size_t best = 0;
        for (std::size_t c = 0; c < k; ++c) {
            const std::uint32_t v = forest.oob_votes[i * k + c];
            total += v;
            if (v > forest.oob_votes[i * k + best]) best = c;
        }
        if (total == 0) {
            ++res.n_uncovered;
            continue;
        }
        ++res.n_evaluated;
        if (static_cast<int>(best) == forest.train_labels[i]) ++correct;
    }
    if (res.n_evaluated > 0) {
        res.accuracy = static_cast<double>(correct) / static_cast<double>(res.n_evaluated);
    }
    return res;
}

std::vector<std::vector<int>> leaf_assignments(const Forest& forest, const FeatureFrame& frame) {
    std::vector<std::vector<int>> out(forest.trees.size());
    for (std::size_t t = 0; t < forest.trees.size(); ++t) {
        out[t].resize(frame.n_rows);
        for (std::size_t i = 0; i < frame.n_rows; ++i) {
            out[t][i] = forest.trees[t].route(frame, i);
        }
    }
    return out;
}

std::vector<std::vector<int>> leaf_assignments(const Forest& forest, const Table& table) {
    return leaf_assignments(forest, FeatureFrame::from_table(table, std::nullopt));
}

}  // namespace tabaug
