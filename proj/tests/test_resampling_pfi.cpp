#include <doctest.h>

#include <cmath>
#include <set>

#include "support/sim_data.hpp"
#include "tabaug/aggregate.hpp"
#include "tabaug/learners.hpp"
#include "tabaug/pfi.hpp"
#include "tabaug/resampling.hpp"
#include "tabaug/rng.hpp"

using namespace tabaug;

namespace {

std::vector<int> demo_labels() {
    // Class sizes 75, 9, 79, 6 (n=169), interleaved deterministically.
    std::vector<int> labels;
    labels.insert(labels.end(), 75, 0);
    labels.insert(labels.end(), 9, 1);
    labels.insert(labels.end(), 79, 2);
    labels.insert(labels.end(), 6, 3);
    return labels;
}

}  // namespace

TEST_CASE("stratified fold sizes on n=169, k=5") {
    const auto labels = demo_labels();
    const ResamplingPlan plan = make_folds(labels, 4, 5, 3, true, 101);
    for (std::size_t rep = 0; rep < 3; ++rep) {
        std::vector<std::size_t> sizes(5, 0);
        for (int f : plan.fold_of[rep]) ++sizes[static_cast<std::size_t>(f)];
        std::multiset<std::size_t> size_set(sizes.begin(), sizes.end());
        CHECK(size_set == std::multiset<std::size_t>{34, 34, 34, 34, 33});
        // Every class of size >= 5 appears in every fold.
        for (std::size_t fold = 0; fold < 5; ++fold) {
            std::set<int> present;
            for (std::size_t i = 0; i < labels.size(); ++i) {
                if (plan.fold_of[rep][i] == static_cast<int>(fold)) present.insert(labels[i]);
            }
            CHECK(present.count(0) == 1);
            CHECK(present.count(1) == 1);
            CHECK(present.count(2) == 1);
            CHECK(present.count(3) == 1);
        }
    }
}

TEST_CASE("a class of size 6 splits 2,1,1,1,1 over 5 folds") {
    const auto labels = demo_labels();
    const ResamplingPlan plan = make_folds(labels, 4, 5, 1, true, 7);
    std::vector<std::size_t> per_fold(5, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == 3) ++per_fold[static_cast<std::size_t>(plan.fold_of[0][i])];
    }
    std::multiset<std::size_t> dist(per_fold.begin(), per_fold.end());
    CHECK(dist == std::multiset<std::size_t>{2, 1, 1, 1, 1});
}

TEST_CASE("plans are deterministic and partition the rows") {
    const auto labels = demo_labels();
    const ResamplingPlan a = make_folds(labels, 4, 5, 4, true, 55);
    const ResamplingPlan b = make_folds(labels, 4, 5, 4, true, 55);
    CHECK(a.fold_of == b.fold_of);
    const ResamplingPlan c = make_folds(labels, 4, 5, 4, true, 56);
    CHECK(a.fold_of != c.fold_of);

    for (std::size_t rep = 0; rep < 4; ++rep) {
        for (std::size_t fold = 0; fold < 5; ++fold) {
            const auto test = a.test_rows(rep, fold);
            const auto train = a.train_rows(rep, fold);
            CHECK(test.size() + train.size() == labels.size());
            std::set<std::size_t> seen(test.begin(), test.end());
            for (std::size_t r : train) CHECK(seen.count(r) == 0);
        }
    }
}

TEST_CASE("unstratified folds balance sizes within one") {
    std::vector<int> labels(103, 0);
    const ResamplingPlan plan = make_folds(labels, 1, 5, 1, false, 3);
    std::vector<std::size_t> sizes(5, 0);
    for (int f : plan.fold_of[0]) ++sizes[static_cast<std::size_t>(f)];
    std::size_t lo = *std::min_element(sizes.begin(), sizes.end());
    std::size_t hi = *std::max_element(sizes.begin(), sizes.end());
    CHECK(hi - lo <= 1);
}

TEST_CASE("fold plan rejects bad arguments") {
    std::vector<int> labels(10, 0);
    CHECK_THROWS_AS(make_folds(labels, 1, 1, 1, true, 0), ConfigError);
    CHECK_THROWS_AS(make_folds(labels, 1, 11, 1, true, 0), ConfigError);
}

TEST_CASE("pfi of a constant column is exactly zero") {
    rng::Rng rng(9);
    Schema s;
    s.features = {{"x", FeatureKind::numeric()},
                  {"const", FeatureKind::numeric()},
                  {"y", FeatureKind::categorical({"a", "b"})}};
    s.target = "y";
    std::vector<Cell> cells;
    for (int i = 0; i < 80; ++i) {
        const double x = rng.normal();
        cells.push_back(Cell::number(x));
        cells.push_back(Cell::number(1.0));
        cells.push_back(Cell::category(x > 0 ? 1 : 0));
    }
    const Table t(s, std::move(cells));
    LearnerSpec spec;
    const FittedLearner fitted = fit_learner(spec, t, "y", 0);
    const Table features = drop_columns(t, {"y"});
    std::vector<int> truth;
    for (std::size_t i = 0; i < t.n_rows(); ++i) truth.push_back(t.at(i, 2).category());
    const PfiResult r = pfi([&](const Table& q) { return fitted.predict(q); }, features, truth,
                            PfiMetric::LogLoss, 5, 77);
    CHECK(r.features[1].feature == "const");
    CHECK(r.features[1].importance == 0.0);
    CHECK(r.features[1].sd == 0.0);
    CHECK(r.features[0].importance > 0.0);
}

TEST_CASE("pfi of a structurally ignored feature is exactly zero") {
    // Force a zero coefficient on x2 by hand; shuffling x2 then produces
    // bit-identical predictions, hence importance exactly 0.
    FittedLR m;
    m.target_name = "y";
    m.classes = {"neg", "pos"};
    m.reference_class = "neg";
    m.pivot = 0;
    EncodedFeature e1{"x1", true, 0.0, 1.0, {}, 0, 1};
    EncodedFeature e2{"x2", true, 0.0, 1.0, {}, 1, 1};
    m.encoding = {e1, e2};
    m.p_enc = 2;
    m.coef_std = {0, 0, 1.5, 0.0};  // class pos: x1 -> 1.5, x2 -> 0
    m.coef_orig = m.coef_std;
    m.intercept_std = {0, 0};
    m.intercept_orig = m.intercept_std;
    m.class_absent = {false, false};

    const Table t = sim::logistic_sim_with_noise(60, 2.0, 5);
    const Table features = drop_columns(t, {"y"});
    std::vector<int> truth;
    for (std::size_t i = 0; i < t.n_rows(); ++i) truth.push_back(t.at(i, 2).category());
    const PfiResult r = pfi([&](const Table& q) { return predict_proba_lr(m, q).matrix; },
                            features, truth, PfiMetric::LogLoss, 8, 3);
    CHECK(r.features[1].feature == "x2");
    CHECK(r.features[1].importance == 0.0);
}

TEST_CASE("pfi ranks the signal feature above noise in 95 percent of runs") {
    std::size_t signal_wins = 0;
    for (std::uint64_t run = 0; run < 100; ++run) {
        const Table t = sim::logistic_sim_with_noise(1000, 2.0, 1000 + run);
        LearnerSpec spec;
        spec.lr.max_iter = 200;
        const FittedLearner fitted = fit_learner(spec, t, "y", run);
        const Table features = drop_columns(t, {"y"});
        std::vector<int> truth;
        for (std::size_t i = 0; i < t.n_rows(); ++i) truth.push_back(t.at(i, 2).category());
        const PfiResult r = pfi([&](const Table& q) { return fitted.predict(q); }, features,
                                truth, PfiMetric::LogLoss, 3, run);
        if (std::fabs(r.features[1].importance) < r.features[0].importance) ++signal_wins;
    }
    CHECK(signal_wins >= 95);
}

TEST_CASE("pfi is deterministic given the seed") {
    const Table t = sim::logistic_sim_with_noise(100, 1.0, 2);
    LearnerSpec spec;
    const FittedLearner fitted = fit_learner(spec, t, "y", 0);
    const Table features = drop_columns(t, {"y"});
    std::vector<int> truth;
    for (std::size_t i = 0; i < t.n_rows(); ++i) truth.push_back(t.at(i, 2).category());
    auto predict = [&](const Table& q) { return fitted.predict(q); };
    const PfiResult a = pfi(predict, features, truth, PfiMetric::LogLoss, 4, 11);
    const PfiResult b = pfi(predict, features, truth, PfiMetric::LogLoss, 4, 11);
    for (std::size_t f = 0; f < a.features.size(); ++f) {
        CHECK(a.features[f].importance == b.features[f].importance);
    }
    CHECK_THROWS_AS(pfi(predict, features, truth, PfiMetric::LogLoss, 0, 1), ConfigError);
}

TEST_CASE("aggregation: pooled mean/sd and undefined handling") {
    CHECK(aggregate({{1.0, 1.0, 1.0}}).sd == 0.0);
    const Aggregate two = aggregate({{0.0, 1.0}});
    CHECK(two.mean == doctest::Approx(0.5));
    CHECK(two.sd == doctest::Approx(0.7071).epsilon(1e-4));

    const Aggregate with_gap = aggregate({{1.0, std::nullopt, 3.0}});
    CHECK(with_gap.n == 2);
    CHECK(with_gap.n_undefined == 1);
    CHECK(with_gap.mean == doctest::Approx(2.0));
}

TEST_CASE("aggregation: per-repetition-mean mode") {
    const std::vector<std::pair<int, std::optional<double>>> values = {
        {0, 0.0}, {0, 1.0}, {1, 4.0}, {1, std::nullopt}};
    const Aggregate pooled = aggregate(values, AggregationMode::Pooled);
    CHECK(pooled.mean == doctest::Approx(5.0 / 3.0));
    const Aggregate per_rep = aggregate(values, AggregationMode::PerRepetitionMean);
    // Rep 0 mean 0.5, rep 1 mean 4.0.
    CHECK(per_rep.mean == doctest::Approx(2.25));
    CHECK(per_rep.n == 2);
    CHECK(per_rep.n_undefined == 1);
}
