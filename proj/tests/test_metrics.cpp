#include <doctest.h>

#include <cmath>

#include "tabaug/metrics.hpp"
#include "tabaug/rng.hpp"

using namespace tabaug;

namespace {

PredictionMatrix pm_from(const std::vector<std::string>& classes, std::vector<double> probs) {
    PredictionMatrix pm;
    pm.classes = classes;
    pm.n_rows = probs.size() / classes.size();
    pm.probs = std::move(probs);
    return pm;
}

}  // namespace

TEST_CASE("accuracy and class-wise accuracy fixture") {
    // preds [a,b,a] vs truth [a,b,b]
    const PredictionMatrix pm = pm_from({"a", "b"}, {0.9, 0.1, 0.2, 0.8, 0.7, 0.3});
    const std::vector<int> truth = {0, 1, 1};
    CHECK(accuracy(pm, truth) == doctest::Approx(2.0 / 3.0));
    const auto cw = class_wise_accuracy(pm, truth);
    CHECK(*cw[0] == doctest::Approx(1.0));
    CHECK(*cw[1] == doctest::Approx(0.5));
    CHECK_THROWS_AS(accuracy(pm, {0}), Error);
}

TEST_CASE("all-correct predictions score one everywhere") {
    const PredictionMatrix pm = pm_from({"a", "b"}, {1, 0, 0, 1});
    const std::vector<int> truth = {0, 1};
    CHECK(accuracy(pm, truth) == 1.0);
    for (const auto& v : class_wise_accuracy(pm, truth)) CHECK(*v == 1.0);
}

TEST_CASE("zero-support class is undefined, not zero") {
    const PredictionMatrix pm = pm_from({"a", "b", "c"}, {1, 0, 0, 1, 0, 0});
    const std::vector<int> truth = {0, 0};
    const auto cw = class_wise_accuracy(pm, truth);
    CHECK(cw[0].has_value());
    CHECK(!cw[1].has_value());
    CHECK(!cw[2].has_value());
}

TEST_CASE("argmax ties break toward the earlier class") {
    const PredictionMatrix pm = pm_from({"a", "b"}, {0.5, 0.5});
    CHECK(pm.predicted_class(0) == 0);
}

TEST_CASE("accuracy equals support-weighted class-wise accuracy") {
    rng::Rng rng(12);
    const std::vector<std::string> classes = {"a", "b", "c", "d"};
    for (int rep = 0; rep < 5; ++rep) {
        const std::size_t n = 50 + rng.uniform_int(50);
        std::vector<double> probs;
        std::vector<int> truth;
        for (std::size_t i = 0; i < n; ++i) {
            double total = 0.0;
            std::vector<double> row(4);
            for (auto& v : row) {
                v = rng.uniform() + 1e-3;
                total += v;
            }
            for (auto& v : row) probs.push_back(v / total);
            truth.push_back(static_cast<int>(rng.uniform_int(4)));
        }
        const PredictionMatrix pm = pm_from(classes, std::move(probs));
        const auto cw = class_wise_accuracy(pm, truth);
        std::vector<std::size_t> support(4, 0);
        for (int t : truth) ++support[static_cast<std::size_t>(t)];
        double weighted = 0.0;
        for (std::size_t c = 0; c < 4; ++c) {
            if (cw[c]) weighted += *cw[c] * static_cast<double>(support[c]);
        }
        CHECK(accuracy(pm, truth) == doctest::Approx(weighted / static_cast<double>(n)).epsilon(1e-12));
    }
}

TEST_CASE("auc: perfect ranking and the hand Mann-Whitney fixture") {
    const PredictionMatrix perfect =
        pm_from({"neg", "pos"}, {0.9, 0.1, 0.8, 0.2, 0.3, 0.7, 0.2, 0.8});
    CHECK(*auc_macro_ovr(perfect, {0, 0, 1, 1}).value == doctest::Approx(1.0));

    // Scores (0.9, 0.8, 0.8, 0.1) for the positive class, labels (1,1,0,0):
    // U = 3.5 of 4 pairs -> AUC 0.875 (per-class, symmetric for 2 classes).
    const PredictionMatrix fixture =
        pm_from({"neg", "pos"}, {0.1, 0.9, 0.2, 0.8, 0.2, 0.8, 0.9, 0.1});
    const AucResult r = auc_macro_ovr(fixture, {1, 1, 0, 0});
    CHECK(*r.value == doctest::Approx(0.875).epsilon(1e-9));
    CHECK(r.n_classes_used == 2);
}

TEST_CASE("auc of label-independent scores is near a half") {
    rng::Rng rng(77);
    std::vector<double> probs;
    std::vector<int> truth;
    for (int i = 0; i < 2000; ++i) {
        const double p = rng.uniform();
        probs.push_back(1 - p);
        probs.push_back(p);
        truth.push_back(static_cast<int>(rng.uniform_int(2)));
    }
    const PredictionMatrix pm = pm_from({"a", "b"}, std::move(probs));
    CHECK(*auc_macro_ovr(pm, truth).value == doctest::Approx(0.5).epsilon(0.08));
    CHECK(std::fabs(*auc_macro_ovr(pm, truth).value - 0.5) < 0.04);
}

TEST_CASE("auc undefined with fewer than two supported classes") {
    const PredictionMatrix pm = pm_from({"a", "b"}, {0.6, 0.4, 0.3, 0.7});
    const AucResult r = auc_macro_ovr(pm, {0, 0});
    CHECK(!r.value.has_value());
}

TEST_CASE("auc is invariant under monotone score transforms") {
    rng::Rng rng(31);
    std::vector<double> probs;
    std::vector<int> truth;
    for (int i = 0; i < 60; ++i) {
        const double p = rng.uniform();
        probs.push_back(1 - p);
        probs.push_back(p);
        truth.push_back(rng.uniform() < p ? 1 : 0);
    }
    const PredictionMatrix pm = pm_from({"a", "b"}, probs);
    std::vector<double> warped(probs.size());
    // Strictly monotone per class column: cube one, exponentiate the other.
    for (std::size_t i = 0; i < probs.size(); i += 2) {
        warped[i] = std::exp(3.0 * probs[i]);
        warped[i + 1] = probs[i + 1] * probs[i + 1] * probs[i + 1];
    }
    const PredictionMatrix wm = pm_from({"a", "b"}, std::move(warped));
    CHECK(*auc_macro_ovr(pm, truth).value ==
          doctest::Approx(*auc_macro_ovr(wm, truth).value).epsilon(1e-12));
}

TEST_CASE("brier and log loss fixtures") {
    // Perfect one-hot predictions.
    const PredictionMatrix perfect = pm_from({"a", "b"}, {1, 0, 0, 1});
    CHECK(brier_multiclass(perfect, {0, 1}) == 0.0);
    CHECK(log_loss(perfect, {0, 1}) <= 1e-14);

    // Uniform 4-class prediction.
    const PredictionMatrix uniform =
        pm_from({"a", "b", "c", "d"}, {0.25, 0.25, 0.25, 0.25, 0.25, 0.25, 0.25, 0.25});
    CHECK(log_loss(uniform, {0, 3}) == doctest::Approx(std::log(4.0)).epsilon(1e-9));
    CHECK(brier_multiclass(uniform, {0, 3}) == doctest::Approx(0.75).epsilon(1e-9));

    // Worst-case one-hot-wrong 2-class prediction.
    const PredictionMatrix wrong = pm_from({"a", "b"}, {1, 0});
    CHECK(brier_multiclass(wrong, {1}) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("constant predictors are optimized by empirical class frequencies") {
    // Grid search over constant 2-class predictors on a small fixture.
    const std::vector<int> truth = {0, 0, 0, 1, 1};
    const double freq = 3.0 / 5.0;
    auto constant_pm = [&](double p) {
        std::vector<double> probs;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            probs.push_back(p);
            probs.push_back(1 - p);
        }
        return pm_from({"a", "b"}, std::move(probs));
    };
    const double best_ll = log_loss(constant_pm(freq), truth);
    const double best_br = brier_multiclass(constant_pm(freq), truth);
    for (double p = 0.02; p < 1.0; p += 0.02) {
        CHECK(log_loss(constant_pm(p), truth) >= best_ll - 1e-12);
        CHECK(brier_multiclass(constant_pm(p), truth) >= best_br - 1e-12);
    }
}
