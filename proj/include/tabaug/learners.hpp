#pragma once

#include <functional>

#include "tabaug/forest.hpp"
#include "tabaug/metrics.hpp"
#include "tabaug/table.hpp"

namespace tabaug {

struct LrParams {
    double lambda = 1e-3;  // ridge strength; intercepts unpenalized
    int max_iter = 2000;
    double tol = 1e-4;  // gradient infinity-norm
    std::optional<std::string> reference_class;  // default: first target level
};

struct LearnerSpec {
    enum class Kind { MultinomialLR, RandomForest };
    Kind kind = Kind::MultinomialLR;
    LrParams lr;
    ForestParams forest;
};

// One encoded block per input feature: a standardized numeric column, or a
// one-hot block over the non-reference levels (reference = first fit level).
struct EncodedFeature {
    std::string name;
    bool numeric = true;
    double mean = 0.0, sd = 1.0;      // numeric standardization (sd floored at 1 when 0)
    std::vector<std::string> levels;  // categorical fit levels
    std::size_t first_column = 0;
    std::size_t n_columns = 0;
};

struct FittedLR {
    std::string target_name;
    std::vector<std::string> classes;  // target level order
    std::string reference_class;
    std::size_t pivot = 0;  // class whose logit is pinned to 0 (reference when present)
    std::vector<EncodedFeature> encoding;
    std::size_t p_enc = 0;
    // K x p_enc coefficient matrices plus K intercepts; the pivot row is
    // zero, absent classes are flagged and predict probability exactly 0.
    std::vector<double> coef_std, coef_orig;
    std::vector<double> intercept_std, intercept_orig;
    std::vector<bool> class_absent;
    double lambda = 0.0;
    bool converged = false;
    double final_grad_norm = 0.0;
    int n_iter = 0;
};

// Penalized maximum likelihood: negative multinomial log-likelihood plus
// (lambda/2)*||coef||^2 over standardized features, minimized by L-BFGS with
// Armijo backtracking (monotone descent, deterministic). Coefficients are
// back-transformed to the original scale for reporting.
FittedLR fit_multinomial_lr(const Table& table, const std::string& target, const LrParams& params,
                            std::uint64_t seed);

struct LrPrediction {
    PredictionMatrix matrix;
    std::size_t unseen_level_count = 0;  // unseen levels mapped to the encoding reference
};

LrPrediction predict_proba_lr(const FittedLR& model, const Table& table);

struct OddsRatioRow {
    std::string class_name;  // non-reference class
    std::string feature;
    std::string level;  // one-hot level, empty for numeric
    double coefficient = 0.0;  // original scale
    double odds_ratio = 1.0;
};

// exp(original-scale coefficient) per (non-reference class, encoded column);
// intercepts excluded; categorical rows are relative to the feature's
// encoding reference level. Requires the reference class seen at fit.
std::vector<OddsRatioRow> odds_ratios(const FittedLR& model);

// Uniform fit/predict dispatch so evaluation code is learner-agnostic.
struct FittedLearner {
    LearnerSpec::Kind kind = LearnerSpec::Kind::MultinomialLR;
    std::optional<FittedLR> lr;
    std::optional<Forest> forest;
    std::vector<std::string> classes;
    // Warnings accumulated at fit/predict time.
    bool degenerate_single_class = false;

    PredictionMatrix predict(const Table& features) const;
};

FittedLearner fit_learner(const LearnerSpec& spec, const Table& table, const std::string& target,
                          std::uint64_t seed);

namespace lr_detail {

// The optimization problem behind fit_multinomial_lr, exposed so tests can
// check the analytic gradient against finite differences.
struct Problem {
    std::size_t n = 0, p = 0, k = 0;  // rows, encoded columns, free classes (pivot excluded)
    std::vector<double> x;            // n x p standardized design
    std::vector<int> y;               // labels re-indexed over free classes; -1 = pivot class
    double lambda = 0.0;
    // theta layout: k blocks of (p coefficients + 1 intercept).
    double loss_and_grad(const std::vector<double>& theta, std::vector<double>& grad) const;
};

}  // namespace lr_detail

}  // namespace tabaug
