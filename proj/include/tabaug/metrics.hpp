#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tabaug/error.hpp"

namespace tabaug {

// n x K class-probability matrix. Class order is fixed by the target's
// schema level order everywhere in the library.
struct PredictionMatrix {
    std::vector<std::string> classes;
    std::vector<double> probs;  // row-major, n * classes.size()
    std::size_t n_rows = 0;

    double at(std::size_t row, std::size_t k) const { return probs[row * classes.size() + k]; }
    // argmax with ties toward the earlier class.
    std::size_t predicted_class(std::size_t row) const;
};

// truth holds class indices aligned with pred.classes.
double accuracy(const PredictionMatrix& pred, const std::vector<int>& truth);

// Per-class recall. Classes with zero support are nullopt (undefined).
std::vector<std::optional<double>> class_wise_accuracy(const PredictionMatrix& pred,
                                                       const std::vector<int>& truth);

struct AucResult {
    std::optional<double> value;  // nullopt when < 2 classes have support
    std::size_t n_classes_used = 0;
    std::size_t n_classes_skipped = 0;  // support but no negatives, or vice versa
};

// Macro one-vs-rest AUC via the Mann-Whitney rank statistic (ties count 1/2).
AucResult auc_macro_ovr(const PredictionMatrix& pred, const std::vector<int>& truth);

// Multiclass Brier: mean over rows of sum_k (p_k - 1{truth=k})^2. Range [0, 2].
double brier_multiclass(const PredictionMatrix& pred, const std::vector<int>& truth);

// Mean of -ln p_truth with probabilities clipped to [1e-15, 1 - 1e-15].
double log_loss(const PredictionMatrix& pred, const std::vector<int>& truth);

}  // namespace tabaug
