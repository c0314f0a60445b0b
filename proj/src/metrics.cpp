#include "tabaug/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace tabaug {

std::size_t PredictionMatrix::predicted_class(std::size_t row) const {
    const std::size_t k = classes.size();
    std::size_t best = 0;
    for (std::size_t c = 1; c < k; ++c) {
        if (probs[row * k + c] > probs[row * k + best]) best = c;
    }
    return best;
}

namespace {

void check_lengths(const PredictionMatrix& pred, const std::vector<int>& truth) {
    if (pred.n_rows != truth.size()) throw Error("prediction/truth length mismatch");
}

}  // namespace

double accuracy(const PredictionMatrix& pred, const std::vector<int>& truth) {
    check_lengths(pred, truth);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < pred.n_rows; ++i) {
        if (static_cast<int>(pred.predicted_class(i)) == truth[i]) ++correct;
    }
    return pred.n_rows == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(pred.n_rows);
}

std::vector<std::optional<double>> class_wise_accuracy(const PredictionMatrix& pred,
                                                       const std::vector<int>& truth) {
    check_lengths(pred, truth);
    const std::size_t k = pred.classes.size();
    std::vector<std::size_t> support(k, 0), correct(k, 0);
    for (std::size_t i = 0; i < pred.n_rows; ++i) {
        const auto c = static_cast<std::size_t>(truth[i]);
        ++support[c];
        if (pred.predicted_class(i) == c) ++correct[c];
    }
    std::vector<std::optional<double>> out(k);
    for (std::size_t c = 0; c < k; ++c) {
        if (support[c] > 0) {
            out[c] = static_cast<double>(correct[c]) / static_cast<double>(support[c]);
        }
    }
    return out;
}

AucResult auc_macro_ovr(const PredictionMatrix& pred, const std::vector<int>& truth) {
    check_lengths(pred, truth);
    const std::size_t k = pred.classes.size();
    const std::size_t n = pred.n_rows;
    std::vector<std::size_t> support(k, 0);
    for (int t : truth) ++support[static_cast<std::size_t>(t)];
    std::size_t supported = 0;
    for (std::size_t c = 0; c < k; ++c) {
        if (support[c] > 0) ++supported;
    }
    AucResult res;
    if (supported < 2) return res;

    double sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        const std::size_t pos = support[c];
        const std::size_t neg = n - pos;
        if (pos == 0) continue;  // unsupported class, not counted as skipped
        if (neg == 0) {
            ++res.n_classes_skipped;
            continue;
        }
        // Mann-Whitney via average ranks of the class-c score column.
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return pred.at(a, c) < pred.at(b, c);
        });
        double rank_sum_pos = 0.0;
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && pred.at(idx[j + 1], c) == pred.at(idx[i], c)) ++j;
            const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
            for (std::size_t t = i; t <= j; ++t) {
                if (truth[idx[t]] == static_cast<int>(c)) rank_sum_pos += avg_rank;
            }
            i = j + 1;
        }
        const double u = rank_sum_pos - static_cast<double>(pos) * (static_cast<double>(pos) + 1.0) / 2.0;
        sum += u / (static_cast<double>(pos) * static_cast<double>(neg));
        ++res.n_classes_used;
    }
    if (res.n_classes_used == 0) return res;
    res.value = sum / static_cast<double>(res.n_classes_used);
    return res;
}

double brier_multiclass(const PredictionMatrix& pred, const std::vector<int>& truth) {
    check_lengths(pred, truth);
    const std::size_t k = pred.classes.size();
    double total = 0.0;
    for (std::size_t i = 0; i < pred.n_rows; ++i) {
        for (std::size_t c = 0; c < k; ++c) {
            const double target = truth[i] == static_cast<int>(c) ? 1.0 : 0.0;
            const double d = pred.at(i, c) - target;
            total += d * d;
        }
    }
    return total / static_cast<double>(pred.n_rows);
}

double log_loss(const PredictionMatrix& pred, const std::vector<int>& truth) {
    check_lengths(pred, truth);
    double total = 0.0;
    for (std::size_t i = 0; i < pred.n_rows; ++i) {
        const double p = std::clamp(pred.at(i, static_cast<std::size_t>(truth[i])), 1e-15, 1.0 - 1e-15);
        total -= std::log(p);
    }
    return total / static_cast<double>(pred.n_rows);
}

}  // namespace tabaug
