#include "tabaug/learners.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace tabaug {

namespace lr_detail {

double Problem::loss_and_grad(const std::vector<double>& theta, std::vector<double>& grad) const {
    const std::size_t stride = p + 1;  // coefficients + intercept per free class
    grad.assign(theta.size(), 0.0);
    double loss = 0.0;
    std::vector<double> eta(k);
    std::vector<double> prob(k);
    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = x.data() + i * p;
        double max_eta = 0.0;  // pivot logit
        for (std::size_t c = 0; c < k; ++c) {
            const double* w = theta.data() + c * stride;
            double e = w[p];  // intercept
            for (std::size_t j = 0; j < p; ++j) e += w[j] * xi[j];
            eta[c] = e;
            max_eta = std::max(max_eta, e);
        }
        double z = std::exp(0.0 - max_eta);  // pivot term
        for (std::size_t c = 0; c < k; ++c) {
            prob[c] = std::exp(eta[c] - max_eta);
            z += prob[c];
        }
        const double lse = max_eta + std::log(z);
        loss += lse - (y[i] >= 0 ? eta[static_cast<std::size_t>(y[i])] : 0.0);
        for (std::size_t c = 0; c < k; ++c) {
            const double resid = prob[c] / z - (y[i] == static_cast<int>(c) ? 1.0 : 0.0);
            double* g = grad.data() + c * stride;
            for (std::size_t j = 0; j < p; ++j) g[j] += resid * xi[j];
            g[p] += resid;
        }
    }
    // Ridge on coefficients only.
    for (std::size_t c = 0; c < k; ++c) {
        const double* w = theta.data() + c * stride;
        double* g = grad.data() + c * stride;
        for (std::size_t j = 0; j < p; ++j) {
            loss += 0.5 * lambda * w[j] * w[j];
            g[j] += lambda * w[j];
        }
    }
    return loss;
}

}  // namespace lr_detail

namespace {

std::vector<EncodedFeature> build_encoding(const Schema& schema, const std::string& target) {
    std::vector<EncodedFeature> enc;
    std::size_t col = 0;
    for (const auto& f : schema.features) {
        if (f.name == target) continue;
        EncodedFeature e;
        e.name = f.name;
        e.first_column = col;
        if (f.kind.is_numeric()) {
            e.numeric = true;
            e.n_columns = 1;
        } else {
            e.numeric = false;
            e.levels = f.kind.levels;
            e.n_columns = f.kind.levels.size() - 1;  // first level is the encoding reference
        }
        col += e.n_columns;
        enc.push_back(std::move(e));
    }
    return enc;
}

double infinity_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

struct LbfgsResult {
    bool converged = false;
    double grad_norm = 0.0;
    int n_iter = 0;
};

// L-BFGS (memory 10) with Armijo backtracking; accepted steps strictly
// decrease the loss, so the iterate sequence is monotone.
LbfgsResult lbfgs_minimize(const lr_detail::Problem& problem, std::vector<double>& theta,
                           int max_iter, double tol) {
    const std::size_t dim = theta.size();
    std::vector<double> grad(dim), new_grad(dim), direction(dim), trial(dim);
    double loss = problem.loss_and_grad(theta, grad);
    if (!std::isfinite(loss)) throw FitError("non-finite loss in logistic regression fit");

    std::deque<std::pair<std::vector<double>, std::vector<double>>> memory;  // (s, y)
    LbfgsResult res;
    auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
        return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
    };
    int stagnant = 0;
    for (int iter = 0; iter < max_iter; ++iter) {
        res.grad_norm = infinity_norm(grad);
        res.n_iter = iter;
        if (res.grad_norm <= tol) {
            res.converged = true;
            return res;
        }
        // Two-loop recursion.
        direction = grad;
        std::vector<double> alpha(memory.size());
        for (std::size_t h = memory.size(); h-- > 0;) {
            const auto& [s, yv] = memory[h];
            const double rho = 1.0 / dot(yv, s);
            alpha[h] = rho * dot(s, direction);
            for (std::size_t j = 0; j < dim; ++j) direction[j] -= alpha[h] * yv[j];
        }
        if (!memory.empty()) {
            const auto& [s, yv] = memory.back();
            const double gamma = dot(s, yv) / dot(yv, yv);
            for (double& d : direction) d *= gamma;
        }
        for (std::size_t h = 0; h < memory.size(); ++h) {
            const auto& [s, yv] = memory[h];
            const double rho = 1.0 / dot(yv, s);
            const double beta = rho * dot(yv, direction);
            for (std::size_t j = 0; j < dim; ++j) direction[j] += s[j] * (alpha[h] - beta);
        }
        for (double& d : direction) d = -d;
        double descent = dot(direction, grad);
        if (!(descent < 0.0)) {  // not a descent direction, fall back to -grad
            for (std::size_t j = 0; j < dim; ++j) direction[j] = -grad[j];
            descent = -dot(grad, grad);
        }
        // Armijo backtracking.
        double step = 1.0;
        double new_loss = 0.0;
        bool accepted = false;
        while (step > 1e-20) {
            for (std::size_t j = 0; j < dim; ++j) trial[j] = theta[j] + step * direction[j];
            new_loss = problem.loss_and_grad(trial, new_grad);
            if (!std::isfinite(new_loss)) throw FitError("non-finite loss in logistic regression fit");
            if (new_loss <= loss + 1e-4 * step * descent) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;  // numerically stuck; report current gradient norm
        // Loss changes at the double-precision floor mean further descent is
        // noise; stop instead of grinding the line search.
        if (loss - new_loss <= 1e-13 * (std::fabs(loss) + 1.0)) {
            if (++stagnant >= 10) {
                theta = trial;
                grad = new_grad;
                break;
            }
        } else {
            stagnant = 0;
        }
        std::vector<double> s(dim), yv(dim);
        for (std::size_t j = 0; j < dim; ++j) {
            s[j] = trial[j] - theta[j];
            yv[j] = new_grad[j] - grad[j];
        }
        if (dot(s, yv) > 1e-12) {
            memory.emplace_back(std::move(s), std::move(yv));
            if (memory.size() > 10) memory.pop_front();
        }
        theta = trial;
        grad = new_grad;
        loss = new_loss;
    }
    res.grad_norm = infinity_norm(grad);
    res.converged = res.grad_norm <= tol;
    return res;
}

}  // namespace

FittedLR fit_multinomial_lr(const Table& table, const std::string& target, const LrParams& params,
                            std::uint64_t /*seed*/) {
    if (!is_complete(table)) throw FitError("fit_multinomial_lr requires a complete table");
    const std::size_t tj = table.schema().require(target);
    const auto& tkind = table.schema().features[tj].kind;
    if (!tkind.is_categorical()) throw FitError("target '" + target + "' must be categorical");
    const std::size_t n = table.n_rows();
    const std::size_t n_classes = tkind.levels.size();

    std::vector<int> labels(n);
    std::vector<bool> present(n_classes, false);
    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = table.at(i, tj).category();
        present[static_cast<std::size_t>(labels[i])] = true;
    }
    const std::size_t n_present =
        static_cast<std::size_t>(std::count(present.begin(), present.end(), true));
    if (n_present < 2) throw FitError("logistic regression needs at least 2 observed classes");

    FittedLR model;
    model.target_name = target;
    model.classes = tkind.levels;
    model.lambda = params.lambda;
    model.reference_class = params.reference_class.value_or(tkind.levels.front());
    {
        const int r = tkind.level_index(model.reference_class);
        if (r < 0) throw ConfigError("reference class '" + model.reference_class + "' is not a target level");
        // Pivot: the reference when it occurs in the data, else the first
        // present class (the reference is then structurally absent).
        if (present[static_cast<std::size_t>(r)]) {
            model.pivot = static_cast<std::size_t>(r);
        } else {
            model.pivot = static_cast<std::size_t>(
                std::find(present.begin(), present.end(), true) - present.begin());
        }
    }
    model.class_absent.assign(n_classes, false);
    for (std::size_t c = 0; c < n_classes; ++c) model.class_absent[c] = !present[c];

    model.encoding = build_encoding(table.schema(), target);
    model.p_enc = 0;
    for (const auto& e : model.encoding) model.p_enc += e.n_columns;

    // Standardization parameters, then the design matrix.
    for (auto& e : model.encoding) {
        if (!e.numeric) continue;
        const ColumnSummary s = column_stats(table, e.name);
        e.mean = s.mean;
        e.sd = s.sd > 0.0 ? s.sd : 1.0;
    }
    // Free classes: present classes except the pivot, in class order.
    std::vector<int> free_index(n_classes, -1);
    std::vector<std::size_t> free_classes;
    for (std::size_t c = 0; c < n_classes; ++c) {
        if (present[c] && c != model.pivot) {
            free_index[c] = static_cast<int>(free_classes.size());
            free_classes.push_back(c);
        }
    }

    lr_detail::Problem problem;
    problem.n = n;
    problem.p = model.p_enc;
    problem.k = free_classes.size();
    problem.lambda = params.lambda;
    problem.x.assign(n * model.p_enc, 0.0);
    problem.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        problem.y[i] = free_index[static_cast<std::size_t>(labels[i])];
        double* row = problem.x.data() + i * model.p_enc;
        for (const auto& e : model.encoding) {
            const std::size_t j = table.schema().require(e.name);
            const Cell& c = table.at(i, j);
            if (e.numeric) {
                row[e.first_column] = (c.number() - e.mean) / e.sd;
            } else {
                const int l = c.category();
                if (l > 0) row[e.first_column + static_cast<std::size_t>(l) - 1] = 1.0;
            }
        }
    }

    std::vector<double> theta(problem.k * (model.p_enc + 1), 0.0);
    const LbfgsResult opt = lbfgs_minimize(problem, theta, params.max_iter, params.tol);
    model.converged = opt.converged;
    model.final_grad_norm = opt.grad_norm;
    model.n_iter = opt.n_iter;

    // Unpack into K x p_enc with zero pivot/absent rows, then back-transform.
    model.coef_std.assign(n_classes * model.p_enc, 0.0);
    model.intercept_std.assign(n_classes, 0.0);
    const std::size_t stride = model.p_enc + 1;
    for (std::size_t f = 0; f < free_classes.size(); ++f) {
        const std::size_t c = free_classes[f];
        for (std::size_t j = 0; j < model.p_enc; ++j) {
            model.coef_std[c * model.p_enc + j] = theta[f * stride + j];
        }
        model.intercept_std[c] = theta[f * stride + model.p_enc];
    }
    model.coef_orig = model.coef_std;
    model.intercept_orig = model.intercept_std;
    for (std::size_t c = 0; c < n_classes; ++c) {
        double shift = 0.0;
        for (const auto& e : model.encoding) {
            if (!e.numeric) continue;
            const double w = model.coef_std[c * model.p_enc + e.first_column];
            model.coef_orig[c * model.p_enc + e.first_column] = w / e.sd;
            shift += w * e.mean / e.sd;
        }
        model.intercept_orig[c] = model.intercept_std[c] - shift;
    }
    return model;
}

LrPrediction predict_proba_lr(const FittedLR& model, const Table& table) {
    const std::size_t n = table.n_rows();
    const std::size_t k = model.classes.size();
    LrPrediction out;
    out.matrix.classes = model.classes;
    out.matrix.n_rows = n;
    out.matrix.probs.assign(n * k, 0.0);

    // Resolve encoded features against the input schema once.
    std::vector<std::size_t> col_of(model.encoding.size());
    for (std::size_t e = 0; e < model.encoding.size(); ++e) {
        col_of[e] = table.schema().require(model.encoding[e].name);
        const bool numeric_in = table.schema().features[col_of[e]].kind.is_numeric();
        if (numeric_in != model.encoding[e].numeric) {
            throw SchemaError("feature '" + model.encoding[e].name + "' kind differs from fit");
        }
    }

    std::vector<double> row(model.p_enc);
    std::vector<double> eta(k);
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(row.begin(), row.end(), 0.0);
        for (std::size_t e = 0; e < model.encoding.size(); ++e) {
            const auto& enc = model.encoding[e];
            const Cell& c = table.at(i, col_of[e]);
            if (c.is_missing()) {
                throw Error("prediction requires complete rows (feature '" + enc.name + "')");
            }
            if (enc.numeric) {
                row[enc.first_column] = (c.number() - enc.mean) / enc.sd;
            } else {
                const std::string& level = table.level_of(i, col_of[e]);
                int l = -1;
                for (std::size_t q = 0; q < enc.levels.size(); ++q) {
                    if (enc.levels[q] == level) {
                        l = static_cast<int>(q);
                        break;
                    }
                }
                if (l < 0) {
                    ++out.unseen_level_count;  // mapped to the encoding reference
                    l = 0;
                }
                if (l > 0) row[enc.first_column + static_cast<std::size_t>(l) - 1] = 1.0;
            }
        }
        double max_eta = -INFINITY;
        for (std::size_t c = 0; c < k; ++c) {
            if (model.class_absent[c]) {
                eta[c] = -INFINITY;
                continue;
            }
            double v = model.intercept_std[c];
            for (std::size_t j = 0; j < model.p_enc; ++j) {
                v += model.coef_std[c * model.p_enc + j] * row[j];
            }
            eta[c] = v;
            max_eta = std::max(max_eta, v);
        }
        double z = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            if (eta[c] == -INFINITY) continue;
            z += std::exp(eta[c] - max_eta);
        }
        for (std::size_t c = 0; c < k; ++c) {
            out.matrix.probs[i * k + c] = eta[c] == -INFINITY ? 0.0 : std::exp(eta[c] - max_eta) / z;
        }
    }
    return out;
}

std::vector<OddsRatioRow> odds_ratios(const FittedLR& model) {
    const int r = [&] {
        for (std::size_t c = 0; c < model.classes.size(); ++c) {
            if (model.classes[c] == model.reference_class) return static_cast<int>(c);
        }
        return -1;
    }();
    if (r < 0 || model.class_absent[static_cast<std::size_t>(r)]) {
        throw FitError("odds ratios need the reference class present in the training data");
    }
    std::vector<OddsRatioRow> rows;
    for (std::size_t c = 0; c < model.classes.size(); ++c) {
        if (static_cast<int>(c) == r || model.class_absent[c]) continue;
        for (const auto& e : model.encoding) {
            for (std::size_t q = 0; q < e.n_columns; ++q) {
                OddsRatioRow row;
                row.class_name = model.classes[c];
                row.feature = e.name;
                if (!e.numeric) row.level = e.levels[q + 1];
                row.coefficient = model.coef_orig[c * model.p_enc + e.first_column + q];
                row.odds_ratio = std::exp(row.coefficient);
                rows.push_back(std::move(row));
            }
        }
    }
    return rows;
}

PredictionMatrix FittedLearner::predict(const Table& features) const {
    if (kind == LearnerSpec::Kind::MultinomialLR) {
        return predict_proba_lr(*lr, features).matrix;
    }
    return predict_proba(*forest, features);
}

FittedLearner fit_learner(const LearnerSpec& spec, const Table& table, const std::string& target,
                          std::uint64_t seed) {
    FittedLearner out;
    out.kind = spec.kind;
    switch (spec.kind) {
        case LearnerSpec::Kind::MultinomialLR:
            out.lr = fit_multinomial_lr(table, target, spec.lr, seed);
            out.classes = out.lr->classes;
            break;
        case LearnerSpec::Kind::RandomForest:
            out.forest = fit_classifier(table, target, spec.forest, seed);
            out.classes = out.forest->classes;
            out.degenerate_single_class = out.forest->single_class_warning;
            break;
    }
    return out;
}

}  // namespace tabaug
