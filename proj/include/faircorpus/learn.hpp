#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "faircorpus/error.hpp"
#include "faircorpus/rng.hpp"
#include "faircorpus/table.hpp"

namespace faircorpus {

// Dense row-major numeric matrix — all the linear algebra these learners need.
struct Matrix {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(size_t r, size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(size_t r, size_t c) { return data[r * cols + c]; }
    double at(size_t r, size_t c) const { return data[r * cols + c]; }
};

// Numeric design matrix over a table's feature-role columns (bool → 0/1).
// Requires a fully numeric feature block with no missing cells.
inline Matrix feature_matrix(const Table& table) {
    std::vector<const Column*> feats;
    for (const auto& c : table.columns())
        if (c.role == Role::Feature) feats.push_back(&c);
    if (feats.empty()) throw DataError("table has no feature columns");
    Matrix X(table.n_rows(), feats.size());
    for (size_t j = 0; j < feats.size(); ++j) {
        const Column& c = *feats[j];
        if (!is_numeric_dtype(c.dtype) && c.dtype != Dtype::Bool)
            throw DataError("feature column '" + c.name + "' is not numeric");
        for (size_t r = 0; r < c.size(); ++r) {
            if (c.is_missing(r))
                throw DataError("feature column '" + c.name + "' has missing values");
            X.at(r, j) = c.number_at(r);
        }
    }
    return X;
}

// 0/1 view of a boolean column (typically the binarized target).
inline std::vector<uint8_t> label_vector(const Column& col) {
    if (col.dtype != Dtype::Bool)
        throw DataError("column '" + col.name + "' is not a boolean label column");
    std::vector<uint8_t> y;
    y.reserve(col.size());
    for (size_t r = 0; r < col.size(); ++r) {
        if (col.is_missing(r))
            throw DataError("label column '" + col.name + "' has missing values");
        y.push_back(std::get<bool>(col.values[r]) ? 1 : 0);
    }
    return y;
}

namespace detail {

inline double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + e^z) without overflow.
inline double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

inline void check_training_input(const Matrix& X, const std::vector<uint8_t>& y) {
    if (X.rows != y.size()) throw UsageError("feature matrix and labels disagree on row count");
    if (X.rows == 0) throw DataError("cannot fit a model on an empty dataset");
    for (double v : X.data)
        if (!std::isfinite(v)) throw DataError("feature matrix contains non-finite values");
    bool any0 = false, any1 = false;
    for (uint8_t v : y) (v ? any1 : any0) = true;
    if (!any0 || !any1) throw DataError("labels contain a single class; nothing to learn");
}

} // namespace detail

// --- logistic regression -----------------------------------------------------

struct LogisticConfig {
    size_t max_iters = 500;
    double grad_tol = 1e-6;
    double learning_rate = 0.1;
    double l2 = 1e-6; // small ridge keeps collinear one-hot blocks well-posed
};

struct LogisticModel {
    std::vector<double> weights; // per standardized feature
    double intercept = 0.0;
    std::vector<double> means;
    std::vector<double> stddevs; // 1 for zero-variance features (their weight stays 0)
};

// Mean log-loss with an L2 penalty on the weights (not the intercept).
inline double logistic_loss(const Matrix& X, const std::vector<uint8_t>& y,
                            const std::vector<double>& w, double intercept, double l2) {
    if (w.size() != X.cols) throw UsageError("weight count does not match feature count");
    double loss = 0.0;
    for (size_t r = 0; r < X.rows; ++r) {
        double z = intercept;
        for (size_t c = 0; c < X.cols; ++c) z += w[c] * X.at(r, c);
        loss += detail::softplus(z) - (y[r] ? z : 0.0);
    }
    loss /= static_cast<double>(X.rows);
    for (double v : w) loss += 0.5 * l2 * v * v;
    return loss;
}

// Analytic gradient of logistic_loss: (d/dw, d/d intercept).
inline std::pair<std::vector<double>, double> logistic_gradient(const Matrix& X,
                                                                const std::vector<uint8_t>& y,
                                                                const std::vector<double>& w,
                                                                double intercept, double l2) {
    if (w.size() != X.cols) throw UsageError("weight count does not match feature count");
    std::vector<double> dw(X.cols, 0.0);
    double db = 0.0;
    for (size_t r = 0; r < X.rows; ++r) {
        double z = intercept;
        for (size_t c = 0; c < X.cols; ++c) z += w[c] * X.at(r, c);
        const double err = detail::sigmoid(z) - (y[r] ? 1.0 : 0.0);
        for (size_t c = 0; c < X.cols; ++c) dw[c] += err * X.at(r, c);
        db += err;
    }
    const double n = static_cast<double>(X.rows);
    for (size_t c = 0; c < X.cols; ++c) dw[c] = dw[c] / n + l2 * w[c];
    return {std::move(dw), db / n};
}

// Deterministic full-batch gradient descent on internally standardized
// features: fixed iteration budget, step halving whenever a step would
// increase the loss, early stop once the gradient is flat.
inline LogisticModel fit_logistic(const Matrix& X, const std::vector<uint8_t>& y,
                                  const LogisticConfig& config = {}) {
    detail::check_training_input(X, y);

    LogisticModel model;
    model.means.assign(X.cols, 0.0);
    model.stddevs.assign(X.cols, 1.0);
    for (size_t c = 0; c < X.cols; ++c) {
        double mean = 0.0;
        for (size_t r = 0; r < X.rows; ++r) mean += X.at(r, c);
        mean /= static_cast<double>(X.rows);
        double var = 0.0;
        for (size_t r = 0; r < X.rows; ++r) {
            const double d = X.at(r, c) - mean;
            var += d * d;
        }
        var /= static_cast<double>(X.rows);
        model.means[c] = mean;
        model.stddevs[c] = var > 0.0 ? std::sqrt(var) : 1.0;
    }

    Matrix Z(X.rows, X.cols);
    for (size_t r = 0; r < X.rows; ++r)
        for (size_t c = 0; c < X.cols; ++c)
            Z.at(r, c) = (X.at(r, c) - model.means[c]) / model.stddevs[c];

    std::vector<double> w(X.cols, 0.0);
    double b = 0.0;
    double lr = config.learning_rate;
    double loss = logistic_loss(Z, y, w, b, config.l2);
    for (size_t iter = 0; iter < config.max_iters; ++iter) {
        auto [dw, db] = logistic_gradient(Z, y, w, b, config.l2);
        double max_grad = std::abs(db);
        for (double g : dw) max_grad = std::max(max_grad, std::abs(g));
        if (max_grad < config.grad_tol) break;

        std::vector<double> w_next(w.size());
        for (size_t c = 0; c < w.size(); ++c) w_next[c] = w[c] - lr * dw[c];
        const double b_next = b - lr * db;
        const double next_loss = logistic_loss(Z, y, w_next, b_next, config.l2);
        if (next_loss > loss) {
            lr *= 0.5; // overshoot: retry the step at half the rate
            continue;
        }
        w = std::move(w_next);
        b = b_next;
        loss = next_loss;
    }
    model.weights = std::move(w);
    model.intercept = b;
    return model;
}

inline std::vector<double> predict_proba(const LogisticModel& model, const Matrix& X) {
    if (X.cols != model.weights.size())
        throw UsageError("feature count does not match the fitted model");
    std::vector<double> out;
    out.reserve(X.rows);
    for (size_t r = 0; r < X.rows; ++r) {
        double z = model.intercept;
        for (size_t c = 0; c < X.cols; ++c)
            z += model.weights[c] * (X.at(r, c) - model.means[c]) / model.stddevs[c];
        out.push_back(detail::sigmoid(z));
    }
    return out;
}

inline std::vector<uint8_t> predict_labels(const std::vector<double>& probabilities,
                                           double threshold = 0.5) {
    std::vector<uint8_t> out;
    out.reserve(probabilities.size());
    for (double p : probabilities) out.push_back(p >= threshold ? 1 : 0);
    return out;
}

// --- decision tree / random forest -------------------------------------------

struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    double prob = 0.0; // leaf positive-class frequency
    int left = -1;
    int right = -1;
};

struct DecisionTree {
    std::vector<TreeNode> nodes;

    double predict_row(const Matrix& X, size_t r) const {
        int idx = 0;
        while (nodes[idx].feature >= 0)
            idx = X.at(r, static_cast<size_t>(nodes[idx].feature)) <
                          nodes[idx].threshold
                      ? nodes[idx].left
                      : nodes[idx].right;
        return nodes[idx].prob;
    }
};

struct RandomForest {
    std::vector<DecisionTree> trees;
    uint64_t seed = 0;
};

namespace detail {

constexpr size_t kMinLeaf = 2;

inline double gini(size_t pos, size_t n) {
    if (n == 0) return 0.0;
    const double p = static_cast<double>(pos) / static_cast<double>(n);
    return 2.0 * p * (1.0 - p);
}

struct TreeBuilder {
    const Matrix& X;
    const std::vector<uint8_t>& y;
    Rng& rng;
    DecisionTree tree;

    int build(std::vector<size_t>& rows) {
        const size_t n = rows.size();
        size_t pos = 0;
        for (size_t r : rows) pos += y[r] ? 1 : 0;

        const int idx = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back({});
        tree.nodes[idx].prob = static_cast<double>(pos) / static_cast<double>(n);
        if (pos == 0 || pos == n || n < 2 * kMinLeaf) return idx;

        // Candidate features: ⌈√d⌉ sampled without replacement.
        const size_t d = X.cols;
        const size_t k = static_cast<size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
        std::vector<size_t> feats(d);
        std::iota(feats.begin(), feats.end(), size_t{0});
        for (size_t i = 0; i < k; ++i) {
            const size_t j = i + rng.bounded(d - i);
            std::swap(feats[i], feats[j]);
        }

        const double parent = gini(pos, n);
        double best_impurity = parent - 1e-12;
        int best_feature = -1;
        double best_threshold = 0.0;

        std::vector<std::pair<double, uint8_t>> sorted;
        sorted.reserve(n);
        for (size_t fi = 0; fi < k; ++fi) {
            const size_t f = feats[fi];
            sorted.clear();
            for (size_t r : rows) sorted.emplace_back(X.at(r, f), y[r]);
            std::sort(sorted.begin(), sorted.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });

            size_t left_pos = 0;
            for (size_t i = 1; i < n; ++i) {
                left_pos += sorted[i - 1].second ? 1 : 0;
                if (sorted[i].first == sorted[i - 1].first) continue; // no boundary here
                const size_t nl = i, nr = n - i;
                if (nl < kMinLeaf || nr < kMinLeaf) continue;
                const size_t right_pos = pos - left_pos;
                const double impurity = (static_cast<double>(nl) * gini(left_pos, nl) +
                                         static_cast<double>(nr) * gini(right_pos, nr)) /
                                        static_cast<double>(n);
                if (impurity < best_impurity) {
                    best_impurity = impurity;
                    best_feature = static_cast<int>(f);
                    best_threshold = sorted[i - 1].first +
                                     (sorted[i].first - sorted[i - 1].first) / 2.0;
                }
            }
        }
        if (best_feature < 0) return idx;

        std::vector<size_t> left, right;
        for (size_t r : rows) {
            if (X.at(r, static_cast<size_t>(best_feature)) < best_threshold)
                left.push_back(r);
            else
                right.push_back(r);
        }
        if (left.size() < kMinLeaf || right.size() < kMinLeaf) return idx;

        tree.nodes[idx].feature = best_feature;
        tree.nodes[idx].threshold = best_threshold;
        const int l = build(left);
        tree.nodes[idx].left = l;
        const int r = build(right);
        tree.nodes[idx].right = r;
        return idx;
    }
};

} // namespace detail

inline RandomForest fit_random_forest(const Matrix& X, const std::vector<uint8_t>& y,
                                      size_t n_trees = 100, uint64_t seed = 0) {
    detail::check_training_input(X, y);
    if (n_trees == 0) throw UsageError("a forest needs at least one tree");

    RandomForest forest;
    forest.seed = seed;
    forest.trees.reserve(n_trees);
    for (size_t t = 0; t < n_trees; ++t) {
        Rng rng(derive_seed(seed, static_cast<uint64_t>(t)));
        std::vector<size_t> rows(X.rows);
        for (auto& r : rows) r = rng.bounded(X.rows); // bootstrap sample
        detail::TreeBuilder builder{X, y, rng, {}};
        builder.build(rows);
        forest.trees.push_back(std::move(builder.tree));
    }
    return forest;
}

inline std::vector<double> rf_predict_proba(const RandomForest& forest, const Matrix& X) {
    if (forest.trees.empty()) throw UsageError("forest has no trees");
    std::vector<double> out(X.rows, 0.0);
    for (const auto& tree : forest.trees)
        for (size_t r = 0; r < X.rows; ++r) out[r] += tree.predict_row(X, r);
    for (auto& v : out) v /= static_cast<double>(forest.trees.size());
    return out;
}

// --- ROC-AUC ------------------------------------------------------------------

// Mann–Whitney formulation via average ranks; tied scores count one half.
inline double roc_auc(const std::vector<double>& scores, const std::vector<uint8_t>& labels) {
    if (scores.size() != labels.size()) throw UsageError("scores and labels differ in length");
    size_t n_pos = 0, n_neg = 0;
    for (uint8_t l : labels) (l ? n_pos : n_neg) += 1;
    if (n_pos == 0 || n_neg == 0)
        throw DataError("ROC-AUC is undefined with a single class present");

    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] < scores[b]; });

    double pos_rank_sum = 0.0;
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (size_t k = i; k <= j; ++k)
            if (labels[order[k]]) pos_rank_sum += avg_rank;
        i = j + 1;
    }
    const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

} // namespace faircorpus
