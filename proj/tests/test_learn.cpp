#include <catch2/catch_amalgamated.hpp>

#include <faircorpus/learn.hpp>

#include "support/testgen.hpp"

#include <cmath>

using namespace faircorpus;

namespace {

struct RandomProblem {
    Matrix X;
    std::vector<uint8_t> y;
};

RandomProblem random_problem(Rng& rng, size_t rows, size_t cols) {
    RandomProblem p;
    p.X = Matrix(rows, cols);
    for (auto& v : p.X.data) v = rng.normal();
    p.y.resize(rows);
    bool any0 = false, any1 = false;
    for (auto& l : p.y) {
        l = rng.bounded(2) ? 1 : 0;
        (l ? any1 : any0) = true;
    }
    if (!any0) p.y[0] = 0;
    if (!any1) p.y[1] = 1;
    return p;
}

} // namespace

TEST_CASE("logistic loss at the origin is ln 2") {
    Rng rng(3);
    auto p = random_problem(rng, 40, 3);
    std::vector<double> w(3, 0.0);
    REQUIRE_THAT(logistic_loss(p.X, p.y, w, 0.0, 0.0),
                 Catch::Matchers::WithinAbs(std::log(2.0), 1e-12));
}

TEST_CASE("analytic gradient matches central finite differences") {
    Rng rng(101);
    const double h = 1e-6;
    for (int trial = 0; trial < 50; ++trial) {
        const size_t rows = 5 + rng.bounded(30);
        const size_t cols = 1 + rng.bounded(5);
        auto p = random_problem(rng, rows, cols);
        std::vector<double> w(cols);
        for (auto& v : w) v = rng.normal() * 0.5;
        const double b = rng.normal() * 0.5;
        const double l2 = rng.uniform() * 0.1;

        const auto [dw, db] = logistic_gradient(p.X, p.y, w, b, l2);

        auto check = [&](double analytic, double plus, double minus) {
            const double fd = (plus - minus) / (2.0 * h);
            const double scale = std::max({std::abs(analytic), std::abs(fd), 1e-3});
            CAPTURE(trial, analytic, fd);
            REQUIRE(std::abs(analytic - fd) / scale < 1e-4);
        };
        for (size_t j = 0; j < cols; ++j) {
            std::vector<double> wp = w, wm = w;
            wp[j] += h;
            wm[j] -= h;
            check(dw[j], logistic_loss(p.X, p.y, wp, b, l2), logistic_loss(p.X, p.y, wm, b, l2));
        }
        check(db, logistic_loss(p.X, p.y, w, b + h, l2), logistic_loss(p.X, p.y, w, b - h, l2));
    }
}

TEST_CASE("gradient descent separates separable data") {
    Rng rng(7);
    const size_t n = 120;
    Matrix X(n, 2);
    std::vector<uint8_t> y(n);
    for (size_t r = 0; r < n; ++r) {
        const bool pos = r % 2 == 0;
        X.at(r, 0) = (pos ? 2.0 : -2.0) + rng.normal() * 0.3;
        X.at(r, 1) = rng.normal(); // noise dimension
        y[r] = pos ? 1 : 0;
    }
    const LogisticModel model = fit_logistic(X, y);
    const auto proba = predict_proba(model, X);
    const auto labels = predict_labels(proba);
    size_t correct = 0;
    for (size_t r = 0; r < n; ++r) correct += labels[r] == y[r];
    REQUIRE(correct == n);
    for (double pr : proba) {
        REQUIRE(pr > 0.0);
        REQUIRE(pr < 1.0);
    }
    REQUIRE(roc_auc(proba, y) == 1.0);
}

TEST_CASE("constant features get zero weight and unit scale") {
    Matrix X(10, 2);
    std::vector<uint8_t> y(10);
    for (size_t r = 0; r < 10; ++r) {
        X.at(r, 0) = r < 5 ? -1.0 : 1.0;
        X.at(r, 1) = 3.25; // constant
        y[r] = r < 5 ? 0 : 1;
    }
    const LogisticModel model = fit_logistic(X, y);
    REQUIRE(model.stddevs[1] == 1.0);
    REQUIRE(model.weights[1] == 0.0);
    REQUIRE(model.weights[0] > 0.0);
}

TEST_CASE("training input validation") {
    Matrix X(4, 1);
    std::vector<uint8_t> y = {0, 1, 0}; // wrong length
    REQUIRE_THROWS_AS(fit_logistic(X, y), UsageError);

    Matrix empty(0, 1);
    REQUIRE_THROWS_AS(fit_logistic(empty, {}), DataError);

    std::vector<uint8_t> ones(4, 1);
    REQUIRE_THROWS_AS(fit_logistic(X, ones), DataError);

    Matrix bad(2, 1);
    bad.at(0, 0) = std::numeric_limits<double>::quiet_NaN();
    std::vector<uint8_t> y2 = {0, 1};
    REQUIRE_THROWS_AS(fit_logistic(bad, y2), DataError);

    LogisticModel m;
    m.weights = {1.0};
    m.means = {0.0};
    m.stddevs = {1.0};
    Matrix wide(2, 3);
    REQUIRE_THROWS_AS(predict_proba(m, wide), UsageError);
}

TEST_CASE("ROC-AUC agrees with pairwise counting") {
    Rng rng(55);
    for (int trial = 0; trial < 1000; ++trial) {
        const size_t n = 2 + rng.bounded(38);
        std::vector<double> scores(n);
        std::vector<uint8_t> labels(n);
        bool any0 = false, any1 = false;
        for (size_t i = 0; i < n; ++i) {
            // Coarse quantization produces plenty of score ties.
            scores[i] = static_cast<double>(rng.bounded(8)) / 4.0;
            labels[i] = rng.bounded(2) ? 1 : 0;
            (labels[i] ? any1 : any0) = true;
        }
        if (!any0) labels[0] = 0;
        if (!any1) labels[n - 1] = 1;
        CAPTURE(trial, n);
        REQUIRE_THAT(roc_auc(scores, labels),
                     Catch::Matchers::WithinAbs(testgen::auc_oracle(scores, labels), 1e-12));
    }
}

TEST_CASE("ROC-AUC reference points") {
    REQUIRE(roc_auc({0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1}) == 1.0);
    REQUIRE(roc_auc({0.9, 0.8, 0.2, 0.1}, {0, 0, 1, 1}) == 0.0);
    REQUIRE(roc_auc({0.5, 0.5, 0.5, 0.5}, {0, 1, 0, 1}) == 0.5);
    REQUIRE_THROWS_AS(roc_auc({0.1, 0.2}, {1, 1}), DataError);
    REQUIRE_THROWS_AS(roc_auc({0.1}, {1, 0}), UsageError);
}

TEST_CASE("random forest is deterministic per seed") {
    Rng rng(909);
    auto p = random_problem(rng, 200, 5);
    Matrix eval(50, 5);
    for (auto& v : eval.data) v = rng.normal();

    const RandomForest a = fit_random_forest(p.X, p.y, 25, 42);
    const RandomForest b = fit_random_forest(p.X, p.y, 25, 42);
    REQUIRE(rf_predict_proba(a, eval) == rf_predict_proba(b, eval));

    const RandomForest c = fit_random_forest(p.X, p.y, 25, 43);
    REQUIRE(rf_predict_proba(a, eval) != rf_predict_proba(c, eval));
}

TEST_CASE("random forest recovers a threshold rule") {
    Rng rng(11);
    const size_t n_train = 400, n_test = 200;
    Matrix X(n_train, 3), T(n_test, 3);
    std::vector<uint8_t> y(n_train), yt(n_test);
    for (size_t r = 0; r < n_train; ++r) {
        for (size_t c = 0; c < 3; ++c) X.at(r, c) = rng.normal();
        y[r] = X.at(r, 0) > 0.0 ? 1 : 0;
    }
    for (size_t r = 0; r < n_test; ++r) {
        for (size_t c = 0; c < 3; ++c) T.at(r, c) = rng.normal();
        yt[r] = T.at(r, 0) > 0.0 ? 1 : 0;
    }
    const RandomForest forest = fit_random_forest(X, y, 60, 1);
    const auto proba = rf_predict_proba(forest, T);
    size_t correct = 0;
    for (size_t r = 0; r < n_test; ++r) correct += (proba[r] >= 0.5 ? 1 : 0) == yt[r];
    REQUIRE(static_cast<double>(correct) / static_cast<double>(n_test) >= 0.9);
    REQUIRE(roc_auc(proba, yt) >= 0.95);
}

TEST_CASE("design matrix extraction") {
    Table t = testgen::make_table({
        testgen::float_col("a", {1.5, 2.5}),
        testgen::bool_col("b", {true, false}),
        testgen::cat_col("s", {"p", "q"}, {}, Role::Sensitive),
        testgen::bool_col("y", {true, false}, {}, Role::Target),
    });
    const Matrix X = feature_matrix(t);
    REQUIRE(X.rows == 2);
    REQUIRE(X.cols == 2); // sensitive and target columns are not features
    REQUIRE(X.at(0, 0) == 1.5);
    REQUIRE(X.at(0, 1) == 1.0);
    REQUIRE(X.at(1, 1) == 0.0);

    const auto y = label_vector(t.column("y"));
    REQUIRE(y == std::vector<uint8_t>{1, 0});

    Table no_feats = testgen::make_table({testgen::bool_col("y", {true, false}, {}, Role::Target)});
    REQUIRE_THROWS_AS(feature_matrix(no_feats), DataError);

    Table cat_feat = testgen::make_table({testgen::cat_col("c", {"a", "b"})});
    REQUIRE_THROWS_AS(feature_matrix(cat_feat), DataError);

    Table holey = testgen::make_table({testgen::float_col("f", {1.0, 2.0}, {0, 1})});
    REQUIRE_THROWS_AS(feature_matrix(holey), DataError);

    REQUIRE_THROWS_AS(label_vector(t.column("a")), DataError);
    Table missing_label =
        testgen::make_table({testgen::bool_col("y", {true, false}, {1, 0}, Role::Target)});
    REQUIRE_THROWS_AS(label_vector(missing_label.column("y")), DataError);
}
