// Release gate: one self-contained check per shipped guarantee. Every check
// prints exactly one [PASS]/[FAIL] line; the process exits nonzero if any
// fails. Tolerances are pinned here, next to the values they protect.

#include <faircorpus/demo.hpp>
#include <faircorpus/faircorpus.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "support/testgen.hpp"

using namespace faircorpus;

namespace {

// Collects the first failing expectation of a gate; later ones are noise.
struct Gate {
    bool ok = true;
    std::string why;

    void expect(bool cond, const std::string& what) {
        if (ok && !cond) {
            ok = false;
            why = what;
        }
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

bool close_opt(const std::optional<double>& a, const std::optional<double>& b, double tol) {
    if (a.has_value() != b.has_value()) return false;
    return !a || close(*a, *b, tol);
}

GroupedPredictions gp(std::vector<uint8_t> y, std::vector<uint8_t> y_hat,
                      std::vector<std::string> group = {}) {
    GroupedPredictions out;
    out.y = std::move(y);
    out.y_hat = std::move(y_hat);
    out.group = group.empty() ? std::vector<std::string>(out.y.size(), "g") : std::move(group);
    return out;
}

// --- gate 1: metric fixtures and invariances ---------------------------------------

void gate_metrics(Gate& g) {
    const auto start = Clock::now();

    // Hand-computable confusion fixtures, pinned to 1e-12.
    g.expect(close(*balanced_accuracy(gp({1, 1, 1, 1, 0, 0, 0, 0}, {1, 1, 1, 0, 0, 0, 1, 1})),
                   0.625, 1e-12),
             "balanced accuracy of the 3/1/2/2 confusion fixture");
    g.expect(close(*f1_score(gp({1, 1, 1, 0, 1, 1}, {1, 1, 1, 1, 0, 0})), 2.0 / 3.0, 1e-12),
             "f1 of the 3/1/2 confusion fixture");
    g.expect(close(*equalized_odds_difference(
                       gp({1, 1, 1, 1, 1, 1, 1}, {1, 1, 1, 1, 0, 1, 0},
                          {"a", "a", "a", "a", "a", "b", "b"})),
                   0.3, 1e-12),
             "equalized-odds gap for recalls 0.8 and 0.5");
    g.expect(close(*demographic_parity_difference(
                       gp({1, 1, 1, 0, 0, 1, 0, 0, 0, 0}, {1, 1, 1, 0, 0, 1, 0, 0, 0, 0},
                          {"a", "a", "a", "a", "a", "b", "b", "b", "b", "b"})),
                   0.4, 1e-12),
             "demographic-parity gap for selection rates 0.6 and 0.2");

    // Permutation invariance of all four metrics, and label-flip invariance
    // of the two that survive swapping the positive class (balanced accuracy
    // swaps recall/specificity; parity rates map to their complements).
    Rng rng(99);
    const std::vector<std::string> pool{"a", "b", "c"};
    for (int trial = 0; trial < 1000 && g.ok; ++trial) {
        const size_t n = 1 + rng.bounded(30);
        const size_t n_groups = 1 + rng.bounded(3);
        std::vector<uint8_t> y, yh;
        std::vector<std::string> grp;
        for (size_t i = 0; i < n; ++i) {
            y.push_back(static_cast<uint8_t>(rng.bounded(2)));
            yh.push_back(static_cast<uint8_t>(rng.bounded(2)));
            grp.push_back(pool[rng.bounded(n_groups)]);
        }
        std::vector<size_t> perm(n);
        for (size_t i = 0; i < n; ++i) perm[i] = i;
        for (size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.bounded(i)]);

        GroupedPredictions base = gp(y, yh, grp);
        GroupedPredictions shuffled;
        GroupedPredictions flipped;
        for (size_t i = 0; i < n; ++i) {
            shuffled.y.push_back(y[perm[i]]);
            shuffled.y_hat.push_back(yh[perm[i]]);
            shuffled.group.push_back(grp[perm[i]]);
            flipped.y.push_back(static_cast<uint8_t>(1 - y[i]));
            flipped.y_hat.push_back(static_cast<uint8_t>(1 - yh[i]));
            flipped.group.push_back(grp[i]);
        }
        g.expect(close_opt(balanced_accuracy(base), balanced_accuracy(shuffled), 1e-12) &&
                     close_opt(f1_score(base), f1_score(shuffled), 1e-12) &&
                     close_opt(equalized_odds_difference(base),
                               equalized_odds_difference(shuffled), 1e-12) &&
                     close_opt(demographic_parity_difference(base),
                               demographic_parity_difference(shuffled), 1e-12),
                 "row-permutation invariance on trial " + std::to_string(trial));
        g.expect(close_opt(balanced_accuracy(base), balanced_accuracy(flipped), 1e-12) &&
                     close_opt(demographic_parity_difference(base),
                               demographic_parity_difference(flipped), 1e-12),
                 "label-flip invariance on trial " + std::to_string(trial));
    }
    g.expect(seconds_since(start) < 1.0, "metric checks finish inside one second");
}

// --- gate 2: delta scores against the baseline -------------------------------------

void gate_deltas(Gate& g) {
    std::vector<ScoreRecord> records;
    auto add = [&](const std::string& scenario, const std::string& method, uint64_t seed,
                   const std::string& metric, std::optional<double> score) {
        ScoreRecord r;
        r.scenario_id = scenario;
        r.method = method;
        r.seed = seed;
        r.metric = metric;
        r.score = score;
        records.push_back(std::move(r));
    };
    add("s1", "baseline", 1, "bacc", 0.80);
    add("s1", "m", 1, "bacc", 0.72);
    add("s2", "m", 3, "eod", 0.5); // deliberately without a baseline row

    const auto deltas = delta_scores(records);
    g.expect(deltas.size() == 3, "one delta record per score record");
    for (const auto& d : deltas) {
        if (d.scenario_id == "s1" && d.method == "baseline") {
            g.expect(d.status == "ok" && d.delta.has_value() && *d.delta == 0.0,
                     "baseline self-delta is exactly zero");
        } else if (d.scenario_id == "s1" && d.method == "m") {
            g.expect(d.status == "ok" && d.delta.has_value() && *d.delta == 0.72 - 0.80 &&
                         close(*d.delta, -0.08, 1e-12),
                     "0.72 vs 0.80 yields a delta of -0.08");
        } else {
            g.expect(d.scenario_id == "s2" && d.status == "missing_baseline" &&
                         !d.delta.has_value(),
                     "a scoreless baseline flags the record instead of aborting");
        }
    }
}

// --- gate 3: greedy de-correlated selection ----------------------------------------

void gate_selection(Gate& g) {
    const auto start = Clock::now();

    // Hand-traced 4-scenario fixture on distinct datasets.
    const std::vector<std::string> ids{"A", "B", "C", "D"};
    const std::vector<std::vector<double>> corr{{1.0, 0.9, -0.2, 0.1},
                                                {0.9, 1.0, 0.0, 0.3},
                                                {-0.2, 0.0, 1.0, -0.5},
                                                {0.1, 0.3, -0.5, 1.0}};
    std::map<std::string, ScenarioAttributes> attrs;
    for (const auto& id : ids) {
        ScenarioAttributes a;
        a.dataset_id = "ds_" + id;
        a.country = {"n/a"};
        attrs[id] = a;
    }
    auto picked = [](const Collection& c) {
        std::vector<std::string> out;
        for (const auto& e : c.entries) out.push_back(e.scenario_id);
        return out;
    };

    SelectionConstraints k2;
    k2.k = 2;
    const Collection with_k = greedy_select(ids, corr, attrs, k2);
    g.expect(picked(with_k) == std::vector<std::string>{"C", "D"},
             "k=2 selects [C, D] on the hand-traced matrix");
    g.expect(with_k.entries.size() == 2 &&
                 close(with_k.entries[0].avg_correlation_at_insertion, -0.7 / 3.0, 1e-12) &&
                 with_k.entries[1].avg_correlation_at_insertion == -0.5,
             "recorded insertion correlations match the trace");

    SelectionConstraints tau0;
    tau0.tau = 0.0;
    const Collection with_tau = greedy_select(ids, corr, attrs, tau0);
    g.expect(picked(with_tau) == std::vector<std::string>{"C", "D", "A"},
             "tau=0 selects [C, D, A] then stops");

    // Entry-by-entry agreement with the literal step-by-step oracle on random
    // matrices with random dataset groupings and constraints.
    Rng rng(2024);
    const std::vector<std::string> countries{"US", "GB", "DE", "n/a"};
    for (int trial = 0; trial < 100 && g.ok; ++trial) {
        const size_t n = 2 + rng.bounded(7); // up to 8 scenarios
        testgen::GreedyOracleInput in;
        std::map<std::string, ScenarioAttributes> amap;
        for (size_t i = 0; i < n; ++i) in.ids.push_back("s" + std::to_string(i));
        in.corr.assign(n, std::vector<double>(n, 1.0));
        for (size_t i = 0; i < n; ++i)
            for (size_t j = i + 1; j < n; ++j) {
                const double v = (static_cast<double>(rng.bounded(9)) - 4.0) / 4.0;
                in.corr[i][j] = in.corr[j][i] = v;
            }
        for (const auto& id : in.ids) {
            ScenarioAttributes a;
            a.dataset_id = "ds" + std::to_string(rng.bounded(4));
            a.country = {countries[rng.bounded(4)]};
            if (rng.bounded(3) == 0) a.country.push_back(countries[rng.bounded(4)]);
            amap[id] = a;
            in.dataset_of[id] = a.dataset_id;
            in.countries_of[id] = a.country;
        }
        SelectionConstraints c;
        if (rng.bounded(2) == 0) c.k = 1 + rng.bounded(5);
        if (rng.bounded(2) == 0) c.tau = (static_cast<double>(rng.bounded(7)) - 2.0) * 0.25;
        if (!c.k && !c.tau) c.k = 3;
        c.exclude_same_country = rng.bounded(2) == 0;
        in.k = c.k;
        in.tau = c.tau;
        in.exclude_same_country = c.exclude_same_country;

        g.expect(picked(greedy_select(in.ids, in.corr, amap, c)) == testgen::greedy_oracle(in),
                 "oracle agreement on trial " + std::to_string(trial));
    }
    g.expect(seconds_since(start) < 10.0, "selection checks finish inside ten seconds");
}

// --- gate 4: spearman rank correlation ---------------------------------------------

void gate_spearman(Gate& g) {
    Rng rng(7);
    for (int trial = 0; trial < 1000 && g.ok; ++trial) {
        const size_t n = 2 + rng.bounded(20);
        std::vector<double> x, y;
        for (size_t i = 0; i < n; ++i) {
            x.push_back(static_cast<double>(rng.bounded(6))); // coarse values force ties
            y.push_back(static_cast<double>(rng.bounded(6)));
        }
        g.expect(close_opt(spearman(x, y), testgen::spearman_oracle(x, y), 1e-12),
                 "brute-force agreement on trial " + std::to_string(trial));
    }
}

// --- gate 5: binarized transform postconditions and replay -------------------------

void gate_transform(Gate& g) {
    Rng rng(31);
    TransformConfig preset;
    preset.binarized_preset = true;

    for (int trial = 0; trial < 200 && g.ok; ++trial) {
        const std::string tag = " on messy table " + std::to_string(trial);
        testgen::MessyCase messy = testgen::make_messy_case(rng);
        const TransformResult result =
            transform_pipeline(messy.table, messy.annotation, messy.scenario, preset);

        size_t sensitive_cols = 0;
        for (const auto& c : result.table.columns()) {
            for (uint8_t m : c.missing) g.expect(m == 0, "no missing cells remain" + tag);
            if (c.role == Role::Target) {
                g.expect(c.dtype == Dtype::Bool && c.name == result.report.target_column_out,
                         "target is boolean" + tag);
            } else if (c.role == Role::Sensitive) {
                ++sensitive_cols;
                for (size_t r = 0; r < c.size(); ++r) {
                    const std::string v = c.string_at(r);
                    g.expect(v == "majority" || v == "minority",
                             "sensitive values are majority/minority" + tag);
                }
            } else if (c.role == Role::Feature) {
                g.expect(c.dtype == Dtype::Float || c.dtype == Dtype::Int ||
                             c.dtype == Dtype::Bool,
                         "features are numeric or boolean" + tag);
            }
        }
        g.expect(sensitive_cols == 1, "exactly one sensitive column" + tag);
        for (const auto& [col, vocab] : result.report.category_maps)
            g.expect(vocab.size() <= 200, "cardinality cap respected for '" + col + "'" + tag);

        const Table replayed = replay_transform(messy.table, result.report);
        g.expect(tables_identical(replayed, result.table), "replay matches" + tag);
        g.expect(to_csv(replayed) == to_csv(result.table), "replay is byte-identical" + tag);
    }
}

// --- gate 6: dataset profile fixtures and leakage bands -----------------------------

void gate_profile(Gate& g) {
    const auto start = Clock::now();

    // Ten-row hand fixture: 10 of 40 raw cells missing, groups split 7/3.
    Table pre = testgen::make_table(
        {testgen::float_col("f", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10},
                            {1, 1, 1, 1, 1, 1, 0, 0, 0, 0}),
         testgen::int_col("g", {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, {1, 1, 1, 1, 0, 0, 0, 0, 0, 0}),
         testgen::cat_col("s", {"x", "x", "x", "x", "x", "x", "x", "y", "y", "y"}),
         testgen::cat_col("y", {"good", "bad", "good", "bad", "good", "bad", "good", "bad",
                                "good", "bad"})});
    Table post = testgen::make_table(
        {testgen::float_col("f2", {0, 0, 0, 0, 0, 0, 0, 1, 1, 1}),
         testgen::bool_col("g2", std::vector<bool>(10, false)),
         testgen::cat_col("s2",
                          {"majority", "majority", "majority", "majority", "majority",
                           "majority", "majority", "minority", "minority", "minority"},
                          {}, Role::Sensitive),
         testgen::bool_col("t", {true, false, true, false, true, false, true, false, true,
                                 false},
                           {}, Role::Target)});
    DatasetAnnotation ann;
    ann.dataset_id = "hand";
    ann.dataset_name = "hand";
    ann.sensitive_attributes = {"s"};
    ann.sensitive_categories["s"] = {"x", "y"};
    ann.target_column = "y";
    ann.target_lvl_good = "good";
    const Scenario scenario{make_scenario_id("hand", {"s"}), "hand", {"s"}};

    const MetaProfile p = profile_dataset(pre, post, ann, scenario, 5);
    g.expect(p.meta_pretrans_prop_NA_cells == 0.25, "missing-cell share is exactly 0.25");
    g.expect(close(p.meta_prev_sens_gini, 0.42, 1e-12),
             "group-diversity index of a 70/30 split is 0.42");
    g.expect(close(p.meta_prev_sens_ratio, 3.0 / 7.0, 1e-12),
             "minority/majority prevalence ratio is 3/7 (0.4286)");

    // Balanced 8-row fixture: prevalence diversity peaks at exactly 0.5.
    Table pre2 = testgen::make_table(
        {testgen::float_col("f", {1, 2, 3, 4, 5, 6, 7, 8}),
         testgen::cat_col("s", {"x", "x", "x", "x", "y", "y", "y", "y"}),
         testgen::cat_col("y", {"good", "bad", "good", "bad", "good", "bad", "good", "bad"})});
    Table post2 = testgen::make_table(
        {testgen::float_col("f2", {0, 0, 0, 0, 1, 1, 1, 1}),
         testgen::cat_col("s2",
                          {"majority", "majority", "majority", "majority", "minority",
                           "minority", "minority", "minority"},
                          {}, Role::Sensitive),
         testgen::bool_col("t", {true, false, true, false, true, false, true, false}, {},
                           Role::Target)});
    const MetaProfile balanced = profile_dataset(pre2, post2, ann, scenario, 5);
    g.expect(balanced.meta_prev_sens_gini == 0.5, "balanced groups give exactly 0.5");

    // Leakage probe: independent sensitive column stays near chance, a copied
    // one is learnable, across three seeds at n = 2000.
    for (uint64_t seed = 1; seed <= 3 && g.ok; ++seed) {
        const double indep =
            sensitive_auc(testgen::independence_table(2000, 100 + seed), "s", seed);
        g.expect(indep >= 0.45 && indep <= 0.55,
                 "independence probe lands in [0.45, 0.55] at seed " + std::to_string(seed));
        const double proxy = sensitive_auc(testgen::proxy_table(2000, 200 + seed), "s", seed);
        g.expect(proxy >= 0.95,
                 "proxy probe reaches 0.95 at seed " + std::to_string(seed));
    }
    g.expect(seconds_since(start) < 60.0, "profile checks finish inside sixty seconds");
}

// --- gate 7: learner gradients, convergence and auc ---------------------------------

void gate_learners(Gate& g) {
    // Analytic gradient vs central finite differences, relative to scale.
    Rng rng(11);
    const double h = 1e-6;
    const double l2 = 1e-3;
    for (int trial = 0; trial < 50 && g.ok; ++trial) {
        const size_t rows = 5 + rng.bounded(20);
        const size_t cols = 1 + rng.bounded(4);
        Matrix X;
        X.rows = rows;
        X.cols = cols;
        X.data.resize(rows * cols);
        for (auto& v : X.data) v = rng.normal();
        std::vector<uint8_t> y;
        for (size_t r = 0; r < rows; ++r) y.push_back(static_cast<uint8_t>(rng.bounded(2)));
        y[0] = 0;
        y[rows - 1] = 1;
        std::vector<double> w;
        for (size_t c = 0; c < cols; ++c) w.push_back(rng.normal() * 0.5);
        const double b = rng.normal() * 0.5;

        const auto [dw, db] = logistic_gradient(X, y, w, b, l2);
        auto check = [&](double analytic, double fd) {
            const double scale = std::max({std::abs(analytic), std::abs(fd), 1e-3});
            g.expect(std::abs(analytic - fd) / scale < 1e-4,
                     "finite-difference agreement on trial " + std::to_string(trial));
        };
        for (size_t c = 0; c < cols; ++c) {
            auto wp = w, wm = w;
            wp[c] += h;
            wm[c] -= h;
            check(dw[c], (logistic_loss(X, y, wp, b, l2) - logistic_loss(X, y, wm, b, l2)) /
                             (2.0 * h));
        }
        check(db, (logistic_loss(X, y, w, b + h, l2) - logistic_loss(X, y, w, b - h, l2)) /
                      (2.0 * h));
    }

    // A linearly separable fixture is fit to perfect training accuracy.
    Rng sep(5);
    Matrix X;
    X.rows = 60;
    X.cols = 2;
    std::vector<uint8_t> y;
    for (size_t i = 0; i < 60; ++i) {
        const bool pos = i % 2 == 0;
        X.data.push_back((pos ? 2.0 : -2.0) + 0.3 * sep.normal());
        X.data.push_back(sep.normal());
        y.push_back(pos);
    }
    const LogisticModel model = fit_logistic(X, y);
    const auto labels = predict_labels(predict_proba(model, X));
    g.expect(labels == y, "separable fixture reaches accuracy 1.0");

    // Rank-statistic AUC against the brute-force pair-counting oracle.
    Rng auc_rng(23);
    for (int trial = 0; trial < 1000 && g.ok; ++trial) {
        const size_t n = 2 + auc_rng.bounded(39);
        std::vector<double> scores;
        std::vector<uint8_t> labels2;
        for (size_t i = 0; i < n; ++i) {
            scores.push_back(static_cast<double>(auc_rng.bounded(8)) / 4.0); // tied scores
            labels2.push_back(static_cast<uint8_t>(auc_rng.bounded(2)));
        }
        labels2[0] = 0;
        labels2[n - 1] = 1;
        g.expect(close(roc_auc(scores, labels2), testgen::auc_oracle(scores, labels2), 1e-12),
                 "pair-counting agreement on trial " + std::to_string(trial));
    }
}

// --- gate 8: feature repair and group-threshold optimality --------------------------

void gate_interventions(Gate& g) {
    // Shift fixture: group b's feature is group a's plus a constant.
    Rng rng(13);
    std::vector<double> values;
    std::vector<std::string> groups;
    std::vector<std::string> tags;
    for (size_t i = 0; i < 50; ++i) values.push_back(rng.normal());
    for (size_t i = 0; i < 50; ++i) values.push_back(values[i] + 5.0);
    for (size_t i = 0; i < 100; ++i) {
        groups.push_back(i < 50 ? "a" : "b");
        tags.push_back("t" + std::to_string(i % 4));
    }
    const Table shifted = testgen::make_table(
        {testgen::float_col("v", values), testgen::cat_col("grp", groups, {}, Role::Sensitive),
         testgen::cat_col("note", tags)});

    g.expect(tables_identical(disparate_impact_repair(shifted, "grp", 0.0), shifted),
             "repair level 0 is the identity");

    const Table repaired = disparate_impact_repair(shifted, "grp", 1.0);
    std::vector<double> ra, rb;
    double mean_a = 0.0, mean_b = 0.0;
    for (size_t r = 0; r < 100; ++r) {
        const double v = repaired.column("v").number_at(r);
        (r < 50 ? ra : rb).push_back(v);
        (r < 50 ? mean_a : mean_b) += v / 50.0;
    }
    std::sort(ra.begin(), ra.end());
    std::sort(rb.begin(), rb.end());
    g.expect(close(mean_a, mean_b, 1e-6), "full repair equalizes group means");
    for (size_t i = 0; i < 50 && g.ok; ++i)
        g.expect(close(ra[i], rb[i], 1e-6),
                 "full repair equalizes per-group quantile " + std::to_string(i));
    g.expect(repaired.column("note").values == shifted.column("note").values,
             "categorical columns pass through untouched");

    // Fitted per-group thresholds can never lose to a shared grid threshold:
    // the shared combinations are a subset of the searched space.
    Rng fit_rng(17);
    for (int trial = 0; trial < 25 && g.ok; ++trial) {
        const size_t n = 20 + fit_rng.bounded(20);
        std::vector<double> scores;
        std::vector<std::string> grp;
        std::vector<uint8_t> y;
        for (size_t i = 0; i < n; ++i) {
            scores.push_back(trial % 2 == 0
                                 ? static_cast<double>(fit_rng.bounded(101)) / 100.0
                                 : static_cast<double>(fit_rng.bounded(1000)) / 999.0);
            grp.push_back(i % 2 == 0 ? "a" : "b");
            y.push_back(static_cast<uint8_t>(fit_rng.bounded(2)));
        }
        y[0] = 0;
        y[1] = 1;
        const auto thresholds = fit_group_thresholds(scores, grp, y, ThresholdObjective::Dpd);
        const double fitted =
            *demographic_parity_difference(gp(y, apply_group_thresholds(scores, grp, thresholds),
                                              grp));
        for (int t = 0; t <= 100; ++t) {
            std::vector<uint8_t> preds;
            for (double s : scores) preds.push_back(s >= static_cast<double>(t) / 100.0);
            g.expect(fitted <= *demographic_parity_difference(gp(y, preds, grp)) + 1e-12,
                     "fitted disparity beats shared threshold " + std::to_string(t) +
                         " on trial " + std::to_string(trial));
        }
    }

    // Uniformly shifted group scores force distinct thresholds, and the fit
    // improves on the naive shared 0.5 cut.
    std::vector<double> sc;
    std::vector<std::string> sg;
    std::vector<uint8_t> sy;
    for (size_t i = 0; i < 10; ++i) {
        const double base = 0.05 + 0.1 * static_cast<double>(i);
        sc.push_back(base + 0.3 > 1.0 ? 1.0 : base + 0.3);
        sg.push_back("a");
        sy.push_back(i >= 5);
        sc.push_back(base);
        sg.push_back("b");
        sy.push_back(i >= 5);
    }
    const auto th = fit_group_thresholds(sc, sg, sy, ThresholdObjective::Dpd);
    std::vector<uint8_t> at_half;
    for (double s : sc) at_half.push_back(s >= 0.5);
    g.expect(th.at("a") != th.at("b"), "shifted scores fit distinct thresholds");
    g.expect(*demographic_parity_difference(gp(sy, apply_group_thresholds(sc, sg, th), sg)) <=
                 *demographic_parity_difference(gp(sy, at_half, sg)),
             "fitted thresholds do not lose to the shared 0.5 cut");
}

// --- gate 9: benchmark harness accounting -------------------------------------------

Table bench_raw(uint64_t seed) {
    std::vector<double> x1, x2;
    std::vector<std::string> s, y;
    Rng rng(seed);
    for (size_t i = 0; i < 80; ++i) {
        const bool good = i % 2 == 1;
        x1.push_back((good ? 1.5 : -1.5) + 0.01 * static_cast<double>(i));
        x2.push_back(rng.normal());
        s.push_back(i % 3 == 0 ? "b" : "a");
        y.push_back(good ? "good" : "bad");
    }
    return testgen::make_table({testgen::float_col("x1", x1), testgen::float_col("x2", x2),
                                testgen::cat_col("s", s), testgen::cat_col("y", y)});
}

void gate_harness(Gate& g) {
    CorpusRegistry registry;
    for (const std::string id : {"ds1", "ds2"}) {
        DatasetAnnotation a;
        a.dataset_id = id;
        a.dataset_name = id;
        a.sensitive_attributes = {"s"};
        a.sensitive_categories["s"] = {"a", "b"};
        a.target_column = "y";
        a.target_lvl_good = "good";
        a.target_lvl_bad = "bad";
        registry.annotations.push_back(std::move(a));
    }
    const TableSource source = [](const DatasetAnnotation& a) {
        return bench_raw(a.dataset_id == "ds1" ? 11 : 22);
    };

    BenchmarkPlan plan;
    plan.scenarios = {Scenario{"ds1::s", "ds1", {"s"}}, Scenario{"ds2::s", "ds2", {"s"}}};
    plan.methods = {"baseline", "dir", "group_thresholds_eod", "group_thresholds_dpd"};
    plan.seeds = {1, 2, 3, 4, 5};

    const BenchmarkResult first = run_benchmark(plan, registry, source);
    g.expect(first.runs.size() == 2 * 4 * 5, "2 scenarios x 4 methods x 5 seeds = 40 records");
    for (const auto& r : first.runs)
        g.expect(r.status == "ok", r.scenario_id + "/" + r.method + " succeeds");

    const BenchmarkResult second = run_benchmark(plan, registry, source);
    g.expect(runs_to_csv(first.runs) == runs_to_csv(second.runs),
             "rerun emits a byte-identical run CSV");
    g.expect(delta_records_to_csv(first.deltas) == delta_records_to_csv(second.deltas),
             "rerun emits a byte-identical delta CSV");

    static const bool registered = register_method(
        "acceptance_explode", [] {
            class Failing : public DebiasMethod {
                std::vector<uint8_t> fit_predict(const TrainTestData&, uint64_t) override {
                    throw RuntimeError("always fails");
                }
            };
            return std::make_unique<Failing>();
        });
    g.expect(registered, "failing plug-in method registers");

    plan.methods = {"baseline", "acceptance_explode"};
    plan.seeds = {1, 2};
    const BenchmarkResult mixed = run_benchmark(plan, registry, source);
    g.expect(mixed.runs.size() == 2 * 2 * 2, "mixed plan keeps full accounting");
    for (const auto& r : mixed.runs) {
        if (r.method == "acceptance_explode")
            g.expect(r.status == "error" && r.error == "always fails",
                     "failing method is flagged");
        else
            g.expect(r.status == "ok", "baseline cells are untouched by the failure");
    }
}

// --- gate 10: scenario enumeration rule ----------------------------------------------

void gate_scenarios(Gate& g) {
    const std::vector<size_t> expected{1, 3, 6, 4, 5};
    for (size_t s = 1; s <= 5; ++s) {
        DatasetAnnotation a;
        a.dataset_id = "d";
        a.dataset_name = "d";
        a.target_column = "y";
        for (size_t i = 1; i <= s; ++i) a.sensitive_attributes.push_back("a" + std::to_string(i));
        g.expect(enumerate_scenarios(a).size() == expected[s - 1],
                 std::to_string(s) + " attributes yield " + std::to_string(expected[s - 1]) +
                     " scenarios");
    }

    DatasetAnnotation two;
    two.dataset_id = "d";
    two.dataset_name = "d";
    two.target_column = "y";
    two.sensitive_attributes = {"a1", "a2"};
    std::vector<std::string> ids;
    for (const auto& s : enumerate_scenarios(two)) ids.push_back(s.scenario_id);
    g.expect(ids == std::vector<std::string>{"d::a1", "d::a2", "d::a1+a2"},
             "two attributes give both singles plus the pair");
}

// --- gate 11: end-to-end CLI smoke ---------------------------------------------------

int run_cli(const std::string& args) {
    const std::string cmd = std::string(FAIRCORPUS_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    return std::system(cmd.c_str());
}

std::string quoted(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

void gate_smoke(Gate& g) {
    const auto start = Clock::now();
    testgen::TempDir tmp;
    const demo::DemoCorpus corpus = demo::write_demo_corpus(tmp.path / "corpus");
    const auto out = tmp.path / "out";
    std::filesystem::create_directories(out);
    const std::string common = "--manifest " + quoted(corpus.manifest_path) + " --cache-dir " +
                               quoted(tmp.path / "cache") + " ";

    g.expect(run_cli(common + "fetch synth_credit --out " + quoted(out / "fetch.json")) == 0,
             "fetch succeeds");
    if (!g.ok) return;
    const auto fetch = nlohmann::ordered_json::parse(detail::read_file(out / "fetch.json"));
    g.expect(fetch.at("dataset_id") == "synth_credit" && fetch.at("bytes").get<size_t>() > 0 &&
                 fetch.contains("sha256"),
             "fetch record is schema-valid");

    g.expect(run_cli(common + "transform synth_credit::sex --binarize --out " +
                     quoted(out / "credit.csv")) == 0,
             "transform succeeds");
    if (!g.ok) return;
    const std::string csv = detail::read_file(out / "credit.csv");
    g.expect(static_cast<size_t>(std::count(csv.begin(), csv.end(), '\n')) == 401,
             "transformed CSV has a header plus 400 rows");
    const TransformReport report =
        parse_transform_report(detail::read_file(out / "credit.csv.report.json"));
    g.expect(report.sensitive_columns_out.size() == 1 && !report.target_column_out.empty(),
             "transform report sidecar is schema-valid");

    g.expect(run_cli(common + "profile synth_credit::sex --seed 3 --out " +
                     quoted(out / "profile.json")) == 0,
             "profile succeeds");
    if (!g.ok) return;
    const auto profile = nlohmann::ordered_json::parse(detail::read_file(out / "profile.json"));
    g.expect(profile.size() == 27 && profile.at("meta_pretrans_n_rows") == 400,
             "profile JSON carries all 27 features");

    g.expect(run_cli(common +
                     "bench --scenarios synth_credit::sex,synth_admissions::gender "
                     "--methods baseline,dir --seeds 2 --jobs 2 --out-dir " +
                     quoted(out / "bench")) == 0,
             "bench succeeds");
    if (!g.ok) return;
    const std::string runs = detail::read_file(out / "bench" / "runs.csv");
    const auto lines = static_cast<size_t>(std::count(runs.begin(), runs.end(), '\n'));
    g.expect(lines == 1 + 2 * 2 * 2, "runs CSV holds 8 records");
    g.expect(runs.rfind("scenario_id,method,seed,status,bacc,f1,eod,dpd\n", 0) == 0,
             "runs CSV header is intact");
    const auto deltas = parse_delta_csv(detail::read_file(out / "bench" / "deltas.csv"));
    g.expect(deltas.size() == 2 * 2 * 2 * 4, "delta CSV parses to 32 records");

    g.expect(run_cli(common + "select --deltas " + quoted(out / "bench" / "deltas.csv") +
                     " --k 2 --out " + quoted(out / "collection.json")) == 0,
             "select succeeds");
    if (!g.ok) return;
    const auto collection =
        nlohmann::ordered_json::parse(detail::read_file(out / "collection.json"));
    g.expect(collection.at("constraints").at("k") == 2, "collection records k=2");
    const auto& entries = collection.at("entries");
    g.expect(!entries.empty() && entries.size() <= 2, "collection holds at most two entries");
    for (const auto& e : entries) {
        const std::string id = e.at("scenario_id");
        g.expect(id == "synth_credit::sex" || id == "synth_admissions::gender",
                 "collection entries come from the benchmarked scenarios");
    }
    g.expect(seconds_since(start) < 300.0, "smoke run finishes inside five minutes");
}

} // namespace

int main() {
    struct Criterion {
        const char* name;
        void (*run)(Gate&);
    };
    const std::vector<Criterion> criteria{
        {"metric fixtures and invariances", gate_metrics},
        {"delta scores against the baseline", gate_deltas},
        {"greedy de-correlated selection", gate_selection},
        {"spearman rank correlation", gate_spearman},
        {"binarized transform postconditions and replay", gate_transform},
        {"dataset profile fixtures and leakage bands", gate_profile},
        {"learner gradients, convergence and auc", gate_learners},
        {"feature repair and group-threshold optimality", gate_interventions},
        {"benchmark harness accounting", gate_harness},
        {"scenario enumeration rule", gate_scenarios},
        {"end-to-end cli smoke", gate_smoke},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        Gate gate;
        const auto start = Clock::now();
        try {
            criterion.run(gate);
        } catch (const std::exception& e) {
            gate.expect(false, std::string("unexpected exception: ") + e.what());
        }
        if (gate.ok) {
            std::printf("[PASS] %s (%.2fs)\n", criterion.name, seconds_since(start));
        } else {
            std::printf("[FAIL] %s: %s\n", criterion.name, gate.why.c_str());
            ++failures;
        }
        std::fflush(stdout);
    }
    if (failures > 0) std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
