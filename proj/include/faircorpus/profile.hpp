#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "faircorpus/error.hpp"
#include "faircorpus/learn.hpp"
#include "faircorpus/manifest.hpp"
#include "faircorpus/rng.hpp"
#include "faircorpus/table.hpp"

namespace faircorpus {

// Dataset metadata features, pre- and post-transformation. Fields that are
// undefined for a particular dataset (e.g. group rates over an empty group)
// hold NaN and serialize as JSON null.
struct MetaProfile {
    size_t meta_pretrans_n_rows = 0;
    size_t meta_pretrans_n_cols = 0;
    size_t meta_n_rows = 0;
    size_t meta_n_cols = 0;
    double meta_pretrans_prop_NA_rows = 0.0;
    double meta_pretrans_prop_NA_cols = 0.0;
    double meta_pretrans_prop_NA_cells = 0.0;
    double meta_prop_NA_sens_minority = 0.0;
    double meta_prop_NA_sens_majority = 0.0;
    double meta_prop_cols_float = 0.0;
    double meta_prop_cols_int = 0.0;
    double meta_prop_cols_bool = 0.0;
    double meta_sens_predictability_roc_auc = 0.0;
    double meta_average_absolute_correlation = 0.0;
    double meta_maximum_absolute_correlation = 0.0;
    std::vector<int64_t> meta_pretrans_unique_group_counts_pre_agg;
    double meta_prev_sens_minority = 0.0;
    double meta_prev_sens_majority = 0.0;
    double meta_prev_sens_difference = 0.0;
    double meta_prev_sens_ratio = 0.0;
    double meta_prev_sens_gini = 0.0;
    double meta_base_rate_target = 0.0;
    double meta_base_rate_target_sens_minority = 0.0;
    double meta_base_rate_target_sens_majority = 0.0;
    double meta_base_rate_difference = 0.0;
    double meta_base_rate_ratio = 0.0;
    double meta_base_rate_sens_gini = 0.0;
};

// Gini–Simpson diversity: the probability that two independently drawn
// individuals fall into different groups, 1 − Σ p².
inline double gini_simpson(const std::vector<double>& proportions) {
    double sum = 0.0, sq = 0.0;
    for (double p : proportions) {
        if (p < 0.0 || p > 1.0) throw UsageError("group proportions must lie in [0, 1]");
        sum += p;
        sq += p * p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw UsageError("group proportions must sum to 1");
    return 1.0 - sq;
}

namespace detail {

// 0/1 coding of a binarized sensitive column: the lexicographically larger
// of the two values codes as 1 ("minority" > "majority", so minority is the
// positive class for grouped columns).
inline std::vector<uint8_t> sensitive_coding(const Column& sens) {
    std::set<std::string> distinct;
    for (size_t r = 0; r < sens.size(); ++r)
        if (!sens.is_missing(r)) distinct.insert(sens.string_at(r));
    if (distinct.size() > 2)
        throw DataError("column '" + sens.name + "' is not binarized (" +
                        std::to_string(distinct.size()) + " values)");
    const std::string positive = distinct.empty() ? std::string() : *distinct.rbegin();
    std::vector<uint8_t> out;
    out.reserve(sens.size());
    for (size_t r = 0; r < sens.size(); ++r)
        out.push_back(!sens.is_missing(r) && sens.string_at(r) == positive &&
                              distinct.size() == 2
                          ? 1
                          : 0);
    return out;
}

inline double abs_pearson_or_zero(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0; // zero-variance rule
    return std::abs(sxy / std::sqrt(sxx * syy));
}

} // namespace detail

// Mean and max absolute Pearson correlation between each feature-role column
// and the 0/1-coded sensitive column. Zero-variance features contribute 0.
inline std::pair<double, double> bivariate_correlations(const Table& table,
                                                        const std::string& sensitive_col) {
    const Column& sens = table.column(sensitive_col);
    const auto coding = detail::sensitive_coding(sens);
    std::vector<double> s(coding.begin(), coding.end());

    double sum = 0.0, best = 0.0;
    size_t count = 0;
    for (const auto& c : table.columns()) {
        if (c.role != Role::Feature) continue;
        std::vector<double> x;
        x.reserve(c.size());
        for (size_t r = 0; r < c.size(); ++r) {
            if (c.is_missing(r))
                throw DataError("feature column '" + c.name + "' has missing values");
            x.push_back(c.number_at(r));
        }
        const double corr = detail::abs_pearson_or_zero(x, s);
        sum += corr;
        best = std::max(best, corr);
        ++count;
    }
    if (count == 0) throw DataError("no feature columns to correlate");
    return {sum / static_cast<double>(count), best};
}

// How well a random forest can recover the sensitive attribute from the
// non-sensitive features: stratified seeded 70/30 holdout, forest fit on the
// training part, ROC-AUC of the holdout scores.
inline double sensitive_auc(const Table& table, const std::string& sensitive_col, uint64_t seed,
                            size_t n_trees = 100) {
    const Column& sens = table.column(sensitive_col);
    const auto coding = detail::sensitive_coding(sens);
    const Matrix X = feature_matrix(table);

    std::vector<size_t> train_rows, test_rows;
    for (uint8_t cls : {uint8_t{0}, uint8_t{1}}) {
        std::vector<size_t> rows;
        for (size_t r = 0; r < coding.size(); ++r)
            if (coding[r] == cls) rows.push_back(r);
        if (rows.empty())
            throw DataError("sensitive column '" + sensitive_col + "' has a single class");
        const auto n_test = static_cast<size_t>(
            std::llround(0.3 * static_cast<double>(rows.size())));
        if (n_test == 0 || n_test == rows.size())
            throw DataError("insufficient support: a sensitive class would vanish from the "
                            "train or test part");
        Rng rng(derive_seed(seed, static_cast<uint64_t>(cls)));
        for (size_t i = rows.size() - 1; i > 0; --i) {
            const size_t j = rng.bounded(i + 1);
            std::swap(rows[i], rows[j]);
        }
        test_rows.insert(test_rows.end(), rows.begin(), rows.begin() + n_test);
        train_rows.insert(train_rows.end(), rows.begin() + n_test, rows.end());
    }

    auto subset = [&](const std::vector<size_t>& rows, Matrix& Xs, std::vector<uint8_t>& ys) {
        Xs = Matrix(rows.size(), X.cols);
        ys.clear();
        for (size_t i = 0; i < rows.size(); ++i) {
            for (size_t c = 0; c < X.cols; ++c) Xs.at(i, c) = X.at(rows[i], c);
            ys.push_back(coding[rows[i]]);
        }
    };
    Matrix Xtr, Xte;
    std::vector<uint8_t> ytr, yte;
    subset(train_rows, Xtr, ytr);
    subset(test_rows, Xte, yte);

    const RandomForest forest = fit_random_forest(Xtr, ytr, n_trees, derive_seed(seed, "forest"));
    return roc_auc(rf_predict_proba(forest, Xte), yte);
}

// Fill every metadata field from the raw table and its binarized-preset
// transform. The transform is row-preserving, so per-group missingness is
// computed on the raw cells using the post-transform group assignment.
inline MetaProfile profile_dataset(const Table& pre, const Table& post,
                                   [[maybe_unused]] const DatasetAnnotation& annotation,
                                   const Scenario& scenario, uint64_t seed) {
    if (pre.n_rows() != post.n_rows())
        throw DataError("pre/post tables disagree on row count; profiling expects the "
                        "row-preserving binarized transform");

    MetaProfile p;
    p.meta_pretrans_n_rows = pre.n_rows();
    p.meta_pretrans_n_cols = pre.n_cols();
    p.meta_n_rows = post.n_rows();
    p.meta_n_cols = post.n_cols();

    // Raw missingness.
    size_t na_cells = 0, na_cols = 0;
    std::vector<uint8_t> row_has_na(pre.n_rows(), 0);
    for (const auto& c : pre.columns()) {
        const size_t miss = c.missing_count();
        na_cells += miss;
        na_cols += miss > 0 ? 1 : 0;
        for (size_t r = 0; r < c.size(); ++r)
            if (c.is_missing(r)) row_has_na[r] = 1;
    }
    size_t na_rows = 0;
    for (uint8_t v : row_has_na) na_rows += v;
    const double cells = static_cast<double>(pre.n_rows()) * static_cast<double>(pre.n_cols());
    p.meta_pretrans_prop_NA_rows =
        pre.n_rows() ? static_cast<double>(na_rows) / static_cast<double>(pre.n_rows()) : 0.0;
    p.meta_pretrans_prop_NA_cols =
        pre.n_cols() ? static_cast<double>(na_cols) / static_cast<double>(pre.n_cols()) : 0.0;
    p.meta_pretrans_prop_NA_cells = cells > 0 ? static_cast<double>(na_cells) / cells : 0.0;

    // Group assignment from the post-transform sensitive column.
    const auto sens_names = post.columns_with_role(Role::Sensitive);
    if (sens_names.size() != 1)
        throw DataError("profiling expects exactly one sensitive column, found " +
                        std::to_string(sens_names.size()));
    const Column& sens = post.column(sens_names.front());

    std::vector<size_t> minority_rows, majority_rows;
    for (size_t r = 0; r < sens.size(); ++r) {
        if (sens.is_missing(r)) continue;
        (sens.string_at(r) == "minority" ? minority_rows : majority_rows).push_back(r);
    }

    auto group_na_prop = [&](const std::vector<size_t>& rows) {
        if (rows.empty() || pre.n_cols() == 0) return std::nan("");
        size_t miss = 0;
        for (const auto& c : pre.columns())
            for (size_t r : rows) miss += c.is_missing(r) ? 1 : 0;
        return static_cast<double>(miss) /
               (static_cast<double>(rows.size()) * static_cast<double>(pre.n_cols()));
    };
    p.meta_prop_NA_sens_minority = group_na_prop(minority_rows);
    p.meta_prop_NA_sens_majority = group_na_prop(majority_rows);

    // Post-transform column dtype mix.
    size_t n_float = 0, n_int = 0, n_bool = 0;
    for (const auto& c : post.columns()) {
        n_float += c.dtype == Dtype::Float ? 1 : 0;
        n_int += c.dtype == Dtype::Int ? 1 : 0;
        n_bool += c.dtype == Dtype::Bool ? 1 : 0;
    }
    const double pc = static_cast<double>(post.n_cols());
    p.meta_prop_cols_float = pc > 0 ? static_cast<double>(n_float) / pc : 0.0;
    p.meta_prop_cols_int = pc > 0 ? static_cast<double>(n_int) / pc : 0.0;
    p.meta_prop_cols_bool = pc > 0 ? static_cast<double>(n_bool) / pc : 0.0;

    p.meta_sens_predictability_roc_auc = sensitive_auc(post, sens.name, seed);
    const auto [avg_corr, max_corr] = bivariate_correlations(post, sens.name);
    p.meta_average_absolute_correlation = avg_corr;
    p.meta_maximum_absolute_correlation = max_corr;

    // Distinct raw values per scenario attribute, before any grouping.
    for (const auto& attr : scenario.sensitive_selection) {
        const Column& c = pre.column(attr);
        std::set<std::string> distinct;
        for (size_t r = 0; r < c.size(); ++r)
            if (!c.is_missing(r)) distinct.insert(c.string_at(r));
        p.meta_pretrans_unique_group_counts_pre_agg.push_back(
            static_cast<int64_t>(distinct.size()));
    }

    // Group prevalence.
    const double n_grouped = static_cast<double>(minority_rows.size() + majority_rows.size());
    if (n_grouped == 0) throw DataError("sensitive column has no assigned rows");
    const double prev_min = static_cast<double>(minority_rows.size()) / n_grouped;
    const double prev_maj = static_cast<double>(majority_rows.size()) / n_grouped;
    p.meta_prev_sens_minority = prev_min;
    p.meta_prev_sens_majority = prev_maj;
    p.meta_prev_sens_difference = std::abs(prev_maj - prev_min);
    const double prev_hi = std::max(prev_maj, prev_min);
    p.meta_prev_sens_ratio = prev_hi > 0 ? std::min(prev_maj, prev_min) / prev_hi : 1.0;
    p.meta_prev_sens_gini = gini_simpson({prev_maj, prev_min});

    // Base rates of the binarized target.
    const auto target_name = post.target_column();
    if (!target_name) throw DataError("post-transform table has no target column");
    const Column& target = post.column(*target_name);
    auto rate_over = [&](const std::vector<size_t>& rows) {
        if (rows.empty()) return std::nan("");
        size_t pos = 0;
        for (size_t r : rows) pos += std::get<bool>(target.values[r]) ? 1 : 0;
        return static_cast<double>(pos) / static_cast<double>(rows.size());
    };
    std::vector<size_t> all_rows(post.n_rows());
    for (size_t r = 0; r < post.n_rows(); ++r) all_rows[r] = r;
    p.meta_base_rate_target = rate_over(all_rows);
    const double rate_min = rate_over(minority_rows);
    const double rate_maj = rate_over(majority_rows);
    p.meta_base_rate_target_sens_minority = rate_min;
    p.meta_base_rate_target_sens_majority = rate_maj;
    if (std::isnan(rate_min) || std::isnan(rate_maj)) {
        p.meta_base_rate_difference = std::nan("");
        p.meta_base_rate_ratio = std::nan("");
        p.meta_base_rate_sens_gini = std::nan("");
    } else {
        p.meta_base_rate_difference = std::abs(rate_maj - rate_min);
        const double hi = std::max(rate_maj, rate_min);
        p.meta_base_rate_ratio = hi > 0 ? std::min(rate_maj, rate_min) / hi : 1.0;
        const double total = rate_maj + rate_min;
        p.meta_base_rate_sens_gini =
            total > 0 ? gini_simpson({rate_maj / total, rate_min / total}) : 0.0;
    }
    return p;
}

inline nlohmann::ordered_json profile_to_json(const MetaProfile& p) {
    nlohmann::ordered_json o;
    auto num = [](double v) {
        return std::isnan(v) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(v);
    };
    o["meta_pretrans_n_rows"] = p.meta_pretrans_n_rows;
    o["meta_pretrans_n_cols"] = p.meta_pretrans_n_cols;
    o["meta_n_rows"] = p.meta_n_rows;
    o["meta_n_cols"] = p.meta_n_cols;
    o["meta_pretrans_prop_NA_rows"] = num(p.meta_pretrans_prop_NA_rows);
    o["meta_pretrans_prop_NA_cols"] = num(p.meta_pretrans_prop_NA_cols);
    o["meta_pretrans_prop_NA_cells"] = num(p.meta_pretrans_prop_NA_cells);
    o["meta_prop_NA_sens_minority"] = num(p.meta_prop_NA_sens_minority);
    o["meta_prop_NA_sens_majority"] = num(p.meta_prop_NA_sens_majority);
    o["meta_prop_cols_float"] = num(p.meta_prop_cols_float);
    o["meta_prop_cols_int"] = num(p.meta_prop_cols_int);
    o["meta_prop_cols_bool"] = num(p.meta_prop_cols_bool);
    o["meta_sens_predictability_roc_auc"] = num(p.meta_sens_predictability_roc_auc);
    o["meta_average_absolute_correlation"] = num(p.meta_average_absolute_correlation);
    o["meta_maximum_absolute_correlation"] = num(p.meta_maximum_absolute_correlation);
    o["meta_pretrans_unique_group_counts_pre_agg"] = p.meta_pretrans_unique_group_counts_pre_agg;
    o["meta_prev_sens_minority"] = num(p.meta_prev_sens_minority);
    o["meta_prev_sens_majority"] = num(p.meta_prev_sens_majority);
    o["meta_prev_sens_difference"] = num(p.meta_prev_sens_difference);
    o["meta_prev_sens_ratio"] = num(p.meta_prev_sens_ratio);
    o["meta_prev_sens_gini"] = num(p.meta_prev_sens_gini);
    o["meta_base_rate_target"] = num(p.meta_base_rate_target);
    o["meta_base_rate_target_sens_minority"] = num(p.meta_base_rate_target_sens_minority);
    o["meta_base_rate_target_sens_majority"] = num(p.meta_base_rate_target_sens_majority);
    o["meta_base_rate_difference"] = num(p.meta_base_rate_difference);
    o["meta_base_rate_ratio"] = num(p.meta_base_rate_ratio);
    o["meta_base_rate_sens_gini"] = num(p.meta_base_rate_sens_gini);
    return o;
}

inline std::string serialize_profile(const MetaProfile& p) {
    return profile_to_json(p).dump(2) + "\n";
}

} // namespace faircorpus
