#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "faircorpus/error.hpp"
#include "faircorpus/table.hpp"

namespace faircorpus {

// Labels, predictions and one group label per row — the input shape for all
// four metrics.
struct GroupedPredictions {
    std::vector<uint8_t> y;
    std::vector<uint8_t> y_hat;
    std::optional<std::vector<double>> scores;
    std::vector<std::string> group;

    void validate() const {
        if (y.size() != y_hat.size() || y.size() != group.size() ||
            (scores && scores->size() != y.size()))
            throw UsageError("grouped predictions: vectors differ in length");
    }
};

// A metric that cannot be evaluated on the given rows (e.g. no positive
// labels) is reported as an absent optional rather than a fabricated number.
struct MetricSet {
    std::optional<double> bacc;
    std::optional<double> f1;
    std::optional<double> eod;
    std::optional<double> dpd;
};

namespace detail {

struct Confusion {
    size_t tp = 0, fp = 0, tn = 0, fn = 0;

    void add(uint8_t y, uint8_t y_hat) {
        if (y && y_hat) ++tp;
        else if (!y && y_hat) ++fp;
        else if (!y && !y_hat) ++tn;
        else ++fn;
    }
    size_t positives() const { return tp + fn; }
    size_t negatives() const { return tn + fp; }
    size_t total() const { return tp + fp + tn + fn; }
};

} // namespace detail

// (specificity + recall) / 2; absent when either label class is missing.
inline std::optional<double> balanced_accuracy(const GroupedPredictions& gp) {
    gp.validate();
    detail::Confusion c;
    for (size_t i = 0; i < gp.y.size(); ++i) c.add(gp.y[i], gp.y_hat[i]);
    if (c.positives() == 0 || c.negatives() == 0) return std::nullopt;
    const double recall = static_cast<double>(c.tp) / static_cast<double>(c.positives());
    const double specificity = static_cast<double>(c.tn) / static_cast<double>(c.negatives());
    return (specificity + recall) / 2.0;
}

// Harmonic mean of precision and recall, computed as 2·TP/(2·TP + FP + FN).
// Zero predicted positives with real positives present → 0; no real
// positives at all → absent.
inline std::optional<double> f1_score(const GroupedPredictions& gp) {
    gp.validate();
    detail::Confusion c;
    for (size_t i = 0; i < gp.y.size(); ++i) c.add(gp.y[i], gp.y_hat[i]);
    if (c.positives() == 0) return std::nullopt;
    if (c.tp + c.fp == 0) return 0.0;
    return 2.0 * static_cast<double>(c.tp) /
           static_cast<double>(2 * c.tp + c.fp + c.fn);
}

// Largest spread of true-positive rates across groups, restricted to groups
// that have at least one positive-label row. No such group → absent; a
// single qualifying group → 0.
inline std::optional<double> equalized_odds_difference(const GroupedPredictions& gp) {
    gp.validate();
    std::map<std::string, detail::Confusion> per_group;
    for (size_t i = 0; i < gp.y.size(); ++i) per_group[gp.group[i]].add(gp.y[i], gp.y_hat[i]);
    double lo = 2.0, hi = -1.0;
    for (const auto& [g, c] : per_group) {
        if (c.positives() == 0) continue;
        const double tpr = static_cast<double>(c.tp) / static_cast<double>(c.positives());
        lo = std::min(lo, tpr);
        hi = std::max(hi, tpr);
    }
    if (hi < 0.0) return std::nullopt;
    return hi - lo;
}

// Largest spread of selection rates Pr(ŷ=1 | group) across groups.
inline std::optional<double> demographic_parity_difference(const GroupedPredictions& gp) {
    gp.validate();
    if (gp.y.empty()) return std::nullopt;
    std::map<std::string, detail::Confusion> per_group;
    for (size_t i = 0; i < gp.y.size(); ++i) per_group[gp.group[i]].add(gp.y[i], gp.y_hat[i]);
    double lo = 2.0, hi = -1.0;
    for (const auto& [g, c] : per_group) {
        const double rate =
            static_cast<double>(c.tp + c.fp) / static_cast<double>(c.total());
        lo = std::min(lo, rate);
        hi = std::max(hi, rate);
    }
    return hi - lo;
}

inline MetricSet compute_metrics(const GroupedPredictions& gp) {
    MetricSet m;
    m.bacc = balanced_accuracy(gp);
    m.f1 = f1_score(gp);
    m.eod = equalized_odds_difference(gp);
    m.dpd = demographic_parity_difference(gp);
    return m;
}

inline const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> names{"bacc", "f1", "eod", "dpd"};
    return names;
}

inline std::optional<double> metric_by_name(const MetricSet& m, const std::string& name) {
    if (name == "bacc") return m.bacc;
    if (name == "f1") return m.f1;
    if (name == "eod") return m.eod;
    if (name == "dpd") return m.dpd;
    throw UsageError("unknown metric '" + name + "'");
}

// --- delta scores -------------------------------------------------------------

struct ScoreRecord {
    std::string scenario_id;
    std::string method;
    uint64_t seed = 0;
    std::string metric;
    std::optional<double> score;
};

struct DeltaRecord {
    std::string scenario_id;
    std::string method;
    uint64_t seed = 0;
    std::string metric;
    std::optional<double> score;
    std::optional<double> baseline_score;
    std::optional<double> delta;
    std::string status; // ok | undefined | missing_baseline
};

// Per-record difference against the baseline method's score for the same
// (scenario, seed, metric). Records that cannot be differenced become
// flagged error entries instead of aborting the batch.
inline std::vector<DeltaRecord> delta_scores(const std::vector<ScoreRecord>& records,
                                             const std::string& baseline_method = "baseline") {
    std::map<std::tuple<std::string, uint64_t, std::string>, std::optional<double>> baselines;
    for (const auto& r : records)
        if (r.method == baseline_method)
            baselines[{r.scenario_id, r.seed, r.metric}] = r.score;

    std::vector<DeltaRecord> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        DeltaRecord d;
        d.scenario_id = r.scenario_id;
        d.method = r.method;
        d.seed = r.seed;
        d.metric = r.metric;
        d.score = r.score;
        if (!r.score) {
            d.status = "undefined";
            out.push_back(std::move(d));
            continue;
        }
        const auto it = baselines.find({r.scenario_id, r.seed, r.metric});
        if (it == baselines.end() || !it->second) {
            d.status = "missing_baseline";
            out.push_back(std::move(d));
            continue;
        }
        d.baseline_score = it->second;
        d.delta = *r.score - *it->second;
        d.status = "ok";
        out.push_back(std::move(d));
    }
    return out;
}

inline std::string delta_records_to_csv(const std::vector<DeltaRecord>& records) {
    std::string out = "scenario_id,method,seed,metric,score,baseline_score,delta,status\n";
    auto cell = [](const std::optional<double>& v) {
        return v ? format_double(*v) : std::string();
    };
    for (const auto& r : records) {
        out += csv_escape(r.scenario_id) + ',' + csv_escape(r.method) + ',' +
               std::to_string(r.seed) + ',' + r.metric + ',' + cell(r.score) + ',' +
               cell(r.baseline_score) + ',' + cell(r.delta) + ',' + r.status + '\n';
    }
    return out;
}

// --- disparate-impact repair ---------------------------------------------------

namespace detail {

// Empirical quantile of each value (midrank convention, q ∈ [0,1]) and the
// interpolated quantile function over sorted group values.
struct GroupDistribution {
    std::vector<double> sorted;

    double quantile_of(double v) const {
        // Average rank of v among the sorted values, mapped to [0,1].
        const auto lo = std::lower_bound(sorted.begin(), sorted.end(), v);
        const auto hi = std::upper_bound(sorted.begin(), sorted.end(), v);
        const double r_lo = static_cast<double>(lo - sorted.begin()) + 1.0;
        const double r_hi = static_cast<double>(hi - sorted.begin());
        const double midrank = (r_lo + r_hi) / 2.0;
        if (sorted.size() == 1) return 0.5;
        return (midrank - 1.0) / (static_cast<double>(sorted.size()) - 1.0);
    }

    double value_at(double q) const {
        if (sorted.size() == 1) return sorted.front();
        const double pos = q * (static_cast<double>(sorted.size()) - 1.0);
        const auto lo = static_cast<size_t>(std::floor(pos));
        const size_t hi = std::min(lo + 1, sorted.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
    }
};

} // namespace detail

// Rank-preserving feature repair: each numeric feature value moves toward the
// pointwise mean of the per-group quantile functions, by fraction λ. λ=1
// equalizes the group distributions; λ=0 is the identity. Non-feature and
// non-numeric columns pass through untouched.
inline Table disparate_impact_repair(const Table& input, const std::string& sensitive_col,
                                     double repair_level) {
    if (repair_level < 0.0 || repair_level > 1.0)
        throw UsageError("repair level must lie in [0, 1]");
    if (repair_level == 0.0) return input;

    const Column& sens = input.column(sensitive_col);
    std::map<std::string, std::vector<size_t>> groups;
    for (size_t r = 0; r < sens.size(); ++r)
        if (!sens.is_missing(r)) groups[sens.string_at(r)].push_back(r);
    if (groups.size() > 2)
        throw DataError("repair expects a binarized sensitive column; '" + sensitive_col +
                        "' has " + std::to_string(groups.size()) + " groups");

    std::vector<Column> cols;
    for (const auto& c : input.columns()) {
        if (c.role != Role::Feature || !is_numeric_dtype(c.dtype)) {
            cols.push_back(c);
            continue;
        }
        std::map<std::string, detail::GroupDistribution> dist;
        for (const auto& [g, rows] : groups) {
            auto& d = dist[g];
            for (size_t r : rows)
                if (!c.is_missing(r)) d.sorted.push_back(c.number_at(r));
            std::sort(d.sorted.begin(), d.sorted.end());
        }

        Column repaired;
        repaired.name = c.name;
        repaired.dtype = Dtype::Float;
        repaired.role = c.role;
        repaired.missing = c.missing;
        repaired.values.reserve(c.size());
        std::vector<std::optional<std::string>> row_group(c.size());
        for (const auto& [g, rows] : groups)
            for (size_t r : rows) row_group[r] = g;
        for (size_t r = 0; r < c.size(); ++r) {
            if (c.is_missing(r) || !row_group[r] || dist.at(*row_group[r]).sorted.empty()) {
                repaired.values.emplace_back(c.is_missing(r) ? 0.0 : c.number_at(r));
                continue;
            }
            const double v = c.number_at(r);
            const double q = dist.at(*row_group[r]).quantile_of(v);
            double target = 0.0;
            for (const auto& [g, d] : dist) target += d.value_at(q);
            target /= static_cast<double>(dist.size());
            repaired.values.emplace_back((1.0 - repair_level) * v + repair_level * target);
        }
        cols.push_back(std::move(repaired));
    }
    Table out;
    out.reset(std::move(cols));
    return out;
}

// --- group-specific thresholds --------------------------------------------------

enum class ThresholdObjective { Eod, Dpd };

namespace detail {

struct GroupThresholdStats {
    // Indexed by grid position: confusion counts when predicting score ≥ t.
    std::vector<size_t> tp, fp, tn, fn;
    size_t n = 0;
    size_t positives = 0;
};

} // namespace detail

// Exhaustive grid search over per-group thresholds {0.00, 0.01, …, 1.00}.
// Minimizes the fairness objective on the fitting data; ties break first on
// higher balanced accuracy, then on the lexicographically lowest threshold
// tuple (groups in sorted label order).
inline std::map<std::string, double> fit_group_thresholds(const std::vector<double>& scores,
                                                          const std::vector<std::string>& group,
                                                          const std::vector<uint8_t>& y,
                                                          ThresholdObjective objective) {
    if (scores.size() != group.size() || scores.size() != y.size())
        throw UsageError("threshold fitting: vectors differ in length");
    if (scores.empty()) throw DataError("threshold fitting: no rows");
    for (double s : scores) {
        if (!std::isfinite(s)) throw DataError("threshold fitting: non-finite score");
        if (s < 0.0 || s > 1.0) throw DataError("threshold fitting: score outside [0, 1]");
    }

    constexpr size_t kGrid = 101;
    auto grid_value = [](size_t i) { return static_cast<double>(i) / 100.0; };

    std::map<std::string, detail::GroupThresholdStats> stats;
    for (size_t r = 0; r < scores.size(); ++r) {
        auto& st = stats[group[r]];
        if (st.tp.empty()) {
            st.tp.assign(kGrid, 0);
            st.fp.assign(kGrid, 0);
            st.tn.assign(kGrid, 0);
            st.fn.assign(kGrid, 0);
        }
        ++st.n;
        st.positives += y[r] ? 1 : 0;
        for (size_t i = 0; i < kGrid; ++i) {
            const bool pred = scores[r] >= grid_value(i);
            if (y[r] && pred) ++st.tp[i];
            else if (!y[r] && pred) ++st.fp[i];
            else if (!y[r] && !pred) ++st.tn[i];
            else ++st.fn[i];
        }
    }

    if (stats.size() > 3)
        throw UsageError("threshold grid search supports at most 3 groups (got " +
                         std::to_string(stats.size()) + ")");

    std::vector<std::string> labels;
    std::vector<const detail::GroupThresholdStats*> gs;
    for (const auto& [g, st] : stats) {
        labels.push_back(g);
        gs.push_back(&st);
    }
    const size_t n_groups = labels.size();

    size_t total_pos = 0, total_neg = 0;
    for (const auto* st : gs) {
        total_pos += st->positives;
        total_neg += st->n - st->positives;
    }
    if (total_pos == 0 || total_neg == 0)
        throw DataError("threshold fitting: labels contain a single class");

    std::vector<size_t> combo(n_groups, 0);
    std::vector<size_t> best(n_groups, 0);
    double best_obj = 2.0;
    double best_bacc = -1.0;
    bool have_best = false;

    while (true) {
        // Evaluate the current threshold tuple.
        size_t tp = 0, fp = 0, tn = 0, fn = 0;
        double tpr_lo = 2.0, tpr_hi = -1.0;
        double rate_lo = 2.0, rate_hi = -1.0;
        for (size_t g = 0; g < n_groups; ++g) {
            const auto& st = *gs[g];
            const size_t i = combo[g];
            tp += st.tp[i];
            fp += st.fp[i];
            tn += st.tn[i];
            fn += st.fn[i];
            if (st.positives > 0) {
                const double tpr =
                    static_cast<double>(st.tp[i]) / static_cast<double>(st.positives);
                tpr_lo = std::min(tpr_lo, tpr);
                tpr_hi = std::max(tpr_hi, tpr);
            }
            const double rate =
                static_cast<double>(st.tp[i] + st.fp[i]) / static_cast<double>(st.n);
            rate_lo = std::min(rate_lo, rate);
            rate_hi = std::max(rate_hi, rate);
        }
        const double obj = objective == ThresholdObjective::Eod
                               ? (tpr_hi < 0.0 ? 0.0 : tpr_hi - tpr_lo)
                               : rate_hi - rate_lo;
        const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
        const double specificity = static_cast<double>(tn) / static_cast<double>(total_neg);
        const double bacc = (recall + specificity) / 2.0;

        if (!have_best || obj < best_obj || (obj == best_obj && bacc > best_bacc) ||
            (obj == best_obj && bacc == best_bacc &&
             std::lexicographical_compare(combo.begin(), combo.end(), best.begin(), best.end()))) {
            have_best = true;
            best_obj = obj;
            best_bacc = bacc;
            best = combo;
        }

        // Next tuple.
        size_t g = 0;
        while (g < n_groups && ++combo[g] == kGrid) {
            combo[g] = 0;
            ++g;
        }
        if (g == n_groups) break;
    }

    std::map<std::string, double> out;
    for (size_t g = 0; g < n_groups; ++g) out[labels[g]] = grid_value(best[g]);
    return out;
}

inline std::vector<uint8_t> apply_group_thresholds(const std::vector<double>& scores,
                                                   const std::vector<std::string>& group,
                                                   const std::map<std::string, double>& thresholds) {
    if (scores.size() != group.size())
        throw UsageError("threshold application: vectors differ in length");
    std::vector<uint8_t> out;
    out.reserve(scores.size());
    for (size_t r = 0; r < scores.size(); ++r) {
        auto it = thresholds.find(group[r]);
        if (it == thresholds.end())
            throw DataError("no fitted threshold for group '" + group[r] + "'");
        out.push_back(scores[r] >= it->second ? 1 : 0);
    }
    return out;
}

} // namespace faircorpus
