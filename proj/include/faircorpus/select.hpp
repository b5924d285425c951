#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "faircorpus/error.hpp"
#include "faircorpus/fairness.hpp"
#include "faircorpus/manifest.hpp"

namespace faircorpus {

// --- Spearman rank correlation -------------------------------------------------

namespace detail {

inline std::vector<double> average_ranks(const std::vector<double>& v) {
    std::vector<size_t> order(v.size());
    for (size_t i = 0; i < v.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size(), 0.0);
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

inline std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
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
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

} // namespace detail

// Pearson correlation of average-tied ranks. A constant input has no rank
// variance and yields an absent result.
inline std::optional<double> spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw UsageError("spearman: vectors differ in length");
    if (x.size() < 2) throw DataError("spearman needs at least 2 paired values");
    return detail::pearson(detail::average_ranks(x), detail::average_ranks(y));
}

// Pairwise-complete variant: only positions where both entries are present
// participate.
inline std::optional<double> spearman(const std::vector<std::optional<double>>& x,
                                      const std::vector<std::optional<double>>& y) {
    if (x.size() != y.size()) throw UsageError("spearman: vectors differ in length");
    std::vector<double> xs, ys;
    for (size_t i = 0; i < x.size(); ++i) {
        if (x[i] && y[i]) {
            xs.push_back(*x[i]);
            ys.push_back(*y[i]);
        }
    }
    if (xs.size() < 2) throw DataError("spearman needs at least 2 complete pairs");
    return detail::pearson(detail::average_ranks(xs), detail::average_ranks(ys));
}

// --- delta matrix ----------------------------------------------------------------

// Per-scenario vectors of delta scores over a shared (method, seed, metric)
// axis. The baseline method is not part of the axis — its deltas are zero by
// construction and would only dilute the correlations.
struct DeltaMatrix {
    std::vector<std::string> scenario_ids;
    std::vector<std::tuple<std::string, uint64_t, std::string>> axis;
    std::vector<std::vector<std::optional<double>>> values; // [scenario][axis position]
};

inline DeltaMatrix build_delta_matrix(const std::vector<DeltaRecord>& records,
                                      const std::string& baseline_method = "baseline") {
    std::set<std::string> scenarios;
    std::set<std::string> methods;
    std::set<uint64_t> seeds;
    for (const auto& r : records) {
        scenarios.insert(r.scenario_id);
        if (r.method != baseline_method) methods.insert(r.method);
        seeds.insert(r.seed);
    }

    DeltaMatrix m;
    m.scenario_ids.assign(scenarios.begin(), scenarios.end());
    for (const auto& method : methods)
        for (uint64_t seed : seeds)
            for (const auto& metric : metric_names()) m.axis.emplace_back(method, seed, metric);

    std::map<std::string, size_t> scenario_index;
    for (size_t i = 0; i < m.scenario_ids.size(); ++i) scenario_index[m.scenario_ids[i]] = i;
    std::map<std::tuple<std::string, uint64_t, std::string>, size_t> axis_index;
    for (size_t i = 0; i < m.axis.size(); ++i) axis_index[m.axis[i]] = i;

    m.values.assign(m.scenario_ids.size(),
                    std::vector<std::optional<double>>(m.axis.size(), std::nullopt));
    for (const auto& r : records) {
        if (r.method == baseline_method || r.status != "ok" || !r.delta) continue;
        const auto it = axis_index.find({r.method, r.seed, r.metric});
        if (it == axis_index.end()) continue;
        m.values[scenario_index[r.scenario_id]][it->second] = *r.delta;
    }
    return m;
}

// Pairwise-complete Spearman over all scenario pairs. A pair with fewer than
// 3 overlapping entries, or an undefined correlation, is pinned to +1 so that
// missing data never makes two scenarios look decorrelated.
inline std::vector<std::vector<double>> build_correlation_matrix(const DeltaMatrix& m) {
    const size_t n = m.scenario_ids.size();
    std::vector<std::vector<double>> corr(n, std::vector<double>(n, 1.0));
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i + 1; j < n; ++j) {
            size_t complete = 0;
            for (size_t a = 0; a < m.axis.size(); ++a)
                if (m.values[i][a] && m.values[j][a]) ++complete;
            double value = 1.0;
            if (complete >= 3) {
                const auto rho = spearman(m.values[i], m.values[j]);
                if (rho) value = *rho;
            }
            corr[i][j] = corr[j][i] = value;
        }
    }
    return corr;
}

// --- greedy de-correlated selection ------------------------------------------------

struct ScenarioAttributes {
    std::string dataset_id;
    std::vector<std::string> country;
    bool license_permissive = false;
    bool has_license = false;
};

struct SelectionConstraints {
    std::optional<size_t> k;
    std::optional<double> tau;
    bool exclude_same_country = false; // dataset exclusion is always on
    std::function<bool(const ScenarioAttributes&)> predicate;
};

struct CollectionEntry {
    std::string scenario_id;
    std::string dataset_id;
    double avg_correlation_at_insertion = 0.0;
};

struct Collection {
    std::vector<CollectionEntry> entries;
    SelectionConstraints constraints_used;
};

namespace detail {

inline bool shares_country(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    for (const auto& ca : a) {
        if (ca == "n/a") continue; // unknown origin never collides
        for (const auto& cb : b)
            if (ca == cb) return true;
    }
    return false;
}

} // namespace detail

// The greedy construction: seed with the scenario whose mean correlation to
// every other scenario is lowest, then repeatedly admit the candidate least
// correlated (on average) with the selected set. After each admission, every
// scenario sharing an exclusion-key value (dataset; optionally country) with
// the admitted one leaves the pool. Stops at k entries, at pool exhaustion,
// or as soon as the best candidate's average fails the strict τ test. All
// argmin ties break lexicographically on scenario_id.
inline Collection greedy_select(const std::vector<std::string>& scenario_ids,
                                const std::vector<std::vector<double>>& corr,
                                const std::map<std::string, ScenarioAttributes>& attributes,
                                const SelectionConstraints& constraints) {
    if (!constraints.k && !constraints.tau)
        throw UsageError("selection needs at least one of k and tau");
    if (constraints.k && *constraints.k == 0) throw UsageError("k must be positive");
    if (scenario_ids.empty()) throw DataError("no scenarios to select from");

    const size_t n = scenario_ids.size();
    auto attrs_of = [&](size_t i) -> const ScenarioAttributes& {
        const auto it = attributes.find(scenario_ids[i]);
        if (it == attributes.end())
            throw DataError("no attributes for scenario '" + scenario_ids[i] + "'");
        return it->second;
    };

    // Seed: argmin over corpus-wide mean correlation.
    size_t seed = 0;
    double seed_mean = 0.0;
    {
        double best = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < n; ++i) {
            double mean = 0.0;
            if (n > 1) {
                for (size_t j = 0; j < n; ++j)
                    if (j != i) mean += corr[i][j];
                mean /= static_cast<double>(n - 1);
            }
            if (mean < best || (mean == best && scenario_ids[i] < scenario_ids[seed])) {
                best = mean;
                seed = i;
                seed_mean = mean;
            }
        }
    }

    Collection out;
    out.constraints_used = constraints;
    std::vector<size_t> selected{seed};
    out.entries.push_back({scenario_ids[seed], attrs_of(seed).dataset_id, seed_mean});

    std::vector<bool> in_pool(n, true);
    auto exclude_peers_of = [&](size_t chosen) {
        in_pool[chosen] = false;
        const auto& a = attrs_of(chosen);
        for (size_t i = 0; i < n; ++i) {
            if (!in_pool[i]) continue;
            const auto& b = attrs_of(i);
            if (b.dataset_id == a.dataset_id ||
                (constraints.exclude_same_country && detail::shares_country(a.country, b.country)))
                in_pool[i] = false;
        }
    };
    exclude_peers_of(seed);

    while (!constraints.k || selected.size() < *constraints.k) {
        size_t pick = n;
        double pick_avg = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < n; ++i) {
            if (!in_pool[i]) continue;
            double avg = 0.0;
            for (size_t s : selected) avg += corr[i][s];
            avg /= static_cast<double>(selected.size());
            if (avg < pick_avg || (avg == pick_avg && pick < n && scenario_ids[i] < scenario_ids[pick])) {
                pick_avg = avg;
                pick = i;
            }
        }
        if (pick == n) break; // pool exhausted
        if (constraints.tau && !(pick_avg < *constraints.tau)) break;
        selected.push_back(pick);
        out.entries.push_back({scenario_ids[pick], attrs_of(pick).dataset_id, pick_avg});
        exclude_peers_of(pick);
    }
    return out;
}

// Filter by the constraint predicate, correlate, and run the greedy pass.
inline Collection select_collection(const DeltaMatrix& deltas,
                                    const std::map<std::string, ScenarioAttributes>& attributes,
                                    const SelectionConstraints& constraints) {
    std::vector<size_t> kept;
    for (size_t i = 0; i < deltas.scenario_ids.size(); ++i) {
        if (constraints.predicate) {
            const auto it = attributes.find(deltas.scenario_ids[i]);
            if (it == attributes.end())
                throw DataError("no attributes for scenario '" + deltas.scenario_ids[i] + "'");
            if (!constraints.predicate(it->second)) continue;
        }
        kept.push_back(i);
    }
    if (kept.empty()) throw DataError("no scenarios left after filtering");

    DeltaMatrix sub;
    for (size_t i : kept) {
        sub.scenario_ids.push_back(deltas.scenario_ids[i]);
        sub.values.push_back(deltas.values[i]);
    }
    sub.axis = deltas.axis;
    const auto corr = build_correlation_matrix(sub);
    return greedy_select(sub.scenario_ids, corr, attributes, constraints);
}

// Scenario attributes joined from the manifest via the scenario's dataset
// prefix.
inline std::map<std::string, ScenarioAttributes> scenario_attributes_from_manifest(
    const std::vector<std::string>& scenario_ids, const CorpusRegistry& registry) {
    std::map<std::string, ScenarioAttributes> out;
    for (const auto& sid : scenario_ids) {
        const auto& a = registry.find(scenario_dataset_id(sid));
        out[sid] = {a.dataset_id, a.country, a.license_permissive,
                    a.license.has_value() && *a.license != "?"};
    }
    return out;
}

inline nlohmann::ordered_json collection_to_json(const Collection& c) {
    nlohmann::ordered_json o;
    o["constraints"] = nlohmann::ordered_json::object();
    if (c.constraints_used.k)
        o["constraints"]["k"] = *c.constraints_used.k;
    else
        o["constraints"]["k"] = nullptr;
    if (c.constraints_used.tau)
        o["constraints"]["tau"] = *c.constraints_used.tau;
    else
        o["constraints"]["tau"] = nullptr;
    o["constraints"]["group_keys"] = nlohmann::ordered_json::array({"dataset"});
    if (c.constraints_used.exclude_same_country) o["constraints"]["group_keys"].push_back("country");
    o["entries"] = nlohmann::ordered_json::array();
    for (const auto& e : c.entries) {
        nlohmann::ordered_json entry;
        entry["scenario_id"] = e.scenario_id;
        entry["dataset_id"] = e.dataset_id;
        entry["avg_correlation_at_insertion"] = e.avg_correlation_at_insertion;
        o["entries"].push_back(std::move(entry));
    }
    return o;
}

inline std::string serialize_collection(const Collection& c) {
    return collection_to_json(c).dump(2) + "\n";
}

// Parse a delta CSV (fairness module format) back into records.
inline std::vector<DeltaRecord> parse_delta_csv(const std::string& text) {
    std::vector<DeltaRecord> out;
    size_t pos = 0;
    size_t line_no = 0;
    auto next_line = [&](std::string& line) {
        if (pos >= text.size()) return false;
        size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        line = text.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        pos = end + 1;
        ++line_no;
        return true;
    };
    std::string line;
    if (!next_line(line) || line != "scenario_id,method,seed,metric,score,baseline_score,delta,status")
        throw DataError("delta CSV: missing or wrong header");
    while (next_line(line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        size_t start = 0;
        for (size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                f.push_back(line.substr(start, i - start));
                start = i + 1;
            }
        }
        if (f.size() != 8)
            throw DataError("delta CSV: wrong field count at line " + std::to_string(line_no));
        DeltaRecord r;
        r.scenario_id = f[0];
        r.method = f[1];
        try {
            r.seed = std::stoull(f[2]);
        } catch (const std::exception&) {
            throw DataError("delta CSV: bad seed at line " + std::to_string(line_no));
        }
        r.metric = f[3];
        auto parse_opt = [&](const std::string& s) -> std::optional<double> {
            if (s.empty()) return std::nullopt;
            try {
                size_t used = 0;
                const double v = std::stod(s, &used);
                if (used != s.size()) throw std::invalid_argument(s);
                return v;
            } catch (const std::exception&) {
                throw DataError("delta CSV: bad number at line " + std::to_string(line_no));
            }
        };
        r.score = parse_opt(f[4]);
        r.baseline_score = parse_opt(f[5]);
        r.delta = parse_opt(f[6]);
        r.status = f[7];
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace faircorpus
