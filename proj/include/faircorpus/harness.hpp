#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "faircorpus/error.hpp"
#include "faircorpus/fairness.hpp"
#include "faircorpus/ingest.hpp"
#include "faircorpus/learn.hpp"
#include "faircorpus/manifest.hpp"
#include "faircorpus/rng.hpp"
#include "faircorpus/table.hpp"
#include "faircorpus/transform.hpp"

namespace faircorpus {

// --- method plug-in interface ---------------------------------------------------

// A debiasing (or plain) method sees the binarized train/test tables plus the
// names of the sensitive and target columns, and returns one hard prediction
// per test row.
struct TrainTestData {
    Table train;
    Table test;
    std::string sensitive_column;
    std::string target_column;
};

class DebiasMethod {
public:
    virtual ~DebiasMethod() = default;
    virtual std::vector<uint8_t> fit_predict(const TrainTestData& data, uint64_t seed) = 0;
};

using MethodFactory = std::function<std::unique_ptr<DebiasMethod>()>;

namespace detail {

inline std::vector<std::string> column_strings(const Column& c) {
    std::vector<std::string> out;
    out.reserve(c.size());
    for (size_t r = 0; r < c.size(); ++r) out.push_back(c.string_at(r));
    return out;
}

class BaselineMethod : public DebiasMethod {
public:
    std::vector<uint8_t> fit_predict(const TrainTestData& d, uint64_t) override {
        const Matrix Xtr = feature_matrix(d.train);
        const Matrix Xte = feature_matrix(d.test);
        const auto ytr = label_vector(d.train.column(d.target_column));
        const LogisticModel model = fit_logistic(Xtr, ytr);
        return predict_labels(predict_proba(model, Xte));
    }
};

// Feature repair at full strength on each split, then the baseline learner
// on the repaired features.
class DirMethod : public DebiasMethod {
public:
    std::vector<uint8_t> fit_predict(const TrainTestData& d, uint64_t) override {
        const Table train = disparate_impact_repair(d.train, d.sensitive_column, 1.0);
        const Table test = disparate_impact_repair(d.test, d.sensitive_column, 1.0);
        const Matrix Xtr = feature_matrix(train);
        const Matrix Xte = feature_matrix(test);
        const auto ytr = label_vector(train.column(d.target_column));
        const LogisticModel model = fit_logistic(Xtr, ytr);
        return predict_labels(predict_proba(model, Xte));
    }
};

class GroupThresholdsMethod : public DebiasMethod {
public:
    explicit GroupThresholdsMethod(ThresholdObjective objective) : objective_(objective) {}

    std::vector<uint8_t> fit_predict(const TrainTestData& d, uint64_t) override {
        const Matrix Xtr = feature_matrix(d.train);
        const Matrix Xte = feature_matrix(d.test);
        const auto ytr = label_vector(d.train.column(d.target_column));
        const LogisticModel model = fit_logistic(Xtr, ytr);
        const auto train_groups = column_strings(d.train.column(d.sensitive_column));
        const auto test_groups = column_strings(d.test.column(d.sensitive_column));
        const auto thresholds =
            fit_group_thresholds(predict_proba(model, Xtr), train_groups, ytr, objective_);
        return apply_group_thresholds(predict_proba(model, Xte), test_groups, thresholds);
    }

private:
    ThresholdObjective objective_;
};

inline std::map<std::string, MethodFactory>& method_registry() {
    static std::map<std::string, MethodFactory> methods = [] {
        std::map<std::string, MethodFactory> m;
        m["baseline"] = [] { return std::make_unique<BaselineMethod>(); };
        m["dir"] = [] { return std::make_unique<DirMethod>(); };
        m["group_thresholds_eod"] = [] {
            return std::make_unique<GroupThresholdsMethod>(ThresholdObjective::Eod);
        };
        m["group_thresholds_dpd"] = [] {
            return std::make_unique<GroupThresholdsMethod>(ThresholdObjective::Dpd);
        };
        return m;
    }();
    return methods;
}

} // namespace detail

inline bool register_method(const std::string& name, MethodFactory factory) {
    return detail::method_registry().emplace(name, std::move(factory)).second;
}

inline std::vector<std::string> registered_methods() {
    std::vector<std::string> out;
    for (const auto& [name, factory] : detail::method_registry()) out.push_back(name);
    return out;
}

inline std::unique_ptr<DebiasMethod> make_method(const std::string& name) {
    const auto& reg = detail::method_registry();
    const auto it = reg.find(name);
    if (it == reg.end()) throw UsageError("unknown method '" + name + "'");
    return it->second();
}

// --- benchmark plan & records -----------------------------------------------------

inline TransformConfig default_benchmark_transform() {
    TransformConfig c;
    c.binarized_preset = true;
    return c;
}

struct BenchmarkPlan {
    std::vector<Scenario> scenarios;
    std::vector<std::string> methods{"baseline"};
    std::vector<uint64_t> seeds{1, 2, 3, 4, 5};
    double test_fraction = 0.3;
    TransformConfig transform = default_benchmark_transform();
    double timeout_seconds = 300.0; // ≤ 0 disables the timeout machinery
    size_t jobs = 1;
};

struct RunRecord {
    std::string scenario_id;
    std::string method;
    uint64_t seed = 0;
    std::string status; // ok | error | timeout
    MetricSet metrics;  // populated only for ok
    double wall_time = 0.0;
    std::string error;  // diagnostic, not exported to CSV
};

struct BenchmarkResult {
    std::vector<RunRecord> runs;
    std::vector<DeltaRecord> deltas;
};

// Source of raw tables, injectable for tests; the default consults the
// download cache.
using TableSource = std::function<Table(const DatasetAnnotation&)>;

inline TableSource make_cache_loader(std::filesystem::path cache_dir) {
    return [cache_dir](const DatasetAnnotation& a) { return load_dataset(a, cache_dir); };
}

namespace detail {

struct CellOutcome {
    std::string status;
    MetricSet metrics;
    std::string error;
};

struct PreparedScenario {
    std::shared_ptr<const Table> table; // transformed
    std::string sensitive_column;
    std::string target_column;
    std::string error; // non-empty when preparation failed
};

inline CellOutcome run_cell(const std::shared_ptr<const Table>& table,
                            const std::string& sensitive_column,
                            const std::string& target_column, const std::string& scenario_id,
                            const std::string& method, uint64_t seed, double test_fraction) {
    try {
        const uint64_t split_seed = derive_seed(seed, scenario_id);
        auto [train, test] = train_test_split(*table, test_fraction, split_seed);
        TrainTestData data{std::move(train), std::move(test), sensitive_column, target_column};
        const uint64_t method_seed = derive_seed(split_seed, method);
        const auto predictions = make_method(method)->fit_predict(data, method_seed);
        if (predictions.size() != data.test.n_rows())
            throw RuntimeError("method '" + method + "' returned " +
                               std::to_string(predictions.size()) + " predictions for " +
                               std::to_string(data.test.n_rows()) + " rows");
        GroupedPredictions gp;
        gp.y = label_vector(data.test.column(target_column));
        gp.y_hat = predictions;
        gp.group = column_strings(data.test.column(sensitive_column));
        return {"ok", compute_metrics(gp), ""};
    } catch (const std::exception& e) {
        return {"error", {}, e.what()};
    }
}

inline CellOutcome run_cell_with_timeout(const std::shared_ptr<const Table>& table,
                                         const std::string& sensitive_column,
                                         const std::string& target_column,
                                         const std::string& scenario_id, const std::string& method,
                                         uint64_t seed, double test_fraction,
                                         double timeout_seconds) {
    if (timeout_seconds <= 0.0)
        return run_cell(table, sensitive_column, target_column, scenario_id, method, seed,
                        test_fraction);
    // The task owns copies/shared handles of everything it touches, so an
    // abandoned (timed-out) run can finish harmlessly in the background.
    auto task = std::make_shared<std::packaged_task<CellOutcome()>>(
        [table, sensitive_column, target_column, scenario_id, method, seed, test_fraction] {
            return run_cell(table, sensitive_column, target_column, scenario_id, method, seed,
                            test_fraction);
        });
    auto future = task->get_future();
    std::thread worker([task] { (*task)(); });
    if (future.wait_for(std::chrono::duration<double>(timeout_seconds)) ==
        std::future_status::ready) {
        worker.join();
        return future.get();
    }
    worker.detach();
    return {"timeout", {}, "exceeded " + format_double(timeout_seconds) + "s wall time"};
}

} // namespace detail

// The benchmark loop: prepare each scenario once (load → transform), then run
// every (scenario, method, seed) cell in isolation. A failing or timing-out
// cell is recorded and never aborts the sweep. Output order is scenario,
// then seed, then method, as listed in the plan.
inline BenchmarkResult run_benchmark(const BenchmarkPlan& plan, const CorpusRegistry& registry,
                                     const TableSource& source) {
    if (plan.scenarios.empty()) throw UsageError("benchmark plan has no scenarios");
    if (plan.seeds.empty()) throw UsageError("benchmark plan has no seeds");
    if (plan.methods.empty() ||
        std::find(plan.methods.begin(), plan.methods.end(), "baseline") == plan.methods.end())
        throw UsageError("benchmark plan must include the baseline method");

    // Prepare scenarios (sequentially; failures poison their cells only).
    std::vector<detail::PreparedScenario> prepared;
    prepared.reserve(plan.scenarios.size());
    for (const auto& scenario : plan.scenarios) {
        detail::PreparedScenario p;
        try {
            const DatasetAnnotation& annotation = registry.find(scenario.dataset_id);
            const Table raw = source(annotation);
            TransformResult tr = transform_pipeline(raw, annotation, scenario, plan.transform);
            if (tr.report.sensitive_columns_out.size() != 1)
                throw DataError("benchmark expects exactly one sensitive column, got " +
                                std::to_string(tr.report.sensitive_columns_out.size()));
            p.sensitive_column = tr.report.sensitive_columns_out.front();
            p.target_column = tr.report.target_column_out;
            p.table = std::make_shared<const Table>(std::move(tr.table));
        } catch (const std::exception& e) {
            p.error = e.what();
        }
        prepared.push_back(std::move(p));
    }

    struct Cell {
        size_t scenario_idx;
        uint64_t seed;
        std::string method;
    };
    std::vector<Cell> cells;
    for (size_t s = 0; s < plan.scenarios.size(); ++s)
        for (uint64_t seed : plan.seeds)
            for (const auto& method : plan.methods) cells.push_back({s, seed, method});

    std::vector<RunRecord> runs(cells.size());
    std::atomic<size_t> next{0};
    auto worker = [&] {
        while (true) {
            const size_t i = next.fetch_add(1);
            if (i >= cells.size()) break;
            const Cell& cell = cells[i];
            const auto& p = prepared[cell.scenario_idx];
            const auto& scenario = plan.scenarios[cell.scenario_idx];
            RunRecord rec;
            rec.scenario_id = scenario.scenario_id;
            rec.method = cell.method;
            rec.seed = cell.seed;
            const auto start = std::chrono::steady_clock::now();
            if (!p.error.empty()) {
                rec.status = "error";
                rec.error = p.error;
            } else {
                const auto outcome = detail::run_cell_with_timeout(
                    p.table, p.sensitive_column, p.target_column, scenario.scenario_id,
                    cell.method, cell.seed, plan.test_fraction, plan.timeout_seconds);
                rec.status = outcome.status;
                rec.metrics = outcome.metrics;
                rec.error = outcome.error;
            }
            rec.wall_time =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            runs[i] = std::move(rec);
        }
    };
    if (plan.jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (size_t t = 0; t < plan.jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    // Delta records against the baseline of the same (scenario, seed).
    std::vector<ScoreRecord> scores;
    scores.reserve(runs.size() * metric_names().size());
    for (const auto& run : runs) {
        for (const auto& metric : metric_names()) {
            ScoreRecord sr;
            sr.scenario_id = run.scenario_id;
            sr.method = run.method;
            sr.seed = run.seed;
            sr.metric = metric;
            if (run.status == "ok") sr.score = metric_by_name(run.metrics, metric);
            scores.push_back(std::move(sr));
        }
    }
    BenchmarkResult result;
    result.runs = std::move(runs);
    result.deltas = delta_scores(scores);
    return result;
}

// RunRecord CSV. Wall time is deliberately not exported: the file must be
// byte-identical across reruns of the same plan.
inline std::string runs_to_csv(const std::vector<RunRecord>& runs) {
    std::string out = "scenario_id,method,seed,status,bacc,f1,eod,dpd\n";
    auto cell = [](const std::optional<double>& v) {
        return v ? format_double(*v) : std::string();
    };
    for (const auto& r : runs) {
        out += csv_escape(r.scenario_id) + ',' + csv_escape(r.method) + ',' +
               std::to_string(r.seed) + ',' + r.status + ',' + cell(r.metrics.bacc) + ',' +
               cell(r.metrics.f1) + ',' + cell(r.metrics.eod) + ',' + cell(r.metrics.dpd) + '\n';
    }
    return out;
}

} // namespace faircorpus
