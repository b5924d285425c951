#include <catch2/catch_amalgamated.hpp>

#include <faircorpus/harness.hpp>

#include <algorithm>
#include <chrono>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "support/testgen.hpp"

using namespace faircorpus;

namespace {

// Predicts a fixed label for every test row; handy for pinning metric values.
class ConstantMethod : public DebiasMethod {
public:
    explicit ConstantMethod(uint8_t value) : value_(value) {}
    std::vector<uint8_t> fit_predict(const TrainTestData& d, uint64_t) override {
        return std::vector<uint8_t>(d.test.n_rows(), value_);
    }

private:
    uint8_t value_;
};

class ExplodingMethod : public DebiasMethod {
public:
    std::vector<uint8_t> fit_predict(const TrainTestData&, uint64_t) override {
        throw RuntimeError("kaboom");
    }
};

class SleepyMethod : public DebiasMethod {
public:
    std::vector<uint8_t> fit_predict(const TrainTestData& d, uint64_t) override {
        std::this_thread::sleep_for(std::chrono::milliseconds(300));
        return std::vector<uint8_t>(d.test.n_rows(), 0);
    }
};

const bool custom_methods_registered = [] {
    register_method("always_one", [] { return std::make_unique<ConstantMethod>(1); });
    register_method("explode", [] { return std::make_unique<ExplodingMethod>(); });
    register_method("sleepy", [] { return std::make_unique<SleepyMethod>(); });
    return true;
}();

// A raw table the binarized preset digests cleanly: two informative float
// features, one two-level sensitive attribute, a good/bad target. The seed
// only perturbs the noise feature so distinct datasets score differently.
Table synth_raw(uint64_t seed, size_t rows = 80) {
    std::vector<double> x1, x2;
    std::vector<std::string> s, y;
    Rng rng(seed);
    for (size_t i = 0; i < rows; ++i) {
        const bool good = i % 2 == 1;
        x1.push_back((good ? 1.5 : -1.5) + 0.01 * static_cast<double>(i));
        x2.push_back(rng.normal());
        s.push_back(i % 3 == 0 ? "b" : "a");
        y.push_back(good ? "good" : "bad");
    }
    return testgen::make_table({testgen::float_col("x1", x1), testgen::float_col("x2", x2),
                                testgen::cat_col("s", s), testgen::cat_col("y", y)});
}

DatasetAnnotation synth_annotation(const std::string& dataset_id) {
    DatasetAnnotation a;
    a.dataset_id = dataset_id;
    a.dataset_name = dataset_id;
    a.sensitive_attributes = {"s"};
    a.sensitive_categories["s"] = {"a", "b"};
    a.target_column = "y";
    a.target_lvl_good = "good";
    a.target_lvl_bad = "bad";
    return a;
}

CorpusRegistry synth_registry() {
    CorpusRegistry reg;
    reg.annotations.push_back(synth_annotation("ds1"));
    reg.annotations.push_back(synth_annotation("ds2"));
    return reg;
}

Scenario synth_scenario(const std::string& dataset_id) {
    return Scenario{make_scenario_id(dataset_id, {"s"}), dataset_id, {"s"}};
}

// Keeps dataset contents deterministic per dataset id regardless of call order.
TableSource synth_source() {
    return [](const DatasetAnnotation& a) {
        return synth_raw(a.dataset_id == "ds1" ? 11 : 22);
    };
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(field);
            field.clear();
        } else {
            field.push_back(ch);
        }
    }
    out.push_back(field);
    return out;
}

std::vector<std::string> csv_lines(const std::string& text) {
    std::vector<std::string> out;
    std::string line;
    for (char ch : text) {
        if (ch == '\n') {
            out.push_back(line);
            line.clear();
        } else {
            line.push_back(ch);
        }
    }
    return out;
}

} // namespace

TEST_CASE("method registry exposes built-ins and rejects unknown names") {
    REQUIRE(custom_methods_registered);
    const auto names = registered_methods();
    REQUIRE(std::is_sorted(names.begin(), names.end()));
    for (const std::string expected :
         {"baseline", "dir", "group_thresholds_eod", "group_thresholds_dpd", "always_one"})
        REQUIRE(std::find(names.begin(), names.end(), expected) != names.end());

    REQUIRE(make_method("baseline") != nullptr);
    REQUIRE_THROWS_MATCHES(make_method("nope"), UsageError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("nope")));

    // Duplicate registration is refused and keeps the original factory.
    REQUIRE_FALSE(register_method("baseline", [] { return std::make_unique<ExplodingMethod>(); }));
    REQUIRE_NOTHROW(make_method("baseline")->fit_predict(
        [] {
            TrainTestData d;
            d.train = testgen::make_table(
                {testgen::float_col("x1", {-1, -2, 1, 2, -3, 3}),
                 testgen::cat_col("s", {"a", "b", "a", "b", "a", "b"}, {}, Role::Sensitive),
                 testgen::bool_col("y", {false, false, true, true, false, true}, {},
                                   Role::Target)});
            d.test = testgen::make_table(
                {testgen::float_col("x1", {-1.5, 2.5}),
                 testgen::cat_col("s", {"a", "b"}, {}, Role::Sensitive),
                 testgen::bool_col("y", {false, true}, {}, Role::Target)});
            d.sensitive_column = "s";
            d.target_column = "y";
            return d;
        }(),
        0));
}

TEST_CASE("built-in methods return one hard prediction per test row") {
    // Separable data so the logistic fit converges to something sensible.
    std::vector<double> xtr, xte;
    std::vector<std::string> str_, ste;
    std::vector<bool> ytr, yte;
    Rng rng(5);
    for (size_t i = 0; i < 60; ++i) {
        const bool pos = i % 2 == 0;
        xtr.push_back((pos ? 2.0 : -2.0) + 0.2 * rng.normal());
        str_.push_back(i % 3 == 0 ? "minority" : "majority");
        ytr.push_back(pos);
    }
    for (size_t i = 0; i < 20; ++i) {
        const bool pos = i % 2 == 0;
        xte.push_back((pos ? 2.0 : -2.0) + 0.2 * rng.normal());
        ste.push_back(i % 3 == 0 ? "minority" : "majority");
        yte.push_back(pos);
    }
    TrainTestData data;
    data.train = testgen::make_table({testgen::float_col("x1", xtr),
                                      testgen::cat_col("s", str_, {}, Role::Sensitive),
                                      testgen::bool_col("y", ytr, {}, Role::Target)});
    data.test = testgen::make_table({testgen::float_col("x1", xte),
                                     testgen::cat_col("s", ste, {}, Role::Sensitive),
                                     testgen::bool_col("y", yte, {}, Role::Target)});
    data.sensitive_column = "s";
    data.target_column = "y";

    for (const std::string name :
         {"baseline", "dir", "group_thresholds_eod", "group_thresholds_dpd"}) {
        INFO("method " << name);
        const auto preds = make_method(name)->fit_predict(data, 7);
        REQUIRE(preds.size() == data.test.n_rows());
        for (uint8_t p : preds) REQUIRE((p == 0 || p == 1));
    }
}

TEST_CASE("benchmark plan defaults") {
    const BenchmarkPlan plan;
    REQUIRE(plan.methods == std::vector<std::string>{"baseline"});
    REQUIRE(plan.seeds == std::vector<uint64_t>{1, 2, 3, 4, 5});
    REQUIRE(plan.test_fraction == 0.3);
    REQUIRE(plan.timeout_seconds == 300.0);
    REQUIRE(plan.jobs == 1);
    REQUIRE(plan.transform.binarized_preset);
    REQUIRE(plan.transform == default_benchmark_transform());
}

TEST_CASE("benchmark runs every cell in scenario, seed, method order") {
    BenchmarkPlan plan;
    plan.scenarios = {synth_scenario("ds1"), synth_scenario("ds2")};
    plan.methods = {"baseline", "always_one"};
    plan.seeds = {1, 2};
    const auto result = run_benchmark(plan, synth_registry(), synth_source());

    REQUIRE(result.runs.size() == 8);
    size_t i = 0;
    for (const std::string scenario : {"ds1::s", "ds2::s"}) {
        for (uint64_t seed : {1, 2}) {
            for (const std::string method : {"baseline", "always_one"}) {
                INFO("run " << i);
                REQUIRE(result.runs[i].scenario_id == scenario);
                REQUIRE(result.runs[i].seed == seed);
                REQUIRE(result.runs[i].method == method);
                REQUIRE(result.runs[i].status == "ok");
                REQUIRE(result.runs[i].error.empty());
                REQUIRE(result.runs[i].wall_time >= 0.0);
                REQUIRE(result.runs[i].metrics.bacc.has_value());
                REQUIRE(result.runs[i].metrics.f1.has_value());
                ++i;
            }
        }
    }

    // The constant-positive method has pinned fairness metrics: every group
    // receives the positive rate 1 and the positive-class recall 1.
    for (const auto& run : result.runs) {
        if (run.method != "always_one") continue;
        REQUIRE(run.metrics.bacc == 0.5);
        REQUIRE(run.metrics.eod == 0.0);
        REQUIRE(run.metrics.dpd == 0.0);
    }

    // One delta row per run and metric; baselines sit at exactly zero.
    REQUIRE(result.deltas.size() == result.runs.size() * metric_names().size());
    for (const auto& d : result.deltas) {
        REQUIRE(d.status == "ok");
        REQUIRE(d.delta.has_value());
        if (d.method == "baseline") REQUIRE(*d.delta == 0.0);
        if (d.method == "always_one")
            REQUIRE(*d.delta == *d.score - *d.baseline_score);
    }
}

TEST_CASE("a failing method is isolated to its own cells") {
    BenchmarkPlan plan;
    plan.scenarios = {synth_scenario("ds1")};
    plan.methods = {"baseline", "explode", "nope"};
    plan.seeds = {1, 2};
    const auto result = run_benchmark(plan, synth_registry(), synth_source());

    REQUIRE(result.runs.size() == 6);
    for (const auto& run : result.runs) {
        if (run.method == "baseline") {
            REQUIRE(run.status == "ok");
        } else if (run.method == "explode") {
            REQUIRE(run.status == "error");
            REQUIRE(run.error == "kaboom");
            REQUIRE_FALSE(run.metrics.bacc.has_value());
        } else {
            REQUIRE(run.status == "error");
            REQUIRE_THAT(run.error, Catch::Matchers::ContainsSubstring("unknown method"));
        }
    }

    // Scores of failed runs are absent, so their deltas come out undefined.
    for (const auto& d : result.deltas) {
        if (d.method == "baseline") {
            REQUIRE(d.status == "ok");
        } else {
            REQUIRE(d.status == "undefined");
            REQUIRE_FALSE(d.delta.has_value());
        }
    }
}

TEST_CASE("a scenario that fails to prepare poisons only its own cells") {
    BenchmarkPlan plan;
    plan.scenarios = {synth_scenario("ds1"), synth_scenario("ds2"), synth_scenario("ghost")};
    plan.seeds = {1};
    const TableSource source = [](const DatasetAnnotation& a) {
        if (a.dataset_id == "ds2") throw DataError("synthetic load failure");
        return synth_raw(11);
    };
    const auto result = run_benchmark(plan, synth_registry(), source);

    REQUIRE(result.runs.size() == 3);
    REQUIRE(result.runs[0].scenario_id == "ds1::s");
    REQUIRE(result.runs[0].status == "ok");
    REQUIRE(result.runs[1].scenario_id == "ds2::s");
    REQUIRE(result.runs[1].status == "error");
    REQUIRE_THAT(result.runs[1].error,
                 Catch::Matchers::ContainsSubstring("synthetic load failure"));
    REQUIRE(result.runs[2].scenario_id == "ghost::s");
    REQUIRE(result.runs[2].status == "error");
    REQUIRE_THAT(result.runs[2].error, Catch::Matchers::ContainsSubstring("ghost"));

    for (const auto& d : result.deltas)
        if (d.scenario_id != "ds1::s") REQUIRE(d.status == "undefined");
}

TEST_CASE("benchmark plan validation") {
    BenchmarkPlan plan;
    REQUIRE_THROWS_AS(run_benchmark(plan, synth_registry(), synth_source()), UsageError);
    plan.scenarios = {synth_scenario("ds1")};
    plan.seeds = {};
    REQUIRE_THROWS_AS(run_benchmark(plan, synth_registry(), synth_source()), UsageError);
    plan.seeds = {1};
    plan.methods = {"dir"};
    REQUIRE_THROWS_AS(run_benchmark(plan, synth_registry(), synth_source()), UsageError);
    plan.methods = {};
    REQUIRE_THROWS_AS(run_benchmark(plan, synth_registry(), synth_source()), UsageError);
}

TEST_CASE("slow methods time out without aborting the sweep") {
    BenchmarkPlan plan;
    plan.scenarios = {synth_scenario("ds1")};
    plan.methods = {"baseline", "sleepy"};
    plan.seeds = {1};
    plan.timeout_seconds = 0.05;
    const auto result = run_benchmark(plan, synth_registry(), synth_source());

    REQUIRE(result.runs.size() == 2);
    REQUIRE(result.runs[0].method == "baseline");
    REQUIRE(result.runs[0].status == "ok");
    REQUIRE(result.runs[1].method == "sleepy");
    REQUIRE(result.runs[1].status == "timeout");
    REQUIRE_THAT(result.runs[1].error, Catch::Matchers::ContainsSubstring("exceeded"));
    REQUIRE_FALSE(result.runs[1].metrics.bacc.has_value());
    for (const auto& d : result.deltas)
        if (d.method == "sleepy") REQUIRE(d.status == "undefined");

    // With the timeout disabled the same method simply finishes.
    plan.timeout_seconds = 0.0;
    const auto patient = run_benchmark(plan, synth_registry(), synth_source());
    REQUIRE(patient.runs[1].method == "sleepy");
    REQUIRE(patient.runs[1].status == "ok");

    // Let the detached worker from the timed-out cell drain before exit.
    std::this_thread::sleep_for(std::chrono::milliseconds(400));
}

TEST_CASE("reruns and parallel runs produce byte-identical CSV output") {
    BenchmarkPlan plan;
    plan.scenarios = {synth_scenario("ds1"), synth_scenario("ds2")};
    plan.methods = {"baseline", "dir", "always_one"};
    plan.seeds = {1, 2};

    const auto first = run_benchmark(plan, synth_registry(), synth_source());
    const auto second = run_benchmark(plan, synth_registry(), synth_source());
    REQUIRE(runs_to_csv(first.runs) == runs_to_csv(second.runs));
    REQUIRE(delta_records_to_csv(first.deltas) == delta_records_to_csv(second.deltas));

    plan.jobs = 3;
    const auto parallel = run_benchmark(plan, synth_registry(), synth_source());
    REQUIRE(runs_to_csv(parallel.runs) == runs_to_csv(first.runs));
    REQUIRE(delta_records_to_csv(parallel.deltas) == delta_records_to_csv(first.deltas));
}

TEST_CASE("run CSV carries the fixed schema and omits metrics of failed runs") {
    BenchmarkPlan plan;
    plan.scenarios = {synth_scenario("ds1")};
    plan.methods = {"baseline", "always_one", "explode"};
    plan.seeds = {3};
    const auto result = run_benchmark(plan, synth_registry(), synth_source());

    const std::string csv = runs_to_csv(result.runs);
    const auto lines = csv_lines(csv);
    REQUIRE(lines.size() == result.runs.size() + 1);
    REQUIRE(lines[0] == "scenario_id,method,seed,status,bacc,f1,eod,dpd");

    const auto baseline = split_fields(lines[1]);
    REQUIRE(baseline.size() == 8);
    REQUIRE(baseline[0] == "ds1::s");
    REQUIRE(baseline[1] == "baseline");
    REQUIRE(baseline[2] == "3");
    REQUIRE(baseline[3] == "ok");
    for (size_t f = 4; f < 8; ++f) REQUIRE_FALSE(baseline[f].empty());

    const auto constant = split_fields(lines[2]);
    REQUIRE(constant[1] == "always_one");
    REQUIRE(constant[4] == "0.5");
    REQUIRE(constant[6] == "0");
    REQUIRE(constant[7] == "0");

    REQUIRE(lines[3] == "ds1::s,explode,3,error,,,,");
}
