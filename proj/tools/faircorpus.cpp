// faircorpus — manifest-driven acquisition, preparation, transformation,
// benchmarking and selection for fairness datasets.
//
// Exit codes: 0 ok, 1 usage error, 2 data error, 3 runtime/environment error.

#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <faircorpus/faircorpus.hpp>

namespace fc = faircorpus;

namespace {

int exit_code(fc::ErrorKind kind) {
    switch (kind) {
        case fc::ErrorKind::usage: return 1;
        case fc::ErrorKind::data: return 2;
        case fc::ErrorKind::runtime: return 3;
    }
    return 3;
}

std::string read_text_file(const std::filesystem::path& path) {
    try {
        return fc::detail::read_file(path);
    } catch (const fc::Error& e) {
        throw fc::DataError("cannot read '" + path.string() + "': " + e.what());
    }
}

void write_output(const std::string& out, const std::string& content) {
    if (out.empty() || out == "-") {
        std::cout << content;
        return;
    }
    const std::filesystem::path path(out);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    fc::detail::write_file_atomic(path, content);
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    size_t start = 0;
    while (start <= s.size()) {
        const size_t comma = s.find(',', start);
        const std::string piece =
            s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!piece.empty()) out.push_back(piece);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

// Accepts either a bare dataset id (all annotated sensitive attributes, at
// most two) or an explicit "<dataset>::<attr>[+<attr>]" scenario id.
fc::Scenario resolve_scenario(const fc::CorpusRegistry& registry, const std::string& id) {
    std::string dataset_id = id;
    std::vector<std::string> attrs;
    const size_t sep = id.find("::");
    if (sep != std::string::npos) {
        dataset_id = id.substr(0, sep);
        attrs = split_commas(id.substr(sep + 2)); // tolerate commas, canonical is '+'
        if (attrs.size() == 1) {
            std::vector<std::string> plus;
            size_t start = 0;
            const std::string& tail = attrs.front();
            while (start <= tail.size()) {
                const size_t p = tail.find('+', start);
                plus.push_back(tail.substr(start, p == std::string::npos ? std::string::npos
                                                                         : p - start));
                if (p == std::string::npos) break;
                start = p + 1;
            }
            attrs = std::move(plus);
        }
    }
    const fc::DatasetAnnotation& a = registry.find(dataset_id);
    if (attrs.empty()) {
        attrs = a.sensitive_attributes;
        if (attrs.size() > 2)
            throw fc::UsageError("dataset '" + dataset_id + "' has " +
                                 std::to_string(attrs.size()) +
                                 " sensitive attributes; pass an explicit scenario id "
                                 "(<dataset>::<attr> or <dataset>::<attr>+<attr>)");
    }
    for (const auto& attr : attrs)
        if (std::find(a.sensitive_attributes.begin(), a.sensitive_attributes.end(), attr) ==
            a.sensitive_attributes.end())
            throw fc::UsageError("'" + attr + "' is not a sensitive attribute of dataset '" +
                                 dataset_id + "'");
    fc::Scenario s;
    s.dataset_id = dataset_id;
    s.sensitive_selection = attrs;
    s.scenario_id = fc::make_scenario_id(dataset_id, attrs);
    return s;
}

struct TransformFlags {
    bool binarize = false;
    std::string impute;
    std::string target;
    std::string sensitive;
    std::string encode;
    size_t max_cardinality = 0;
};

void add_transform_flags(CLI::App* cmd, TransformFlags& f) {
    cmd->add_flag("--binarize", f.binarize,
                  "binarized preset: impute, intersect sensitive attributes, "
                  "majority/minority grouping, one-hot (overrides the flags below)");
    cmd->add_option("--impute", f.impute, "missing-value policy")
        ->check(CLI::IsMember({"median", "drop-rows", "drop-cols"}));
    cmd->add_option("--target", f.target, "target binarization rule")
        ->check(CLI::IsMember({"auto", "preferable", "majority"}));
    cmd->add_option("--sensitive", f.sensitive, "sensitive attribute handling")
        ->check(CLI::IsMember({"separate", "intersect"}));
    cmd->add_option("--encode", f.encode, "categorical encoding")
        ->check(CLI::IsMember({"onehot", "none"}));
    cmd->add_option("--max-cardinality", f.max_cardinality,
                    "cap on distinct categorical values per column");
}

fc::TransformConfig to_transform_config(const TransformFlags& f) {
    fc::TransformConfig c;
    c.binarized_preset = f.binarize;
    if (f.impute == "median") c.missing = fc::MissingMode::Impute;
    if (f.impute == "drop-rows") c.missing = fc::MissingMode::DropRows;
    if (f.impute == "drop-cols") c.missing = fc::MissingMode::DropCols;
    if (f.target == "auto") c.target_mode = fc::TargetMode::Auto;
    if (f.target == "preferable") c.target_mode = fc::TargetMode::Preferable;
    if (f.target == "majority") c.target_mode = fc::TargetMode::MajorityMinority;
    if (f.sensitive == "separate") c.sensitive_mode = fc::SensitiveMode::Separate;
    if (f.sensitive == "intersect") c.sensitive_mode = fc::SensitiveMode::Intersect;
    if (f.encode == "onehot") c.encoding = fc::Encoding::OneHot;
    if (f.encode == "none") c.encoding = fc::Encoding::None;
    if (f.max_cardinality > 0) c.max_cardinality = f.max_cardinality;
    return c;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"faircorpus: fairness-dataset corpus toolkit"};
    app.require_subcommand(1);

    std::string manifest_path = "manifest.json";
    std::optional<std::string> cache_flag;
    app.add_option("--manifest", manifest_path, "corpus manifest JSON")
        ->envname("FAIRCORPUS_MANIFEST");
    app.add_option("--cache-dir", cache_flag,
                   "download cache (default: FAIRCORPUS_CACHE or ~/.cache/faircorpus)");

    // corpus list | show <id>
    auto* corpus = app.add_subcommand("corpus", "inspect the manifest");
    corpus->require_subcommand(1);
    std::string corpus_out;
    auto* corpus_list = corpus->add_subcommand("list", "print one dataset id per line");
    corpus_list->add_option("--out", corpus_out, "output path (default stdout)");
    std::string corpus_show_id;
    auto* corpus_show = corpus->add_subcommand("show", "print one dataset annotation as JSON");
    corpus_show->add_option("id", corpus_show_id, "dataset id")->required();
    corpus_show->add_option("--out", corpus_out, "output path (default stdout)");

    // fetch <id>
    std::string fetch_id;
    std::string fetch_out;
    auto* cmd_fetch = app.add_subcommand("fetch", "download (or reuse cached) raw artifact");
    cmd_fetch->add_option("id", fetch_id, "dataset id")->required();
    cmd_fetch->add_option("--out", fetch_out, "output path for the fetch record (default stdout)");

    // prepare <id> --out t.csv
    std::string prepare_id;
    std::string prepare_out;
    auto* cmd_prepare = app.add_subcommand("prepare", "fetch, parse and hook-process to CSV");
    cmd_prepare->add_option("id", prepare_id, "dataset id")->required();
    cmd_prepare->add_option("--out", prepare_out, "output CSV path (default stdout)");

    // transform <id> [flags] --out
    std::string transform_id;
    std::string transform_out;
    TransformFlags transform_flags;
    auto* cmd_transform =
        app.add_subcommand("transform", "run the transformation pipeline, write CSV + report");
    cmd_transform->add_option("id", transform_id, "dataset or scenario id")->required();
    add_transform_flags(cmd_transform, transform_flags);
    cmd_transform->add_option("--out", transform_out,
                              "output CSV path; a <out>.report.json sidecar records the "
                              "replayable transform (default stdout, no sidecar)");

    // split <id> --test-size F --seed N --out-train --out-test
    std::string split_id;
    double split_test_size = 0.3;
    uint64_t split_seed = 1;
    std::string split_out_train;
    std::string split_out_test;
    TransformFlags split_flags;
    auto* cmd_split = app.add_subcommand("split", "transform then split into train/test CSVs");
    cmd_split->add_option("id", split_id, "dataset or scenario id")->required();
    cmd_split->add_option("--test-size", split_test_size, "test fraction in (0,1)");
    cmd_split->add_option("--seed", split_seed, "shuffle seed");
    add_transform_flags(cmd_split, split_flags);
    cmd_split->add_option("--out-train", split_out_train, "train CSV path")->required();
    cmd_split->add_option("--out-test", split_out_test, "test CSV path")->required();

    // profile <id> --seed N --out p.json
    std::string profile_id;
    uint64_t profile_seed = 0;
    std::string profile_out;
    auto* cmd_profile =
        app.add_subcommand("profile", "compute metadata features pre/post transformation");
    cmd_profile->add_option("id", profile_id, "dataset or scenario id")->required();
    cmd_profile->add_option("--seed", profile_seed, "seed for the predictability probe");
    cmd_profile->add_option("--out", profile_out, "output JSON path (default stdout)");

    // bench --scenarios all|<ids> --methods list --seeds n --out-dir
    std::vector<std::string> bench_scenarios{"all"};
    std::string bench_methods;
    uint64_t bench_seeds = 5;
    double bench_test_size = 0.3;
    double bench_timeout = 300.0;
    size_t bench_jobs = 1;
    std::string bench_out_dir = ".";
    auto* cmd_bench = app.add_subcommand("bench", "run the benchmark grid, write runs/deltas CSVs");
    cmd_bench->add_option("--scenarios", bench_scenarios,
                          "'all', dataset ids, or scenario ids (comma- or space-separated)");
    cmd_bench->add_option("--methods", bench_methods,
                          "comma-separated method list (default: all registered)");
    cmd_bench->add_option("--seeds", bench_seeds, "number of seeds; runs use 1..n");
    cmd_bench->add_option("--test-size", bench_test_size, "test fraction in (0,1)");
    cmd_bench->add_option("--timeout", bench_timeout, "per-run wall-time limit in seconds");
    cmd_bench->add_option("--jobs", bench_jobs, "parallel workers");
    cmd_bench->add_option("--out-dir", bench_out_dir, "directory for runs.csv and deltas.csv");

    // select --deltas d.csv [--k N] [--tau T] [--constraint country] [--filter permissive] --out
    std::string select_deltas;
    size_t select_k = 0;
    double select_tau = 0.0;
    std::string select_constraint;
    std::string select_filter;
    std::string select_out;
    auto* cmd_select =
        app.add_subcommand("select", "greedily pick a de-correlated scenario collection");
    cmd_select->add_option("--deltas", select_deltas, "delta CSV from bench")->required();
    auto* opt_k = cmd_select->add_option("--k", select_k, "maximum collection size");
    auto* opt_tau =
        cmd_select->add_option("--tau", select_tau, "stop when average correlation reaches tau");
    cmd_select->add_option("--constraint", select_constraint,
                           "additional exclusion group (only: country)")
        ->check(CLI::IsMember({"country"}));
    cmd_select->add_option("--filter", select_filter, "pre-filter scenarios (only: permissive)")
        ->check(CLI::IsMember({"permissive"}));
    cmd_select->add_option("--out", select_out, "output collection JSON (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1; // normalize parse failures to the usage exit code
    }

    try {
        const std::filesystem::path cache_dir = fc::resolve_cache_dir(cache_flag);
        auto registry = [&] { return fc::parse_manifest(read_text_file(manifest_path)); };

        if (*corpus_list) {
            std::string out;
            for (const auto& a : registry().annotations) out += a.dataset_id + "\n";
            write_output(corpus_out, out);
        } else if (*corpus_show) {
            const auto reg = registry();
            write_output(corpus_out, fc::serialize_annotation(reg.find(corpus_show_id)));
        } else if (*cmd_fetch) {
            const auto reg = registry();
            const fc::RawArtifact art = fc::fetch(reg.find(fetch_id), cache_dir);
            nlohmann::ordered_json o;
            o["dataset_id"] = fetch_id;
            o["source_url"] = art.source_url;
            o["cache_path"] = art.cache_path.string();
            o["bytes"] = art.bytes.size();
            o["sha256"] = fc::sha256_hex(art.bytes);
            o["from_cache"] = art.from_cache;
            write_output(fetch_out, o.dump(2) + "\n");
        } else if (*cmd_prepare) {
            const auto reg = registry();
            write_output(prepare_out, fc::to_csv(fc::load_dataset(reg.find(prepare_id), cache_dir)));
        } else if (*cmd_transform) {
            const auto reg = registry();
            const fc::Scenario scenario = resolve_scenario(reg, transform_id);
            const auto& annotation = reg.find(scenario.dataset_id);
            const fc::Table raw = fc::load_dataset(annotation, cache_dir);
            const fc::TransformResult result = fc::transform_pipeline(
                raw, annotation, scenario, to_transform_config(transform_flags));
            write_output(transform_out, fc::to_csv(result.table));
            if (!transform_out.empty() && transform_out != "-")
                write_output(transform_out + ".report.json",
                             fc::serialize_transform_report(result.report));
        } else if (*cmd_split) {
            const auto reg = registry();
            const fc::Scenario scenario = resolve_scenario(reg, split_id);
            const auto& annotation = reg.find(scenario.dataset_id);
            const fc::Table raw = fc::load_dataset(annotation, cache_dir);
            const fc::TransformResult result =
                fc::transform_pipeline(raw, annotation, scenario, to_transform_config(split_flags));
            const auto [train, test] = fc::train_test_split(result.table, split_test_size, split_seed);
            write_output(split_out_train, fc::to_csv(train));
            write_output(split_out_test, fc::to_csv(test));
        } else if (*cmd_profile) {
            const auto reg = registry();
            const fc::Scenario scenario = resolve_scenario(reg, profile_id);
            const auto& annotation = reg.find(scenario.dataset_id);
            const fc::Table pre = fc::load_dataset(annotation, cache_dir);
            fc::TransformConfig config;
            config.binarized_preset = true;
            const fc::TransformResult post = fc::transform_pipeline(pre, annotation, scenario, config);
            const fc::MetaProfile profile =
                fc::profile_dataset(pre, post.table, annotation, scenario, profile_seed);
            write_output(profile_out, fc::serialize_profile(profile));
        } else if (*cmd_bench) {
            const auto reg = registry();
            fc::BenchmarkPlan plan;
            std::set<std::string> seen;
            auto add_scenario = [&](const fc::Scenario& s) {
                if (seen.insert(s.scenario_id).second) plan.scenarios.push_back(s);
            };
            for (const auto& token_group : bench_scenarios) {
                for (const auto& token : split_commas(token_group)) {
                    if (token == "all") {
                        for (const auto& a : reg.annotations)
                            for (const auto& s : fc::enumerate_scenarios(a)) add_scenario(s);
                    } else if (token.find("::") != std::string::npos) {
                        add_scenario(resolve_scenario(reg, token));
                    } else {
                        for (const auto& s : fc::enumerate_scenarios(reg.find(token)))
                            add_scenario(s);
                    }
                }
            }
            if (bench_methods.empty()) {
                plan.methods = fc::registered_methods();
            } else {
                plan.methods = split_commas(bench_methods);
                const auto known = fc::registered_methods();
                for (const auto& m : plan.methods)
                    if (std::find(known.begin(), known.end(), m) == known.end())
                        throw fc::UsageError("unknown method '" + m + "'");
            }
            if (bench_seeds == 0) throw fc::UsageError("--seeds must be at least 1");
            plan.seeds.clear();
            for (uint64_t s = 1; s <= bench_seeds; ++s) plan.seeds.push_back(s);
            plan.test_fraction = bench_test_size;
            plan.timeout_seconds = bench_timeout;
            plan.jobs = bench_jobs;

            const fc::BenchmarkResult result =
                fc::run_benchmark(plan, reg, fc::make_cache_loader(cache_dir));
            const std::filesystem::path out_dir(bench_out_dir);
            std::filesystem::create_directories(out_dir);
            fc::detail::write_file_atomic(out_dir / "runs.csv", fc::runs_to_csv(result.runs));
            fc::detail::write_file_atomic(out_dir / "deltas.csv",
                                          fc::delta_records_to_csv(result.deltas));
            size_t n_ok = 0, n_error = 0, n_timeout = 0;
            for (const auto& r : result.runs) {
                if (r.status == "ok") ++n_ok;
                else if (r.status == "timeout") ++n_timeout;
                else ++n_error;
            }
            nlohmann::ordered_json o;
            o["runs_csv"] = (out_dir / "runs.csv").string();
            o["deltas_csv"] = (out_dir / "deltas.csv").string();
            o["records"] = result.runs.size();
            o["ok"] = n_ok;
            o["error"] = n_error;
            o["timeout"] = n_timeout;
            std::cout << o.dump(2) << "\n";
        } else if (*cmd_select) {
            const auto reg = registry();
            const auto records = fc::parse_delta_csv(read_text_file(select_deltas));
            const fc::DeltaMatrix matrix = fc::build_delta_matrix(records);
            const auto attributes = fc::scenario_attributes_from_manifest(matrix.scenario_ids, reg);
            fc::SelectionConstraints constraints;
            if (opt_k->count() > 0) constraints.k = select_k;
            if (opt_tau->count() > 0) constraints.tau = select_tau;
            constraints.exclude_same_country = select_constraint == "country";
            if (select_filter == "permissive")
                constraints.predicate = [](const fc::ScenarioAttributes& a) {
                    return a.has_license && a.license_permissive;
                };
            const fc::Collection collection =
                fc::select_collection(matrix, attributes, constraints);
            write_output(select_out, fc::serialize_collection(collection));
        }
    } catch (const fc::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
