#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "faircorpus/error.hpp"
#include "faircorpus/manifest.hpp"
#include "faircorpus/table.hpp"

namespace faircorpus {

enum class FeatureScope { Essential, All };
enum class MissingMode { DropCols, DropRows, Impute };
enum class TargetMode { Preferable, MajorityMinority, Auto };
enum class SensitiveMode { Separate, Intersect };
enum class SensitiveGrouping { AsIs, MajorityMinority };
enum class Encoding { OneHot, None };

struct TransformConfig {
    FeatureScope feature_scope = FeatureScope::Essential;
    MissingMode missing = MissingMode::Impute;
    TargetMode target_mode = TargetMode::Auto;
    SensitiveMode sensitive_mode = SensitiveMode::Separate;
    SensitiveGrouping sensitive_grouping = SensitiveGrouping::AsIs;
    Encoding encoding = Encoding::OneHot;
    size_t max_cardinality = 200;
    bool binarized_preset = false;

    bool operator==(const TransformConfig&) const = default;

    // The preset pins the settings needed for a fully numeric, binary-group
    // output; the remaining fields keep their configured values.
    TransformConfig effective() const {
        TransformConfig c = *this;
        if (c.binarized_preset) {
            c.missing = MissingMode::Impute;
            c.sensitive_mode = SensitiveMode::Intersect;
            c.sensitive_grouping = SensitiveGrouping::MajorityMinority;
            c.encoding = Encoding::OneHot;
        }
        return c;
    }
};

struct ImputedColumn {
    std::string column;
    bool numeric = false;
    double number = 0.0;      // fill when numeric
    std::string category;     // fill otherwise

    bool operator==(const ImputedColumn&) const = default;
};

struct KeptColumn {
    std::string name;
    Role role = Role::Feature;

    bool operator==(const KeptColumn&) const = default;
};

// Complete record of one pipeline application. Carries enough to replay the
// exact transform on the same input without re-deriving any statistics.
struct TransformReport {
    TransformConfig config;
    std::vector<KeptColumn> kept_columns;   // scope output, in order
    std::vector<std::string> dropped_columns;
    size_t dropped_row_count = 0;
    std::vector<ImputedColumn> imputed_columns;
    std::string target_column_out;
    std::map<std::string, int> target_value_map;
    std::optional<std::string> intersect_column;
    std::vector<std::string> intersect_sources;
    std::vector<std::string> sensitive_columns_out;
    std::map<std::string, std::map<std::string, std::string>> sensitive_value_map;
    std::vector<std::string> degenerate_sensitive;
    std::map<std::string, std::vector<std::string>> category_maps; // applied vocabularies
    std::vector<std::string> encoded_columns;

    bool operator==(const TransformReport&) const = default;
};

namespace detail {

inline std::string intersect_column_name(const std::vector<std::string>& attrs) {
    std::string n;
    for (size_t i = 0; i < attrs.size(); ++i) {
        if (i) n += "\xc3\x97"; // UTF-8 multiplication sign
        n += attrs[i];
    }
    return n;
}

inline std::string intersect_cell(const std::string& a, const std::string& b) {
    return a + "\xc3\x97" + b;
}

inline bool is_indicator_of(const std::string& name, const std::string& base) {
    return name.size() > base.size() + 1 && name.compare(0, base.size(), base) == 0 &&
           name[base.size()] == '=';
}

inline Column to_float_column(const Column& src) {
    Column out = src;
    out.dtype = Dtype::Float;
    for (size_t i = 0; i < out.values.size(); ++i)
        out.values[i] = src.is_missing(i) ? 0.0 : src.number_at(i);
    out.categories.clear();
    return out;
}

inline Column to_categorical_strings(const Column& src) {
    Column out;
    out.name = src.name;
    out.dtype = Dtype::Categorical;
    out.role = src.role;
    out.missing = src.missing;
    out.values.reserve(src.size());
    for (size_t i = 0; i < src.size(); ++i)
        out.values.emplace_back(src.is_missing(i) ? std::string() : src.string_at(i));
    return out;
}

} // namespace detail

// Stage 1: restrict the table to the columns that matter for the scenario
// and assign roles. Essential scope keeps the annotated feature set plus the
// scenario's sensitive attributes and the target; "all" keeps every column.
// Indicator columns derived from in-scope names and a pre-existing
// intersection column are recognized so that re-running the pipeline on its
// own output keeps the same columns.
inline Table scope_features(const Table& input, const DatasetAnnotation& annotation,
                            const Scenario& scenario, FeatureScope scope,
                            TransformReport* report = nullptr) {
    std::set<std::string> scoped;
    const auto all_names = input.column_names();
    switch (annotation.feature_selector.mode) {
        case FeatureSelector::Mode::AllExceptTarget:
            scoped.insert(all_names.begin(), all_names.end());
            break;
        case FeatureSelector::Mode::Include:
            scoped.insert(annotation.feature_selector.columns.begin(),
                          annotation.feature_selector.columns.end());
            break;
        case FeatureSelector::Mode::Exclude: {
            scoped.insert(all_names.begin(), all_names.end());
            for (const auto& c : annotation.feature_selector.columns) scoped.erase(c);
            break;
        }
    }
    for (const auto& attr : scenario.sensitive_selection) scoped.insert(attr);
    scoped.insert(annotation.target_column);

    const std::string ix_name = scenario.sensitive_selection.size() == 2
                                    ? detail::intersect_column_name(scenario.sensitive_selection)
                                    : std::string();
    const bool have_ix = !ix_name.empty() && input.has_column(ix_name);

    const std::set<std::string> sens(scenario.sensitive_selection.begin(),
                                     scenario.sensitive_selection.end());
    auto keep = [&](const std::string& name) {
        if (scope == FeatureScope::All) return true;
        if (scoped.count(name)) return true;
        if (!ix_name.empty() && name == ix_name) return true;
        for (const auto& base : scoped)
            if (detail::is_indicator_of(name, base)) return true;
        return false;
    };
    auto role_for = [&](const std::string& name) {
        if (name == annotation.target_column) return Role::Target;
        if (have_ix && name == ix_name) return Role::Sensitive;
        if (sens.count(name)) return have_ix ? Role::Other : Role::Sensitive;
        for (const auto& attr : sens)
            if (detail::is_indicator_of(name, attr)) return Role::Other;
        return Role::Feature;
    };

    std::vector<Column> cols;
    for (const auto& c : input.columns()) {
        if (!keep(c.name)) {
            if (report) report->dropped_columns.push_back(c.name);
            continue;
        }
        Column kept = c;
        kept.role = role_for(c.name);
        if (report) report->kept_columns.push_back({kept.name, kept.role});
        cols.push_back(std::move(kept));
    }
    Table out;
    out.reset(std::move(cols));
    return out;
}

// Stage 2: eliminate missing cells by dropping columns, dropping rows, or
// imputation (median for numeric columns, a literal "MISSING" category for
// everything else).
inline Table handle_missing(const Table& input, MissingMode mode,
                            TransformReport* report = nullptr) {
    if (mode == MissingMode::DropCols) {
        std::vector<Column> cols;
        for (const auto& c : input.columns()) {
            if (c.missing_count() > 0) {
                if (report) report->dropped_columns.push_back(c.name);
                continue;
            }
            cols.push_back(c);
        }
        Table out;
        out.reset(std::move(cols));
        return out;
    }

    if (mode == MissingMode::DropRows) {
        std::vector<size_t> keep;
        for (size_t r = 0; r < input.n_rows(); ++r) {
            bool any = false;
            for (const auto& c : input.columns())
                if (c.is_missing(r)) { any = true; break; }
            if (!any) keep.push_back(r);
        }
        if (keep.empty() && input.n_rows() > 0)
            throw DataError("dropping rows with missing values leaves an empty table");
        if (report) report->dropped_row_count = input.n_rows() - keep.size();
        return input.select_rows(keep);
    }

    // Impute.
    std::vector<Column> cols;
    for (const auto& c : input.columns()) {
        if (c.missing_count() == 0) {
            cols.push_back(c);
            continue;
        }
        if (is_numeric_dtype(c.dtype)) {
            const double fill = column_median(c);
            Column filled = c;
            if (c.dtype == Dtype::Int && fill != std::floor(fill))
                filled = detail::to_float_column(c); // fractional median widens the column
            for (size_t r = 0; r < filled.size(); ++r) {
                if (!filled.is_missing(r)) continue;
                if (filled.dtype == Dtype::Int)
                    filled.values[r] = static_cast<int64_t>(std::llround(fill));
                else
                    filled.values[r] = fill;
                filled.missing[r] = 0;
            }
            if (report) report->imputed_columns.push_back({c.name, true, fill, ""});
            cols.push_back(std::move(filled));
        } else {
            Column filled = c.dtype == Dtype::Bool ? detail::to_categorical_strings(c) : c;
            for (size_t r = 0; r < filled.size(); ++r) {
                if (!filled.is_missing(r)) continue;
                filled.values[r] = std::string("MISSING");
                filled.missing[r] = 0;
            }
            filled.rebuild_categories();
            if (report) report->imputed_columns.push_back({c.name, false, 0.0, "MISSING"});
            cols.push_back(std::move(filled));
        }
    }
    Table out;
    out.reset(std::move(cols));
    return out;
}

// Stage 3: reduce the target column to {0, 1}. Preferable maps the annotated
// good level to 1; majority/minority maps the modal value to 1; auto picks
// preferable when a good level is annotated. An already-boolean target passes
// through the majority rule unchanged — it is considered binarized.
inline Table binarize_target(const Table& input, const DatasetAnnotation& annotation,
                             TargetMode mode, TransformReport* report = nullptr) {
    if (!input.has_column(annotation.target_column))
        throw DataError("target column '" + annotation.target_column + "' is not present");
    const Column& target = input.column(annotation.target_column);
    if (target.missing_count() > 0)
        throw DataError("target column '" + target.name + "' still has missing values");

    TargetMode resolved = mode;
    if (resolved == TargetMode::Auto)
        resolved = annotation.target_lvl_good ? TargetMode::Preferable : TargetMode::MajorityMinority;

    const auto freq = value_frequencies(target);
    if (freq.size() <= 1)
        throw DataError("degenerate target: column '" + target.name + "' has a single value");

    std::map<std::string, int> mapping;
    if (resolved == TargetMode::Preferable) {
        if (!annotation.target_lvl_good)
            throw DataError("target mode 'preferable' needs an annotated good level for dataset '" +
                            annotation.dataset_id + "'");
        for (const auto& [value, count] : freq)
            mapping[value] = value == *annotation.target_lvl_good ? 1 : 0;
    } else if (target.dtype == Dtype::Bool) {
        for (const auto& [value, count] : freq) mapping[value] = value == "1" ? 1 : 0;
    } else {
        const std::string& modal = freq.front().first;
        for (const auto& [value, count] : freq) mapping[value] = value == modal ? 1 : 0;
    }

    Column out;
    out.name = target.name;
    out.dtype = Dtype::Bool;
    out.role = Role::Target;
    out.missing.assign(target.size(), 0);
    bool any0 = false, any1 = false;
    for (size_t r = 0; r < target.size(); ++r) {
        const int v = mapping.at(target.string_at(r));
        out.values.emplace_back(v == 1);
        (v == 1 ? any1 : any0) = true;
    }
    if (!any0 || !any1)
        throw DataError("degenerate target: mapping leaves a single class in '" + target.name + "'");

    if (report) {
        report->target_column_out = out.name;
        report->target_value_map = mapping;
    }
    std::vector<Column> cols;
    for (const auto& c : input.columns())
        cols.push_back(c.name == out.name ? out : c);
    Table t;
    t.reset(std::move(cols));
    return t;
}

namespace detail {

inline Column group_majority_minority(const Column& src, TransformReport* report) {
    const auto freq = value_frequencies(src);
    Column out = to_categorical_strings(src);
    std::map<std::string, std::string> mapping;
    if (freq.size() <= 1) {
        for (const auto& [value, count] : freq) mapping[value] = "majority";
        if (report) report->degenerate_sensitive.push_back(src.name);
    } else {
        const std::string& modal = freq.front().first;
        for (const auto& [value, count] : freq)
            mapping[value] = value == modal ? "majority" : "minority";
    }
    for (size_t r = 0; r < out.size(); ++r) {
        if (out.is_missing(r)) continue;
        out.values[r] = mapping.at(std::get<std::string>(out.values[r]));
    }
    out.rebuild_categories();
    if (report) report->sensitive_value_map[src.name] = std::move(mapping);
    return out;
}

} // namespace detail

// Stage 4: combine two sensitive attributes into their intersection (new
// column "a×b" with cell values "v1×v2"; the originals stay with role other)
// and/or collapse sensitive values into majority/minority groups. A column
// with a single group maps entirely to "majority" and is flagged degenerate
// rather than rejected.
inline Table binarize_sensitive(const Table& input, const Scenario& scenario, SensitiveMode mode,
                                SensitiveGrouping grouping, TransformReport* report = nullptr) {
    std::vector<Column> cols = input.columns();

    std::vector<std::string> sensitive_names;
    const bool want_intersect =
        mode == SensitiveMode::Intersect && scenario.sensitive_selection.size() == 2;
    const std::string ix_name =
        want_intersect ? detail::intersect_column_name(scenario.sensitive_selection) : std::string();

    bool ix_exists = false;
    if (want_intersect) {
        for (const auto& c : cols)
            if (c.name == ix_name && c.role == Role::Sensitive) ix_exists = true;
    }

    if (want_intersect && !ix_exists) {
        const Column* a = nullptr;
        const Column* b = nullptr;
        size_t first_pos = cols.size();
        for (size_t i = 0; i < cols.size(); ++i) {
            if (cols[i].name == scenario.sensitive_selection[0]) {
                a = &cols[i];
                first_pos = std::min(first_pos, i);
            }
            if (cols[i].name == scenario.sensitive_selection[1]) {
                b = &cols[i];
                first_pos = std::min(first_pos, i);
            }
        }
        for (const auto& attr : scenario.sensitive_selection)
            if (!input.has_column(attr))
                throw DataError("sensitive column '" + attr + "' is not present");

        Column ix;
        ix.name = ix_name;
        ix.dtype = Dtype::Categorical;
        ix.role = Role::Sensitive;
        ix.values.reserve(a->size());
        ix.missing.reserve(a->size());
        for (size_t r = 0; r < a->size(); ++r) {
            const bool miss = a->is_missing(r) || b->is_missing(r);
            ix.missing.push_back(miss ? 1 : 0);
            ix.values.emplace_back(miss ? std::string()
                                        : detail::intersect_cell(a->string_at(r), b->string_at(r)));
        }
        ix.rebuild_categories();
        for (auto& c : cols)
            if (c.name == scenario.sensitive_selection[0] || c.name == scenario.sensitive_selection[1])
                c.role = Role::Other;
        cols.insert(cols.begin() + static_cast<std::ptrdiff_t>(first_pos), std::move(ix));
        sensitive_names.push_back(ix_name);
        if (report) {
            report->intersect_column = ix_name;
            report->intersect_sources = scenario.sensitive_selection;
        }
    } else if (want_intersect) {
        sensitive_names.push_back(ix_name);
        if (report) {
            report->intersect_column = ix_name;
            report->intersect_sources = scenario.sensitive_selection;
        }
    } else {
        for (const auto& attr : scenario.sensitive_selection) {
            if (!input.has_column(attr))
                throw DataError("sensitive column '" + attr + "' is not present");
            sensitive_names.push_back(attr);
        }
        for (auto& c : cols)
            for (const auto& attr : sensitive_names)
                if (c.name == attr) c.role = Role::Sensitive;
    }

    if (grouping == SensitiveGrouping::MajorityMinority) {
        for (auto& c : cols)
            if (std::find(sensitive_names.begin(), sensitive_names.end(), c.name) !=
                sensitive_names.end())
                c = detail::group_majority_minority(c, report);
    }

    if (report) report->sensitive_columns_out = sensitive_names;
    Table out;
    out.reset(std::move(cols));
    return out;
}

// Stage 5: cap categorical cardinality, then expand non-sensitive
// categorical/text columns into one boolean indicator per retained value.
// A column above the cap keeps its max_cardinality−1 most frequent values
// (ties lexicographic) and folds every other value into "OTHER", so the
// distinct count including OTHER equals the cap exactly.
inline Table encode_categoricals(const Table& input, size_t max_cardinality,
                                 TransformReport* report = nullptr) {
    if (max_cardinality == 0) throw UsageError("max_cardinality must be positive");
    std::vector<Column> out_cols;
    for (const auto& c : input.columns()) {
        if (c.dtype != Dtype::Categorical && c.dtype != Dtype::Text) {
            out_cols.push_back(c);
            continue;
        }
        const auto freq = value_frequencies(c);
        std::vector<std::string> vocab;
        bool capped = false;
        if (freq.size() > max_cardinality) {
            capped = true;
            for (size_t i = 0; i + 1 < max_cardinality; ++i) vocab.push_back(freq[i].first);
            vocab.push_back("OTHER");
        } else {
            for (const auto& [value, count] : freq) vocab.push_back(value);
        }

        Column reduced = c;
        if (capped) {
            const std::set<std::string> retained(vocab.begin(), vocab.end());
            for (size_t r = 0; r < reduced.size(); ++r) {
                if (reduced.is_missing(r)) continue;
                const std::string v = reduced.string_at(r);
                if (!retained.count(v)) reduced.values[r] = std::string("OTHER");
            }
            reduced.rebuild_categories();
        }
        if (report) report->category_maps[c.name] = vocab;

        if (c.role == Role::Sensitive || c.role == Role::Target) {
            out_cols.push_back(std::move(reduced));
            continue;
        }

        for (const auto& value : vocab) {
            Column ind;
            ind.name = c.name + "=" + value;
            ind.dtype = Dtype::Bool;
            ind.role = c.role;
            ind.values.reserve(reduced.size());
            ind.missing = reduced.missing;
            for (size_t r = 0; r < reduced.size(); ++r)
                ind.values.emplace_back(!reduced.is_missing(r) && reduced.string_at(r) == value);
            out_cols.push_back(std::move(ind));
        }
        if (report) report->encoded_columns.push_back(c.name);
    }
    Table out;
    out.reset(std::move(out_cols));
    return out;
}

struct TransformResult {
    Table table;
    TransformReport report;
};

// The full pipeline: scope → missing → target → sensitive → encode. Errors
// from a stage are re-raised tagged with the stage name.
inline TransformResult transform_pipeline(const Table& input, const DatasetAnnotation& annotation,
                                          const Scenario& scenario, TransformConfig raw_config) {
    const TransformConfig config = raw_config.effective();
    TransformResult result;
    result.report.config = config;
    TransformReport* rep = &result.report;

    auto run = [](const char* name, auto&& fn) -> Table {
        try {
            return fn();
        } catch (const Error& e) {
            throw Error(e.kind(), std::string("transform stage '") + name + "': " + e.what());
        }
    };

    Table t = run("scope", [&] {
        return scope_features(input, annotation, scenario, config.feature_scope, rep);
    });
    t = run("missing", [&] { return handle_missing(t, config.missing, rep); });
    t = run("target", [&] { return binarize_target(t, annotation, config.target_mode, rep); });
    t = run("sensitive", [&] {
        return binarize_sensitive(t, scenario, config.sensitive_mode, config.sensitive_grouping,
                                  rep);
    });
    if (config.encoding == Encoding::OneHot)
        t = run("encode", [&] { return encode_categoricals(t, config.max_cardinality, rep); });
    result.table = std::move(t);
    return result;
}

// Re-apply a recorded transform to the same input, reusing every recorded
// decision (fills, value maps, vocabularies) instead of re-deriving them.
inline Table replay_transform(const Table& input, const TransformReport& report) {
    const std::set<std::string> dropped(report.dropped_columns.begin(),
                                        report.dropped_columns.end());
    std::vector<Column> cols;
    for (const auto& kc : report.kept_columns) {
        if (dropped.count(kc.name)) continue;
        Column c = input.column(kc.name);
        c.role = kc.role;
        cols.push_back(std::move(c));
    }

    // Rows.
    if (report.config.missing == MissingMode::DropRows) {
        size_t n = cols.empty() ? 0 : cols.front().size();
        std::vector<size_t> keep;
        for (size_t r = 0; r < n; ++r) {
            bool any = false;
            for (const auto& c : cols)
                if (c.is_missing(r)) { any = true; break; }
            if (!any) keep.push_back(r);
        }
        if (n - keep.size() != report.dropped_row_count)
            throw DataError("replay input does not match the recorded transform");
        std::vector<Column> filtered;
        for (const auto& c : cols) {
            Column nc;
            nc.name = c.name;
            nc.dtype = c.dtype;
            nc.role = c.role;
            nc.categories = c.categories;
            for (size_t r : keep) {
                nc.values.push_back(c.values[r]);
                nc.missing.push_back(c.missing[r]);
            }
            filtered.push_back(std::move(nc));
        }
        cols = std::move(filtered);
    }

    // Fills.
    for (const auto& imp : report.imputed_columns) {
        for (auto& c : cols) {
            if (c.name != imp.column) continue;
            if (imp.numeric) {
                if (c.dtype == Dtype::Int && imp.number != std::floor(imp.number))
                    c = detail::to_float_column(c);
                for (size_t r = 0; r < c.size(); ++r) {
                    if (!c.is_missing(r)) continue;
                    if (c.dtype == Dtype::Int)
                        c.values[r] = static_cast<int64_t>(std::llround(imp.number));
                    else
                        c.values[r] = imp.number;
                    c.missing[r] = 0;
                }
            } else {
                if (c.dtype == Dtype::Bool) c = detail::to_categorical_strings(c);
                for (size_t r = 0; r < c.size(); ++r) {
                    if (!c.is_missing(r)) continue;
                    c.values[r] = imp.category;
                    c.missing[r] = 0;
                }
                c.rebuild_categories();
            }
        }
    }

    // Target.
    if (!report.target_column_out.empty()) {
        for (auto& c : cols) {
            if (c.name != report.target_column_out) continue;
            Column mapped;
            mapped.name = c.name;
            mapped.dtype = Dtype::Bool;
            mapped.role = Role::Target;
            mapped.missing.assign(c.size(), 0);
            for (size_t r = 0; r < c.size(); ++r) {
                auto it = report.target_value_map.find(c.string_at(r));
                if (it == report.target_value_map.end())
                    throw DataError("replay input has unseen target value '" + c.string_at(r) + "'");
                mapped.values.emplace_back(it->second == 1);
            }
            c = std::move(mapped);
        }
    }

    // Sensitive intersection.
    if (report.intersect_column) {
        bool present = false;
        for (const auto& c : cols) present = present || c.name == *report.intersect_column;
        if (!present) {
            const Column* a = nullptr;
            const Column* b = nullptr;
            size_t first_pos = cols.size();
            for (size_t i = 0; i < cols.size(); ++i) {
                if (cols[i].name == report.intersect_sources.at(0)) {
                    a = &cols[i];
                    first_pos = std::min(first_pos, i);
                }
                if (cols[i].name == report.intersect_sources.at(1)) {
                    b = &cols[i];
                    first_pos = std::min(first_pos, i);
                }
            }
            if (!a || !b) throw DataError("replay input lacks the recorded sensitive columns");
            Column ix;
            ix.name = *report.intersect_column;
            ix.dtype = Dtype::Categorical;
            ix.role = Role::Sensitive;
            for (size_t r = 0; r < a->size(); ++r) {
                const bool miss = a->is_missing(r) || b->is_missing(r);
                ix.missing.push_back(miss ? 1 : 0);
                ix.values.emplace_back(
                    miss ? std::string() : detail::intersect_cell(a->string_at(r), b->string_at(r)));
            }
            ix.rebuild_categories();
            for (auto& c : cols)
                if (c.name == report.intersect_sources[0] || c.name == report.intersect_sources[1])
                    c.role = Role::Other;
            cols.insert(cols.begin() + static_cast<std::ptrdiff_t>(first_pos), std::move(ix));
        }
    }
    for (const auto& name : report.sensitive_columns_out)
        for (auto& c : cols)
            if (c.name == name) c.role = Role::Sensitive;

    // Sensitive grouping.
    for (const auto& [name, mapping] : report.sensitive_value_map) {
        for (auto& c : cols) {
            if (c.name != name) continue;
            Column mapped = detail::to_categorical_strings(c);
            for (size_t r = 0; r < mapped.size(); ++r) {
                if (mapped.is_missing(r)) continue;
                auto it = mapping.find(std::get<std::string>(mapped.values[r]));
                if (it == mapping.end())
                    throw DataError("replay input has unseen sensitive value in '" + name + "'");
                mapped.values[r] = it->second;
            }
            mapped.rebuild_categories();
            c = std::move(mapped);
        }
    }

    // Encoding.
    if (report.config.encoding == Encoding::OneHot) {
        const std::set<std::string> encoded(report.encoded_columns.begin(),
                                            report.encoded_columns.end());
        std::vector<Column> out_cols;
        for (auto& c : cols) {
            auto vocab_it = report.category_maps.find(c.name);
            if (vocab_it == report.category_maps.end()) {
                out_cols.push_back(std::move(c));
                continue;
            }
            const auto& vocab = vocab_it->second;
            const std::set<std::string> retained(vocab.begin(), vocab.end());
            const bool has_other = retained.count("OTHER") != 0;
            Column reduced = std::move(c);
            for (size_t r = 0; r < reduced.size(); ++r) {
                if (reduced.is_missing(r)) continue;
                const std::string v = reduced.string_at(r);
                if (!retained.count(v)) {
                    if (!has_other)
                        throw DataError("replay input has unseen category '" + v + "' in '" +
                                        reduced.name + "'");
                    reduced.values[r] = std::string("OTHER");
                }
            }
            if (reduced.dtype == Dtype::Categorical) reduced.rebuild_categories();
            if (!encoded.count(reduced.name)) {
                out_cols.push_back(std::move(reduced));
                continue;
            }
            for (const auto& value : vocab) {
                Column ind;
                ind.name = reduced.name + "=" + value;
                ind.dtype = Dtype::Bool;
                ind.role = reduced.role;
                ind.missing = reduced.missing;
                for (size_t r = 0; r < reduced.size(); ++r)
                    ind.values.emplace_back(!reduced.is_missing(r) && reduced.string_at(r) == value);
                out_cols.push_back(std::move(ind));
            }
        }
        cols = std::move(out_cols);
    }

    Table out;
    out.reset(std::move(cols));
    return out;
}

// --- report (de)serialization -----------------------------------------------

namespace detail {

inline const char* feature_scope_name(FeatureScope v) {
    return v == FeatureScope::Essential ? "essential" : "all";
}
inline const char* missing_mode_name(MissingMode v) {
    switch (v) {
        case MissingMode::DropCols: return "drop_cols";
        case MissingMode::DropRows: return "drop_rows";
        case MissingMode::Impute: return "impute";
    }
    return "?";
}
inline const char* target_mode_name(TargetMode v) {
    switch (v) {
        case TargetMode::Preferable: return "preferable";
        case TargetMode::MajorityMinority: return "majority_minority";
        case TargetMode::Auto: return "auto";
    }
    return "?";
}
inline const char* sensitive_mode_name(SensitiveMode v) {
    return v == SensitiveMode::Separate ? "separate" : "intersect";
}
inline const char* grouping_name(SensitiveGrouping v) {
    return v == SensitiveGrouping::AsIs ? "as_is" : "majority_minority";
}
inline const char* encoding_name(Encoding v) { return v == Encoding::OneHot ? "onehot" : "none"; }

template <typename Enum, typename NameFn>
Enum enum_from_name(const std::string& s, NameFn name_of, std::initializer_list<Enum> all,
                    const char* what) {
    for (Enum v : all)
        if (s == name_of(v)) return v;
    throw DataError(std::string("unknown ") + what + " '" + s + "'");
}

inline Role role_from_name(const std::string& s) {
    for (Role r : {Role::Feature, Role::Sensitive, Role::Target, Role::Other})
        if (s == role_name(r)) return r;
    throw DataError("unknown column role '" + s + "'");
}

} // namespace detail

inline nlohmann::ordered_json transform_config_to_json(const TransformConfig& c) {
    nlohmann::ordered_json o;
    o["feature_scope"] = detail::feature_scope_name(c.feature_scope);
    o["missing"] = detail::missing_mode_name(c.missing);
    o["target_mode"] = detail::target_mode_name(c.target_mode);
    o["sensitive_mode"] = detail::sensitive_mode_name(c.sensitive_mode);
    o["sensitive_grouping"] = detail::grouping_name(c.sensitive_grouping);
    o["encoding"] = detail::encoding_name(c.encoding);
    o["max_cardinality"] = c.max_cardinality;
    o["binarized_preset"] = c.binarized_preset;
    return o;
}

inline TransformConfig transform_config_from_json(const nlohmann::ordered_json& o) {
    TransformConfig c;
    using namespace detail;
    c.feature_scope = enum_from_name(o.at("feature_scope").get<std::string>(), feature_scope_name,
                                     {FeatureScope::Essential, FeatureScope::All}, "feature scope");
    c.missing = enum_from_name(o.at("missing").get<std::string>(), missing_mode_name,
                               {MissingMode::DropCols, MissingMode::DropRows, MissingMode::Impute},
                               "missing mode");
    c.target_mode = enum_from_name(o.at("target_mode").get<std::string>(), target_mode_name,
                                   {TargetMode::Preferable, TargetMode::MajorityMinority,
                                    TargetMode::Auto},
                                   "target mode");
    c.sensitive_mode = enum_from_name(o.at("sensitive_mode").get<std::string>(),
                                      sensitive_mode_name,
                                      {SensitiveMode::Separate, SensitiveMode::Intersect},
                                      "sensitive mode");
    c.sensitive_grouping = enum_from_name(
        o.at("sensitive_grouping").get<std::string>(), grouping_name,
        {SensitiveGrouping::AsIs, SensitiveGrouping::MajorityMinority}, "sensitive grouping");
    c.encoding = enum_from_name(o.at("encoding").get<std::string>(), encoding_name,
                                {Encoding::OneHot, Encoding::None}, "encoding");
    c.max_cardinality = o.at("max_cardinality").get<size_t>();
    c.binarized_preset = o.at("binarized_preset").get<bool>();
    return c;
}

inline nlohmann::ordered_json transform_report_to_json(const TransformReport& r) {
    nlohmann::ordered_json o;
    o["config"] = transform_config_to_json(r.config);
    o["kept_columns"] = nlohmann::ordered_json::array();
    for (const auto& kc : r.kept_columns)
        o["kept_columns"].push_back({{"name", kc.name}, {"role", role_name(kc.role)}});
    o["dropped_columns"] = r.dropped_columns;
    o["dropped_row_count"] = r.dropped_row_count;
    o["imputed_columns"] = nlohmann::ordered_json::array();
    for (const auto& imp : r.imputed_columns) {
        nlohmann::ordered_json e;
        e["column"] = imp.column;
        e["kind"] = imp.numeric ? "number" : "category";
        if (imp.numeric)
            e["value"] = imp.number;
        else
            e["value"] = imp.category;
        o["imputed_columns"].push_back(std::move(e));
    }
    o["target_column_out"] = r.target_column_out;
    o["target_value_map"] = r.target_value_map;
    if (r.intersect_column) {
        o["intersect_column"] = *r.intersect_column;
        o["intersect_sources"] = r.intersect_sources;
    }
    o["sensitive_columns_out"] = r.sensitive_columns_out;
    o["sensitive_value_map"] = r.sensitive_value_map;
    o["degenerate_sensitive"] = r.degenerate_sensitive;
    o["category_maps"] = r.category_maps;
    o["encoded_columns"] = r.encoded_columns;
    return o;
}

inline TransformReport transform_report_from_json(const nlohmann::ordered_json& o) {
    TransformReport r;
    r.config = transform_config_from_json(o.at("config"));
    for (const auto& kc : o.at("kept_columns"))
        r.kept_columns.push_back({kc.at("name").get<std::string>(),
                                  detail::role_from_name(kc.at("role").get<std::string>())});
    r.dropped_columns = o.at("dropped_columns").get<std::vector<std::string>>();
    r.dropped_row_count = o.at("dropped_row_count").get<size_t>();
    for (const auto& e : o.at("imputed_columns")) {
        ImputedColumn imp;
        imp.column = e.at("column").get<std::string>();
        imp.numeric = e.at("kind").get<std::string>() == "number";
        if (imp.numeric)
            imp.number = e.at("value").get<double>();
        else
            imp.category = e.at("value").get<std::string>();
        r.imputed_columns.push_back(std::move(imp));
    }
    r.target_column_out = o.at("target_column_out").get<std::string>();
    r.target_value_map = o.at("target_value_map").get<std::map<std::string, int>>();
    if (o.contains("intersect_column")) {
        r.intersect_column = o.at("intersect_column").get<std::string>();
        r.intersect_sources = o.at("intersect_sources").get<std::vector<std::string>>();
    }
    r.sensitive_columns_out = o.at("sensitive_columns_out").get<std::vector<std::string>>();
    r.sensitive_value_map =
        o.at("sensitive_value_map")
            .get<std::map<std::string, std::map<std::string, std::string>>>();
    r.degenerate_sensitive = o.at("degenerate_sensitive").get<std::vector<std::string>>();
    r.category_maps = o.at("category_maps").get<std::map<std::string, std::vector<std::string>>>();
    r.encoded_columns = o.at("encoded_columns").get<std::vector<std::string>>();
    return r;
}

inline std::string serialize_transform_report(const TransformReport& r) {
    return transform_report_to_json(r).dump(2) + "\n";
}

inline TransformReport parse_transform_report(const std::string& text) {
    try {
        return transform_report_from_json(nlohmann::ordered_json::parse(text));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed transform report: ") + e.what());
    }
}

} // namespace faircorpus
