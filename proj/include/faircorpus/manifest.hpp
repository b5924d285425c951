#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "faircorpus/error.hpp"

namespace faircorpus {

enum class Accessibility { Public, Manual, Restricted };
enum class FileFormat { Delimited, FixedWidth };

inline const char* accessibility_name(Accessibility a) {
    switch (a) {
        case Accessibility::Public: return "public";
        case Accessibility::Manual: return "manual";
        case Accessibility::Restricted: return "restricted";
    }
    return "?";
}

inline const char* file_format_name(FileFormat f) {
    return f == FileFormat::Delimited ? "delimited" : "fixed_width";
}

// Which columns count as features. Mirrors the annotation convention:
// an explicit include list, an exclude list, or everything but the target.
struct FeatureSelector {
    enum class Mode { Include, Exclude, AllExceptTarget };
    Mode mode = Mode::AllExceptTarget;
    std::vector<std::string> columns;

    bool operator==(const FeatureSelector&) const = default;
};

// Machine-readable record of one corpus entry: how to acquire the file,
// how to parse it, and which columns play which fairness role.
struct DatasetAnnotation {
    std::string dataset_id;
    std::string dataset_name;
    std::optional<std::string> base_dataset_name;
    std::optional<std::string> variant_id;
    std::optional<std::string> download_url;
    Accessibility is_accessible = Accessibility::Public;
    FileFormat format = FileFormat::Delimited;
    std::optional<char> delimiter;
    std::optional<std::vector<std::string>> colnames;
    std::optional<std::vector<int>> field_widths; // fixed-width layouts
    std::optional<std::string> archive_member;
    std::optional<std::string> processing_hook;
    std::vector<std::string> sensitive_attributes;
    std::map<std::string, std::vector<std::string>> sensitive_categories;
    FeatureSelector feature_selector;
    std::string target_column;
    std::optional<std::string> target_lvl_good;
    std::optional<std::string> target_lvl_bad;
    std::optional<std::string> license;
    bool license_permissive = false;
    std::vector<std::string> country{"n/a"}; // ISO3 codes, or "n/a"
    std::string domain;
    std::optional<int64_t> sample_size_hint;
    std::optional<std::string> sha256;            // of the downloaded artifact
    std::optional<std::vector<std::string>> na_tokens; // per-dataset NA override
    // Free-text annotation fields, carried through untouched.
    std::map<std::string, std::string> passthrough;
    // Unknown keys kept under lenient parsing.
    nlohmann::ordered_json extras = nlohmann::ordered_json::object();

    bool operator==(const DatasetAnnotation& o) const {
        return dataset_id == o.dataset_id && dataset_name == o.dataset_name &&
               base_dataset_name == o.base_dataset_name && variant_id == o.variant_id &&
               download_url == o.download_url && is_accessible == o.is_accessible &&
               format == o.format && delimiter == o.delimiter && colnames == o.colnames &&
               field_widths == o.field_widths && archive_member == o.archive_member &&
               processing_hook == o.processing_hook &&
               sensitive_attributes == o.sensitive_attributes &&
               sensitive_categories == o.sensitive_categories &&
               feature_selector == o.feature_selector && target_column == o.target_column &&
               target_lvl_good == o.target_lvl_good && target_lvl_bad == o.target_lvl_bad &&
               license == o.license && license_permissive == o.license_permissive &&
               country == o.country && domain == o.domain &&
               sample_size_hint == o.sample_size_hint && sha256 == o.sha256 &&
               na_tokens == o.na_tokens && passthrough == o.passthrough && extras == o.extras;
    }

    bool has_country() const {
        if (country.empty()) return false;
        for (const auto& c : country)
            if (c != "n/a") return true;
        return false;
    }
};

// One benchmarking unit: a dataset paired with one or two of its sensitive
// attributes.
struct Scenario {
    std::string scenario_id;
    std::string dataset_id;
    std::vector<std::string> sensitive_selection;

    bool operator==(const Scenario&) const = default;
};

inline std::string make_scenario_id(const std::string& dataset_id,
                                    const std::vector<std::string>& attrs) {
    std::string id = dataset_id + "::";
    for (size_t i = 0; i < attrs.size(); ++i) {
        if (i) id += '+';
        id += attrs[i];
    }
    return id;
}

inline std::string scenario_dataset_id(const std::string& scenario_id) {
    const auto pos = scenario_id.find("::");
    if (pos == std::string::npos)
        throw DataError("malformed scenario id '" + scenario_id + "'");
    return scenario_id.substr(0, pos);
}

struct CorpusRegistry {
    std::string schema_version = "1";
    std::vector<DatasetAnnotation> annotations;

    bool operator==(const CorpusRegistry&) const = default;

    const DatasetAnnotation& find(const std::string& dataset_id) const {
        for (const auto& a : annotations)
            if (a.dataset_id == dataset_id) return a;
        throw DataError("unknown dataset id '" + dataset_id + "'");
    }

    bool contains(const std::string& dataset_id) const {
        for (const auto& a : annotations)
            if (a.dataset_id == dataset_id) return true;
        return false;
    }
};

namespace detail {

inline const std::set<std::string>& known_annotation_keys() {
    static const std::set<std::string> keys = {
        "dataset_id", "dataset_name", "base_dataset_name", "variant_id", "download_url",
        "is_accessible", "format", "delimiter", "colnames", "field_widths", "archive_member",
        "processing_hook", "sensitive_attributes", "sensitive_categories", "feature_selector",
        "target_column", "target_lvl_good", "target_lvl_bad", "license", "license_permissive",
        "country", "domain", "sample_size_hint", "sha256", "na_tokens",
        // free-text pass-through fields
        "description_public", "notes_public", "affiliation", "years_data", "citation"};
    return keys;
}

inline const std::set<std::string>& passthrough_keys() {
    static const std::set<std::string> keys = {"description_public", "notes_public", "affiliation",
                                               "years_data", "citation"};
    return keys;
}

[[noreturn]] inline void schema_error(const std::string& dataset_id, const std::string& field,
                                      const std::string& what) {
    throw DataError("manifest schema violation in dataset '" + dataset_id + "', field '" + field +
                    "': " + what);
}

inline std::string require_string(const nlohmann::ordered_json& obj, const std::string& key,
                                  const std::string& dataset_id) {
    if (!obj.contains(key)) schema_error(dataset_id, key, "required field missing");
    if (!obj[key].is_string()) schema_error(dataset_id, key, "expected a string");
    return obj[key].get<std::string>();
}

inline std::vector<std::string> string_list(const nlohmann::ordered_json& v,
                                            const std::string& dataset_id,
                                            const std::string& field) {
    if (!v.is_array()) schema_error(dataset_id, field, "expected an array of strings");
    std::vector<std::string> out;
    for (const auto& e : v) {
        if (!e.is_string()) schema_error(dataset_id, field, "expected an array of strings");
        out.push_back(e.get<std::string>());
    }
    return out;
}

inline DatasetAnnotation parse_annotation(const nlohmann::ordered_json& obj, bool strict) {
    if (!obj.is_object()) throw DataError("manifest entry is not an object");
    DatasetAnnotation a;
    a.dataset_id = require_string(obj, "dataset_id", obj.value("dataset_id", "?"));
    const std::string& id = a.dataset_id;
    a.dataset_name = require_string(obj, "dataset_name", id);
    a.domain = require_string(obj, "domain", id);
    a.target_column = require_string(obj, "target_column", id);

    auto opt_string = [&](const char* key) -> std::optional<std::string> {
        if (!obj.contains(key) || obj[key].is_null()) return std::nullopt;
        if (!obj[key].is_string()) schema_error(id, key, "expected a string");
        return obj[key].get<std::string>();
    };
    a.base_dataset_name = opt_string("base_dataset_name");
    a.variant_id = opt_string("variant_id");
    a.download_url = opt_string("download_url");
    a.archive_member = opt_string("archive_member");
    a.processing_hook = opt_string("processing_hook");
    a.target_lvl_good = opt_string("target_lvl_good");
    a.target_lvl_bad = opt_string("target_lvl_bad");
    a.license = opt_string("license");
    a.sha256 = opt_string("sha256");

    const std::string access = obj.contains("is_accessible")
                                   ? require_string(obj, "is_accessible", id)
                                   : "public";
    if (access == "public") a.is_accessible = Accessibility::Public;
    else if (access == "manual") a.is_accessible = Accessibility::Manual;
    else if (access == "restricted") a.is_accessible = Accessibility::Restricted;
    else schema_error(id, "is_accessible", "must be public, manual or restricted");

    const std::string fmt = obj.contains("format") ? require_string(obj, "format", id)
                                                   : "delimited";
    if (fmt == "delimited") a.format = FileFormat::Delimited;
    else if (fmt == "fixed_width") a.format = FileFormat::FixedWidth;
    else schema_error(id, "format", "must be delimited or fixed_width");

    if (obj.contains("delimiter") && !obj["delimiter"].is_null()) {
        const std::string d = require_string(obj, "delimiter", id);
        if (d.size() != 1) schema_error(id, "delimiter", "must be a single character");
        a.delimiter = d[0];
    }
    if (obj.contains("colnames") && !obj["colnames"].is_null())
        a.colnames = string_list(obj["colnames"], id, "colnames");
    if (obj.contains("na_tokens") && !obj["na_tokens"].is_null())
        a.na_tokens = string_list(obj["na_tokens"], id, "na_tokens");
    if (obj.contains("field_widths") && !obj["field_widths"].is_null()) {
        if (!obj["field_widths"].is_array())
            schema_error(id, "field_widths", "expected an array of positive integers");
        std::vector<int> widths;
        for (const auto& w : obj["field_widths"]) {
            if (!w.is_number_integer() || w.get<int64_t>() <= 0)
                schema_error(id, "field_widths", "expected an array of positive integers");
            widths.push_back(static_cast<int>(w.get<int64_t>()));
        }
        a.field_widths = widths;
    }

    if (!obj.contains("sensitive_attributes"))
        schema_error(id, "sensitive_attributes", "required field missing");
    a.sensitive_attributes = string_list(obj["sensitive_attributes"], id, "sensitive_attributes");

    if (!obj.contains("sensitive_categories"))
        schema_error(id, "sensitive_categories", "required field missing");
    if (!obj["sensitive_categories"].is_object())
        schema_error(id, "sensitive_categories", "expected an object of column -> labels");
    for (const auto& [col, labels] : obj["sensitive_categories"].items())
        a.sensitive_categories[col] = string_list(labels, id, "sensitive_categories." + col);

    if (!obj.contains("feature_selector"))
        schema_error(id, "feature_selector", "required field missing");
    const auto& fs = obj["feature_selector"];
    if (fs.is_string() && fs.get<std::string>() == "all_except_target") {
        a.feature_selector.mode = FeatureSelector::Mode::AllExceptTarget;
    } else if (fs.is_object() && fs.contains("include")) {
        a.feature_selector.mode = FeatureSelector::Mode::Include;
        a.feature_selector.columns = string_list(fs["include"], id, "feature_selector.include");
    } else if (fs.is_object() && fs.contains("exclude")) {
        a.feature_selector.mode = FeatureSelector::Mode::Exclude;
        a.feature_selector.columns = string_list(fs["exclude"], id, "feature_selector.exclude");
    } else {
        schema_error(id, "feature_selector",
                     "expected \"all_except_target\", {\"include\": [...]} or {\"exclude\": [...]}");
    }

    if (obj.contains("license_permissive")) {
        if (!obj["license_permissive"].is_boolean())
            schema_error(id, "license_permissive", "expected a boolean");
        a.license_permissive = obj["license_permissive"].get<bool>();
    }
    if (obj.contains("country") && !obj["country"].is_null()) {
        if (obj["country"].is_string())
            a.country = {obj["country"].get<std::string>()};
        else
            a.country = string_list(obj["country"], id, "country");
    }
    if (obj.contains("sample_size_hint") && !obj["sample_size_hint"].is_null()) {
        if (!obj["sample_size_hint"].is_number_integer())
            schema_error(id, "sample_size_hint", "expected an integer");
        a.sample_size_hint = obj["sample_size_hint"].get<int64_t>();
    }

    for (const auto& [key, val] : obj.items()) {
        if (detail::passthrough_keys().count(key)) {
            if (!val.is_string()) schema_error(id, key, "expected a string");
            a.passthrough[key] = val.get<std::string>();
        } else if (!detail::known_annotation_keys().count(key)) {
            if (strict) schema_error(id, key, "unknown field (strict mode)");
            a.extras[key] = val;
        }
    }

    // Invariants.
    if (a.target_lvl_good && a.target_lvl_bad && *a.target_lvl_good == *a.target_lvl_bad)
        schema_error(id, "target_lvl_good", "good and bad target levels must differ");
    for (const auto& s : a.sensitive_attributes)
        if (!a.sensitive_categories.count(s))
            schema_error(id, "sensitive_categories", "no category list for sensitive attribute '" + s + "'");
    if (a.feature_selector.mode == FeatureSelector::Mode::Include) {
        for (const auto& c : a.feature_selector.columns)
            if (c == a.target_column)
                schema_error(id, "feature_selector", "include list must not contain the target column");
    }
    if (a.format == FileFormat::FixedWidth) {
        if (!a.field_widths) schema_error(id, "field_widths", "required for fixed_width format");
        if (!a.colnames) schema_error(id, "colnames", "required for fixed_width format");
    }
    if (a.format == FileFormat::Delimited && !a.delimiter)
        schema_error(id, "delimiter", "required for delimited format");
    return a;
}

inline nlohmann::ordered_json annotation_to_json(const DatasetAnnotation& a) {
    nlohmann::ordered_json o = nlohmann::ordered_json::object();
    o["dataset_id"] = a.dataset_id;
    o["dataset_name"] = a.dataset_name;
    if (a.base_dataset_name) o["base_dataset_name"] = *a.base_dataset_name;
    if (a.variant_id) o["variant_id"] = *a.variant_id;
    if (a.download_url) o["download_url"] = *a.download_url;
    o["is_accessible"] = accessibility_name(a.is_accessible);
    o["format"] = file_format_name(a.format);
    if (a.delimiter) o["delimiter"] = std::string(1, *a.delimiter);
    if (a.colnames) o["colnames"] = *a.colnames;
    if (a.field_widths) o["field_widths"] = *a.field_widths;
    if (a.archive_member) o["archive_member"] = *a.archive_member;
    if (a.processing_hook) o["processing_hook"] = *a.processing_hook;
    o["sensitive_attributes"] = a.sensitive_attributes;
    o["sensitive_categories"] = a.sensitive_categories;
    switch (a.feature_selector.mode) {
        case FeatureSelector::Mode::AllExceptTarget:
            o["feature_selector"] = "all_except_target";
            break;
        case FeatureSelector::Mode::Include:
            o["feature_selector"] = {{"include", a.feature_selector.columns}};
            break;
        case FeatureSelector::Mode::Exclude:
            o["feature_selector"] = {{"exclude", a.feature_selector.columns}};
            break;
    }
    o["target_column"] = a.target_column;
    if (a.target_lvl_good) o["target_lvl_good"] = *a.target_lvl_good;
    if (a.target_lvl_bad) o["target_lvl_bad"] = *a.target_lvl_bad;
    if (a.license) o["license"] = *a.license;
    o["license_permissive"] = a.license_permissive;
    o["country"] = a.country;
    o["domain"] = a.domain;
    if (a.sample_size_hint) o["sample_size_hint"] = *a.sample_size_hint;
    if (a.sha256) o["sha256"] = *a.sha256;
    if (a.na_tokens) o["na_tokens"] = *a.na_tokens;
    for (const auto& [k, v] : a.passthrough) o[k] = v;
    for (const auto& [k, v] : a.extras.items()) o[k] = v;
    return o;
}

} // namespace detail

// Parse a UTF-8 JSON manifest into a validated registry. Strict mode (the
// default) rejects unknown annotation keys; lenient mode carries them
// through untouched.
inline CorpusRegistry parse_manifest(const std::string& text, bool strict = true) {
    nlohmann::ordered_json doc;
    try {
        doc = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("manifest syntax error: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("schema_version") || !doc.contains("datasets"))
        throw DataError("manifest must be an object with schema_version and datasets");
    if (!doc["schema_version"].is_string())
        throw DataError("manifest schema_version must be a string");
    if (!doc["datasets"].is_array()) throw DataError("manifest datasets must be an array");

    CorpusRegistry reg;
    reg.schema_version = doc["schema_version"].get<std::string>();
    std::set<std::string> seen;
    for (const auto& entry : doc["datasets"]) {
        DatasetAnnotation a = detail::parse_annotation(entry, strict);
        if (!seen.insert(a.dataset_id).second)
            throw DataError("duplicate dataset id '" + a.dataset_id + "' in manifest");
        reg.annotations.push_back(std::move(a));
    }
    return reg;
}

inline std::string serialize_annotation(const DatasetAnnotation& annotation) {
    return detail::annotation_to_json(annotation).dump(2) + "\n";
}

inline std::string serialize_manifest(const CorpusRegistry& registry) {
    nlohmann::ordered_json doc = nlohmann::ordered_json::object();
    doc["schema_version"] = registry.schema_version;
    doc["datasets"] = nlohmann::ordered_json::array();
    for (const auto& a : registry.annotations)
        doc["datasets"].push_back(detail::annotation_to_json(a));
    return doc.dump(2) + "\n";
}

// All scenarios for one dataset: each sensitive attribute alone and, when
// there are fewer than four attributes, every unordered pair in attribute
// list order.
inline std::vector<Scenario> enumerate_scenarios(const DatasetAnnotation& annotation) {
    const auto& attrs = annotation.sensitive_attributes;
    if (attrs.empty())
        throw DataError("dataset '" + annotation.dataset_id + "' has no sensitive attributes");
    std::vector<Scenario> out;
    for (const auto& a : attrs)
        out.push_back({make_scenario_id(annotation.dataset_id, {a}), annotation.dataset_id, {a}});
    if (attrs.size() < 4) {
        for (size_t i = 0; i < attrs.size(); ++i)
            for (size_t j = i + 1; j < attrs.size(); ++j)
                out.push_back({make_scenario_id(annotation.dataset_id, {attrs[i], attrs[j]}),
                               annotation.dataset_id,
                               {attrs[i], attrs[j]}});
    }
    return out;
}

using AnnotationPredicate = std::function<bool(const DatasetAnnotation&)>;

inline CorpusRegistry filter_registry(const CorpusRegistry& registry,
                                      const AnnotationPredicate& predicate) {
    CorpusRegistry out;
    out.schema_version = registry.schema_version;
    for (const auto& a : registry.annotations)
        if (predicate(a)) out.annotations.push_back(a);
    return out;
}

namespace predicates {

// Licensing information available and permissive.
inline bool permissive_license(const DatasetAnnotation& a) {
    return a.license.has_value() && *a.license != "?" && a.license_permissive;
}

inline bool has_country(const DatasetAnnotation& a) { return a.has_country(); }

inline AnnotationPredicate country_in(std::set<std::string> iso3) {
    return [iso3 = std::move(iso3)](const DatasetAnnotation& a) {
        for (const auto& c : a.country)
            if (iso3.count(c)) return true;
        return false;
    };
}

} // namespace predicates

} // namespace faircorpus
