#pragma once

// Deterministic synthetic corpus for demos and end-to-end smoke tests. Five
// small datasets cover every ingestion path: delimited with and without a
// header row, fixed-width, a zip archive with a processing hook, and a
// manual-access entry that can never be fetched.

#include <cstdio>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "faircorpus/error.hpp"
#include "faircorpus/ingest.hpp"
#include "faircorpus/manifest.hpp"
#include "faircorpus/rng.hpp"
#include "faircorpus/zipfile.hpp"

namespace faircorpus::demo {

namespace detail {

inline std::string fixed(double v, int precision) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
    return buf;
}

inline std::string pad_right(std::string s, size_t width) {
    if (s.size() > width)
        throw RuntimeError("demo fixture field '" + s + "' exceeds width " +
                           std::to_string(width));
    s.resize(width, ' ');
    return s;
}

// Threshold at the q-th quantile of the score distribution, so the label
// split is non-degenerate by construction.
inline double quantile_threshold(std::vector<double> scores, double q) {
    std::sort(scores.begin(), scores.end());
    return scores[static_cast<size_t>(q * static_cast<double>(scores.size() - 1))];
}

inline std::string credit_csv() {
    Rng rng(1001);
    const std::vector<std::string> cities{"berlin",  "hamburg",   "munich",
                                          "cologne", "frankfurt", "stuttgart"};
    const size_t n = 400;
    struct Row {
        int age;
        double income;
        bool income_missing;
        bool employed;
        std::string city;
        std::string notes;
        std::string sex;
        std::string race;
        double score;
    };
    std::vector<Row> rows;
    rows.reserve(n);
    std::vector<double> scores;
    for (size_t i = 0; i < n; ++i) {
        Row r;
        r.age = 18 + static_cast<int>(rng.bounded(50));
        r.employed = rng.bounded(100) < 70;
        r.income = 20000.0 + static_cast<double>(rng.bounded(60000)) + 120.0 * r.age +
                   (r.employed ? 8000.0 : 0.0);
        r.income_missing = rng.bounded(100) < 6;
        const uint64_t c = rng.bounded(6);
        r.city = cities[c];
        r.sex = rng.bounded(100) < 58 ? "male" : "female";
        // Race leans on the city draw so the profiler sees a mild proxy.
        const uint64_t mix = (rng.bounded(100) + 12 * c) % 100;
        r.race = mix < 55 ? "white" : (mix < 85 ? "black" : "asian");
        if (rng.bounded(100) < 4) r.race = "?";
        r.notes = "case-" + std::to_string(100000 + i);
        r.score = 0.00003 * r.income + (r.employed ? 0.8 : 0.0) + (r.sex == "male" ? 0.3 : 0.0) +
                  0.02 * (r.age - 40) + rng.uniform();
        scores.push_back(r.score);
        rows.push_back(std::move(r));
    }
    const double cut = quantile_threshold(scores, 0.4);
    std::string out = "age,income,employed,city,notes,sex,race,credit_risk\n";
    for (const auto& r : rows) {
        out += std::to_string(r.age) + ',';
        out += (r.income_missing ? "NA" : fixed(r.income, 2)) + ',';
        out += (r.employed ? "true" : "false") + std::string(1, ',');
        out += r.city + ',' + r.notes + ',' + r.sex + ',' + r.race + ',';
        out += (r.score > cut ? "good" : "bad");
        out += '\n';
    }
    return out;
}

inline std::string hiring_tsv() {
    Rng rng(1002);
    const std::vector<std::string> levels{"highschool", "bachelor", "master", "phd"};
    const size_t n = 300;
    struct Row {
        int age;
        int experience;
        std::string education; // may be empty (missing)
        size_t education_rank;
        std::string gender;
        bool referral;
        double score;
    };
    std::vector<Row> rows;
    rows.reserve(n);
    std::vector<double> scores;
    for (size_t i = 0; i < n; ++i) {
        Row r;
        r.age = 21 + static_cast<int>(rng.bounded(40));
        r.experience = static_cast<int>(
            std::min<uint64_t>(static_cast<uint64_t>(r.age - 21), rng.bounded(20)));
        r.education_rank = rng.bounded(100) < 35 ? 0 : 1 + rng.bounded(3);
        r.education = levels[r.education_rank];
        if (rng.bounded(100) < 5) r.education.clear();
        const uint64_t g = rng.bounded(100);
        r.gender = g < 48 ? "m" : (g < 92 ? "f" : "nonbinary");
        r.referral = rng.bounded(100) < 25;
        r.score = 0.25 * r.experience + 0.9 * static_cast<double>(r.education_rank) +
                  (r.referral ? 1.2 : 0.0) + (r.gender == "m" ? 0.4 : 0.0) + rng.uniform();
        scores.push_back(r.score);
        rows.push_back(std::move(r));
    }
    const double cut = quantile_threshold(scores, 0.55);
    std::string out;
    for (const auto& r : rows) {
        out += std::to_string(r.age) + '\t' + std::to_string(r.experience) + '\t' + r.education +
               '\t' + r.gender + '\t' + (r.referral ? "yes" : "no") + '\t' +
               (r.score > cut ? "yes" : "no") + '\n';
    }
    return out;
}

inline std::string admissions_fwf() {
    Rng rng(1003);
    const size_t n = 350;
    struct Row {
        std::string id;
        int age;
        double gre;
        double gpa;
        bool gpa_missing;
        std::string gender;
        double score;
    };
    std::vector<Row> rows;
    rows.reserve(n);
    std::vector<double> scores;
    for (size_t i = 0; i < n; ++i) {
        Row r;
        char idbuf[8];
        std::snprintf(idbuf, sizeof(idbuf), "A%05zu", i + 1);
        r.id = idbuf;
        r.age = 18 + static_cast<int>(rng.bounded(14));
        r.gre = 400.0 + static_cast<double>(rng.bounded(401));
        r.gpa = 2.0 + 2.0 * rng.uniform();
        r.gpa_missing = rng.bounded(100) < 4;
        r.gender = rng.bounded(100) < 52 ? "f" : "m";
        r.score = 0.004 * r.gre + 0.8 * r.gpa + (r.gender == "m" ? 0.15 : 0.0) + rng.uniform();
        scores.push_back(r.score);
        rows.push_back(std::move(r));
    }
    const double cut = quantile_threshold(scores, 0.6);
    // widths: applicant_id 6, age 4, gre 8, gpa 8, gender 2, admitted 1
    std::string out;
    for (const auto& r : rows) {
        out += pad_right(r.id, 6);
        out += pad_right(std::to_string(r.age), 4);
        out += pad_right(fixed(r.gre, 1), 8);
        out += pad_right(r.gpa_missing ? "" : fixed(r.gpa, 2), 8);
        out += pad_right(r.gender, 2);
        out += (r.score > cut ? '1' : '0');
        out += '\n';
    }
    return out;
}

inline std::string loans_zip() {
    Rng rng(1004);
    const std::vector<std::string> regions{"north", "south", "east", "west"};
    const size_t n = 320;
    struct Row {
        int age;
        double debt_ratio;
        double savings;
        bool savings_unknown;
        std::string region;
        double score;
    };
    std::vector<Row> rows;
    rows.reserve(n);
    std::vector<double> scores;
    for (size_t i = 0; i < n; ++i) {
        Row r;
        r.age = 20 + static_cast<int>(rng.bounded(45));
        r.debt_ratio = rng.uniform();
        r.savings = 500.0 + static_cast<double>(rng.bounded(20000));
        r.savings_unknown = rng.bounded(100) < 7;
        r.region = regions[rng.bounded(4)];
        r.score = -2.0 * r.debt_ratio + 0.00008 * r.savings +
                  (r.region == "north" ? 0.3 : 0.0) + 0.01 * r.age + rng.uniform();
        scores.push_back(r.score);
        rows.push_back(std::move(r));
    }
    const double cut = quantile_threshold(scores, 0.45);
    // The first column ships under a placeholder name on purpose; the
    // dataset's processing hook renames it.
    std::string csv = "V1,debt_ratio,savings,region,approved\n";
    for (const auto& r : rows) {
        csv += std::to_string(r.age) + ',' + fixed(r.debt_ratio, 3) + ',' +
               (r.savings_unknown ? "unknown" : fixed(r.savings, 2)) + ',' + r.region + ',' +
               (r.score > cut ? '1' : '0');
        csv += '\n';
    }
    return zip::write_archive(
        {{"README.txt", "Synthetic loan decisions; see loans.csv.\n"}, {"loans.csv", csv}});
}

inline std::string file_url(const std::filesystem::path& p) {
    return "file://" + std::filesystem::absolute(p).string();
}

} // namespace detail

struct DemoCorpus {
    std::filesystem::path manifest_path;
    std::vector<std::string> dataset_ids;
};

// Write the corpus data files plus a manifest referencing them via file://
// URLs (with checksums), and return where the manifest landed. Everything is
// derived from fixed seeds, so repeated calls produce identical bytes.
inline DemoCorpus write_demo_corpus(const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    const std::string credit = detail::credit_csv();
    const std::string hiring = detail::hiring_tsv();
    const std::string admissions = detail::admissions_fwf();
    const std::string loans = detail::loans_zip();

    const auto credit_path = dir / "synth_credit.csv";
    const auto hiring_path = dir / "synth_hiring.tsv";
    const auto admissions_path = dir / "synth_admissions.fwf";
    const auto loans_path = dir / "synth_loans.zip";
    faircorpus::detail::write_file_atomic(credit_path, credit);
    faircorpus::detail::write_file_atomic(hiring_path, hiring);
    faircorpus::detail::write_file_atomic(admissions_path, admissions);
    faircorpus::detail::write_file_atomic(loans_path, loans);

    using json = nlohmann::ordered_json;
    json doc = json::object();
    doc["schema_version"] = "1";
    doc["datasets"] = json::array();

    doc["datasets"].push_back(json{
        {"dataset_id", "synth_credit"},
        {"dataset_name", "Synthetic Consumer Credit"},
        {"download_url", detail::file_url(credit_path)},
        {"is_accessible", "public"},
        {"format", "delimited"},
        {"delimiter", ","},
        {"sensitive_attributes", json::array({"sex", "race"})},
        {"sensitive_categories",
         json{{"sex", json::array({"male", "female"})},
              {"race", json::array({"white", "black", "asian"})}}},
        {"feature_selector", json{{"include", json::array({"age", "income", "employed", "city"})}}},
        {"target_column", "credit_risk"},
        {"target_lvl_good", "good"},
        {"target_lvl_bad", "bad"},
        {"license", "CC0-1.0"},
        {"license_permissive", true},
        {"country", json::array({"DE"})},
        {"domain", "finance"},
        {"sample_size_hint", 400},
        {"sha256", sha256_hex(credit)},
        {"description_public", "Synthetic consumer credit outcomes with income, employment and "
                               "demographic covariates."},
    });

    doc["datasets"].push_back(json{
        {"dataset_id", "synth_hiring"},
        {"dataset_name", "Synthetic Hiring Decisions"},
        {"download_url", detail::file_url(hiring_path)},
        {"is_accessible", "public"},
        {"format", "delimited"},
        {"delimiter", "\t"},
        {"colnames",
         json::array({"age", "experience", "education", "gender", "referral", "hired"})},
        {"sensitive_attributes", json::array({"gender"})},
        {"sensitive_categories", json{{"gender", json::array({"m", "f", "nonbinary"})}}},
        {"feature_selector", "all_except_target"},
        {"target_column", "hired"},
        {"license", "?"},
        {"license_permissive", false},
        {"country", json::array({"US"})},
        {"domain", "employment"},
        {"sample_size_hint", 300},
    });

    doc["datasets"].push_back(json{
        {"dataset_id", "synth_admissions"},
        {"dataset_name", "Synthetic Graduate Admissions"},
        {"download_url", detail::file_url(admissions_path)},
        {"is_accessible", "public"},
        {"format", "fixed_width"},
        {"colnames", json::array({"applicant_id", "age", "gre", "gpa", "gender", "admitted"})},
        {"field_widths", json::array({6, 4, 8, 8, 2, 1})},
        {"sensitive_attributes", json::array({"gender"})},
        {"sensitive_categories", json{{"gender", json::array({"f", "m"})}}},
        {"feature_selector", json{{"exclude", json::array({"applicant_id"})}}},
        {"target_column", "admitted"},
        {"target_lvl_good", "1"},
        {"target_lvl_bad", "0"},
        {"license", "CC-BY-4.0"},
        {"license_permissive", true},
        {"country", json::array({"US"})},
        {"domain", "education"},
        {"sample_size_hint", 350},
        {"sha256", sha256_hex(admissions)},
    });

    doc["datasets"].push_back(json{
        {"dataset_id", "synth_loans"},
        {"dataset_name", "Synthetic Loan Approvals"},
        {"download_url", detail::file_url(loans_path)},
        {"is_accessible", "public"},
        {"format", "delimited"},
        {"delimiter", ","},
        {"archive_member", "loans.csv"},
        {"processing_hook", "synth_loans_rename"},
        {"sensitive_attributes", json::array({"region"})},
        {"sensitive_categories",
         json{{"region", json::array({"north", "south", "east", "west"})}}},
        {"feature_selector", "all_except_target"},
        {"target_column", "approved"},
        {"target_lvl_good", "1"},
        {"target_lvl_bad", "0"},
        {"license_permissive", false},
        {"domain", "finance"},
        {"sample_size_hint", 320},
        {"sha256", sha256_hex(loans)},
        {"na_tokens", json::array({"", "NA", "?", "unknown"})},
    });

    doc["datasets"].push_back(json{
        {"dataset_id", "synth_restricted"},
        {"dataset_name", "Synthetic Restricted Registry"},
        {"is_accessible", "manual"},
        {"format", "delimited"},
        {"delimiter", ","},
        {"sensitive_attributes", json::array({"group"})},
        {"sensitive_categories", json{{"group", json::array({"a", "b"})}}},
        {"feature_selector", "all_except_target"},
        {"target_column", "outcome"},
        {"license", "Apache-2.0"},
        {"license_permissive", true},
        {"country", json::array({"GB"})},
        {"domain", "health"},
        {"notes_public", "Fixture for the manual-download path; has no artifact on purpose."},
    });

    DemoCorpus out;
    out.manifest_path = dir / "manifest.json";
    faircorpus::detail::write_file_atomic(out.manifest_path, doc.dump(2) + "\n");
    for (const auto& d : doc["datasets"]) out.dataset_ids.push_back(d["dataset_id"]);
    // Fail fast if the generated corpus ever drifts out of schema.
    parse_manifest(faircorpus::detail::read_file(out.manifest_path));
    return out;
}

} // namespace faircorpus::demo
