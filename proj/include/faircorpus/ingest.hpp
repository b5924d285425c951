#pragma once

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <openssl/evp.h>

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include <json.hpp>

#include "faircorpus/error.hpp"
#include "faircorpus/manifest.hpp"
#include "faircorpus/table.hpp"
#include "faircorpus/zipfile.hpp"

namespace faircorpus {

// ---------------------------------------------------------------------------
// Hashing

inline std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 ||
        EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw RuntimeError("sha256 digest computation failed");
    }
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Parsing

struct ParserConfig {
    FileFormat format = FileFormat::Delimited;
    char delimiter = ',';
    bool has_header = true;
    std::optional<std::vector<std::string>> colnames;
    std::vector<int> field_widths;
    std::vector<std::string> na_tokens{"", "NA", "?"};
};

inline ParserConfig parser_config_for(const DatasetAnnotation& a) {
    ParserConfig cfg;
    cfg.format = a.format;
    if (a.delimiter) cfg.delimiter = *a.delimiter;
    cfg.has_header = !a.colnames.has_value();
    cfg.colnames = a.colnames;
    if (a.field_widths) cfg.field_widths = *a.field_widths;
    if (a.na_tokens) cfg.na_tokens = *a.na_tokens;
    return cfg;
}

namespace detail {

inline std::string trim_ws(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
    return s.substr(b, e - b);
}

inline bool parse_bool_literal(const std::string& raw, bool& out) {
    std::string s = trim_ws(raw);
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (s == "true" || s == "1") { out = true; return true; }
    if (s == "false" || s == "0") { out = false; return true; }
    return false;
}

inline bool parse_int_literal(const std::string& raw, int64_t& out) {
    const std::string s = trim_ws(raw);
    if (s.empty()) return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (*first == '+') ++first; // from_chars rejects a leading plus
    auto [end, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && end == last;
}

inline bool parse_float_literal(const std::string& raw, double& out) {
    const std::string s = trim_ws(raw);
    if (s.empty()) return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (*first == '+') ++first;
    auto [end, ec] = std::from_chars(first, last, out, std::chars_format::general);
    return ec == std::errc() && end == last;
}

struct RawRecord {
    std::vector<std::string> fields;
    size_t line = 0; // 1-based physical line the record starts on
};

// RFC 4180 field splitting: quoted fields may contain the delimiter,
// doubled quotes and embedded line breaks.
inline std::vector<RawRecord> split_delimited(const std::string& text, char delim) {
    std::vector<RawRecord> records;
    std::vector<std::string> fields;
    std::string field;
    bool in_quotes = false;
    bool any_in_record = false;
    size_t line = 1;
    size_t record_line = 1;

    auto end_field = [&] {
        fields.push_back(field);
        field.clear();
        any_in_record = true;
    };
    auto end_record = [&] {
        if (any_in_record || !field.empty()) {
            end_field();
            records.push_back({std::move(fields), record_line});
            fields.clear();
            any_in_record = false;
        }
        ++line;
        record_line = line;
    };

    for (size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
        } else if (c == '"' && field.empty()) {
            in_quotes = true;
            any_in_record = true; // "" is a present (empty) field
        } else if (c == delim) {
            end_field();
        } else if (c == '\r') {
            if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
            end_record();
        } else if (c == '\n') {
            end_record();
        } else {
            field += c;
        }
    }
    if (in_quotes)
        throw DataError("parse error at line " + std::to_string(record_line) +
                        ": unterminated quoted field");
    if (any_in_record || !field.empty()) end_record();
    return records;
}

inline std::vector<RawRecord> split_fixed_width(const std::string& text,
                                                const std::vector<int>& widths) {
    std::vector<size_t> offsets;
    size_t off = 0;
    for (int w : widths) {
        offsets.push_back(off);
        off += static_cast<size_t>(w);
    }

    std::vector<RawRecord> records;
    size_t line_no = 0;
    size_t start = 0;
    while (start <= text.size()) {
        size_t end = text.find('\n', start);
        const bool last = end == std::string::npos;
        std::string linebuf = text.substr(start, last ? std::string::npos : end - start);
        if (!linebuf.empty() && linebuf.back() == '\r') linebuf.pop_back();
        ++line_no;
        if (last && linebuf.empty()) break; // no trailing newline artifacts
        if (!linebuf.empty()) {
            RawRecord rec;
            rec.line = line_no;
            for (size_t f = 0; f < widths.size(); ++f) {
                if (f > 0 && offsets[f] >= linebuf.size())
                    throw DataError("parse error at line " + std::to_string(line_no) +
                                    ": line too short for fixed-width layout");
                const size_t o = std::min(offsets[f], linebuf.size());
                rec.fields.push_back(trim_ws(linebuf.substr(o, static_cast<size_t>(widths[f]))));
            }
            records.push_back(std::move(rec));
        } else if (!last) {
            throw DataError("parse error at line " + std::to_string(line_no) +
                            ": line too short for fixed-width layout");
        }
        if (last) break;
        start = end + 1;
    }
    return records;
}

inline Column build_column(std::string name, const std::vector<std::optional<std::string>>& raw) {
    bool all_bool = true, all_int = true, all_float = true;
    size_t non_missing = 0;
    std::set<std::string> distinct;
    for (const auto& cell : raw) {
        if (!cell) continue;
        ++non_missing;
        bool b;
        int64_t i;
        double d;
        if (all_bool && !parse_bool_literal(*cell, b)) all_bool = false;
        if (all_int && !parse_int_literal(*cell, i)) all_int = false;
        if (all_float && !parse_float_literal(*cell, d)) all_float = false;
        if (!all_float) distinct.insert(*cell);
    }

    Column col;
    col.name = std::move(name);
    if (non_missing == 0) {
        col.dtype = Dtype::Text;
    } else if (all_bool) {
        col.dtype = Dtype::Bool;
    } else if (all_int) {
        col.dtype = Dtype::Int;
    } else if (all_float) {
        col.dtype = Dtype::Float;
    } else {
        // Narrowest remaining type: categorical while the vocabulary stays
        // small relative to the column, text otherwise.
        const size_t cap = std::max<size_t>(20, non_missing / 2);
        col.dtype = distinct.size() <= cap ? Dtype::Categorical : Dtype::Text;
    }

    col.values.reserve(raw.size());
    col.missing.reserve(raw.size());
    for (const auto& cell : raw) {
        if (!cell) {
            col.missing.push_back(1);
            switch (col.dtype) {
                case Dtype::Float: col.values.emplace_back(0.0); break;
                case Dtype::Int: col.values.emplace_back(int64_t{0}); break;
                case Dtype::Bool: col.values.emplace_back(false); break;
                default: col.values.emplace_back(std::string());
            }
            continue;
        }
        col.missing.push_back(0);
        switch (col.dtype) {
            case Dtype::Bool: {
                bool b = false;
                parse_bool_literal(*cell, b);
                col.values.emplace_back(b);
                break;
            }
            case Dtype::Int: {
                int64_t i = 0;
                parse_int_literal(*cell, i);
                col.values.emplace_back(i);
                break;
            }
            case Dtype::Float: {
                double d = 0.0;
                parse_float_literal(*cell, d);
                col.values.emplace_back(d);
                break;
            }
            default: col.values.emplace_back(*cell);
        }
    }
    col.rebuild_categories();
    return col;
}

} // namespace detail

// Parse raw text into a typed Table. Cells matching an NA token become
// missing; each column gets the narrowest dtype consistent with every
// non-missing cell (bool, int, float, categorical, then text).
inline Table parse_table(const std::string& text, const ParserConfig& config) {
    if (!config.has_header && !config.colnames)
        throw UsageError("parser config: colnames required when the file has no header row");
    if (config.format == FileFormat::FixedWidth && config.field_widths.empty())
        throw UsageError("parser config: field_widths required for fixed-width parsing");

    std::vector<detail::RawRecord> records =
        config.format == FileFormat::Delimited
            ? detail::split_delimited(text, config.delimiter)
            : detail::split_fixed_width(text, config.field_widths);

    std::vector<std::string> names;
    size_t first_data = 0;
    if (config.format == FileFormat::FixedWidth) {
        names = *config.colnames;
        if (names.size() != config.field_widths.size())
            throw UsageError("parser config: colnames and field_widths differ in length");
    } else if (config.has_header) {
        if (records.empty()) throw DataError("parse error: no header row in input");
        names = records.front().fields;
        first_data = 1;
    } else {
        names = *config.colnames;
    }

    std::set<std::string> seen;
    for (const auto& n : names)
        if (!seen.insert(n).second) throw DataError("duplicate column name '" + n + "' in input");

    const size_t n_cols = names.size();
    const size_t n_rows = records.size() - first_data;
    const std::set<std::string> na(config.na_tokens.begin(), config.na_tokens.end());

    std::vector<std::vector<std::optional<std::string>>> cells(
        n_cols, std::vector<std::optional<std::string>>());
    for (auto& c : cells) c.reserve(n_rows);
    for (size_t r = first_data; r < records.size(); ++r) {
        const auto& rec = records[r];
        if (rec.fields.size() != n_cols)
            throw DataError("parse error at line " + std::to_string(rec.line) + ": expected " +
                            std::to_string(n_cols) + " fields, got " +
                            std::to_string(rec.fields.size()));
        for (size_t c = 0; c < n_cols; ++c) {
            if (na.count(rec.fields[c]))
                cells[c].emplace_back(std::nullopt);
            else
                cells[c].emplace_back(rec.fields[c]);
        }
    }

    std::vector<Column> columns;
    columns.reserve(n_cols);
    for (size_t c = 0; c < n_cols; ++c)
        columns.push_back(detail::build_column(names[c], cells[c]));
    Table t;
    t.reset(std::move(columns));
    return t;
}

// ---------------------------------------------------------------------------
// Processing hooks — named, pure table→table adjustments compiled into the
// artifact for sources that need a nudge into shape.

using TableHook = std::function<Table(const Table&)>;

namespace detail {

inline std::map<std::string, TableHook>& hook_registry() {
    static std::map<std::string, TableHook> hooks = [] {
        std::map<std::string, TableHook> m;
        m["identity"] = [](const Table& t) { return t; };
        // The loans fixture ships with a placeholder first column name.
        m["synth_loans_rename"] = [](const Table& t) {
            std::vector<Column> cols = t.columns();
            for (auto& c : cols)
                if (c.name == "V1") c.name = "age";
            Table out;
            out.reset(std::move(cols));
            return out;
        };
        return m;
    }();
    return hooks;
}

} // namespace detail

inline bool register_processing_hook(const std::string& hook_id, TableHook fn) {
    return detail::hook_registry().emplace(hook_id, std::move(fn)).second;
}

inline Table apply_processing_hook(const std::string& hook_id, const Table& table) {
    const auto& hooks = detail::hook_registry();
    auto it = hooks.find(hook_id);
    if (it == hooks.end()) throw DataError("unknown processing hook '" + hook_id + "'");
    return it->second(table);
}

// ---------------------------------------------------------------------------
// Fetching & caching

struct RawArtifact {
    std::string bytes;
    std::string source_url;
    std::string fetched_at; // ISO 8601 UTC
    std::filesystem::path cache_path;
    bool from_cache = false;
};

inline std::filesystem::path resolve_cache_dir(const std::optional<std::string>& cli_flag) {
    if (cli_flag && !cli_flag->empty()) return *cli_flag;
    if (const char* env = std::getenv("FAIRCORPUS_CACHE"); env && *env) return env;
    if (const char* xdg = std::getenv("XDG_CACHE_HOME"); xdg && *xdg)
        return std::filesystem::path(xdg) / "faircorpus";
    if (const char* home = std::getenv("HOME"); home && *home)
        return std::filesystem::path(home) / ".cache" / "faircorpus";
    return std::filesystem::path(".faircorpus-cache");
}

namespace detail {

class FileLock {
public:
    explicit FileLock(const std::filesystem::path& path) {
        fd_ = ::open(path.c_str(), O_CREAT | O_RDWR, 0644);
        if (fd_ >= 0) ::flock(fd_, LOCK_EX);
    }
    ~FileLock() {
        if (fd_ >= 0) {
            ::flock(fd_, LOCK_UN);
            ::close(fd_);
        }
    }
    FileLock(const FileLock&) = delete;
    FileLock& operator=(const FileLock&) = delete;

private:
    int fd_ = -1;
};

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file '" + path.string() + "'");
    std::string out((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return out;
}

inline void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
    const std::filesystem::path tmp =
        path.string() + ".tmp." + std::to_string(static_cast<long>(::getpid()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw RuntimeError("cannot write file '" + tmp.string() + "'");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw RuntimeError("short write to '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

inline std::string utc_timestamp() {
    std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

inline std::string download_url(const std::string& url) {
    const size_t scheme_end = url.find("://");
    const size_t host_start = scheme_end + 3;
    const size_t path_start = url.find('/', host_start);
    const std::string base = path_start == std::string::npos ? url : url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);
    httplib::Client client(base);
    client.set_follow_location(true);
    client.set_connection_timeout(30, 0);
    client.set_read_timeout(120, 0);
    auto res = client.Get(path);
    if (!res)
        throw RuntimeError("network failure fetching '" + url +
                           "': " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300)
        throw DataError("HTTP " + std::to_string(res->status) + " fetching '" + url + "'");
    return res->body;
}

} // namespace detail

// Fetch the raw artifact for an annotation, consulting and populating the
// on-disk cache at <cache>/<dataset_id>/<sha256(url)>.bin. When
// archive_member is set the cache stores the container and the member is
// extracted on the way out.
inline RawArtifact fetch(const DatasetAnnotation& annotation,
                         const std::filesystem::path& cache_dir) {
    if (annotation.is_accessible != Accessibility::Public)
        throw DataError("dataset '" + annotation.dataset_id +
                        "' requires manual download (is_accessible = " +
                        accessibility_name(annotation.is_accessible) +
                        "); place the file yourself and point the manifest at it");
    if (!annotation.download_url)
        throw DataError("dataset '" + annotation.dataset_id + "' has no download_url");

    const std::string& url = *annotation.download_url;
    const std::filesystem::path dir = cache_dir / annotation.dataset_id;
    std::filesystem::create_directories(dir);
    detail::FileLock lock(dir / ".lock");

    const std::string key = sha256_hex(url);
    const std::filesystem::path bin_path = dir / (key + ".bin");
    const std::filesystem::path meta_path = dir / (key + ".meta");

    RawArtifact art;
    art.source_url = url;
    art.cache_path = bin_path;

    bool need_download = true;
    if (std::filesystem::exists(bin_path)) {
        art.bytes = detail::read_file(bin_path);
        art.from_cache = true;
        art.fetched_at = detail::utc_timestamp();
        need_download = annotation.sha256 && sha256_hex(art.bytes) != *annotation.sha256;
        // A checksum mismatch on a cached artifact means the manifest moved
        // on; re-download rather than serving stale bytes.
    }

    if (need_download) {
        if (url.rfind("file://", 0) == 0) {
            // file://<path> — path taken verbatim (absolute via file:///...,
            // relative paths allowed for local corpora and tests).
            art.bytes = detail::read_file(url.substr(7));
        } else if (url.rfind("http://", 0) == 0 || url.rfind("https://", 0) == 0) {
            art.bytes = detail::download_url(url);
        } else {
            throw DataError("unsupported URL scheme in '" + url + "'");
        }
        if (art.bytes.empty())
            throw DataError("dataset '" + annotation.dataset_id + "': source '" + url +
                            "' yielded an empty artifact");
        if (annotation.sha256 && sha256_hex(art.bytes) != *annotation.sha256)
            throw DataError("dataset '" + annotation.dataset_id +
                            "': artifact checksum mismatch for '" + url + "'");
        art.from_cache = false;
        art.fetched_at = detail::utc_timestamp();
        detail::write_file_atomic(bin_path, art.bytes);
        nlohmann::ordered_json meta;
        meta["url"] = url;
        meta["fetched_at"] = art.fetched_at;
        meta["sha256"] = sha256_hex(art.bytes);
        detail::write_file_atomic(meta_path, meta.dump(2) + "\n");
    }

    if (annotation.archive_member)
        art.bytes = zip::extract_member(art.bytes, *annotation.archive_member);
    return art;
}

// One-call acquisition: fetch, parse, run the dataset's processing hook.
inline Table load_dataset(const DatasetAnnotation& annotation,
                          const std::filesystem::path& cache_dir) {
    const RawArtifact art = fetch(annotation, cache_dir);
    Table t = parse_table(art.bytes, parser_config_for(annotation));
    if (annotation.processing_hook) t = apply_processing_hook(*annotation.processing_hook, t);
    return t;
}

} // namespace faircorpus
