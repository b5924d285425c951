#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "faircorpus/error.hpp"
#include "faircorpus/rng.hpp"

namespace faircorpus {

enum class Dtype { Float, Int, Bool, Categorical, Text };

inline const char* dtype_name(Dtype t) {
    switch (t) {
        case Dtype::Float: return "float";
        case Dtype::Int: return "int";
        case Dtype::Bool: return "bool";
        case Dtype::Categorical: return "categorical";
        case Dtype::Text: return "text";
    }
    return "?";
}

enum class Role { Feature, Sensitive, Target, Other };

inline const char* role_name(Role r) {
    switch (r) {
        case Role::Feature: return "feature";
        case Role::Sensitive: return "sensitive";
        case Role::Target: return "target";
        case Role::Other: return "other";
    }
    return "?";
}

// One cell. The active alternative matches the owning column's dtype:
// Float -> double, Int -> int64, Bool -> bool, Categorical/Text -> string.
using Value = std::variant<double, int64_t, bool, std::string>;

// Shortest round-trip decimal representation of a double.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, end);
}

// Canonical textual form of a cell. Booleans render as 0/1, matching the
// CSV export convention.
inline std::string value_to_string(const Value& v) {
    switch (v.index()) {
        case 0: return format_double(std::get<double>(v));
        case 1: return std::to_string(std::get<int64_t>(v));
        case 2: return std::get<bool>(v) ? "1" : "0";
        default: return std::get<std::string>(v);
    }
}

inline bool is_numeric_dtype(Dtype t) { return t == Dtype::Float || t == Dtype::Int; }

struct Column {
    std::string name;
    Dtype dtype = Dtype::Text;
    Role role = Role::Feature;
    std::vector<Value> values;
    std::vector<uint8_t> missing; // parallel to values; nonzero = missing
    // Explicit vocabulary for categorical columns, in first-appearance order
    // unless a transform has rewritten it.
    std::vector<std::string> categories;

    size_t size() const { return values.size(); }
    bool is_missing(size_t row) const { return missing[row] != 0; }

    size_t missing_count() const {
        size_t n = 0;
        for (uint8_t m : missing) n += m != 0;
        return n;
    }

    // Numeric view of a cell; valid for float/int/bool columns.
    double number_at(size_t row) const {
        switch (values[row].index()) {
            case 0: return std::get<double>(values[row]);
            case 1: return static_cast<double>(std::get<int64_t>(values[row]));
            case 2: return std::get<bool>(values[row]) ? 1.0 : 0.0;
            default:
                throw DataError("column '" + name + "' is not numeric");
        }
    }

    std::string string_at(size_t row) const { return value_to_string(values[row]); }

    void rebuild_categories() {
        categories.clear();
        if (dtype != Dtype::Categorical) return;
        std::unordered_map<std::string, bool> seen;
        for (size_t i = 0; i < values.size(); ++i) {
            if (is_missing(i)) continue;
            const std::string& s = std::get<std::string>(values[i]);
            if (!seen.count(s)) {
                seen.emplace(s, true);
                categories.push_back(s);
            }
        }
    }
};

class Table {
public:
    Table() = default;

    explicit Table(std::vector<Column> columns) { reset(std::move(columns)); }

    void reset(std::vector<Column> columns) {
        cols_ = std::move(columns);
        index_.clear();
        n_rows_ = cols_.empty() ? 0 : cols_.front().size();
        size_t targets = 0;
        for (size_t i = 0; i < cols_.size(); ++i) {
            const Column& c = cols_[i];
            if (c.size() != n_rows_)
                throw DataError("column '" + c.name + "' has " + std::to_string(c.size()) +
                                " rows, expected " + std::to_string(n_rows_));
            if (c.missing.size() != c.size())
                throw DataError("column '" + c.name + "' missing-mask length mismatch");
            if (!index_.emplace(c.name, i).second)
                throw DataError("duplicate column name '" + c.name + "'");
            if (c.role == Role::Target) ++targets;
        }
        if (targets > 1) throw DataError("table has more than one target column");
    }

    size_t n_rows() const { return n_rows_; }
    size_t n_cols() const { return cols_.size(); }

    const std::vector<Column>& columns() const { return cols_; }

    bool has_column(const std::string& name) const { return index_.count(name) != 0; }

    const Column& column(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw DataError("no column named '" + name + "'");
        return cols_[it->second];
    }

    const Column& column(size_t i) const { return cols_[i]; }

    std::vector<std::string> column_names() const {
        std::vector<std::string> names;
        names.reserve(cols_.size());
        for (const auto& c : cols_) names.push_back(c.name);
        return names;
    }

    std::vector<std::string> columns_with_role(Role role) const {
        std::vector<std::string> names;
        for (const auto& c : cols_)
            if (c.role == role) names.push_back(c.name);
        return names;
    }

    std::optional<std::string> target_column() const {
        for (const auto& c : cols_)
            if (c.role == Role::Target) return c.name;
        return std::nullopt;
    }

    Table select_rows(const std::vector<size_t>& rows) const {
        std::vector<Column> out;
        out.reserve(cols_.size());
        for (const auto& c : cols_) {
            Column nc;
            nc.name = c.name;
            nc.dtype = c.dtype;
            nc.role = c.role;
            nc.categories = c.categories;
            nc.values.reserve(rows.size());
            nc.missing.reserve(rows.size());
            for (size_t r : rows) {
                nc.values.push_back(c.values[r]);
                nc.missing.push_back(c.missing[r]);
            }
            out.push_back(std::move(nc));
        }
        Table t;
        t.reset(std::move(out));
        return t;
    }

private:
    std::vector<Column> cols_;
    std::unordered_map<std::string, size_t> index_;
    size_t n_rows_ = 0;
};

// --- frame operations ---------------------------------------------------

// Median over non-missing cells; even counts average the two middle values.
inline double column_median(const Column& col) {
    if (!is_numeric_dtype(col.dtype))
        throw DataError("median requires a numeric column, got " + std::string(dtype_name(col.dtype)) +
                        " for '" + col.name + "'");
    std::vector<double> vals;
    vals.reserve(col.size());
    for (size_t i = 0; i < col.size(); ++i)
        if (!col.is_missing(i)) vals.push_back(col.number_at(i));
    if (vals.empty()) throw DataError("median of all-missing column '" + col.name + "'");
    std::sort(vals.begin(), vals.end());
    const size_t n = vals.size();
    if (n % 2 == 1) return vals[n / 2];
    return (vals[n / 2 - 1] + vals[n / 2]) / 2.0;
}

// Counts of non-missing values, as canonical strings, iterated in
// descending count with lexicographic tie-break.
inline std::vector<std::pair<std::string, size_t>> value_frequencies(const Column& col) {
    std::map<std::string, size_t> counts;
    for (size_t i = 0; i < col.size(); ++i)
        if (!col.is_missing(i)) ++counts[col.string_at(i)];
    std::vector<std::pair<std::string, size_t>> out(counts.begin(), counts.end());
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return out;
}

// Deterministic row partition. |test| = round(fraction * n_rows); both
// parts keep the original row order. Identical inputs give identical
// splits on every platform (see rng.hpp).
inline std::pair<Table, Table> train_test_split(const Table& table, double test_fraction,
                                                uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw UsageError("test fraction must lie in (0, 1)");
    const size_t n = table.n_rows();
    if (n < 2) throw DataError("cannot split a table with fewer than 2 rows");
    const size_t n_test = static_cast<size_t>(std::llround(test_fraction * static_cast<double>(n)));
    if (n_test == 0 || n_test == n)
        throw DataError("split would leave an empty part (n=" + std::to_string(n) +
                        ", test=" + std::to_string(n_test) + ")");

    std::vector<size_t> perm(n);
    for (size_t i = 0; i < n; ++i) perm[i] = i;
    Rng rng(seed);
    for (size_t i = n - 1; i > 0; --i) {
        const size_t j = rng.bounded(i + 1);
        std::swap(perm[i], perm[j]);
    }
    std::vector<size_t> test_idx(perm.begin(), perm.begin() + static_cast<long>(n_test));
    std::vector<size_t> train_idx(perm.begin() + static_cast<long>(n_test), perm.end());
    std::sort(test_idx.begin(), test_idx.end());
    std::sort(train_idx.begin(), train_idx.end());
    return {table.select_rows(train_idx), table.select_rows(test_idx)};
}

// --- CSV export ----------------------------------------------------------

inline std::string csv_escape(const std::string& field, char delimiter = ',') {
    bool needs_quoting = false;
    for (char c : field)
        if (c == delimiter || c == '"' || c == '\n' || c == '\r') { needs_quoting = true; break; }
    if (!needs_quoting) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

// UTF-8 CSV with a header row; missing cells become empty fields and
// booleans are written as 0/1.
inline std::string to_csv(const Table& table) {
    std::string out;
    for (size_t j = 0; j < table.n_cols(); ++j) {
        if (j) out += ',';
        out += csv_escape(table.column(j).name);
    }
    out += '\n';
    for (size_t i = 0; i < table.n_rows(); ++i) {
        for (size_t j = 0; j < table.n_cols(); ++j) {
            if (j) out += ',';
            const Column& c = table.column(j);
            if (!c.is_missing(i)) out += csv_escape(c.string_at(i));
        }
        out += '\n';
    }
    return out;
}

// Exact structural equality: names, dtypes, roles, masks and bit-identical
// values. Used by replay and determinism checks.
inline bool tables_identical(const Table& a, const Table& b) {
    if (a.n_rows() != b.n_rows() || a.n_cols() != b.n_cols()) return false;
    for (size_t j = 0; j < a.n_cols(); ++j) {
        const Column& ca = a.column(j);
        const Column& cb = b.column(j);
        if (ca.name != cb.name || ca.dtype != cb.dtype || ca.role != cb.role) return false;
        if (ca.categories != cb.categories) return false;
        for (size_t i = 0; i < a.n_rows(); ++i) {
            if (ca.missing[i] != cb.missing[i]) return false;
            if (ca.missing[i]) continue;
            if (ca.values[i].index() != cb.values[i].index()) return false;
            if (ca.values[i].index() == 0) {
                const double x = std::get<double>(ca.values[i]);
                const double y = std::get<double>(cb.values[i]);
                if (std::memcmp(&x, &y, sizeof(double)) != 0) return false;
            } else if (ca.values[i] != cb.values[i]) {
                return false;
            }
        }
    }
    return true;
}

} // namespace faircorpus
