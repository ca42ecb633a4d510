#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "missboopf/error.hpp"

namespace missboopf {

// ----------------------------------------------------------------------------
// Column kinds and schema
// ----------------------------------------------------------------------------

enum class Kind { Continuous, Nominal, Ordinal };

inline std::string_view kind_name(Kind k) {
    switch (k) {
        case Kind::Continuous: return "continuous";
        case Kind::Nominal: return "nominal";
        case Kind::Ordinal: return "ordinal";
    }
    return "?";
}

/// Measurement scale of one column. Categorical kinds carry their level
/// labels; the position of a label in `levels` is its level index.
class ColumnKind {
public:
    static ColumnKind continuous() { return ColumnKind(Kind::Continuous, {}); }
    static ColumnKind nominal(std::vector<std::string> levels) {
        return ColumnKind(Kind::Nominal, std::move(levels));
    }
    static ColumnKind ordinal(std::vector<std::string> levels) {
        return ColumnKind(Kind::Ordinal, std::move(levels));
    }

    Kind kind() const noexcept { return kind_; }
    bool is_continuous() const noexcept { return kind_ == Kind::Continuous; }
    bool is_categorical() const noexcept { return kind_ != Kind::Continuous; }
    const std::vector<std::string>& levels() const noexcept { return levels_; }
    std::size_t level_count() const noexcept { return levels_.size(); }

    std::optional<std::size_t> level_index(std::string_view label) const {
        auto it = std::find(levels_.begin(), levels_.end(), label);
        if (it == levels_.end()) return std::nullopt;
        return static_cast<std::size_t>(it - levels_.begin());
    }

    friend bool operator==(const ColumnKind&, const ColumnKind&) = default;

private:
    ColumnKind(Kind k, std::vector<std::string> levels) : kind_(k), levels_(std::move(levels)) {
        if (kind_ == Kind::Continuous) return;
        if (levels_.empty()) throw SchemaError("categorical column needs at least one level");
        auto sorted = levels_;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw SchemaError("duplicate level label");
    }

    Kind kind_;
    std::vector<std::string> levels_;
};

struct Column {
    std::string name;
    ColumnKind kind;

    friend bool operator==(const Column&, const Column&) = default;
};

using Schema = std::vector<Column>;

// ----------------------------------------------------------------------------
// Cells
// ----------------------------------------------------------------------------

struct Missing {
    friend bool operator==(Missing, Missing) = default;
};

struct LevelIndex {
    std::size_t value;
    friend bool operator==(LevelIndex, LevelIndex) = default;
};

using Cell = std::variant<Missing, double, LevelIndex>;

/// Missingness indicator grid; `missing(i, j)` is the complement of R_ij.
class Mask {
public:
    Mask() = default;
    Mask(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), bits_(rows * cols, 0) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool missing(std::size_t i, std::size_t j) const { return bits_[j * rows_ + i] != 0; }
    void set(std::size_t i, std::size_t j, bool m) { bits_[j * rows_ + i] = m ? 1 : 0; }

    std::size_t count() const {
        return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
    }
    std::size_t count_in_column(std::size_t j) const {
        auto first = bits_.begin() + static_cast<std::ptrdiff_t>(j * rows_);
        return static_cast<std::size_t>(
            std::count(first, first + static_cast<std::ptrdiff_t>(rows_), std::uint8_t{1}));
    }

    /// FNV-1a over the bit grid; used to show that methods saw the same mask.
    std::uint64_t hash() const {
        std::uint64_t h = 1469598103934665603ull;
        auto mix = [&h](std::uint64_t v) {
            for (int b = 0; b < 8; ++b) {
                h ^= (v >> (8 * b)) & 0xffu;
                h *= 1099511628211ull;
            }
        };
        mix(rows_);
        mix(cols_);
        for (auto bit : bits_) {
            h ^= bit;
            h *= 1099511628211ull;
        }
        return h;
    }

    friend bool operator==(const Mask&, const Mask&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::uint8_t> bits_;
};

// ----------------------------------------------------------------------------
// DataMatrix
// ----------------------------------------------------------------------------

/// n x p mixed-type table. Storage is column-major; continuous cells hold
/// their value, categorical cells hold their level index as a double.
class DataMatrix {
public:
    DataMatrix() = default;

    /// A matrix of the given shape with every cell missing.
    DataMatrix(Schema schema, std::size_t rows)
        : schema_(std::move(schema)),
          rows_(rows),
          values_(schema_.size(), std::vector<double>(rows, 0.0)),
          missing_(schema_.size(), std::vector<std::uint8_t>(rows, 1)) {
        if (schema_.empty()) throw SchemaError("data matrix needs at least one column");
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return schema_.size(); }
    const Schema& schema() const noexcept { return schema_; }
    const Column& column(std::size_t j) const { return schema_.at(j); }

    bool is_missing(std::size_t i, std::size_t j) const { return missing_[j][i] != 0; }

    /// Raw numeric payload of an observed cell (value or level index).
    double value(std::size_t i, std::size_t j) const { return values_[j][i]; }

    std::span<const double> column_values(std::size_t j) const { return values_[j]; }

    Cell cell(std::size_t i, std::size_t j) const {
        if (is_missing(i, j)) return Missing{};
        if (schema_[j].kind.is_continuous()) return values_[j][i];
        return LevelIndex{static_cast<std::size_t>(values_[j][i])};
    }

    void set(std::size_t i, std::size_t j, Cell c) {
        const auto& kind = schema_.at(j).kind;
        if (std::holds_alternative<Missing>(c)) {
            set_missing(i, j);
        } else if (auto* v = std::get_if<double>(&c)) {
            if (!kind.is_continuous()) throw SchemaError("real value in categorical column " + schema_[j].name);
            set_real(i, j, *v);
        } else {
            if (!kind.is_categorical()) throw SchemaError("level in continuous column " + schema_[j].name);
            set_level(i, j, std::get<LevelIndex>(c).value);
        }
    }

    void set_real(std::size_t i, std::size_t j, double v) {
        if (!std::isfinite(v)) throw SchemaError("non-finite value in column " + schema_[j].name);
        values_[j].at(i) = v;
        missing_[j][i] = 0;
    }

    void set_level(std::size_t i, std::size_t j, std::size_t level) {
        if (level >= schema_[j].kind.level_count())
            throw SchemaError("level index out of range in column " + schema_[j].name);
        values_[j].at(i) = static_cast<double>(level);
        missing_[j][i] = 0;
    }

    /// Writes a raw payload (value or level index) respecting the column kind.
    void set_value(std::size_t i, std::size_t j, double v) {
        if (schema_[j].kind.is_continuous())
            set_real(i, j, v);
        else
            set_level(i, j, static_cast<std::size_t>(v));
    }

    void set_missing(std::size_t i, std::size_t j) {
        values_[j].at(i) = 0.0;
        missing_[j][i] = 1;
    }

    std::size_t missing_count(std::size_t j) const {
        return static_cast<std::size_t>(std::count(missing_[j].begin(), missing_[j].end(), std::uint8_t{1}));
    }

    std::size_t missing_count() const {
        std::size_t total = 0;
        for (std::size_t j = 0; j < cols(); ++j) total += missing_count(j);
        return total;
    }

    Mask mask() const {
        Mask m(rows_, cols());
        for (std::size_t j = 0; j < cols(); ++j)
            for (std::size_t i = 0; i < rows_; ++i) m.set(i, j, is_missing(i, j));
        return m;
    }

    /// Sub-table with the given rows and columns, in the given order.
    DataMatrix select(std::span<const std::size_t> row_idx, std::span<const std::size_t> col_idx) const {
        Schema s;
        s.reserve(col_idx.size());
        for (auto j : col_idx) s.push_back(schema_.at(j));
        DataMatrix out;
        out.schema_ = std::move(s);
        out.rows_ = row_idx.size();
        for (auto j : col_idx) {
            std::vector<double> v;
            std::vector<std::uint8_t> m;
            v.reserve(row_idx.size());
            m.reserve(row_idx.size());
            for (auto i : row_idx) {
                v.push_back(values_[j].at(i));
                m.push_back(missing_[j].at(i));
            }
            out.values_.push_back(std::move(v));
            out.missing_.push_back(std::move(m));
        }
        return out;
    }

    friend bool operator==(const DataMatrix& a, const DataMatrix& b) {
        if (a.schema_ != b.schema_ || a.rows_ != b.rows_) return false;
        for (std::size_t j = 0; j < a.cols(); ++j)
            for (std::size_t i = 0; i < a.rows_; ++i) {
                if (a.missing_[j][i] != b.missing_[j][i]) return false;
                if (!a.missing_[j][i] && a.values_[j][i] != b.values_[j][i]) return false;
            }
        return true;
    }

private:
    Schema schema_;
    std::size_t rows_ = 0;
    std::vector<std::vector<double>> values_;
    std::vector<std::vector<std::uint8_t>> missing_;
};

// ----------------------------------------------------------------------------
// CSV and schema I/O
// ----------------------------------------------------------------------------

namespace csv {

/// RFC-4180 reader: quoted fields may contain separators, doubled quotes and
/// line breaks. Trailing CR is stripped.
inline std::vector<std::vector<std::string>> parse(std::string_view text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    bool after_quote = false;
    std::size_t line = 1;

    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
        after_quote = false;
    };
    auto end_record = [&] {
        end_field();
        if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
        record.clear();
    };

    for (std::size_t k = 0; k < text.size(); ++k) {
        char c = text[k];
        if (in_quotes) {
            if (c == '"') {
                if (k + 1 < text.size() && text[k + 1] == '"') {
                    field.push_back('"');
                    ++k;
                } else {
                    in_quotes = false;
                    after_quote = true;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                if (field_started) throw ParseError("stray quote on line " + std::to_string(line));
                in_quotes = true;
                field_started = true;
                break;
            case ',':
                end_field();
                break;
            case '\r':
                break;
            case '\n':
                end_record();
                ++line;
                break;
            default:
                if (after_quote)
                    throw ParseError("text after closing quote on line " + std::to_string(line));
                field.push_back(c);
                field_started = true;
        }
    }
    if (in_quotes) throw ParseError("unterminated quoted field");
    if (field_started || !field.empty() || !record.empty()) end_record();
    return records;
}

inline std::string quote(std::string_view s) {
    bool needs = s.find_first_of(",\"\r\n") != std::string_view::npos;
    if (!needs) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

}  // namespace csv

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Shortest representation that parses back to the same double.
inline std::string format_real(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::optional<double> parse_real(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v))
        return std::nullopt;
    return v;
}

/// Schema sidecar: one `name:kind[:level1,level2,...]` line per column.
/// Blank lines and lines starting with '#' are ignored.
inline Schema parse_schema(std::string_view text) {
    Schema schema;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto c1 = line.find(':');
        if (c1 == std::string::npos || c1 == 0)
            throw ParseError("schema line " + std::to_string(lineno) + ": expected name:kind");
        std::string name = line.substr(0, c1);
        auto c2 = line.find(':', c1 + 1);
        std::string kind = line.substr(c1 + 1, c2 == std::string::npos ? std::string::npos : c2 - c1 - 1);
        std::vector<std::string> levels;
        if (c2 != std::string::npos) {
            std::string rest = line.substr(c2 + 1);
            std::size_t start = 0;
            while (true) {
                auto comma = rest.find(',', start);
                levels.push_back(rest.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
                if (comma == std::string::npos) break;
                start = comma + 1;
            }
        }
        try {
            if (kind == "continuous") {
                if (!levels.empty())
                    throw ParseError("schema line " + std::to_string(lineno) + ": continuous column with levels");
                schema.push_back({name, ColumnKind::continuous()});
            } else if (kind == "nominal") {
                schema.push_back({name, ColumnKind::nominal(std::move(levels))});
            } else if (kind == "ordinal") {
                schema.push_back({name, ColumnKind::ordinal(std::move(levels))});
            } else {
                throw ParseError("schema line " + std::to_string(lineno) + ": unknown kind '" + kind + "'");
            }
        } catch (const SchemaError& e) {
            throw ParseError("schema line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (schema.empty()) throw ParseError("schema has no columns");
    return schema;
}

inline std::string format_schema(const Schema& schema) {
    std::string out;
    for (const auto& col : schema) {
        out += col.name;
        out += ':';
        out += kind_name(col.kind.kind());
        if (col.kind.is_categorical()) {
            out += ':';
            for (std::size_t k = 0; k < col.kind.level_count(); ++k) {
                if (k) out += ',';
                out += col.kind.levels()[k];
            }
        }
        out += '\n';
    }
    return out;
}

inline Schema load_schema(const std::string& path) { return parse_schema(read_file(path)); }

inline DataMatrix parse_csv(std::string_view text, const Schema& schema, std::string_view na_token = "NA") {
    auto records = csv::parse(text);
    if (records.empty()) throw ParseError("CSV has no header row");
    const auto& header = records.front();
    if (header.size() != schema.size())
        throw SchemaError("header has " + std::to_string(header.size()) + " columns, schema has " +
                          std::to_string(schema.size()));
    for (std::size_t j = 0; j < header.size(); ++j)
        if (header[j] != schema[j].name)
            throw SchemaError("header column '" + header[j] + "' does not match schema name '" + schema[j].name + "'");
    if (records.size() < 2) throw ParseError("CSV has no data rows");

    DataMatrix d(schema, records.size() - 1);
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        if (rec.size() != schema.size())
            throw ParseError("row " + std::to_string(r) + " has " + std::to_string(rec.size()) + " fields, expected " +
                             std::to_string(schema.size()));
        for (std::size_t j = 0; j < rec.size(); ++j) {
            const std::string& tok = rec[j];
            if (tok == na_token) continue;
            const auto& kind = schema[j].kind;
            if (kind.is_continuous()) {
                auto v = parse_real(tok);
                if (!v)
                    throw ParseError("row " + std::to_string(r) + ", column '" + schema[j].name +
                                     "': non-numeric token '" + tok + "'");
                d.set_real(r - 1, j, *v);
            } else {
                auto level = kind.level_index(tok);
                if (!level)
                    throw SchemaError("row " + std::to_string(r) + ", column '" + schema[j].name +
                                      "': unknown level '" + tok + "'");
                d.set_level(r - 1, j, *level);
            }
        }
    }
    return d;
}

inline DataMatrix load_csv(const std::string& path, const std::string& schema_path, std::string_view na_token = "NA") {
    return parse_csv(read_file(path), load_schema(schema_path), na_token);
}

inline std::string format_csv(const DataMatrix& d, std::string_view na_token = "NA") {
    std::string out;
    for (std::size_t j = 0; j < d.cols(); ++j) {
        if (j) out += ',';
        out += csv::quote(d.column(j).name);
    }
    out += '\n';
    for (std::size_t i = 0; i < d.rows(); ++i) {
        for (std::size_t j = 0; j < d.cols(); ++j) {
            if (j) out += ',';
            if (d.is_missing(i, j)) {
                out += na_token;
            } else if (d.column(j).kind.is_continuous()) {
                out += format_real(d.value(i, j));
            } else {
                out += csv::quote(d.column(j).kind.levels()[static_cast<std::size_t>(d.value(i, j))]);
            }
        }
        out += '\n';
    }
    return out;
}

inline void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << content;
}

inline void save_csv(const DataMatrix& d, const std::string& path, std::string_view na_token = "NA") {
    write_file(path, format_csv(d, na_token));
}

inline void save_schema(const Schema& s, const std::string& path) { write_file(path, format_schema(s)); }

/// Mask as a 0/1 CSV with the data's header; 1 marks a missing cell.
inline std::string format_mask_csv(const Mask& m, const Schema& schema) {
    std::string out;
    for (std::size_t j = 0; j < schema.size(); ++j) {
        if (j) out += ',';
        out += csv::quote(schema[j].name);
    }
    out += '\n';
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) out += ',';
            out += m.missing(i, j) ? '1' : '0';
        }
        out += '\n';
    }
    return out;
}

// ----------------------------------------------------------------------------
// Column partitioning
// ----------------------------------------------------------------------------

struct ColumnPartition {
    std::size_t col = 0;
    std::vector<std::size_t> obs_idx;
    std::vector<std::size_t> mis_idx;
};

inline ColumnPartition partition_column(const DataMatrix& d, std::size_t j) {
    ColumnPartition p;
    p.col = j;
    for (std::size_t i = 0; i < d.rows(); ++i) (d.is_missing(i, j) ? p.mis_idx : p.obs_idx).push_back(i);
    return p;
}

/// Column visiting order: ascending missing count, ties by column index.
inline std::vector<std::size_t> missing_order(const DataMatrix& d) {
    std::vector<std::size_t> order(d.cols());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<std::size_t> counts(d.cols());
    for (std::size_t j = 0; j < d.cols(); ++j) counts[j] = d.missing_count(j);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return counts[a] < counts[b]; });
    return order;
}

/// The four blocks obtained by splitting on the observed/missing rows of one
/// column: its observed and missing entries, and the remaining columns on
/// the same rows.
struct ObservedSplit {
    ColumnPartition partition;
    DataMatrix target_obs;
    DataMatrix others_obs;
    DataMatrix target_mis;
    DataMatrix others_mis;
};

inline std::vector<std::size_t> other_columns(std::size_t p, std::size_t j) {
    std::vector<std::size_t> cols;
    cols.reserve(p - 1);
    for (std::size_t k = 0; k < p; ++k)
        if (k != j) cols.push_back(k);
    return cols;
}

inline ObservedSplit split_by_observed(const DataMatrix& d, std::size_t j) {
    if (j >= d.cols()) throw InvalidArgument("column index out of range");
    ObservedSplit s;
    s.partition = partition_column(d, j);
    if (s.partition.obs_idx.empty()) throw FullyMissingColumn(j);
    const std::size_t target[] = {j};
    auto others = other_columns(d.cols(), j);
    s.target_obs = d.select(s.partition.obs_idx, target);
    s.others_obs = d.select(s.partition.obs_idx, others);
    s.target_mis = d.select(s.partition.mis_idx, target);
    s.others_mis = d.select(s.partition.mis_idx, others);
    return s;
}

/// Mean of observed cells for continuous columns, mode for categorical ones
/// (ties go to the lowest level index).
inline double column_fill_value(const DataMatrix& d, std::size_t j) {
    const auto& kind = d.column(j).kind;
    if (kind.is_continuous()) {
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < d.rows(); ++i)
            if (!d.is_missing(i, j)) {
                sum += d.value(i, j);
                ++count;
            }
        if (count == 0) throw FullyMissingColumn(j);
        return sum / static_cast<double>(count);
    }
    std::vector<std::size_t> freq(kind.level_count(), 0);
    std::size_t count = 0;
    for (std::size_t i = 0; i < d.rows(); ++i)
        if (!d.is_missing(i, j)) {
            ++freq[static_cast<std::size_t>(d.value(i, j))];
            ++count;
        }
    if (count == 0) throw FullyMissingColumn(j);
    return static_cast<double>(std::max_element(freq.begin(), freq.end()) - freq.begin());
}

inline DataMatrix initial_impute(const DataMatrix& d) {
    DataMatrix out = d;
    for (std::size_t j = 0; j < d.cols(); ++j) {
        double fill = column_fill_value(d, j);
        for (std::size_t i = 0; i < d.rows(); ++i)
            if (d.is_missing(i, j)) out.set_value(i, j, fill);
    }
    return out;
}

}  // namespace missboopf
