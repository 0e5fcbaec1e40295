#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "joinscout/detail/fold_table.hpp"
#include "joinscout/error.hpp"

namespace joinscout {

/// A cell is either a raw text value or missing.
using Cell = std::optional<std::string>;

/// One attribute of one dataset. Identity is (dataset_name, attribute_name).
struct Column {
    std::string dataset_name;
    std::string attribute_name;
    std::vector<Cell> cells;

    std::size_t size() const noexcept { return cells.size(); }
};

struct Dataset {
    std::string name;
    std::vector<Column> columns;
    std::size_t row_count = 0;
};

struct CsvOptions {
    char delimiter = ',';
    bool has_header = true;
};

inline constexpr double kDefaultNumericExclusion = 0.5;

namespace detail {

inline bool is_ascii_space(unsigned char c) noexcept {
    // Python's str.isspace() also treats the 0x1C-0x1F separators as space.
    return c == ' ' || (c >= 0x09 && c <= 0x0D) || (c >= 0x1C && c <= 0x1F);
}

inline std::string_view trim_ascii(std::string_view s) noexcept {
    while (!s.empty() && is_ascii_space(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && is_ascii_space(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline bool iequals(std::string_view a, std::string_view b) noexcept {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               auto lx = static_cast<unsigned char>(x), ly = static_cast<unsigned char>(y);
               if (lx >= 'A' && lx <= 'Z') lx = static_cast<unsigned char>(lx + 32);
               if (ly >= 'A' && ly <= 'Z') ly = static_cast<unsigned char>(ly + 32);
               return lx == ly;
           });
}

inline void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

inline constexpr char32_t kReplacementChar = 0xFFFD;

/// Decodes one UTF-8 sequence starting at s[i]. Advances i past the sequence,
/// or past a single byte when the sequence is invalid (returning U+FFFD).
inline char32_t decode_utf8(std::string_view s, std::size_t& i) noexcept {
    const auto b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    std::size_t len = 0;
    char32_t cp = 0;
    char32_t min = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2, cp = b0 & 0x1F, min = 0x80;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3, cp = b0 & 0x0F, min = 0x800;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4, cp = b0 & 0x07, min = 0x10000;
    } else {
        ++i;
        return kReplacementChar;
    }
    if (i + len > s.size()) {
        ++i;
        return kReplacementChar;
    }
    for (std::size_t k = 1; k < len; ++k) {
        const auto b = static_cast<unsigned char>(s[i + k]);
        if ((b & 0xC0) != 0x80) {
            ++i;
            return kReplacementChar;
        }
        cp = (cp << 6) | (b & 0x3F);
    }
    if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
        ++i;
        return kReplacementChar;
    }
    i += len;
    return cp;
}

inline bool is_unicode_space(char32_t cp) noexcept {
    return std::binary_search(kUnicodeSpaces.begin(), kUnicodeSpaces.end(), cp);
}

/// ASCII letter/digit that `cp` folds to, or '\0' when it folds to nothing.
inline char fold_codepoint(char32_t cp) noexcept {
    auto it = std::lower_bound(kFoldTable.begin(), kFoldTable.end(), cp,
                               [](const auto& e, char32_t v) { return e.first < v; });
    return (it != kFoldTable.end() && it->first == cp) ? it->second : '\0';
}

inline bool is_kept_symbol(char c) noexcept {
    return c == '.' || c == '-' || c == '_' || c == '@' || c == ':' || c == '/';
}

} // namespace detail

/// Replaces every invalid UTF-8 byte with U+FFFD. Valid input is returned unchanged.
inline bool is_valid_utf8(std::string_view s) noexcept {
    std::size_t i = 0;
    while (i < s.size()) {
        if (static_cast<unsigned char>(s[i]) < 0x80) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        if (detail::decode_utf8(s, i) == detail::kReplacementChar && i == start + 1) return false;
    }
    return true;
}

inline std::string sanitize_utf8(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        const auto b = static_cast<unsigned char>(s[i]);
        if (b < 0x80) {
            out.push_back(s[i++]);
            continue;
        }
        const std::size_t start = i;
        const char32_t cp = detail::decode_utf8(s, i);
        if (cp == detail::kReplacementChar && i == start + 1) {
            detail::append_utf8(out, cp);
        } else {
            out.append(s.substr(start, i - start));
        }
    }
    return out;
}

inline bool is_missing_marker(std::string_view raw) noexcept {
    const auto t = detail::trim_ascii(raw);
    return t.empty() || detail::iequals(t, "na") || detail::iequals(t, "null");
}

/// True for plain decimal numbers: optional sign, digits with an optional
/// fraction (or comma thousands grouping), optional exponent.
inline bool is_numeric_cell(std::string_view raw) noexcept {
    auto s = detail::trim_ascii(raw);
    if (s.empty()) return false;
    std::size_t i = 0;
    auto digit = [&](std::size_t k) { return k < s.size() && s[k] >= '0' && s[k] <= '9'; };
    if (s[i] == '+' || s[i] == '-') ++i;
    std::size_t int_digits = 0;
    const std::size_t int_start = i;
    while (digit(i)) ++i, ++int_digits;
    if (i < s.size() && s[i] == ',' && int_digits >= 1 && int_digits <= 3) {
        while (i < s.size() && s[i] == ',') {
            if (!(digit(i + 1) && digit(i + 2) && digit(i + 3))) return false;
            i += 4;
        }
        if (digit(i)) return false;
    }
    std::size_t frac_digits = 0;
    if (i < s.size() && s[i] == '.') {
        ++i;
        while (digit(i)) ++i, ++frac_digits;
    }
    if (i == int_start || (int_digits == 0 && frac_digits == 0)) return false;
    if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
        ++i;
        if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
        if (!digit(i)) return false;
        while (digit(i)) ++i;
    }
    return i == s.size();
}

/// Normalizes one raw value for profiling: lowercase, strip accents through
/// canonical decomposition, keep only [a-z0-9], whitespace and `.-_@:/`,
/// collapse whitespace runs, trim. An empty result means the value is missing.
inline void preprocess_value_into(std::string_view raw, std::string& out) {
    out.clear();
    bool pending_space = false;
    auto emit = [&](char c) {
        if (pending_space && !out.empty()) out.push_back(' ');
        pending_space = false;
        out.push_back(c);
    };
    std::size_t i = 0;
    while (i < raw.size()) {
        const auto b = static_cast<unsigned char>(raw[i]);
        if (b < 0x80) {
            ++i;
            if (b >= 'A' && b <= 'Z') {
                emit(static_cast<char>(b + 32));
            } else if ((b >= 'a' && b <= 'z') || (b >= '0' && b <= '9') ||
                       detail::is_kept_symbol(static_cast<char>(b))) {
                emit(static_cast<char>(b));
            } else if (detail::is_ascii_space(b)) {
                pending_space = true;
            }
            continue;
        }
        const char32_t cp = detail::decode_utf8(raw, i);
        if (detail::is_unicode_space(cp)) {
            pending_space = true;
        } else if (const char folded = detail::fold_codepoint(cp); folded != '\0') {
            emit(folded);
        }
    }
}

inline std::string preprocess_value(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    preprocess_value_into(raw, out);
    return out;
}

inline Column preprocess(const Column& c) {
    Column out{c.dataset_name, c.attribute_name, {}};
    out.cells.reserve(c.cells.size());
    for (const auto& cell : c.cells) {
        if (!cell) {
            out.cells.emplace_back(std::nullopt);
            continue;
        }
        auto v = preprocess_value(*cell);
        if (v.empty()) {
            out.cells.emplace_back(std::nullopt);
        } else {
            out.cells.emplace_back(std::move(v));
        }
    }
    return out;
}

namespace detail {

/// Streaming RFC-4180 style reader: double-quote enclosure, doubled-quote
/// escape, LF or CRLF record ends. Blank lines are skipped.
class DelimitedReader {
public:
    DelimitedReader(std::string_view text, char delimiter) : text_(text), delim_(delimiter) {
        if (text_.substr(0, 3) == "\xEF\xBB\xBF") text_.remove_prefix(3);
    }

    /// Reads the next non-blank record into `fields`. Returns false at end of input.
    bool next(std::vector<std::string>& fields) {
        fields.clear();
        while (pos_ < text_.size()) {
            ++record_;
            const bool blank = read_record(fields);
            if (!blank) return true;
            fields.clear();
        }
        return false;
    }

    /// 1-based physical record number of the last record read.
    std::size_t record_number() const noexcept { return record_; }

private:
    bool read_record(std::vector<std::string>& fields) {
        std::string field;
        bool any_content = false;
        while (true) {
            if (pos_ >= text_.size()) {
                fields.push_back(std::move(field));
                return !any_content;
            }
            char c = text_[pos_];
            if (c == '"' && field.empty()) {
                any_content = true;
                ++pos_;
                read_quoted(field);
                continue;
            }
            if (c == delim_) {
                any_content = true;
                fields.push_back(std::move(field));
                field.clear();
                ++pos_;
                continue;
            }
            if (c == '\n' || c == '\r') {
                ++pos_;
                if (c == '\r' && pos_ < text_.size() && text_[pos_] == '\n') ++pos_;
                fields.push_back(std::move(field));
                return !any_content;
            }
            any_content = true;
            // Fast path over plain content.
            std::size_t end = pos_;
            while (end < text_.size() && text_[end] != delim_ && text_[end] != '\n' &&
                   text_[end] != '\r') {
                ++end;
            }
            field.append(text_.substr(pos_, end - pos_));
            pos_ = end;
        }
    }

    void read_quoted(std::string& field) {
        const std::size_t opened_at = record_;
        while (true) {
            if (pos_ >= text_.size()) {
                throw ParseError("row " + std::to_string(opened_at) + ": unterminated quoted field");
            }
            const auto close = text_.find('"', pos_);
            if (close == std::string_view::npos) {
                pos_ = text_.size();
                continue;
            }
            field.append(text_.substr(pos_, close - pos_));
            pos_ = close + 1;
            if (pos_ < text_.size() && text_[pos_] == '"') {
                field.push_back('"');
                ++pos_;
                continue;
            }
            return;
        }
    }

    std::string_view text_;
    char delim_;
    std::size_t pos_ = 0;
    std::size_t record_ = 0;
};

inline std::vector<std::string> unique_names(std::vector<std::string> names) {
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < names.size(); ++i) {
        auto& n = names[i];
        auto t = std::string(trim_ascii(n));
        if (t.empty()) t = "col_" + std::to_string(i);
        std::string candidate = t;
        for (int suffix = 2; seen.count(candidate) != 0; ++suffix) {
            candidate = t + "_" + std::to_string(suffix);
        }
        seen.insert(candidate);
        n = std::move(candidate);
    }
    return names;
}

} // namespace detail

/// Parses delimited text already in memory. `name` becomes the dataset name.
inline Dataset parse_dataset(std::string_view raw_text, std::string name, CsvOptions opts = {}) {
    std::string repaired;
    std::string_view text = raw_text;
    if (!is_valid_utf8(raw_text)) {
        repaired = sanitize_utf8(raw_text);
        text = repaired;
    }
    detail::DelimitedReader reader(text, opts.delimiter);
    std::vector<std::string> fields;
    if (!reader.next(fields)) throw ParseError("no header");

    Dataset ds;
    ds.name = std::move(name);
    std::vector<std::string> header;
    bool pending_first_row = false;
    if (opts.has_header) {
        header = detail::unique_names(fields);
    } else {
        for (std::size_t i = 0; i < fields.size(); ++i) header.push_back("col_" + std::to_string(i));
        pending_first_row = true;
    }
    // line count bounds the row count
    const auto lines = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) + 1;
    ds.columns.reserve(header.size());
    for (auto& h : header) {
        ds.columns.push_back(Column{ds.name, std::move(h), {}});
        ds.columns.back().cells.reserve(lines);
    }

    auto add_row = [&](std::vector<std::string>& row) {
        if (row.size() != ds.columns.size()) {
            throw ParseError("row " + std::to_string(reader.record_number()) + ": expected " +
                             std::to_string(ds.columns.size()) + " cells, found " +
                             std::to_string(row.size()));
        }
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (is_missing_marker(row[i])) {
                ds.columns[i].cells.emplace_back(std::nullopt);
            } else {
                ds.columns[i].cells.emplace_back(std::move(row[i]));
            }
        }
        ++ds.row_count;
    };
    if (pending_first_row) add_row(fields);
    while (reader.next(fields)) add_row(fields);
    return ds;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("error reading " + path.string());
    return std::move(buf).str();
}

/// Loads a delimited file. The dataset is named after the file stem.
inline Dataset load_dataset(const std::filesystem::path& path, char delimiter = ',',
                            bool has_header = true) {
    if (std::filesystem::is_directory(path)) throw IoError(path.string() + " is a directory");
    const auto text = read_file(path);
    try {
        return parse_dataset(text, path.stem().string(), CsvOptions{delimiter, has_header});
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

/// Fraction of non-missing cells that are purely numeric; 0 for an all-missing column.
inline double numeric_fraction(const Column& c) noexcept {
    std::size_t present = 0, numeric = 0;
    for (const auto& cell : c.cells) {
        if (!cell) continue;
        ++present;
        if (is_numeric_cell(*cell)) ++numeric;
    }
    return present == 0 ? 0.0 : static_cast<double>(numeric) / static_cast<double>(present);
}

/// Indices of the textual columns eligible for join discovery.
inline std::vector<std::size_t> string_column_indices(const Dataset& d,
                                                      double numeric_exclusion_threshold = kDefaultNumericExclusion) {
    if (!(numeric_exclusion_threshold >= 0.0 && numeric_exclusion_threshold <= 1.0)) {
        throw ParseError("numeric exclusion threshold must lie in [0,1]");
    }
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < d.columns.size(); ++i) {
        const auto& c = d.columns[i];
        const bool has_value = std::any_of(c.cells.begin(), c.cells.end(),
                                           [](const Cell& x) { return x.has_value(); });
        if (has_value && numeric_fraction(c) < numeric_exclusion_threshold) out.push_back(i);
    }
    return out;
}

/// Textual columns eligible for join discovery. All-missing columns are dropped.
inline std::vector<Column> string_columns(const Dataset& d,
                                          double numeric_exclusion_threshold = kDefaultNumericExclusion) {
    std::vector<Column> out;
    for (auto i : string_column_indices(d, numeric_exclusion_threshold)) out.push_back(d.columns[i]);
    return out;
}

} // namespace joinscout
