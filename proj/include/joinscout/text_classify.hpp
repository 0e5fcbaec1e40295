#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "joinscout/error.hpp"
#include "joinscout/tabular_io.hpp"

namespace joinscout {

enum class DataType { numeric, alphabetic, alphanumeric, non_alphanumeric, datetime };
enum class SpecificType { phone, email, url, ip, username, phrases, other };

inline constexpr std::array<DataType, 5> kAllDataTypes{DataType::numeric, DataType::alphabetic,
                                                      DataType::alphanumeric,
                                                      DataType::non_alphanumeric, DataType::datetime};
inline constexpr std::array<SpecificType, 7> kAllSpecificTypes{
    SpecificType::phone,    SpecificType::email,   SpecificType::url,  SpecificType::ip,
    SpecificType::username, SpecificType::phrases, SpecificType::other};

inline constexpr std::string_view to_string(DataType t) noexcept {
    switch (t) {
    case DataType::numeric: return "numeric";
    case DataType::alphabetic: return "alphabetic";
    case DataType::alphanumeric: return "alphanumeric";
    case DataType::non_alphanumeric: return "nonAlphanumeric";
    case DataType::datetime: return "datetime";
    }
    return "nonAlphanumeric";
}

inline constexpr std::string_view to_string(SpecificType t) noexcept {
    switch (t) {
    case SpecificType::phone: return "phone";
    case SpecificType::email: return "email";
    case SpecificType::url: return "url";
    case SpecificType::ip: return "ip";
    case SpecificType::username: return "username";
    case SpecificType::phrases: return "phrases";
    case SpecificType::other: return "other";
    }
    return "other";
}

inline DataType data_type_from_string(std::string_view s) {
    for (auto t : kAllDataTypes)
        if (to_string(t) == s) return t;
    throw ParseError("unknown data type '" + std::string(s) + "'");
}

inline SpecificType specific_type_from_string(std::string_view s) {
    for (auto t : kAllSpecificTypes)
        if (to_string(t) == s) return t;
    throw ParseError("unknown specific type '" + std::string(s) + "'");
}

/// Reference regular expressions (ECMAScript syntax) for the specific types and
/// date/time shapes. The matchers below implement exactly these languages
/// without a regex engine; the test suite checks the two against each other.
namespace patterns {
inline constexpr const char* kEmail = R"(^[\w.+-]+@[\w-]+\.[\w.]+$)";
inline constexpr const char* kUrl = R"(^([a-z][a-z0-9+.-]*://|www\.)\S+$)";
inline constexpr const char* kIp =
    R"(^(25[0-5]|2[0-4]\d|1\d\d|[1-9]?\d)(\.(25[0-5]|2[0-4]\d|1\d\d|[1-9]?\d)){3}$)";
/// Phone additionally requires 7 to 15 digits in total.
inline constexpr const char* kPhone = R"(^\+?[0-9(][0-9 ().-]*[0-9]$)";
/// Username additionally requires at least one digit or one of `._-`.
inline constexpr const char* kUsername = R"(^[a-z0-9._-]{3,}$)";
inline constexpr const char* kIsoDate = R"(^\d{4}-\d{2}-\d{2}([ t]\d{2}:\d{2}(:\d{2}(\.\d+)?)?)?$)";
inline constexpr const char* kSlashDate = R"(^\d{1,2}/\d{1,2}/\d{4}$)";
inline constexpr const char* kClockTime = R"(^\d{1,2}:\d{2}(:\d{2})?( ?(am|pm))?$)";
inline constexpr const char* kHourTime = R"(^\d{1,2} ?(am|pm)$)";
inline constexpr std::size_t kPhoneMinDigits = 7;
inline constexpr std::size_t kPhoneMaxDigits = 15;
inline constexpr std::size_t kPhraseMinWords = 4;
} // namespace patterns

namespace detail {

inline bool is_digit(char c) noexcept { return c >= '0' && c <= '9'; }
inline bool is_lower(char c) noexcept { return c >= 'a' && c <= 'z'; }
inline bool is_letter(char c) noexcept { return is_lower(c) || (c >= 'A' && c <= 'Z'); }
inline bool is_word_char(char c) noexcept { return is_letter(c) || is_digit(c) || c == '_'; }
inline bool is_regex_space(char c) noexcept {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

template <class Pred>
bool all_of(std::string_view s, Pred p) {
    return std::all_of(s.begin(), s.end(), p);
}

/// Consumes between min and max digits at s[i]; returns the count or -1.
inline int take_digits(std::string_view s, std::size_t& i, int min, int max) noexcept {
    int n = 0;
    while (n < max && i < s.size() && is_digit(s[i])) ++i, ++n;
    return n >= min ? n : -1;
}

inline bool match_ampm(std::string_view s, std::size_t& i) noexcept {
    if (i + 2 <= s.size() && (s.substr(i, 2) == "am" || s.substr(i, 2) == "pm")) {
        i += 2;
        return true;
    }
    return false;
}

inline bool match_iso_date(std::string_view s) noexcept {
    std::size_t i = 0;
    if (take_digits(s, i, 4, 4) < 0 || i >= s.size() || s[i++] != '-') return false;
    if (take_digits(s, i, 2, 2) < 0 || i >= s.size() || s[i++] != '-') return false;
    if (take_digits(s, i, 2, 2) < 0) return false;
    if (i == s.size()) return true;
    if (s[i] != ' ' && s[i] != 't') return false;
    ++i;
    if (take_digits(s, i, 2, 2) < 0 || i >= s.size() || s[i++] != ':') return false;
    if (take_digits(s, i, 2, 2) < 0) return false;
    if (i == s.size()) return true;
    if (s[i++] != ':' || take_digits(s, i, 2, 2) < 0) return false;
    if (i == s.size()) return true;
    if (s[i++] != '.') return false;
    return take_digits(s, i, 1, 1 << 30) > 0 && i == s.size();
}

inline bool match_slash_date(std::string_view s) noexcept {
    std::size_t i = 0;
    if (take_digits(s, i, 1, 2) < 0 || i >= s.size() || s[i++] != '/') return false;
    if (take_digits(s, i, 1, 2) < 0 || i >= s.size() || s[i++] != '/') return false;
    return take_digits(s, i, 4, 4) == 4 && i == s.size();
}

inline bool match_clock_time(std::string_view s) noexcept {
    std::size_t i = 0;
    if (take_digits(s, i, 1, 2) < 0 || i >= s.size() || s[i++] != ':') return false;
    if (take_digits(s, i, 2, 2) < 0) return false;
    if (i < s.size() && s[i] == ':') {
        ++i;
        if (take_digits(s, i, 2, 2) < 0) return false;
    }
    if (i == s.size()) return true;
    if (s[i] == ' ') ++i;
    return match_ampm(s, i) && i == s.size();
}

inline bool match_hour_time(std::string_view s) noexcept {
    std::size_t i = 0;
    if (take_digits(s, i, 1, 2) < 0) return false;
    if (i < s.size() && s[i] == ' ') ++i;
    return match_ampm(s, i) && i == s.size();
}

inline bool match_octet(std::string_view o) noexcept {
    if (o.empty() || o.size() > 3 || !all_of(o, is_digit)) return false;
    if (o.size() > 1 && o[0] == '0') return false;
    int v = 0;
    for (char c : o) v = v * 10 + (c - '0');
    return v <= 255;
}

} // namespace detail

inline bool is_datetime(std::string_view s) noexcept {
    using namespace detail;
    return match_iso_date(s) || match_slash_date(s) || match_clock_time(s) || match_hour_time(s);
}

inline bool is_email(std::string_view s) noexcept {
    using namespace detail;
    const auto at = s.find('@');
    if (at == 0 || at == std::string_view::npos) return false;
    const auto local = s.substr(0, at);
    if (!all_of(local, [](char c) { return is_word_char(c) || c == '.' || c == '+' || c == '-'; }))
        return false;
    const auto rest = s.substr(at + 1);
    const auto dot = rest.find('.');
    if (dot == 0 || dot == std::string_view::npos || dot + 1 >= rest.size()) return false;
    return all_of(rest.substr(0, dot), [](char c) { return is_word_char(c) || c == '-'; }) &&
           all_of(rest.substr(dot + 1), [](char c) { return is_word_char(c) || c == '.'; });
}

inline bool is_url(std::string_view s) noexcept {
    using namespace detail;
    if (std::any_of(s.begin(), s.end(), is_regex_space)) return false;
    if (s.size() > 4 && s.substr(0, 4) == "www.") return true;
    const auto colon = s.find(':');
    if (colon == 0 || colon == std::string_view::npos) return false;
    const auto scheme = s.substr(0, colon);
    if (!is_lower(scheme[0]) ||
        !all_of(scheme, [](char c) {
            return is_lower(c) || is_digit(c) || c == '+' || c == '.' || c == '-';
        })) {
        return false;
    }
    return s.substr(colon, 3) == "://" && s.size() > colon + 3;
}

inline bool is_ip(std::string_view s) noexcept {
    std::size_t start = 0;
    for (int part = 0; part < 4; ++part) {
        const auto dot = s.find('.', start);
        const bool last = part == 3;
        if (last != (dot == std::string_view::npos)) return false;
        const auto octet = s.substr(start, last ? std::string_view::npos : dot - start);
        if (!detail::match_octet(octet)) return false;
        start = dot + 1;
    }
    return true;
}

inline bool is_phone(std::string_view s) noexcept {
    using namespace detail;
    std::size_t i = 0;
    if (i < s.size() && s[i] == '+') ++i;
    if (s.size() < i + 2) return false;
    if (!(is_digit(s[i]) || s[i] == '(') || !is_digit(s.back())) return false;
    std::size_t digits = 0;
    for (std::size_t k = i; k < s.size(); ++k) {
        const char c = s[k];
        if (is_digit(c)) {
            ++digits;
        } else if (c != ' ' && c != '(' && c != ')' && c != '.' && c != '-') {
            return false;
        }
    }
    return digits >= patterns::kPhoneMinDigits && digits <= patterns::kPhoneMaxDigits;
}

inline bool is_username(std::string_view s) noexcept {
    using namespace detail;
    if (s.size() < 3) return false;
    bool marker = false;
    for (char c : s) {
        const bool sep = c == '.' || c == '_' || c == '-';
        if (!(is_lower(c) || is_digit(c) || sep)) return false;
        marker = marker || sep || is_digit(c);
    }
    return marker;
}

inline std::size_t count_words(std::string_view s) noexcept {
    std::size_t n = 0;
    bool in_word = false;
    for (char c : s) {
        if (detail::is_ascii_space(static_cast<unsigned char>(c))) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++n;
        }
    }
    return n;
}

/// Broad type of a single (preprocessed) value.
inline DataType infer_data_type(std::string_view v) noexcept {
    using namespace detail;
    if (is_datetime(v)) return DataType::datetime;
    bool letters = false, digits = false, spaces_only_extra = true, numeric_only = true;
    for (char c : v) {
        const bool d = is_digit(c), l = is_letter(c), sp = c == ' ';
        letters = letters || l;
        digits = digits || d;
        if (!(d || c == '.' || c == '-' || c == '+')) numeric_only = false;
        if (!(d || l || sp)) spaces_only_extra = false;
    }
    if (numeric_only && digits) return DataType::numeric;
    if (spaces_only_extra && letters && !digits) return DataType::alphabetic;
    if (spaces_only_extra && letters && digits) return DataType::alphanumeric;
    return DataType::non_alphanumeric;
}

/// Fine-grained type of a single (preprocessed) value; first match wins in the
/// order email, url, ip, phone, username, phrases.
inline SpecificType infer_specific_type(std::string_view v) noexcept {
    if (is_email(v)) return SpecificType::email;
    if (is_url(v)) return SpecificType::url;
    if (is_ip(v)) return SpecificType::ip;
    if (is_phone(v)) return SpecificType::phone;
    if (is_username(v)) return SpecificType::username;
    if (count_words(v) >= patterns::kPhraseMinWords) return SpecificType::phrases;
    return SpecificType::other;
}

namespace detail {
inline char soundex_digit(char upper) noexcept {
    switch (upper) {
    case 'B': case 'F': case 'P': case 'V': return '1';
    case 'C': case 'G': case 'J': case 'K': case 'Q': case 'S': case 'X': case 'Z': return '2';
    case 'D': case 'T': return '3';
    case 'L': return '4';
    case 'M': case 'N': return '5';
    case 'R': return '6';
    case 'H': case 'W': return 'h';
    default: return '0'; // vowels and Y
    }
}
} // namespace detail

/// American Soundex. Non-letter characters are skipped; throws when `w` has no
/// ASCII letter.
inline std::string soundex(std::string_view w) {
    std::string letters;
    for (char c : w) {
        if (c >= 'a' && c <= 'z') letters.push_back(static_cast<char>(c - 32));
        else if (c >= 'A' && c <= 'Z') letters.push_back(c);
    }
    if (letters.empty()) throw ProfilingError("soundex: no letters in '" + std::string(w) + "'");
    std::string code(1, letters[0]);
    char prev = detail::soundex_digit(letters[0]);
    for (std::size_t i = 1; i < letters.size() && code.size() < 4; ++i) {
        const char d = detail::soundex_digit(letters[i]);
        if (d == 'h') continue;
        if (d != '0' && d != prev) code.push_back(d);
        prev = d;
    }
    code.resize(4, '0');
    return code;
}

inline bool soundex_encodable(std::string_view w) noexcept {
    return std::any_of(w.begin(), w.end(), detail::is_letter);
}

/// Case-insensitive edit distance between two names divided by the longer
/// length, counted in code points.
inline double levenshtein_name_distance(std::string_view a, std::string_view b) {
    auto decode = [](std::string_view s) {
        std::vector<char32_t> out;
        std::size_t i = 0;
        while (i < s.size()) {
            char32_t cp = detail::decode_utf8(s, i);
            if (cp >= 'A' && cp <= 'Z') cp += 32;
            out.push_back(cp);
        }
        return out;
    };
    const auto x = decode(a), y = decode(b);
    if (x.empty() && y.empty()) return 0.0;
    std::vector<std::size_t> row(y.size() + 1);
    for (std::size_t j = 0; j <= y.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= x.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= y.size(); ++j) {
            const std::size_t up = row[j];
            row[j] = std::min({up + 1, row[j - 1] + 1, diag + (x[i - 1] == y[j - 1] ? 0 : 1)});
            diag = up;
        }
    }
    return static_cast<double>(row[y.size()]) / static_cast<double>(std::max(x.size(), y.size()));
}

} // namespace joinscout
