#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <map>
#include <string>
#include <vector>

#include <absl/container/flat_hash_map.h>
#include <nlohmann/json.hpp>

#include "joinscout/error.hpp"
#include "joinscout/tabular_io.hpp"
#include "joinscout/text_classify.hpp"

namespace joinscout {

inline constexpr std::size_t kTopWords = 10;
inline constexpr std::size_t kOctiles = 7;

/// Unary meta-features of one attribute, computed from its preprocessed values.
/// Percentage-domain fields are fractions in [0,1].
struct AttributeProfile {
    std::string dataset_name;
    std::string attribute_name;

    // cardinalities
    std::size_t cardinality = 0;
    double uniqueness = 0;
    double incompleteness = 0;
    double entropy = 0;

    // value distribution
    double freq_avg = 0;
    double freq_min = 0;
    double freq_max = 0;
    double freq_sd = 0;
    std::array<double, kOctiles> octiles{};
    double freq_min_pct = 0;
    double freq_max_pct = 0;
    double freq_sd_pct = 0;
    double constancy = 0;
    std::vector<std::string> frequent_words;
    std::vector<std::string> soundex_words;

    // syntax
    DataType data_type = DataType::non_alphanumeric;
    SpecificType specific_type = SpecificType::other;
    std::array<double, kAllDataTypes.size()> pct_data_type{};
    std::array<double, kAllSpecificTypes.size()> pct_specific_type{};
    std::size_t len_longest = 0;
    std::size_t len_shortest = 0;
    double len_avg = 0;
    std::size_t words_count = 0;
    double words_avg = 0;
    std::size_t words_min = 0;
    std::size_t words_max = 0;
    double words_sd = 0;

    double pct_of(DataType t) const noexcept { return pct_data_type[static_cast<std::size_t>(t)]; }
    double pct_of(SpecificType t) const noexcept {
        return pct_specific_type[static_cast<std::size_t>(t)];
    }

    bool operator==(const AttributeProfile&) const = default;
};

/// Pair meta-features of (A, B), assuming all distinct values of the smaller
/// side are covered by the larger.
struct BinaryFeatures {
    double best_containment = 0;
    double flipped_containment = 0;
    double name_distance = 0;
};

namespace detail {

struct DistinctValue {
    std::string_view value;
    std::size_t count = 0;
    std::size_t length = 0;
    std::size_t words = 0;
    DataType data_type = DataType::non_alphanumeric;
    SpecificType specific_type = SpecificType::other;
};

/// Distinct values in first-seen order. A value is classified once, when it
/// is first seen and its bytes are still in cache.
class DistinctCounter {
public:
    void add(std::string_view v) {
        if (const auto it = index_.find(v); it != index_.end()) {
            ++values_[it->second].count;
            return;
        }
        const std::string_view stored = storage_.emplace_back(v);
        index_.emplace(stored, values_.size());
        values_.push_back({stored, 1, v.size(), count_words(v), infer_data_type(v), infer_specific_type(v)});
    }

    const std::vector<DistinctValue>& values() const noexcept { return values_; }

private:
    std::deque<std::string> storage_; // stable addresses for the views below
    absl::flat_hash_map<std::string_view, std::size_t> index_;
    std::vector<DistinctValue> values_;
};

inline double population_sd(double sum, double sum_sq, double n) noexcept {
    if (n <= 0) return 0.0;
    const double mean = sum / n;
    return std::sqrt(std::max(0.0, sum_sq / n - mean * mean));
}

inline AttributeProfile summarize(const Column& c, std::size_t present, const DistinctCounter& counter) {
    AttributeProfile p;
    p.dataset_name = c.dataset_name;
    p.attribute_name = c.attribute_name;
    const auto& distinct = counter.values();
    const std::size_t rows = c.cells.size();
    p.incompleteness = static_cast<double>(rows - present) / static_cast<double>(rows);
    p.cardinality = distinct.size();
    if (present == 0) return p;

    const double n = static_cast<double>(present);
    const double card = static_cast<double>(p.cardinality);
    p.uniqueness = card / n;

    std::array<std::size_t, kAllDataTypes.size()> dtype_counts{};
    std::array<std::size_t, kAllSpecificTypes.size()> stype_counts{};
    std::vector<std::size_t> counts;
    counts.reserve(distinct.size());
    std::size_t len_sum = 0, words_sum = 0;
    std::uint64_t words_sq_sum = 0;
    p.len_shortest = SIZE_MAX;
    p.words_min = SIZE_MAX;
    for (const auto& d : distinct) {
        counts.push_back(d.count);
        dtype_counts[static_cast<std::size_t>(d.data_type)] += d.count;
        stype_counts[static_cast<std::size_t>(d.specific_type)] += d.count;
        len_sum += d.length * d.count;
        words_sum += d.words * d.count;
        words_sq_sum += static_cast<std::uint64_t>(d.words) * d.words * d.count;
        p.len_longest = std::max(p.len_longest, d.length);
        p.len_shortest = std::min(p.len_shortest, d.length);
        p.words_max = std::max(p.words_max, d.words);
        p.words_min = std::min(p.words_min, d.words);
    }
    p.len_avg = static_cast<double>(len_sum) / n;
    p.words_count = words_sum;
    p.words_avg = static_cast<double>(words_sum) / n;
    p.words_sd = population_sd(static_cast<double>(words_sum), static_cast<double>(words_sq_sum), n);

    // Frequency distribution; sorted counts make every reduction order-independent.
    std::sort(counts.begin(), counts.end());
    std::uint64_t count_sq_sum = 0;
    double entropy = 0;
    for (auto k : counts) {
        count_sq_sum += static_cast<std::uint64_t>(k) * k;
        const double pk = static_cast<double>(k) / n;
        entropy -= pk * std::log(pk);
    }
    p.freq_min = static_cast<double>(counts.front());
    p.freq_max = static_cast<double>(counts.back());
    p.freq_avg = n / card;
    p.freq_sd = population_sd(n, static_cast<double>(count_sq_sum), card);
    p.freq_min_pct = p.freq_min / n;
    p.freq_max_pct = p.freq_max / n;
    p.freq_sd_pct = p.freq_sd / n;
    for (std::size_t q = 1; q <= kOctiles; ++q) {
        // nearest rank: ceil(q/8 * card), 1-based
        const std::size_t rank = std::max<std::size_t>(1, (q * counts.size() + 7) / 8);
        p.octiles[q - 1] = static_cast<double>(counts[rank - 1]) / n;
    }
    p.constancy = p.freq_max / static_cast<double>(rows);
    p.entropy = p.cardinality <= 1 ? 0.0 : std::clamp(entropy / std::log(card), 0.0, 1.0);

    std::vector<std::pair<std::string_view, std::size_t>> ranked;
    ranked.reserve(distinct.size());
    for (const auto& d : distinct) ranked.emplace_back(d.value, d.count);
    const auto top = std::min(kTopWords, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(top), ranked.end(),
                      [](const auto& a, const auto& b) {
                          return a.second != b.second ? a.second > b.second : a.first < b.first;
                      });
    for (std::size_t i = 0; i < top; ++i) {
        p.frequent_words.emplace_back(ranked[i].first);
        if (soundex_encodable(ranked[i].first)) p.soundex_words.push_back(soundex(ranked[i].first));
    }

    for (std::size_t i = 0; i < dtype_counts.size(); ++i) {
        p.pct_data_type[i] = static_cast<double>(dtype_counts[i]) / n;
    }
    for (std::size_t i = 0; i < stype_counts.size(); ++i) {
        p.pct_specific_type[i] = static_cast<double>(stype_counts[i]) / n;
    }
    // Modal type; ties resolve to the earlier enumerator.
    p.data_type = kAllDataTypes[static_cast<std::size_t>(
        std::max_element(dtype_counts.begin(), dtype_counts.end()) - dtype_counts.begin())];
    p.specific_type = kAllSpecificTypes[static_cast<std::size_t>(
        std::max_element(stype_counts.begin(), stype_counts.end()) - stype_counts.begin())];
    return p;
}

inline void require_cells(const Column& c) {
    if (c.cells.empty()) {
        throw ProfilingError("cannot profile empty column " + c.dataset_name + "." + c.attribute_name);
    }
}

} // namespace detail

/// Profiles a column whose cells are already preprocessed.
inline AttributeProfile profile_preprocessed(const Column& c) {
    detail::require_cells(c);
    detail::DistinctCounter counter;
    std::size_t present = 0;
    for (const auto& cell : c.cells) {
        if (!cell) continue;
        ++present;
        counter.add(*cell);
    }
    return detail::summarize(c, present, counter);
}

/// Profiles a raw column, preprocessing each value on the fly.
inline AttributeProfile build_profile(const Column& c) {
    detail::require_cells(c);
    detail::DistinctCounter counter;
    std::size_t present = 0;
    std::string value;
    for (const auto& cell : c.cells) {
        if (!cell) continue;
        preprocess_value_into(*cell, value);
        if (value.empty()) continue;
        ++present;
        counter.add(value);
    }
    return detail::summarize(c, present, counter);
}

inline BinaryFeatures binary_features(const AttributeProfile& pa, const AttributeProfile& pb) {
    if (pa.cardinality == 0 || pb.cardinality == 0) {
        throw MetricError("binary features need nonzero cardinalities");
    }
    const auto lo = static_cast<double>(std::min(pa.cardinality, pb.cardinality));
    const auto hi = static_cast<double>(std::max(pa.cardinality, pb.cardinality));
    return BinaryFeatures{lo / static_cast<double>(pa.cardinality), lo / hi,
                          levenshtein_name_distance(pa.attribute_name, pb.attribute_name)};
}

// ---------------------------------------------------------------------------
// JSON persistence

/// Rounds to 12 significant digits so the serialized form stays short and stable.
inline double round_significant(double x) {
    if (!std::isfinite(x) || x == 0.0) return x;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return std::strtod(buf, nullptr);
}

namespace detail {
template <class Array>
nlohmann::json rounded_array(const Array& a) {
    auto out = nlohmann::json::array();
    for (double v : a) out.push_back(round_significant(v));
    return out;
}
} // namespace detail

inline nlohmann::json to_json(const AttributeProfile& p) {
    using detail::rounded_array;
    nlohmann::json pct_dt = nlohmann::json::object();
    for (auto t : kAllDataTypes) pct_dt[std::string(to_string(t))] = round_significant(p.pct_of(t));
    nlohmann::json pct_st = nlohmann::json::object();
    for (auto t : kAllSpecificTypes) pct_st[std::string(to_string(t))] = round_significant(p.pct_of(t));
    return {
        {"dataset_name", p.dataset_name},
        {"attribute_name", p.attribute_name},
        {"cardinality", p.cardinality},
        {"uniqueness", round_significant(p.uniqueness)},
        {"incompleteness", round_significant(p.incompleteness)},
        {"entropy", round_significant(p.entropy)},
        {"freq_avg", round_significant(p.freq_avg)},
        {"freq_min", round_significant(p.freq_min)},
        {"freq_max", round_significant(p.freq_max)},
        {"freq_sd", round_significant(p.freq_sd)},
        {"octiles", rounded_array(p.octiles)},
        {"freq_min_pct", round_significant(p.freq_min_pct)},
        {"freq_max_pct", round_significant(p.freq_max_pct)},
        {"freq_sd_pct", round_significant(p.freq_sd_pct)},
        {"constancy", round_significant(p.constancy)},
        {"frequent_words", p.frequent_words},
        {"soundex_words", p.soundex_words},
        {"data_type", std::string(to_string(p.data_type))},
        {"specific_type", std::string(to_string(p.specific_type))},
        {"pct_data_type", std::move(pct_dt)},
        {"pct_specific_type", std::move(pct_st)},
        {"len_longest", p.len_longest},
        {"len_shortest", p.len_shortest},
        {"len_avg", round_significant(p.len_avg)},
        {"words_count", p.words_count},
        {"words_avg", round_significant(p.words_avg)},
        {"words_min", p.words_min},
        {"words_max", p.words_max},
        {"words_sd", round_significant(p.words_sd)},
    };
}

inline AttributeProfile profile_from_json(const nlohmann::json& j) {
    try {
        AttributeProfile p;
        p.dataset_name = j.at("dataset_name").get<std::string>();
        p.attribute_name = j.at("attribute_name").get<std::string>();
        p.cardinality = j.at("cardinality").get<std::size_t>();
        p.uniqueness = j.at("uniqueness").get<double>();
        p.incompleteness = j.at("incompleteness").get<double>();
        p.entropy = j.at("entropy").get<double>();
        p.freq_avg = j.at("freq_avg").get<double>();
        p.freq_min = j.at("freq_min").get<double>();
        p.freq_max = j.at("freq_max").get<double>();
        p.freq_sd = j.at("freq_sd").get<double>();
        const auto oct = j.at("octiles").get<std::vector<double>>();
        if (oct.size() != kOctiles) throw LayoutError("profile has " + std::to_string(oct.size()) + " octiles");
        std::copy(oct.begin(), oct.end(), p.octiles.begin());
        p.freq_min_pct = j.at("freq_min_pct").get<double>();
        p.freq_max_pct = j.at("freq_max_pct").get<double>();
        p.freq_sd_pct = j.at("freq_sd_pct").get<double>();
        p.constancy = j.at("constancy").get<double>();
        p.frequent_words = j.at("frequent_words").get<std::vector<std::string>>();
        p.soundex_words = j.at("soundex_words").get<std::vector<std::string>>();
        p.data_type = data_type_from_string(j.at("data_type").get<std::string>());
        p.specific_type = specific_type_from_string(j.at("specific_type").get<std::string>());
        for (auto t : kAllDataTypes)
            p.pct_data_type[static_cast<std::size_t>(t)] =
                j.at("pct_data_type").at(std::string(to_string(t))).get<double>();
        for (auto t : kAllSpecificTypes)
            p.pct_specific_type[static_cast<std::size_t>(t)] =
                j.at("pct_specific_type").at(std::string(to_string(t))).get<double>();
        p.len_longest = j.at("len_longest").get<std::size_t>();
        p.len_shortest = j.at("len_shortest").get<std::size_t>();
        p.len_avg = j.at("len_avg").get<double>();
        p.words_count = j.at("words_count").get<std::size_t>();
        p.words_avg = j.at("words_avg").get<double>();
        p.words_min = j.at("words_min").get<std::size_t>();
        p.words_max = j.at("words_max").get<std::size_t>();
        p.words_sd = j.at("words_sd").get<double>();
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed profile: ") + e.what());
    }
}

/// One document per dataset: {"dataset": name, "attributes": [...]}.
inline nlohmann::json profiles_document(const std::string& dataset,
                                        const std::vector<AttributeProfile>& profiles) {
    auto attrs = nlohmann::json::array();
    for (const auto& p : profiles) attrs.push_back(to_json(p));
    return {{"dataset", dataset}, {"attributes", std::move(attrs)}};
}

inline std::vector<AttributeProfile> profiles_from_document(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("attributes") || !doc["attributes"].is_array()) {
        throw ParseError("profile document lacks an 'attributes' array");
    }
    std::vector<AttributeProfile> out;
    for (const auto& a : doc["attributes"]) out.push_back(profile_from_json(a));
    return out;
}

} // namespace joinscout
