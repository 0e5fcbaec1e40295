#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "joinscout/error.hpp"
#include "joinscout/profiler.hpp"

namespace joinscout {

/// Version tag of the distance-vector layout below. Bump whenever an entry
/// is added, removed, or reordered; models and stores carry it.
inline constexpr std::string_view kLayoutVersion = "joinscout-dv1";

/// Meta-features that are Z-score normalized across the comparison pool.
inline constexpr std::array<std::string_view, 14> kNormalizedFeatures{
    "cardinality", "entropy",     "freq_avg",     "freq_min",    "freq_max",
    "freq_sd",     "len_longest", "len_shortest", "len_avg",     "words_count",
    "words_avg",   "words_min",   "words_max",    "words_sd"};

/// Fraction-valued meta-features that enter as raw absolute differences.
inline constexpr std::array<std::string_view, 25> kRawFeatures{
    "uniqueness",        "incompleteness",     "octile_1",           "octile_2",
    "octile_3",          "octile_4",           "octile_5",           "octile_6",
    "octile_7",          "freq_min_pct",       "freq_max_pct",       "freq_sd_pct",
    "constancy",         "pct_numeric",        "pct_alphabetic",     "pct_alphanumeric",
    "pct_nonAlphanumeric", "pct_datetime",     "pct_phone",          "pct_email",
    "pct_url",           "pct_ip",             "pct_username",       "pct_phrases",
    "pct_other"};

inline constexpr std::array<std::string_view, 2> kCategoricalFeatures{"data_type", "specific_type"};
inline constexpr std::array<std::string_view, 2> kSetFeatures{"frequent_words", "soundex_words"};
inline constexpr std::array<std::string_view, 3> kBinaryFeatures{"best_containment",
                                                                 "flipped_containment",
                                                                 "name_distance"};

inline constexpr std::size_t kDistanceArity = kNormalizedFeatures.size() + kRawFeatures.size() +
                                              kCategoricalFeatures.size() + kSetFeatures.size() +
                                              kBinaryFeatures.size();

/// Entry names of the distance vector, in order.
inline std::vector<std::string_view> distance_layout() {
    std::vector<std::string_view> out;
    out.reserve(kDistanceArity);
    auto append = [&](const auto& names) {
        for (auto n : names) out.push_back(n);
    };
    append(kNormalizedFeatures);
    append(kRawFeatures);
    append(kCategoricalFeatures);
    append(kSetFeatures);
    append(kBinaryFeatures);
    return out;
}

inline std::array<double, kNormalizedFeatures.size()> normalized_values(const AttributeProfile& p) {
    auto d = [](std::size_t v) { return static_cast<double>(v); };
    return {d(p.cardinality), p.entropy,           p.freq_avg,        p.freq_min,
            p.freq_max,       p.freq_sd,           d(p.len_longest),  d(p.len_shortest),
            p.len_avg,        d(p.words_count),    p.words_avg,       d(p.words_min),
            d(p.words_max),   p.words_sd};
}

inline std::array<double, kRawFeatures.size()> raw_values(const AttributeProfile& p) {
    std::array<double, kRawFeatures.size()> out{};
    std::size_t i = 0;
    out[i++] = p.uniqueness;
    out[i++] = p.incompleteness;
    for (double o : p.octiles) out[i++] = o;
    out[i++] = p.freq_min_pct;
    out[i++] = p.freq_max_pct;
    out[i++] = p.freq_sd_pct;
    out[i++] = p.constancy;
    for (double v : p.pct_data_type) out[i++] = v;
    for (double v : p.pct_specific_type) out[i++] = v;
    return out;
}

struct StatsEntry {
    double mean = 0;
    double sd = 0;

    bool constant() const noexcept { return sd == 0.0; }
};

/// Population mean and standard deviation of each normalized meta-feature.
struct NormalizationStats {
    std::vector<StatsEntry> entries; ///< parallel to kNormalizedFeatures

    bool operator==(const NormalizationStats& o) const {
        return entries.size() == o.entries.size() &&
               std::equal(entries.begin(), entries.end(), o.entries.begin(),
                          [](const StatsEntry& a, const StatsEntry& b) {
                              return a.mean == b.mean && a.sd == b.sd;
                          });
    }
};

inline NormalizationStats compute_normalization(std::span<const AttributeProfile> pool) {
    if (pool.size() < 2) throw MetricError("normalization pool needs at least 2 profiles");
    constexpr std::size_t m = kNormalizedFeatures.size();
    std::array<double, m> sum{};
    for (const auto& p : pool) {
        const auto v = normalized_values(p);
        for (std::size_t i = 0; i < m; ++i) sum[i] += v[i];
    }
    const double n = static_cast<double>(pool.size());
    NormalizationStats stats;
    stats.entries.resize(m);
    for (std::size_t i = 0; i < m; ++i) stats.entries[i].mean = sum[i] / n;
    // second pass keeps the variance exact for constant features
    std::array<double, m> sq{};
    for (const auto& p : pool) {
        const auto v = normalized_values(p);
        for (std::size_t i = 0; i < m; ++i) {
            const double d = v[i] - stats.entries[i].mean;
            sq[i] += d * d;
        }
    }
    for (std::size_t i = 0; i < m; ++i) stats.entries[i].sd = std::sqrt(sq[i] / n);
    return stats;
}

inline double zscore(double x, const StatsEntry& e) noexcept {
    return e.sd == 0.0 ? 0.0 : (x - e.mean) / e.sd;
}

inline nlohmann::json to_json(const NormalizationStats& s) {
    auto out = nlohmann::json::object();
    for (std::size_t i = 0; i < s.entries.size() && i < kNormalizedFeatures.size(); ++i) {
        out[std::string(kNormalizedFeatures[i])] = {{"mean", s.entries[i].mean}, {"sd", s.entries[i].sd}};
    }
    return out;
}

inline NormalizationStats stats_from_json(const nlohmann::json& j) {
    NormalizationStats s;
    try {
        for (auto name : kNormalizedFeatures) {
            const auto& e = j.at(std::string(name));
            s.entries.push_back({e.at("mean").get<double>(), e.at("sd").get<double>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw LayoutError(std::string("normalization stats do not match the layout: ") + e.what());
    }
    return s;
}

struct DistanceVector {
    std::string layout{kLayoutVersion};
    std::vector<double> values;
};

namespace detail {
inline double set_distance(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    const std::set<std::string_view> x(a.begin(), a.end()), y(b.begin(), b.end());
    if (x.empty() && y.empty()) return 0.0;
    std::size_t inter = 0;
    for (auto v : x) inter += y.count(v);
    return 1.0 - static_cast<double>(inter) / static_cast<double>(x.size() + y.size() - inter);
}
} // namespace detail

/// Per-meta-feature distances between two profiles (0 = identical), followed
/// by the pair's binary features.
inline DistanceVector distance_vector(const AttributeProfile& pa, const AttributeProfile& pb,
                                      const BinaryFeatures& bf, const NormalizationStats& stats) {
    if (stats.entries.size() != kNormalizedFeatures.size()) {
        throw LayoutError("normalization stats have " + std::to_string(stats.entries.size()) +
                          " entries, layout expects " + std::to_string(kNormalizedFeatures.size()));
    }
    DistanceVector dv;
    dv.values.reserve(kDistanceArity);
    const auto na = normalized_values(pa), nb = normalized_values(pb);
    for (std::size_t i = 0; i < na.size(); ++i) {
        dv.values.push_back(std::abs(zscore(na[i], stats.entries[i]) - zscore(nb[i], stats.entries[i])));
    }
    const auto ra = raw_values(pa), rb = raw_values(pb);
    for (std::size_t i = 0; i < ra.size(); ++i) dv.values.push_back(std::abs(ra[i] - rb[i]));
    dv.values.push_back(pa.data_type == pb.data_type ? 0.0 : 1.0);
    dv.values.push_back(pa.specific_type == pb.specific_type ? 0.0 : 1.0);
    dv.values.push_back(detail::set_distance(pa.frequent_words, pb.frequent_words));
    dv.values.push_back(detail::set_distance(pa.soundex_words, pb.soundex_words));
    dv.values.push_back(bf.best_containment);
    dv.values.push_back(bf.flipped_containment);
    dv.values.push_back(bf.name_distance);
    for (double v : dv.values)
        if (!std::isfinite(v)) throw MetricError("non-finite distance entry");
    return dv;
}

} // namespace joinscout
