#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "joinscout/error.hpp"
#include "joinscout/tabular_io.hpp"

namespace joinscout {

/// Distinct preprocessed values of an attribute, kept sorted.
class ValueSet {
public:
    ValueSet() = default;

    explicit ValueSet(std::vector<std::string> values) : values_(std::move(values)) {
        std::sort(values_.begin(), values_.end());
        values_.erase(std::unique(values_.begin(), values_.end()), values_.end());
    }

    /// Distinct values of an already preprocessed column; missing cells are skipped.
    static ValueSet from_preprocessed(const Column& c) {
        std::vector<std::string> v;
        v.reserve(c.cells.size());
        for (const auto& cell : c.cells)
            if (cell) v.push_back(*cell);
        return ValueSet(std::move(v));
    }

    static ValueSet from_raw(const Column& c) { return from_preprocessed(preprocess(c)); }

    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }
    const std::vector<std::string>& values() const noexcept { return values_; }

    bool contains(std::string_view v) const {
        return std::binary_search(values_.begin(), values_.end(), v,
                                  [](std::string_view a, std::string_view b) { return a < b; });
    }

private:
    std::vector<std::string> values_;
};

/// |A ∩ B| over two sorted distinct sets.
inline std::size_t intersection_size(const ValueSet& a, const ValueSet& b) noexcept {
    std::size_t n = 0;
    auto i = a.values().begin(), j = b.values().begin();
    const auto ie = a.values().end(), je = b.values().end();
    while (i != ie && j != je) {
        const int cmp = i->compare(*j);
        if (cmp == 0) {
            ++n, ++i, ++j;
        } else if (cmp < 0) {
            ++i;
        } else {
            ++j;
        }
    }
    return n;
}

/// Inclusion coefficient C(A,B) = |A ∩ B| / |A|. Asymmetric.
inline double containment(const ValueSet& a, const ValueSet& b) {
    if (a.empty()) throw MetricError("containment: empty reference set");
    return static_cast<double>(intersection_size(a, b)) / static_cast<double>(a.size());
}

inline double jaccard(const ValueSet& a, const ValueSet& b) {
    if (a.empty() && b.empty()) throw MetricError("jaccard: both sets empty");
    const auto inter = intersection_size(a, b);
    return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

/// K(A,B) = min(|A|,|B|) / max(|A|,|B|).
inline double cardinality_proportion(std::size_t card_a, std::size_t card_b) {
    if (card_a == 0 || card_b == 0) throw MetricError("cardinality proportion: empty set");
    return static_cast<double>(std::min(card_a, card_b)) / static_cast<double>(std::max(card_a, card_b));
}

inline double cardinality_proportion(const ValueSet& a, const ValueSet& b) {
    return cardinality_proportion(a.size(), b.size());
}

enum class QualityKind { discrete_level, continuous, predicted };

struct QualityScore {
    double value = 0;
    QualityKind kind = QualityKind::continuous;
    std::optional<int> level_count;
};

namespace detail {
inline void require_fraction(double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0)) throw MetricError(std::string(what) + " must lie in [0,1]");
}
} // namespace detail

/// Highest level j/L such that c >= j/L and k >= 2^-(L-j); 0 when none holds.
inline QualityScore discrete_quality(double c, double k, int levels) {
    detail::require_fraction(c, "containment");
    detail::require_fraction(k, "cardinality proportion");
    if (levels < 1) throw MetricError("level count must be >= 1");
    int best = 0;
    for (int j = levels; j >= 1; --j) {
        if (c >= static_cast<double>(j) / levels && k >= std::ldexp(1.0, j - levels)) {
            best = j;
            break;
        }
    }
    return {static_cast<double>(best) / levels, QualityKind::discrete_level, levels};
}

/// Label of an L=4 level: Low, Medium, Good, High (empty for level 0).
inline std::string_view quality_label(double level_value) noexcept {
    if (level_value >= 1.0) return "High";
    if (level_value >= 0.75) return "Good";
    if (level_value >= 0.5) return "Medium";
    if (level_value >= 0.25) return "Low";
    return "";
}

struct TruncatedCdf {
    double value = 0;
    bool clamped = false; ///< x lay outside [a,b] and was clamped
};

/// CDF at x of N(mu, var) truncated to [a,b]. Tails are evaluated through
/// erfc so far-off means keep full relative precision.
inline TruncatedCdf truncated_normal_cdf(double x, double mu, double var, double a, double b) {
    if (!(a < b)) throw MetricError("truncation bounds need a < b");
    if (!(var > 0.0) || !std::isfinite(var)) throw MetricError("variance must be positive");
    if (x <= a) return {0.0, x < a};
    if (x >= b) return {1.0, x > b};
    const double sd = std::sqrt(var);
    const double za = (a - mu) / sd, zb = (b - mu) / sd, zx = (x - mu) / sd;
    constexpr double inv_sqrt2 = 0.70710678118654752440;
    double num = 0, den = 0;
    if (za > 0.0) {
        // whole support in the upper tail: use survival functions
        const double qa = 0.5 * std::erfc(za * inv_sqrt2);
        num = qa - 0.5 * std::erfc(zx * inv_sqrt2);
        den = qa - 0.5 * std::erfc(zb * inv_sqrt2);
    } else {
        const double pa = 0.5 * std::erfc(-za * inv_sqrt2);
        num = 0.5 * std::erfc(-zx * inv_sqrt2) - pa;
        den = 0.5 * std::erfc(-zb * inv_sqrt2) - pa;
    }
    if (!(den > 0.0)) {
        // all mass collapsed onto the bound nearest the mean
        return {mu <= a ? 1.0 : 0.0, false};
    }
    return {std::clamp(num / den, 0.0, 1.0), false};
}

/// Means and variances of the independent truncated normals over C and K.
struct FittedParams {
    double mu_c = 0.0;
    double mu_k = 0.44;
    double var_c = 0.19;
    double var_k = 0.28;
    double lower = 0.0;
    double upper = 1.0;

    bool operator==(const FittedParams&) const = default;
};

inline FittedParams default_params() { return FittedParams{}; }

inline nlohmann::json to_json(const FittedParams& p) {
    return {{"mu_c", p.mu_c}, {"mu_k", p.mu_k}, {"var_c", p.var_c}, {"var_k", p.var_k},
            {"bounds", {p.lower, p.upper}}};
}

inline FittedParams params_from_json(const nlohmann::json& j) {
    try {
        FittedParams p;
        p.mu_c = j.at("mu_c").get<double>();
        p.mu_k = j.at("mu_k").get<double>();
        p.var_c = j.at("var_c").get<double>();
        p.var_k = j.at("var_k").get<double>();
        if (j.contains("bounds")) {
            const auto b = j.at("bounds").get<std::vector<double>>();
            if (b.size() != 2) throw ParseError("bounds must have two entries");
            p.lower = b[0];
            p.upper = b[1];
        }
        if (!(p.var_c > 0 && p.var_k > 0)) throw ParseError("variances must be positive");
        if (!(p.lower < p.upper)) throw ParseError("bounds must be increasing");
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed params: ") + e.what());
    }
}

enum class Strictness { relaxed, balanced, strict };

inline constexpr double strictness_offset(Strictness s) noexcept {
    switch (s) {
    case Strictness::relaxed: return 0.0;
    case Strictness::balanced: return 0.25;
    case Strictness::strict: return 0.5;
    }
    return 0.25;
}

inline Strictness strictness_from_string(std::string_view name) {
    if (name == "relaxed") return Strictness::relaxed;
    if (name == "balanced") return Strictness::balanced;
    if (name == "strict") return Strictness::strict;
    throw MetricError("unknown strictness '" + std::string(name) + "'");
}

/// Continuous join quality: product of the truncated CDFs of C (mean shifted
/// by the strictness offset s) and of K.
inline QualityScore continuous_quality(double c, double k, double s,
                                       const FittedParams& p = default_params()) {
    detail::require_fraction(c, "containment");
    detail::require_fraction(k, "cardinality proportion");
    if (!(s >= 0.0 && s <= 0.5)) throw MetricError("strictness must lie in [0, 0.5]");
    const double qc = truncated_normal_cdf(c, p.mu_c + s, p.var_c, p.lower, p.upper).value;
    const double qk = truncated_normal_cdf(k, p.mu_k, p.var_k, p.lower, p.upper).value;
    return {qc * qk, QualityKind::continuous, std::nullopt};
}

inline QualityScore continuous_quality(double c, double k, Strictness s,
                                       const FittedParams& p = default_params()) {
    return continuous_quality(c, k, strictness_offset(s), p);
}

} // namespace joinscout
