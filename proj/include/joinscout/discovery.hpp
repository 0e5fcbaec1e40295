#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "joinscout/detail/parallel.hpp"
#include "joinscout/error.hpp"
#include "joinscout/join_metrics.hpp"
#include "joinscout/profile_comparison.hpp"
#include "joinscout/profiler.hpp"
#include "joinscout/quality_predictor.hpp"
#include "joinscout/tabular_io.hpp"

namespace joinscout {

struct AttributeId {
    std::string dataset;
    std::string attribute;

    auto operator<=>(const AttributeId&) const = default;

    std::string str() const { return dataset + "." + attribute; }

    /// Parses "dataset.attribute", splitting at the first dot.
    static AttributeId parse(std::string_view s) {
        const auto dot = s.find('.');
        if (dot == std::string_view::npos || dot == 0 || dot + 1 == s.size()) {
            throw DiscoveryError("attribute id '" + std::string(s) + "' is not of the form dataset.attribute");
        }
        return {std::string(s.substr(0, dot)), std::string(s.substr(dot + 1))};
    }
};

inline AttributeId id_of(const AttributeProfile& p) { return {p.dataset_name, p.attribute_name}; }

/// Profiles of a repository plus the normalization snapshot computed over
/// exactly those profiles. Immutable once built.
class ProfileStore {
public:
    ProfileStore() = default;

    ProfileStore(std::vector<AttributeProfile> profiles, std::uint64_t version = 1) : version_(version) {
        for (auto& p : profiles) {
            auto id = id_of(p);
            if (profiles_.contains(id)) throw DiscoveryError("duplicate attribute " + id.str());
            profiles_.emplace(std::move(id), std::move(p));
        }
        std::vector<AttributeProfile> pool;
        pool.reserve(profiles_.size());
        for (const auto& [id, p] : profiles_) pool.push_back(p);
        stats_ = compute_normalization(pool);
    }

    const std::map<AttributeId, AttributeProfile>& profiles() const noexcept { return profiles_; }
    const NormalizationStats& stats() const noexcept { return stats_; }
    std::uint64_t version() const noexcept { return version_; }
    const std::string& layout() const noexcept { return layout_; }
    std::size_t size() const noexcept { return profiles_.size(); }

    const AttributeProfile* find(const AttributeId& id) const {
        const auto it = profiles_.find(id);
        return it == profiles_.end() ? nullptr : &it->second;
    }

    const AttributeProfile& at(const AttributeId& id) const {
        if (const auto* p = find(id)) return *p;
        throw DiscoveryError("unknown attribute " + id.str());
    }

    DistanceVector distance(const AttributeId& a, const AttributeId& b) const {
        const auto& pa = at(a);
        const auto& pb = at(b);
        return distance_vector(pa, pb, binary_features(pa, pb), stats_);
    }

    nlohmann::json to_json() const {
        auto attrs = nlohmann::json::array();
        for (const auto& [id, p] : profiles_) attrs.push_back(joinscout::to_json(p));
        return {{"format", "joinscout-store"},
                {"version", version_},
                {"layout_version", layout_},
                {"stats", joinscout::to_json(stats_)},
                {"attributes", std::move(attrs)}};
    }

    static ProfileStore from_json(const nlohmann::json& j) {
        try {
            if (j.at("format").get<std::string>() != "joinscout-store") {
                throw ParseError("not a joinscout store");
            }
            ProfileStore s;
            s.version_ = j.at("version").get<std::uint64_t>();
            s.layout_ = j.at("layout_version").get<std::string>();
            for (const auto& a : j.at("attributes")) {
                auto p = profile_from_json(a);
                auto id = id_of(p);
                s.profiles_.emplace(std::move(id), std::move(p));
            }
            s.stats_ = stats_from_json(j.at("stats"));
            return s;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("malformed store: ") + e.what());
        }
    }

    void save(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + path.string());
        out << to_json().dump(1) << '\n';
    }

    static ProfileStore load(const std::filesystem::path& path) {
        const auto text = read_file(path);
        try {
            return from_json(nlohmann::json::parse(text));
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError("malformed store " + path.string() + ": " + e.what());
        }
    }

private:
    std::map<AttributeId, AttributeProfile> profiles_;
    NormalizationStats stats_;
    std::uint64_t version_ = 1;
    std::string layout_{kLayoutVersion};
};

struct LoadOptions {
    char delimiter = ',';
    bool has_header = true;
    double numeric_exclusion = kDefaultNumericExclusion;
    unsigned threads = 0; ///< 0 = available parallelism
};

/// Profiles every string column of every dataset, in parallel over columns.
inline std::vector<AttributeProfile> profile_datasets(std::span<const Dataset> datasets,
                                                      double numeric_exclusion = kDefaultNumericExclusion,
                                                      unsigned threads = 0) {
    std::vector<const Column*> columns;
    for (const auto& d : datasets)
        for (auto i : string_column_indices(d, numeric_exclusion)) columns.push_back(&d.columns[i]);
    std::vector<AttributeProfile> out(columns.size());
    detail::parallel_for(columns.size(), threads, [&](std::size_t i) { out[i] = build_profile(*columns[i]); });
    return out;
}

struct LoadFailure {
    std::filesystem::path path;
    std::string message;
};

struct LoadedRepository {
    std::vector<Dataset> datasets;
    std::vector<LoadFailure> failures;
};

/// Loads files in parallel; per-file errors are collected rather than thrown.
inline LoadedRepository load_repository(std::span<const std::filesystem::path> paths, const LoadOptions& opt = {}) {
    std::vector<std::optional<Dataset>> loaded(paths.size());
    std::vector<std::string> errors(paths.size());
    detail::parallel_for(paths.size(), opt.threads, [&](std::size_t i) {
        try {
            loaded[i] = load_dataset(paths[i], opt.delimiter, opt.has_header);
        } catch (const Error& e) {
            errors[i] = e.what();
        }
    });
    LoadedRepository repo;
    for (std::size_t i = 0; i < paths.size(); ++i) {
        if (loaded[i]) {
            repo.datasets.push_back(std::move(*loaded[i]));
        } else {
            repo.failures.push_back({paths[i], errors[i]});
        }
    }
    return repo;
}

struct IndexResult {
    ProfileStore store;
    std::vector<LoadFailure> failures;
};

/// Loads and profiles a repository and snapshots normalization statistics.
/// Throws when no file loads. `previous_version` is the version of the store
/// being replaced (0 for a fresh index).
inline IndexResult index_repository(std::span<const std::filesystem::path> paths, const LoadOptions& opt = {},
                                    std::uint64_t previous_version = 0) {
    if (paths.empty()) throw DiscoveryError("no input files to index");
    auto repo = load_repository(paths, opt);
    if (repo.datasets.empty()) throw DiscoveryError("none of the input files could be loaded");
    {
        std::set<std::string> names;
        for (const auto& d : repo.datasets)
            if (!names.insert(d.name).second) throw DiscoveryError("duplicate dataset name " + d.name);
    }
    auto profiles = profile_datasets(repo.datasets, opt.numeric_exclusion, opt.threads);
    return {ProfileStore(std::move(profiles), previous_version + 1), std::move(repo.failures)};
}

struct RankedCandidate {
    AttributeId id;
    QualityScore score;
};

struct Ranking {
    AttributeId query;
    std::vector<RankedCandidate> candidates;
};

/// Orders by descending score, then by attribute identity.
inline void sort_ranking(std::vector<RankedCandidate>& c) {
    std::sort(c.begin(), c.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
        if (a.score.value != b.score.value) return a.score.value > b.score.value;
        return a.id < b.id;
    });
}

/// Top-k attributes from other datasets ranked by predicted join quality with `query`.
inline Ranking discover_by_attribute(const ProfileStore& store, const RegressionModel& model,
                                     const AttributeId& query, std::size_t k, unsigned threads = 1) {
    if (k == 0) throw DiscoveryError("k must be positive");
    if (model.layout() != store.layout()) {
        throw LayoutError("model layout '" + model.layout() + "' does not match store layout '" +
                          store.layout() + "'");
    }
    const auto& qp = store.at(query);
    std::vector<const AttributeProfile*> pool;
    for (const auto& [id, p] : store.profiles())
        if (id.dataset != query.dataset && p.cardinality > 0) pool.push_back(&p);

    Ranking r{query, std::vector<RankedCandidate>(pool.size())};
    if (qp.cardinality == 0) {
        r.candidates.clear();
        return r;
    }
    detail::parallel_for(pool.size(), threads, [&](std::size_t i) {
        const auto& cp = *pool[i];
        const auto dv = distance_vector(qp, cp, binary_features(qp, cp), store.stats());
        r.candidates[i] = {id_of(cp), model.predict(dv)};
    });
    sort_ranking(r.candidates);
    if (r.candidates.size() > k) r.candidates.resize(k);
    return r;
}

inline nlohmann::json to_json(const Ranking& r) {
    auto out = nlohmann::json::array();
    for (const auto& c : r.candidates) {
        out.push_back({{"dataset", c.id.dataset}, {"attribute", c.id.attribute}, {"score", c.score.value}});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Ground truth from exact metrics

struct GroundTruthEntry {
    AttributeId a;
    AttributeId b;
    double containment = 0;
    double jaccard = 0;
    double k = 0;
    double level = 0; ///< discrete quality j/L, four levels by default
    double q_relaxed = 0;
    double q_balanced = 0;
    double q_strict = 0;

    double quality(Strictness s) const noexcept {
        switch (s) {
        case Strictness::relaxed: return q_relaxed;
        case Strictness::balanced: return q_balanced;
        case Strictness::strict: return q_strict;
        }
        return q_balanced;
    }

    /// Level 3 or 4 out of 4 (0.75 of the top level in general).
    bool semantic() const noexcept { return level >= 0.75; }
};

inline constexpr int kGroundTruthLevels = 4;

inline GroundTruthEntry ground_truth_entry(const AttributeId& a, const ValueSet& va, const AttributeId& b,
                                           const ValueSet& vb, const FittedParams& params = default_params(),
                                           int levels = kGroundTruthLevels) {
    GroundTruthEntry e{a, b};
    e.containment = containment(va, vb);
    e.jaccard = jaccard(va, vb);
    e.k = cardinality_proportion(va, vb);
    e.level = discrete_quality(e.containment, e.k, levels).value;
    e.q_relaxed = continuous_quality(e.containment, e.k, Strictness::relaxed, params).value;
    e.q_balanced = continuous_quality(e.containment, e.k, Strictness::balanced, params).value;
    e.q_strict = continuous_quality(e.containment, e.k, Strictness::strict, params).value;
    return e;
}

/// Exact metrics for every ordered pair of string attributes from different
/// datasets. Attributes whose values all preprocess to nothing are skipped.
struct GroundTruthOptions {
    FittedParams params = default_params();
    int levels = kGroundTruthLevels;
    double numeric_exclusion = kDefaultNumericExclusion;
    unsigned threads = 1;
};

inline std::vector<GroundTruthEntry> generate_ground_truth(std::span<const Dataset> datasets,
                                                           const GroundTruthOptions& opt = {}) {
    const unsigned threads = opt.threads;
    struct Attr {
        AttributeId id;
        ValueSet values;
    };
    std::vector<const Column*> columns;
    for (const auto& d : datasets)
        for (auto i : string_column_indices(d, opt.numeric_exclusion)) columns.push_back(&d.columns[i]);
    std::vector<Attr> attrs(columns.size());
    detail::parallel_for(columns.size(), threads, [&](std::size_t i) {
        const auto& c = *columns[i];
        attrs[i] = {{c.dataset_name, c.attribute_name}, ValueSet::from_raw(c)};
    });
    std::erase_if(attrs, [](const Attr& a) { return a.values.empty(); });
    std::sort(attrs.begin(), attrs.end(), [](const Attr& x, const Attr& y) { return x.id < y.id; });

    std::vector<std::vector<GroundTruthEntry>> rows(attrs.size());
    detail::parallel_for(attrs.size(), threads, [&](std::size_t i) {
        for (std::size_t j = 0; j < attrs.size(); ++j) {
            if (attrs[i].id.dataset == attrs[j].id.dataset) continue;
            rows[i].push_back(
                ground_truth_entry(attrs[i].id, attrs[i].values, attrs[j].id, attrs[j].values, opt.params, opt.levels));
        }
    });
    std::vector<GroundTruthEntry> out;
    for (auto& r : rows) std::move(r.begin(), r.end(), std::back_inserter(out));
    return out;
}

namespace detail {
inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q.push_back('"');
        q.push_back(c);
    }
    q.push_back('"');
    return q;
}

inline std::string fmt_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}
} // namespace detail

inline constexpr std::array<std::string_view, 11> kGroundTruthHeader{
    "dataset_a", "attribute_a", "dataset_b", "attribute_b", "containment", "jaccard",
    "k",         "level",       "q_relaxed", "q_balanced",  "q_strict"};

inline void write_ground_truth(std::ostream& out, std::span<const GroundTruthEntry> entries) {
    for (std::size_t i = 0; i < kGroundTruthHeader.size(); ++i) out << (i ? "," : "") << kGroundTruthHeader[i];
    out << '\n';
    using detail::csv_field;
    using detail::fmt_number;
    for (const auto& e : entries) {
        out << csv_field(e.a.dataset) << ',' << csv_field(e.a.attribute) << ',' << csv_field(e.b.dataset) << ','
            << csv_field(e.b.attribute) << ',' << fmt_number(e.containment) << ',' << fmt_number(e.jaccard) << ','
            << fmt_number(e.k) << ',' << fmt_number(e.level) << ',' << fmt_number(e.q_relaxed) << ','
            << fmt_number(e.q_balanced) << ',' << fmt_number(e.q_strict) << '\n';
    }
}

inline std::vector<GroundTruthEntry> parse_ground_truth(std::string_view text) {
    detail::DelimitedReader reader(text, ',');
    std::vector<std::string> f;
    if (!reader.next(f)) throw ParseError("ground truth: no header");
    if (f.size() != kGroundTruthHeader.size() || !std::equal(f.begin(), f.end(), kGroundTruthHeader.begin())) {
        throw ParseError("ground truth: unexpected header");
    }
    std::vector<GroundTruthEntry> out;
    while (reader.next(f)) {
        const auto row = std::to_string(reader.record_number());
        if (f.size() != kGroundTruthHeader.size()) throw ParseError("ground truth row " + row + ": wrong cell count");
        auto num = [&](std::size_t i) {
            char* end = nullptr;
            const double v = std::strtod(f[i].c_str(), &end);
            if (f[i].empty() || *end != '\0' || !(v >= 0.0 && v <= 1.0)) {
                throw ParseError("ground truth row " + row + ": bad value '" + f[i] + "'");
            }
            return v;
        };
        GroundTruthEntry e{{f[0], f[1]}, {f[2], f[3]}};
        e.containment = num(4);
        e.jaccard = num(5);
        e.k = num(6);
        e.level = num(7);
        e.q_relaxed = num(8);
        e.q_balanced = num(9);
        e.q_strict = num(10);
        out.push_back(std::move(e));
    }
    return out;
}

inline std::vector<GroundTruthEntry> load_ground_truth(const std::filesystem::path& path) {
    return parse_ground_truth(read_file(path));
}

/// Distance vectors labelled with the exact continuous quality at `strictness`.
/// Entries whose attributes are missing from the store are skipped.
inline std::vector<CorpusRecord> build_training_corpus(const ProfileStore& store,
                                                       std::span<const GroundTruthEntry> truth,
                                                       Strictness strictness = Strictness::balanced) {
    std::vector<CorpusRecord> out;
    for (const auto& e : truth) {
        const auto* pa = store.find(e.a);
        const auto* pb = store.find(e.b);
        if (!pa || !pb || pa->cardinality == 0 || pb->cardinality == 0) continue;
        out.push_back({e.a.str(), e.b.str(),
                       {distance_vector(*pa, *pb, binary_features(*pa, *pb), store.stats()), e.quality(strictness)}});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation

enum class ThresholdMetric { containment, jaccard, quality };

inline ThresholdMetric threshold_metric_from_string(std::string_view s) {
    if (s == "C") return ThresholdMetric::containment;
    if (s == "J") return ThresholdMetric::jaccard;
    if (s == "Q") return ThresholdMetric::quality;
    throw MetricError("unknown metric '" + std::string(s) + "' (expected C, J or Q)");
}

struct ClassifierReport {
    double precision = 0;
    double recall = 0;
    double f_score = 0;
    double accuracy = 0;
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

/// Treats score > threshold as a positive prediction. Precision is 0 when
/// nothing is predicted positive.
inline ClassifierReport evaluate_threshold(std::span<const double> scores, const std::vector<bool>& labels,
                                           double threshold) {
    if (scores.size() != labels.size()) throw MetricError("score/label size mismatch");
    ClassifierReport r;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool pred = scores[i] > threshold;
        if (pred && labels[i]) ++r.tp;
        else if (pred) ++r.fp;
        else if (labels[i]) ++r.fn;
        else ++r.tn;
    }
    if (r.tp + r.fn == 0) throw MetricError("recall is undefined without positive labels");
    r.precision = r.tp + r.fp == 0 ? 0.0 : static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp);
    r.recall = static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn);
    r.f_score = r.precision + r.recall == 0 ? 0.0 : 2 * r.precision * r.recall / (r.precision + r.recall);
    r.accuracy = static_cast<double>(r.tp + r.tn) / static_cast<double>(scores.size());
    return r;
}

/// Threshold classifier over ground-truth entries labelled semantic when
/// their discrete level is 3 or 4 out of 4.
inline ClassifierReport evaluate_threshold_classifier(std::span<const GroundTruthEntry> entries, ThresholdMetric metric,
                                                      double threshold, Strictness s = Strictness::balanced) {
    std::vector<double> scores;
    std::vector<bool> labels;
    for (const auto& e : entries) {
        switch (metric) {
        case ThresholdMetric::containment: scores.push_back(e.containment); break;
        case ThresholdMetric::jaccard: scores.push_back(e.jaccard); break;
        case ThresholdMetric::quality: scores.push_back(e.quality(s)); break;
        }
        labels.push_back(e.semantic());
    }
    return evaluate_threshold(scores, labels, threshold);
}

struct RankingReport {
    double precision_at_k = 0;
    double recall_at_ground_truth = 0;
    double recall_at_size_of_gt = 0;
    double precision_at_50 = 0;
    bool empty_ranking = false;
};

/// Ranking quality against the set of relevant attributes for the query.
inline RankingReport ranking_metrics(const Ranking& ranking, const std::set<AttributeId>& relevant, std::size_t k) {
    if (relevant.empty()) throw MetricError("ranking metrics need a nonempty ground truth");
    if (k == 0) throw MetricError("k must be positive");
    RankingReport r;
    const auto& c = ranking.candidates;
    if (c.empty()) {
        r.empty_ranking = true;
        return r;
    }
    auto hits = [&](std::size_t n) {
        std::size_t tp = 0;
        for (std::size_t i = 0; i < std::min(n, c.size()); ++i) tp += relevant.count(c[i].id);
        return static_cast<double>(tp);
    };
    const double gt = static_cast<double>(relevant.size());
    r.precision_at_k = hits(k) / static_cast<double>(k);
    r.recall_at_ground_truth = hits(k) / gt;
    r.recall_at_size_of_gt = hits(relevant.size()) / gt;
    const std::size_t half = (c.size() + 1) / 2;
    r.precision_at_50 = hits(half) / static_cast<double>(half);
    return r;
}

} // namespace joinscout
