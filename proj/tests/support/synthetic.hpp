#pragma once

// Synthetic repositories with planted joinable columns.
//
// A domain is an ordered list of values (index 0 = most popular). A column
// takes the window [offset, offset + card) of its domain, so columns of the
// same domain overlap according to their windows. Every distinct value appears
// at least once; extra rows follow a Zipf law over domain popularity.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "joinscout/discovery.hpp"
#include "joinscout/tabular_io.hpp"

namespace synth {

using joinscout::AttributeId;
using joinscout::Column;
using joinscout::Dataset;

inline constexpr std::size_t kFamilies = 12;
inline constexpr std::size_t kStatusFamily = 11;
inline constexpr std::size_t kDomainSize = 4096;

inline const std::array<std::array<const char*, 16>, 2> kSyllables{{
    {"ka", "lo", "mi", "ru", "te", "vo", "sa", "ne", "di", "po", "fu", "ze", "ba", "gi", "ho", "ju"},
    {"tra", "ble", "qui", "sno", "dro", "pha", "gle", "cri", "flu", "spa", "wre", "thi", "ska", "plo", "bre", "chu"},
}};

inline const std::array<const char*, 12> kStatusWords{"active", "closed",   "pending",  "archived",
                                                      "draft",  "review",   "approved", "rejected",
                                                      "open",   "paused",   "failed",   "queued"};

inline const std::array<std::array<const char*, 3>, kFamilies> kNames{{
    {"name", "first_name", "given"},
    {"city", "town", "location"},
    {"email", "mail", "contact"},
    {"code", "sku", "product_code"},
    {"date", "day", "created"},
    {"phone", "telephone", "mobile"},
    {"url", "website", "link"},
    {"user", "username", "login"},
    {"description", "comment", "text"},
    {"ip", "address", "host"},
    {"id", "hash", "key"},
    {"status", "state", "stage"},
}};

inline std::string word(std::size_t j, int variant) {
    const auto& s = kSyllables[static_cast<std::size_t>(variant)];
    return std::string(s[j % 16]) + s[(j / 16) % 16] + s[(j / 256) % 16];
}

inline std::string capitalize(std::string w) {
    if (!w.empty()) w[0] = static_cast<char>(w[0] - 'a' + 'A');
    return w;
}

inline std::string civil_date(long days_since_1970) {
    // days -> y/m/d, proleptic Gregorian
    long z = days_since_1970 + 719468;
    const long era = (z >= 0 ? z : z - 146096) / 146097;
    const long doe = z - era * 146097;
    const long yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    long y = yoe + era * 400;
    const long doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const long mp = (5 * doy + 2) / 153;
    const long d = doy - (153 * mp + 2) / 5 + 1;
    const long m = mp < 10 ? mp + 3 : mp - 9;
    if (m <= 2) ++y;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04ld-%02ld-%02ld", y, m, d);
    return buf;
}

struct Domain {
    std::size_t family = 0;
    int variant = 0;

    std::size_t size() const { return family == kStatusFamily ? kStatusWords.size() : kDomainSize; }

    std::string value(std::size_t i) const {
        const std::size_t j = (i * 2654435761u + family * 977u) % kDomainSize;
        const std::size_t j2 = (j * 5 + 3) % kDomainSize;
        const std::size_t j3 = (j * 9 + 7) % kDomainSize;
        char buf[64];
        switch (family) {
        case 0: return capitalize(word(j, variant));
        case 1: return capitalize(word(j, variant)) + " " + capitalize(word(j2, variant));
        case 2: return word(j, variant) + std::to_string(i % 97) + (variant ? "@mailbox.org" : "@example.com");
        case 3: {
            const char* base = variant ? "NOPQRSTUVWXYZ" : "ABCDEFGHIJKLM";
            std::snprintf(buf, sizeof buf, "%c%c-%04zu", base[i % 13], base[(i / 13) % 13], (i * 37) % 10000);
            return buf;
        }
        case 4: return civil_date((variant ? 14610L : 7305L) + static_cast<long>(i));
        case 5: {
            const std::size_t n = (i * 7919) % 1000000;
            if (variant) {
                std::snprintf(buf, sizeof buf, "+1 555 %03zu %04zu", n / 10000, n % 10000);
            } else {
                std::snprintf(buf, sizeof buf, "+34 6%02zu %03zu %03zu", n / 1000000 + i % 100, (n / 1000) % 1000,
                              n % 1000);
            }
            return buf;
        }
        case 6: return "https://www." + word(j, variant) + (variant ? ".org/" : ".com/") + word(j2, variant);
        case 7: return word(j, variant) + "_" + std::to_string(i % 100);
        case 8:
            return capitalize(word(j, variant)) + " " + word(j2, variant) + (variant ? " and " : " of ") +
                   word(j3, variant) + " " + word((j3 + 11) % kDomainSize, variant);
        case 9:
            if (variant) std::snprintf(buf, sizeof buf, "172.%zu.%zu.1", 16 + i / 256, i % 256);
            else std::snprintf(buf, sizeof buf, "10.%zu.%zu.%zu", i / 256, i % 256, (i * 13) % 256);
            return buf;
        case 10: {
            const std::uint32_t h = static_cast<std::uint32_t>(i) * 0x9E3779B1u ^ (variant ? 0x5bd1e995u : 0u);
            std::snprintf(buf, sizeof buf, "%08x", h);
            return buf;
        }
        default: return kStatusWords[i % kStatusWords.size()];
        }
    }
};

/// Families 0..10 in two disjoint vocabularies, then the status family.
inline std::vector<Domain> domains() {
    std::vector<Domain> out;
    for (std::size_t f = 0; f < kStatusFamily; ++f) out.push_back({f, 0});
    for (std::size_t f = 0; f < kStatusFamily; ++f) out.push_back({f, 1});
    out.push_back({kStatusFamily, 0});
    return out;
}

inline constexpr std::size_t kStatusDomain = 2 * kStatusFamily;

struct ColumnSpec {
    std::size_t domain = 0;
    std::size_t card = 10;
    std::size_t offset = 0;
    double missing = 0.0;
    std::string name;
};

struct DatasetSpec {
    std::string name;
    std::vector<ColumnSpec> columns;
    std::size_t numeric_columns = 1;
    std::size_t rows = 0; ///< 0 = derived from the widest column
};

inline Dataset materialize(const DatasetSpec& spec, std::mt19937_64& rng) {
    const auto doms = domains();
    std::size_t rows = spec.rows;
    if (rows == 0) {
        std::size_t widest = 20;
        for (const auto& c : spec.columns) widest = std::max(widest, c.card);
        rows = static_cast<std::size_t>(static_cast<double>(widest) *
                                        std::uniform_real_distribution<double>(1.5, 3.0)(rng));
    }
    Dataset d;
    d.name = spec.name;
    d.row_count = rows;
    for (const auto& cs : spec.columns) {
        const auto& dom = doms.at(cs.domain);
        const std::size_t card = std::min(cs.card, dom.size() - std::min(cs.offset, dom.size() - 1));
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < card; ++i) idx.push_back(cs.offset + i);
        std::vector<double> w;
        for (std::size_t i = 0; i < card; ++i) w.push_back(1.0 / static_cast<double>(cs.offset + i + 1));
        std::discrete_distribution<std::size_t> zipf(w.begin(), w.end());
        while (idx.size() < rows) idx.push_back(cs.offset + zipf(rng));
        std::shuffle(idx.begin(), idx.end(), rng);
        Column col{spec.name, cs.name, {}};
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::vector<bool> seen(card, false);
        for (std::size_t r = 0; r < rows; ++r) {
            const std::size_t local = idx[r] - cs.offset;
            // never blank out the only occurrence of a value
            if (seen[local] && u(rng) < cs.missing) {
                col.cells.emplace_back(std::nullopt);
            } else {
                col.cells.emplace_back(dom.value(idx[r]));
            }
            seen[local] = true;
        }
        d.columns.push_back(std::move(col));
    }
    std::normal_distribution<double> gauss(100.0, 25.0);
    for (std::size_t n = 0; n < spec.numeric_columns; ++n) {
        Column col{spec.name, "measure_" + std::to_string(n + 1), {}};
        char buf[32];
        for (std::size_t r = 0; r < rows; ++r) {
            std::snprintf(buf, sizeof buf, "%.2f", gauss(rng));
            col.cells.emplace_back(buf);
        }
        d.columns.push_back(std::move(col));
    }
    return d;
}

inline std::string pick_name(std::size_t domain, std::mt19937_64& rng, std::vector<std::string>& taken) {
    const auto fam = domains().at(domain).family;
    std::string base = kNames[fam][std::uniform_int_distribution<std::size_t>(0, 2)(rng)];
    std::string name = base;
    for (int n = 2; std::find(taken.begin(), taken.end(), name) != taken.end(); ++n) {
        name = base + "_" + std::to_string(n);
    }
    taken.push_back(name);
    return name;
}

inline std::size_t log_uniform(std::mt19937_64& rng, double lo, double hi) {
    const double e = std::uniform_real_distribution<double>(std::log(lo), std::log(hi))(rng);
    return static_cast<std::size_t>(std::lround(std::exp(e)));
}

/// Random repository: each dataset holds 2-4 string columns over random
/// domains with random windows, plus numeric columns.
inline std::vector<Dataset> training_repository(std::size_t n_datasets, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n_domains = domains().size();
    std::vector<Dataset> out;
    for (std::size_t t = 0; t < n_datasets; ++t) {
        DatasetSpec spec;
        spec.name = "t" + std::to_string(t);
        spec.numeric_columns = std::uniform_int_distribution<std::size_t>(0, 2)(rng);
        const auto n_cols = std::uniform_int_distribution<std::size_t>(2, 4)(rng);
        std::vector<std::string> taken;
        for (std::size_t c = 0; c < n_cols; ++c) {
            ColumnSpec cs;
            cs.domain = std::uniform_int_distribution<std::size_t>(0, n_domains - 1)(rng);
            if (cs.domain == kStatusDomain) {
                cs.card = std::uniform_int_distribution<std::size_t>(3, kStatusWords.size())(rng);
            } else {
                cs.card = log_uniform(rng, 8, 300);
                if (std::uniform_real_distribution<double>(0, 1)(rng) < 0.5) {
                    cs.offset = static_cast<std::size_t>(std::uniform_real_distribution<double>(0, 0.5)(rng) *
                                                         static_cast<double>(cs.card));
                }
            }
            cs.missing = std::uniform_real_distribution<double>(0, 1)(rng) < 0.3 ? 0.03 : 0.0;
            cs.name = pick_name(cs.domain, rng, taken);
            spec.columns.push_back(cs);
        }
        out.push_back(materialize(spec, rng));
    }
    return out;
}

struct DiscoveryRepository {
    std::vector<Dataset> datasets;
    std::vector<AttributeId> queries;
};

/// One query column per domain (the first `n_queries` non-status domains),
/// each with `partners` planted joinable columns (same domain, cardinality
/// within [0.85, 1.8] of the query, window starting at 0) in separate
/// datasets, plus same-domain decoys whose cardinality proportion is too low.
/// Every dataset also carries a status column and a numeric column.
inline DiscoveryRepository discovery_repository(std::size_t n_queries, std::size_t partners, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    DiscoveryRepository repo;
    std::uniform_real_distribution<double> u(0, 1);
    auto add = [&](const std::string& name, ColumnSpec main) {
        DatasetSpec spec;
        spec.name = name;
        std::vector<std::string> taken;
        main.name = pick_name(main.domain, rng, taken);
        spec.columns.push_back(main);
        ColumnSpec status;
        status.domain = kStatusDomain;
        status.card = std::uniform_int_distribution<std::size_t>(3, kStatusWords.size())(rng);
        status.name = pick_name(kStatusDomain, rng, taken);
        spec.columns.push_back(status);
        repo.datasets.push_back(materialize(spec, rng));
        return AttributeId{name, main.name};
    };
    for (std::size_t q = 0; q < n_queries; ++q) {
        const std::size_t domain = q;
        const std::size_t card = std::uniform_int_distribution<std::size_t>(40, 150)(rng);
        repo.queries.push_back(add("q" + std::to_string(q), {domain, card, 0, 0.0, ""}));
        for (std::size_t p = 0; p < partners; ++p) {
            const auto pc = static_cast<std::size_t>(std::ceil(static_cast<double>(card) * (0.85 + 0.95 * u(rng))));
            add("p" + std::to_string(q) + "_" + std::to_string(p), {domain, pc, 0, 0.0, ""});
        }
        for (std::size_t k = 0; k < 4; ++k) {
            const double f = k % 2 == 0 ? 2.6 + 2.0 * u(rng) : 0.1 + 0.25 * u(rng);
            const auto dc = std::max<std::size_t>(3, static_cast<std::size_t>(static_cast<double>(card) * f));
            add("d" + std::to_string(q) + "_" + std::to_string(k), {domain, dc, 0, 0.0, ""});
        }
    }
    return repo;
}

inline void write_csv(const Dataset& d, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    auto field = [](const std::string& s) {
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) {
            if (c == '"') q += '"';
            q += c;
        }
        return q + "\"";
    };
    for (std::size_t c = 0; c < d.columns.size(); ++c) out << (c ? "," : "") << field(d.columns[c].attribute_name);
    out << '\n';
    for (std::size_t r = 0; r < d.row_count; ++r) {
        for (std::size_t c = 0; c < d.columns.size(); ++c) {
            const auto& cell = d.columns[c].cells[r];
            out << (c ? "," : "") << (cell ? field(*cell) : std::string());
        }
        out << '\n';
    }
}

/// Corpus with every overlapping pair plus an equal number of seeded
/// zero-overlap pairs. Labels are the exact balanced quality.
inline std::vector<joinscout::CorpusRecord> balanced_corpus(const joinscout::ProfileStore& store,
                                                            const std::vector<joinscout::GroundTruthEntry>& truth,
                                                            std::uint64_t seed) {
    std::vector<joinscout::GroundTruthEntry> overlap, disjoint;
    for (const auto& e : truth) (e.containment > 0 ? overlap : disjoint).push_back(e);
    std::mt19937_64 rng(seed);
    std::shuffle(disjoint.begin(), disjoint.end(), rng);
    disjoint.resize(std::min(disjoint.size(), overlap.size()));
    overlap.insert(overlap.end(), disjoint.begin(), disjoint.end());
    return joinscout::build_training_corpus(store, overlap, joinscout::Strictness::balanced);
}

} // namespace synth
