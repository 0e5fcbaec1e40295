#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "joinscout/discovery.hpp"

using namespace joinscout;

namespace {

const std::string kToy = std::string(JOINSCOUT_FIXTURES) + "/toy";

std::vector<std::filesystem::path> toy_paths() {
    return {kToy + "/happiness.csv", kToy + "/population.csv", kToy + "/stores.csv", kToy + "/expectancy.csv"};
}

std::vector<Dataset> toy_datasets() {
    std::vector<Dataset> out;
    for (const auto& p : toy_paths()) out.push_back(load_dataset(p));
    return out;
}

const GroundTruthEntry& find_entry(const std::vector<GroundTruthEntry>& gt, const std::string& a,
                                   const std::string& b) {
    for (const auto& e : gt)
        if (e.a == AttributeId::parse(a) && e.b == AttributeId::parse(b)) return e;
    throw std::runtime_error("no entry " + a + " -> " + b);
}

// A one-unit network whose output is the best-containment entry.
RegressionModel containment_model() {
    RegressionModel m(kDistanceArity, 1, 0.0, std::string(kLayoutVersion));
    auto p = m.params();
    p[kDistanceArity - 3] = 1.0; // w1 row 0, best_containment
    p[kDistanceArity + 1] = 1.0; // w2
    return m;
}

std::filesystem::path temp_dir(const std::string& name) {
    auto d = std::filesystem::temp_directory_path() / ("joinscout_disc_" + name);
    std::filesystem::remove_all(d);
    std::filesystem::create_directories(d);
    return d;
}

} // namespace

TEST(AttributeIdTest, Parse) {
    const auto id = AttributeId::parse("stores.Customer satisfaction");
    EXPECT_EQ(id.dataset, "stores");
    EXPECT_EQ(id.attribute, "Customer satisfaction");
    EXPECT_EQ(AttributeId::parse("a.b.c").attribute, "b.c");
    EXPECT_EQ(id.str(), "stores.Customer satisfaction");
    for (auto bad : {"nodot", ".x", "x.", ""}) EXPECT_THROW(AttributeId::parse(bad), DiscoveryError) << bad;
}

TEST(GroundTruth, ToyValues) {
    const auto datasets = toy_datasets();
    const auto gt = generate_ground_truth(datasets);
    const auto& e = find_entry(gt, "happiness.Country", "population.X");
    EXPECT_DOUBLE_EQ(e.containment, 0.75);
    EXPECT_DOUBLE_EQ(e.jaccard, 0.6);
    EXPECT_DOUBLE_EQ(e.k, 1.0);
    EXPECT_DOUBLE_EQ(e.level, 0.75);
    EXPECT_NEAR(e.q_balanced, 0.876869688261, 1e-11);
    EXPECT_TRUE(e.semantic());

    const auto& s = find_entry(gt, "happiness.Schengen", "stores.Discount");
    EXPECT_DOUBLE_EQ(s.containment, 1.0);
    EXPECT_DOUBLE_EQ(s.jaccard, 1.0);
    EXPECT_DOUBLE_EQ(s.level, 1.0);

    const auto& u = find_entry(gt, "stores.Country", "happiness.Country");
    EXPECT_DOUBLE_EQ(u.containment, 1.0);
    EXPECT_DOUBLE_EQ(u.k, 0.25);
    // c >= 2/4 and k >= 2^-2 reach level 2, short of the semantic cut
    EXPECT_DOUBLE_EQ(u.level, 0.5);
    EXPECT_FALSE(u.semantic());
}

TEST(GroundTruth, PairsAndSymmetry) {
    const auto gt = generate_ground_truth(toy_datasets());
    // 8 string attributes; ordered pairs across datasets
    std::size_t expected = 0;
    const std::vector<std::size_t> per_dataset{2, 2, 3, 1};
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            if (i != j) expected += per_dataset[i] * per_dataset[j];
    EXPECT_EQ(gt.size(), expected);
    for (const auto& e : gt) {
        EXPECT_NE(e.a.dataset, e.b.dataset);
        const auto& r = find_entry(gt, e.b.str(), e.a.str());
        EXPECT_DOUBLE_EQ(e.jaccard, r.jaccard);
        EXPECT_DOUBLE_EQ(e.k, r.k);
        EXPECT_GE(e.q_relaxed, e.q_balanced);
        EXPECT_GE(e.q_balanced, e.q_strict);
    }
    EXPECT_TRUE(std::is_sorted(gt.begin(), gt.end(), [](const auto& x, const auto& y) {
        return std::tie(x.a, x.b) < std::tie(y.a, y.b);
    }));
}

TEST(GroundTruth, CsvRoundTrip) {
    const auto gt = generate_ground_truth(toy_datasets());
    std::stringstream ss;
    write_ground_truth(ss, gt);
    const auto back = parse_ground_truth(ss.str());
    ASSERT_EQ(back.size(), gt.size());
    for (std::size_t i = 0; i < gt.size(); ++i) {
        EXPECT_EQ(back[i].a, gt[i].a);
        EXPECT_EQ(back[i].b, gt[i].b);
        EXPECT_NEAR(back[i].q_strict, gt[i].q_strict, 1e-12);
        EXPECT_EQ(back[i].level, gt[i].level);
    }
    EXPECT_THROW(parse_ground_truth("a,b\n"), ParseError);
    EXPECT_THROW(parse_ground_truth(""), ParseError);
    auto text = ss.str();
    text += "d,a,e,b,1.5,0,0,0,0,0,0\n";
    EXPECT_THROW(parse_ground_truth(text), ParseError);
}

TEST(GroundTruth, QuotedNamesSurviveCsv) {
    GroundTruthEntry e{{"d,1", "a \"q\""}, {"e", "b"}};
    std::stringstream ss;
    write_ground_truth(ss, std::vector<GroundTruthEntry>{e});
    const auto back = parse_ground_truth(ss.str());
    ASSERT_EQ(back.size(), 1u);
    EXPECT_EQ(back[0].a, e.a);
}

TEST(Index, ToyRepository) {
    const auto paths = toy_paths();
    const auto r = index_repository(paths);
    EXPECT_TRUE(r.failures.empty());
    EXPECT_EQ(r.store.size(), 8u);
    EXPECT_EQ(r.store.version(), 1u);
    EXPECT_TRUE(r.store.find(AttributeId::parse("population.Y")));
    EXPECT_FALSE(r.store.find(AttributeId::parse("population.Z")));
    EXPECT_THROW(r.store.at(AttributeId::parse("population.Z")), DiscoveryError);
    EXPECT_EQ(index_repository(paths, {}, 1).store.version(), 2u);
}

TEST(Index, FailuresAndErrors) {
    std::vector<std::filesystem::path> none;
    EXPECT_THROW(index_repository(none), DiscoveryError);
    const std::vector<std::filesystem::path> missing{kToy + "/absent.csv"};
    EXPECT_THROW(index_repository(missing), DiscoveryError);
    auto paths = toy_paths();
    paths.push_back(kToy + "/absent.csv");
    const auto r = index_repository(paths);
    ASSERT_EQ(r.failures.size(), 1u);
    EXPECT_EQ(r.store.size(), 8u);
    const auto dir = temp_dir("dup");
    std::filesystem::create_directories(dir / "x");
    std::filesystem::copy_file(paths[0], dir / "happiness.csv");
    std::filesystem::copy_file(paths[0], dir / "x" / "happiness.csv");
    const std::vector<std::filesystem::path> dup{dir / "happiness.csv", dir / "x" / "happiness.csv",
                                                 paths[1]};
    EXPECT_THROW(index_repository(dup), DiscoveryError);
}

TEST(Index, ThreadCountDoesNotChangeStore) {
    LoadOptions one, many;
    one.threads = 1;
    many.threads = 4;
    const auto paths = toy_paths();
    EXPECT_EQ(index_repository(paths, one).store.to_json(), index_repository(paths, many).store.to_json());
}

TEST(Store, SaveLoad) {
    const auto paths = toy_paths();
    const auto store = index_repository(paths).store;
    const auto path = temp_dir("store") / "store.json";
    store.save(path);
    const auto back = ProfileStore::load(path);
    EXPECT_EQ(back.size(), store.size());
    EXPECT_EQ(back.version(), store.version());
    EXPECT_EQ(back.layout(), store.layout());
    EXPECT_EQ(back.to_json(), store.to_json());
    std::ofstream(path, std::ios::trunc) << "{\"format\": \"other\"}";
    EXPECT_THROW(ProfileStore::load(path), Error);
}

TEST(Discover, RankingOrderAndExclusion) {
    const auto paths = toy_paths();
    const auto store = index_repository(paths).store;
    const auto model = containment_model();
    const auto query = AttributeId::parse("happiness.Country");
    const auto r = discover_by_attribute(store, model, query, 10);
    std::vector<std::string> ids;
    for (const auto& c : r.candidates) {
        EXPECT_NE(c.id.dataset, "happiness");
        ids.push_back(c.id.str());
    }
    EXPECT_EQ(ids, (std::vector<std::string>{"expectancy.Nation", "population.X", "population.Y", "stores.Location",
                                             "stores.Discount", "stores.Country"}));
    EXPECT_DOUBLE_EQ(r.candidates[4].score.value, 0.5);
    EXPECT_DOUBLE_EQ(r.candidates[5].score.value, 0.25);

    const auto top2 = discover_by_attribute(store, model, query, 2, 3);
    ASSERT_EQ(top2.candidates.size(), 2u);
    EXPECT_EQ(top2.candidates[1].id.str(), "population.X");

    const auto j = to_json(top2);
    ASSERT_EQ(j.size(), 2u);
    EXPECT_EQ(j[0]["dataset"], "expectancy");
    EXPECT_EQ(j[0]["score"], 1.0);
}

TEST(Discover, Errors) {
    const auto paths = toy_paths();
    const auto store = index_repository(paths).store;
    const auto model = containment_model();
    EXPECT_THROW(discover_by_attribute(store, model, AttributeId::parse("happiness.Country"), 0), DiscoveryError);
    EXPECT_THROW(discover_by_attribute(store, model, AttributeId::parse("happiness.Nope"), 3), DiscoveryError);
    RegressionModel other(kDistanceArity, 1, 0.0, "other-layout");
    EXPECT_THROW(discover_by_attribute(store, other, AttributeId::parse("happiness.Country"), 3), LayoutError);
}

TEST(Discover, SortRankingTieBreak) {
    auto score = [](double v) { return QualityScore{v, QualityKind::predicted, std::nullopt}; };
    std::vector<RankedCandidate> c{
        {{"b", "x"}, score(0.5)}, {{"a", "y"}, score(0.5)}, {{"c", "z"}, score(0.9)}, {{"a", "x"}, score(0.5)}};
    sort_ranking(c);
    EXPECT_EQ(c[0].id.str(), "c.z");
    EXPECT_EQ(c[1].id.str(), "a.x");
    EXPECT_EQ(c[2].id.str(), "a.y");
    EXPECT_EQ(c[3].id.str(), "b.x");
}

TEST(Corpus, FromToyGroundTruth) {
    const auto paths = toy_paths();
    const auto store = index_repository(paths).store;
    const auto gt = generate_ground_truth(toy_datasets());
    const auto corpus = build_training_corpus(store, gt, Strictness::strict);
    EXPECT_EQ(corpus.size(), gt.size());
    for (std::size_t i = 0; i < gt.size(); ++i) {
        EXPECT_EQ(corpus[i].example.label, gt[i].q_strict);
        EXPECT_EQ(corpus[i].example.features.values.size(), kDistanceArity);
    }
}

TEST(RankingMetrics, Examples) {
    Ranking r{{"q", "a"}, {}};
    for (auto s : {"d1.a", "d2.a", "d3.a", "d4.a", "d5.a", "d6.a"}) r.candidates.push_back({AttributeId::parse(s), {}});
    const std::set<AttributeId> gt{AttributeId::parse("d1.a"), AttributeId::parse("d3.a"), AttributeId::parse("d4.a"),
                                   AttributeId::parse("d9.a")};
    const auto m = ranking_metrics(r, gt, 4);
    EXPECT_DOUBLE_EQ(m.precision_at_k, 0.75);
    EXPECT_DOUBLE_EQ(m.recall_at_ground_truth, 0.75);
    EXPECT_DOUBLE_EQ(m.recall_at_size_of_gt, 0.75);
    // top half of six candidates: d1, d2, d3
    EXPECT_DOUBLE_EQ(m.precision_at_50, 2.0 / 3.0);
    EXPECT_FALSE(m.empty_ranking);

    const auto m2 = ranking_metrics(r, gt, 2);
    EXPECT_DOUBLE_EQ(m2.precision_at_k, 0.5);
    EXPECT_DOUBLE_EQ(m2.recall_at_ground_truth, 0.25);

    const auto empty = ranking_metrics(Ranking{{"q", "a"}, {}}, gt, 3);
    EXPECT_TRUE(empty.empty_ranking);
    EXPECT_EQ(empty.precision_at_k, 0.0);
    EXPECT_THROW(ranking_metrics(r, {}, 3), MetricError);
    EXPECT_THROW(ranking_metrics(r, gt, 0), MetricError);
}

TEST(Classifier, Examples) {
    const std::vector<double> scores{0.9, 0.8, 0.3, 0.2, 0.6};
    const std::vector<bool> labels{true, false, true, false, true};
    const auto r = evaluate_threshold(scores, labels, 0.5);
    EXPECT_EQ(r.tp, 2u);
    EXPECT_EQ(r.fp, 1u);
    EXPECT_EQ(r.fn, 1u);
    EXPECT_EQ(r.tn, 1u);
    EXPECT_DOUBLE_EQ(r.precision, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(r.recall, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(r.f_score, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(r.accuracy, 0.6);
    // strict inequality: a score equal to the threshold is negative
    EXPECT_EQ(evaluate_threshold(scores, labels, 0.9).tp, 0u);
    EXPECT_EQ(evaluate_threshold(scores, labels, 0.9).precision, 0.0);
    EXPECT_THROW(evaluate_threshold(scores, std::vector<bool>(5, false), 0.5), MetricError);
    EXPECT_THROW(evaluate_threshold(scores, std::vector<bool>(4, true), 0.5), MetricError);
    EXPECT_EQ(threshold_metric_from_string("J"), ThresholdMetric::jaccard);
    EXPECT_THROW(threshold_metric_from_string("K"), MetricError);
}

TEST(Classifier, OverGroundTruth) {
    const auto gt = generate_ground_truth(toy_datasets());
    const auto c = evaluate_threshold_classifier(gt, ThresholdMetric::containment, 0.0);
    std::size_t semantic = 0, overlapping = 0;
    for (const auto& e : gt) {
        semantic += e.semantic();
        overlapping += e.containment > 0;
    }
    EXPECT_EQ(c.tp + c.fn, semantic);
    EXPECT_EQ(c.tp + c.fp, overlapping);
    // every semantic pair overlaps
    EXPECT_DOUBLE_EQ(c.recall, 1.0);
}
