#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "joinscout/discovery.hpp"
#include "synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kCli = JOINSCOUT_CLI;
const std::string kToy = std::string(JOINSCOUT_FIXTURES) + "/toy";

struct Result {
    int code = -1;
    std::string out;
};

Result run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + (env.empty() ? "" : " ") + "'" + kCli + "' " + args + " 2>/dev/null";
    Result r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    char buf[4096];
    std::size_t n = 0;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string toy_files() {
    return "'" + kToy + "/happiness.csv' '" + kToy + "/population.csv' '" + kToy + "/stores.csv' '" + kToy +
           "/expectancy.csv'";
}

fs::path fresh_dir(const std::string& name) {
    auto d = fs::temp_directory_path() / ("joinscout_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Small synthetic repository with a store, ground truth and a quickly trained model.
struct Trained {
    fs::path dir, store, gt, model;
};

const Trained& trained() {
    static const Trained t = [] {
        Trained t;
        t.dir = fresh_dir("trained");
        std::string files;
        for (const auto& d : synth::training_repository(14, 5)) {
            const auto p = t.dir / (d.name + ".csv");
            synth::write_csv(d, p);
            files += " '" + p.string() + "'";
        }
        t.store = t.dir / "store.json";
        t.gt = t.dir / "gt.csv";
        t.model = t.dir / "model.json";
        run("index -o '" + t.store.string() + "'" + files);
        run("ground-truth -o '" + t.gt.string() + "'" + files);
        run("train '" + t.gt.string() + "' '" + t.store.string() + "' --epochs 3 -o '" + t.model.string() + "'");
        return t;
    }();
    return t;
}

} // namespace

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("bogus").code, 2);
    EXPECT_EQ(run("index " + toy_files()).code, 2); // missing -o
    EXPECT_EQ(run("--help").code, 0);
    EXPECT_EQ(run("evaluate x.csv --metric K").code, 2);
}

TEST(Cli, ProfileToStdout) {
    const auto r = run("profile " + toy_files());
    ASSERT_EQ(r.code, 0);
    const auto docs = json::parse(r.out);
    ASSERT_EQ(docs.size(), 4u);
    EXPECT_EQ(docs[1]["dataset"], "population");
    EXPECT_EQ(docs[1]["attributes"].size(), 2u);
}

TEST(Cli, ProfilePartialFailureExitsOne) {
    const auto dir = fresh_dir("profile");
    const auto r = run("profile -o '" + dir.string() + "' '" + kToy + "/happiness.csv' '" + kToy + "/absent.csv'");
    EXPECT_EQ(r.code, 1);
    EXPECT_TRUE(fs::exists(dir / "happiness.profile.json"));
    EXPECT_EQ(json::parse(r.out)["failed"].size(), 1u);
    EXPECT_EQ(run("profile '" + kToy + "/absent.csv'").code, 1);
}

TEST(Cli, OtherDelimiter) {
    const auto dir = fresh_dir("delim");
    std::ofstream(dir / "semi.csv") << "city;code\nparis;a1\nlyon;b2\n";
    std::ofstream(dir / "tabs.tsv") << "city\tcode\nparis\ta1\n";
    auto r = run("profile --delimiter ';' '" + (dir / "semi.csv").string() + "'");
    ASSERT_EQ(r.code, 0);
    auto doc = json::parse(r.out)[0];
    ASSERT_EQ(doc["attributes"].size(), 2u);
    EXPECT_EQ(doc["attributes"][1]["attribute_name"], "code");
    r = run("profile --delimiter tab '" + (dir / "tabs.tsv").string() + "'");
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(json::parse(r.out)[0]["attributes"].size(), 2u);
    EXPECT_EQ(run("profile --delimiter ';;' '" + (dir / "semi.csv").string() + "'").code, 2);
}

TEST(Cli, IndexBumpsVersion) {
    const auto dir = fresh_dir("index");
    const auto store = (dir / "store.json").string();
    auto r = run("index -o '" + store + "' " + toy_files());
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(json::parse(r.out)["version"], 1);
    r = run("index -o '" + store + "' " + toy_files());
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(json::parse(r.out)["version"], 2);
    EXPECT_EQ(joinscout::ProfileStore::load(store).size(), 8u);
}

TEST(Cli, GroundTruthToyValues) {
    const auto r = run("ground-truth " + toy_files());
    ASSERT_EQ(r.code, 0);
    const auto gt = joinscout::parse_ground_truth(r.out);
    bool found = false;
    for (const auto& e : gt) {
        if (e.a.str() == "happiness.Country" && e.b.str() == "population.X") {
            found = true;
            EXPECT_DOUBLE_EQ(e.containment, 0.75);
            EXPECT_DOUBLE_EQ(e.jaccard, 0.6);
            EXPECT_DOUBLE_EQ(e.level, 0.75);
            EXPECT_NEAR(e.q_balanced, 0.876869688261, 1e-12);
        }
    }
    EXPECT_TRUE(found);
}

TEST(Cli, ParamsFromEnvironment) {
    const auto base = run("ground-truth " + toy_files());
    const auto same = run("ground-truth " + toy_files(), "JOINSCOUT_PARAMS='" + std::string(JOINSCOUT_PARAMS_FILE) + "'");
    ASSERT_EQ(same.code, 0);
    EXPECT_EQ(same.out, base.out);
    const auto dir = fresh_dir("params");
    std::ofstream(dir / "p.json") << R"({"mu_c": 0.3, "mu_k": 0.5, "var_c": 0.1, "var_k": 0.2})";
    const auto env = "JOINSCOUT_PARAMS='" + (dir / "p.json").string() + "'";
    const auto changed = run("ground-truth " + toy_files(), env);
    ASSERT_EQ(changed.code, 0);
    EXPECT_NE(changed.out, base.out);
    // an explicit flag wins over the environment
    EXPECT_EQ(run("ground-truth --params '" + std::string(JOINSCOUT_PARAMS_FILE) + "' " + toy_files(), env).out,
              base.out);
    EXPECT_EQ(run("ground-truth " + toy_files(), "JOINSCOUT_PARAMS=/nonexistent.json").code, 1);
}

TEST(Cli, TrainIsDeterministic) {
    const auto& t = trained();
    ASSERT_TRUE(fs::exists(t.model));
    const auto again = t.dir / "again.json";
    const auto r = run("train '" + t.gt.string() + "' '" + t.store.string() + "' --epochs 3 -o '" + again.string() + "'");
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(slurp(again), slurp(t.model));
    const auto doc = json::parse(r.out);
    EXPECT_GT(doc["train_examples"].get<int>(), 0);
    EXPECT_TRUE(doc.contains("holdout"));
}

TEST(Cli, Discover) {
    const auto& t = trained();
    const auto store = joinscout::ProfileStore::load(t.store);
    const auto query = store.profiles().begin()->first;
    const std::string base = "discover --store '" + t.store.string() + "' --model '" + t.model.string() + "'";
    const auto r = run(base + " --query '" + query.str() + "' -k 4");
    ASSERT_EQ(r.code, 0);
    const auto ranking = json::parse(r.out);
    ASSERT_EQ(ranking.size(), 4u);
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        EXPECT_NE(ranking[i]["dataset"], query.dataset);
        if (i) {
            EXPECT_GE(ranking[i - 1]["score"].get<double>(), ranking[i]["score"].get<double>());
        }
    }
    EXPECT_EQ(run(base + " --query nodot").code, 2);
    EXPECT_EQ(run(base + " --query t0.absent").code, 2);
    EXPECT_EQ(run(base + " --query '" + query.str() + "' -k 0").code, 2);
    EXPECT_EQ(run("discover --store /nonexistent --model '" + t.model.string() + "' --query a.b").code, 1);
}

TEST(Cli, Evaluate) {
    const auto& t = trained();
    auto r = run("evaluate '" + t.gt.string() + "' --metric C --threshold 0.5");
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(json::parse(r.out)["threshold"], 0.5);
    r = run("evaluate '" + t.gt.string() + "' --metric J");
    ASSERT_EQ(r.code, 0);
    EXPECT_TRUE(json::parse(r.out)["report"].contains("f_score"));
    r = run("evaluate '" + t.gt.string() + "' --store '" + t.store.string() + "' --model '" + t.model.string() + "' -k 3");
    ASSERT_EQ(r.code, 0);
    EXPECT_GT(json::parse(r.out)["queries"].get<int>(), 0);
    EXPECT_EQ(run("evaluate '" + t.gt.string() + "' --store '" + t.store.string() + "'").code, 2);
}

TEST(Cli, FitDist) {
    const auto& t = trained();
    const auto out = t.dir / "params.json";
    const auto r = run("fit-dist '" + t.gt.string() + "' -o '" + out.string() + "'");
    ASSERT_EQ(r.code, 0);
    const auto params = joinscout::params_from_json(json::parse(slurp(out)));
    EXPECT_GT(params.var_c, 0.0);
    // the report is itself a params document, usable as --params
    const auto report = json::parse(r.out);
    EXPECT_EQ(joinscout::params_from_json(report), params);
    EXPECT_GT(report["samples"].get<int>(), 0);
    EXPECT_EQ(run("ground-truth --params '" + out.string() + "' " + toy_files()).code, 0);
}
