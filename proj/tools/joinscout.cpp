// joinscout command-line tool. JSON on stdout, diagnostics on stderr.
// Exit codes: 0 success, 1 I/O or processing failure, 2 bad arguments.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "joinscout/joinscout.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace joinscout;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string delimiter = ",";
    bool no_header = false;
    unsigned threads = 0;
};

char parse_delimiter(const std::string& d) {
    if (d == "\\t" || d == "tab") return '\t';
    if (d.size() != 1 || d == "\"" || d == "\n" || d == "\r") {
        throw UsageError("delimiter must be a single character, got '" + d + "'");
    }
    return d[0];
}

LoadOptions load_options(const Common& c) {
    LoadOptions o;
    o.delimiter = parse_delimiter(c.delimiter);
    o.has_header = !c.no_header;
    o.threads = c.threads;
    return o;
}

FittedParams resolve_params(const std::string& flag) {
    std::string path = flag;
    if (path.empty()) {
        if (const char* env = std::getenv("JOINSCOUT_PARAMS"); env && *env) path = env;
    }
    if (path.empty()) return default_params();
    try {
        return params_from_json(json::parse(read_file(path)));
    } catch (const json::exception& e) {
        throw ParseError("malformed params file " + path + ": " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

void report_failures(const std::vector<LoadFailure>& failures) {
    for (const auto& f : failures) std::cerr << "warning: " << f.path.string() << ": " << f.message << '\n';
}

json failures_json(const std::vector<LoadFailure>& failures) {
    auto out = json::array();
    for (const auto& f : failures) out.push_back({{"path", f.path.string()}, {"error", f.message}});
    return out;
}

std::vector<fs::path> as_paths(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

// A store file, or a directory of profile documents.
ProfileStore open_store(const fs::path& p) {
    if (!fs::is_directory(p)) return ProfileStore::load(p);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(p))
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<AttributeProfile> profiles;
    for (const auto& f : files) {
        try {
            auto doc = profiles_from_document(json::parse(read_file(f)));
            std::move(doc.begin(), doc.end(), std::back_inserter(profiles));
        } catch (const json::exception& e) {
            throw ParseError("malformed profile document " + f.string() + ": " + e.what());
        }
    }
    if (profiles.empty()) throw IoError("no profile documents in " + p.string());
    return ProfileStore(std::move(profiles));
}

json regression_json(const RegressionReport& r) {
    return {{"mse", r.mse}, {"mae", r.mae}, {"r2", r.r2}, {"spearman", r.spearman}};
}

json classifier_json(const ClassifierReport& r) {
    return {{"precision", r.precision}, {"recall", r.recall}, {"f_score", r.f_score}, {"accuracy", r.accuracy},
            {"tp", r.tp},               {"fp", r.fp},         {"fn", r.fn},           {"tn", r.tn}};
}

// ---------------------------------------------------------------------------

int cmd_profile(const std::vector<std::string>& inputs, const std::string& out_dir, const Common& c) {
    const auto opt = load_options(c);
    const auto paths = as_paths(inputs);
    auto repo = load_repository(paths, opt);
    report_failures(repo.failures);
    if (repo.datasets.empty()) {
        std::cerr << "error: none of the input files could be loaded\n";
        return 1;
    }
    if (!out_dir.empty()) fs::create_directories(out_dir);
    auto docs = json::array();
    auto written = json::array();
    for (const auto& d : repo.datasets) {
        const auto profiles = profile_datasets(std::span<const Dataset>(&d, 1), opt.numeric_exclusion, c.threads);
        auto doc = profiles_document(d.name, profiles);
        if (out_dir.empty()) {
            docs.push_back(std::move(doc));
        } else {
            const auto path = fs::path(out_dir) / (d.name + ".profile.json");
            write_text(path, doc.dump(1) + "\n");
            std::cerr << "profiled " << d.name << " (" << profiles.size() << " string attributes)\n";
            written.push_back(path.string());
        }
    }
    if (out_dir.empty()) {
        std::cout << docs.dump(1) << '\n';
    } else {
        std::cout << json{{"written", written}, {"failed", failures_json(repo.failures)}}.dump(1) << '\n';
    }
    return repo.failures.empty() ? 0 : 1;
}

int cmd_index(const std::vector<std::string>& inputs, const std::string& out, const Common& c) {
    std::uint64_t previous = 0;
    if (fs::exists(out)) {
        try {
            previous = ProfileStore::load(out).version();
        } catch (const Error& e) {
            std::cerr << "warning: replacing unreadable store " << out << ": " << e.what() << '\n';
        }
    }
    const auto paths = as_paths(inputs);
    auto result = index_repository(paths, load_options(c), previous);
    report_failures(result.failures);
    result.store.save(out);
    std::cout << json{{"store", out},
                      {"version", result.store.version()},
                      {"attributes", result.store.size()},
                      {"failed", failures_json(result.failures)}}
                     .dump(1)
              << '\n';
    return result.failures.empty() ? 0 : 1;
}

int cmd_discover(const std::string& store_path, const std::string& model_path, const std::string& query,
                 std::size_t k, const Common& c) {
    AttributeId id;
    try {
        id = AttributeId::parse(query);
    } catch (const DiscoveryError& e) {
        throw UsageError(e.what());
    }
    const auto store = open_store(store_path);
    if (!store.find(id)) throw UsageError("unknown query attribute " + query);
    const auto model = load_model(model_path);
    const auto ranking = discover_by_attribute(store, model, id, k, c.threads);
    std::cout << to_json(ranking).dump(1) << '\n';
    return 0;
}

int cmd_ground_truth(const std::vector<std::string>& inputs, const std::string& out, const std::string& params,
                     int levels, const Common& c) {
    const auto paths = as_paths(inputs);
    auto repo = load_repository(paths, load_options(c));
    report_failures(repo.failures);
    if (repo.datasets.empty()) {
        std::cerr << "error: none of the input files could be loaded\n";
        return 1;
    }
    GroundTruthOptions opt;
    opt.params = resolve_params(params);
    opt.levels = levels;
    opt.threads = c.threads;
    const auto entries = generate_ground_truth(repo.datasets, opt);
    if (out.empty()) {
        write_ground_truth(std::cout, entries);
    } else {
        std::ofstream f(out, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot write " + out);
        write_ground_truth(f, entries);
        std::cout << json{{"ground_truth", out}, {"pairs", entries.size()}, {"failed", failures_json(repo.failures)}}
                         .dump(1)
                  << '\n';
    }
    return repo.failures.empty() ? 0 : 1;
}

int cmd_fit_dist(const std::string& gt_path, const std::string& out, int min_level, const Common& c) {
    const auto entries = load_ground_truth(gt_path);
    std::vector<double> cs, ks;
    for (const auto& e : entries) {
        if (e.level * kGroundTruthLevels + 1e-9 < min_level) continue;
        cs.push_back(e.containment);
        ks.push_back(e.k);
    }
    const auto fit = fit_distribution(cs, ks, FitGrid{}, c.threads);
    auto fit_json = [](const UnivariateFit& f) {
        return json{{"mu", f.mu}, {"sigma", f.sigma}, {"distance", f.distance}, {"degenerate", f.degenerate}};
    };
    auto doc = to_json(fit.params);
    doc["samples"] = cs.size();
    doc["containment"] = fit_json(fit.containment);
    doc["cardinality"] = fit_json(fit.cardinality);
    if (fit.containment.degenerate || fit.cardinality.degenerate) {
        std::cerr << "warning: degenerate fit (minimum at the smallest grid sigma)\n";
    }
    if (!out.empty()) write_text(out, doc.dump(1) + "\n");
    std::cout << doc.dump(1) << '\n';
    return 0;
}

struct TrainArgs {
    std::string ground_truth;
    std::string store;
    std::string model = "model.jsmodel.json";
    std::string corpus_out;
    std::string strictness = "balanced";
    std::uint64_t seed = 7;
    double test_fraction = 0.2;
    TrainOptions opt;
};

int cmd_train(TrainArgs a) {
    const auto store = open_store(a.store);
    const auto truth = load_ground_truth(a.ground_truth);
    const auto corpus = build_training_corpus(store, truth, strictness_from_string(a.strictness));
    if (corpus.size() < truth.size()) {
        std::cerr << "warning: " << truth.size() - corpus.size() << " ground-truth pairs have no stored profile\n";
    }
    if (!a.corpus_out.empty()) {
        std::ofstream f(a.corpus_out, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot write " + a.corpus_out);
        write_corpus(f, corpus);
    }
    const auto split = pair_split(corpus, a.test_fraction, a.seed);
    std::vector<TrainingExample> train_set, test_set;
    for (auto i : split.train) train_set.push_back(corpus[i].example);
    for (auto i : split.test) test_set.push_back(corpus[i].example);
    a.opt.seed = a.seed;
    const auto model = train(train_set, a.opt);
    save_model(model, a.model);
    json doc{{"model", a.model},
             {"train_examples", train_set.size()},
             {"test_examples", test_set.size()},
             {"train_mse", model.info.train_mse}};
    doc["holdout"] = test_set.size() >= 2 ? regression_json(evaluate_regression(model, test_set)) : json(nullptr);
    std::cout << doc.dump(1) << '\n';
    return 0;
}

struct EvaluateArgs {
    std::string ground_truth;
    std::string metric = "Q";
    std::optional<double> threshold;
    std::string strictness = "balanced";
    std::string store;
    std::string model;
    std::size_t k = 5;
};

int cmd_evaluate(const EvaluateArgs& a, const Common& c) {
    const auto truth = load_ground_truth(a.ground_truth);
    if (!a.store.empty() || !a.model.empty()) {
        if (a.store.empty() || a.model.empty()) throw UsageError("ranking evaluation needs both --store and --model");
        const auto store = open_store(a.store);
        const auto model = load_model(a.model);
        std::map<AttributeId, std::set<AttributeId>> relevant;
        for (const auto& e : truth)
            if (e.semantic() && store.find(e.a) && store.find(e.b)) relevant[e.a].insert(e.b);
        RankingReport mean;
        std::size_t n = 0, empty = 0;
        for (const auto& [q, gt] : relevant) {
            const auto r = ranking_metrics(discover_by_attribute(store, model, q, a.k, c.threads), gt, a.k);
            empty += r.empty_ranking;
            mean.precision_at_k += r.precision_at_k;
            mean.recall_at_ground_truth += r.recall_at_ground_truth;
            mean.recall_at_size_of_gt += r.recall_at_size_of_gt;
            mean.precision_at_50 += r.precision_at_50;
            ++n;
        }
        if (n == 0) throw MetricError("no query has a semantically joinable pair in the ground truth");
        const double d = static_cast<double>(n);
        std::cout << json{{"queries", n},
                          {"k", a.k},
                          {"empty_rankings", empty},
                          {"precision_at_k", mean.precision_at_k / d},
                          {"recall_at_ground_truth", mean.recall_at_ground_truth / d},
                          {"recall_at_size_of_gt", mean.recall_at_size_of_gt / d},
                          {"precision_at_50", mean.precision_at_50 / d}}
                         .dump(1)
                  << '\n';
        return 0;
    }
    const auto metric = threshold_metric_from_string(a.metric);
    const auto s = strictness_from_string(a.strictness);
    json doc{{"metric", a.metric}};
    if (a.threshold) {
        doc["threshold"] = *a.threshold;
        doc["report"] = classifier_json(evaluate_threshold_classifier(truth, metric, *a.threshold, s));
    } else {
        // sweep 0.00 .. 0.99 and keep the best F-score
        double best_t = 0;
        ClassifierReport best;
        for (int i = 0; i < 100; ++i) {
            const double t = i / 100.0;
            const auto r = evaluate_threshold_classifier(truth, metric, t, s);
            if (i == 0 || r.f_score > best.f_score) {
                best = r;
                best_t = t;
            }
        }
        doc["threshold"] = best_t;
        doc["report"] = classifier_json(best);
    }
    std::cout << doc.dump(1) << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"joinscout: profile-based join discovery over tabular repositories"};
    app.require_subcommand(1);
    Common common;
    auto add_common = [&](CLI::App* sub, bool io) {
        sub->add_option("--threads", common.threads, "Worker threads (0 = available parallelism)");
        if (io) {
            sub->add_option("--delimiter", common.delimiter, "Field delimiter (single character or 'tab')");
            sub->add_flag("--no-header", common.no_header, "Input files have no header row");
        }
    };
    const std::vector<std::string> strictness_names{"relaxed", "balanced", "strict"};

    std::vector<std::string> inputs;
    std::string out, params;
    int levels = kGroundTruthLevels;
    int min_level = 1;
    TrainArgs targs;
    EvaluateArgs eargs;
    std::string store_path, model_path, query;
    std::size_t k = 10;

    auto* profile = app.add_subcommand("profile", "Profile the string attributes of each input file");
    profile->add_option("inputs", inputs, "Delimited text files")->required();
    profile->add_option("-o,--output", out, "Directory for <dataset>.profile.json (stdout if omitted)");
    add_common(profile, true);

    auto* index = app.add_subcommand("index", "Build a profile store over a repository");
    index->add_option("inputs", inputs, "Delimited text files")->required();
    index->add_option("-o,--output", out, "Store file to write")->required();
    add_common(index, true);

    auto* discover = app.add_subcommand("discover", "Rank join candidates for a query attribute");
    discover->add_option("--store", store_path, "Store file or profile directory")->required();
    discover->add_option("--model", model_path, "Model file")->required();
    discover->add_option("--query", query, "Query attribute as dataset.attribute")->required();
    discover->add_option("-k", k, "Number of candidates")->check(CLI::PositiveNumber);
    add_common(discover, false);

    auto* gt = app.add_subcommand("ground-truth", "Exact join metrics for all cross-dataset attribute pairs");
    gt->add_option("inputs", inputs, "Delimited text files")->required();
    gt->add_option("-o,--output", out, "CSV file to write (stdout if omitted)");
    gt->add_option("--params", params, "Fitted parameters JSON (default: $JOINSCOUT_PARAMS, then built-in)");
    gt->add_option("-L,--levels", levels, "Levels of the discrete quality")->check(CLI::PositiveNumber);
    add_common(gt, true);

    auto* fit = app.add_subcommand("fit-dist", "Fit the continuous-quality parameters to a ground truth");
    fit->add_option("ground_truth", inputs, "Ground-truth CSV")->required()->expected(1);
    fit->add_option("-o,--output", out, "Params JSON to write");
    fit->add_option("--min-level", min_level, "Use pairs whose discrete level is at least this (out of 4)")
        ->check(CLI::Range(0, kGroundTruthLevels));
    add_common(fit, false);

    auto* trn = app.add_subcommand("train", "Train the quality predictor");
    trn->add_option("ground_truth", targs.ground_truth, "Ground-truth CSV")->required();
    trn->add_option("store", targs.store, "Store file or profile directory")->required();
    trn->add_option("-o,--model", targs.model, "Model file to write");
    trn->add_option("--corpus-out", targs.corpus_out, "Also write the training corpus (JSON lines)");
    trn->add_option("--strictness", targs.strictness, "Label strictness")->check(CLI::IsMember(strictness_names));
    trn->add_option("--seed", targs.seed, "Random seed");
    trn->add_option("--epochs", targs.opt.epochs)->check(CLI::PositiveNumber);
    trn->add_option("--lr", targs.opt.learning_rate)->check(CLI::PositiveNumber);
    trn->add_option("--batch", targs.opt.batch_size)->check(CLI::PositiveNumber);
    trn->add_option("--test-fraction", targs.test_fraction, "Held-out share")->check(CLI::Range(0.01, 0.99));

    auto* ev = app.add_subcommand("evaluate", "Threshold classifier or ranking evaluation against a ground truth");
    ev->add_option("ground_truth", eargs.ground_truth, "Ground-truth CSV")->required();
    ev->add_option("--metric", eargs.metric, "C, J or Q")->check(CLI::IsMember({"C", "J", "Q"}));
    ev->add_option("--threshold", eargs.threshold, "Positive when metric > threshold (sweeps if omitted)")
        ->check(CLI::Range(0.0, 1.0));
    ev->add_option("--strictness", eargs.strictness, "Strictness for Q")->check(CLI::IsMember(strictness_names));
    ev->add_option("--store", eargs.store, "Store for ranking evaluation");
    ev->add_option("--model", eargs.model, "Model for ranking evaluation");
    ev->add_option("-k", eargs.k, "Cutoff for ranking evaluation")->check(CLI::PositiveNumber);
    add_common(ev, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*profile) return cmd_profile(inputs, out, common);
        if (*index) return cmd_index(inputs, out, common);
        if (*discover) return cmd_discover(store_path, model_path, query, k, common);
        if (*gt) return cmd_ground_truth(inputs, out, params, levels, common);
        if (*fit) return cmd_fit_dist(inputs.front(), out, min_level, common);
        if (*trn) return cmd_train(targs);
        if (*ev) return cmd_evaluate(eargs, common);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
