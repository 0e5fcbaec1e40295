#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "joinscout/error.hpp"
#include "joinscout/join_metrics.hpp"
#include "joinscout/profile_comparison.hpp"

namespace joinscout {

struct TrainingExample {
    DistanceVector features;
    double label = 0; ///< continuous join quality in [0,1]
};

struct TrainOptions {
    std::uint64_t seed = 7;
    std::size_t epochs = 200;
    double learning_rate = 1e-3;
    std::size_t batch_size = 32;
    double alpha = 1e-4; ///< L2 penalty on weights (not biases)
    std::size_t hidden = 100;
};

inline constexpr std::size_t kMinTrainingExamples = 50;

struct TrainingInfo {
    std::uint64_t seed = 0;
    std::size_t epochs = 0;
    double learning_rate = 0;
    std::size_t batch_size = 0;
    std::vector<double> loss_curve; ///< mean penalized loss per epoch
    double train_mse = 0;
};

/// One-hidden-layer ReLU perceptron with a scalar linear head. All parameters
/// live in one flat vector: W1 (hidden x input, row-major), b1, w2, b2.
class RegressionModel {
public:
    RegressionModel() = default;

    RegressionModel(std::size_t input, std::size_t hidden, double alpha, std::string layout)
        : layout_(std::move(layout)), input_(input), hidden_(hidden), alpha_(alpha),
          params_(hidden * input + 2 * hidden + 1, 0.0) {}

    std::size_t input_size() const noexcept { return input_; }
    std::size_t hidden_size() const noexcept { return hidden_; }
    double alpha() const noexcept { return alpha_; }
    const std::string& layout() const noexcept { return layout_; }

    std::span<double> params() noexcept { return params_; }
    std::span<const double> params() const noexcept { return params_; }

    std::span<const double> w1() const noexcept { return {params_.data(), hidden_ * input_}; }
    std::span<const double> b1() const noexcept { return {params_.data() + hidden_ * input_, hidden_}; }
    std::span<const double> w2() const noexcept {
        return {params_.data() + hidden_ * input_ + hidden_, hidden_};
    }
    double b2() const noexcept { return params_.back(); }

    /// Whether parameter i is a weight (subject to the L2 penalty).
    bool is_weight(std::size_t i) const noexcept {
        const std::size_t n1 = hidden_ * input_;
        return i < n1 || (i >= n1 + hidden_ && i < n1 + 2 * hidden_);
    }

    /// Unclamped network output.
    double forward(std::span<const double> x) const {
        const double* w = params_.data();
        const double* b = w + hidden_ * input_;
        const double* v = b + hidden_;
        double out = params_.back();
        for (std::size_t h = 0; h < hidden_; ++h) {
            const double* row = w + h * input_;
            double z = b[h];
            for (std::size_t i = 0; i < input_; ++i) z += row[i] * x[i];
            if (z > 0) out += v[h] * z;
        }
        return out;
    }

    QualityScore predict(const DistanceVector& v) const {
        check(v);
        return {std::clamp(forward(v.values), 0.0, 1.0), QualityKind::predicted, std::nullopt};
    }

    std::vector<QualityScore> predict_batch(std::span<const DistanceVector> vs) const {
        std::vector<QualityScore> out;
        out.reserve(vs.size());
        for (const auto& v : vs) out.push_back(predict(v));
        return out;
    }

    void check(const DistanceVector& v) const {
        if (v.layout != layout_) {
            throw LayoutError("vector layout '" + v.layout + "' does not match model layout '" +
                              layout_ + "'");
        }
        if (v.values.size() != input_) {
            throw LayoutError("vector has " + std::to_string(v.values.size()) +
                              " entries, model expects " + std::to_string(input_));
        }
    }

    TrainingInfo info;

private:
    std::string layout_{kLayoutVersion};
    std::size_t input_ = 0;
    std::size_t hidden_ = 0;
    double alpha_ = 0;
    std::vector<double> params_;
};

/// Penalized loss over a batch and its gradient with respect to the flat
/// parameter vector:  sum((f(x)-y)^2) / 2n  +  alpha * |W|^2 / 2n.
inline double loss_and_gradient(const RegressionModel& m, std::span<const TrainingExample* const> batch,
                                std::span<double> grad) {
    const std::size_t in = m.input_size(), hid = m.hidden_size();
    const auto p = m.params();
    std::fill(grad.begin(), grad.end(), 0.0);
    const double n = static_cast<double>(batch.size());
    double* gw1 = grad.data();
    double* gb1 = gw1 + hid * in;
    double* gw2 = gb1 + hid;
    double& gb2 = grad.back();
    const double* w1 = p.data();
    const double* b1 = w1 + hid * in;
    const double* w2 = b1 + hid;

    std::vector<double> hidden(hid);
    double sq = 0;
    for (const auto* ex : batch) {
        const double* x = ex->features.values.data();
        double out = p.back();
        for (std::size_t h = 0; h < hid; ++h) {
            const double* row = w1 + h * in;
            double z = b1[h];
            for (std::size_t i = 0; i < in; ++i) z += row[i] * x[i];
            hidden[h] = z > 0 ? z : 0.0;
            out += w2[h] * hidden[h];
        }
        const double err = out - ex->label;
        sq += err * err;
        const double d = err / n;
        gb2 += d;
        for (std::size_t h = 0; h < hid; ++h) {
            if (hidden[h] <= 0) continue;
            gw2[h] += d * hidden[h];
            const double dh = d * w2[h];
            gb1[h] += dh;
            double* grow = gw1 + h * in;
            for (std::size_t i = 0; i < in; ++i) grow[i] += dh * x[i];
        }
    }
    double penalty = 0;
    const double scale = m.alpha() / n;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!m.is_weight(i)) continue;
        penalty += p[i] * p[i];
        grad[i] += scale * p[i];
    }
    return sq / (2 * n) + m.alpha() * penalty / (2 * n);
}

namespace detail {
inline double unit_uniform(std::mt19937_64& rng) noexcept {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}
} // namespace detail

/// Mini-batch Adam on the penalized squared error. Bit-reproducible for a seed.
inline RegressionModel train(std::span<const TrainingExample> examples, const TrainOptions& opt = {}) {
    if (examples.size() < kMinTrainingExamples) {
        throw ModelError("training needs at least " + std::to_string(kMinTrainingExamples) + " examples");
    }
    if (opt.batch_size == 0 || opt.hidden == 0 || !(opt.learning_rate > 0)) {
        throw ModelError("invalid training options");
    }
    const auto& layout = examples.front().features.layout;
    const std::size_t input = examples.front().features.values.size();
    for (const auto& ex : examples) {
        if (ex.features.layout != layout || ex.features.values.size() != input) {
            throw LayoutError("training examples mix distance-vector layouts");
        }
        if (!(ex.label >= 0.0 && ex.label <= 1.0)) throw ModelError("training label outside [0,1]");
    }

    RegressionModel m(input, opt.hidden, opt.alpha, layout);
    std::mt19937_64 rng(opt.seed);
    {
        auto p = m.params();
        const double bound1 = std::sqrt(6.0 / static_cast<double>(input + opt.hidden));
        const double bound2 = std::sqrt(6.0 / static_cast<double>(opt.hidden + 1));
        const std::size_t n1 = opt.hidden * input + opt.hidden;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double bound = i < n1 ? bound1 : bound2;
            p[i] = (2.0 * detail::unit_uniform(rng) - 1.0) * bound;
        }
    }

    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8, kMomentFloor = 1e-250;
    const std::size_t np = m.params().size();
    std::vector<double> grad(np), mom(np, 0.0), vel(np, 0.0);
    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<const TrainingExample*> batch;
    double b1t = 1.0, b2t = 1.0;

    m.info = TrainingInfo{opt.seed, opt.epochs, opt.learning_rate, opt.batch_size, {}, 0};
    for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[rng() % i]);
        }
        double epoch_loss = 0;
        for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
            const std::size_t end = std::min(order.size(), start + opt.batch_size);
            batch.clear();
            for (std::size_t k = start; k < end; ++k) batch.push_back(&examples[order[k]]);
            const double loss = loss_and_gradient(m, batch, grad);
            if (!std::isfinite(loss)) {
                throw DivergenceError("training diverged at epoch " + std::to_string(epoch));
            }
            epoch_loss += loss * static_cast<double>(batch.size());
            b1t *= beta1;
            b2t *= beta2;
            const double step = opt.learning_rate * std::sqrt(1 - b2t) / (1 - b1t);
            auto p = m.params();
            for (std::size_t i = 0; i < np; ++i) {
                mom[i] = beta1 * mom[i] + (1 - beta1) * grad[i];
                vel[i] = beta2 * vel[i] + (1 - beta2) * grad[i] * grad[i];
                // moments of dead units decay geometrically; keep them out of
                // the subnormal range, where arithmetic is very slow
                if (std::abs(mom[i]) < kMomentFloor) mom[i] = 0.0;
                if (vel[i] < kMomentFloor) vel[i] = 0.0;
                p[i] -= step * mom[i] / (std::sqrt(vel[i]) + eps);
            }
        }
        m.info.loss_curve.push_back(epoch_loss / static_cast<double>(order.size()));
    }
    double sq = 0;
    for (const auto& ex : examples) {
        const double e = m.forward(ex.features.values) - ex.label;
        sq += e * e;
    }
    m.info.train_mse = sq / static_cast<double>(examples.size());
    if (!std::isfinite(m.info.train_mse)) throw DivergenceError("training produced non-finite weights");
    return m;
}

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Seeded shuffle of [0, n) cut into train and test index sets.
inline Split train_test_split(std::size_t n, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ModelError("test fraction must lie in (0,1)");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng() % i]);
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
    Split s;
    s.test.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
    s.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
    return s;
}

struct RegressionReport {
    double mse = 0;
    double mae = 0;
    double r2 = 0;
    double spearman = 0;
};

namespace detail {
/// 1-based ranks with ties sharing their average rank.
inline std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0 || sbb == 0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}
} // namespace detail

/// MSE, MAE, R^2 and Spearman correlation of predictions against labels.
/// R^2 of constant labels is 1 for a perfect fit and 0 otherwise.
inline RegressionReport regression_metrics(std::span<const double> predicted, std::span<const double> labels) {
    if (predicted.size() != labels.size()) throw MetricError("prediction/label size mismatch");
    if (labels.size() < 2) throw MetricError("R^2 is undefined for fewer than two examples");
    const double n = static_cast<double>(labels.size());
    const double mean = std::accumulate(labels.begin(), labels.end(), 0.0) / n;
    double ss_res = 0, ss_tot = 0, abs_sum = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double e = predicted[i] - labels[i];
        ss_res += e * e;
        abs_sum += std::abs(e);
        ss_tot += (labels[i] - mean) * (labels[i] - mean);
    }
    RegressionReport r;
    r.mse = ss_res / n;
    r.mae = abs_sum / n;
    r.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : (ss_res == 0 ? 1.0 : 0.0);
    const auto rp = detail::average_ranks(predicted), rl = detail::average_ranks(labels);
    r.spearman = detail::pearson(rp, rl);
    return r;
}

inline RegressionReport evaluate_regression(const RegressionModel& m, std::span<const TrainingExample> test) {
    if (test.empty()) throw MetricError("empty test set");
    std::vector<double> pred, lab;
    for (const auto& ex : test) {
        pred.push_back(m.predict(ex.features).value);
        lab.push_back(ex.label);
    }
    return regression_metrics(pred, lab);
}

// ---------------------------------------------------------------------------
// Persistence

inline constexpr std::string_view kModelFormat = "joinscout-mlp";
inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json to_json(const RegressionModel& m) {
    auto vec = [](std::span<const double> s) { return std::vector<double>(s.begin(), s.end()); };
    return {
        {"format", kModelFormat},
        {"format_version", kModelFormatVersion},
        {"layout_version", m.layout()},
        {"architecture",
         {{"input", m.input_size()}, {"hidden", m.hidden_size()}, {"activation", "relu"}, {"output", 1}}},
        {"alpha", m.alpha()},
        {"weights", {{"w1", vec(m.w1())}, {"b1", vec(m.b1())}, {"w2", vec(m.w2())}, {"b2", m.b2()}}},
        {"training",
         {{"seed", m.info.seed},
          {"epochs", m.info.epochs},
          {"learning_rate", m.info.learning_rate},
          {"batch_size", m.info.batch_size},
          {"loss_curve", m.info.loss_curve},
          {"train_mse", m.info.train_mse}}},
    };
}

inline RegressionModel model_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != kModelFormat) throw ModelError("not a joinscout model");
        if (j.at("format_version").get<int>() != kModelFormatVersion) {
            throw ModelError("unsupported model format version");
        }
        const auto& arch = j.at("architecture");
        if (arch.at("activation").get<std::string>() != "relu" || arch.at("output").get<int>() != 1) {
            throw ModelError("unsupported architecture");
        }
        const auto input = arch.at("input").get<std::size_t>();
        const auto hidden = arch.at("hidden").get<std::size_t>();
        RegressionModel m(input, hidden, j.at("alpha").get<double>(),
                          j.at("layout_version").get<std::string>());
        const auto& w = j.at("weights");
        const auto w1 = w.at("w1").get<std::vector<double>>();
        const auto b1 = w.at("b1").get<std::vector<double>>();
        const auto w2 = w.at("w2").get<std::vector<double>>();
        if (w1.size() != hidden * input || b1.size() != hidden || w2.size() != hidden) {
            throw ModelError("weight shapes do not match the architecture");
        }
        auto p = m.params();
        auto it = std::copy(w1.begin(), w1.end(), p.begin());
        it = std::copy(b1.begin(), b1.end(), it);
        it = std::copy(w2.begin(), w2.end(), it);
        *it = w.at("b2").get<double>();
        for (double v : p)
            if (!std::isfinite(v)) throw ModelError("non-finite weight");
        if (j.contains("training")) {
            const auto& t = j["training"];
            m.info.seed = t.value("seed", std::uint64_t{0});
            m.info.epochs = t.value("epochs", std::size_t{0});
            m.info.learning_rate = t.value("learning_rate", 0.0);
            m.info.batch_size = t.value("batch_size", std::size_t{0});
            m.info.loss_curve = t.value("loss_curve", std::vector<double>{});
            m.info.train_mse = t.value("train_mse", 0.0);
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ModelError(std::string("malformed model file: ") + e.what());
    }
}

inline void save_model(const RegressionModel& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << to_json(m).dump(1) << '\n';
    if (!out) throw IoError("error writing " + path.string());
}

inline RegressionModel load_model(const std::filesystem::path& path) {
    const auto text = read_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ModelError("malformed model file " + path.string() + ": " + e.what());
    }
    return model_from_json(j);
}

// Training corpus: one JSON object per line {"a", "b", "layout", "features", "label"}.

struct CorpusRecord {
    std::string a;
    std::string b;
    TrainingExample example;
};

/// Train/test split over unordered attribute pairs, so both directions of a
/// pair land on the same side.
inline Split pair_split(std::span<const CorpusRecord> corpus, double test_fraction, std::uint64_t seed) {
    using Key = std::pair<std::string, std::string>;
    std::vector<Key> keys;
    keys.reserve(corpus.size());
    for (const auto& r : corpus) keys.emplace_back(std::min(r.a, r.b), std::max(r.a, r.b));
    auto uniq = keys;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    const auto groups = train_test_split(uniq.size(), test_fraction, seed);
    std::vector<bool> is_test(uniq.size(), false);
    for (auto i : groups.test) is_test[i] = true;
    Split out;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto g = static_cast<std::size_t>(std::lower_bound(uniq.begin(), uniq.end(), keys[i]) - uniq.begin());
        (is_test[g] ? out.test : out.train).push_back(i);
    }
    return out;
}

inline void write_corpus(std::ostream& out, std::span<const CorpusRecord> records) {
    for (const auto& r : records) {
        nlohmann::json j{{"a", r.a},
                         {"b", r.b},
                         {"layout", r.example.features.layout},
                         {"features", r.example.features.values},
                         {"label", r.example.label}};
        out << j.dump() << '\n';
    }
}

inline std::vector<CorpusRecord> read_corpus(std::istream& in) {
    std::vector<CorpusRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            CorpusRecord r;
            r.a = j.value("a", "");
            r.b = j.value("b", "");
            r.example.features.layout = j.at("layout").get<std::string>();
            r.example.features.values = j.at("features").get<std::vector<double>>();
            r.example.label = j.at("label").get<double>();
            out.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("corpus line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

} // namespace joinscout
