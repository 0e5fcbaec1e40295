#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "joinscout/detail/parallel.hpp"
#include "joinscout/error.hpp"
#include "joinscout/join_metrics.hpp"

namespace joinscout {

/// Step function F(x) = (#samples <= x) / n.
class EmpiricalCdf {
public:
    explicit EmpiricalCdf(std::vector<double> samples) : sorted_(std::move(samples)) {
        if (sorted_.empty()) throw MetricError("empirical cdf needs at least one sample");
        std::sort(sorted_.begin(), sorted_.end());
    }

    double operator()(double x) const noexcept {
        const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
        return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
    }

    std::size_t size() const noexcept { return sorted_.size(); }

private:
    std::vector<double> sorted_;
};

/// CDF of a normal truncated to [lower, upper].
struct TruncatedNormal {
    double mu = 0;
    double var = 1;
    double lower = 0;
    double upper = 1;

    double operator()(double x) const { return truncated_normal_cdf(x, mu, var, lower, upper).value; }
};

inline constexpr std::size_t kWassersteinSteps = 1000;

/// Wasserstein-1 distance of two distributions on [0,1] given by their CDFs:
/// the trapezoidal integral of |F - G| on a uniform grid of `steps` intervals.
template <class F, class G>
double wasserstein_1d(const F& f, const G& g, std::size_t steps = kWassersteinSteps) {
    double sum = 0;
    for (std::size_t i = 0; i <= steps; ++i) {
        const double x = static_cast<double>(i) / static_cast<double>(steps);
        const double d = std::abs(f(x) - g(x));
        sum += (i == 0 || i == steps) ? 0.5 * d : d;
    }
    return sum / static_cast<double>(steps);
}

/// Search grid over means and standard deviations.
struct FitGrid {
    double mu_min = -0.5;
    double mu_max = 1.0;
    double mu_step = 0.01;
    double sigma_min = 0.05;
    double sigma_max = 1.0;
    double sigma_step = 0.01;
    std::size_t quadrature_steps = kWassersteinSteps;

    std::size_t mu_count() const { return count(mu_min, mu_max, mu_step); }
    std::size_t sigma_count() const { return count(sigma_min, sigma_max, sigma_step); }
    double mu_at(std::size_t i) const { return mu_min + static_cast<double>(i) * mu_step; }
    double sigma_at(std::size_t i) const { return sigma_min + static_cast<double>(i) * sigma_step; }

private:
    static std::size_t count(double lo, double hi, double step) {
        if (!(step > 0) || !(hi >= lo)) throw MetricError("invalid fit grid");
        return static_cast<std::size_t>(std::llround((hi - lo) / step)) + 1;
    }
};

struct UnivariateFit {
    double mu = 0;
    double sigma = 0;
    double distance = 0;
    /// The minimum sits on the smallest grid sigma (e.g. zero-variance samples).
    bool degenerate = false;

    double var() const noexcept { return sigma * sigma; }
};

struct DistributionFit {
    FittedParams params;
    UnivariateFit containment;
    UnivariateFit cardinality;
};

inline constexpr std::size_t kMinFitSamples = 10;

/// Exhaustive grid search for the truncated normal on [0,1] whose CDF is
/// closest in Wasserstein-1 distance to the samples' empirical CDF. Ties go
/// to the smaller mean, then the smaller sigma.
inline UnivariateFit fit_truncated_normal(std::span<const double> samples, const FitGrid& grid = {},
                                          unsigned threads = 1) {
    if (samples.size() < kMinFitSamples) {
        throw MetricError("distribution fit needs at least " + std::to_string(kMinFitSamples) +
                          " samples");
    }
    for (double s : samples)
        if (!(s >= 0.0 && s <= 1.0)) throw MetricError("fit samples must lie in [0,1]");

    const EmpiricalCdf edf(std::vector<double>(samples.begin(), samples.end()));
    const std::size_t steps = grid.quadrature_steps;
    std::vector<double> edf_grid(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i) {
        edf_grid[i] = edf(static_cast<double>(i) / static_cast<double>(steps));
    }
    auto tabulated_edf = [&](double x) {
        return edf_grid[static_cast<std::size_t>(std::llround(x * static_cast<double>(steps)))];
    };

    const std::size_t n_mu = grid.mu_count(), n_sigma = grid.sigma_count();
    struct Best {
        double distance = std::numeric_limits<double>::infinity();
        std::size_t index = std::numeric_limits<std::size_t>::max();
    };
    std::vector<Best> row_best(n_mu);
    detail::parallel_for(n_mu, threads, [&](std::size_t im) {
        Best best;
        for (std::size_t is = 0; is < n_sigma; ++is) {
            const double sigma = grid.sigma_at(is);
            const TruncatedNormal model{grid.mu_at(im), sigma * sigma, 0.0, 1.0};
            const double d = wasserstein_1d(model, tabulated_edf, steps);
            if (d < best.distance) best = {d, im * n_sigma + is};
        }
        row_best[im] = best;
    });
    // Rows are scanned in increasing mean, so strict '<' keeps the tie order.
    Best best;
    for (const auto& r : row_best)
        if (r.distance < best.distance) best = r;

    UnivariateFit fit;
    fit.mu = grid.mu_at(best.index / n_sigma);
    fit.sigma = grid.sigma_at(best.index % n_sigma);
    fit.distance = best.distance;
    fit.degenerate = best.index % n_sigma == 0;
    return fit;
}

/// Fits C and K independently and packs the result as model parameters.
inline DistributionFit fit_distribution(std::span<const double> c_samples,
                                        std::span<const double> k_samples, const FitGrid& grid = {},
                                        unsigned threads = 1) {
    DistributionFit out;
    out.containment = fit_truncated_normal(c_samples, grid, threads);
    out.cardinality = fit_truncated_normal(k_samples, grid, threads);
    out.params = FittedParams{out.containment.mu, out.cardinality.mu, out.containment.var(),
                              out.cardinality.var(), 0.0, 1.0};
    return out;
}

} // namespace joinscout
