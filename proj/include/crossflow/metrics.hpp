#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <vector>

#include "crossflow/errors.hpp"
#include "crossflow/forest.hpp"
#include "crossflow/heatmap.hpp"
#include "crossflow/rng.hpp"

namespace crossflow {

/// Largest possible Euclidean distance between two destination distributions
/// in percent: all mass moving from one component to another.
inline double e_max() { return 100.0 * std::numbers::sqrt2; }

inline constexpr std::array<double, 3> kUniformResponse = {100.0 / 3.0, 100.0 / 3.0, 100.0 / 3.0};

namespace detail {

inline void require_simplex(const std::array<double, 3>& v, const char* name) {
    const double sum = v[0] + v[1] + v[2];
    if (std::abs(sum - 100.0) > 1e-6)
        throw ConfigError(std::string("relative_error: ") + name +
                          " does not sum to 100 (got " + std::to_string(sum) + ")");
    for (double c : v)
        if (c < -1e-9)
            throw ConfigError(std::string("relative_error: ") + name +
                              " has a negative component");
}

inline double sample_mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than 2 values.
inline double sample_std(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double mean = sample_mean(v);
    double sse = 0.0;
    for (double x : v) {
        const double d = x - mean;
        sse += d * d;
    }
    return std::sqrt(sse / static_cast<double>(v.size() - 1));
}

}  // namespace detail

/// Relative prediction error in percent: the Euclidean distance between the
/// true and predicted distributions, scaled so the worst case is 100.
/// Equivalent to |y - y_hat| / sqrt(2).
inline double relative_error(const std::array<double, 3>& y, const std::array<double, 3>& y_hat) {
    detail::require_simplex(y, "true response");
    detail::require_simplex(y_hat, "prediction");
    const double d0 = y[0] - y_hat[0], d1 = y[1] - y_hat[1], d2 = y[2] - y_hat[2];
    return 100.0 * std::sqrt(d0 * d0 + d1 * d1 + d2 * d2) / e_max();
}

struct ErrorSummary {
    double mean_relative_error = 0.0;
    double std_relative_error = 0.0;
    std::size_t n_test = 0;
    std::vector<double> per_sample_errors;
};

inline ErrorSummary summarize_errors(std::vector<double> errors) {
    ErrorSummary s;
    s.n_test = errors.size();
    s.mean_relative_error = errors.empty() ? 0.0 : detail::sample_mean(errors);
    s.std_relative_error = detail::sample_std(errors);
    s.per_sample_errors = std::move(errors);
    return s;
}

struct SplitSpec {
    double train_fraction = 0.8;
    std::uint64_t rng_seed = 0;
};

/// Seeded uniform partition into train/test. Both subsets keep the original
/// dataset order (the shuffle only decides membership), and the train size is
/// round(train_fraction * n), clamped so neither side is empty.
inline std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, const SplitSpec& spec) {
    if (spec.train_fraction <= 0.0 || spec.train_fraction >= 1.0)
        throw ConfigError("train_fraction must be in (0, 1)");
    const std::size_t n = ds.samples.size();
    if (n < 2) throw ConfigError("split_dataset: need at least 2 samples");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    RngEngine rng = make_rng(spec.rng_seed);
    deterministic_shuffle(order, rng);

    auto n_train = static_cast<std::size_t>(
        std::llround(spec.train_fraction * static_cast<double>(n)));
    n_train = std::min(std::max<std::size_t>(n_train, 1), n - 1);

    std::vector<std::uint8_t> in_train(n, 0);
    for (std::size_t i = 0; i < n_train; ++i) in_train[order[i]] = 1;

    Dataset train, test;
    for (Dataset* part : {&train, &test}) {
        part->cutout = ds.cutout;
        part->frame_interval = ds.frame_interval;
        part->warmup = ds.warmup;
    }
    train.samples.reserve(n_train);
    test.samples.reserve(n - n_train);
    for (std::size_t i = 0; i < n; ++i)
        (in_train[i] ? train : test).samples.push_back(ds.samples[i]);
    return {std::move(train), std::move(test)};
}

/// Per-sample relative errors of the predictor over a test set.
inline ErrorSummary evaluate(const DestinationPredictor& predictor, const Dataset& test) {
    if (test.samples.empty()) throw ConfigError("evaluate: empty test set");
    std::vector<double> errors;
    errors.reserve(test.samples.size());
    for (const HeatmapSample& s : test.samples)
        errors.push_back(relative_error(s.response, predictor.predict_distribution(s.features)));
    return summarize_errors(std::move(errors));
}

/// Mean error of always predicting the uniform distribution; the sanity floor
/// any trained model must beat.
inline double baseline_uniform_error(const Dataset& test) {
    if (test.samples.empty()) throw ConfigError("baseline_uniform_error: empty test set");
    double sum = 0.0;
    for (const HeatmapSample& s : test.samples) sum += relative_error(s.response, kUniformResponse);
    return sum / static_cast<double>(test.samples.size());
}

struct RepeatedEvaluation {
    std::vector<ErrorSummary> reps;
    /// All per-sample test errors from every repetition pooled together.
    ErrorSummary pooled;
    /// Mean and sample std of the per-repetition mean errors.
    double mean_of_means = 0.0;
    double std_of_means = 0.0;
    /// Uniform-prediction baseline over the pooled test samples.
    double baseline = 0.0;
    /// Wall-clock seconds spent inside fit_predictor, summed over repetitions.
    double train_time_s = 0.0;
};

/// Runs the full split/train/test protocol `repetitions` times. Repetition k
/// derives its split seed from (spec.rng_seed, k) and its forest seed from
/// (params.rng_seed, k), so any repetition is reproducible in isolation.
inline RepeatedEvaluation repeated_evaluation(const Dataset& ds, const ForestParams& params,
                                              const SplitSpec& spec, int repetitions,
                                              unsigned jobs = 1) {
    if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
    RepeatedEvaluation out;
    std::vector<double> pooled_errors;
    std::vector<double> rep_means;
    double baseline_sum = 0.0;
    std::size_t baseline_count = 0;

    for (int k = 0; k < repetitions; ++k) {
        SplitSpec rep_spec{spec.train_fraction,
                           derive_seed(spec.rng_seed, static_cast<std::uint64_t>(k))};
        ForestParams rep_params = params;
        rep_params.rng_seed = derive_seed(params.rng_seed, static_cast<std::uint64_t>(k));

        auto [train, test] = split_dataset(ds, rep_spec);
        const auto t0 = std::chrono::steady_clock::now();
        const DestinationPredictor predictor = fit_predictor(train, rep_params, jobs);
        const auto t1 = std::chrono::steady_clock::now();
        out.train_time_s += std::chrono::duration<double>(t1 - t0).count();

        ErrorSummary summary = evaluate(predictor, test);
        rep_means.push_back(summary.mean_relative_error);
        pooled_errors.insert(pooled_errors.end(), summary.per_sample_errors.begin(),
                             summary.per_sample_errors.end());
        baseline_sum += baseline_uniform_error(test) * static_cast<double>(test.samples.size());
        baseline_count += test.samples.size();
        out.reps.push_back(std::move(summary));
    }
    out.pooled = summarize_errors(std::move(pooled_errors));
    out.mean_of_means = detail::sample_mean(rep_means);
    out.std_of_means = detail::sample_std(rep_means);
    out.baseline = baseline_sum / static_cast<double>(baseline_count);
    return out;
}

}  // namespace crossflow
