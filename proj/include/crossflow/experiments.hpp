#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "crossflow/errors.hpp"
#include "crossflow/forest.hpp"
#include "crossflow/format.hpp"
#include "crossflow/heatmap.hpp"
#include "crossflow/metrics.hpp"
#include "crossflow/scenario.hpp"
#include "crossflow/simulation.hpp"

namespace crossflow {

struct SweepRow {
    std::string sweep;     // "trees" | "position" | "size"
    double value = 0.0;    // tree count, distance to crossing (m), or cutout area (m^2)
    double mean_err = 0.0; // pooled over repetitions
    double std_err = 0.0;  // pooled per-sample std
    double train_time_s = 0.0;
    std::size_t n_samples = 0;  // dataset size behind this row (train + test)
    std::uint64_t seed = 0;     // forest seed base; split seed is in the provenance
    double baseline_err = 0.0;  // uniform-prediction baseline on the same test sets
};

/// Report rows plus an ordered key/value provenance trail. The provenance
/// carries everything needed to reproduce any row (seeds, params, cutouts,
/// intervals); it is written as a sidecar next to the CSV.
struct SweepReport {
    std::vector<SweepRow> rows;
    std::vector<std::pair<std::string, std::string>> provenance;

    void note(std::string key, std::string value) {
        provenance.emplace_back(std::move(key), std::move(value));
    }
};

namespace detail {

inline void note_common(SweepReport& report, const std::string& sweep, const ForestParams& params,
                        const SplitSpec& spec, int repetitions, unsigned jobs) {
    report.note("sweep", sweep);
    report.note("repetitions", format_int(repetitions));
    report.note("jobs", format_int(jobs));
    report.note("split.train_fraction", format_double(spec.train_fraction));
    report.note("split.seed", format_uint(spec.rng_seed));
    report.note("forest.seed", format_uint(params.rng_seed));
    report.note("forest.n_trees", format_int(params.n_trees));
    report.note("forest.mtry", format_int(params.mtry));
    report.note("forest.min_samples_split", format_int(params.min_samples_split));
    report.note("forest.max_depth", format_int(params.max_depth));
    report.note("forest.bootstrap", params.bootstrap ? "1" : "0");
}

inline void note_row(SweepReport& report, std::size_t index, const SweepRow& row,
                     const RepeatedEvaluation& eval) {
    const std::string prefix = "row." + format_int(static_cast<long long>(index));
    report.note(prefix + ".value", format_double(row.value));
    report.note(prefix + ".n_samples", format_int(static_cast<long long>(row.n_samples)));
    report.note(prefix + ".mean_err", format_double(row.mean_err));
    report.note(prefix + ".std_err", format_double(row.std_err));
    report.note(prefix + ".baseline_err", format_double(row.baseline_err));
    report.note(prefix + ".mean_of_rep_means", format_double(eval.mean_of_means));
    report.note(prefix + ".std_of_rep_means", format_double(eval.std_of_means));
}

inline SweepRow evaluated_row(const std::string& sweep, double value, const Dataset& ds,
                              const ForestParams& params, const SplitSpec& spec, int repetitions,
                              unsigned jobs, RepeatedEvaluation& eval_out) {
    eval_out = repeated_evaluation(ds, params, spec, repetitions, jobs);
    SweepRow row;
    row.sweep = sweep;
    row.value = value;
    row.mean_err = eval_out.pooled.mean_relative_error;
    row.std_err = eval_out.pooled.std_relative_error;
    row.train_time_s = eval_out.train_time_s;
    row.n_samples = ds.samples.size();
    row.seed = params.rng_seed;
    row.baseline_err = eval_out.baseline;
    return row;
}

}  // namespace detail

/// Error and training time as a function of forest size on a fixed dataset.
inline SweepReport sweep_trees(const Dataset& ds, std::vector<int> tree_counts,
                               const ForestParams& params, const SplitSpec& spec, int repetitions,
                               unsigned jobs = 1) {
    if (tree_counts.empty()) throw ConfigError("sweep trees: no tree counts given");
    for (int c : tree_counts)
        if (c < 1) throw ConfigError("sweep trees: tree counts must be >= 1");
    std::sort(tree_counts.begin(), tree_counts.end());

    SweepReport report;
    detail::note_common(report, "trees", params, spec, repetitions, jobs);
    report.note("dataset.n_samples", format_int(static_cast<long long>(ds.samples.size())));
    report.note("dataset.feature_dim", format_int(static_cast<long long>(ds.feature_dim())));

    for (std::size_t i = 0; i < tree_counts.size(); ++i) {
        ForestParams point_params = params;
        point_params.n_trees = tree_counts[i];
        RepeatedEvaluation eval;
        SweepRow row = detail::evaluated_row("trees", static_cast<double>(tree_counts[i]), ds,
                                             point_params, spec, repetitions, jobs, eval);
        row.train_time_s = eval.train_time_s;
        detail::note_row(report, i, row, eval);
        report.rows.push_back(std::move(row));
    }
    return report;
}

/// Cutout geometry for one sweep point: `width x height`, horizontally
/// centered on the corridor, with its top edge `distance` meters below the
/// lower edge of the crossing.
inline CameraCutout corridor_cutout(const CrossroadLayout& layout, double width, double height,
                                    double distance, double resolution) {
    const double cx = 0.5 * (layout.corridor_xmin + layout.corridor_xmax);
    const double top = layout.crossing_lower_y - distance;
    CameraCutout cutout;
    cutout.rect = Rect{cx - width / 2.0, top - height, cx + width / 2.0, top};
    cutout.resolution = resolution;
    return cutout;
}

/// Accuracy as a function of where the camera sits along the corridor,
/// rebuilding the dataset from the same trajectory logs for every position.
inline SweepReport sweep_position(const CrossroadLayout& layout,
                                  const std::vector<TrajectoryLog>& logs,
                                  std::vector<double> distances, double cutout_width,
                                  double cutout_height, double resolution,
                                  const KernelParams& kernel, double frame_interval, double warmup,
                                  const ForestParams& params, const SplitSpec& spec,
                                  int repetitions, unsigned jobs = 1) {
    if (distances.empty()) throw ConfigError("sweep position: no distances given");
    std::sort(distances.begin(), distances.end());

    SweepReport report;
    detail::note_common(report, "position", params, spec, repetitions, jobs);
    report.note("cutout.width", format_double(cutout_width));
    report.note("cutout.height", format_double(cutout_height));
    report.note("cutout.resolution", format_double(resolution));
    report.note("frame_interval", format_double(frame_interval));
    report.note("warmup", format_double(warmup));
    report.note("runs", format_int(static_cast<long long>(logs.size())));

    for (std::size_t i = 0; i < distances.size(); ++i) {
        const CameraCutout cutout =
            corridor_cutout(layout, cutout_width, cutout_height, distances[i], resolution);
        validate(cutout, layout.scenario);
        // Remote or small cutouts can hit legitimately empty frames, so sweep
        // extraction skips them instead of failing the protocol.
        const Dataset ds = extract_dataset(logs, cutout, frame_interval, warmup, kernel,
                                           EmptyCutoutPolicy::Skip);
        RepeatedEvaluation eval;
        SweepRow row = detail::evaluated_row("position", distances[i], ds, params, spec,
                                             repetitions, jobs, eval);
        detail::note_row(report, i, row, eval);
        report.note("row." + format_int(static_cast<long long>(i)) + ".skipped_frames",
                    format_int(ds.skipped_frames));
        report.rows.push_back(std::move(row));
    }
    return report;
}

/// Accuracy as a function of cutout size. Cutouts span the full corridor
/// width, grow downward from the crossing, and each size gets its own frame
/// interval of ceil(height / speed_mean) seconds so a pedestrian still shows
/// up in roughly one sample.
inline SweepReport sweep_size(const CrossroadLayout& layout,
                              const std::vector<TrajectoryLog>& logs, std::vector<double> heights,
                              double cutout_width, double resolution, const KernelParams& kernel,
                              double warmup, double speed_mean, const ForestParams& params,
                              const SplitSpec& spec, int repetitions, unsigned jobs = 1) {
    if (heights.empty()) throw ConfigError("sweep size: no heights given");
    if (speed_mean <= 0.0) throw ConfigError("sweep size: speed_mean must be > 0");
    std::sort(heights.begin(), heights.end());

    SweepReport report;
    detail::note_common(report, "size", params, spec, repetitions, jobs);
    report.note("cutout.width", format_double(cutout_width));
    report.note("cutout.resolution", format_double(resolution));
    report.note("warmup", format_double(warmup));
    report.note("speed_mean", format_double(speed_mean));
    report.note("runs", format_int(static_cast<long long>(logs.size())));

    for (std::size_t i = 0; i < heights.size(); ++i) {
        const double h = heights[i];
        const CameraCutout cutout = corridor_cutout(layout, cutout_width, h, 0.0, resolution);
        validate(cutout, layout.scenario);
        const double interval = std::ceil(h / speed_mean);
        const Dataset ds =
            extract_dataset(logs, cutout, interval, warmup, kernel, EmptyCutoutPolicy::Skip);
        RepeatedEvaluation eval;
        SweepRow row = detail::evaluated_row("size", cutout_width * h, ds, params, spec,
                                             repetitions, jobs, eval);
        detail::note_row(report, i, row, eval);
        const std::string prefix = "row." + format_int(static_cast<long long>(i));
        report.note(prefix + ".height", format_double(h));
        report.note(prefix + ".frame_interval", format_double(interval));
        report.note(prefix + ".skipped_frames", format_int(ds.skipped_frames));
        report.rows.push_back(std::move(row));
    }
    return report;
}

}  // namespace crossflow
