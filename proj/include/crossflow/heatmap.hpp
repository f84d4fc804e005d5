#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "crossflow/errors.hpp"
#include "crossflow/geometry.hpp"
#include "crossflow/scenario.hpp"
#include "crossflow/simulation.hpp"

namespace crossflow {

/// Rectangular world-coordinate region observed by a virtual camera, plus the
/// pixel size of the density grid rendered over it.
struct CameraCutout {
    Rect rect;
    double resolution = 0.5;  // m per pixel
};

/// Parameters of the per-pedestrian Gaussian density kernel.
struct KernelParams {
    double torso_diameter = kDefaultTorsoDiameter;  // d_p, m
    double scale = 0.7;                             // S, m
};

inline void validate(const KernelParams& k) {
    if (k.torso_diameter <= 0.0) throw ConfigError("kernel torso_diameter must be > 0");
    if (k.scale <= 0.0) throw ConfigError("kernel scale must be > 0");
}

namespace detail {

inline std::size_t pixel_count(double extent, double resolution, const char* axis) {
    const double n = extent / resolution;
    const auto rounded = static_cast<std::size_t>(std::llround(n));
    // A fractional trailing pixel would silently shift every feature column,
    // so only exact tilings are accepted.
    if (rounded == 0 || std::abs(n - static_cast<double>(rounded)) > 1e-9 * std::max(n, 1.0))
        throw ConfigError(std::string("cutout ") + axis +
                          " extent is not an integer multiple of the resolution");
    return rounded;
}

}  // namespace detail

inline void validate(const CameraCutout& c) {
    if (!c.rect.valid()) throw ConfigError("cutout rectangle is empty or inverted");
    if (c.resolution <= 0.0) throw ConfigError("cutout resolution must be > 0");
    detail::pixel_count(c.rect.width(), c.resolution, "width");
    detail::pixel_count(c.rect.height(), c.resolution, "height");
}

/// Checks the placement constraints that need scenario knowledge: the cutout
/// must lie inside the walkable bounds and clear of every obstacle.
inline void validate(const CameraCutout& c, const Scenario& sc) {
    validate(c);
    if (!sc.walkable_bounds.contains_rect(c.rect))
        throw ConfigError("cutout extends outside the walkable bounds");
    for (const Rect& obs : sc.obstacles)
        if (c.rect.intersects(obs)) throw ConfigError("cutout overlaps an obstacle");
}

/// Row-major density grid over a cutout. Row 0 is the TOP row (largest y),
/// matching image conventions; values are evaluated at pixel centers.
struct Heatmap {
    std::size_t rows = 0, cols = 0;
    std::vector<double> values;  // rows * cols, row-major from the top

    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

inline Vec2 pixel_center(const CameraCutout& cutout, std::size_t row, std::size_t col) {
    return {cutout.rect.xmin + (static_cast<double>(col) + 0.5) * cutout.resolution,
            cutout.rect.ymax - (static_cast<double>(row) + 0.5) * cutout.resolution};
}

/// Gaussian density at point z:
///   D(z) = d_p^2 sqrt(3) / (4 pi S^2) * sum_i exp(-|x_i - z|^2 / (2 S^2))
/// An empty position list gives exactly 0.
inline double gaussian_density(const std::vector<Vec2>& positions, const Vec2& z,
                               const KernelParams& k = KernelParams{}) {
    const double s2 = k.scale * k.scale;
    const double prefactor =
        k.torso_diameter * k.torso_diameter * std::numbers::sqrt3 / (4.0 * std::numbers::pi * s2);
    double acc = 0.0;
    for (const Vec2& x : positions) acc += std::exp(-distance2(x, z) / (2.0 * s2));
    return prefactor * acc;
}

/// Membership rule shared by rasterize and frame_response: pedestrians on the
/// left/bottom edges belong to the cutout, those on the right/top do not, so
/// adjacent cutouts never double-count.
inline bool in_cutout(const CameraCutout& c, const Vec2& p) {
    return c.rect.contains_half_open(p);
}

/// Render the density of the in-cutout subset of `positions`. Pedestrians
/// outside the cutout contribute nothing even when their Gaussian tail
/// crosses the boundary.
inline Heatmap rasterize(const std::vector<Vec2>& positions, const CameraCutout& cutout,
                         const KernelParams& k = KernelParams{}) {
    validate(cutout);
    validate(k);

    Heatmap map;
    map.cols = detail::pixel_count(cutout.rect.width(), cutout.resolution, "width");
    map.rows = detail::pixel_count(cutout.rect.height(), cutout.resolution, "height");

    std::vector<Vec2> inside;
    inside.reserve(positions.size());
    for (const Vec2& p : positions)
        if (in_cutout(cutout, p)) inside.push_back(p);

    map.values.resize(map.rows * map.cols);
    for (std::size_t r = 0; r < map.rows; ++r)
        for (std::size_t c = 0; c < map.cols; ++c)
            map.values[r * map.cols + c] = gaussian_density(inside, pixel_center(cutout, r, c), k);
    return map;
}

/// Actual destination shares of the pedestrians inside the cutout, as
/// percentages summing to 100. Empty cutout -> nullopt (no sample).
inline std::optional<std::array<double, 3>> frame_response(const Frame& frame,
                                                           const CameraCutout& cutout) {
    std::array<int, kNumDestinations> counts{};
    int total = 0;
    for (const AgentState& a : frame.agents) {
        if (!in_cutout(cutout, a.position)) continue;
        ++counts[static_cast<std::size_t>(a.destination_id)];
        ++total;
    }
    if (total == 0) return std::nullopt;
    std::array<double, 3> resp{};
    for (std::size_t d = 0; d < kNumDestinations; ++d)
        resp[d] = 100.0 * counts[d] / static_cast<double>(total);
    return resp;
}

/// One labeled training example: a row-wise flattened heatmap plus the true
/// destination distribution of the pedestrians that produced it.
struct HeatmapSample {
    std::vector<double> features;   // rows*cols, row-major from the top
    std::array<double, 3> response; // percentages, sum 100
    int run_id = 0;
    double t = 0.0;                 // nominal sample time
    int n_in_cutout = 0;
};

struct Dataset {
    std::vector<HeatmapSample> samples;  // ordered by (run_id, t)
    CameraCutout cutout;
    double frame_interval = 8.0;  // s
    double warmup = 12.0;         // s
    int skipped_frames = 0;       // empty-cutout frames dropped in permissive mode

    std::size_t feature_dim() const { return samples.empty() ? 0 : samples[0].features.size(); }
};

/// Empty-cutout handling: the replication protocol needs an exact sample
/// count, so an empty frame is an error there; sweeps over small or remote
/// cutouts legitimately hit empty frames and skip them instead.
enum class EmptyCutoutPolicy { Error, Skip };

namespace detail {

/// Frames are logged on the simulation tick grid, which need not contain the
/// nominal sample times; the sample uses the last frame at or before t.
inline const Frame& frame_at(const TrajectoryLog& log, double t) {
    const Frame* best = nullptr;
    for (const Frame& f : log.frames) {
        if (f.t <= t + 1e-9)
            best = &f;
        else
            break;
    }
    if (best == nullptr) throw ProtocolViolationError("no frame at or before requested time");
    return *best;
}

}  // namespace detail

/// Sample every log at t = warmup + k*frame_interval for k = 1..floor((T - warmup)/interval)
/// (T = last frame time) and build one HeatmapSample per non-empty frame.
inline Dataset extract_dataset(const std::vector<TrajectoryLog>& logs, const CameraCutout& cutout,
                               double frame_interval, double warmup,
                               const KernelParams& k = KernelParams{},
                               EmptyCutoutPolicy policy = EmptyCutoutPolicy::Error) {
    if (logs.empty()) throw ConfigError("extract_dataset: no trajectory logs given");
    if (frame_interval <= 0.0) throw ConfigError("frame_interval must be > 0");
    if (warmup < 0.0) throw ConfigError("warmup must be >= 0");
    validate(cutout);
    validate(k);

    Dataset ds;
    ds.cutout = cutout;
    ds.frame_interval = frame_interval;
    ds.warmup = warmup;

    for (const TrajectoryLog& log : logs) {
        if (log.frames.empty()) throw ConfigError("extract_dataset: log has no frames");
        const double duration = log.frames.back().t;
        const auto k_max =
            static_cast<long long>(std::floor((duration - warmup) / frame_interval + 1e-9));
        for (long long step = 1; step <= k_max; ++step) {
            const double t = warmup + static_cast<double>(step) * frame_interval;
            const Frame& frame = detail::frame_at(log, t);
            const auto response = frame_response(frame, cutout);
            if (!response) {
                if (policy == EmptyCutoutPolicy::Error)
                    throw ProtocolViolationError(
                        "empty cutout at run " + std::to_string(log.run_id) + ", t = " +
                        std::to_string(t) + "; rerun with permissive extraction to skip");
                ++ds.skipped_frames;
                continue;
            }
            std::vector<Vec2> positions;
            int n_in = 0;
            positions.reserve(frame.agents.size());
            for (const AgentState& a : frame.agents)
                if (in_cutout(cutout, a.position)) {
                    positions.push_back(a.position);
                    ++n_in;
                }
            Heatmap map = rasterize(positions, cutout, k);

            HeatmapSample sample;
            sample.features = std::move(map.values);
            sample.response = *response;
            sample.run_id = log.run_id;
            sample.t = t;
            sample.n_in_cutout = n_in;
            ds.samples.push_back(std::move(sample));
        }
    }
    return ds;
}

}  // namespace crossflow
