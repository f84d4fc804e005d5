#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include "crossflow/floor_field.hpp"
#include "crossflow/geometry.hpp"
#include "crossflow/rng.hpp"
#include "crossflow/scenario.hpp"

namespace crossflow {

inline constexpr double kDefaultTorsoDiameter = 0.195;  // m

struct Pedestrian {
    int id = -1;
    Vec2 position;
    int destination_id = -1;
    double free_flow_speed = 1.34;  // m/s
    double step_length = 0.0;       // m, free_flow_speed * time_step
    double torso_diameter = kDefaultTorsoDiameter;
};

struct SimConfig {
    double duration = 500.0;           // s
    double time_step = 0.4;            // s
    double spawn_rate = 1.5;           // pedestrians per second
    int redistribution_period = 100;   // pedestrians between distribution redraws
    double speed_mean = 1.34;          // m/s
    double speed_sd = 0.26;            // m/s
    double speed_min = 0.5;            // m/s, truncation bounds
    double speed_max = 2.2;            // m/s
    std::uint64_t rng_seed = 1;
};

inline void validate(const SimConfig& cfg) {
    if (cfg.duration <= 0.0) throw ConfigError("duration must be > 0");
    if (cfg.time_step <= 0.0) throw ConfigError("time_step must be > 0");
    if (cfg.spawn_rate < 0.0) throw ConfigError("spawn_rate must be >= 0");
    if (cfg.redistribution_period < 1) throw ConfigError("redistribution_period must be >= 1");
    if (cfg.speed_mean <= 0.0) throw ConfigError("speed_mean must be > 0");
    if (cfg.speed_sd < 0.0) throw ConfigError("speed_sd must be >= 0");
    if (cfg.speed_min <= 0.0 || cfg.speed_max < cfg.speed_min)
        throw ConfigError("speed truncation bounds invalid");
}

/// One pedestrian in one logged frame.
struct AgentState {
    int id;
    Vec2 position;
    int destination_id;
};

struct Frame {
    double t = 0.0;
    std::vector<AgentState> agents;  // sorted by id
};

struct TrajectoryLog {
    int run_id = 0;
    std::vector<Frame> frames;  // strictly increasing t
    double duration() const { return frames.empty() ? 0.0 : frames.back().t; }
};

/// Bookkeeping for one spawned pedestrian (test and audit surface).
struct SpawnRecord {
    int id;
    double t;
    std::array<double, 3> distribution;  // percentages in effect at spawn
    int destination_id;
    double free_flow_speed;
};

struct RunResult {
    TrajectoryLog log;
    std::vector<SpawnRecord> spawns;
    int deferred_spawns = 0;  // spawn attempts pushed to a later tick
};

// -- Step choice ------------------------------------------------------------

/// Cost terms added on top of the static floor field. Values are
/// meter-equivalent costs; the defaults give a short-range exponential
/// repulsion from pedestrians (< 2 m) and walls (< 1 m) plus a hard-core
/// exclusion at torso contact.
struct RepulsionParams {
    double ped_strength = 5.0;   // mu_p
    double ped_range = 0.3;      // sigma_p
    double ped_cutoff = 2.0;     // m
    double obs_strength = 3.0;   // mu_o
    double obs_range = 0.2;      // sigma_o
    double obs_cutoff = 1.0;     // m
};

/// Negative utility of standing at `candidate`: interpolated floor-field
/// distance plus pedestrian and obstacle repulsion. +inf when the candidate
/// is not walkable or overlaps another pedestrian's torso disc.
template <class Agents>
double step_cost(const Vec2& candidate, const Pedestrian& ped, const FloorField& field,
                 const Agents& others, const Scenario& sc,
                 const RepulsionParams& rep = RepulsionParams{}) {
    if (!is_walkable(sc, candidate)) return kInfDistance;
    const double field_value = field.interpolate(candidate);
    if (std::isinf(field_value)) return kInfDistance;

    double cost = field_value;
    const double cutoff2 = rep.ped_cutoff * rep.ped_cutoff;
    for (const auto& other : others) {
        if (other.id == ped.id) continue;
        const double d2 = distance2(candidate, other.position);
        if (d2 >= cutoff2) continue;
        const double hard_core = std::max(ped.torso_diameter, other.torso_diameter);
        if (d2 < hard_core * hard_core) return kInfDistance;
        const double d = std::sqrt(d2);
        cost += rep.ped_strength * std::exp(-(d - hard_core) / rep.ped_range);
    }
    const double d_wall = wall_distance(sc, candidate);
    if (d_wall < rep.obs_cutoff) cost += rep.obs_strength * std::exp(-d_wall / rep.obs_range);
    return cost;
}

inline constexpr int kStepCandidates = 16;

/// Best next position: the current position (candidate 0) or one of
/// kStepCandidates points on the circle of radius step_length, evaluated in a
/// fixed order with ties going to the lowest candidate index. If every circle
/// point is infeasible the pedestrian stays in place.
template <class Agents>
Vec2 choose_next_position(const Pedestrian& ped, const FloorField& field, const Agents& others,
                          const Scenario& sc, const RepulsionParams& rep = RepulsionParams{}) {
    Vec2 best = ped.position;
    double best_cost = step_cost(ped.position, ped, field, others, sc, rep);
    for (int k = 0; k < kStepCandidates; ++k) {
        const double angle = 2.0 * std::numbers::pi * k / kStepCandidates;
        const Vec2 cand{ped.position.x + ped.step_length * std::cos(angle),
                        ped.position.y + ped.step_length * std::sin(angle)};
        const double c = step_cost(cand, ped, field, others, sc, rep);
        if (c < best_cost) {
            best_cost = c;
            best = cand;
        }
    }
    return best;
}

// -- Spawning ---------------------------------------------------------------

/// Uniform draw from the 2-simplex scaled to percentages: (pL, pS, pR) with
/// each component >= 0 and pL + pS + pR = 100.
inline std::array<double, 3> sample_destination_distribution(RngEngine& rng) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    double u = uni(rng), v = uni(rng);
    if (u > v) std::swap(u, v);
    return {100.0 * u, 100.0 * (v - u), 100.0 * (1.0 - v)};
}

namespace detail {

inline int sample_destination(const std::array<double, 3>& dist_pct, RngEngine& rng) {
    std::uniform_real_distribution<double> uni(0.0, 100.0);
    const double u = uni(rng);
    if (u < dist_pct[0]) return 0;
    if (u < dist_pct[0] + dist_pct[1]) return 1;
    return 2;
}

inline double sample_truncated_normal(double mean, double sd, double lo, double hi,
                                      RngEngine& rng) {
    if (sd <= 0.0) return std::min(std::max(mean, lo), hi);
    std::normal_distribution<double> normal(mean, sd);
    for (;;) {
        const double x = normal(rng);
        if (x >= lo && x <= hi) return x;
    }
}

}  // namespace detail

// -- Simulation loop ----------------------------------------------------------

/// Deterministic synchronous-step simulation. Each tick, pedestrians move
/// once in ascending id order (so the hard-core exclusion holds exactly in
/// every logged frame), then due spawns are placed in the origin region.
/// A pedestrian is removed the moment its position enters its destination
/// rectangle. Frames are logged at t = 0 and after every tick.
///
/// The destination distribution is redrawn before spawn number
/// 1, P+1, 2P+1, ... (P = redistribution_period), so a fixed distribution
/// applies to each block of P consecutive pedestrians.
inline RunResult run_simulation(const Scenario& sc, const SimConfig& cfg,
                                const FloorFieldSet& fields,
                                const RepulsionParams& rep = RepulsionParams{}) {
    validate(sc);
    validate(cfg);
    RngEngine rng = make_rng(cfg.rng_seed);
    std::uniform_real_distribution<double> uni01(0.0, 1.0);

    RunResult result;
    const int n_ticks = static_cast<int>(std::llround(cfg.duration / cfg.time_step));

    struct LiveAgent {
        Pedestrian ped;
        bool alive = true;
    };
    std::vector<LiveAgent> agents;
    int next_id = 0;
    long long spawned = 0;
    std::array<double, 3> current_dist{100.0 / 3, 100.0 / 3, 100.0 / 3};
    double spawn_accum = 0.0;
    int pending_spawns = 0;
    constexpr int kSpawnRetries = 32;

    auto log_frame = [&](double t) {
        Frame frame;
        frame.t = t;
        for (const LiveAgent& a : agents)
            if (a.alive) frame.agents.push_back({a.ped.id, a.ped.position, a.ped.destination_id});
        result.log.frames.push_back(std::move(frame));
    };

    auto try_spawn = [&](double t) -> bool {
        // Redistribution happens at the moment of generation, counted in
        // successfully spawned pedestrians.
        if (spawned % cfg.redistribution_period == 0)
            current_dist = sample_destination_distribution(rng);
        const int dest = detail::sample_destination(current_dist, rng);
        const double speed = detail::sample_truncated_normal(cfg.speed_mean, cfg.speed_sd,
                                                             cfg.speed_min, cfg.speed_max, rng);
        for (int attempt = 0; attempt < kSpawnRetries; ++attempt) {
            // Pedestrians enter pre-sorted toward the side of their eventual
            // turn (left-bound on the left 45 %, right-bound mirrored,
            // straight-bound over the middle 70 %), the way approach flow at
            // a known junction organizes itself. Bands overlap, so lanes mix.
            const double ux = uni01(rng);
            double fx = 0.15 + 0.7 * ux;
            if (dest == 0) fx = 0.45 * ux;
            if (dest == 2) fx = 1.0 - 0.45 * ux;
            Vec2 pos{sc.origin.xmin + fx * sc.origin.width(),
                     sc.origin.ymin + uni01(rng) * sc.origin.height()};
            if (!is_walkable(sc, pos)) continue;
            bool clear = true;
            for (const LiveAgent& a : agents) {
                if (!a.alive) continue;
                const double hc = std::max(kDefaultTorsoDiameter, a.ped.torso_diameter);
                if (distance2(pos, a.ped.position) < hc * hc) {
                    clear = false;
                    break;
                }
            }
            if (!clear) continue;
            Pedestrian ped;
            ped.id = next_id++;
            ped.position = pos;
            ped.destination_id = dest;
            ped.free_flow_speed = speed;
            ped.step_length = speed * cfg.time_step;
            agents.push_back({ped, true});
            result.spawns.push_back({ped.id, t, current_dist, dest, speed});
            ++spawned;
            return true;
        }
        return false;
    };

    log_frame(0.0);
    for (int tick = 1; tick <= n_ticks; ++tick) {
        const double t = tick * cfg.time_step;

        // Move existing agents in id order; each sees the partially updated
        // positions of the others, which preserves the hard-core invariant.
        for (LiveAgent& a : agents) {
            if (!a.alive) continue;
            const Rect& dest_rect = sc.destinations[a.ped.destination_id];
            if (dest_rect.contains(a.ped.position)) {
                a.alive = false;
                continue;
            }
            struct OthersView {
                const std::vector<LiveAgent>& all;
                const LiveAgent* self;
                struct Iter {
                    const std::vector<LiveAgent>* all;
                    const LiveAgent* self;
                    std::size_t i;
                    void skip() {
                        while (i < all->size() && (!(*all)[i].alive || &(*all)[i] == self)) ++i;
                    }
                    const Pedestrian& operator*() const { return (*all)[i].ped; }
                    Iter& operator++() {
                        ++i;
                        skip();
                        return *this;
                    }
                    bool operator!=(const Iter& o) const { return i != o.i; }
                };
                Iter begin() const {
                    Iter it{&all, self, 0};
                    it.skip();
                    return it;
                }
                Iter end() const { return Iter{&all, self, all.size()}; }
            } others{agents, &a};

            const Vec2 next =
                choose_next_position(a.ped, fields[a.ped.destination_id], others, sc, rep);
            if (dest_rect.contains(next)) {
                a.alive = false;  // absorbed on entry
            } else {
                a.ped.position = next;
            }
        }

        // Spawn due pedestrians; failures are retried next tick.
        spawn_accum += cfg.spawn_rate * cfg.time_step;
        while (spawn_accum >= 1.0 - 1e-12) {
            spawn_accum -= 1.0;
            ++pending_spawns;
        }
        int still_pending = 0;
        for (int s = 0; s < pending_spawns; ++s) {
            if (!try_spawn(t)) {
                ++still_pending;
                ++result.deferred_spawns;
            }
        }
        pending_spawns = still_pending;

        log_frame(t);

        // Compact occasionally so long runs do not scan dead agents.
        if (agents.size() > 256) {
            std::size_t n_dead = 0;
            for (const LiveAgent& a : agents)
                if (!a.alive) ++n_dead;
            if (n_dead > agents.size() / 2) {
                std::vector<LiveAgent> live;
                live.reserve(agents.size() - n_dead);
                for (LiveAgent& a : agents)
                    if (a.alive) live.push_back(a);
                agents.swap(live);
            }
        }
    }
    return result;
}

/// Convenience overload that builds the floor fields itself.
inline RunResult run_simulation(const Scenario& sc, const SimConfig& cfg,
                                const RepulsionParams& rep = RepulsionParams{}) {
    return run_simulation(sc, cfg, build_floor_fields(sc), rep);
}

}  // namespace crossflow
