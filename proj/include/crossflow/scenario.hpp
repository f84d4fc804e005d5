#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "crossflow/errors.hpp"
#include "crossflow/geometry.hpp"

namespace crossflow {

/// Destination indices are fixed: 0 = left, 1 = straight, 2 = right.
inline constexpr int kNumDestinations = 3;
inline constexpr const char* kDestinationLabels[kNumDestinations] = {"L", "S", "R"};

inline int destination_from_label(std::string_view label) {
    for (int d = 0; d < kNumDestinations; ++d)
        if (label == kDestinationLabels[d]) return d;
    throw ConfigError("unknown destination label '" + std::string(label) +
                      "' (expected L, S or R)");
}

/// Crossroad geometry in meters. The walkable area is `walkable_bounds` minus
/// the obstacle rectangles; pedestrians enter through `origin` and leave
/// through one of the three `destinations` (ordered L, S, R).
struct Scenario {
    Rect walkable_bounds;
    std::vector<Rect> obstacles;
    Rect origin;
    std::array<Rect, kNumDestinations> destinations;
    double grid_resolution_ff = 0.1;
};

inline void validate(const Scenario& sc) {
    if (!sc.walkable_bounds.valid()) throw ConfigError("walkable_bounds is empty");
    if (sc.grid_resolution_ff <= 0.0) throw ConfigError("grid_resolution_ff must be > 0");
    auto check_region = [&](const Rect& r, const std::string& name) {
        if (!r.valid()) throw ConfigError(name + " is empty");
        if (!sc.walkable_bounds.contains_rect(r))
            throw ConfigError(name + " is not inside walkable_bounds");
        for (const Rect& obs : sc.obstacles)
            if (r.intersects(obs)) throw ConfigError(name + " intersects an obstacle");
    };
    check_region(sc.origin, "origin");
    for (int d = 0; d < kNumDestinations; ++d)
        check_region(sc.destinations[d], std::string("destination ") + kDestinationLabels[d]);
    for (const Rect& obs : sc.obstacles)
        if (!obs.valid()) throw ConfigError("obstacle rectangle is empty");
}

/// True if p lies inside walkable_bounds and outside every obstacle.
inline bool is_walkable(const Scenario& sc, const Vec2& p) {
    if (!sc.walkable_bounds.contains(p)) return false;
    for (const Rect& obs : sc.obstacles)
        if (obs.contains(p)) return false;
    return true;
}

/// Distance from p to the nearest wall: an obstacle rectangle or the
/// boundary of the walkable bounds. Assumes p is walkable.
inline double wall_distance(const Scenario& sc, const Vec2& p) {
    double d = distance_to_boundary(p, sc.walkable_bounds);
    for (const Rect& obs : sc.obstacles)
        d = std::min(d, distance_to_rect(p, obs));
    return d;
}

/// Default three-way crossroad. A 10 m wide corridor runs from the origin
/// strip at the bottom to a crossing 25 m up; 10 m wide arms extend 15 m to
/// the left, right and straight ahead, each ending in a 1 m destination
/// strip. The four corner blocks are obstacles. The crossing's lower edge
/// sits at y = 25, which is where camera cutouts anchor by default.
struct CrossroadLayout {
    Scenario scenario;
    /// y coordinate of the crossing's lower edge (cutout anchor line).
    double crossing_lower_y = 0.0;
    /// x extents of the corridor (the street the camera observes).
    double corridor_xmin = 0.0, corridor_xmax = 0.0;
};

inline CrossroadLayout default_crossroad() {
    CrossroadLayout layout;
    Scenario& sc = layout.scenario;
    sc.walkable_bounds = {-20.0, 0.0, 20.0, 50.0};
    sc.obstacles = {
        {-20.0, 0.0, -5.0, 25.0},   // bottom-left block
        {5.0, 0.0, 20.0, 25.0},     // bottom-right block
        {-20.0, 35.0, -5.0, 50.0},  // top-left block
        {5.0, 35.0, 20.0, 50.0},    // top-right block
    };
    sc.origin = {-5.0, 0.0, 5.0, 1.0};
    sc.destinations[0] = {-20.0, 25.0, -19.0, 35.0};  // L: end of left arm
    sc.destinations[1] = {-5.0, 49.0, 5.0, 50.0};     // S: end of straight arm
    sc.destinations[2] = {19.0, 25.0, 20.0, 35.0};    // R: end of right arm
    sc.grid_resolution_ff = 0.1;
    layout.crossing_lower_y = 25.0;
    layout.corridor_xmin = -5.0;
    layout.corridor_xmax = 5.0;
    validate(sc);
    return layout;
}

}  // namespace crossflow
