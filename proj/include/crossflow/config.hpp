#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>

#include <json.hpp>

#include "crossflow/errors.hpp"
#include "crossflow/scenario.hpp"
#include "crossflow/simulation.hpp"

namespace crossflow {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace detail {

inline void require_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& context) {
    for (const auto& item : obj.items())
        if (!allowed.count(item.key()))
            throw ConfigError(context + ": unknown key '" + item.key() + "'");
}

inline double get_num(const json& obj, const std::string& key, std::optional<double> fallback,
                      const std::string& context) {
    if (!obj.contains(key)) {
        if (fallback) return *fallback;
        throw ConfigError(context + ": missing key '" + key + "'");
    }
    const json& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(context + "." + key + ": expected a number");
    return v.get<double>();
}

inline Rect rect_from_json(const json& v, const std::string& context) {
    if (!v.is_array() || v.size() != 4)
        throw ConfigError(context + ": expected [xmin, ymin, xmax, ymax]");
    for (const json& c : v)
        if (!c.is_number()) throw ConfigError(context + ": rectangle entries must be numbers");
    return Rect{v[0].get<double>(), v[1].get<double>(), v[2].get<double>(), v[3].get<double>()};
}

inline ordered_json rect_to_json(const Rect& r) {
    return ordered_json::array({r.xmin, r.ymin, r.xmax, r.ymax});
}

}  // namespace detail

inline Scenario scenario_from_json(const json& obj, const std::string& context) {
    detail::require_keys(
        obj, {"walkable_bounds", "obstacles", "origin", "destinations", "grid_resolution_ff"},
        context);
    Scenario sc;
    sc.walkable_bounds = detail::rect_from_json(obj.at("walkable_bounds"),
                                                context + ".walkable_bounds");
    if (obj.contains("obstacles")) {
        const json& list = obj.at("obstacles");
        if (!list.is_array()) throw ConfigError(context + ".obstacles: expected an array");
        for (std::size_t i = 0; i < list.size(); ++i)
            sc.obstacles.push_back(detail::rect_from_json(
                list[i], context + ".obstacles[" + std::to_string(i) + "]"));
    }
    sc.origin = detail::rect_from_json(obj.at("origin"), context + ".origin");
    const json& dests = obj.at("destinations");
    if (!dests.is_object() || dests.size() != kNumDestinations)
        throw ConfigError(context + ".destinations: expected an object with keys L, S, R");
    for (std::size_t d = 0; d < kNumDestinations; ++d) {
        const char* label = kDestinationLabels[d];
        if (!dests.contains(label))
            throw ConfigError(context + ".destinations: missing key '" + std::string(label) + "'");
        sc.destinations[d] = detail::rect_from_json(dests.at(label),
                                                    context + ".destinations." + label);
    }
    sc.grid_resolution_ff =
        detail::get_num(obj, "grid_resolution_ff", Scenario{}.grid_resolution_ff, context);
    validate(sc);
    return sc;
}

inline ordered_json scenario_to_json(const Scenario& sc) {
    ordered_json obj;
    obj["walkable_bounds"] = detail::rect_to_json(sc.walkable_bounds);
    ordered_json obstacles = ordered_json::array();
    for (const Rect& r : sc.obstacles) obstacles.push_back(detail::rect_to_json(r));
    obj["obstacles"] = obstacles;
    obj["origin"] = detail::rect_to_json(sc.origin);
    ordered_json dests;
    for (std::size_t d = 0; d < kNumDestinations; ++d)
        dests[kDestinationLabels[d]] = detail::rect_to_json(sc.destinations[d]);
    obj["destinations"] = dests;
    obj["grid_resolution_ff"] = sc.grid_resolution_ff;
    return obj;
}

inline SimConfig sim_config_from_json(const json& obj, const std::string& context) {
    detail::require_keys(obj,
                         {"duration", "time_step", "spawn_rate", "redistribution_period",
                          "speed_mean", "speed_sd", "speed_min", "speed_max", "rng_seed"},
                         context);
    SimConfig defaults;
    SimConfig cfg;
    cfg.duration = detail::get_num(obj, "duration", defaults.duration, context);
    cfg.time_step = detail::get_num(obj, "time_step", defaults.time_step, context);
    cfg.spawn_rate = detail::get_num(obj, "spawn_rate", defaults.spawn_rate, context);
    cfg.redistribution_period = static_cast<int>(detail::get_num(
        obj, "redistribution_period", defaults.redistribution_period, context));
    cfg.speed_mean = detail::get_num(obj, "speed_mean", defaults.speed_mean, context);
    cfg.speed_sd = detail::get_num(obj, "speed_sd", defaults.speed_sd, context);
    cfg.speed_min = detail::get_num(obj, "speed_min", defaults.speed_min, context);
    cfg.speed_max = detail::get_num(obj, "speed_max", defaults.speed_max, context);
    if (obj.contains("rng_seed")) {
        const json& v = obj.at("rng_seed");
        if (!v.is_number_unsigned())
            throw ConfigError(context + ".rng_seed: expected a non-negative integer");
        cfg.rng_seed = v.get<std::uint64_t>();
    }
    validate(cfg);
    return cfg;
}

inline ordered_json sim_config_to_json(const SimConfig& cfg) {
    ordered_json obj;
    obj["duration"] = cfg.duration;
    obj["time_step"] = cfg.time_step;
    obj["spawn_rate"] = cfg.spawn_rate;
    obj["redistribution_period"] = cfg.redistribution_period;
    obj["speed_mean"] = cfg.speed_mean;
    obj["speed_sd"] = cfg.speed_sd;
    obj["speed_min"] = cfg.speed_min;
    obj["speed_max"] = cfg.speed_max;
    obj["rng_seed"] = cfg.rng_seed;
    return obj;
}

/// Everything a command needs about the world: the scenario plus the corridor
/// measurements that anchor cutout placement. `layout_known` is false when a
/// config file supplies a custom scenario without a layout block; cutout
/// placement then has no anchor and commands that need one must refuse.
struct AppConfig {
    CrossroadLayout layout = default_crossroad();
    SimConfig sim;
    bool layout_known = true;
};

/// Config file shape: {"scenario": {...}, "sim": {...}, "layout": {...}},
/// every block optional. Unknown keys are errors so typos cannot silently
/// fall back to defaults.
inline AppConfig app_config_from_json(const json& obj, const std::string& context) {
    detail::require_keys(obj, {"scenario", "sim", "layout"}, context);
    AppConfig cfg;
    if (obj.contains("scenario")) {
        cfg.layout.scenario = scenario_from_json(obj.at("scenario"), context + ".scenario");
        cfg.layout_known = false;
    }
    if (obj.contains("layout")) {
        const json& lay = obj.at("layout");
        detail::require_keys(lay, {"crossing_lower_y", "corridor_xmin", "corridor_xmax"},
                             context + ".layout");
        cfg.layout.crossing_lower_y =
            detail::get_num(lay, "crossing_lower_y", std::nullopt, context + ".layout");
        cfg.layout.corridor_xmin =
            detail::get_num(lay, "corridor_xmin", std::nullopt, context + ".layout");
        cfg.layout.corridor_xmax =
            detail::get_num(lay, "corridor_xmax", std::nullopt, context + ".layout");
        cfg.layout_known = true;
    }
    if (obj.contains("sim")) cfg.sim = sim_config_from_json(obj.at("sim"), context + ".sim");
    return cfg;
}

inline AppConfig parse_app_config(const std::string& content, const std::string& name) {
    json obj;
    try {
        obj = json::parse(content);
    } catch (const json::parse_error& e) {
        throw ConfigError(name + ": " + e.what());
    }
    if (!obj.is_object()) throw ConfigError(name + ": config root must be an object");
    return app_config_from_json(obj, name);
}

}  // namespace crossflow
