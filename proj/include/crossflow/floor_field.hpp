#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include "crossflow/errors.hpp"
#include "crossflow/geometry.hpp"
#include "crossflow/scenario.hpp"

namespace crossflow {

inline constexpr double kInfDistance = std::numeric_limits<double>::infinity();

/// Static navigation field for one destination: travel distance (in meters)
/// from every grid cell center to the destination region, measured on an
/// 8-neighborhood grid graph (axis step = cell_size, diagonal step =
/// sqrt(2) * cell_size). Obstacle cells are impassable (+inf). Diagonal moves
/// are allowed only when both adjacent axis neighbors are walkable, so paths
/// never cut corners.
///
/// Off-grid queries are answered by bilinear interpolation between the four
/// surrounding cell centers; if any of them is impassable the query returns
/// +inf, which keeps agents a safe margin away from walls.
class FloorField {
public:
    FloorField() = default;
    FloorField(int destination_id, int nx, int ny, double cell_size, Vec2 grid_min,
               std::vector<double> dist)
        : destination_id_(destination_id),
          nx_(nx),
          ny_(ny),
          cell_size_(cell_size),
          grid_min_(grid_min),
          dist_(std::move(dist)) {}

    int destination_id() const { return destination_id_; }
    int nx() const { return nx_; }
    int ny() const { return ny_; }
    double cell_size() const { return cell_size_; }

    /// Distance value stored at cell (ix, iy); +inf marks impassable cells.
    double at(int ix, int iy) const { return dist_[static_cast<std::size_t>(iy) * nx_ + ix]; }

    Vec2 cell_center(int ix, int iy) const {
        return {grid_min_.x + (ix + 0.5) * cell_size_, grid_min_.y + (iy + 0.5) * cell_size_};
    }

    /// Bilinear interpolation at an arbitrary point. Coordinates are clamped
    /// to the cell-center lattice, so queries on the boundary degrade to the
    /// nearest cells instead of reading out of bounds.
    double interpolate(const Vec2& p) const {
        double u = (p.x - grid_min_.x) / cell_size_ - 0.5;
        double v = (p.y - grid_min_.y) / cell_size_ - 0.5;
        u = std::min(std::max(u, 0.0), static_cast<double>(nx_ - 1));
        v = std::min(std::max(v, 0.0), static_cast<double>(ny_ - 1));
        const int ix = std::min(static_cast<int>(u), nx_ - 2 >= 0 ? nx_ - 2 : 0);
        const int iy = std::min(static_cast<int>(v), ny_ - 2 >= 0 ? ny_ - 2 : 0);
        const double fx = u - ix;
        const double fy = v - iy;
        const int ix1 = std::min(ix + 1, nx_ - 1);
        const int iy1 = std::min(iy + 1, ny_ - 1);
        const double d00 = at(ix, iy);
        const double d10 = at(ix1, iy);
        const double d01 = at(ix, iy1);
        const double d11 = at(ix1, iy1);
        if (std::isinf(d00) || std::isinf(d10) || std::isinf(d01) || std::isinf(d11))
            return kInfDistance;
        return (1 - fx) * (1 - fy) * d00 + fx * (1 - fy) * d10 + (1 - fx) * fy * d01 +
               fx * fy * d11;
    }

private:
    int destination_id_ = -1;
    int nx_ = 0, ny_ = 0;
    double cell_size_ = 0.0;
    Vec2 grid_min_;
    std::vector<double> dist_;
};

namespace detail {

struct GridSpec {
    int nx = 0, ny = 0;
    double h = 0.0;
    Vec2 min;
};

inline GridSpec grid_spec(const Scenario& sc) {
    GridSpec g;
    g.h = sc.grid_resolution_ff;
    g.min = {sc.walkable_bounds.xmin, sc.walkable_bounds.ymin};
    g.nx = std::max(1, static_cast<int>(std::ceil(sc.walkable_bounds.width() / g.h - 1e-9)));
    g.ny = std::max(1, static_cast<int>(std::ceil(sc.walkable_bounds.height() / g.h - 1e-9)));
    return g;
}

}  // namespace detail

/// Multi-source Dijkstra from the destination region over the walkable grid.
///
/// Throws UnreachableDestinationError when no grid cell of the destination
/// region is walkable, and DisconnectedScenarioError when the origin region
/// has no walkable connection to the destination.
inline FloorField build_floor_field(const Scenario& sc, int destination_id) {
    if (destination_id < 0 || destination_id >= kNumDestinations)
        throw ConfigError("destination_id out of range");
    const auto g = detail::grid_spec(sc);
    const std::size_t n_cells = static_cast<std::size_t>(g.nx) * g.ny;
    const Rect& dest = sc.destinations[destination_id];

    std::vector<char> blocked(n_cells, 0);
    std::vector<double> dist(n_cells, kInfDistance);
    auto idx = [&](int ix, int iy) { return static_cast<std::size_t>(iy) * g.nx + ix; };
    auto center = [&](int ix, int iy) -> Vec2 {
        return {g.min.x + (ix + 0.5) * g.h, g.min.y + (iy + 0.5) * g.h};
    };

    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix)
            if (!is_walkable(sc, center(ix, iy))) blocked[idx(ix, iy)] = 1;

    using HeapItem = std::pair<double, std::uint32_t>;
    std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<HeapItem>> heap;

    bool any_source = false;
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) {
            const std::size_t i = idx(ix, iy);
            if (!blocked[i] && dest.contains(center(ix, iy))) {
                dist[i] = 0.0;
                heap.emplace(0.0, static_cast<std::uint32_t>(i));
                any_source = true;
            }
        }
    if (!any_source)
        throw UnreachableDestinationError(
            std::string("destination ") + kDestinationLabels[destination_id] +
            " covers no walkable cell");

    const double diag = std::sqrt(2.0) * g.h;
    while (!heap.empty()) {
        const auto [d, iu] = heap.top();
        heap.pop();
        if (d > dist[iu]) continue;  // stale entry
        const int ix = static_cast<int>(iu % g.nx);
        const int iy = static_cast<int>(iu / g.nx);
        auto open = [&](int jx, int jy) {
            return jx >= 0 && jx < g.nx && jy >= 0 && jy < g.ny && !blocked[idx(jx, jy)];
        };
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                if (dx == 0 && dy == 0) continue;
                const int jx = ix + dx, jy = iy + dy;
                if (!open(jx, jy)) continue;
                if (dx != 0 && dy != 0 && !(open(ix + dx, iy) && open(ix, iy + dy)))
                    continue;  // no corner cutting
                const double w = (dx != 0 && dy != 0) ? diag : g.h;
                const double nd = d + w;
                const std::size_t j = idx(jx, jy);
                if (nd < dist[j]) {
                    dist[j] = nd;
                    heap.emplace(nd, static_cast<std::uint32_t>(j));
                }
            }
    }

    bool origin_reached = false;
    for (int iy = 0; iy < g.ny && !origin_reached; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) {
            const std::size_t i = idx(ix, iy);
            if (!blocked[i] && sc.origin.contains(center(ix, iy)) && std::isfinite(dist[i])) {
                origin_reached = true;
                break;
            }
        }
    if (!origin_reached)
        throw DisconnectedScenarioError(
            std::string("no walkable path from origin to destination ") +
            kDestinationLabels[destination_id]);

    return FloorField(destination_id, g.nx, g.ny, g.h, g.min, std::move(dist));
}

/// The three navigation fields of a scenario, indexed by destination.
struct FloorFieldSet {
    std::array<FloorField, kNumDestinations> fields;
    const FloorField& operator[](int d) const { return fields[d]; }
};

inline FloorFieldSet build_floor_fields(const Scenario& sc) {
    FloorFieldSet set;
    for (int d = 0; d < kNumDestinations; ++d) set.fields[d] = build_floor_field(sc, d);
    return set;
}

}  // namespace crossflow
