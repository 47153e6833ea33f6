#pragma once

#include "isoseq/errors.hpp"
#include "isoseq/grid.hpp"
#include "isoseq/rng.hpp"
#include "isoseq/visibility.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <string>
#include <string_view>
#include <vector>

namespace isoseq {

/// Exact path weight ortho + diag*sqrt(2), kept as integer step counts so
/// that comparisons (and hence Dijkstra vs. any oracle) are free of floating
/// point rounding.
struct PathWeight {
    std::int64_t ortho = 0;
    std::int64_t diag = 0;

    double value() const { return static_cast<double>(ortho) + std::sqrt(2.0) * diag; }

    friend PathWeight operator+(PathWeight a, PathWeight b) {
        return {a.ortho + b.ortho, a.diag + b.diag};
    }

    friend bool operator==(PathWeight a, PathWeight b) {
        return a.ortho == b.ortho && a.diag == b.diag; // sqrt(2) is irrational
    }
    friend bool operator!=(PathWeight a, PathWeight b) { return !(a == b); }

    // a.ortho + a.diag*sqrt(2) < b.ortho + b.diag*sqrt(2), exactly
    friend bool operator<(PathWeight a, PathWeight b) {
        std::int64_t u = a.ortho - b.ortho; // decide u < v*sqrt(2)
        std::int64_t v = b.diag - a.diag;
        if (v >= 0) return u < 0 ? true : u * u < 2 * v * v;
        return u < 0 && u * u > 2 * v * v;
    }
    friend bool operator<=(PathWeight a, PathWeight b) { return !(b < a); }
};

struct Trajectory {
    std::vector<GridCoord> points;

    std::size_t size() const { return points.size(); }
};

/// Implicit 8-connected graph over FLOOR cells. Diagonal edges exist only
/// when both adjacent orthogonal cells are FLOOR (no corner cutting).
class RouteGraph {
public:
    explicit RouteGraph(const OccupancyGrid& grid)
        : width_(grid.width()), height_(grid.height()), floor_(grid.cells()) {
        node_count_ = 0;
        for (auto c : floor_) node_count_ += c;
        if (node_count_ == 0) throw NoFloor("grid has no floor cells");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t node_count() const { return node_count_; }

    bool is_node(GridCoord p) const {
        return p.x >= 0 && p.x < width_ && p.y >= 0 && p.y < height_ &&
               floor_[static_cast<std::size_t>(p.y) * width_ + p.x] == OccupancyGrid::Floor;
    }

    /// Visit the neighbors of p in fixed scan order (dy, then dx ascending).
    template <typename F>
    void for_each_neighbor(GridCoord p, F&& visit) const {
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                if (dx == 0 && dy == 0) continue;
                GridCoord q{p.x + dx, p.y + dy};
                if (!is_node(q)) continue;
                bool diagonal = dx != 0 && dy != 0;
                if (diagonal &&
                    (!is_node({p.x + dx, p.y}) || !is_node({p.x, p.y + dy})))
                    continue; // corner cut
                visit(q, diagonal ? PathWeight{0, 1} : PathWeight{1, 0});
            }
        }
    }

    std::vector<GridCoord> nodes() const {
        std::vector<GridCoord> out;
        out.reserve(node_count_);
        for (int y = 0; y < height_; ++y)
            for (int x = 0; x < width_; ++x)
                if (floor_[static_cast<std::size_t>(y) * width_ + x]) out.push_back({x, y});
        return out;
    }

    /// Undirected edge count (each pair counted once).
    std::size_t edge_count() const {
        std::size_t twice = 0;
        for (GridCoord p : nodes())
            for_each_neighbor(p, [&](GridCoord, PathWeight) { ++twice; });
        return twice / 2;
    }

private:
    int width_;
    int height_;
    std::vector<std::uint8_t> floor_;
    std::size_t node_count_;
};

inline RouteGraph build_route_graph(const OccupancyGrid& grid) { return RouteGraph(grid); }

namespace detail {

struct PqEntry {
    PathWeight w;
    GridCoord p;

    // priority: smallest weight first, ties by (y, x)
    friend bool operator>(const PqEntry& a, const PqEntry& b) {
        if (a.w != b.w) return b.w < a.w;
        if (a.p.y != b.p.y) return a.p.y > b.p.y;
        return a.p.x > b.p.x;
    }
};

} // namespace detail

/// Minimum-weight path between two graph nodes; ties broken deterministically
/// by popping the lexicographically smallest (y, x) node among equal weights.
inline Trajectory dijkstra_shortest_path(const RouteGraph& graph, GridCoord start,
                                         GridCoord goal) {
    if (!graph.is_node(start) || !graph.is_node(goal))
        throw OutOfBounds("dijkstra endpoints must be floor cells inside the grid");

    auto idx = [&](GridCoord p) {
        return static_cast<std::size_t>(p.y) * graph.width() + p.x;
    };
    std::size_t n = static_cast<std::size_t>(graph.width()) * graph.height();
    std::vector<PathWeight> dist(n);
    std::vector<std::uint8_t> settled(n, 0), seen(n, 0);
    std::vector<GridCoord> parent(n, GridCoord{-1, -1});

    std::priority_queue<detail::PqEntry, std::vector<detail::PqEntry>, std::greater<>> pq;
    pq.push({PathWeight{}, start});
    seen[idx(start)] = 1;

    while (!pq.empty()) {
        auto [w, p] = pq.top();
        pq.pop();
        if (settled[idx(p)]) continue;
        settled[idx(p)] = 1;
        if (p == goal) break;
        graph.for_each_neighbor(p, [&](GridCoord q, PathWeight step) {
            if (settled[idx(q)]) return;
            PathWeight cand = w + step;
            if (!seen[idx(q)] || cand < dist[idx(q)]) {
                seen[idx(q)] = 1;
                dist[idx(q)] = cand;
                parent[idx(q)] = p;
                pq.push({cand, q});
            }
        });
    }

    if (!settled[idx(goal)]) throw Unreachable("no route between the given cells");

    Trajectory traj;
    for (GridCoord p = goal; !(p == start); p = parent[idx(p)]) traj.points.push_back(p);
    traj.points.push_back(start);
    std::reverse(traj.points.begin(), traj.points.end());
    return traj;
}

inline PathWeight trajectory_weight(const Trajectory& traj) {
    PathWeight w;
    for (std::size_t i = 1; i < traj.points.size(); ++i) {
        int dx = std::abs(traj.points[i].x - traj.points[i - 1].x);
        int dy = std::abs(traj.points[i].y - traj.points[i - 1].y);
        if (dx && dy)
            w.diag += 1;
        else
            w.ortho += 1;
    }
    return w;
}

/// Checks the Trajectory invariants against a grid: length >= 2, 8-adjacency,
/// all points FLOOR.
inline bool trajectory_valid(const Trajectory& traj, const OccupancyGrid& grid) {
    if (traj.points.size() < 2) return false;
    for (std::size_t i = 0; i < traj.points.size(); ++i) {
        GridCoord p = traj.points[i];
        if (!grid.in_bounds(p) || grid.cell(p) != OccupancyGrid::Floor) return false;
        if (i > 0) {
            int dx = std::abs(p.x - traj.points[i - 1].x);
            int dy = std::abs(p.y - traj.points[i - 1].y);
            if (dx > 1 || dy > 1 || (dx == 0 && dy == 0)) return false;
        }
    }
    return true;
}

/// n Dijkstra paths between uniformly drawn distinct floor cells. Trajectory
/// i uses its own stream seeded with mix_seed(seed, i); unreachable pairs are
/// redrawn up to a bounded number of times.
inline std::vector<Trajectory> sample_random_trajectories(const OccupancyGrid& grid,
                                                          std::size_t count,
                                                          std::uint64_t seed) {
    if (count < 1) throw InvalidParams("trajectory count must be >= 1");
    RouteGraph graph(grid);
    std::vector<GridCoord> floor_cells = graph.nodes();
    if (floor_cells.size() < 2) throw NoFloor("need at least two floor cells");

    constexpr int kMaxRetries = 64;
    std::vector<Trajectory> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Rng rng(mix_seed(seed, i));
        bool done = false;
        for (int attempt = 0; attempt < kMaxRetries && !done; ++attempt) {
            GridCoord a = floor_cells[rng.below(floor_cells.size())];
            GridCoord b = floor_cells[rng.below(floor_cells.size())];
            if (a == b) continue;
            try {
                out.push_back(dijkstra_shortest_path(graph, a, b));
                done = true;
            } catch (const Unreachable&) {
            }
        }
        if (!done)
            throw ExhaustedRetries("could not sample a connected start/goal pair (trajectory " +
                                   std::to_string(i) + ")");
    }
    return out;
}

/// Walking direction at a trajectory index, in image coordinates (x right,
/// y down, atan2 convention). Interior points use the central difference
/// points[i+1] - points[i-1]; endpoints use their single adjacent segment.
inline double heading_at(const Trajectory& traj, std::size_t i) {
    if (i >= traj.points.size()) throw OutOfBounds("heading index outside trajectory");
    std::size_t lo = i > 0 ? i - 1 : i;
    std::size_t hi = i + 1 < traj.points.size() ? i + 1 : i;
    double dx = traj.points[hi].x - traj.points[lo].x;
    double dy = traj.points[hi].y - traj.points[lo].y;
    return std::atan2(dy, dx);
}

/// Parse a hand-drawn trajectory: one "x,y" pair per line, '#' comments.
/// Consecutive waypoints that are not 8-adjacent are joined with supercover
/// segments. Every resulting cell must be FLOOR.
inline Trajectory parse_trajectory_text(std::string_view text, const OccupancyGrid& grid) {
    std::vector<GridCoord> waypoints;
    std::size_t line_no = 0, pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        std::size_t b = line.find_first_not_of(" \t\r");
        if (b == std::string_view::npos) continue;
        std::size_t e = line.find_last_not_of(" \t\r");
        std::string body(line.substr(b, e - b + 1));
        int x, y;
        std::size_t consumed = 0;
        try {
            x = std::stoi(body, &consumed);
        } catch (...) {
            throw FormatError("trajectory line " + std::to_string(line_no) + ": expected x,y");
        }
        std::size_t rest = body.find_first_not_of(" \t", consumed);
        if (rest == std::string::npos || body[rest] != ',')
            throw FormatError("trajectory line " + std::to_string(line_no) + ": expected x,y");
        try {
            y = std::stoi(body.substr(rest + 1));
        } catch (...) {
            throw FormatError("trajectory line " + std::to_string(line_no) + ": expected x,y");
        }
        waypoints.push_back({x, y});
    }
    if (waypoints.size() < 2) throw FormatError("trajectory needs at least two points");

    Trajectory traj;
    traj.points.push_back(waypoints[0]);
    for (std::size_t i = 1; i < waypoints.size(); ++i) {
        GridCoord prev = traj.points.back(), next = waypoints[i];
        int dx = std::abs(next.x - prev.x), dy = std::abs(next.y - prev.y);
        if (dx == 0 && dy == 0) continue;
        if (dx <= 1 && dy <= 1) {
            traj.points.push_back(next);
        } else {
            auto cells = supercover_line(prev, next);
            traj.points.insert(traj.points.end(), cells.begin() + 1, cells.end());
        }
    }
    for (GridCoord p : traj.points) {
        if (!grid.in_bounds(p))
            throw FormatError("trajectory point (" + std::to_string(p.x) + "," +
                              std::to_string(p.y) + ") outside grid");
        if (grid.cell(p) != OccupancyGrid::Floor)
            throw FormatError("trajectory passes through wall at (" + std::to_string(p.x) + "," +
                              std::to_string(p.y) + ")");
    }
    return traj;
}

} // namespace isoseq
