#pragma once

// Shared test fixtures and independent oracles. Everything here is
// deliberately brute force; it must not share code paths with the library
// implementations it checks.

#include "isoseq/grid.hpp"
#include "isoseq/pathgen.hpp"
#include "isoseq/rng.hpp"

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace test {

using isoseq::GridCoord;
using isoseq::OccupancyGrid;

/// Build a grid from ASCII art: '.' floor, anything else wall. Rows split on
/// '\n'. The grid is NOT auto-padded; callers draw their own borders.
inline OccupancyGrid make_grid(std::string_view art) {
    std::vector<std::string> rows;
    std::size_t pos = 0;
    while (pos <= art.size()) {
        std::size_t eol = art.find('\n', pos);
        if (eol == std::string_view::npos) eol = art.size();
        if (eol > pos) rows.emplace_back(art.substr(pos, eol - pos));
        pos = eol + 1;
    }
    int h = static_cast<int>(rows.size());
    int w = static_cast<int>(rows.front().size());
    std::vector<std::uint8_t> cells(static_cast<std::size_t>(w) * h, OccupancyGrid::Wall);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (rows[y][x] == '.') cells[static_cast<std::size_t>(y) * w + x] = OccupancyGrid::Floor;
    return OccupancyGrid(w, h, std::move(cells), false);
}

/// Rectangular room of floor with a 1-cell wall border.
inline OccupancyGrid empty_room(int floor_w, int floor_h) {
    int w = floor_w + 2, h = floor_h + 2;
    std::vector<std::uint8_t> cells(static_cast<std::size_t>(w) * h, OccupancyGrid::Wall);
    for (int y = 1; y <= floor_h; ++y)
        for (int x = 1; x <= floor_w; ++x)
            cells[static_cast<std::size_t>(y) * w + x] = OccupancyGrid::Floor;
    return OccupancyGrid(w, h, std::move(cells), true);
}

/// Random grid with the given wall probability inside a wall border.
inline OccupancyGrid random_grid(int w, int h, double wall_prob, std::uint64_t seed) {
    isoseq::Rng rng(seed);
    std::vector<std::uint8_t> cells(static_cast<std::size_t>(w) * h, OccupancyGrid::Wall);
    for (int y = 1; y < h - 1; ++y)
        for (int x = 1; x < w - 1; ++x)
            cells[static_cast<std::size_t>(y) * w + x] =
                rng.uniform01() < wall_prob ? OccupancyGrid::Wall : OccupancyGrid::Floor;
    return OccupancyGrid(w, h, std::move(cells), true);
}

/// Minimal binary PGM encoder for fabricating loader inputs.
inline std::vector<std::uint8_t> make_pgm(int w, int h, const std::vector<std::uint8_t>& px,
                                          int maxval = 255) {
    std::string header = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n" +
                         std::to_string(maxval) + "\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), px.begin(), px.end());
    return out;
}

// --- exact geometric supercover oracle ------------------------------------

inline int sign_of(long long v) { return v > 0 ? 1 : v < 0 ? -1 : 0; }

/// Closed segment between cell centers vs. closed unit cell square, decided
/// exactly in doubled integer coordinates (separating axis test).
inline bool segment_touches_cell(GridCoord a, GridCoord b, GridCoord cell) {
    long long ax = 2LL * a.x, ay = 2LL * a.y, bx = 2LL * b.x, by = 2LL * b.y;
    long long lox = 2LL * cell.x - 1, hix = 2LL * cell.x + 1;
    long long loy = 2LL * cell.y - 1, hiy = 2LL * cell.y + 1;
    if (std::max(std::min(ax, bx), lox) > std::min(std::max(ax, bx), hix)) return false;
    if (std::max(std::min(ay, by), loy) > std::min(std::max(ay, by), hiy)) return false;
    long long dx = bx - ax, dy = by - ay;
    auto side = [&](long long px, long long py) { return sign_of(dx * (py - ay) - dy * (px - ax)); };
    int s1 = side(lox, loy), s2 = side(hix, loy), s3 = side(lox, hiy), s4 = side(hix, hiy);
    int mn = std::min({s1, s2, s3, s4}), mx = std::max({s1, s2, s3, s4});
    return !(mn > 0 || mx < 0);
}

/// All cells touched by the segment, by exhaustive bounding-box scan.
inline std::vector<GridCoord> supercover_oracle(GridCoord a, GridCoord b) {
    std::vector<GridCoord> cells;
    int lox = std::min(a.x, b.x), hix = std::max(a.x, b.x);
    int loy = std::min(a.y, b.y), hiy = std::max(a.y, b.y);
    for (int y = loy; y <= hiy; ++y)
        for (int x = lox; x <= hix; ++x)
            if (segment_touches_cell(a, b, {x, y})) cells.push_back({x, y});
    return cells;
}

// --- Floyd-Warshall all-pairs oracle ---------------------------------------

struct ApspResult {
    std::vector<GridCoord> nodes;
    std::vector<std::optional<isoseq::PathWeight>> dist; // n*n

    std::optional<isoseq::PathWeight> between(GridCoord a, GridCoord b) const {
        auto ia = index_of(a), ib = index_of(b);
        return dist[ia * nodes.size() + ib];
    }

    std::size_t index_of(GridCoord p) const {
        return static_cast<std::size_t>(
            std::find(nodes.begin(), nodes.end(), p) - nodes.begin());
    }
};

inline ApspResult floyd_warshall(const isoseq::RouteGraph& graph) {
    ApspResult res;
    res.nodes = graph.nodes();
    std::size_t n = res.nodes.size();
    res.dist.assign(n * n, std::nullopt);
    for (std::size_t i = 0; i < n; ++i) {
        res.dist[i * n + i] = isoseq::PathWeight{};
        graph.for_each_neighbor(res.nodes[i], [&](GridCoord q, isoseq::PathWeight w) {
            res.dist[i * n + res.index_of(q)] = w;
        });
    }
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i) {
            if (!res.dist[i * n + k]) continue;
            for (std::size_t j = 0; j < n; ++j) {
                if (!res.dist[k * n + j]) continue;
                isoseq::PathWeight cand = *res.dist[i * n + k] + *res.dist[k * n + j];
                if (!res.dist[i * n + j] || cand < *res.dist[i * n + j])
                    res.dist[i * n + j] = cand;
            }
        }
    return res;
}

/// Width-1 corridor maze (recursive backtracker). Contains no 2x2 floor
/// block, so the route graph degenerates to 4-connectivity.
inline OccupancyGrid thin_maze(int cells_w, int cells_h, std::uint64_t seed) {
    int w = 2 * cells_w + 1, h = 2 * cells_h + 1;
    std::vector<std::uint8_t> grid(static_cast<std::size_t>(w) * h, OccupancyGrid::Wall);
    auto at = [&](int x, int y) -> std::uint8_t& {
        return grid[static_cast<std::size_t>(y) * w + x];
    };
    isoseq::Rng rng(seed);
    std::vector<std::pair<int, int>> stack{{0, 0}};
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(cells_w) * cells_h, 0);
    seen[0] = 1;
    at(1, 1) = OccupancyGrid::Floor;
    while (!stack.empty()) {
        auto [cx, cy] = stack.back();
        int dirs[4] = {0, 1, 2, 3};
        // deterministic shuffle
        for (int i = 3; i > 0; --i) std::swap(dirs[i], dirs[rng.below(i + 1)]);
        static const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
        bool moved = false;
        for (int d : dirs) {
            int nx = cx + dx[d], ny = cy + dy[d];
            if (nx < 0 || nx >= cells_w || ny < 0 || ny >= cells_h) continue;
            if (seen[static_cast<std::size_t>(ny) * cells_w + nx]) continue;
            seen[static_cast<std::size_t>(ny) * cells_w + nx] = 1;
            at(2 * nx + 1, 2 * ny + 1) = OccupancyGrid::Floor;
            at(cx + nx + 1, cy + ny + 1) = OccupancyGrid::Floor; // knock down the wall between
            stack.emplace_back(nx, ny);
            moved = true;
            break;
        }
        if (!moved) stack.pop_back();
    }
    return OccupancyGrid(w, h, std::move(grid), true);
}

/// Unweighted BFS step count on the route graph (orthogonal moves only make
/// sense on thin mazes, but this just counts edges).
inline std::optional<int> bfs_steps(const isoseq::RouteGraph& graph, GridCoord start,
                                    GridCoord goal) {
    std::vector<int> dist(static_cast<std::size_t>(graph.width()) * graph.height(), -1);
    auto idx = [&](GridCoord p) { return static_cast<std::size_t>(p.y) * graph.width() + p.x; };
    std::vector<GridCoord> frontier{start};
    dist[idx(start)] = 0;
    while (!frontier.empty()) {
        std::vector<GridCoord> next;
        for (GridCoord p : frontier)
            graph.for_each_neighbor(p, [&](GridCoord q, isoseq::PathWeight) {
                if (dist[idx(q)] < 0) {
                    dist[idx(q)] = dist[idx(p)] + 1;
                    next.push_back(q);
                }
            });
        frontier = std::move(next);
    }
    return dist[idx(goal)] < 0 ? std::nullopt : std::make_optional(dist[idx(goal)]);
}

} // namespace test
