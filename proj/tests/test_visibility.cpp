#include "helpers.hpp"

#include "isoseq/visibility.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

using namespace isoseq;

namespace {

std::set<std::pair<int, int>> as_set(const std::vector<GridCoord>& cells) {
    std::set<std::pair<int, int>> s;
    for (auto c : cells) s.insert({c.x, c.y});
    return s;
}

/// Visibility set by the line-of-sight oracle, restricted to the window.
Isovist oracle_isovist(const OccupancyGrid& grid, GridCoord origin, int radius) {
    Isovist iso;
    iso.radius = radius;
    iso.origin = origin;
    int w = 2 * radius + 1;
    iso.window.assign(static_cast<std::size_t>(w) * w, 0);
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
            if (dx * dx + dy * dy > radius * radius + radius) continue;
            GridCoord p{origin.x + dx, origin.y + dy};
            if (!grid.in_bounds(p)) continue;
            if (line_of_sight(grid, origin, p))
                iso.window[static_cast<std::size_t>(dy + radius) * w + (dx + radius)] = 1;
        }
    return iso;
}

} // namespace

TEST_CASE("supercover walk matches the exact geometric cell set") {
    Rng rng(2024);
    for (int trial = 0; trial < 500; ++trial) {
        GridCoord a{static_cast<int>(rng.below(21)) - 10, static_cast<int>(rng.below(21)) - 10};
        GridCoord b{static_cast<int>(rng.below(21)) - 10, static_cast<int>(rng.below(21)) - 10};
        auto walk = supercover_line(a, b);
        auto oracle = test::supercover_oracle(a, b);
        REQUIRE(as_set(walk) == as_set(oracle));
        // consecutive cells stay 8-adjacent, endpoints in place
        REQUIRE(walk.front() == a);
        REQUIRE(walk.back() == b);
        for (std::size_t i = 1; i < walk.size(); ++i) {
            CHECK(std::abs(walk[i].x - walk[i - 1].x) <= 1);
            CHECK(std::abs(walk[i].y - walk[i - 1].y) <= 1);
        }
    }
}

TEST_CASE("line of sight basics") {
    OccupancyGrid corridor = test::make_grid("#########\n"
                                             "#.......#\n"
                                             "#########");
    SECTION("a floor cell sees itself") { CHECK(line_of_sight(corridor, {1, 1}, {1, 1})); }
    SECTION("opposite ends of an empty corridor see each other") {
        CHECK(line_of_sight(corridor, {1, 1}, {7, 1}));
        CHECK(line_of_sight(corridor, {7, 1}, {1, 1}));
    }
    SECTION("wall targets are never visible") {
        CHECK_FALSE(line_of_sight(corridor, {1, 1}, {0, 0}));
    }
    SECTION("out of bounds endpoints throw") {
        CHECK_THROWS_AS(line_of_sight(corridor, {1, 1}, {99, 0}), OutOfBounds);
    }
}

TEST_CASE("a full wall row blocks sight in a 5x5 room") {
    OccupancyGrid g = test::make_grid("#######\n"
                                      "#.....#\n"
                                      "#.....#\n"
                                      "#######\n"
                                      "#.....#\n"
                                      "#.....#\n"
                                      "#######");
    CHECK_FALSE(line_of_sight(g, {3, 1}, {3, 5}));
    CHECK_FALSE(line_of_sight(g, {1, 2}, {5, 4}));
    CHECK(line_of_sight(g, {1, 1}, {5, 2}));
}

TEST_CASE("isolated floor cell yields a single lit center") {
    OccupancyGrid g = test::make_grid("#######\n"
                                      "#######\n"
                                      "#######\n"
                                      "###.###\n"
                                      "#######\n"
                                      "#######\n"
                                      "#######");
    Isovist iso = compute_isovist(g, {3, 3}, 3);
    REQUIRE(iso.size() == 7);
    int ones = 0;
    for (auto v : iso.window) ones += v;
    CHECK(ones == 1);
    CHECK(iso.at(3, 3) == 1);
}

TEST_CASE("open space fills the digital disc of radius R+0.5") {
    OccupancyGrid g = test::empty_room(11, 11);
    GridCoord center{6, 6};
    Isovist iso = compute_isovist(g, center, 2);
    REQUIRE(iso.size() == 5);
    for (int dy = -2; dy <= 2; ++dy)
        for (int dx = -2; dx <= 2; ++dx) {
            bool in_range = dx * dx + dy * dy <= 2 * 2 + 2;
            CHECK(iso.at(dx + 2, dy + 2) == (in_range ? 1 : 0));
        }
}

TEST_CASE("narrow corridor isovist equals the oracle set") {
    OccupancyGrid g = test::make_grid("###########\n"
                                      "#.........#\n"
                                      "###########");
    GridCoord origin{5, 1};
    Isovist casted = compute_isovist(g, origin, 4);
    Isovist oracle = oracle_isovist(g, origin, 4);
    CHECK(casted.window == oracle.window);
    // exactly the corridor cells within range light up
    int ones = 0;
    for (auto v : casted.window) ones += v;
    CHECK(ones == 9);
}

TEST_CASE("empty rectangular rooms: caster equals oracle exactly") {
    for (int w : {5, 9, 16, 21}) {
        for (int h : {5, 12, 21}) {
            OccupancyGrid g = test::empty_room(w, h);
            Rng rng(static_cast<std::uint64_t>(w * 100 + h));
            for (int k = 0; k < 6; ++k) {
                GridCoord origin{1 + static_cast<int>(rng.below(w)),
                                 1 + static_cast<int>(rng.below(h))};
                Isovist casted = compute_isovist(g, origin, 6);
                Isovist oracle = oracle_isovist(g, origin, 6);
                REQUIRE(casted.window == oracle.window);
            }
        }
    }
}

TEST_CASE("soundness: lit cells are floor, in range, centered") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        OccupancyGrid g = test::random_grid(24, 24, 0.25, seed);
        Rng rng(seed + 1000);
        for (int k = 0; k < 10; ++k) {
            GridCoord origin{1 + static_cast<int>(rng.below(22)),
                             1 + static_cast<int>(rng.below(22))};
            if (g.cell(origin) != OccupancyGrid::Floor) continue;
            int radius = 5;
            Isovist iso = compute_isovist(g, origin, radius);
            CHECK(iso.at(radius, radius) == 1);
            for (int v = 0; v < iso.size(); ++v)
                for (int u = 0; u < iso.size(); ++u) {
                    if (!iso.at(u, v)) continue;
                    int dx = u - radius, dy = v - radius;
                    CHECK(dx * dx + dy * dy <= radius * radius + radius);
                    GridCoord p{origin.x + dx, origin.y + dy};
                    REQUIRE(g.in_bounds(p));
                    CHECK(g.cell(p) == OccupancyGrid::Floor);
                }
        }
    }
}

TEST_CASE("removing a wall never shrinks any isovist") {
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        OccupancyGrid g = test::random_grid(13, 13, 0.3, seed);
        // pick one interior wall and open it
        Rng rng(seed * 31 + 5);
        GridCoord wall{-1, -1};
        for (int tries = 0; tries < 200 && wall.x < 0; ++tries) {
            GridCoord c{1 + static_cast<int>(rng.below(11)), 1 + static_cast<int>(rng.below(11))};
            if (g.cell(c) == OccupancyGrid::Wall) wall = c;
        }
        if (wall.x < 0) continue;
        auto cells = g.cells();
        cells[static_cast<std::size_t>(wall.y) * g.width() + wall.x] = OccupancyGrid::Floor;
        OccupancyGrid opened(g.width(), g.height(), std::move(cells), false);

        for (int y = 1; y < g.height() - 1; ++y)
            for (int x = 1; x < g.width() - 1; ++x) {
                if (g.cell({x, y}) != OccupancyGrid::Floor) continue;
                Isovist before = compute_isovist(g, {x, y}, 4);
                Isovist after = compute_isovist(opened, {x, y}, 4);
                for (std::size_t i = 0; i < before.window.size(); ++i)
                    if (before.window[i]) REQUIRE(after.window[i] == 1);
            }
    }
}

TEST_CASE("caster/oracle agreement is at least 98% on random grids") {
    std::size_t agree = 0, total = 0;
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        OccupancyGrid g = test::random_grid(32, 32, 0.2, seed + 50);
        Rng rng(seed);
        for (int k = 0; k < 8; ++k) {
            GridCoord origin{1 + static_cast<int>(rng.below(30)),
                             1 + static_cast<int>(rng.below(30))};
            if (g.cell(origin) != OccupancyGrid::Floor) continue;
            Isovist casted = compute_isovist(g, origin, 8);
            Isovist oracle = oracle_isovist(g, origin, 8);
            for (std::size_t i = 0; i < casted.window.size(); ++i) {
                agree += casted.window[i] == oracle.window[i];
                ++total;
            }
        }
    }
    REQUIRE(total > 0);
    CHECK(static_cast<double>(agree) / total >= 0.98);
}

TEST_CASE("isovists on empty grids have full dihedral symmetry") {
    OccupancyGrid g = test::empty_room(21, 21);
    Isovist iso = compute_isovist(g, {11, 11}, 7);
    int w = iso.size();
    auto at = [&](int u, int v) { return iso.at(u, v); };
    for (int v = 0; v < w; ++v)
        for (int u = 0; u < w; ++u) {
            CHECK(at(u, v) == at(w - 1 - u, v));
            CHECK(at(u, v) == at(u, w - 1 - v));
            CHECK(at(u, v) == at(v, u));
        }
}

TEST_CASE("rotation by zero and full turns is the identity") {
    OccupancyGrid g = test::random_grid(21, 21, 0.25, 99);
    GridCoord origin{10, 10};
    if (g.cell(origin) != OccupancyGrid::Floor) origin = {9, 10};
    Isovist iso = compute_isovist(g, origin, 6);
    CHECK(rotate_isovist(iso, 0.0).window == iso.window);
    CHECK(rotate_isovist(iso, 2 * M_PI).window == iso.window);
}

TEST_CASE("four quarter turns compose to the identity") {
    OccupancyGrid g = test::random_grid(21, 21, 0.3, 123);
    GridCoord origin{10, 10};
    if (g.cell(origin) != OccupancyGrid::Floor) origin = {10, 9};
    Isovist iso = compute_isovist(g, origin, 5);
    Isovist r = iso;
    for (int i = 0; i < 4; ++i) r = rotate_isovist(r, M_PI / 2);
    CHECK(r.window == iso.window);
    // quarter turn then back is also lossless
    CHECK(rotate_isovist(rotate_isovist(iso, M_PI / 2), -M_PI / 2).window == iso.window);
}

TEST_CASE("a quarter turn moves a lone east cell north") {
    Isovist iso;
    iso.radius = 3;
    iso.origin = {0, 0};
    iso.window.assign(49, 0);
    iso.window[3 * 7 + 5] = 1; // (center.x + 2, center.y)
    Isovist r = rotate_isovist(iso, M_PI / 2);
    int ones = 0;
    for (auto v : r.window) ones += v;
    CHECK(ones == 1);
    CHECK(r.at(3, 1) == 1); // (center.x, center.y - 2)
}

TEST_CASE("rotation errors on non-finite headings") {
    Isovist iso;
    iso.radius = 1;
    iso.window.assign(9, 0);
    CHECK_THROWS_AS(rotate_isovist(iso, std::nan("")), InvalidParams);
}

TEST_CASE("isovist preconditions") {
    OccupancyGrid g = test::empty_room(5, 5);
    CHECK_THROWS_AS(compute_isovist(g, {0, 0}, 3), OriginNotFloor);
    CHECK_THROWS_AS(compute_isovist(g, {-2, 1}, 3), OutOfBounds);
    CHECK_THROWS_AS(compute_isovist(g, {2, 2}, 0), InvalidParams);
}
