#include "helpers.hpp"

#include "isoseq/pathgen.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace isoseq;

TEST_CASE("exact path weights order correctly") {
    PathWeight a{1, 0}, b{0, 1};        // 1 vs sqrt(2)
    CHECK(a < b);
    CHECK_FALSE(b < a);
    PathWeight c{3, 0}, d{0, 2};        // 3 vs 2.828...
    CHECK(d < c);
    PathWeight e{2, 1}, f{2, 1};
    CHECK(e == f);
    CHECK_FALSE(e < f);
    CHECK(PathWeight{7, 5}.value() == Catch::Approx(7 + 5 * std::sqrt(2.0)));
}

TEST_CASE("corridor graph has unit edges") {
    OccupancyGrid g = test::make_grid("#####\n"
                                      "#...#\n"
                                      "#####");
    RouteGraph graph = build_route_graph(g);
    CHECK(graph.node_count() == 3);
    CHECK(graph.edge_count() == 2);
}

TEST_CASE("2x2 block has full adjacency") {
    OccupancyGrid g = test::make_grid("####\n"
                                      "#..#\n"
                                      "#..#\n"
                                      "####");
    RouteGraph graph = build_route_graph(g);
    CHECK(graph.node_count() == 4);
    CHECK(graph.edge_count() == 6); // 4 orthogonal + 2 diagonal
}

TEST_CASE("missing corner forbids the diagonal") {
    // L-shape: (1,1), (1,2), (2,2); diagonal (1,1)-(2,2) has partner (2,1) missing
    OccupancyGrid g = test::make_grid("####\n"
                                      "#.##\n"
                                      "#..#\n"
                                      "####");
    RouteGraph graph = build_route_graph(g);
    CHECK(graph.node_count() == 3);
    CHECK(graph.edge_count() == 2);
    bool saw_diagonal = false;
    graph.for_each_neighbor({1, 1}, [&](GridCoord q, PathWeight) {
        if (q == GridCoord{2, 2}) saw_diagonal = true;
    });
    CHECK_FALSE(saw_diagonal);
}

TEST_CASE("no floor cells is an error") {
    CHECK_THROWS_AS(build_route_graph(test::make_grid("###\n###\n###")), NoFloor);
}

TEST_CASE("dijkstra on a straight corridor") {
    OccupancyGrid g = test::make_grid("########\n"
                                      "#......#\n"
                                      "########");
    RouteGraph graph = build_route_graph(g);
    Trajectory t = dijkstra_shortest_path(graph, {1, 1}, {6, 1});
    REQUIRE(t.points.size() == 6);
    CHECK(trajectory_weight(t) == PathWeight{5, 0});
    CHECK(trajectory_valid(t, g));
}

TEST_CASE("start equals goal yields a single-point path of weight zero") {
    OccupancyGrid g = test::empty_room(4, 4);
    RouteGraph graph = build_route_graph(g);
    Trajectory t = dijkstra_shortest_path(graph, {2, 2}, {2, 2});
    REQUIRE(t.points.size() == 1);
    CHECK(trajectory_weight(t) == PathWeight{});
}

TEST_CASE("open room corner to corner goes all-diagonal") {
    OccupancyGrid g = test::empty_room(4, 4);
    RouteGraph graph = build_route_graph(g);
    Trajectory t = dijkstra_shortest_path(graph, {1, 1}, {4, 4});
    CHECK(trajectory_weight(t) == PathWeight{0, 3});
    auto fw = test::floyd_warshall(graph);
    REQUIRE(fw.between({1, 1}, {4, 4}).has_value());
    CHECK(*fw.between({1, 1}, {4, 4}) == PathWeight{0, 3});
}

TEST_CASE("unreachable goals throw") {
    OccupancyGrid g = test::make_grid("#####\n"
                                      "#.#.#\n"
                                      "#####");
    RouteGraph graph = build_route_graph(g);
    CHECK_THROWS_AS(dijkstra_shortest_path(graph, {1, 1}, {3, 1}), Unreachable);
}

TEST_CASE("dijkstra equals floyd-warshall on random small grids") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        OccupancyGrid g = test::random_grid(11, 11, 0.35, seed + 17);
        RouteGraph graph = build_route_graph(g);
        auto fw = test::floyd_warshall(graph);
        auto nodes = graph.nodes();
        Rng rng(seed);
        for (int q = 0; q < 40; ++q) {
            GridCoord a = nodes[rng.below(nodes.size())];
            GridCoord b = nodes[rng.below(nodes.size())];
            auto expect = fw.between(a, b);
            if (!expect) {
                CHECK_THROWS_AS(dijkstra_shortest_path(graph, a, b), Unreachable);
            } else {
                Trajectory t = dijkstra_shortest_path(graph, a, b);
                CHECK(trajectory_weight(t) == *expect);
            }
        }
    }
}

TEST_CASE("on thin mazes dijkstra reduces to BFS") {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        OccupancyGrid g = test::thin_maze(6, 5, seed + 3);
        RouteGraph graph = build_route_graph(g);
        auto nodes = graph.nodes();
        Rng rng(seed);
        for (int q = 0; q < 20; ++q) {
            GridCoord a = nodes[rng.below(nodes.size())];
            GridCoord b = nodes[rng.below(nodes.size())];
            auto steps = test::bfs_steps(graph, a, b);
            REQUIRE(steps.has_value()); // mazes are connected
            Trajectory t = dijkstra_shortest_path(graph, a, b);
            PathWeight w = trajectory_weight(t);
            CHECK(w.diag == 0);
            CHECK(w.ortho == *steps);
        }
    }
}

TEST_CASE("reversing start and goal preserves the weight") {
    OccupancyGrid g = test::random_grid(13, 13, 0.3, 77);
    RouteGraph graph = build_route_graph(g);
    auto nodes = graph.nodes();
    Rng rng(4);
    for (int q = 0; q < 25; ++q) {
        GridCoord a = nodes[rng.below(nodes.size())];
        GridCoord b = nodes[rng.below(nodes.size())];
        try {
            PathWeight w1 = trajectory_weight(dijkstra_shortest_path(graph, a, b));
            PathWeight w2 = trajectory_weight(dijkstra_shortest_path(graph, b, a));
            CHECK(w1 == w2);
        } catch (const Unreachable&) {
        }
    }
}

TEST_CASE("random trajectory sampling is deterministic and valid") {
    OccupancyGrid g = test::random_grid(20, 16, 0.2, 5);
    auto a = sample_random_trajectories(g, 12, 99);
    auto b = sample_random_trajectories(g, 12, 99);
    REQUIRE(a.size() == 12);
    REQUIRE(b.size() == 12);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].points == b[i].points);
        CHECK(trajectory_valid(a[i], g));
    }
    auto c = sample_random_trajectories(g, 12, 100);
    bool any_different = false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].points != c[i].points) any_different = true;
    CHECK(any_different);
}

TEST_CASE("sampling respects disconnected components") {
    OccupancyGrid g = test::make_grid("#########\n"
                                      "#...#...#\n"
                                      "#...#...#\n"
                                      "#...#...#\n"
                                      "#########");
    auto trajs = sample_random_trajectories(g, 8, 1234);
    for (const auto& t : trajs) {
        bool left = t.points.front().x < 4;
        for (GridCoord p : t.points) CHECK((p.x < 4) == left);
    }
}

TEST_CASE("headings follow the atan2 image convention") {
    Trajectory east{{ {1, 1}, {2, 1}, {3, 1}, {4, 1} }};
    CHECK(heading_at(east, 1) == Catch::Approx(0.0));
    CHECK(heading_at(east, 0) == Catch::Approx(0.0));
    CHECK(heading_at(east, 3) == Catch::Approx(0.0));

    Trajectory south{{ {1, 1}, {1, 2}, {1, 3} }};
    CHECK(heading_at(south, 1) == Catch::Approx(M_PI / 2));

    // east then south: central difference bisects to pi/4
    Trajectory corner{{ {1, 1}, {2, 1}, {2, 2} }};
    CHECK(heading_at(corner, 1) == Catch::Approx(M_PI / 4));
    CHECK_THROWS_AS(heading_at(corner, 3), OutOfBounds);
}

TEST_CASE("trajectory text files parse, interpolate and validate") {
    OccupancyGrid g = test::empty_room(8, 8);
    SECTION("adjacent points pass through") {
        Trajectory t = parse_trajectory_text("1,1\n2,1\n3,2 # comment\n", g);
        REQUIRE(t.points.size() == 3);
        CHECK(t.points[2] == GridCoord{3, 2});
    }
    SECTION("gaps are filled with supercover cells") {
        Trajectory t = parse_trajectory_text("1,1\n6,1\n", g);
        REQUIRE(t.points.size() == 6);
        for (std::size_t i = 0; i < t.points.size(); ++i)
            CHECK(t.points[i] == GridCoord{1 + static_cast<int>(i), 1});
        CHECK(trajectory_valid(t, g));
    }
    SECTION("diagonal gaps stay 8-adjacent") {
        Trajectory t = parse_trajectory_text("1,1\n5,4\n", g);
        CHECK(trajectory_valid(t, g));
        CHECK(t.points.front() == GridCoord{1, 1});
        CHECK(t.points.back() == GridCoord{5, 4});
    }
    SECTION("walls are rejected") {
        CHECK_THROWS_AS(parse_trajectory_text("0,0\n1,1\n", g), FormatError);
    }
    SECTION("malformed lines are rejected") {
        CHECK_THROWS_AS(parse_trajectory_text("1;1\n2,1\n", g), FormatError);
        CHECK_THROWS_AS(parse_trajectory_text("1,1\n", g), FormatError);
    }
}
