#include <doctest.h>

#include <algorithm>
#include <set>

#include "evgrid/scenario_io.hpp"
#include "support/generators.hpp"

using namespace evgrid;

namespace {

Scenario corpus9() { return load_scenario(std::string(EVGRID_SCENARIO_DIR) + "/diamond9.json"); }

// exhaustive recursive oracle for simple-path enumeration
void dfs_oracle(const Scenario& sc, int node, int t, std::vector<char>& visited, std::vector<int>& path,
                std::set<std::vector<int>>& out) {
    if (node == t && !path.empty()) {
        out.insert(path);
        return;
    }
    for (std::size_t e = 0; e < sc.edges.size(); ++e) {
        if (sc.edges[e].tail != node) continue;
        const int v = sc.edges[e].head;
        if (v == t) {
            path.push_back(static_cast<int>(e));
            out.insert(path);
            path.pop_back();
            continue;
        }
        if (visited[v]) continue;
        visited[v] = 1;
        path.push_back(static_cast<int>(e));
        dfs_oracle(sc, v, t, visited, path, out);
        path.pop_back();
        visited[v] = 0;
    }
}

}  // namespace

TEST_CASE("corpus9 scenario validates and enumerates the three paths") {
    const Scenario sc = corpus9();
    CHECK(sc.nodes.size() == 4);
    CHECK(sc.edges.size() == 5);
    CHECK(sc.real_station_count == 3);
    CHECK(sc.evs.size() == 9);

    const auto paths = enumerate_paths(sc, sc.node_index("s"), sc.node_index("t"), 100);
    REQUIRE(paths.size() == 3);
    const int e1 = sc.edge_index("e1"), e2 = sc.edge_index("e2"), e3 = sc.edge_index("e3"),
              e4 = sc.edge_index("e4"), e5 = sc.edge_index("e5");
    CHECK(paths[0] == std::vector<int>{e1, e4});
    CHECK(paths[1] == std::vector<int>{e2, e3, e4});
    CHECK(paths[2] == std::vector<int>{e2, e5});

    // one station reachable per path, so nine EVs have three options each
    const auto options = ev_options(sc, 0);
    CHECK(options.size() == 3);
}

TEST_CASE("degenerate and tiny path enumerations") {
    Scenario sc = corpus9();
    const auto same = enumerate_paths(sc, sc.node_index("s"), sc.node_index("s"), 10);
    REQUIRE(same.size() == 1);
    CHECK(same[0].empty());

    Scenario two;
    two.nodes = {"a", "b"};
    two.edges.push_back({"e", 0, 1, 1.0, 1.0, 1.0});
    two.stations.push_back({"Q", 0, 1.0, 2.0, 0.0, false, {}});
    two.evs.push_back({"ev1", 0, 1, 2.0, 0.5, 3.0});
    finalize_scenario(two);
    const auto paths = enumerate_paths(two, 0, 1, 10);
    REQUIRE(paths.size() == 1);
    CHECK(paths[0] == std::vector<int>{0});
}

TEST_CASE("path cap raises path_explosion") {
    Scenario sc;
    sc.nodes = {"s", "t"};
    for (int i = 0; i < 4; ++i) sc.edges.push_back({"p" + std::to_string(i), 0, 1, 1.0, 1.0, 1.0});
    sc.stations.push_back({"Q", 0, 1.0, 2.0, 0.0, false, {}});
    sc.evs.push_back({"ev1", 0, 1, 2.0, 0.5, 3.0});
    finalize_scenario(sc);
    CHECK_THROWS_WITH_AS(enumerate_paths(sc, 0, 1, 3), doctest::Contains("simple paths"), error);
    try {
        enumerate_paths(sc, 0, 1, 3);
    } catch (const error& e) {
        CHECK(e.code == errc::path_explosion);
    }
}

TEST_CASE("validation rejects the named edge cases with field paths") {
    const std::string base = std::string(EVGRID_SCENARIO_DIR) + "/diamond9.json";
    Scenario good = load_scenario(base);

    SUBCASE("battery floor must be positive") {
        good.evs[2].b_lo = 0.0;
        CHECK_THROWS_WITH_AS(finalize_scenario(good), doctest::Contains("evs[2].b_lo"), error);
    }
    SUBCASE("floor above capacity") {
        good.evs[0].b_lo = 6.0;
        CHECK_THROWS_WITH_AS(finalize_scenario(good), doctest::Contains("evs[0].b_hi"), error);
    }
    SUBCASE("nonpositive service rate") {
        good.stations[1].sigma = 0.0;
        CHECK_THROWS_WITH_AS(finalize_scenario(good), doctest::Contains("stations[1].sigma"), error);
    }
    SUBCASE("nonpositive pricing exponent") {
        good.stations[0].k = -1.0;
        CHECK_THROWS_WITH_AS(finalize_scenario(good), doctest::Contains("stations[0].k"), error);
    }
    SUBCASE("congestion exponent below one") {
        good.edges[0].d = 0.5;
        CHECK_THROWS_WITH_AS(finalize_scenario(good), doctest::Contains("edges[0].d"), error);
    }
    SUBCASE("disconnected origin/destination") {
        good.evs[0].origin = good.node_index("t");
        good.evs[0].dest = good.node_index("s");
        CHECK_THROWS_WITH_AS(finalize_scenario(good), doctest::Contains("not reachable"), error);
    }
    SUBCASE("station on edge absent from the network") {
        const std::string doc = R"({"nodes":["a","b"],
            "edges":[{"id":"e","tail":"a","head":"b","a":1,"b":1}],
            "stations":[{"id":"Q","edge":"missing","sigma":1}],
            "evs":[{"id":"x","s":"a","t":"b","b":2,"b_lo":0.5,"b_hi":3}]})";
        CHECK_THROWS_WITH_AS(parse_scenario(doc), doctest::Contains("absent from network"), error);
    }
}

TEST_CASE("skip charging synthesizes one virtual station per edge") {
    Scenario sc = corpus9();
    sc.options.skip_charging = true;
    finalize_scenario(sc);
    CHECK(sc.stations.size() == 3 + 5);
    int virtual_count = 0;
    for (const auto& st : sc.stations)
        if (st.is_virtual) {
            ++virtual_count;
            CHECK(std::isinf(st.sigma));
            CHECK(st.k == 0.0);
        }
    CHECK(virtual_count == 5);

    // virtual stations demand zero load
    Action a{{sc.edge_index("e1"), sc.edge_index("e4")}, sc.station_index("virtual:e1"), 0.5};
    CHECK_THROWS_WITH_AS(validate_action(sc, 0, a), doctest::Contains("zero load"), error);
    a.load = 0.0;
    CHECK_NOTHROW(validate_action(sc, 0, a));
}

TEST_CASE("action validation enforces path and bound invariants") {
    const Scenario sc = corpus9();
    const int e1 = sc.edge_index("e1"), e4 = sc.edge_index("e4"), e5 = sc.edge_index("e5");
    const int q1 = sc.station_index("Q1"), q2 = sc.station_index("Q2");

    CHECK_NOTHROW(validate_action(sc, 0, {{e1, e4}, q2, 1.0}));
    CHECK_THROWS_WITH_AS(validate_action(sc, 0, {{e1, e4}, q1, 0.0}), doctest::Contains("station"), error);
    CHECK_THROWS_WITH_AS(validate_action(sc, 0, {{e1, e5}, q2, 0.0}), doctest::Contains("contiguous"), error);
    CHECK_THROWS_WITH_AS(validate_action(sc, 0, {{e1}, q2, 0.0}), doctest::Contains("destination"), error);
    CHECK_THROWS_WITH_AS(validate_action(sc, 0, {{e1, e4}, q2, 2.5}), doctest::Contains("bounds"), error);
    CHECK_THROWS_WITH_AS(validate_action(sc, 0, {{e1, e4}, q2, -3.0}), doctest::Contains("bounds"), error);
}

TEST_CASE("occupancy of the reference nine-EV split") {
    const Scenario sc = corpus9();
    const Profile p = testing::reference_profile_441(sc, 1.060148, -1.553892, 0.457942);
    for (int i = 0; i < 9; ++i) CHECK_NOTHROW(validate_action(sc, i, p.actions[i]));
    const Occupancy occ = derive_occupancy(sc, p);
    CHECK(occ.edge_count[sc.edge_index("e2")] == 5);
    CHECK(occ.edge_count[sc.edge_index("e1")] == 4);
    CHECK(occ.edge_count[sc.edge_index("e4")] == 5);
    CHECK(occ.station_count[sc.station_index("Q3")] == 4);
    CHECK(occ.station_load[sc.station_index("Q2")] == doctest::Approx(4 * -1.553892).epsilon(1e-12));
    CHECK(occ.station_members[sc.station_index("Q1")] == std::vector<int>{4});
}

TEST_CASE("occupancy conservation on random profiles") {
    auto rng = make_rng(20250811);
    for (int trial = 0; trial < 50; ++trial) {
        testing::GenSpec spec;
        spec.n_evs = 1 + static_cast<int>(uniform_index(rng, 6));
        spec.allow_skip = true;
        spec.latency_exponents = {1.0, 2.0};
        spec.pricing_exponents = {2.0 / 3.0, 4.0 / 3.0, 2.0, 8.0 / 3.0};
        const Scenario sc = testing::random_scenario(rng, spec);
        const Profile p = testing::random_valid_profile(sc, rng);
        const Occupancy occ = derive_occupancy(sc, p);

        double load_sum = 0.0, l_sum = 0.0;
        int edge_sum = 0;
        std::size_t path_sum = 0, member_sum = 0;
        for (double L : occ.station_load) load_sum += L;
        for (const auto& a : p.actions) {
            l_sum += a.load;
            path_sum += a.path.size();
        }
        for (int c : occ.edge_count) edge_sum += c;
        for (const auto& m : occ.station_members) member_sum += m.size();
        CHECK(load_sum == doctest::Approx(l_sum).epsilon(1e-12));
        CHECK(edge_sum == static_cast<int>(path_sum));
        CHECK(member_sum == p.actions.size());
    }
}

TEST_CASE("enumerate_paths matches the exhaustive DFS oracle") {
    auto rng = make_rng(77);
    for (int trial = 0; trial < 40; ++trial) {
        // random digraph on <= 8 nodes with random edges
        Scenario sc;
        const int n_nodes = 3 + static_cast<int>(uniform_index(rng, 6));
        for (int v = 0; v < n_nodes; ++v) sc.nodes.push_back("n" + std::to_string(v));
        const int n_edges = 4 + static_cast<int>(uniform_index(rng, 9));
        for (int e = 0; e < n_edges; ++e) {
            const int tail = static_cast<int>(uniform_index(rng, n_nodes));
            int head = static_cast<int>(uniform_index(rng, n_nodes));
            if (head == tail) head = (head + 1) % n_nodes;
            sc.edges.push_back({"e" + std::to_string(e), tail, head, 1.0, 1.0, 1.0});
        }

        std::set<std::vector<int>> oracle;
        std::vector<char> visited(n_nodes, 0);
        std::vector<int> path;
        visited[0] = 1;
        dfs_oracle(sc, 0, n_nodes - 1, visited, path, oracle);

        std::vector<std::vector<int>> got;
        try {
            got = enumerate_paths(sc, 0, n_nodes - 1, 100000);
        } catch (const error&) {
            continue;  // unreachable destination is irrelevant here
        }
        const std::set<std::vector<int>> got_set(got.begin(), got.end());
        CHECK(got_set.size() == got.size());  // each path exactly once
        CHECK(got_set == oracle);
        CHECK(std::is_sorted(got.begin(), got.end()));  // lexicographic order
    }
}
