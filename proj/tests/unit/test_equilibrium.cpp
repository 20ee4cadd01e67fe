#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "evgrid/analysis.hpp"
#include "evgrid/equilibrium.hpp"
#include "evgrid/experiment.hpp"
#include "evgrid/scenario_io.hpp"
#include "support/generators.hpp"

using namespace evgrid;

namespace {

Scenario corpus9() { return load_scenario(std::string(EVGRID_SCENARIO_DIR) + "/diamond9.json"); }

std::vector<int> occupancy_multiset(const Scenario& sc, const Profile& p) {
    const Occupancy occ = derive_occupancy(sc, p);
    std::vector<int> counts(occ.station_count.begin(), occ.station_count.begin() + sc.real_station_count);
    std::sort(counts.begin(), counts.end());
    return counts;
}

}  // namespace

TEST_CASE("1-D load optimization") {
    SUBCASE("interior stationary point, alone at a balanced station") {
        LoadContext ctx{0.0, 0.0, 2.0, false, 3.0, 0.1, 5.0};
        CHECK(optimize_load_1d(ctx) == doctest::Approx((-3.0 + std::sqrt(11.0)) / 2.0).epsilon(1e-12));
        CHECK(optimize_load_1d(ctx) == doctest::Approx(0.158312).epsilon(1e-5));
    }
    SUBCASE("deep shortage clamps at the discharge floor") {
        LoadContext ctx{-100.0, 0.0, 2.0, false, 3.0, 0.1, 5.0};
        CHECK(optimize_load_1d(ctx) == doctest::Approx(-2.9).epsilon(1e-12));
    }
    SUBCASE("reference singleton load") {
        LoadContext ctx{0.937, 0.0, 2.0, false, 3.0, 0.1, 5.0};
        CHECK(optimize_load_1d(ctx) == doctest::Approx(1.0602).epsilon(1e-4));
    }
    SUBCASE("zero pricing forces zero load") {
        LoadContext ctx{3.0, 1.0, 2.0, true, 3.0, 0.1, 5.0};
        CHECK(optimize_load_1d(ctx) == 0.0);
    }
    SUBCASE("grid path matches a brute scan for fractional exponents") {
        auto rng = make_rng(5150);
        for (int trial = 0; trial < 10; ++trial) {
            LoadContext ctx;
            ctx.g = uniform_real(rng, -6.0, 6.0);
            ctx.others_load = uniform_real(rng, -2.0, 2.0);
            ctx.k = trial % 2 == 0 ? 2.0 / 3.0 : 8.0 / 3.0;
            ctx.b = 3.0;
            ctx.b_lo = 0.1;
            ctx.b_hi = 5.0;
            const double got = optimize_load_1d(ctx);
            const auto f = [&](double l) {
                return std::pow(std::abs(-ctx.g + ctx.others_load + l), ctx.k) + std::log(ctx.b_hi / (ctx.b + l));
            };
            const double lo = ctx.b_lo - ctx.b, hi = ctx.b_hi - ctx.b;
            double scan_best = f(got);
            for (int i = 0; i <= 100000; ++i) scan_best = std::min(scan_best, f(lo + i * (hi - lo) / 100000.0));
            CHECK(f(got) <= scan_best + 1e-6);
        }
    }
}

TEST_CASE("best response of a lone EV") {
    SUBCASE("congestion-only comparison with skip enabled") {
        Scenario sc;
        sc.nodes = {"s", "t"};
        sc.edges.push_back({"cheap", 0, 1, 5.0, 10.0, 1.0});
        sc.edges.push_back({"dear", 0, 1, 6.0, 20.0, 1.0});
        sc.evs.push_back({"ev1", 0, 1, 3.0, 0.1, 5.0});
        sc.options.skip_charging = true;
        finalize_scenario(sc);
        Profile p;
        p.actions = {{{1}, sc.station_index("virtual:dear"), 0.0}};
        const BestResponse br = best_response(sc, p, 0);
        CHECK(br.action.path == std::vector<int>{0});
        CHECK(sc.stations[br.action.station].is_virtual);
        CHECK(br.cost == doctest::Approx(15.0 + std::log(5.0 / 3.0)).epsilon(1e-12));
    }
    SUBCASE("the deep-shortage station dominates on the corpus network") {
        const Scenario one = with_fleet_size(corpus9(), 1);
        Profile p;
        p.actions = {{{one.edge_index("e2"), one.edge_index("e5")}, one.station_index("Q3"), 0.0}};
        const BestResponse br = best_response(one, p, 0);
        CHECK(br.action.station == one.station_index("Q2"));
        CHECK(br.action.load == doctest::Approx(-2.9).epsilon(1e-9));
    }
}

TEST_CASE("closed-form three-case station loads (reference values)") {
    CHECK(symmetric_coordinated_load(0.937, 1, 3.0, 0.1, 5.0) == doctest::Approx(1.060148).epsilon(1e-5));
    CHECK(symmetric_coordinated_load(-11.223, 4, 3.0, 0.1, 5.0) == doctest::Approx(-1.553892).epsilon(1e-5));
    CHECK(symmetric_coordinated_load(3.061, 4, 3.0, 0.1, 5.0) == doctest::Approx(0.457942).epsilon(1e-5));

    const Scenario sc = corpus9();
    const std::vector<Ev> four(4, sc.evs[0]);
    const auto q2 = restricted_station_ne(sc.stations[sc.station_index("Q2")], four);
    REQUIRE(q2.size() == 4);
    for (double l : q2) CHECK(l == doctest::Approx(-1.5539).epsilon(1e-4));
    const auto q3 = restricted_station_ne(sc.stations[sc.station_index("Q3")], four);
    for (double l : q3) CHECK(l == doctest::Approx(0.4580).epsilon(1e-3));
    const auto q1 = restricted_station_ne(sc.stations[sc.station_index("Q1")], {sc.evs[0]});
    CHECK(q1[0] == doctest::Approx(1.0602).epsilon(1e-4));
}

TEST_CASE("case-III closed form satisfies its stationarity identity") {
    auto rng = make_rng(808);
    for (int trial = 0; trial < 200; ++trial) {
        const double b_lo = uniform_real(rng, 0.1, 0.8);
        const double b = b_lo + uniform_real(rng, 0.5, 3.0);
        const double b_hi = b + uniform_real(rng, 0.5, 3.0);
        const int q = 1 + static_cast<int>(uniform_index(rng, 6));
        const double g = uniform_real(rng, -8.0, 8.0);
        const double l = symmetric_coordinated_load(g, q, b, b_lo, b_hi);
        if (l == b_lo - b || l == b_hi - b) continue;  // clamped cases
        CHECK(l == doctest::Approx((g + 1.0 / (2.0 * (b + l))) / (2.0 * q - 1.0)).epsilon(1e-10));
    }
}

TEST_CASE("restricted Nash loads are mutual best responses") {
    auto rng = make_rng(0xFEED);
    for (int trial = 0; trial < 50; ++trial) {
        Station st{"Q", 0, 1.0, 2.0, uniform_real(rng, -12.0, 12.0), false, {}};
        std::vector<Ev> members;
        const int q = 1 + static_cast<int>(uniform_index(rng, 5));
        const bool identical = uniform_index(rng, 2) == 0;
        for (int m = 0; m < q; ++m) {
            Ev ev;
            ev.name = "m" + std::to_string(m);
            if (identical && m > 0) {
                ev = members[0];
            } else {
                ev.b_lo = uniform_real(rng, 0.1, 0.6);
                ev.b = ev.b_lo + uniform_real(rng, 0.5, 3.0);
                ev.b_hi = ev.b + uniform_real(rng, 0.5, 3.0);
            }
            members.push_back(ev);
        }
        const auto loads = restricted_nash_loads(st, members);
        double sum = 0.0;
        for (double l : loads) sum += l;
        for (int m = 0; m < q; ++m) {
            LoadContext ctx{st.g, sum - loads[m], 2.0, false, members[m].b, members[m].b_lo, members[m].b_hi};
            CHECK(loads[m] == doctest::Approx(optimize_load_1d(ctx)).epsilon(1e-7));
        }
        if (identical) {
            // the Gauss-Seidel path must agree with the symmetric closed form
            std::vector<Ev> nearly = members;
            nearly[0].b += 1e-13;  // defeat the identical-members fast path
            const auto gs = restricted_nash_loads(st, nearly);
            for (int m = 0; m < q; ++m) CHECK(gs[m] == doctest::Approx(loads[m]).epsilon(1e-6));
        }
    }
}

TEST_CASE("dynamics starting at an equilibrium make no moves") {
    auto rng = make_rng(11);
    testing::GenSpec spec;
    spec.n_evs = 4;
    const Scenario sc = testing::random_scenario(rng, spec);
    const auto nes = enumerate_ne(sc);
    REQUIRE(!nes.empty());
    DynamicsOptions opts;
    const DynamicsTrace trace = run_best_response_dynamics(sc, nes[0].profile, opts);
    CHECK(trace.converged);
    CHECK(trace.rounds == 1);
    CHECK(trace.steps.empty());
}

TEST_CASE("corpus dynamics reach the reference occupancy of one-four-four") {
    const Scenario sc = corpus9();
    MultiStartOptions opts;
    opts.starts = 8;
    opts.seed = 7;
    const auto traces = multi_start_dynamics(sc, opts);
    bool found = false;
    for (const auto& trace : traces) {
        REQUIRE(trace.converged);
        if (occupancy_multiset(sc, trace.terminal) == std::vector<int>{1, 4, 4}) found = true;
        // the potential falls by more than the improvement threshold at
        // every recorded step (exactness ties it to the mover's gain)
        for (const auto& step : trace.steps) {
            CHECK(step.phi_before - step.phi_after > 0.99 * trace.epsilon);
            CHECK(step.phi_before - step.phi_after ==
                  doctest::Approx(step.cost_before - step.cost_after).epsilon(1e-9));
        }
        CHECK(is_nash(sc, trace.terminal, 1e-5).is_nash);
    }
    CHECK(found);
}

TEST_CASE("random six-EV dynamics terminate at approximate equilibria") {
    auto rng = make_rng(606);
    int converged = 0, nash = 0, total = 0;
    for (int trial = 0; trial < 15; ++trial) {
        testing::GenSpec spec;
        spec.n_evs = 6;
        spec.allow_skip = true;
        const Scenario sc = testing::random_scenario(rng, spec);
        DynamicsOptions opts;
        const auto trace = run_best_response_dynamics(sc, testing::random_valid_profile(sc, rng), opts);
        ++total;
        if (!trace.converged) continue;
        ++converged;
        if (is_nash(sc, trace.terminal, 10.0 * opts.eps).is_nash) ++nash;
        // finite improvement: moves are bounded by the potential drop over eps
        if (!trace.steps.empty()) {
            const double drop = trace.steps.front().phi_before - trace.steps.back().phi_after;
            CHECK(static_cast<double>(trace.steps.size()) <= drop / opts.eps + 1.0);
        }
    }
    CHECK(converged == total);
    CHECK(nash == converged);
}

TEST_CASE("path explosion propagates out of the best-response machinery") {
    Scenario sc;
    sc.nodes = {"s", "t"};
    for (int i = 0; i < 6; ++i) sc.edges.push_back({"p" + std::to_string(i), 0, 1, 1.0, 1.0, 1.0});
    sc.stations.push_back({"Q", 0, 1.0, 2.0, 0.0, false, {}});
    sc.evs.push_back({"ev1", 0, 1, 2.0, 0.5, 3.0});
    sc.options.path_cap = 4;
    finalize_scenario(sc);
    Profile p;
    p.actions = {{{0}, 0, 0.0}};
    try {
        best_response(sc, p, 0);
        CHECK(false);
    } catch (const error& e) {
        CHECK(e.code == errc::path_explosion);
    }
}

TEST_CASE("seeded shuffled update order also converges to an equilibrium") {
    auto rng = make_rng(360);
    testing::GenSpec spec;
    spec.n_evs = 5;
    const Scenario sc = testing::random_scenario(rng, spec);
    DynamicsOptions opts;
    opts.order = UpdateOrder::shuffled;
    opts.seed = 14;
    const auto trace = run_best_response_dynamics(sc, testing::random_valid_profile(sc, rng), opts);
    REQUIRE(trace.converged);
    CHECK(is_nash(sc, trace.terminal, 10.0 * opts.eps).is_nash);
}

TEST_CASE("non-convergence is reported through the trace") {
    const Scenario sc = corpus9();
    DynamicsOptions opts;
    opts.max_rounds = 1;
    const auto options = build_option_table(sc);
    const auto trace = run_best_response_dynamics(sc, random_profile(sc, options, 3), opts);
    CHECK(!trace.converged);
    CHECK(trace.rounds == 1);
}

TEST_CASE("exact enumeration on the corpus scenario") {
    SUBCASE("a lone EV has exactly one equilibrium") {
        const Scenario one = with_fleet_size(corpus9(), 1);
        const auto nes = enumerate_ne(one);
        REQUIRE(nes.size() == 1);
        CHECK(nes[0].profile.actions[0].station == one.station_index("Q2"));
    }
    SUBCASE("unsupported pricing and budget errors") {
        Scenario sc = corpus9();
        for (auto& st : sc.stations) st.k = 4.0 / 3.0;
        finalize_scenario(sc);
        CHECK_THROWS_AS(enumerate_ne(sc), error);
        EnumerateOptions tiny;
        tiny.budget = 10;
        CHECK_THROWS_AS(enumerate_ne(corpus9(), tiny), error);
    }
}

TEST_CASE("symmetric two-EV instance has a swap-closed equilibrium set") {
    Scenario sc;
    sc.nodes = {"s", "t"};
    sc.edges.push_back({"e1", 0, 1, 1.0, 2.0, 1.0});
    sc.edges.push_back({"e2", 0, 1, 1.0, 2.0, 1.0});
    sc.stations.push_back({"Q1", 0, 1.0, 2.0, 1.5, false, {}});
    sc.stations.push_back({"Q2", 1, 1.0, 2.0, 1.5, false, {}});
    sc.evs.push_back({"ev1", 0, 1, 2.0, 0.5, 4.0});
    sc.evs.push_back({"ev2", 0, 1, 2.0, 0.5, 4.0});
    finalize_scenario(sc);
    const auto nes = enumerate_ne(sc);
    REQUIRE(!nes.empty());
    std::multiset<std::pair<int, int>> patterns;
    for (const auto& ne : nes) patterns.insert({ne.occupancy[0], ne.occupancy[1]});
    for (const auto& [a, b] : patterns) CHECK(patterns.count({b, a}) == patterns.count({a, b}));
}

TEST_CASE("enumeration cross-validates multi-start dynamics on four-EV instances") {
    auto rng = make_rng(404);
    for (int trial = 0; trial < 6; ++trial) {
        testing::GenSpec spec;
        spec.n_evs = 4;
        const Scenario sc = testing::random_scenario(rng, spec);
        EnumerateOptions eopts;
        eopts.tol = 1e-5;
        const auto nes = enumerate_ne(sc, eopts);
        for (const auto& ne : nes) CHECK(is_nash(sc, ne.profile, 1e-4).is_nash);
        REQUIRE(!nes.empty());

        MultiStartOptions ms;
        ms.starts = 16;
        ms.seed = 1000 + trial;
        ms.dynamics.eps = 1e-9;
        const auto traces = multi_start_dynamics(sc, ms);
        double lo = 1e300, hi = -1e300;
        for (const auto& ne : nes) {
            lo = std::min(lo, ne.social);
            hi = std::max(hi, ne.social);
        }
        for (const auto& trace : traces) {
            REQUIRE(trace.converged);
            // the terminal's assignment must appear among the enumerated equilibria
            bool matched = false;
            for (const auto& ne : nes) {
                bool same = true;
                for (std::size_t i = 0; i < sc.evs.size() && same; ++i) {
                    same = ne.profile.actions[i].station == trace.terminal.actions[i].station &&
                           ne.profile.actions[i].path == trace.terminal.actions[i].path;
                }
                if (same) {
                    matched = true;
                    for (std::size_t i = 0; i < sc.evs.size(); ++i)
                        CHECK(trace.terminal.actions[i].load ==
                              doctest::Approx(ne.profile.actions[i].load).epsilon(5e-3));
                    break;
                }
            }
            CHECK(matched);
            const double cost = social_cost(sc, trace.terminal);
            CHECK(cost >= lo - 1e-4 * std::max(1.0, std::abs(lo)));
            CHECK(cost <= hi + 1e-4 * std::max(1.0, std::abs(hi)));
        }
    }
}

TEST_CASE("no sampled action beats the best response") {
    auto rng = make_rng(71);
    testing::GenSpec spec;
    spec.n_evs = 3;
    const Scenario sc = testing::random_scenario(rng, spec);
    Profile p = testing::random_valid_profile(sc, rng);
    const int i = 0;
    const BestResponse br = best_response(sc, p, i);
    const auto options = ev_options(sc, i);
    Occupancy occ = derive_occupancy(sc, p);
    occupancy_remove(occ, sc, i, p.actions[i]);
    for (int sample = 0; sample < 100000; ++sample) {
        const auto& opt = options[uniform_index(rng, options.size())];
        Action a{opt.path, opt.station, 0.0};
        if (!sc.stations[opt.station].is_virtual)
            a.load = uniform_real(rng, sc.evs[i].load_min(), sc.evs[i].load_max());
        occupancy_add(occ, sc, i, a);
        const double cost = ev_cost(sc, occ, i, a).total;
        occupancy_remove(occ, sc, i, a);
        CHECK(cost >= br.cost - 1e-6);
    }
}
