#include <doctest.h>

#include <cmath>

#include "evgrid/analysis.hpp"
#include "evgrid/experiment.hpp"
#include "evgrid/scenario_io.hpp"
#include "support/generators.hpp"

using namespace evgrid;

namespace {

Scenario corpus9() { return load_scenario(std::string(EVGRID_SCENARIO_DIR) + "/diamond9.json"); }

}  // namespace

TEST_CASE("social optimum of a lone EV equals its best response to nobody") {
    const Scenario one = with_fleet_size(corpus9(), 1);
    const OptimumResult opt = social_optimum(one);
    Profile idle;
    idle.actions = {{{one.edge_index("e2"), one.edge_index("e5")}, one.station_index("Q3"), 0.0}};
    const BestResponse br = best_response(one, idle, 0);
    CHECK(opt.value == doctest::Approx(br.cost).epsilon(1e-9));
    CHECK(opt.profile.actions[0].station == br.action.station);
    CHECK(opt.profile.actions[0].load == doctest::Approx(br.action.load).epsilon(1e-6));
}

TEST_CASE("station optimum may be asymmetric; the oracle beats the symmetric point") {
    // two identical EVs, a single station, zero ground: the -sum l^2 term
    // rewards splitting the loads
    Scenario sc;
    sc.nodes = {"s", "t"};
    sc.edges.push_back({"e", 0, 1, 1.0, 2.0, 1.0});
    sc.stations.push_back({"Q", 0, 1.0, 2.0, 0.0, false, {}});
    sc.evs.push_back({"ev1", 0, 1, 3.0, 0.1, 5.0});
    sc.evs.push_back({"ev2", 0, 1, 3.0, 0.1, 5.0});
    finalize_scenario(sc);

    const OptimumResult opt = social_optimum(sc);

    // symmetric stationary point of the station objective
    const double l_sym = symmetric_coordinated_load(0.0, 2, 3.0, 0.1, 5.0);
    Profile sym;
    sym.actions = {{{0}, 0, l_sym}, {{0}, 0, l_sym}};
    CHECK(opt.value <= social_cost(sc, sym) + 1e-9);

    // dense 2-D grid oracle
    double grid_best = 1e300;
    const int n = 320;
    for (int i = 0; i <= n; ++i) {
        for (int j = 0; j <= n; ++j) {
            Profile p;
            p.actions = {{{0}, 0, -2.9 + i * 4.9 / n}, {{0}, 0, -2.9 + j * 4.9 / n}};
            grid_best = std::min(grid_best, social_cost(sc, p));
        }
    }
    CHECK(opt.value <= grid_best + 1e-6);
    // asymmetry is strictly profitable here
    CHECK(std::abs(opt.profile.actions[0].load - opt.profile.actions[1].load) > 0.1);
}

TEST_CASE("lone EV prices of anarchy and stability are one") {
    const Scenario one = with_fleet_size(corpus9(), 1);
    const BoundReport r = analyze_efficiency(one);
    CHECK(r.poa_empirical == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.pos_empirical == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.ne_count == 1);
}

TEST_CASE("bound arithmetic on the corpus scenario") {
    const Scenario sc = corpus9();
    const BoundReport r = analyze_efficiency(sc);
    const double gsq = 0.937 * 0.937 + 11.223 * 11.223 + 3.061 * 3.061;
    CHECK(gsq == doctest::Approx(136.203419).epsilon(1e-9));
    CHECK(r.poa_bound == doctest::Approx(3.0 + 12.0 * 25.0 + 4.5 * gsq / 9.0).epsilon(1e-12));
    CHECK(r.poa_bound == doctest::Approx(371.10).epsilon(1e-4));
    CHECK(r.pos_bound == doctest::Approx(2.0 * 26.0 + 2.0 * gsq / 9.0).epsilon(1e-12));
    CHECK(r.pos_bound == doctest::Approx(82.27).epsilon(1e-4));
    CHECK(r.unit_cost_assumption_holds);
    CHECK(r.exact);
    CHECK(r.poa_empirical >= 1.0);
    CHECK(r.poa_empirical <= r.poa_bound);
    CHECK(r.pos_empirical <= r.poa_empirical);
    CHECK(r.pos_empirical <= r.pos_bound);
}

TEST_CASE("oracle dominance and ratio ordering on random instances") {
    auto rng = make_rng(12);
    for (int trial = 0; trial < 8; ++trial) {
        testing::GenSpec spec;
        spec.n_evs = 2 + static_cast<int>(uniform_index(rng, 3));
        const Scenario sc = testing::random_scenario(rng, spec);
        const OptimumResult opt = social_optimum(sc);
        const auto nes = enumerate_ne(sc);
        REQUIRE(!nes.empty());
        for (const auto& ne : nes) CHECK(opt.value <= ne.social + 1e-6 * std::max(1.0, std::abs(ne.social)));
        const BoundReport r = analyze_efficiency(sc);
        // min/max ordering of the ratios only means anything above zero cost
        if (r.opt > 0.0) CHECK(r.pos_empirical <= r.poa_empirical + 1e-12);
    }
}

TEST_CASE("balance of the closed-form load profile matches the reference variances") {
    const Scenario sc = corpus9();
    const Profile paper = testing::reference_profile_441(sc, 1.060148, -1.553892, 0.457942);
    const BalanceReport r = balance_report(sc, paper);

    CHECK(r.threshold == doctest::Approx(11.18034).epsilon(1e-6));
    CHECK(r.v0_all == doctest::Approx(136.203419).epsilon(1e-9));
    CHECK(r.vne_all == doctest::Approx(26.60).epsilon(2e-3));

    // only the deep-shortage station is bad
    int bad = 0;
    for (const auto& row : r.stations) bad += row.bad_initial;
    CHECK(bad == 1);
    CHECK(r.stations[sc.station_index("Q2")].bad_initial);

    // residuals: -0.123, -5.007 (reported as 5.007), 1.229
    CHECK(r.stations[sc.station_index("Q1")].g_ne == doctest::Approx(-0.123).epsilon(2e-3));
    CHECK(std::abs(r.stations[sc.station_index("Q2")].g_ne) == doctest::Approx(5.007).epsilon(1e-3));
    CHECK(r.stations[sc.station_index("Q3")].g_ne == doctest::Approx(1.229).epsilon(1e-3));

    // three-case margin of the bad station and the guarantee check
    CHECK(r.stations[sc.station_index("Q2")].mu == doctest::Approx(-5.6115).epsilon(1e-6));
    CHECK(r.mu_sq_sum == doctest::Approx(31.4889).epsilon(1e-4));
    CHECK(r.v0_bad == doctest::Approx(125.9557).epsilon(1e-4));
    CHECK(r.vne_bad == doctest::Approx(25.0744).epsilon(1e-3));
    CHECK(r.bad_station_bound_ok);  // 25.07 < 125.96 - 31.49 = 94.47
    CHECK(r.good_stay_good);
    CHECK(r.guarantees_applicable);
}

TEST_CASE("residual identity links station residuals to fleet loads") {
    auto rng = make_rng(55);
    for (int trial = 0; trial < 10; ++trial) {
        testing::GenSpec spec;
        spec.n_evs = 3;
        spec.identical_fleet = true;
        const Scenario sc = testing::random_scenario(rng, spec);
        const auto nes = enumerate_ne(sc);
        REQUIRE(!nes.empty());
        const BalanceReport r = balance_report(sc, nes[0].profile);
        double moved = 0.0, loads = 0.0;
        for (const auto& row : r.stations) moved += row.g - row.g_ne;
        for (const auto& a : nes[0].profile.actions) loads += a.load;
        CHECK(moved == doctest::Approx(loads).epsilon(1e-9));
    }
}

TEST_CASE("dynamics-mode efficiency report is flagged approximate") {
    Scenario sc = corpus9();
    sc = with_fleet_size(sc, 3);
    sc = with_pricing(sc, 4.0 / 3.0);  // no exact enumeration for this exponent
    EfficiencyOptions opts;
    opts.mode = NeSetMode::dynamics;
    opts.multistart.starts = 8;
    opts.multistart.seed = 5;
    const BoundReport r = analyze_efficiency(sc, opts);
    CHECK(!r.exact);
    CHECK(r.ne_count >= 1);
    CHECK(r.pos_empirical <= r.poa_empirical + 1e-12);
}
