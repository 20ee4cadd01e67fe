#ifndef EVGRID_TESTS_GENERATORS_HPP
#define EVGRID_TESTS_GENERATORS_HPP

// Seeded scenario/profile generators shared by the unit and acceptance
// suites. Everything here is test-only scaffolding; the instances are small
// enough for the exact solvers.

#include <random>
#include <string>
#include <vector>

#include "evgrid/model.hpp"

namespace evgrid::testing {

struct GenSpec {
    int n_evs = 4;
    std::vector<double> latency_exponents{1.0};
    std::vector<double> pricing_exponents{2.0};
    bool identical_fleet = false;
    bool force_bad_station = false;  // plant one station above the good/bad threshold
    bool dominant_bad_station = true;  // size the imbalance to dominate any travel-cost swing
    bool allow_skip = false;
    double ground_scale = 4.0;
};

inline Scenario random_scenario(std::mt19937_64& rng, const GenSpec& spec) {
    Scenario sc;
    const int topology = static_cast<int>(uniform_index(rng, 3));

    const auto add_edge = [&](const std::string& id, int tail, int head) {
        Edge e;
        e.name = id;
        e.tail = tail;
        e.head = head;
        e.a = uniform_real(rng, 0.3, 2.5);
        e.b = uniform_real(rng, 1.0, 5.0);
        e.d = spec.latency_exponents[uniform_index(rng, spec.latency_exponents.size())];
        sc.edges.push_back(e);
    };
    const auto add_station = [&](const std::string& id, int edge) {
        Station st;
        st.name = id;
        st.edge = edge;
        st.sigma = uniform_real(rng, 0.5, 2.0);
        st.k = spec.pricing_exponents[uniform_index(rng, spec.pricing_exponents.size())];
        sc.stations.push_back(st);
    };

    if (topology == 0) {  // two parallel roads, one station each
        sc.nodes = {"s", "t"};
        add_edge("e1", 0, 1);
        add_edge("e2", 0, 1);
        add_station("Q1", 0);
        add_station("Q2", 1);
    } else if (topology == 1) {  // three parallel roads
        sc.nodes = {"s", "t"};
        add_edge("e1", 0, 1);
        add_edge("e2", 0, 1);
        add_edge("e3", 0, 1);
        add_station("Q1", 0);
        add_station("Q2", 1);
        add_station("Q3", 2);
    } else {  // diamond with a transfer road
        sc.nodes = {"s", "u", "v", "t"};
        add_edge("e1", 0, 1);
        add_edge("e2", 0, 2);
        add_edge("e3", 2, 1);
        add_edge("e4", 1, 3);
        add_edge("e5", 2, 3);
        add_station("Q1", 2);
        add_station("Q2", 0);
        add_station("Q3", 4);
    }

    const auto make_ev = [&](int i) {
        Ev ev;
        ev.name = "ev" + std::to_string(i + 1);
        ev.origin = 0;
        ev.dest = static_cast<int>(sc.nodes.size()) - 1;
        ev.b_lo = uniform_real(rng, 0.1, 0.6);
        ev.b = ev.b_lo + uniform_real(rng, 1.0, 3.0);
        ev.b_hi = ev.b + uniform_real(rng, 1.2, 2.8);
        return ev;
    };
    Ev shared = make_ev(0);
    for (int i = 0; i < spec.n_evs; ++i) {
        Ev ev = spec.identical_fleet ? shared : make_ev(i);
        ev.name = "ev" + std::to_string(i + 1);
        sc.evs.push_back(ev);
    }

    double b_min = sc.evs[0].b_lo;
    for (const auto& ev : sc.evs) b_min = std::min(b_min, ev.b_lo);
    const double threshold = std::sqrt(5.0) / (2.0 * b_min);

    // Imbalance large enough that skipping the bad station is never a best
    // response: the first visitor's marginal gain, at least |l|(2|g| - |l|)
    // with |l| >= 1, must beat any congestion/queue/risk swing.
    double cost_swing = 0.0;
    for (const auto& e : sc.edges) cost_swing += e.a * spec.n_evs + e.b;
    double sigma_min = sc.stations[0].sigma;
    for (const auto& st : sc.stations) sigma_min = std::min(sigma_min, st.sigma);
    cost_swing += spec.n_evs / sigma_min + 8.0;

    for (std::size_t j = 0; j < sc.stations.size(); ++j) {
        const double sign = uniform_index(rng, 2) == 0 ? -1.0 : 1.0;
        if (spec.force_bad_station && j == 0) {
            double magnitude = threshold * uniform_real(rng, 1.3, 1.7);
            if (spec.dominant_bad_station) magnitude = std::max(magnitude, 0.5 * cost_swing + 2.0);
            sc.stations[j].g = sign * magnitude;
        } else if (spec.force_bad_station) {
            sc.stations[j].g = sign * uniform_real(rng, 0.0, 0.4 * threshold);
        } else {
            sc.stations[j].g = sign * uniform_real(rng, 0.0, spec.ground_scale);
        }
    }

    sc.options.skip_charging = spec.allow_skip && uniform_index(rng, 2) == 0;
    finalize_scenario(sc);
    return sc;
}

inline Profile random_valid_profile(const Scenario& sc, std::mt19937_64& rng) {
    Profile p;
    p.actions.resize(sc.evs.size());
    for (std::size_t i = 0; i < sc.evs.size(); ++i) {
        const auto options = ev_options(sc, static_cast<int>(i));
        const auto& opt = options[uniform_index(rng, options.size())];
        Action a;
        a.path = opt.path;
        a.station = opt.station;
        a.load = sc.stations[opt.station].is_virtual
                     ? 0.0
                     : uniform_real(rng, sc.evs[i].load_min(), sc.evs[i].load_max());
        p.actions[i] = a;
    }
    return p;
}

// A random unilateral replacement for player i (new option and/or load).
inline Action random_deviation(const Scenario& sc, std::mt19937_64& rng, int i) {
    const auto options = ev_options(sc, i);
    const auto& opt = options[uniform_index(rng, options.size())];
    Action a;
    a.path = opt.path;
    a.station = opt.station;
    a.load = sc.stations[opt.station].is_virtual
                 ? 0.0
                 : uniform_real(rng, sc.evs[i].load_min(), sc.evs[i].load_max());
    return a;
}

// The reference nine-EV 4/4/1 split on the corpus network:
// four EVs on (e1,e4)@Q2, four on (e2,e5)@Q3, one on (e2,e3,e4)@Q1.
inline Profile reference_profile_441(const Scenario& sc, double l_q1, double l_q2, double l_q3) {
    const int e1 = sc.edge_index("e1"), e2 = sc.edge_index("e2"), e3 = sc.edge_index("e3"),
              e4 = sc.edge_index("e4"), e5 = sc.edge_index("e5");
    const int q1 = sc.station_index("Q1"), q2 = sc.station_index("Q2"), q3 = sc.station_index("Q3");
    Profile p;
    p.actions.resize(9);
    for (int i = 0; i < 4; ++i) p.actions[i] = {{e2, e5}, q3, l_q3};
    p.actions[4] = {{e2, e3, e4}, q1, l_q1};
    for (int i = 5; i < 9; ++i) p.actions[i] = {{e1, e4}, q2, l_q2};
    return p;
}

}  // namespace evgrid::testing

#endif
