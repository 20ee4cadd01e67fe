#include "evgrid/costs.hpp"

#include <cmath>

namespace evgrid {

double latency(const Edge& e, int x) {
    if (e.d == 1.0) return e.a * x + e.b;
    if (e.d == 2.0) return e.a * x * double(x) + e.b;
    return e.a * std::pow(double(x), e.d) + e.b;
}

double pricing(const Station& st, double x) {
    if (st.is_virtual) return 0.0;
    if (st.k == 2.0) return x * x;
    return std::pow(std::abs(x), st.k);
}

double marginal_energy_price(const Scenario& sc, const Occupancy& occ, int i, const Action& a) {
    (void)i;
    const Station& st = sc.stations[a.station];
    if (st.is_virtual) return 0.0;
    const double with = -st.g + occ.station_load[a.station];
    return pricing(st, with) - pricing(st, with - a.load);
}

CostBreakdown ev_cost(const Scenario& sc, const Occupancy& occ, int i, const Action& a) {
    const Ev& ev = sc.evs[i];
    CostBreakdown out;
    for (int e : a.path) out.congestion += latency(sc.edges[e], occ.edge_count[e]);
    const Station& st = sc.stations[a.station];
    if (!st.is_virtual) out.queueing = occ.station_count[a.station] / st.sigma;
    const double charge = ev.b + a.load;
    if (charge <= 0.0) throw error(errc::domain, "ev_cost: battery level would drop to " + std::to_string(charge));
    out.battery_risk = std::log(ev.b_hi / charge);
    out.energy_price = marginal_energy_price(sc, occ, i, a);
    out.total = out.congestion + out.queueing + out.battery_risk + out.energy_price;
    return out;
}

CostBreakdown ev_cost(const Scenario& sc, const Profile& p, int i) {
    const Occupancy occ = derive_occupancy(sc, p);
    return ev_cost(sc, occ, i, p.actions[i]);
}

double potential(const Scenario& sc, const Occupancy& occ, const Profile& p) {
    double phi1 = 0.0;
    for (std::size_t e = 0; e < sc.edges.size(); ++e)
        for (int x = 1; x <= occ.edge_count[e]; ++x) phi1 += latency(sc.edges[e], x);

    double phi2 = 0.0;
    double phi3 = 0.0;
    for (std::size_t j = 0; j < sc.stations.size(); ++j) {
        const Station& st = sc.stations[j];
        if (st.is_virtual) continue;
        const double q = occ.station_count[j];
        phi2 += q * (q + 1.0) / (2.0 * st.sigma);
        phi3 += pricing(st, -st.g + occ.station_load[j]);
    }
    for (std::size_t i = 0; i < p.actions.size(); ++i) {
        const Ev& ev = sc.evs[i];
        phi3 += std::log(ev.b_hi / (ev.b + p.actions[i].load));
    }
    return phi1 + phi2 + phi3;
}

double potential(const Scenario& sc, const Profile& p) { return potential(sc, derive_occupancy(sc, p), p); }

double social_cost(const Scenario& sc, const Occupancy& occ, const Profile& p) {
    double total = 0.0;
    for (std::size_t i = 0; i < p.actions.size(); ++i) total += ev_cost(sc, occ, static_cast<int>(i), p.actions[i]).total;
    if (sc.linear_latency() && sc.quadratic_pricing()) {
        const double closed = social_cost_closed_form(sc, occ, p);
        if (!approx_rel(total, closed, 1e-9))
            throw error(errc::domain, "social cost closed form diverged from direct sum: " +
                                          format_g(total, 17) + " vs " + format_g(closed, 17));
    }
    return total;
}

double social_cost(const Scenario& sc, const Profile& p) { return social_cost(sc, derive_occupancy(sc, p), p); }

double social_cost_closed_form(const Scenario& sc, const Occupancy& occ, const Profile& p) {
    double value = 0.0;
    for (std::size_t e = 0; e < sc.edges.size(); ++e) {
        const double n = occ.edge_count[e];
        value += sc.edges[e].a * n * n + sc.edges[e].b * n;
    }
    for (std::size_t j = 0; j < sc.stations.size(); ++j) {
        const Station& st = sc.stations[j];
        if (st.is_virtual) continue;
        const double q = occ.station_count[j];
        const double L = occ.station_load[j];
        value += q * q / st.sigma + 2.0 * L * L - 2.0 * st.g * L;
    }
    for (std::size_t i = 0; i < p.actions.size(); ++i) {
        const Ev& ev = sc.evs[i];
        const double l = p.actions[i].load;
        value -= l * l;
        value += std::log(ev.b_hi / (ev.b + l));
    }
    return value;
}

double potential_closed_form(const Scenario& sc, const Occupancy& occ, const Profile& p) {
    double value = 0.0;
    for (std::size_t e = 0; e < sc.edges.size(); ++e) {
        const double n = occ.edge_count[e];
        value += 0.5 * (sc.edges[e].a * n * n + (sc.edges[e].a + 2.0 * sc.edges[e].b) * n);
    }
    for (std::size_t j = 0; j < sc.stations.size(); ++j) {
        const Station& st = sc.stations[j];
        if (st.is_virtual) continue;
        const double q = occ.station_count[j];
        const double r = st.g - occ.station_load[j];
        value += q * (q + 1.0) / (2.0 * st.sigma) + r * r;
    }
    for (std::size_t i = 0; i < p.actions.size(); ++i) {
        const Ev& ev = sc.evs[i];
        value += std::log(ev.b_hi / (ev.b + p.actions[i].load));
    }
    return value;
}

}  // namespace evgrid
