#ifndef EVGRID_COSTS_HPP
#define EVGRID_COSTS_HPP

#include "evgrid/model.hpp"

namespace evgrid {

struct CostBreakdown {
    double congestion = 0.0;
    double queueing = 0.0;
    double battery_risk = 0.0;
    double energy_price = 0.0;
    double total = 0.0;
};

// a_e * x^d + b_e
double latency(const Edge& e, int x);

// |x|^k; virtual stations price at zero
double pricing(const Station& st, double x);

// f(-g + L) - f(-g + L - l_i) with the occupancy including EV i's action.
double marginal_energy_price(const Scenario& sc, const Occupancy& occ, int i, const Action& a);

// Per-EV cost with the occupancy including i's action. Throws errc::domain
// when b_i + l_i <= 0 (unreachable for a valid action).
CostBreakdown ev_cost(const Scenario& sc, const Occupancy& occ, int i, const Action& a);
CostBreakdown ev_cost(const Scenario& sc, const Profile& p, int i);

// Exact potential: sum_e sum_{x=1..n_e} c_e(x)
//                + sum_j |Q_j|(|Q_j|+1)/(2 sigma_j)
//                + sum_j f_j(-g_j + L_j) + sum_i ln(b_hi/(b_i + l_i)).
// Virtual stations contribute nothing to the station terms.
double potential(const Scenario& sc, const Occupancy& occ, const Profile& p);
double potential(const Scenario& sc, const Profile& p);

// Sum of all EV costs. Under uniform linear latency and quadratic pricing the
// result is cross-checked against the closed form below (1e-9 relative).
double social_cost(const Scenario& sc, const Profile& p);
double social_cost(const Scenario& sc, const Occupancy& occ, const Profile& p);

// sum_e (a_e n_e^2 + b_e n_e) + sum_j |Q_j|^2/sigma_j - sum_j sum_{k in Q_j} l_k^2
// + 2 sum_j L_j^2 - 2 sum_j g_j L_j + sum_i ln(b_hi/(b_i + l_i));
// valid when every edge is linear and every real station prices quadratically.
double social_cost_closed_form(const Scenario& sc, const Occupancy& occ, const Profile& p);

// 1/2 sum_e (a_e n_e^2 + (a_e + 2 b_e) n_e) + queueing + sum_j (g_j - L_j)^2
// + battery risk; same validity condition as the closed-form social cost.
double potential_closed_form(const Scenario& sc, const Occupancy& occ, const Profile& p);

}  // namespace evgrid

#endif
