#ifndef EVGRID_PROSPECT_HPP
#define EVGRID_PROSPECT_HPP

#include "evgrid/analysis.hpp"
#include "evgrid/costs.hpp"
#include "evgrid/equilibrium.hpp"

namespace evgrid {

// Prelec weighting w(p) = exp(-(-ln p)^c); w(0) = 0 and w(1) = 1 by limits.
double prelec_weight(double p, double c);

// Tversky valuation around the reference point: (z - z_r)^c1 for z >= z_r,
// -c2 (z_r - z)^c3 otherwise.
double tversky_value(double z, double z_r, const PtParams& params);

// Valuation of a price deviation x = z - z_r.
double pt_value_hat(double x, const PtParams& params);

// Per-EV prospect inputs: a pmf per real station plus valuation parameters.
struct PtEvaluation {
    std::vector<Pmf> station_pmf;   // indexed like sc.stations; virtual entries unused
    std::vector<PtParams> params;   // per EV
};

// Builds pmfs from the scenario (explicit shared pmf, else per-station ground
// discretization, else point mass at g) and replicates the configured params.
PtEvaluation build_pt_evaluation(const Scenario& sc);
PtEvaluation build_pt_evaluation(const Scenario& sc, const PtParams& params);

// Marginal price the EV expects at zero ground load: f(L) - f(L - l_i).
double reference_price(const Scenario& sc, const Occupancy& occ, int i, const Action& a);

// Realized price outcome when the station ground load realizes as theta.
// Quadratic pricing uses the potential-compatible reduction z = z_r + l_i
// theta; other exponents evaluate the marginal price directly.
double pt_price_outcome(const Scenario& sc, const Occupancy& occ, int i, const Action& a, double theta);

// sum_theta w(h(theta)) vhat(l_i theta) under quadratic pricing; general
// exponents evaluate v(z(theta), z_r) with the direct price outcome.
double expected_prospect(const Scenario& sc, const Occupancy& occ, int i, const Action& a, const Pmf& pmf,
                         const PtParams& params);

// Eq-style prospect cost: congestion + queueing + battery risk + z_r + E^PT[Z].
CostBreakdown pt_cost(const Scenario& sc, const Occupancy& occ, int i, const Action& a, const PtEvaluation& pt);
CostBreakdown pt_cost(const Scenario& sc, const Profile& p, int i, const PtEvaluation& pt);

// Exact potential of the prospect game under quadratic pricing:
// phi1 + phi2 + sum_i ln(b_hi/(b_i+l_i)) + sum_j L_j^2
// + sum_i sum_theta w_i(h(theta)) vhat_i(l_i theta).
double pt_potential(const Scenario& sc, const Occupancy& occ, const Profile& p, const PtEvaluation& pt);
double pt_potential(const Scenario& sc, const Profile& p, const PtEvaluation& pt);

// Grouped prospect coefficients: for l > 0,
//   sum_theta w(h) vhat(l theta) = l^c1 * gain_pos - c2 l^c3 * loss_pos,
// symmetrically for l < 0. Collapses the pmf sum to two pow calls.
struct ProspectCoeff {
    double gain_pos = 0.0;  // sum_{theta>0} w |theta|^c1
    double loss_pos = 0.0;  // sum_{theta<0} w |theta|^c3
    double gain_neg = 0.0;  // sum_{theta<0} w |theta|^c1
    double loss_neg = 0.0;  // sum_{theta>0} w |theta|^c3
};

// Prospect-game adapter for the shared best-response machinery. The 1-D load
// step uses a dense grid with golden-section refinement; the prospect term is
// not convex for c1, c3 < 1.
class PtGameView {
  public:
    PtGameView(const Scenario& sc, const PtEvaluation& pt);
    const Scenario& scenario() const { return *sc_; }
    double action_cost(const Occupancy& occ, int i, const Action& a) const;
    double optimal_load(int station, int i, double others_load) const;
    double potential_value(const Occupancy& occ, const Profile& p) const;

  private:
    const Scenario* sc_;
    const PtEvaluation* pt_;
    std::vector<std::vector<ProspectCoeff>> coeff_;  // [station][ev]
};

NashCheck pt_is_nash(const Scenario& sc, const Profile& p, const PtEvaluation& pt, double tol);

DynamicsTrace pt_best_response_dynamics(const Scenario& sc, const Profile& initial, const PtEvaluation& pt,
                                        const DynamicsOptions& opts = {});
std::vector<DynamicsTrace> pt_multi_start_dynamics(const Scenario& sc, const PtEvaluation& pt,
                                                   const MultiStartOptions& opts);

// Perceived social cost (sum of pt_cost) and its brute-force optimum over
// discrete assignments with golden-section coordinate descent per station.
double pt_social_cost(const Scenario& sc, const Profile& p, const PtEvaluation& pt);
OptimumResult pt_social_optimum(const Scenario& sc, const PtEvaluation& pt, long long budget = 10'000'000,
                                int multistarts = 16);

}  // namespace evgrid

#endif
