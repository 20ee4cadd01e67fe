#ifndef EVGRID_EQUILIBRIUM_HPP
#define EVGRID_EQUILIBRIUM_HPP

#include <cstdint>

#include "evgrid/costs.hpp"
#include "evgrid/model.hpp"

namespace evgrid {

struct LoadContext {
    double g = 0.0;            // station ground load
    double others_load = 0.0;  // sum of the other members' loads
    double k = 2.0;            // pricing exponent
    bool zero_pricing = false;
    double b = 0.0;
    double b_lo = 0.0;
    double b_hi = 0.0;
};

// Minimizer of f(-g + others + l) + ln(b_hi/(b + l)) over [b_lo-b, b_hi-b].
// Quadratic pricing solves the stationarity root in closed form; other
// exponents use a dense grid (>= 4096 points) with golden-section refinement.
double optimize_load_1d(const LoadContext& ctx);

// Cost-model adapter for the classical game; satisfies the Game concept of
// the shared best-response machinery (see game_core.hpp).
class CgtGameView {
  public:
    explicit CgtGameView(const Scenario& sc);
    const Scenario& scenario() const { return *sc_; }
    double action_cost(const Occupancy& occ, int i, const Action& a) const;
    double optimal_load(int station, int i, double others_load) const;
    double potential_value(const Occupancy& occ, const Profile& p) const;

  private:
    const Scenario* sc_;
};

struct BestResponse {
    Action action;
    double cost = 0.0;
};

// Minimizes C_i over all (path, station-on-path) pairs with the per-pair
// 1-D optimal load; deterministic (path, station) tie-breaking.
BestResponse best_response(const Scenario& sc, const Profile& p, int i);

struct Deviation {
    int player = -1;
    Action action;
    double gain = 0.0;  // current cost minus deviation cost
};

struct NashCheck {
    bool is_nash = true;
    Deviation worst;  // most profitable deviation found (gain may be <= tol)
};

NashCheck is_nash(const Scenario& sc, const Profile& p, double tol);

struct DynamicsStep {
    int round = 0;
    int mover = -1;
    Action before;
    Action after;
    double cost_before = 0.0;
    double cost_after = 0.0;
    double phi_before = 0.0;
    double phi_after = 0.0;
};

struct DynamicsTrace {
    std::vector<DynamicsStep> steps;  // populated only when record_steps is set
    Profile terminal;
    bool converged = false;
    int rounds = 0;
    int moves = 0;
    double epsilon = 0.0;
};

enum class UpdateOrder { round_robin, shuffled };

struct DynamicsOptions {
    double eps = 1e-6;
    int max_rounds = 500;
    UpdateOrder order = UpdateOrder::round_robin;
    std::uint64_t seed = 0;  // used only for shuffled order
    bool record_steps = true;
};

// Round-robin best-response dynamics; a move is taken only when it lowers the
// mover's cost by more than eps. Non-convergence is reported through the
// trace, not an exception.
DynamicsTrace run_best_response_dynamics(const Scenario& sc, const Profile& initial, const DynamicsOptions& opts = {});

struct MultiStartOptions {
    int starts = 64;
    std::uint64_t seed = 0;
    DynamicsOptions dynamics;
};

// Seeded uniform initial profiles (random option, zero load), one dynamics
// run per start.
std::vector<DynamicsTrace> multi_start_dynamics(const Scenario& sc, const MultiStartOptions& opts);
Profile random_profile(const Scenario& sc, const std::vector<std::vector<EvOption>>& options, std::uint64_t seed);

// The three-case symmetric station load of the closed-form load-balancing
// analysis (clamp low / clamp high / interior root of
// (2Q-1)l - g = 1/(2(b+l))). This is the coordinated symmetric load that
// minimizes the members' common station cost, not the best-response fixed
// point below; the two coincide for Q = 1.
double symmetric_coordinated_load(double g, int q, double b, double b_lo, double b_hi);

// Unique Nash loads of the per-station restricted game (quadratic pricing):
// every member best-responds, i.e. Q l - g = 1/(2(b+l)) in the symmetric
// identical-member case. Heterogeneous members are solved by Gauss-Seidel
// sweeps of exact 1-D best responses.
std::vector<double> restricted_nash_loads(const Station& st, const std::vector<Ev>& members, double tol = 1e-10);

// Per-member loads for a station's restricted game. Identical members use the
// coordinated three-case closed form; heterogeneous members fall back to the
// best-response fixed point (see restricted_nash_loads).
std::vector<double> restricted_station_ne(const Station& st, const std::vector<Ev>& members);

struct EnumerateOptions {
    double tol = 1e-9;
    long long budget = 10'000'000;
};

struct NeSolution {
    Profile profile;
    double social = 0.0;
    long long assignment_index = -1;  // odometer rank over the option table
    std::vector<int> occupancy;       // |Q_j| per station
};

// Exact pure-NE enumeration under quadratic pricing: for every discrete
// (path, station) assignment the unique continuous Nash loads are computed
// per station and the profile kept iff no discrete or continuous deviation
// improves any player by more than tol. Results are sorted by assignment
// rank and deterministic across worker counts.
std::vector<NeSolution> enumerate_ne(const Scenario& sc, const EnumerateOptions& opts = {});

}  // namespace evgrid

#endif
