#ifndef EVGRID_ANALYSIS_HPP
#define EVGRID_ANALYSIS_HPP

#include "evgrid/equilibrium.hpp"

namespace evgrid {

struct OptimumOptions {
    long long budget = 10'000'000;
    int multistarts = 16;
    double tol = 1e-7;
};

struct OptimumResult {
    Profile profile;
    double value = 0.0;
};

// Brute-force social optimum: exhaustive discrete (path, station) assignments
// with a per-station continuous minimization (projected coordinate descent
// from seeded multistarts; the -sum l^2 term makes asymmetric optima real).
OptimumResult social_optimum(const Scenario& sc, const OptimumOptions& opts = {});

enum class NeSetMode { exact, dynamics };

struct EfficiencyOptions {
    NeSetMode mode = NeSetMode::exact;
    EnumerateOptions enumerate;
    OptimumOptions optimum;
    MultiStartOptions multistart;  // used in dynamics mode
};

struct BoundReport {
    double poa_empirical = 0.0;
    double poa_bound = 0.0;  // 3 + 12 b_max^2 + 4.5 sum g^2 / n
    double pos_empirical = 0.0;
    double pos_bound = 0.0;  // 2 (1 + b_max^2) + 2 sum g^2 / n
    bool unit_cost_assumption_holds = false;  // OPT >= n
    bool exact = true;                        // false: dynamics mode, PoA is a lower bound
    double opt = 0.0;
    double worst_ne = 0.0;
    double best_ne = 0.0;
    int ne_count = 0;
};

// PoA and PoS against the analytic bounds; NE set via exact enumeration or
// multi-start dynamics (flagged as a lower bound on the true PoA).
BoundReport analyze_efficiency(const Scenario& sc, const EfficiencyOptions& opts = {});
BoundReport price_of_anarchy(const Scenario& sc, const EfficiencyOptions& opts = {});
BoundReport price_of_stability(const Scenario& sc, const EfficiencyOptions& opts = {});

struct StationBalance {
    int station = -1;
    double g = 0.0;
    double g_ne = 0.0;  // residual g_j - L_j
    int members = 0;
    bool bad_initial = false;
    bool good_final = false;
    double mu = 0.0;  // three-case guarantee margin, identical fleets only
};

struct BalanceReport {
    std::vector<StationBalance> stations;  // real stations only
    double threshold = 0.0;                // sqrt(5)/(2 b_min)
    double v0_all = 0.0;
    double vne_all = 0.0;
    double v0_bad = 0.0;
    double vne_bad = 0.0;
    double mu_sq_sum = 0.0;          // over bad stations
    bool guarantees_applicable = false;  // identical initial battery levels
    bool bad_station_bound_ok = false;    // vne_bad < v0_bad - mu_sq_sum
    bool good_stay_good = false;       // residual^2 <= 5/(4 b_min^2) for good stations
};

// Residual imbalance and good/bad classification for an equilibrium profile.
BalanceReport balance_report(const Scenario& sc, const Profile& ne);

}  // namespace evgrid

#endif
