#ifndef EVGRID_STOCHASTIC_HPP
#define EVGRID_STOCHASTIC_HPP

#include <cstdint>
#include <utility>

#include "evgrid/model.hpp"

namespace evgrid {

struct GroundModel {
    std::vector<GroundSpec> stations;  // one per real station, independent across stations
};

// The per-station ground models declared in the scenario; stations without a
// model fall back to FIXED at their realized g.
GroundModel ground_model_of(const Scenario& sc);

double ground_mean(const GroundSpec& spec);
double ground_variance(const GroundSpec& spec);
double ground_support_bound(const GroundSpec& spec);  // smallest K with support in [-K, K]

// One draw per station; truncated normals resample until inside [-K, K].
// Deterministic for a given seed, independent across stations.
std::vector<double> sample_ground(const GroundModel& model, std::uint64_t seed);
double sample_ground_one(const GroundSpec& spec, std::mt19937_64& rng);

// Smallest integer n with n >= 4.5 sum_j (mu_j^2 + sigma_j^2) + 4.5 K sqrt(m ln(1/eps)).
long long hoeffding_fleet_size(const std::vector<std::pair<double, double>>& moments, double K, double eps);
long long hoeffding_fleet_size(const GroundModel& model, double K, double eps);

struct MonteCarloResult {
    int trials = 0;
    int exceed_count = 0;      // trials with sum g^2 > n
    double exceedance = 0.0;   // exceed_count / trials
    int poa_trials = 0;        // trials where the full PoA was solved
    int poa_exceed_count = 0;  // trials with empirical PoA > 4 + 12 b_max^2
};

// Frequency of the sufficient event {sum_j G_j^2 > n} over seeded independent
// trials; per-trial derived seeds keep the count independent of worker
// partitioning.
MonteCarloResult monte_carlo_guarantee(const GroundModel& model, double n, int trials, std::uint64_t seed);

// Additionally solves the full game per trial (exact enumeration on the given
// scenario with ground loads replaced by the draw) and counts empirical
// PoA > 4 + 12 b_max^2. Only feasible for desk-scale scenarios.
MonteCarloResult monte_carlo_guarantee_with_poa(const Scenario& sc, const GroundModel& model, double n,
                                                int trials, int poa_trials, std::uint64_t seed);

// 21-point (by default) equal-width discretization of a ground model on its
// support; normals use bin-mass probabilities, point masses stay point masses.
Pmf discretize_ground(const GroundSpec& spec, int points);

}  // namespace evgrid

#endif
