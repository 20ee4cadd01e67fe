#ifndef EVGRID_MODEL_HPP
#define EVGRID_MODEL_HPP

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "evgrid/common.hpp"

namespace evgrid {

struct Edge {
    std::string name;
    int tail = -1;
    int head = -1;
    double a = 0.0;  // congestion coefficient, >= 0
    double b = 0.0;  // free-flow cost, >= 0
    double d = 1.0;  // congestion exponent, >= 1
};

struct Pmf {
    std::vector<double> values;
    std::vector<double> probs;
    double mean() const;
    double variance() const;
    double support_bound() const;  // max |value|
};

struct FixedGround {
    double g = 0.0;
};
struct NormalGround {
    double mean = 0.0;
    double variance = 0.0;
    double clamp = 0.0;  // support [-clamp, clamp], clamp > 0
};
struct DiscreteGround {
    Pmf pmf;
};
using GroundSpec = std::variant<FixedGround, NormalGround, DiscreteGround>;

struct Station {
    std::string name;
    int edge = -1;
    double sigma = 1.0;  // service rate, > 0 (infinite for virtual)
    double k = 2.0;      // pricing exponent, > 0; f(x) = |x|^k
    double g = 0.0;      // realized ground load
    bool is_virtual = false;
    std::optional<GroundSpec> ground;  // stochastic model, if any
};

struct Ev {
    std::string name;
    int origin = -1;
    int dest = -1;
    double b = 0.0;     // current charge
    double b_lo = 0.0;  // minimum operating level, > 0
    double b_hi = 0.0;  // capacity
    double load_min() const { return b_lo - b; }
    double load_max() const { return b_hi - b; }
};

struct PtParams {
    double c = 1.0;   // probability distortion, in (0, 1]
    double c1 = 1.0;  // gain curvature, in (0, 1]
    double c2 = 1.0;  // loss aversion, > 0
    double c3 = 1.0;  // loss curvature, in (0, 1]
};

struct PtConfig {
    PtParams params;
    std::optional<Pmf> pmf;  // shared explicit pmf; per-station discretization otherwise
    int discretization_points = 21;
};

struct ScenarioOptions {
    bool skip_charging = false;
    int path_cap = 10000;
    std::optional<PtConfig> pt;
};

struct Action {
    std::vector<int> path;  // edge indices, in travel order
    int station = -1;
    double load = 0.0;
};

struct Profile {
    std::vector<Action> actions;  // one per EV, indexed by EV
};

struct Occupancy {
    std::vector<int> edge_count;                    // n_e
    std::vector<int> station_count;                 // |Q_j|
    std::vector<double> station_load;               // L_j
    std::vector<std::vector<int>> station_members;  // Q_j as sorted EV indices
};

struct Scenario {
    std::vector<std::string> nodes;
    std::vector<Edge> edges;
    std::vector<Station> stations;  // real stations first, then one virtual per edge if skip_charging
    std::vector<Ev> evs;
    ScenarioOptions options;

    std::vector<std::vector<int>> stations_on_edge;  // by edge index
    int real_station_count = 0;

    int node_index(const std::string& name) const;
    int edge_index(const std::string& name) const;
    int station_index(const std::string& name) const;
    int ev_index(const std::string& name) const;

    double fleet_b_min() const;  // min_i b_lo
    double fleet_b_max() const;  // max_i b_hi
    bool fleet_identical() const;
    bool linear_latency() const;     // all d == 1
    bool quadratic_pricing() const;  // all real stations k == 2
    double ground_sq_sum() const;    // sum of g_j^2 over real stations
};

// Checks every invariant and synthesizes derived structure (virtual stations,
// edge->station table). Throws errc::validation with a field path on failure.
void finalize_scenario(Scenario& sc);

// All simple directed s->t paths as edge-index sequences, in lexicographic
// order of the sequences. s == t yields the single empty path. Throws
// errc::path_explosion when more than cap paths exist.
std::vector<std::vector<int>> enumerate_paths(const Scenario& sc, int s, int t, int cap);

struct EvOption {
    std::vector<int> path;
    int station = -1;
};

// All feasible (path, station-on-path) pairs for EV i, in deterministic
// (path, station index) order. Paths without any station are skipped; with
// skip charging enabled every edge carries its virtual station.
std::vector<EvOption> ev_options(const Scenario& sc, int i);
std::vector<std::vector<EvOption>> build_option_table(const Scenario& sc);

// Throws errc::validation when the action violates its invariants.
void validate_action(const Scenario& sc, int i, const Action& a);

Occupancy empty_occupancy(const Scenario& sc);
void occupancy_add(Occupancy& occ, const Scenario& sc, int i, const Action& a);
void occupancy_remove(Occupancy& occ, const Scenario& sc, int i, const Action& a);

// Pure function of the action vector; recomputed from scratch.
Occupancy derive_occupancy(const Scenario& sc, const Profile& p);

}  // namespace evgrid

#endif
