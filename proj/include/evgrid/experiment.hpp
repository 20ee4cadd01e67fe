#ifndef EVGRID_EXPERIMENT_HPP
#define EVGRID_EXPERIMENT_HPP

#include <map>
#include <optional>
#include <string>

#include "evgrid/analysis.hpp"
#include "evgrid/prospect.hpp"
#include "evgrid/stochastic.hpp"

namespace evgrid {

// One sweep cell: fleet size x pricing exponent x latency family.
struct SweepAxes {
    std::vector<int> fleet;                  // defaults to the scenario's own fleet size
    std::vector<std::string> pricing;        // tokens like "2/3", "2"; empty keeps scenario pricing
    std::vector<std::string> latency;        // "linear" and/or "quadratic"; empty keeps exponents
    std::vector<std::string> pt_presets;     // pt mode only
};

struct SolverOptions {
    double eps = 1e-6;
    int max_rounds = 500;
    int starts = 64;
    double tol = 1e-9;
    long long budget = 10'000'000;
    int multistarts = 16;
};

struct ExperimentConfig {
    std::string scenario_path;
    std::string mode;  // ne | enumerate | optimum | poa | pos | balance | hoeffding | monte-carlo | pt
    SweepAxes axes;
    std::uint64_t seed = 0;
    std::string out_dir;  // empty: print only
    SolverOptions solver;
    double hoeffding_eps = 0.05;
    std::optional<double> clamp_override;  // K for hoeffding/monte-carlo
    double mc_n = 0.0;
    int mc_trials = 10000;
    int mc_poa_trials = 0;
    long long sweep_budget = 4096;  // max number of sweep cells
};

struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;  // already formatted
    std::vector<std::string> comments;           // emitted as leading '#' lines
};

struct ExperimentResult {
    std::map<std::string, ResultTable> files;  // filename -> table (deterministic order)
    std::map<std::string, double> wall_ms;     // per-cell timings; not part of the result contract
    int failed_cells = 0;
};

// Applies a pricing token ("2/3", "4/3", "2", "8/3", any positive rational or
// decimal) to all real stations.
double parse_pricing_token(const std::string& token);
Scenario with_pricing(const Scenario& sc, double k);
Scenario with_latency(const Scenario& sc, const std::string& family);  // "linear" | "quadratic"
Scenario with_fleet_size(const Scenario& sc, int n);  // first n EVs, cloning the last when n exceeds the fleet

PtParams pt_preset(const std::string& name);  // A, B, C, E, neutral

// Runs the configured experiment; one result row per sweep cell, rows sorted
// by cell key, identical output for identical (config, seed) regardless of
// worker count. Per-cell errors are recorded in the row's status column.
ExperimentResult run_experiment(const ExperimentConfig& config);

// Projects tidy per-figure files (PoA-vs-n, balance improvement, PT summary)
// out of a sweep/pt result table.
void emit_plot_data(ExperimentResult& result);

// Writes every table in `result` under dir (creating it), '#' comments first,
// then a header row, floats already formatted with 12 significant digits.
void write_result_files(const ExperimentResult& result, const std::string& dir);

std::string table_to_csv(const ResultTable& table);

}  // namespace evgrid

#endif
