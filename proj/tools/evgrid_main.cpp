// Command-line front end: scenario validation, equilibrium solving, exact
// enumeration, the brute-force optimum, efficiency/balance reports, parameter
// sweeps, stochastic fleet sizing and the prospect-theoretic variant.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "evgrid/experiment.hpp"
#include "evgrid/scenario_io.hpp"

using namespace evgrid;

namespace {

int exit_code_for(const error& e) {
    switch (e.code) {
        case errc::budget_exceeded:
        case errc::path_explosion:
            return 3;
        default:
            return 2;
    }
}

void print_table(const ResultTable& table) { std::fputs(table_to_csv(table).c_str(), stdout); }

void maybe_write(const ExperimentResult& result, const std::string& out_dir) {
    if (!out_dir.empty()) write_result_files(result, out_dir);
}

std::vector<int> parse_fleet_list(const std::string& text) {
    // "2..9" or "2,4,6"
    std::vector<int> out;
    const auto dots = text.find("..");
    if (dots != std::string::npos) {
        const int lo = std::stoi(text.substr(0, dots));
        const int hi = std::stoi(text.substr(dots + 2));
        for (int n = lo; n <= hi; ++n) out.push_back(n);
        return out;
    }
    std::size_t at = 0;
    while (at <= text.size()) {
        const auto comma = text.find(',', at);
        out.push_back(std::stoi(text.substr(at, comma - at)));
        if (comma == std::string::npos) break;
        at = comma + 1;
    }
    return out;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::size_t at = 0;
    while (at <= text.size()) {
        const auto comma = text.find(',', at);
        out.push_back(text.substr(at, comma - at));
        if (comma == std::string::npos) break;
        at = comma + 1;
    }
    return out;
}

void print_profile_summary(const Scenario& sc, const Profile& p) {
    const Occupancy occ = derive_occupancy(sc, p);
    std::printf("station, members, load\n");
    for (int j = 0; j < sc.real_station_count; ++j)
        std::printf("%s, %d, %s\n", sc.stations[j].name.c_str(), occ.station_count[j],
                    format_g(occ.station_load[j]).c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"evgrid: noncooperative EV routing and charging on a congested grid"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    std::uint64_t seed = 0;
    std::string out_dir;
    long long budget = 10'000'000;
    double eps = 1e-6;
    app.add_option("--seed", seed, "seed for every stochastic choice");
    app.add_option("--out", out_dir, "directory for result files");
    app.add_option("--budget", budget, "assignment-space budget for exact solvers");
    app.add_option("--eps", eps, "improvement threshold for best-response dynamics");

    std::string scenario_path;
    int starts = 64;
    int max_rounds = 500;
    double tol = 1e-9;
    std::string order = "round-robin";

    auto* validate = app.add_subcommand("validate", "parse a scenario and check every invariant");
    validate->add_option("scenario", scenario_path)->required();

    auto* solve = app.add_subcommand("solve", "multi-start best-response dynamics to an equilibrium");
    solve->add_option("scenario", scenario_path)->required();
    solve->add_option("--starts", starts, "number of seeded initial profiles");
    solve->add_option("--rounds", max_rounds, "round limit per dynamics run");
    solve->add_option("--order", order, "update order: round-robin | shuffled");

    auto* enumerate = app.add_subcommand("enumerate", "exact pure-equilibrium enumeration (quadratic pricing)");
    enumerate->add_option("scenario", scenario_path)->required();
    enumerate->add_option("--tol", tol, "deviation tolerance for the equilibrium check");

    auto* optimum = app.add_subcommand("optimum", "brute-force social optimum");
    optimum->add_option("scenario", scenario_path)->required();

    auto* report = app.add_subcommand("report", "efficiency ratios, analytic bounds and load balance");
    report->add_option("scenario", scenario_path)->required();
    report->add_option("--starts", starts);

    std::string fleet_list, pricing_list = "2", latency_list = "linear";
    auto* sweep = app.add_subcommand("sweep", "cross-product experiment over fleet/pricing/latency");
    sweep->add_option("scenario", scenario_path)->required();
    sweep->add_option("--fleet", fleet_list, "fleet sizes, e.g. 2..9 or 2,5,9");
    sweep->add_option("--pricing", pricing_list, "pricing exponents, e.g. 2/3,4/3,2,8/3");
    sweep->add_option("--latency", latency_list, "latency families: linear,quadratic");
    sweep->add_option("--starts", starts);

    double hoeffding_eps = 0.05;
    double clamp_override = 0.0;
    auto* hoeffding = app.add_subcommand("hoeffding", "fleet size for the probabilistic efficiency guarantee");
    hoeffding->add_option("scenario", scenario_path)->required();
    hoeffding->add_option("--eps", hoeffding_eps, "failure probability in (0, 1]");
    hoeffding->add_option("--clamp", clamp_override, "override the support bound K");

    double mc_n = -1.0;
    int mc_trials = 10000;
    int mc_poa_trials = 0;
    auto* montecarlo = app.add_subcommand("montecarlo", "frequency of the fleet-guarantee exceedance event");
    montecarlo->add_option("scenario", scenario_path)->required();
    montecarlo->add_option("--n", mc_n, "fleet size to test (default: the hoeffding size at eps 0.05)");
    montecarlo->add_option("--trials", mc_trials);
    montecarlo->add_option("--poa-trials", mc_poa_trials, "also solve the full game on this many draws");

    std::string pt_presets;
    auto* pt = app.add_subcommand("pt", "prospect-theoretic equilibria and induced load");
    pt->add_option("scenario", scenario_path)->required();
    pt->add_option("--presets", pt_presets, "comma list: A,B,C,E,neutral,c:<x>,params:c,c1,c2,c3");
    pt->add_option("--starts", starts);

    CLI11_PARSE(app, argc, argv);

    try {
        ExperimentConfig config;
        config.scenario_path = scenario_path;
        config.seed = seed;
        config.out_dir = out_dir;
        config.solver.eps = eps;
        config.solver.max_rounds = max_rounds;
        config.solver.starts = starts;
        config.solver.tol = tol;
        config.solver.budget = budget;

        if (*validate) {
            const Scenario sc = load_scenario(scenario_path);
            std::printf("ok: %zu nodes, %zu edges, %d stations, %zu EVs%s\n", sc.nodes.size(), sc.edges.size(),
                        sc.real_station_count, sc.evs.size(), sc.options.skip_charging ? " (skip charging)" : "");
            std::printf("fleet: b_min=%s b_max=%s identical=%d\n", format_g(sc.fleet_b_min()).c_str(),
                        format_g(sc.fleet_b_max()).c_str(), sc.fleet_identical() ? 1 : 0);
            return 0;
        }

        if (*solve) {
            const Scenario sc = load_scenario(scenario_path);
            MultiStartOptions ms;
            ms.starts = starts;
            ms.seed = seed;
            ms.dynamics.eps = eps;
            ms.dynamics.max_rounds = max_rounds;
            ms.dynamics.order = order == "shuffled" ? UpdateOrder::shuffled : UpdateOrder::round_robin;
            const auto traces = multi_start_dynamics(sc, ms);
            int converged = 0;
            const DynamicsTrace* best = nullptr;
            double best_cost = 0.0;
            ResultTable starts_table;
            starts_table.columns = {"start", "converged", "rounds", "moves", "social_cost", "potential"};
            for (std::size_t s = 0; s < traces.size(); ++s) {
                const auto& trace = traces[s];
                double cost = std::numeric_limits<double>::quiet_NaN();
                if (trace.converged) {
                    ++converged;
                    cost = social_cost(sc, trace.terminal);
                    if (!best || cost < best_cost) {
                        best = &trace;
                        best_cost = cost;
                    }
                }
                starts_table.rows.push_back({std::to_string(s), trace.converged ? "1" : "0",
                                             std::to_string(trace.rounds), std::to_string(trace.moves),
                                             trace.converged ? format_g(cost) : "",
                                             trace.converged ? format_g(potential(sc, trace.terminal)) : ""});
            }
            if (!best) throw error(errc::no_convergence, "no start converged; raise --rounds");
            std::printf("converged %d/%d starts; best social cost %s; potential %s\n", converged, starts,
                        format_g(best_cost).c_str(), format_g(potential(sc, best->terminal)).c_str());
            const NashCheck check = is_nash(sc, best->terminal, 10.0 * eps);
            std::printf("equilibrium check at 10*eps: %s\n", check.is_nash ? "pass" : "FAIL");
            print_profile_summary(sc, best->terminal);
            if (!out_dir.empty()) {
                std::filesystem::create_directories(out_dir);
                std::ofstream sol(std::filesystem::path(out_dir) / "solution.json");
                sol << serialize_profile(sc, best->terminal);
                ExperimentResult result;
                result.files["starts.csv"] = starts_table;
                write_result_files(result, out_dir);
            }
            return check.is_nash ? 0 : 4;
        }

        if (*enumerate) {
            const Scenario sc = load_scenario(scenario_path);
            EnumerateOptions opts;
            opts.tol = tol;
            opts.budget = budget;
            const auto nes = enumerate_ne(sc, opts);
            ResultTable table;
            table.columns = {"assignment", "social_cost"};
            for (int j = 0; j < sc.real_station_count; ++j) {
                table.columns.push_back(sc.stations[j].name + "_members");
                table.columns.push_back(sc.stations[j].name + "_load");
            }
            for (const auto& ne : nes) {
                const Occupancy occ = derive_occupancy(sc, ne.profile);
                std::vector<std::string> row{std::to_string(ne.assignment_index), format_g(ne.social)};
                for (int j = 0; j < sc.real_station_count; ++j) {
                    row.push_back(std::to_string(occ.station_count[j]));
                    row.push_back(format_g(occ.station_load[j]));
                }
                table.rows.push_back(row);
            }
            std::printf("# %zu pure equilibria\n", nes.size());
            print_table(table);
            ExperimentResult result;
            result.files["ne_list.csv"] = table;
            maybe_write(result, out_dir);
            return 0;
        }

        if (*optimum) {
            const Scenario sc = load_scenario(scenario_path);
            OptimumOptions opts;
            opts.budget = budget;
            const OptimumResult opt = social_optimum(sc, opts);
            std::printf("optimal social cost %s\n", format_g(opt.value).c_str());
            print_profile_summary(sc, opt.profile);
            if (!out_dir.empty()) {
                std::filesystem::create_directories(out_dir);
                std::ofstream sol(std::filesystem::path(out_dir) / "optimum.json");
                sol << serialize_profile(sc, opt.profile);
            }
            return 0;
        }

        if (*report) {
            config.mode = "report";
            const ExperimentResult result = run_experiment(config);
            print_table(result.files.at("results.csv"));
            maybe_write(result, out_dir);
            return result.failed_cells > 0 ? 4 : 0;
        }

        if (*sweep) {
            config.mode = "sweep";
            if (!fleet_list.empty()) config.axes.fleet = parse_fleet_list(fleet_list);
            config.axes.pricing = split_list(pricing_list);
            config.axes.latency = split_list(latency_list);
            const ExperimentResult result = run_experiment(config);
            print_table(result.files.at("results.csv"));
            maybe_write(result, out_dir);
            return result.failed_cells > 0 ? 4 : 0;
        }

        if (*hoeffding) {
            config.mode = "hoeffding";
            config.hoeffding_eps = hoeffding_eps;
            if (clamp_override > 0.0) config.clamp_override = clamp_override;
            const ExperimentResult result = run_experiment(config);
            print_table(result.files.at("hoeffding.csv"));
            maybe_write(result, out_dir);
            return 0;
        }

        if (*montecarlo) {
            config.mode = "monte-carlo";
            if (mc_n < 0.0) {
                const Scenario sc = load_scenario(scenario_path);
                const GroundModel model = ground_model_of(sc);
                double K = 0.0;
                for (const auto& spec : model.stations) K = std::max(K, ground_support_bound(spec));
                mc_n = static_cast<double>(hoeffding_fleet_size(model, K, 0.05));
            }
            config.mc_n = mc_n;
            config.mc_trials = mc_trials;
            config.mc_poa_trials = mc_poa_trials;
            const ExperimentResult result = run_experiment(config);
            print_table(result.files.at("montecarlo.csv"));
            maybe_write(result, out_dir);
            return 0;
        }

        if (*pt) {
            config.mode = "pt";
            if (!pt_presets.empty()) config.axes.pt_presets = split_list(pt_presets);
            const ExperimentResult result = run_experiment(config);
            print_table(result.files.at("pt.csv"));
            maybe_write(result, out_dir);
            return result.failed_cells > 0 ? 4 : 0;
        }
    } catch (const error& e) {
        std::fprintf(stderr, "error (%s): %s\n", errc_name(e.code), e.what());
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
