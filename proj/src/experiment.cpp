#include "evgrid/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "evgrid/scenario_io.hpp"

namespace evgrid {

namespace {

std::string fmt(double v) { return format_g(v, 12); }
std::string fmt_bool(bool v) { return v ? "1" : "0"; }

struct CellOutcome {
    std::string status = "ok";  // ok | <errc name>
    std::string detail;
    std::vector<std::string> row;
    double wall_ms = 0.0;
};

}  // namespace

double parse_pricing_token(const std::string& token) {
    const auto slash = token.find('/');
    double value = 0.0;
    try {
        if (slash == std::string::npos) {
            value = std::stod(token);
        } else {
            const double num = std::stod(token.substr(0, slash));
            const double den = std::stod(token.substr(slash + 1));
            if (den == 0.0) throw std::invalid_argument("zero denominator");
            value = num / den;
        }
    } catch (const std::exception&) {
        throw error(errc::validation, "pricing token '" + token + "' is not a number or fraction");
    }
    if (!(value > 0.0)) throw error(errc::validation, "pricing exponent must be positive: '" + token + "'");
    return value;
}

Scenario with_pricing(const Scenario& sc, double k) {
    Scenario out = sc;
    for (auto& st : out.stations)
        if (!st.is_virtual) st.k = k;
    finalize_scenario(out);
    return out;
}

Scenario with_latency(const Scenario& sc, const std::string& family) {
    Scenario out = sc;
    double d = 0.0;
    if (family == "linear")
        d = 1.0;
    else if (family == "quadratic")
        d = 2.0;
    else
        throw error(errc::validation, "unknown latency family '" + family + "'");
    for (auto& e : out.edges) e.d = d;
    finalize_scenario(out);
    return out;
}

Scenario with_fleet_size(const Scenario& sc, int n) {
    if (n < 1) throw error(errc::validation, "fleet size must be at least 1");
    Scenario out = sc;
    if (n <= static_cast<int>(sc.evs.size())) {
        out.evs.assign(sc.evs.begin(), sc.evs.begin() + n);
    } else {
        for (int i = static_cast<int>(sc.evs.size()); i < n; ++i) {
            Ev clone = sc.evs.back();
            clone.name = sc.evs.back().name + "#" + std::to_string(i);
            out.evs.push_back(clone);
        }
    }
    finalize_scenario(out);
    return out;
}

PtParams pt_preset(const std::string& name) {
    // behavioral parameter sets estimated in the experimental literature;
    // "neutral" is the risk-neutral identity
    if (name == "A") return {0.75, 0.68, 2.54, 0.74};
    if (name == "B") return {0.75, 0.81, 1.07, 0.80};
    if (name == "C") return {0.75, 0.71, 1.38, 0.72};
    if (name == "E") return {0.75, 0.88, 2.25, 0.88};
    if (name == "neutral") return {1.0, 1.0, 1.0, 1.0};
    // "c:<x>" sweeps the probability distortion with the E curvatures
    if (name.rfind("c:", 0) == 0) {
        PtParams p{0.0, 0.88, 2.25, 0.88};
        try {
            p.c = std::stod(name.substr(2));
        } catch (const std::exception&) {
            throw error(errc::validation, "bad PT token '" + name + "'");
        }
        return p;
    }
    // "params:c,c1,c2,c3" passes an explicit parameter vector
    if (name.rfind("params:", 0) == 0) {
        PtParams p;
        double* fields[4] = {&p.c, &p.c1, &p.c2, &p.c3};
        std::size_t at = 7;
        for (int f = 0; f < 4; ++f) {
            const std::size_t comma = name.find(',', at);
            const std::string tok = name.substr(at, comma == std::string::npos ? std::string::npos : comma - at);
            try {
                *fields[f] = std::stod(tok);
            } catch (const std::exception&) {
                throw error(errc::validation, "bad PT token '" + name + "'");
            }
            if (comma == std::string::npos && f < 3)
                throw error(errc::validation, "PT params need four comma-separated values");
            at = comma + 1;
        }
        return p;
    }
    throw error(errc::validation, "unknown PT preset '" + name + "' (available: A, B, C, E, neutral, c:<x>, params:...)");
}

namespace {

struct EfficiencyCellResult {
    BoundReport bounds;
    BalanceReport balance;  // of the worst equilibrium
    std::string ne_mode;
    int converged_starts = 0;
    int total_moves = 0;
};

EfficiencyCellResult solve_efficiency_cell(const Scenario& sc, const SolverOptions& solver, std::uint64_t seed) {
    EfficiencyCellResult out;

    OptimumOptions oopts;
    oopts.budget = solver.budget;
    oopts.multistarts = solver.multistarts;
    const OptimumResult opt = social_optimum(sc, oopts);

    // equilibrium set: exact enumeration under quadratic pricing, seeded
    // multi-start dynamics otherwise (PoA is then a lower bound)
    std::vector<double> costs;
    Profile worst_ne;
    double worst = -std::numeric_limits<double>::infinity();
    if (sc.quadratic_pricing()) {
        out.ne_mode = "exact";
        EnumerateOptions eopts;
        eopts.tol = solver.tol;
        eopts.budget = solver.budget;
        for (const auto& ne : enumerate_ne(sc, eopts)) {
            costs.push_back(ne.social);
            if (ne.social > worst) {
                worst = ne.social;
                worst_ne = ne.profile;
            }
        }
    } else {
        out.ne_mode = "dynamics";
        MultiStartOptions ms;
        ms.starts = solver.starts;
        ms.seed = seed;
        ms.dynamics.eps = solver.eps;
        ms.dynamics.max_rounds = solver.max_rounds;
        ms.dynamics.record_steps = false;
        for (const auto& trace : multi_start_dynamics(sc, ms)) {
            if (!trace.converged) continue;
            ++out.converged_starts;
            out.total_moves += trace.moves;
            const double cost = social_cost(sc, trace.terminal);
            costs.push_back(cost);
            if (cost > worst) {
                worst = cost;
                worst_ne = trace.terminal;
            }
        }
    }
    if (costs.empty()) throw error(errc::no_convergence, "no equilibrium found");
    if (opt.value == 0.0) throw error(errc::domain, "optimal social cost is zero; ratios undefined");

    const int n = static_cast<int>(sc.evs.size());
    const double b_max = sc.fleet_b_max();
    const double gsq = sc.ground_sq_sum();
    out.bounds.exact = out.ne_mode == "exact";
    out.bounds.ne_count = static_cast<int>(costs.size());
    out.bounds.opt = opt.value;
    out.bounds.worst_ne = worst;
    out.bounds.best_ne = *std::min_element(costs.begin(), costs.end());
    out.bounds.poa_empirical = out.bounds.worst_ne / opt.value;
    out.bounds.pos_empirical = out.bounds.best_ne / opt.value;
    out.bounds.poa_bound = 3.0 + 12.0 * b_max * b_max + 4.5 * gsq / n;
    out.bounds.pos_bound = 2.0 * (1.0 + b_max * b_max) + 2.0 * gsq / n;
    out.bounds.unit_cost_assumption_holds = opt.value >= static_cast<double>(n);

    out.balance = balance_report(sc, worst_ne);
    return out;
}

std::vector<std::string> efficiency_columns() {
    return {"n",        "pricing",   "latency",  "status",   "ne_mode",  "ne_count", "ne_cost_min",
            "ne_cost_max", "opt",    "poa",      "pos",      "poa_bound", "pos_bound", "unit_cost_ok",
            "v0_all",   "vne_all",   "v0_bad",   "vne_bad",  "improvement_pct", "mu_sq_sum", "balance_bound_ok",
            "good_stay_good", "starts_converged", "moves", "error"};
}

std::vector<std::string> efficiency_row(int n, const std::string& pricing, const std::string& latency,
                                        const CellOutcome& outcome, const EfficiencyCellResult* cell) {
    std::vector<std::string> row{std::to_string(n), pricing, latency, outcome.status};
    if (cell) {
        const auto& b = cell->bounds;
        const auto& bal = cell->balance;
        const double improvement = bal.v0_all > 0.0 ? 100.0 * (bal.v0_all - bal.vne_all) / bal.v0_all : 0.0;
        const bool dynamics = cell->ne_mode == "dynamics";
        row.insert(row.end(),
                   {cell->ne_mode, std::to_string(b.ne_count), fmt(b.best_ne), fmt(b.worst_ne), fmt(b.opt),
                    fmt(b.poa_empirical), fmt(b.pos_empirical), fmt(b.poa_bound), fmt(b.pos_bound),
                    fmt_bool(b.unit_cost_assumption_holds), fmt(bal.v0_all), fmt(bal.vne_all), fmt(bal.v0_bad),
                    fmt(bal.vne_bad), fmt(improvement), fmt(bal.mu_sq_sum), fmt_bool(bal.bad_station_bound_ok),
                    fmt_bool(bal.good_stay_good), dynamics ? std::to_string(cell->converged_starts) : "",
                    dynamics ? std::to_string(cell->total_moves) : "", ""});
    } else {
        row.insert(row.end(),
                   {"", "", "", "", "", "", "", "", "", "", "", "", "", "", "", "", "", "", "", "", outcome.detail});
    }
    return row;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
    const Scenario base = load_scenario(config.scenario_path);
    ExperimentResult result;

    if (config.mode == "hoeffding") {
        const GroundModel model = ground_model_of(base);
        double K = 0.0;
        for (const auto& spec : model.stations) K = std::max(K, ground_support_bound(spec));
        if (config.clamp_override) K = *config.clamp_override;
        const long long n = hoeffding_fleet_size(model, K, config.hoeffding_eps);
        ResultTable table;
        table.comments = {"hoeffding fleet sizing: smallest n with"
                          " n >= 4.5*sum(mu^2+var) + 4.5*K*sqrt(m*ln(1/eps))"};
        table.columns = {"m", "moment_sum", "K", "eps", "n"};
        double moment_sum = 0.0;
        for (const auto& spec : model.stations) {
            const double mu = ground_mean(spec);
            moment_sum += mu * mu + ground_variance(spec);
        }
        table.rows.push_back({std::to_string(model.stations.size()), fmt(moment_sum), fmt(K),
                              fmt(config.hoeffding_eps), std::to_string(n)});
        result.files["hoeffding.csv"] = table;
        return result;
    }

    if (config.mode == "monte-carlo") {
        const GroundModel model = ground_model_of(base);
        MonteCarloResult mc;
        if (config.mc_poa_trials > 0)
            mc = monte_carlo_guarantee_with_poa(base, model, config.mc_n, config.mc_trials, config.mc_poa_trials,
                                                config.seed);
        else
            mc = monte_carlo_guarantee(model, config.mc_n, config.mc_trials, config.seed);
        ResultTable table;
        table.comments = {"frequency of the sufficient event sum g^2 > n over independent seeded draws"};
        table.columns = {"n", "trials", "exceed_count", "exceedance", "poa_trials", "poa_exceed_count"};
        table.rows.push_back({fmt(config.mc_n), std::to_string(mc.trials), std::to_string(mc.exceed_count),
                              fmt(mc.exceedance), std::to_string(mc.poa_trials),
                              std::to_string(mc.poa_exceed_count)});
        result.files["montecarlo.csv"] = table;
        return result;
    }

    if (config.mode == "pt") {
        std::vector<std::string> presets = config.axes.pt_presets;
        if (presets.empty()) presets = {"A", "B", "C", "E", "neutral"};
        ResultTable table;
        table.comments = {"prospect-theory cells: multi-start best-response dynamics under quadratic pricing",
                          "v_ne_sq = sum_j L_j^2, v_ne_abs = sum_j |L_j| at the worst terminal"};
        table.columns = {"preset", "c", "c1", "c2", "c3", "status", "converged_starts", "pt_ne_cost_min",
                         "pt_ne_cost_max", "pt_opt", "pt_poa", "v_ne_sq", "v_ne_abs", "error"};
        std::vector<CellOutcome> outcomes(presets.size());
        std::vector<PtParams> preset_params(presets.size());
        for (std::size_t c = 0; c < presets.size(); ++c) preset_params[c] = pt_preset(presets[c]);
        parallel_for(presets.size(), [&](std::size_t c) {
            CellOutcome& cell = outcomes[c];
            const auto started = std::chrono::steady_clock::now();
            try {
                const PtParams& params = preset_params[c];
                const PtEvaluation pt = build_pt_evaluation(base, params);
                MultiStartOptions ms;
                ms.starts = config.solver.starts;
                ms.seed = derive_seed(config.seed, c);
                ms.dynamics.eps = config.solver.eps;
                ms.dynamics.max_rounds = config.solver.max_rounds;
                ms.dynamics.record_steps = false;
                const auto traces = pt_multi_start_dynamics(base, pt, ms);
                int converged = 0;
                double best = std::numeric_limits<double>::infinity();
                double worst = -std::numeric_limits<double>::infinity();
                Profile worst_profile;
                for (const auto& trace : traces) {
                    if (!trace.converged) continue;
                    ++converged;
                    const double cost = pt_social_cost(base, trace.terminal, pt);
                    best = std::min(best, cost);
                    if (cost > worst) {
                        worst = cost;
                        worst_profile = trace.terminal;
                    }
                }
                if (converged == 0) throw error(errc::no_convergence, "no converged prospect dynamics start");
                const OptimumResult opt = pt_social_optimum(base, pt, config.solver.budget, config.solver.multistarts);
                const Occupancy occ = derive_occupancy(base, worst_profile);
                double v_sq = 0.0, v_abs = 0.0;
                for (int j = 0; j < base.real_station_count; ++j) {
                    v_sq += occ.station_load[j] * occ.station_load[j];
                    v_abs += std::abs(occ.station_load[j]);
                }
                cell.row = {presets[c], fmt(params.c), fmt(params.c1), fmt(params.c2), fmt(params.c3), "ok",
                            std::to_string(converged), fmt(best), fmt(worst), fmt(opt.value),
                            fmt(worst / opt.value), fmt(v_sq), fmt(v_abs), ""};
            } catch (const error& e) {
                cell.status = errc_name(e.code);
                const PtParams& params = preset_params[c];
                cell.row = {presets[c], fmt(params.c), fmt(params.c1), fmt(params.c2), fmt(params.c3),
                            cell.status, "", "", "", "", "", "", "", e.what()};
            }
            cell.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
        });
        for (std::size_t c = 0; c < presets.size(); ++c) {
            table.rows.push_back(outcomes[c].row);
            result.wall_ms["pt:" + presets[c]] = outcomes[c].wall_ms;
            if (outcomes[c].status != "ok") ++result.failed_cells;
        }
        result.files["pt.csv"] = table;
        emit_plot_data(result);
        return result;
    }

    // efficiency-style modes share the sweep machinery: a single cell for
    // ne/poa/pos/balance/enumerate/optimum, a cross product for sweep
    std::vector<int> fleets = config.axes.fleet;
    if (fleets.empty()) fleets = {static_cast<int>(base.evs.size())};
    std::vector<std::string> pricings = config.axes.pricing;
    if (pricings.empty()) pricings = {"scenario"};
    std::vector<std::string> latencies = config.axes.latency;
    if (latencies.empty()) latencies = {"scenario"};

    struct CellKey {
        int n;
        std::string pricing;
        std::string latency;
    };
    std::vector<CellKey> cells;
    for (int n : fleets)
        for (const auto& p : pricings)
            for (const auto& l : latencies) cells.push_back({n, p, l});
    if (static_cast<long long>(cells.size()) > config.sweep_budget)
        throw error(errc::budget_exceeded, "sweep cross-product exceeds cell budget");

    std::sort(cells.begin(), cells.end(), [](const CellKey& a, const CellKey& b) {
        if (a.n != b.n) return a.n < b.n;
        if (a.pricing != b.pricing) return a.pricing < b.pricing;
        return a.latency < b.latency;
    });

    std::vector<CellOutcome> outcomes(cells.size());
    parallel_for(cells.size(), [&](std::size_t c) {
        CellOutcome& cell = outcomes[c];
        const auto started = std::chrono::steady_clock::now();
        EfficiencyCellResult computed;
        try {
            Scenario sc = with_fleet_size(base, cells[c].n);
            if (cells[c].pricing != "scenario") sc = with_pricing(sc, parse_pricing_token(cells[c].pricing));
            if (cells[c].latency != "scenario") sc = with_latency(sc, cells[c].latency);
            computed = solve_efficiency_cell(sc, config.solver, derive_seed(config.seed, c));
            cell.row = efficiency_row(cells[c].n, cells[c].pricing, cells[c].latency, cell, &computed);
        } catch (const error& e) {
            cell.status = errc_name(e.code);
            cell.detail = e.what();
            cell.row = efficiency_row(cells[c].n, cells[c].pricing, cells[c].latency, cell, nullptr);
        }
        cell.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    });

    ResultTable table;
    table.comments = {"one row per sweep cell; equilibria via exact enumeration (quadratic pricing)"
                      " or multi-start dynamics otherwise",
                      "improvement_pct = 100 (v0_all - vne_all) / v0_all at the worst equilibrium"};
    table.columns = efficiency_columns();
    for (std::size_t c = 0; c < cells.size(); ++c) {
        table.rows.push_back(outcomes[c].row);
        result.wall_ms[std::to_string(cells[c].n) + ":" + cells[c].pricing + ":" + cells[c].latency] =
            outcomes[c].wall_ms;
        if (outcomes[c].status != "ok") ++result.failed_cells;
    }
    result.files["results.csv"] = table;
    emit_plot_data(result);
    return result;
}

void emit_plot_data(ExperimentResult& result) {
    const auto results = result.files.find("results.csv");
    if (results != result.files.end()) {
        const ResultTable& src = results->second;
        const auto col = [&](const char* name) {
            for (std::size_t i = 0; i < src.columns.size(); ++i)
                if (src.columns[i] == name) return static_cast<int>(i);
            return -1;
        };
        const int c_n = col("n"), c_p = col("pricing"), c_l = col("latency"), c_poa = col("poa"),
                  c_imp = col("improvement_pct"), c_status = col("status");
        ResultTable poa;
        poa.comments = {"columns: n = fleet size, pricing = exponent token, latency = family,"
                        " poa = worst equilibrium cost / optimum"};
        poa.columns = {"n", "pricing", "latency", "poa"};
        ResultTable bal;
        bal.comments = {"columns: n, pricing, latency, improvement_percent = 100 (V0 - VNE) / V0"};
        bal.columns = {"n", "pricing", "latency", "improvement_percent"};
        for (const auto& row : src.rows) {
            if (row[c_status] != "ok") continue;
            poa.rows.push_back({row[c_n], row[c_p], row[c_l], row[c_poa]});
            bal.rows.push_back({row[c_n], row[c_p], row[c_l], row[c_imp]});
        }
        result.files["plot_poa_vs_n.csv"] = poa;
        result.files["plot_balance.csv"] = bal;
    }
    const auto pt = result.files.find("pt.csv");
    if (pt != result.files.end()) {
        const ResultTable& src = pt->second;
        ResultTable out;
        out.comments = {"columns: preset, poa = worst perceived-cost equilibrium / perceived optimum,"
                        " total_induced_load = sum_j L_j^2 (and |L_j|) at the worst equilibrium"};
        out.columns = {"preset", "poa", "total_induced_load_sq", "total_induced_load_abs"};
        for (const auto& row : src.rows) {
            if (row[5] != "ok") continue;
            out.rows.push_back({row[0], row[10], row[11], row[12]});
        }
        result.files["plot_pt.csv"] = out;
    }
}

std::string table_to_csv(const ResultTable& table) {
    std::string out;
    for (const auto& comment : table.comments) out += "# " + comment + "\n";
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        out += table.columns[i];
        out += i + 1 < table.columns.size() ? "," : "\n";
    }
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            out += row[i];
            out += i + 1 < row.size() ? "," : "\n";
        }
    }
    return out;
}

void write_result_files(const ExperimentResult& result, const std::string& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& [name, table] : result.files) {
        std::ofstream out(std::filesystem::path(dir) / name);
        if (!out) throw error(errc::io, "cannot write result file '" + name + "'");
        out << table_to_csv(table);
    }
    // timings are diagnostics only; reruns are byte-identical for the tables
    std::ofstream timing(std::filesystem::path(dir) / "timing.log");
    for (const auto& [key, ms] : result.wall_ms) timing << key << " " << format_g(ms, 6) << " ms\n";
}

}  // namespace evgrid
