// Python bindings for the main operations: scenario I/O, cost evaluation,
// equilibrium solving, efficiency/balance analysis, fleet sizing and the
// prospect-theoretic variant. Profiles cross the boundary as plain dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "evgrid/experiment.hpp"
#include "evgrid/prospect.hpp"
#include "evgrid/scenario_io.hpp"
#include "evgrid/stochastic.hpp"

namespace py = pybind11;
using namespace evgrid;

namespace {

Profile profile_from_py(const Scenario& sc, const py::list& actions) {
    Profile p;
    p.actions.resize(sc.evs.size());
    if (actions.size() != sc.evs.size()) throw error(errc::validation, "profile needs one action per EV");
    for (std::size_t i = 0; i < sc.evs.size(); ++i) {
        const py::dict row = actions[i].cast<py::dict>();
        Action a;
        for (const auto& e : row["path"].cast<py::list>()) {
            const int ei = sc.edge_index(e.cast<std::string>());
            if (ei < 0) throw error(errc::validation, "unknown edge in profile");
            a.path.push_back(ei);
        }
        a.station = sc.station_index(row["station"].cast<std::string>());
        if (a.station < 0) throw error(errc::validation, "unknown station in profile");
        a.load = row.contains("load") ? row["load"].cast<double>() : 0.0;
        p.actions[i] = a;
        validate_action(sc, static_cast<int>(i), p.actions[i]);
    }
    return p;
}

py::list profile_to_py(const Scenario& sc, const Profile& p) {
    py::list out;
    for (std::size_t i = 0; i < p.actions.size(); ++i) {
        py::dict row;
        row["ev"] = sc.evs[i].name;
        py::list path;
        for (int e : p.actions[i].path) path.append(sc.edges[e].name);
        row["path"] = path;
        row["station"] = sc.stations[p.actions[i].station].name;
        row["load"] = p.actions[i].load;
        out.append(row);
    }
    return out;
}

py::dict breakdown_to_py(const CostBreakdown& c) {
    py::dict out;
    out["congestion"] = c.congestion;
    out["queueing"] = c.queueing;
    out["battery_risk"] = c.battery_risk;
    out["energy_price"] = c.energy_price;
    out["total"] = c.total;
    return out;
}

py::dict occupancy_to_py(const Scenario& sc, const Profile& p) {
    const Occupancy occ = derive_occupancy(sc, p);
    py::dict out;
    for (int j = 0; j < sc.real_station_count; ++j) {
        py::dict st;
        st["members"] = occ.station_count[j];
        st["load"] = occ.station_load[j];
        out[py::str(sc.stations[j].name)] = st;
    }
    return out;
}

PtParams params_from_py(const py::object& params) {
    if (params.is_none()) return {1.0, 1.0, 1.0, 1.0};
    const auto t = params.cast<std::vector<double>>();
    if (t.size() != 4) throw error(errc::validation, "PT params must be (c, c1, c2, c3)");
    return {t[0], t[1], t[2], t[3]};
}

}  // namespace

PYBIND11_MODULE(evgrid, m) {
    m.doc() = "Noncooperative EV routing/charging: equilibria, efficiency bounds, load balance";

    py::register_exception<error>(m, "EvgridError");

    py::class_<Scenario>(m, "Scenario")
        .def_property_readonly("n_evs", [](const Scenario& sc) { return sc.evs.size(); })
        .def_property_readonly("nodes", [](const Scenario& sc) { return sc.nodes; })
        .def_property_readonly("edges",
                               [](const Scenario& sc) {
                                   std::vector<std::string> names;
                                   for (const auto& e : sc.edges) names.push_back(e.name);
                                   return names;
                               })
        .def_property_readonly("stations",
                               [](const Scenario& sc) {
                                   std::vector<std::string> names;
                                   for (int j = 0; j < sc.real_station_count; ++j) names.push_back(sc.stations[j].name);
                                   return names;
                               })
        .def("__repr__", [](const Scenario& sc) {
            return "<evgrid.Scenario " + std::to_string(sc.nodes.size()) + " nodes, " +
                   std::to_string(sc.edges.size()) + " edges, " + std::to_string(sc.real_station_count) +
                   " stations, " + std::to_string(sc.evs.size()) + " EVs>";
        });

    m.def("load_scenario", &load_scenario, py::arg("path"));
    m.def("parse_scenario", &parse_scenario, py::arg("json_text"));
    m.def("serialize_scenario", &serialize_scenario, py::arg("scenario"));
    m.def("with_fleet_size", &with_fleet_size, py::arg("scenario"), py::arg("n"));
    m.def("with_pricing", &with_pricing, py::arg("scenario"), py::arg("k"));
    m.def("with_latency", &with_latency, py::arg("scenario"), py::arg("family"));

    m.def(
        "enumerate_paths",
        [](const Scenario& sc, const std::string& s, const std::string& t, int cap) {
            const int si = sc.node_index(s), ti = sc.node_index(t);
            const auto paths = enumerate_paths(sc, si, ti, cap);
            py::list out;
            for (const auto& path : paths) {
                py::list edges;
                for (int e : path) edges.append(sc.edges[e].name);
                out.append(edges);
            }
            return out;
        },
        py::arg("scenario"), py::arg("s"), py::arg("t"), py::arg("cap") = 10000);

    m.def(
        "ev_cost",
        [](const Scenario& sc, const py::list& profile, int i) {
            return breakdown_to_py(ev_cost(sc, profile_from_py(sc, profile), i));
        },
        py::arg("scenario"), py::arg("profile"), py::arg("i"));
    m.def(
        "potential",
        [](const Scenario& sc, const py::list& profile) { return potential(sc, profile_from_py(sc, profile)); },
        py::arg("scenario"), py::arg("profile"));
    m.def(
        "social_cost",
        [](const Scenario& sc, const py::list& profile) { return social_cost(sc, profile_from_py(sc, profile)); },
        py::arg("scenario"), py::arg("profile"));
    m.def(
        "occupancy",
        [](const Scenario& sc, const py::list& profile) {
            return occupancy_to_py(sc, profile_from_py(sc, profile));
        },
        py::arg("scenario"), py::arg("profile"));

    m.def(
        "is_nash",
        [](const Scenario& sc, const py::list& profile, double tol) {
            const NashCheck check = is_nash(sc, profile_from_py(sc, profile), tol);
            py::dict out;
            out["is_nash"] = check.is_nash;
            out["worst_gain"] = check.worst.gain;
            out["worst_player"] = check.worst.player;
            return out;
        },
        py::arg("scenario"), py::arg("profile"), py::arg("tol") = 1e-9);

    m.def(
        "solve",
        [](const Scenario& sc, int starts, std::uint64_t seed, double eps, int max_rounds) {
            MultiStartOptions ms;
            ms.starts = starts;
            ms.seed = seed;
            ms.dynamics.eps = eps;
            ms.dynamics.max_rounds = max_rounds;
            ms.dynamics.record_steps = false;
            const auto traces = multi_start_dynamics(sc, ms);
            const DynamicsTrace* best = nullptr;
            double best_cost = 0.0;
            int converged = 0;
            for (const auto& trace : traces) {
                if (!trace.converged) continue;
                ++converged;
                const double cost = social_cost(sc, trace.terminal);
                if (!best || cost < best_cost) {
                    best = &trace;
                    best_cost = cost;
                }
            }
            if (!best) throw error(errc::no_convergence, "no start converged");
            py::dict out;
            out["converged_starts"] = converged;
            out["social_cost"] = best_cost;
            out["potential"] = potential(sc, best->terminal);
            out["profile"] = profile_to_py(sc, best->terminal);
            out["occupancy"] = occupancy_to_py(sc, best->terminal);
            return out;
        },
        py::arg("scenario"), py::arg("starts") = 64, py::arg("seed") = 0, py::arg("eps") = 1e-6,
        py::arg("max_rounds") = 500);

    m.def(
        "enumerate_ne",
        [](const Scenario& sc, double tol, long long budget) {
            EnumerateOptions opts;
            opts.tol = tol;
            opts.budget = budget;
            const auto nes = enumerate_ne(sc, opts);
            py::list out;
            for (const auto& ne : nes) {
                py::dict row;
                row["social_cost"] = ne.social;
                row["profile"] = profile_to_py(sc, ne.profile);
                row["occupancy"] = occupancy_to_py(sc, ne.profile);
                out.append(row);
            }
            return out;
        },
        py::arg("scenario"), py::arg("tol") = 1e-9, py::arg("budget") = 10'000'000);

    m.def(
        "social_optimum",
        [](const Scenario& sc, long long budget) {
            OptimumOptions opts;
            opts.budget = budget;
            const OptimumResult opt = social_optimum(sc, opts);
            py::dict out;
            out["value"] = opt.value;
            out["profile"] = profile_to_py(sc, opt.profile);
            out["occupancy"] = occupancy_to_py(sc, opt.profile);
            return out;
        },
        py::arg("scenario"), py::arg("budget") = 10'000'000);

    m.def(
        "efficiency_report",
        [](const Scenario& sc, bool exact, int starts, std::uint64_t seed) {
            EfficiencyOptions opts;
            opts.mode = exact ? NeSetMode::exact : NeSetMode::dynamics;
            opts.multistart.starts = starts;
            opts.multistart.seed = seed;
            opts.multistart.dynamics.record_steps = false;
            const BoundReport r = analyze_efficiency(sc, opts);
            py::dict out;
            out["poa"] = r.poa_empirical;
            out["pos"] = r.pos_empirical;
            out["poa_bound"] = r.poa_bound;
            out["pos_bound"] = r.pos_bound;
            out["opt"] = r.opt;
            out["worst_ne"] = r.worst_ne;
            out["best_ne"] = r.best_ne;
            out["ne_count"] = r.ne_count;
            out["exact"] = r.exact;
            out["unit_cost_assumption_holds"] = r.unit_cost_assumption_holds;
            return out;
        },
        py::arg("scenario"), py::arg("exact") = true, py::arg("starts") = 64, py::arg("seed") = 0);

    m.def(
        "balance_report",
        [](const Scenario& sc, const py::list& profile) {
            const BalanceReport r = balance_report(sc, profile_from_py(sc, profile));
            py::dict out;
            out["threshold"] = r.threshold;
            out["v0_all"] = r.v0_all;
            out["vne_all"] = r.vne_all;
            out["v0_bad"] = r.v0_bad;
            out["vne_bad"] = r.vne_bad;
            out["mu_sq_sum"] = r.mu_sq_sum;
            out["guarantees_applicable"] = r.guarantees_applicable;
            out["bad_station_bound_ok"] = r.bad_station_bound_ok;
            out["good_stay_good"] = r.good_stay_good;
            py::list stations;
            for (const auto& row : r.stations) {
                py::dict st;
                st["station"] = sc.stations[row.station].name;
                st["g"] = row.g;
                st["g_ne"] = row.g_ne;
                st["members"] = row.members;
                st["bad_initial"] = row.bad_initial;
                st["good_final"] = row.good_final;
                st["mu"] = row.mu;
                stations.append(st);
            }
            out["stations"] = stations;
            return out;
        },
        py::arg("scenario"), py::arg("profile"));

    m.def("symmetric_coordinated_load", &symmetric_coordinated_load, py::arg("g"), py::arg("members"), py::arg("b"),
          py::arg("b_lo"), py::arg("b_hi"));
    m.def(
        "restricted_station_ne",
        [](double g, double sigma, int members, double b, double b_lo, double b_hi) {
            Station st{"Q", 0, sigma, 2.0, g, false, {}};
            const std::vector<Ev> evs(members, Ev{"ev", 0, 1, b, b_lo, b_hi});
            return restricted_station_ne(st, evs);
        },
        py::arg("g"), py::arg("sigma"), py::arg("members"), py::arg("b"), py::arg("b_lo"), py::arg("b_hi"));

    m.def(
        "hoeffding_fleet_size",
        [](const std::vector<std::pair<double, double>>& moments, double K, double eps) {
            return hoeffding_fleet_size(moments, K, eps);
        },
        py::arg("moments"), py::arg("K"), py::arg("eps"));
    m.def(
        "monte_carlo_guarantee",
        [](const Scenario& sc, double n, int trials, std::uint64_t seed) {
            const auto r = monte_carlo_guarantee(ground_model_of(sc), n, trials, seed);
            py::dict out;
            out["trials"] = r.trials;
            out["exceed_count"] = r.exceed_count;
            out["exceedance"] = r.exceedance;
            return out;
        },
        py::arg("scenario"), py::arg("n"), py::arg("trials") = 10000, py::arg("seed") = 0);

    m.def("prelec_weight", &prelec_weight, py::arg("p"), py::arg("c"));
    m.def(
        "tversky_value",
        [](double z, double z_r, const py::object& params) { return tversky_value(z, z_r, params_from_py(params)); },
        py::arg("z"), py::arg("z_r"), py::arg("params") = py::none());

    m.def(
        "pt_solve",
        [](const Scenario& sc, const py::object& params, int starts, std::uint64_t seed, double eps, int max_rounds) {
            const PtEvaluation pt = build_pt_evaluation(sc, params_from_py(params));
            MultiStartOptions ms;
            ms.starts = starts;
            ms.seed = seed;
            ms.dynamics.eps = eps;
            ms.dynamics.max_rounds = max_rounds;
            ms.dynamics.record_steps = false;
            const auto traces = pt_multi_start_dynamics(sc, pt, ms);
            const DynamicsTrace* best = nullptr;
            double best_cost = 0.0;
            int converged = 0;
            for (const auto& trace : traces) {
                if (!trace.converged) continue;
                ++converged;
                const double cost = pt_social_cost(sc, trace.terminal, pt);
                if (!best || cost < best_cost) {
                    best = &trace;
                    best_cost = cost;
                }
            }
            if (!best) throw error(errc::no_convergence, "no start converged");
            py::dict out;
            out["converged_starts"] = converged;
            out["pt_social_cost"] = best_cost;
            out["profile"] = profile_to_py(sc, best->terminal);
            out["occupancy"] = occupancy_to_py(sc, best->terminal);
            return out;
        },
        py::arg("scenario"), py::arg("params") = py::none(), py::arg("starts") = 32, py::arg("seed") = 0,
        py::arg("eps") = 1e-6, py::arg("max_rounds") = 500);
}
