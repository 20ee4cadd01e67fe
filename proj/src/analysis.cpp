#include "evgrid/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "evgrid/game_core.hpp"

namespace evgrid {

namespace {

double clamp(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

struct StationSubproblem {
    const Scenario* sc;
    const Station* st;
    std::vector<int> members;  // EV indices

    // station share of the social cost: sum of marginal prices plus battery risk
    double value(const std::vector<double>& loads) const {
        const double g = st->g;
        double L = 0.0;
        for (double l : loads) L += l;
        double v = 0.0;
        if (st->k == 2.0) {
            const double x = L - g;
            for (std::size_t m = 0; m < loads.size(); ++m) {
                const double xm = x - loads[m];
                v += x * x - xm * xm;
            }
        } else {
            for (std::size_t m = 0; m < loads.size(); ++m)
                v += pricing(*st, -g + L) - pricing(*st, -g + L - loads[m]);
        }
        for (std::size_t m = 0; m < loads.size(); ++m) {
            const Ev& ev = sc->evs[members[m]];
            v += std::log(ev.b_hi / (ev.b + loads[m]));
        }
        return v;
    }

    // exact coordinate minimizer for quadratic pricing:
    // d/dl [2L^2 - 2gL - sum l^2 + sum ln] = 2l + 2u - 1/(b+l), u = 2*others - g
    double coordinate_min(const std::vector<double>& loads, std::size_t idx) const {
        const Ev& ev = sc->evs[members[idx]];
        const double lo = ev.load_min();
        const double hi = ev.load_max();
        if (st->k == 2.0) {
            double others = 0.0;
            for (std::size_t m = 0; m < loads.size(); ++m)
                if (m != idx) others += loads[m];
            const double u = 2.0 * others - st->g;
            const double l = 0.5 * (-(ev.b + u) + std::sqrt((ev.b - u) * (ev.b - u) + 2.0));
            return clamp(l, lo, hi);
        }
        std::vector<double> work = loads;
        const auto objective = [&](double l) {
            work[idx] = l;
            return value(work);
        };
        return grid_golden_min(objective, lo, hi, 97, 1e-9 * std::max(1.0, hi - lo));
    }

    double descend(std::vector<double>& loads, double tol, int max_sweeps = 500) const {
        double best = value(loads);
        for (int sweep = 0; sweep < max_sweeps; ++sweep) {
            double moved = 0.0;
            for (std::size_t idx = 0; idx < loads.size(); ++idx) {
                const double next = coordinate_min(loads, idx);
                moved = std::max(moved, std::abs(next - loads[idx]));
                loads[idx] = next;
            }
            const double now = value(loads);
            if (moved <= tol || best - now <= 1e-13 * std::max(1.0, std::abs(best))) {
                best = std::min(best, now);
                break;
            }
            best = now;
        }
        return value(loads);
    }

    // Seeded multistart projected coordinate descent. Starts cover the
    // symmetric stationary point, Nash loads, corners, staggered corner
    // patterns and uniform random points.
    std::pair<double, std::vector<double>> solve(int multistarts, double tol) const {
        const std::size_t q = members.size();
        std::vector<std::vector<double>> starts;
        starts.emplace_back(q, 0.0);
        {
            std::vector<double> s(q);
            for (std::size_t m = 0; m < q; ++m) s[m] = sc->evs[members[m]].load_min();
            starts.push_back(s);
            for (std::size_t m = 0; m < q; ++m) s[m] = sc->evs[members[m]].load_max();
            starts.push_back(s);
        }
        if (st->k == 2.0) {
            std::vector<Ev> evs;
            for (int i : members) evs.push_back(sc->evs[i]);
            starts.push_back(restricted_nash_loads(*st, evs));
            if (sc->fleet_identical()) {
                const double l = symmetric_coordinated_load(st->g, static_cast<int>(q), evs[0].b, evs[0].b_lo, evs[0].b_hi);
                starts.emplace_back(q, l);
            }
        }
        for (std::size_t split = 1; split < q && static_cast<int>(starts.size()) < multistarts; ++split) {
            std::vector<double> s(q);
            for (std::size_t m = 0; m < q; ++m)
                s[m] = m < split ? sc->evs[members[m]].load_max() : sc->evs[members[m]].load_min();
            starts.push_back(s);
        }
        auto rng = make_rng(derive_seed(0x5eedULL, static_cast<std::uint64_t>(members.size()) * 131 +
                                                        static_cast<std::uint64_t>(st->edge)));
        while (static_cast<int>(starts.size()) < multistarts) {
            std::vector<double> s(q);
            for (std::size_t m = 0; m < q; ++m) {
                const Ev& ev = sc->evs[members[m]];
                s[m] = uniform_real(rng, ev.load_min(), ev.load_max());
            }
            starts.push_back(s);
        }

        double best = std::numeric_limits<double>::infinity();
        std::vector<double> best_loads(q, 0.0);
        for (auto& s : starts) {
            const double v = descend(s, tol);
            if (v < best) {
                best = v;
                best_loads = s;
            }
        }
        return {best, best_loads};
    }
};

}  // namespace

OptimumResult social_optimum(const Scenario& sc, const OptimumOptions& opts) {
    const auto options = build_option_table(sc);
    const int n = static_cast<int>(sc.evs.size());

    long long total = 1;
    for (const auto& opts_i : options) {
        const long long count = static_cast<long long>(opts_i.size());
        if (total > opts.budget / count)
            throw error(errc::budget_exceeded,
                        "assignment space exceeds optimization budget of " + std::to_string(opts.budget));
        total *= count;
    }

    // identical fleets let the continuous subproblem be cached by (station, count)
    const bool identical = sc.fleet_identical();
    std::vector<std::vector<std::pair<double, std::vector<double>>>> cache;
    if (identical) {
        cache.assign(sc.stations.size(), {});
        for (std::size_t j = 0; j < sc.stations.size(); ++j) {
            if (sc.stations[j].is_virtual) continue;
            cache[j].resize(n + 1);
            for (int q = 1; q <= n; ++q) {
                StationSubproblem sub{&sc, &sc.stations[j], std::vector<int>()};
                for (int m = 0; m < q; ++m) sub.members.push_back(m);
                cache[j][q] = sub.solve(opts.multistarts, opts.tol);
            }
        }
    }

    const long long count = total;
    const int workers = worker_count();
    const long long chunk = (count + workers - 1) / workers;
    struct Best {
        double value = std::numeric_limits<double>::infinity();
        long long rank = -1;
        Profile profile;
    };
    std::vector<Best> best(static_cast<std::size_t>(workers));

    parallel_for(static_cast<std::size_t>(workers), [&](std::size_t w) {
        const long long begin = static_cast<long long>(w) * chunk;
        const long long end = std::min(count, begin + chunk);
        if (begin >= end) return;
        std::vector<int> choice(n, 0);
        std::vector<std::vector<int>> members(sc.stations.size());
        std::vector<int> edge_count(sc.edges.size(), 0);
        Profile profile;
        profile.actions.resize(n);
        for (long long rank = begin; rank < end; ++rank) {
            long long r = rank;
            for (int i = 0; i < n; ++i) {
                choice[i] = static_cast<int>(r % options[i].size());
                r /= static_cast<long long>(options[i].size());
            }
            for (auto& m : members) m.clear();
            std::fill(edge_count.begin(), edge_count.end(), 0);
            double fixed = 0.0;
            for (int i = 0; i < n; ++i) {
                const auto& opt = options[i][choice[i]];
                profile.actions[i].path = opt.path;
                profile.actions[i].station = opt.station;
                profile.actions[i].load = 0.0;
                for (int e : opt.path) ++edge_count[e];
                if (sc.stations[opt.station].is_virtual) {
                    fixed += std::log(sc.evs[i].b_hi / sc.evs[i].b);  // battery risk at zero load
                } else {
                    members[opt.station].push_back(i);
                }
            }
            for (std::size_t e = 0; e < sc.edges.size(); ++e)
                if (edge_count[e] > 0) fixed += edge_count[e] * latency(sc.edges[e], edge_count[e]);
            for (std::size_t j = 0; j < sc.stations.size(); ++j) {
                if (sc.stations[j].is_virtual || members[j].empty()) continue;
                const double q = static_cast<double>(members[j].size());
                fixed += q * q / sc.stations[j].sigma;
            }

            double value = fixed;
            for (std::size_t j = 0; j < sc.stations.size(); ++j) {
                if (sc.stations[j].is_virtual || members[j].empty()) continue;
                if (identical) {
                    const auto& entry = cache[j][members[j].size()];
                    value += entry.first;
                    for (std::size_t m = 0; m < members[j].size(); ++m)
                        profile.actions[members[j][m]].load = entry.second[m];
                } else {
                    StationSubproblem sub{&sc, &sc.stations[j], members[j]};
                    const auto entry = sub.solve(opts.multistarts, opts.tol);
                    value += entry.first;
                    for (std::size_t m = 0; m < members[j].size(); ++m)
                        profile.actions[members[j][m]].load = entry.second[m];
                }
            }

            if (value < best[w].value || (value == best[w].value && rank < best[w].rank)) {
                best[w].value = value;
                best[w].rank = rank;
                best[w].profile = profile;
            }
        }
    });

    Best overall;
    for (const auto& cand : best) {
        if (cand.rank < 0) continue;
        if (cand.value < overall.value ||
            (cand.value == overall.value && (overall.rank < 0 || cand.rank < overall.rank))) {
            overall = cand;
        }
    }
    if (overall.rank < 0) throw error(errc::domain, "social_optimum: empty assignment space");

    OptimumResult out;
    out.profile = std::move(overall.profile);
    out.value = social_cost(sc, out.profile);
    return out;
}

BoundReport analyze_efficiency(const Scenario& sc, const EfficiencyOptions& opts) {
    const OptimumResult opt = social_optimum(sc, opts.optimum);
    const int n = static_cast<int>(sc.evs.size());

    std::vector<double> ne_costs;
    if (opts.mode == NeSetMode::exact) {
        const auto nes = enumerate_ne(sc, opts.enumerate);
        for (const auto& ne : nes) ne_costs.push_back(ne.social);
    } else {
        const auto traces = multi_start_dynamics(sc, opts.multistart);
        for (const auto& trace : traces)
            if (trace.converged) ne_costs.push_back(social_cost(sc, trace.terminal));
    }
    if (ne_costs.empty()) throw error(errc::no_convergence, "no equilibrium found");

    BoundReport report;
    report.exact = opts.mode == NeSetMode::exact;
    report.ne_count = static_cast<int>(ne_costs.size());
    report.opt = opt.value;
    report.worst_ne = *std::max_element(ne_costs.begin(), ne_costs.end());
    report.best_ne = *std::min_element(ne_costs.begin(), ne_costs.end());
    if (opt.value == 0.0) throw error(errc::domain, "optimal social cost is zero; ratios undefined");
    report.poa_empirical = report.worst_ne / opt.value;
    report.pos_empirical = report.best_ne / opt.value;

    const double b_max = sc.fleet_b_max();
    const double gsq = sc.ground_sq_sum();
    report.poa_bound = 3.0 + 12.0 * b_max * b_max + 4.5 * gsq / n;
    report.pos_bound = 2.0 * (1.0 + b_max * b_max) + 2.0 * gsq / n;
    report.unit_cost_assumption_holds = opt.value >= static_cast<double>(n);
    return report;
}

BoundReport price_of_anarchy(const Scenario& sc, const EfficiencyOptions& opts) { return analyze_efficiency(sc, opts); }
BoundReport price_of_stability(const Scenario& sc, const EfficiencyOptions& opts) { return analyze_efficiency(sc, opts); }

BalanceReport balance_report(const Scenario& sc, const Profile& ne) {
    const Occupancy occ = derive_occupancy(sc, ne);
    BalanceReport report;
    const double b_min = sc.fleet_b_min();
    report.threshold = std::sqrt(5.0) / (2.0 * b_min);
    report.guarantees_applicable = sc.fleet_identical() && sc.quadratic_pricing();
    const double good_cap = 5.0 / (4.0 * b_min * b_min);

    const double b = sc.evs[0].b;
    const double b_lo = sc.evs[0].b_lo;
    const double b_hi = sc.evs[0].b_hi;

    report.good_stay_good = true;
    for (int j = 0; j < sc.real_station_count; ++j) {
        const Station& st = sc.stations[j];
        StationBalance row;
        row.station = j;
        row.g = st.g;
        row.g_ne = st.g - occ.station_load[j];
        row.members = occ.station_count[j];
        row.bad_initial = std::abs(st.g) > report.threshold;
        row.good_final = row.g_ne * row.g_ne <= good_cap;
        if (report.guarantees_applicable && row.bad_initial && row.members > 0) {
            const double q = static_cast<double>(row.members);
            if (st.g <= (2.0 * q - 1.0) * (b_lo - b) - 1.0 / (2.0 * b_lo))
                row.mu = q * (b_lo - b);
            else if (st.g >= (2.0 * q - 1.0) * (b_hi - b) + 1.0 / (2.0 * b_hi))
                row.mu = q * (b_hi - b);
            else
                row.mu = 0.5 * st.g;
        }
        report.v0_all += st.g * st.g;
        report.vne_all += row.g_ne * row.g_ne;
        if (row.bad_initial) {
            report.v0_bad += st.g * st.g;
            report.vne_bad += row.g_ne * row.g_ne;
            report.mu_sq_sum += row.mu * row.mu;
        } else if (!row.good_final) {
            report.good_stay_good = false;
        }
        report.stations.push_back(row);
    }
    report.bad_station_bound_ok =
        report.v0_bad == 0.0 ? true : report.vne_bad < report.v0_bad - report.mu_sq_sum;
    return report;
}

}  // namespace evgrid
