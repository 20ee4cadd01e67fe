#include "evgrid/equilibrium.hpp"

#include <algorithm>
#include <cmath>

#include "evgrid/game_core.hpp"

namespace evgrid {

namespace {

double clamp(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

}  // namespace

double optimize_load_1d(const LoadContext& ctx) {
    const double lo = ctx.b_lo - ctx.b;
    const double hi = ctx.b_hi - ctx.b;
    if (ctx.zero_pricing) return clamp(0.0, lo, hi);
    if (ctx.k == 2.0) {
        // stationarity of (c + l)^2 + ln(b_hi/(b + l)) with c = others - g:
        // 2(c + l)(b + l) = 1, take the root above -b
        const double c = ctx.others_load - ctx.g;
        const double l = 0.5 * (-(ctx.b + c) + std::sqrt((ctx.b - c) * (ctx.b - c) + 2.0));
        return clamp(l, lo, hi);
    }
    const auto objective = [&](double l) {
        return std::pow(std::abs(-ctx.g + ctx.others_load + l), ctx.k) + std::log(ctx.b_hi / (ctx.b + l));
    };
    return grid_golden_min(objective, lo, hi, 4097, 1e-10 * std::max(1.0, hi - lo));
}

CgtGameView::CgtGameView(const Scenario& sc) : sc_(&sc) {}

double CgtGameView::action_cost(const Occupancy& occ, int i, const Action& a) const {
    return ev_cost(*sc_, occ, i, a).total;
}

double CgtGameView::optimal_load(int station, int i, double others_load) const {
    const Station& st = sc_->stations[station];
    const Ev& ev = sc_->evs[i];
    LoadContext ctx;
    ctx.g = st.g;
    ctx.others_load = others_load;
    ctx.k = st.k;
    ctx.zero_pricing = st.is_virtual;
    ctx.b = ev.b;
    ctx.b_lo = ev.b_lo;
    ctx.b_hi = ev.b_hi;
    return optimize_load_1d(ctx);
}

double CgtGameView::potential_value(const Occupancy& occ, const Profile& p) const {
    return potential(*sc_, occ, p);
}

BestResponse best_response(const Scenario& sc, const Profile& p, int i) {
    const CgtGameView game(sc);
    Occupancy occ = derive_occupancy(sc, p);
    occupancy_remove(occ, sc, i, p.actions[i]);
    return best_response_core(game, occ, i, ev_options(sc, i));
}

NashCheck is_nash(const Scenario& sc, const Profile& p, double tol) {
    const CgtGameView game(sc);
    return is_nash_core(game, p, tol, build_option_table(sc));
}

DynamicsTrace run_best_response_dynamics(const Scenario& sc, const Profile& initial, const DynamicsOptions& opts) {
    if (opts.eps <= 0.0) throw error(errc::validation, "dynamics: eps must be positive");
    const CgtGameView game(sc);
    return dynamics_core(game, initial, opts, build_option_table(sc));
}

Profile random_profile(const Scenario& sc, const std::vector<std::vector<EvOption>>& options, std::uint64_t seed) {
    auto rng = make_rng(seed);
    Profile p;
    p.actions.resize(sc.evs.size());
    for (std::size_t i = 0; i < sc.evs.size(); ++i) {
        const auto& opt = options[i][uniform_index(rng, options[i].size())];
        p.actions[i] = {opt.path, opt.station, 0.0};
    }
    return p;
}

std::vector<DynamicsTrace> multi_start_dynamics(const Scenario& sc, const MultiStartOptions& opts) {
    const CgtGameView game(sc);
    const auto options = build_option_table(sc);
    std::vector<DynamicsTrace> traces(opts.starts);
    parallel_for(static_cast<std::size_t>(opts.starts), [&](std::size_t s) {
        DynamicsOptions dyn = opts.dynamics;
        dyn.seed = derive_seed(opts.seed, 2 * s + 1);
        Profile init = random_profile(sc, options, derive_seed(opts.seed, 2 * s));
        traces[s] = dynamics_core(game, init, dyn, options);
    });
    return traces;
}

double symmetric_coordinated_load(double g, int q, double b, double b_lo, double b_hi) {
    const double lo = b_lo - b;
    const double hi = b_hi - b;
    const double qq = static_cast<double>(q);
    if (g <= (2.0 * qq - 1.0) * lo - 1.0 / (2.0 * b_lo)) return lo;
    if (g >= (2.0 * qq - 1.0) * hi - 1.0 / (2.0 * b_hi)) return hi;
    const double psi = (2.0 * qq - 1.0) * b + g;
    const double l = (2.0 * g - psi + std::sqrt(psi * psi + 4.0 * qq - 2.0)) / (4.0 * qq - 2.0);
    return clamp(l, lo, hi);
}

namespace {

// Symmetric root of Q l - g = 1/(2(b+l)), the identical-member Nash load.
double symmetric_nash_load(double g, int q, double b, double b_lo, double b_hi) {
    const double lo = b_lo - b;
    const double hi = b_hi - b;
    const double qq = static_cast<double>(q);
    if (g <= qq * lo - 1.0 / (2.0 * b_lo)) return lo;
    if (g >= qq * hi - 1.0 / (2.0 * b_hi)) return hi;
    const double l = (g - qq * b + std::sqrt((qq * b + g) * (qq * b + g) + 2.0 * qq)) / (2.0 * qq);
    return clamp(l, lo, hi);
}

}  // namespace

std::vector<double> restricted_nash_loads(const Station& st, const std::vector<Ev>& members, double tol) {
    if (members.empty()) return {};
    if (st.is_virtual) return std::vector<double>(members.size(), 0.0);
    if (st.k != 2.0)
        throw error(errc::unsupported_pricing, "restricted Nash loads require quadratic pricing");

    bool identical = true;
    for (const auto& ev : members)
        if (ev.b != members[0].b || ev.b_lo != members[0].b_lo || ev.b_hi != members[0].b_hi) identical = false;
    if (identical) {
        const double l = symmetric_nash_load(st.g, static_cast<int>(members.size()), members[0].b,
                                             members[0].b_lo, members[0].b_hi);
        return std::vector<double>(members.size(), l);
    }

    // Gauss-Seidel sweeps of exact 1-D best responses; this is coordinate
    // descent on the strictly convex restricted potential, so the fixed point
    // is the unique Nash point.
    std::vector<double> loads(members.size(), 0.0);
    double sum = 0.0;
    const int max_sweeps = 100000;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double delta = 0.0;
        for (std::size_t i = 0; i < members.size(); ++i) {
            LoadContext ctx;
            ctx.g = st.g;
            ctx.others_load = sum - loads[i];
            ctx.k = 2.0;
            ctx.b = members[i].b;
            ctx.b_lo = members[i].b_lo;
            ctx.b_hi = members[i].b_hi;
            const double next = optimize_load_1d(ctx);
            delta = std::max(delta, std::abs(next - loads[i]));
            sum += next - loads[i];
            loads[i] = next;
        }
        if (delta <= tol) return loads;
    }
    throw error(errc::no_convergence, "restricted Nash loads: fixed point not reached");
}

std::vector<double> restricted_station_ne(const Station& st, const std::vector<Ev>& members) {
    if (members.empty()) return {};
    if (st.is_virtual) return std::vector<double>(members.size(), 0.0);
    if (st.k != 2.0)
        throw error(errc::unsupported_pricing, "restricted station equilibrium requires quadratic pricing");
    bool identical = true;
    for (const auto& ev : members)
        if (ev.b != members[0].b || ev.b_lo != members[0].b_lo || ev.b_hi != members[0].b_hi) identical = false;
    if (identical) {
        const double l = symmetric_coordinated_load(st.g, static_cast<int>(members.size()), members[0].b,
                                                 members[0].b_lo, members[0].b_hi);
        return std::vector<double>(members.size(), l);
    }
    return restricted_nash_loads(st, members);
}

std::vector<NeSolution> enumerate_ne(const Scenario& sc, const EnumerateOptions& opts) {
    if (!sc.quadratic_pricing())
        throw error(errc::unsupported_pricing, "exact NE enumeration requires quadratic pricing");
    const auto options = build_option_table(sc);
    const int n = static_cast<int>(sc.evs.size());

    long long total = 1;
    for (const auto& opts_i : options) {
        const long long count = static_cast<long long>(opts_i.size());
        if (total > opts.budget / count)
            throw error(errc::budget_exceeded,
                        "assignment space exceeds enumeration budget of " + std::to_string(opts.budget));
        total *= count;
    }

    const CgtGameView game(sc);

    // cache symmetric Nash loads by (station, count) when the fleet is identical
    const bool identical = sc.fleet_identical();
    std::vector<std::vector<double>> sym_cache;
    if (identical) {
        sym_cache.assign(sc.stations.size(), std::vector<double>(n + 1, 0.0));
        for (std::size_t j = 0; j < sc.stations.size(); ++j) {
            if (sc.stations[j].is_virtual) continue;
            for (int q = 1; q <= n; ++q)
                sym_cache[j][q] = symmetric_nash_load(sc.stations[j].g, q, sc.evs[0].b, sc.evs[0].b_lo, sc.evs[0].b_hi);
        }
    }

    const long long count = total;
    const int workers = worker_count();
    const long long chunk = (count + workers - 1) / workers;
    std::vector<std::vector<NeSolution>> found(static_cast<std::size_t>(workers));

    parallel_for(static_cast<std::size_t>(workers), [&](std::size_t w) {
        const long long begin = static_cast<long long>(w) * chunk;
        const long long end = std::min(count, begin + chunk);
        if (begin >= end) return;
        std::vector<int> choice(n, 0);
        Profile profile;
        profile.actions.resize(n);
        std::vector<std::vector<int>> members(sc.stations.size());
        for (long long rank = begin; rank < end; ++rank) {
            long long r = rank;
            for (int i = 0; i < n; ++i) {
                choice[i] = static_cast<int>(r % options[i].size());
                r /= static_cast<long long>(options[i].size());
            }
            for (auto& m : members) m.clear();
            for (int i = 0; i < n; ++i) {
                const auto& opt = options[i][choice[i]];
                profile.actions[i].path = opt.path;
                profile.actions[i].station = opt.station;
                profile.actions[i].load = 0.0;
                members[opt.station].push_back(i);
            }
            for (std::size_t j = 0; j < sc.stations.size(); ++j) {
                if (members[j].empty() || sc.stations[j].is_virtual) continue;
                if (identical) {
                    const double l = sym_cache[j][members[j].size()];
                    for (int i : members[j]) profile.actions[i].load = l;
                } else {
                    std::vector<Ev> evs;
                    evs.reserve(members[j].size());
                    for (int i : members[j]) evs.push_back(sc.evs[i]);
                    const auto loads = restricted_nash_loads(sc.stations[j], evs);
                    for (std::size_t m = 0; m < members[j].size(); ++m) profile.actions[members[j][m]].load = loads[m];
                }
            }
            const NashCheck check = is_nash_core(game, profile, opts.tol, options);
            if (check.is_nash) {
                NeSolution sol;
                sol.profile = profile;
                const Occupancy occ = derive_occupancy(sc, profile);
                sol.social = social_cost(sc, occ, profile);
                sol.assignment_index = rank;
                sol.occupancy.assign(occ.station_count.begin(), occ.station_count.end());
                found[w].push_back(std::move(sol));
            }
        }
    });

    std::vector<NeSolution> result;
    for (auto& part : found)
        for (auto& sol : part) result.push_back(std::move(sol));
    std::sort(result.begin(), result.end(),
              [](const NeSolution& a, const NeSolution& b) { return a.assignment_index < b.assignment_index; });
    return result;
}

}  // namespace evgrid
