#ifndef EVGRID_GAME_CORE_HPP
#define EVGRID_GAME_CORE_HPP

// Shared best-response machinery, templated over the cost model so the
// classical and prospect-theoretic games run through identical dynamics.

#include <algorithm>

#include "evgrid/equilibrium.hpp"

namespace evgrid {

template <class F>
double golden_section_min(F&& f, double lo, double hi, double tol_x) {
    constexpr double inv_phi = 0.6180339887498948482;
    double a = lo, b = hi;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol_x) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

// Dense scan plus golden-section refinement around the best bracket.
template <class F>
double grid_golden_min(F&& f, double lo, double hi, int grid_points, double tol_x) {
    if (hi <= lo) return lo;
    if (grid_points < 3) grid_points = 3;
    const double step = (hi - lo) / (grid_points - 1);
    int best = 0;
    double best_val = f(lo);
    for (int i = 1; i < grid_points; ++i) {
        const double x = lo + step * i;
        const double v = f(x);
        if (v < best_val) {
            best_val = v;
            best = i;
        }
    }
    const double a = std::max(lo, lo + step * (best - 1));
    const double b = std::min(hi, lo + step * (best + 1));
    const double refined = golden_section_min(f, a, b, tol_x);
    return f(refined) <= best_val ? refined : lo + step * best;
}

// Game concept:
//   const Scenario& scenario() const;
//   double action_cost(const Occupancy& occ_including_i, int i, const Action&) const;
//   double optimal_load(int station, int i, double others_load) const;   // non-virtual stations
//   double potential_value(const Occupancy&, const Profile&) const;

template <class Game>
BestResponse best_response_core(const Game& game, Occupancy& occ_without_i, int i,
                                const std::vector<EvOption>& options) {
    const Scenario& sc = game.scenario();
    BestResponse best;
    bool have = false;
    Action cand;
    for (const EvOption& opt : options) {
        cand.path = opt.path;
        cand.station = opt.station;
        cand.load = sc.stations[opt.station].is_virtual
                        ? 0.0
                        : game.optimal_load(opt.station, i, occ_without_i.station_load[opt.station]);
        occupancy_add(occ_without_i, sc, i, cand);
        const double cost = game.action_cost(occ_without_i, i, cand);
        occupancy_remove(occ_without_i, sc, i, cand);
        if (!have || cost < best.cost) {
            have = true;
            best.cost = cost;
            best.action = cand;
        }
    }
    return best;
}

template <class Game>
NashCheck is_nash_core(const Game& game, const Profile& p, double tol,
                       const std::vector<std::vector<EvOption>>& options) {
    const Scenario& sc = game.scenario();
    Occupancy occ = derive_occupancy(sc, p);
    NashCheck check;
    for (std::size_t i = 0; i < p.actions.size(); ++i) {
        const double current = game.action_cost(occ, static_cast<int>(i), p.actions[i]);
        occupancy_remove(occ, sc, static_cast<int>(i), p.actions[i]);
        const BestResponse br = best_response_core(game, occ, static_cast<int>(i), options[i]);
        occupancy_add(occ, sc, static_cast<int>(i), p.actions[i]);
        const double gain = current - br.cost;
        if (gain > check.worst.gain || check.worst.player < 0) {
            check.worst = {static_cast<int>(i), br.action, gain};
        }
        if (gain > tol) check.is_nash = false;
    }
    return check;
}

// Potential evaluated with player i holding `action`; occ excludes i.
// `action` is taken by value because callers may pass p.actions[i] itself.
template <class Game>
double potential_with(const Game& game, Occupancy& occ_without_i, Profile& p, int i, const Action action) {
    const Scenario& sc = game.scenario();
    const Action saved = p.actions[i];
    occupancy_add(occ_without_i, sc, i, action);
    p.actions[i] = action;
    const double phi = game.potential_value(occ_without_i, p);
    p.actions[i] = saved;
    occupancy_remove(occ_without_i, sc, i, action);
    return phi;
}

template <class Game>
DynamicsTrace dynamics_core(const Game& game, Profile profile, const DynamicsOptions& opts,
                            const std::vector<std::vector<EvOption>>& options) {
    const Scenario& sc = game.scenario();
    const int n = static_cast<int>(profile.actions.size());
    DynamicsTrace trace;
    trace.epsilon = opts.eps;

    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    auto rng = make_rng(opts.seed);

    for (int round = 0; round < opts.max_rounds; ++round) {
        // fresh occupancy each round bounds incremental float drift
        Occupancy occ = derive_occupancy(sc, profile);
        if (opts.order == UpdateOrder::shuffled) {
            for (int i = n - 1; i > 0; --i)
                std::swap(order[i], order[uniform_index(rng, static_cast<std::uint64_t>(i) + 1)]);
        }
        bool moved = false;
        for (int idx = 0; idx < n; ++idx) {
            const int i = order[idx];
            const double current = game.action_cost(occ, i, profile.actions[i]);
            occupancy_remove(occ, sc, i, profile.actions[i]);
            const BestResponse br = best_response_core(game, occ, i, options[i]);
            if (current - br.cost > opts.eps) {
                DynamicsStep step;
                if (opts.record_steps) {
                    step.round = round;
                    step.mover = i;
                    step.before = profile.actions[i];
                    step.after = br.action;
                    step.cost_before = current;
                    step.cost_after = br.cost;
                    step.phi_before = potential_with(game, occ, profile, i, profile.actions[i]);
                }
                occupancy_add(occ, sc, i, br.action);
                profile.actions[i] = br.action;
                moved = true;
                ++trace.moves;
                if (opts.record_steps) {
                    step.phi_after = game.potential_value(occ, profile);
                    trace.steps.push_back(step);
                }
            } else {
                occupancy_add(occ, sc, i, profile.actions[i]);
            }
        }
        trace.rounds = round + 1;
        if (!moved) {
            trace.converged = true;
            break;
        }
    }
    trace.terminal = std::move(profile);
    return trace;
}

}  // namespace evgrid

#endif
