#include "evgrid/prospect.hpp"

#include <algorithm>
#include <cmath>

#include "evgrid/game_core.hpp"
#include "evgrid/stochastic.hpp"

namespace evgrid {

double prelec_weight(double p, double c) {
    if (p < 0.0 || p > 1.0) throw error(errc::domain, "prelec_weight: probability outside [0, 1]");
    if (p == 0.0) return 0.0;
    if (p == 1.0) return 1.0;
    return std::exp(-std::pow(-std::log(p), c));
}

double tversky_value(double z, double z_r, const PtParams& params) {
    if (z >= z_r) return std::pow(z - z_r, params.c1);
    return -params.c2 * std::pow(z_r - z, params.c3);
}

double pt_value_hat(double x, const PtParams& params) {
    if (x >= 0.0) return std::pow(x, params.c1);
    return -params.c2 * std::pow(-x, params.c3);
}

PtEvaluation build_pt_evaluation(const Scenario& sc) {
    PtParams params;
    if (sc.options.pt) params = sc.options.pt->params;
    return build_pt_evaluation(sc, params);
}

PtEvaluation build_pt_evaluation(const Scenario& sc, const PtParams& params) {
    PtEvaluation pt;
    pt.station_pmf.resize(sc.stations.size());
    const int points = sc.options.pt ? sc.options.pt->discretization_points : 21;
    for (int j = 0; j < sc.real_station_count; ++j) {
        if (sc.options.pt && sc.options.pt->pmf) {
            pt.station_pmf[j] = *sc.options.pt->pmf;
        } else if (sc.stations[j].ground) {
            pt.station_pmf[j] = discretize_ground(*sc.stations[j].ground, points);
        } else {
            pt.station_pmf[j] = discretize_ground(FixedGround{sc.stations[j].g}, points);
        }
    }
    pt.params.assign(sc.evs.size(), params);
    return pt;
}

double reference_price(const Scenario& sc, const Occupancy& occ, int i, const Action& a) {
    (void)i;
    const Station& st = sc.stations[a.station];
    if (st.is_virtual) return 0.0;
    const double L = occ.station_load[a.station];
    return pricing(st, L) - pricing(st, L - a.load);
}

double pt_price_outcome(const Scenario& sc, const Occupancy& occ, int i, const Action& a, double theta) {
    const Station& st = sc.stations[a.station];
    if (st.is_virtual) return 0.0;
    if (st.k == 2.0) return reference_price(sc, occ, i, a) + a.load * theta;
    const double L = occ.station_load[a.station];
    return pricing(st, -theta + L) - pricing(st, -theta + L - a.load);
}

double expected_prospect(const Scenario& sc, const Occupancy& occ, int i, const Action& a, const Pmf& pmf,
                         const PtParams& params) {
    const Station& st = sc.stations[a.station];
    if (st.is_virtual) return 0.0;
    double value = 0.0;
    if (st.k == 2.0) {
        for (std::size_t t = 0; t < pmf.values.size(); ++t)
            value += prelec_weight(pmf.probs[t], params.c) * pt_value_hat(a.load * pmf.values[t], params);
        return value;
    }
    const double z_r = reference_price(sc, occ, i, a);
    for (std::size_t t = 0; t < pmf.values.size(); ++t) {
        const double z = pt_price_outcome(sc, occ, i, a, pmf.values[t]);
        value += prelec_weight(pmf.probs[t], params.c) * tversky_value(z, z_r, params);
    }
    return value;
}

CostBreakdown pt_cost(const Scenario& sc, const Occupancy& occ, int i, const Action& a, const PtEvaluation& pt) {
    const Ev& ev = sc.evs[i];
    CostBreakdown out;
    for (int e : a.path) out.congestion += latency(sc.edges[e], occ.edge_count[e]);
    const Station& st = sc.stations[a.station];
    if (!st.is_virtual) out.queueing = occ.station_count[a.station] / st.sigma;
    const double charge = ev.b + a.load;
    if (charge <= 0.0) throw error(errc::domain, "pt_cost: battery level would drop to " + std::to_string(charge));
    out.battery_risk = std::log(ev.b_hi / charge);
    const double z_r = reference_price(sc, occ, i, a);
    const double prospect =
        st.is_virtual ? 0.0 : expected_prospect(sc, occ, i, a, pt.station_pmf[a.station], pt.params[i]);
    out.energy_price = z_r + prospect;
    out.total = out.congestion + out.queueing + out.battery_risk + out.energy_price;
    return out;
}

CostBreakdown pt_cost(const Scenario& sc, const Profile& p, int i, const PtEvaluation& pt) {
    const Occupancy occ = derive_occupancy(sc, p);
    return pt_cost(sc, occ, i, p.actions[i], pt);
}

namespace {

void require_quadratic(const Scenario& sc, const char* what) {
    if (!sc.quadratic_pricing())
        throw error(errc::unsupported_pricing, std::string(what) + " requires quadratic pricing");
}

}  // namespace

double pt_potential(const Scenario& sc, const Occupancy& occ, const Profile& p, const PtEvaluation& pt) {
    require_quadratic(sc, "prospect potential");
    double phi = 0.0;
    for (std::size_t e = 0; e < sc.edges.size(); ++e)
        for (int x = 1; x <= occ.edge_count[e]; ++x) phi += latency(sc.edges[e], x);
    for (std::size_t j = 0; j < sc.stations.size(); ++j) {
        const Station& st = sc.stations[j];
        if (st.is_virtual) continue;
        const double q = occ.station_count[j];
        const double L = occ.station_load[j];
        phi += q * (q + 1.0) / (2.0 * st.sigma) + L * L;
    }
    for (std::size_t i = 0; i < p.actions.size(); ++i) {
        const Ev& ev = sc.evs[i];
        const Action& a = p.actions[i];
        phi += std::log(ev.b_hi / (ev.b + a.load));
        const Station& st = sc.stations[a.station];
        if (st.is_virtual) continue;
        const Pmf& pmf = pt.station_pmf[a.station];
        for (std::size_t t = 0; t < pmf.values.size(); ++t)
            phi += prelec_weight(pmf.probs[t], pt.params[i].c) * pt_value_hat(a.load * pmf.values[t], pt.params[i]);
    }
    return phi;
}

double pt_potential(const Scenario& sc, const Profile& p, const PtEvaluation& pt) {
    return pt_potential(sc, derive_occupancy(sc, p), p, pt);
}

namespace {

ProspectCoeff make_coeff(const Pmf& pmf, const PtParams& params) {
    ProspectCoeff c;
    for (std::size_t t = 0; t < pmf.values.size(); ++t) {
        const double w = prelec_weight(pmf.probs[t], params.c);
        const double theta = pmf.values[t];
        if (theta > 0.0) {
            c.gain_pos += w * std::pow(theta, params.c1);
            c.loss_neg += w * std::pow(theta, params.c3);
        } else if (theta < 0.0) {
            c.gain_neg += w * std::pow(-theta, params.c1);
            c.loss_pos += w * std::pow(-theta, params.c3);
        }
    }
    return c;
}

double prospect_from_coeff(double l, const ProspectCoeff& c, const PtParams& params) {
    if (l == 0.0) return 0.0;
    if (l > 0.0) return std::pow(l, params.c1) * c.gain_pos - params.c2 * std::pow(l, params.c3) * c.loss_pos;
    return std::pow(-l, params.c1) * c.gain_neg - params.c2 * std::pow(-l, params.c3) * c.loss_neg;
}

}  // namespace

PtGameView::PtGameView(const Scenario& sc, const PtEvaluation& pt) : sc_(&sc), pt_(&pt) {
    require_quadratic(sc, "prospect dynamics");
    coeff_.assign(sc.stations.size(), {});
    for (int j = 0; j < sc.real_station_count; ++j) {
        coeff_[j].resize(sc.evs.size());
        for (std::size_t i = 0; i < sc.evs.size(); ++i)
            coeff_[j][i] = make_coeff(pt.station_pmf[j], pt.params[i]);
    }
}

double PtGameView::action_cost(const Occupancy& occ, int i, const Action& a) const {
    const Scenario& sc = *sc_;
    const Ev& ev = sc.evs[i];
    double cost = 0.0;
    for (int e : a.path) cost += latency(sc.edges[e], occ.edge_count[e]);
    const Station& st = sc.stations[a.station];
    if (!st.is_virtual) {
        cost += occ.station_count[a.station] / st.sigma;
        const double L = occ.station_load[a.station];
        cost += pricing(st, L) - pricing(st, L - a.load);
        cost += prospect_from_coeff(a.load, coeff_[a.station][i], pt_->params[i]);
    }
    cost += std::log(ev.b_hi / (ev.b + a.load));
    return cost;
}

double PtGameView::optimal_load(int station, int i, double others_load) const {
    const Scenario& sc = *sc_;
    const Station& st = sc.stations[station];
    const Ev& ev = sc.evs[i];
    if (st.is_virtual) return 0.0;
    const ProspectCoeff& co = coeff_[station][i];
    const PtParams& params = pt_->params[i];
    const auto objective = [&](double l) {
        const double with = others_load + l;
        return with * with - others_load * others_load + prospect_from_coeff(l, co, params) +
               std::log(ev.b_hi / (ev.b + l));
    };
    return grid_golden_min(objective, ev.load_min(), ev.load_max(), 4097,
                           1e-10 * std::max(1.0, ev.load_max() - ev.load_min()));
}

double PtGameView::potential_value(const Occupancy& occ, const Profile& p) const {
    return pt_potential(*sc_, occ, p, *pt_);
}

NashCheck pt_is_nash(const Scenario& sc, const Profile& p, const PtEvaluation& pt, double tol) {
    const PtGameView game(sc, pt);
    return is_nash_core(game, p, tol, build_option_table(sc));
}

DynamicsTrace pt_best_response_dynamics(const Scenario& sc, const Profile& initial, const PtEvaluation& pt,
                                        const DynamicsOptions& opts) {
    if (opts.eps <= 0.0) throw error(errc::validation, "dynamics: eps must be positive");
    const PtGameView game(sc, pt);
    return dynamics_core(game, initial, opts, build_option_table(sc));
}

std::vector<DynamicsTrace> pt_multi_start_dynamics(const Scenario& sc, const PtEvaluation& pt,
                                                   const MultiStartOptions& opts) {
    const PtGameView game(sc, pt);
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

double pt_social_cost(const Scenario& sc, const Profile& p, const PtEvaluation& pt) {
    const Occupancy occ = derive_occupancy(sc, p);
    double total = 0.0;
    for (std::size_t i = 0; i < p.actions.size(); ++i)
        total += pt_cost(sc, occ, static_cast<int>(i), p.actions[i], pt).total;
    return total;
}

OptimumResult pt_social_optimum(const Scenario& sc, const PtEvaluation& pt, long long budget, int multistarts) {
    require_quadratic(sc, "prospect social optimum");
    const auto options = build_option_table(sc);
    const int n = static_cast<int>(sc.evs.size());

    long long total = 1;
    for (const auto& opts_i : options) {
        const long long count = static_cast<long long>(opts_i.size());
        if (total > budget / count)
            throw error(errc::budget_exceeded, "assignment space exceeds optimization budget");
        total *= count;
    }

    std::vector<std::vector<ProspectCoeff>> coeff(sc.stations.size());
    for (int j = 0; j < sc.real_station_count; ++j) {
        coeff[j].resize(sc.evs.size());
        for (std::size_t i = 0; i < sc.evs.size(); ++i) coeff[j][i] = make_coeff(pt.station_pmf[j], pt.params[i]);
    }

    // per-station perceived cost: q f(L) - sum_m f(L - l_m) + prospect + risk
    const auto station_value = [&](int j, const std::vector<int>& members, const std::vector<double>& loads) {
        double L = 0.0;
        for (double l : loads) L += l;
        const double q = static_cast<double>(members.size());
        double v = q * L * L;
        for (std::size_t m = 0; m < members.size(); ++m) {
            const double rest = L - loads[m];
            v -= rest * rest;
            v += prospect_from_coeff(loads[m], coeff[j][members[m]], pt.params[members[m]]);
            const Ev& ev = sc.evs[members[m]];
            v += std::log(ev.b_hi / (ev.b + loads[m]));
        }
        return v;
    };

    struct Best {
        double value = std::numeric_limits<double>::infinity();
        long long rank = -1;
        Profile profile;
    };
    const int workers = worker_count();
    const long long chunk = (total + workers - 1) / workers;
    std::vector<Best> best(static_cast<std::size_t>(workers));

    parallel_for(static_cast<std::size_t>(workers), [&](std::size_t w) {
        const long long begin = static_cast<long long>(w) * chunk;
        const long long end = std::min(total, begin + chunk);
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
            double value = 0.0;
            for (int i = 0; i < n; ++i) {
                const auto& opt = options[i][choice[i]];
                profile.actions[i].path = opt.path;
                profile.actions[i].station = opt.station;
                profile.actions[i].load = 0.0;
                for (int e : opt.path) ++edge_count[e];
                if (sc.stations[opt.station].is_virtual)
                    value += std::log(sc.evs[i].b_hi / sc.evs[i].b);
                else
                    members[opt.station].push_back(i);
            }
            for (std::size_t e = 0; e < sc.edges.size(); ++e)
                if (edge_count[e] > 0) value += edge_count[e] * latency(sc.edges[e], edge_count[e]);

            for (std::size_t j = 0; j < sc.stations.size(); ++j) {
                if (sc.stations[j].is_virtual || members[j].empty()) continue;
                const double q = static_cast<double>(members[j].size());
                value += q * q / sc.stations[j].sigma;

                // coordinate descent with multistarts; prospect term is nonconvex
                std::vector<std::vector<double>> starts;
                starts.emplace_back(members[j].size(), 0.0);
                std::vector<double> s(members[j].size());
                for (std::size_t m = 0; m < s.size(); ++m) s[m] = sc.evs[members[j][m]].load_min();
                starts.push_back(s);
                for (std::size_t m = 0; m < s.size(); ++m) s[m] = sc.evs[members[j][m]].load_max();
                starts.push_back(s);
                auto rng = make_rng(derive_seed(0x9d7ULL + rank, j));
                while (static_cast<int>(starts.size()) < multistarts) {
                    for (std::size_t m = 0; m < s.size(); ++m) {
                        const Ev& ev = sc.evs[members[j][m]];
                        s[m] = uniform_real(rng, ev.load_min(), ev.load_max());
                    }
                    starts.push_back(s);
                }
                double best_v = std::numeric_limits<double>::infinity();
                std::vector<double> best_loads;
                for (auto& start : starts) {
                    for (int sweep = 0; sweep < 200; ++sweep) {
                        double moved = 0.0;
                        for (std::size_t m = 0; m < start.size(); ++m) {
                            const Ev& ev = sc.evs[members[j][m]];
                            const double before = start[m];
                            // other members' prospect and risk terms do not
                            // depend on this coordinate; hoist them
                            double sum_others = 0.0;
                            for (std::size_t i = 0; i < start.size(); ++i)
                                if (i != m) sum_others += start[i];
                            const ProspectCoeff& co = coeff[j][members[j][m]];
                            const PtParams& pp = pt.params[members[j][m]];
                            const double qd = static_cast<double>(start.size());
                            const auto obj = [&](double l) {
                                const double L = sum_others + l;
                                double v = qd * L * L;
                                for (std::size_t i = 0; i < start.size(); ++i) {
                                    const double rest = L - (i == m ? l : start[i]);
                                    v -= rest * rest;
                                }
                                return v + prospect_from_coeff(l, co, pp) + std::log(ev.b_hi / (ev.b + l));
                            };
                            const double next =
                                grid_golden_min(obj, ev.load_min(), ev.load_max(), 129,
                                                1e-8 * std::max(1.0, ev.load_max() - ev.load_min()));
                            start[m] = next;
                            moved = std::max(moved, std::abs(next - before));
                        }
                        if (moved <= 1e-8) break;
                    }
                    const double v = station_value(static_cast<int>(j), members[j], start);
                    if (v < best_v) {
                        best_v = v;
                        best_loads = start;
                    }
                }
                value += best_v;
                for (std::size_t m = 0; m < members[j].size(); ++m)
                    profile.actions[members[j][m]].load = best_loads[m];
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
    if (overall.rank < 0) throw error(errc::domain, "pt_social_optimum: empty assignment space");
    OptimumResult out;
    out.profile = std::move(overall.profile);
    out.value = pt_social_cost(sc, out.profile, pt);
    return out;
}

}  // namespace evgrid
