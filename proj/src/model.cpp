#include "evgrid/model.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace evgrid {

namespace {

[[noreturn]] void reject(const std::string& field, const std::string& why) {
    throw error(errc::validation, field + ": " + why);
}

bool finite(double v) { return std::isfinite(v); }

template <class T>
int find_name(const std::vector<T>& items, const std::string& name) {
    for (std::size_t i = 0; i < items.size(); ++i)
        if (items[i].name == name) return static_cast<int>(i);
    return -1;
}

}  // namespace

double Pmf::mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) m += values[i] * probs[i];
    return m;
}

double Pmf::variance() const {
    const double m = mean();
    double v = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) v += probs[i] * (values[i] - m) * (values[i] - m);
    return v;
}

double Pmf::support_bound() const {
    double b = 0.0;
    for (double v : values) b = std::max(b, std::abs(v));
    return b;
}

int Scenario::node_index(const std::string& name) const {
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i] == name) return static_cast<int>(i);
    return -1;
}
int Scenario::edge_index(const std::string& name) const { return find_name(edges, name); }
int Scenario::station_index(const std::string& name) const { return find_name(stations, name); }
int Scenario::ev_index(const std::string& name) const { return find_name(evs, name); }

double Scenario::fleet_b_min() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& ev : evs) m = std::min(m, ev.b_lo);
    return m;
}

double Scenario::fleet_b_max() const {
    double m = 0.0;
    for (const auto& ev : evs) m = std::max(m, ev.b_hi);
    return m;
}

bool Scenario::fleet_identical() const {
    for (const auto& ev : evs)
        if (ev.b != evs[0].b || ev.b_lo != evs[0].b_lo || ev.b_hi != evs[0].b_hi) return false;
    return true;
}

bool Scenario::linear_latency() const {
    for (const auto& e : edges)
        if (e.d != 1.0) return false;
    return true;
}

bool Scenario::quadratic_pricing() const {
    for (const auto& st : stations)
        if (!st.is_virtual && st.k != 2.0) return false;
    return true;
}

double Scenario::ground_sq_sum() const {
    double s = 0.0;
    for (const auto& st : stations)
        if (!st.is_virtual) s += st.g * st.g;
    return s;
}

namespace {

void validate_pmf(const Pmf& pmf, const std::string& field) {
    if (pmf.values.empty()) reject(field, "pmf must have at least one outcome");
    if (pmf.values.size() != pmf.probs.size()) reject(field, "pmf values/probs length mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < pmf.probs.size(); ++i) {
        if (!finite(pmf.probs[i]) || pmf.probs[i] < 0.0) reject(field, "pmf probabilities must be nonnegative");
        if (!finite(pmf.values[i])) reject(field, "pmf outcomes must be finite");
        sum += pmf.probs[i];
    }
    if (std::abs(sum - 1.0) > 1e-12) reject(field, "pmf probabilities must sum to 1");
}

void validate_ground(const GroundSpec& spec, const std::string& field) {
    if (const auto* n = std::get_if<NormalGround>(&spec)) {
        if (!finite(n->mean)) reject(field + ".mean", "must be finite");
        if (!finite(n->variance) || n->variance < 0.0) reject(field + ".variance", "must be nonnegative");
        if (!finite(n->clamp) || n->clamp <= 0.0) reject(field + ".clamp", "support clamp must be positive");
    } else if (const auto* d = std::get_if<DiscreteGround>(&spec)) {
        validate_pmf(d->pmf, field + ".pmf");
    } else {
        const auto& f = std::get<FixedGround>(spec);
        if (!finite(f.g)) reject(field + ".g", "must be finite");
    }
}

}  // namespace

void finalize_scenario(Scenario& sc) {
    if (sc.nodes.empty()) reject("nodes", "at least one node required");
    {
        std::unordered_set<std::string> seen;
        for (std::size_t i = 0; i < sc.nodes.size(); ++i) {
            if (sc.nodes[i].empty()) reject("nodes[" + std::to_string(i) + "]", "empty node id");
            if (!seen.insert(sc.nodes[i]).second) reject("nodes[" + std::to_string(i) + "]", "duplicate node id");
        }
    }
    {
        std::unordered_set<std::string> seen;
        for (std::size_t i = 0; i < sc.edges.size(); ++i) {
            const auto& e = sc.edges[i];
            const std::string f = "edges[" + std::to_string(i) + "]";
            if (e.name.empty()) reject(f + ".id", "empty edge id");
            if (!seen.insert(e.name).second) reject(f + ".id", "duplicate edge id");
            if (e.tail < 0 || e.tail >= static_cast<int>(sc.nodes.size())) reject(f + ".tail", "unknown node");
            if (e.head < 0 || e.head >= static_cast<int>(sc.nodes.size())) reject(f + ".head", "unknown node");
            if (!finite(e.a) || e.a < 0.0) reject(f + ".a", "latency coefficient must be finite and nonnegative");
            if (!finite(e.b) || e.b < 0.0) reject(f + ".b", "latency offset must be finite and nonnegative");
            if (!finite(e.d) || e.d < 1.0) reject(f + ".d", "congestion exponent must be at least 1");
        }
    }

    // strip virtual stations from any previous finalization, then re-derive
    sc.stations.erase(std::remove_if(sc.stations.begin(), sc.stations.end(),
                                     [](const Station& st) { return st.is_virtual; }),
                      sc.stations.end());
    {
        std::unordered_set<std::string> seen;
        for (std::size_t j = 0; j < sc.stations.size(); ++j) {
            auto& st = sc.stations[j];
            const std::string f = "stations[" + std::to_string(j) + "]";
            if (st.name.empty()) reject(f + ".id", "empty station id");
            if (!seen.insert(st.name).second) reject(f + ".id", "duplicate station id");
            if (st.edge < 0 || st.edge >= static_cast<int>(sc.edges.size()))
                reject(f + ".edge", "station placed on edge absent from network");
            if (!finite(st.sigma) || st.sigma <= 0.0) reject(f + ".sigma", "service rate must be positive");
            if (!finite(st.k) || st.k <= 0.0) reject(f + ".k", "pricing exponent must be positive");
            if (!finite(st.g)) reject(f + ".g", "ground load must be finite");
            if (st.ground) validate_ground(*st.ground, f + ".ground");
        }
    }
    sc.real_station_count = static_cast<int>(sc.stations.size());

    if (sc.evs.empty()) reject("evs", "at least one EV required");
    {
        std::unordered_set<std::string> seen;
        for (std::size_t i = 0; i < sc.evs.size(); ++i) {
            const auto& ev = sc.evs[i];
            const std::string f = "evs[" + std::to_string(i) + "]";
            if (ev.name.empty()) reject(f + ".id", "empty EV id");
            if (!seen.insert(ev.name).second) reject(f + ".id", "duplicate EV id");
            if (ev.origin < 0 || ev.origin >= static_cast<int>(sc.nodes.size())) reject(f + ".s", "unknown node");
            if (ev.dest < 0 || ev.dest >= static_cast<int>(sc.nodes.size())) reject(f + ".t", "unknown node");
            if (!finite(ev.b_lo) || ev.b_lo <= 0.0) reject(f + ".b_lo", "battery floor must be positive");
            if (!finite(ev.b_hi) || ev.b_lo >= ev.b_hi) reject(f + ".b_hi", "battery floor must be below capacity");
            if (!finite(ev.b) || ev.b < ev.b_lo || ev.b > ev.b_hi)
                reject(f + ".b", "battery level must lie within [b_lo, b_hi]");
        }
    }

    if (sc.options.path_cap < 1) reject("options.path_cap", "path cap must be at least 1");
    if (sc.options.pt) {
        const auto& pt = *sc.options.pt;
        if (!finite(pt.params.c) || pt.params.c <= 0.0 || pt.params.c > 1.0)
            reject("options.pt.c", "probability distortion must lie in (0, 1]");
        if (!finite(pt.params.c1) || pt.params.c1 <= 0.0 || pt.params.c1 > 1.0)
            reject("options.pt.c1", "gain curvature must lie in (0, 1]");
        if (!finite(pt.params.c3) || pt.params.c3 <= 0.0 || pt.params.c3 > 1.0)
            reject("options.pt.c3", "loss curvature must lie in (0, 1]");
        if (!finite(pt.params.c2) || pt.params.c2 <= 0.0) reject("options.pt.c2", "loss aversion must be positive");
        if (pt.pmf) validate_pmf(*pt.pmf, "options.pt.pmf");
        if (pt.discretization_points < 1) reject("options.pt.discretization_points", "must be at least 1");
    }

    if (sc.options.skip_charging) {
        for (std::size_t e = 0; e < sc.edges.size(); ++e) {
            Station v;
            v.name = "virtual:" + sc.edges[e].name;
            if (find_name(sc.stations, v.name) >= 0) reject("stations", "station id collides with " + v.name);
            v.edge = static_cast<int>(e);
            v.sigma = std::numeric_limits<double>::infinity();
            v.k = 0.0;
            v.g = 0.0;
            v.is_virtual = true;
            sc.stations.push_back(v);
        }
    }

    sc.stations_on_edge.assign(sc.edges.size(), {});
    for (std::size_t j = 0; j < sc.stations.size(); ++j) sc.stations_on_edge[sc.stations[j].edge].push_back(static_cast<int>(j));

    // origin/destination connectivity (BFS over directed edges)
    std::vector<std::vector<int>> out(sc.nodes.size());
    for (std::size_t e = 0; e < sc.edges.size(); ++e) out[sc.edges[e].tail].push_back(sc.edges[e].head);
    for (std::size_t i = 0; i < sc.evs.size(); ++i) {
        const auto& ev = sc.evs[i];
        if (ev.origin == ev.dest) continue;
        std::vector<char> seen(sc.nodes.size(), 0);
        std::deque<int> queue{ev.origin};
        seen[ev.origin] = 1;
        bool reached = false;
        while (!queue.empty() && !reached) {
            const int u = queue.front();
            queue.pop_front();
            for (int v : out[u]) {
                if (v == ev.dest) {
                    reached = true;
                    break;
                }
                if (!seen[v]) {
                    seen[v] = 1;
                    queue.push_back(v);
                }
            }
        }
        if (!reached)
            reject("evs[" + std::to_string(i) + "]", "destination not reachable from origin");
    }
}

std::vector<std::vector<int>> enumerate_paths(const Scenario& sc, int s, int t, int cap) {
    if (s < 0 || s >= static_cast<int>(sc.nodes.size())) throw error(errc::validation, "enumerate_paths: unknown origin");
    if (t < 0 || t >= static_cast<int>(sc.nodes.size())) throw error(errc::validation, "enumerate_paths: unknown destination");
    if (cap < 1) throw error(errc::validation, "enumerate_paths: cap must be at least 1");

    std::vector<std::vector<int>> result;
    if (s == t) {
        result.push_back({});
        return result;
    }

    std::vector<std::vector<int>> out(sc.nodes.size());
    for (std::size_t e = 0; e < sc.edges.size(); ++e) out[sc.edges[e].tail].push_back(static_cast<int>(e));
    for (auto& lst : out) std::sort(lst.begin(), lst.end());  // lexicographic order by edge index

    std::vector<char> visited(sc.nodes.size(), 0);
    std::vector<int> path;
    visited[s] = 1;

    // iterative DFS keeps the edge-index order of `out`
    struct Frame {
        int node;
        std::size_t next;
    };
    std::vector<Frame> stack{{s, 0}};
    while (!stack.empty()) {
        Frame& fr = stack.back();
        const auto& adj = out[fr.node];
        if (fr.next >= adj.size()) {
            visited[fr.node] = 0;
            if (!path.empty()) path.pop_back();
            stack.pop_back();
            continue;
        }
        const int e = adj[fr.next++];
        const int v = sc.edges[e].head;
        if (v == t) {
            path.push_back(e);
            if (static_cast<int>(result.size()) >= cap)
                throw error(errc::path_explosion, "more than " + std::to_string(cap) + " simple paths");
            result.push_back(path);
            path.pop_back();
            continue;
        }
        if (visited[v]) continue;
        visited[v] = 1;
        path.push_back(e);
        stack.push_back({v, 0});
    }
    return result;
}

std::vector<EvOption> ev_options(const Scenario& sc, int i) {
    const auto& ev = sc.evs[i];
    const auto paths = enumerate_paths(sc, ev.origin, ev.dest, sc.options.path_cap);
    std::vector<EvOption> options;
    for (const auto& path : paths) {
        std::vector<int> sts;
        for (int e : path)
            for (int j : sc.stations_on_edge[e]) sts.push_back(j);
        std::sort(sts.begin(), sts.end());
        for (int j : sts) options.push_back({path, j});
    }
    return options;
}

std::vector<std::vector<EvOption>> build_option_table(const Scenario& sc) {
    std::vector<std::vector<EvOption>> table(sc.evs.size());
    for (std::size_t i = 0; i < sc.evs.size(); ++i) {
        table[i] = ev_options(sc, static_cast<int>(i));
        if (table[i].empty())
            throw error(errc::validation,
                        "evs[" + std::to_string(i) + "]: no feasible (path, station) action; " +
                            "every usable path must carry a station unless skip charging is enabled");
    }
    return table;
}

void validate_action(const Scenario& sc, int i, const Action& a) {
    const auto& ev = sc.evs[i];
    const std::string f = "action(" + ev.name + ")";
    int at = ev.origin;
    std::set<int> seen_nodes{at};
    for (int e : a.path) {
        if (e < 0 || e >= static_cast<int>(sc.edges.size())) throw error(errc::validation, f + ": unknown edge in path");
        if (sc.edges[e].tail != at) throw error(errc::validation, f + ": path edges are not contiguous");
        at = sc.edges[e].head;
        if (!seen_nodes.insert(at).second) throw error(errc::validation, f + ": path revisits a node");
    }
    if (at != ev.dest) throw error(errc::validation, f + ": path does not reach destination");
    if (a.station < 0 || a.station >= static_cast<int>(sc.stations.size()))
        throw error(errc::validation, f + ": unknown station");
    const int host = sc.stations[a.station].edge;
    if (std::find(a.path.begin(), a.path.end(), host) == a.path.end())
        throw error(errc::validation, f + ": station does not lie on the chosen path");
    if (sc.stations[a.station].is_virtual) {
        if (a.load != 0.0) throw error(errc::validation, f + ": virtual station requires zero load");
    } else if (a.load < ev.load_min() - 1e-12 || a.load > ev.load_max() + 1e-12) {
        throw error(errc::validation, f + ": load outside battery bounds");
    }
}

Occupancy empty_occupancy(const Scenario& sc) {
    Occupancy occ;
    occ.edge_count.assign(sc.edges.size(), 0);
    occ.station_count.assign(sc.stations.size(), 0);
    occ.station_load.assign(sc.stations.size(), 0.0);
    occ.station_members.assign(sc.stations.size(), {});
    return occ;
}

void occupancy_add(Occupancy& occ, const Scenario&, int i, const Action& a) {
    for (int e : a.path) ++occ.edge_count[e];
    ++occ.station_count[a.station];
    occ.station_load[a.station] += a.load;
    auto& members = occ.station_members[a.station];
    members.insert(std::lower_bound(members.begin(), members.end(), i), i);
}

void occupancy_remove(Occupancy& occ, const Scenario&, int i, const Action& a) {
    for (int e : a.path) --occ.edge_count[e];
    --occ.station_count[a.station];
    occ.station_load[a.station] -= a.load;
    auto& members = occ.station_members[a.station];
    members.erase(std::lower_bound(members.begin(), members.end(), i));
}

Occupancy derive_occupancy(const Scenario& sc, const Profile& p) {
    Occupancy occ = empty_occupancy(sc);
    for (std::size_t i = 0; i < p.actions.size(); ++i) occupancy_add(occ, sc, static_cast<int>(i), p.actions[i]);
    return occ;
}

}  // namespace evgrid
