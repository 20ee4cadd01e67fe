#include "evgrid/scenario_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace evgrid {

using nlohmann::json;

namespace {

[[noreturn]] void reject(const std::string& field, const std::string& why) {
    throw error(errc::validation, field + ": " + why);
}

const json& require(const json& obj, const std::string& key, const std::string& ctx) {
    const auto it = obj.find(key);
    if (it == obj.end()) reject(ctx + "." + key, "missing required key");
    return *it;
}

double as_number(const json& v, const std::string& ctx) {
    if (!v.is_number()) reject(ctx, "expected a number");
    return v.get<double>();
}

std::string as_string(const json& v, const std::string& ctx) {
    if (!v.is_string()) reject(ctx, "expected a string");
    return v.get<std::string>();
}

Pmf parse_pmf(const json& v, const std::string& ctx) {
    if (!v.is_object()) reject(ctx, "expected an object with values/probs");
    Pmf pmf;
    for (const auto& x : require(v, "values", ctx)) pmf.values.push_back(as_number(x, ctx + ".values[]"));
    for (const auto& x : require(v, "probs", ctx)) pmf.probs.push_back(as_number(x, ctx + ".probs[]"));
    return pmf;
}

GroundSpec parse_ground(const json& v, const std::string& ctx) {
    if (!v.is_object()) reject(ctx, "expected an object");
    const std::string type = as_string(require(v, "type", ctx), ctx + ".type");
    if (type == "fixed") return FixedGround{as_number(require(v, "g", ctx), ctx + ".g")};
    if (type == "normal") {
        NormalGround n;
        n.mean = as_number(require(v, "mean", ctx), ctx + ".mean");
        n.variance = as_number(require(v, "variance", ctx), ctx + ".variance");
        n.clamp = as_number(require(v, "clamp", ctx), ctx + ".clamp");
        return n;
    }
    if (type == "discrete") return DiscreteGround{parse_pmf(require(v, "pmf", ctx), ctx + ".pmf")};
    reject(ctx + ".type", "unknown ground model '" + type + "'");
}

json pmf_to_json(const Pmf& pmf) {
    return json{{"values", pmf.values}, {"probs", pmf.probs}};
}

json ground_to_json(const GroundSpec& spec) {
    if (const auto* f = std::get_if<FixedGround>(&spec)) return json{{"type", "fixed"}, {"g", f->g}};
    if (const auto* n = std::get_if<NormalGround>(&spec))
        return json{{"type", "normal"}, {"mean", n->mean}, {"variance", n->variance}, {"clamp", n->clamp}};
    return json{{"type", "discrete"}, {"pmf", pmf_to_json(std::get<DiscreteGround>(spec).pmf)}};
}

}  // namespace

Scenario parse_scenario(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw error(errc::validation, std::string("document: not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) reject("document", "expected a JSON object");

    Scenario sc;
    for (const auto& v : require(doc, "nodes", "document")) sc.nodes.push_back(as_string(v, "nodes[]"));

    std::size_t idx = 0;
    for (const auto& v : require(doc, "edges", "document")) {
        const std::string ctx = "edges[" + std::to_string(idx++) + "]";
        Edge e;
        e.name = as_string(require(v, "id", ctx), ctx + ".id");
        const std::string tail = as_string(require(v, "tail", ctx), ctx + ".tail");
        const std::string head = as_string(require(v, "head", ctx), ctx + ".head");
        e.tail = sc.node_index(tail);
        e.head = sc.node_index(head);
        if (e.tail < 0) reject(ctx + ".tail", "unknown node '" + tail + "'");
        if (e.head < 0) reject(ctx + ".head", "unknown node '" + head + "'");
        e.a = as_number(require(v, "a", ctx), ctx + ".a");
        e.b = as_number(require(v, "b", ctx), ctx + ".b");
        e.d = v.contains("d") ? as_number(v["d"], ctx + ".d") : 1.0;
        sc.edges.push_back(e);
    }

    idx = 0;
    for (const auto& v : require(doc, "stations", "document")) {
        const std::string ctx = "stations[" + std::to_string(idx++) + "]";
        Station st;
        st.name = as_string(require(v, "id", ctx), ctx + ".id");
        const std::string edge = as_string(require(v, "edge", ctx), ctx + ".edge");
        st.edge = sc.edge_index(edge);
        if (st.edge < 0) reject(ctx + ".edge", "station placed on edge absent from network ('" + edge + "')");
        st.sigma = as_number(require(v, "sigma", ctx), ctx + ".sigma");
        st.k = v.contains("k") ? as_number(v["k"], ctx + ".k") : 2.0;
        st.g = v.contains("g") ? as_number(v["g"], ctx + ".g") : 0.0;
        if (v.contains("ground")) st.ground = parse_ground(v["ground"], ctx + ".ground");
        sc.stations.push_back(st);
    }

    idx = 0;
    for (const auto& v : require(doc, "evs", "document")) {
        const std::string ctx = "evs[" + std::to_string(idx++) + "]";
        Ev ev;
        ev.name = as_string(require(v, "id", ctx), ctx + ".id");
        const std::string s = as_string(require(v, "s", ctx), ctx + ".s");
        const std::string t = as_string(require(v, "t", ctx), ctx + ".t");
        ev.origin = sc.node_index(s);
        ev.dest = sc.node_index(t);
        if (ev.origin < 0) reject(ctx + ".s", "unknown node '" + s + "'");
        if (ev.dest < 0) reject(ctx + ".t", "unknown node '" + t + "'");
        ev.b = as_number(require(v, "b", ctx), ctx + ".b");
        ev.b_lo = as_number(require(v, "b_lo", ctx), ctx + ".b_lo");
        ev.b_hi = as_number(require(v, "b_hi", ctx), ctx + ".b_hi");
        sc.evs.push_back(ev);
    }

    if (doc.contains("options")) {
        const json& opts = doc["options"];
        if (!opts.is_object()) reject("options", "expected an object");
        if (opts.contains("skip_charging")) {
            if (!opts["skip_charging"].is_boolean()) reject("options.skip_charging", "expected a boolean");
            sc.options.skip_charging = opts["skip_charging"].get<bool>();
        }
        if (opts.contains("path_cap")) sc.options.path_cap = static_cast<int>(as_number(opts["path_cap"], "options.path_cap"));
        if (opts.contains("pt")) {
            const json& pt = opts["pt"];
            if (!pt.is_object()) reject("options.pt", "expected an object");
            PtConfig cfg;
            cfg.params.c = as_number(require(pt, "c", "options.pt"), "options.pt.c");
            cfg.params.c1 = as_number(require(pt, "c1", "options.pt"), "options.pt.c1");
            cfg.params.c2 = as_number(require(pt, "c2", "options.pt"), "options.pt.c2");
            cfg.params.c3 = as_number(require(pt, "c3", "options.pt"), "options.pt.c3");
            if (pt.contains("pmf")) cfg.pmf = parse_pmf(pt["pmf"], "options.pt.pmf");
            if (pt.contains("points"))
                cfg.discretization_points = static_cast<int>(as_number(pt["points"], "options.pt.points"));
            sc.options.pt = cfg;
        }
    }

    finalize_scenario(sc);
    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw error(errc::io, "cannot open scenario file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

std::string serialize_scenario(const Scenario& sc) {
    json doc;
    doc["nodes"] = sc.nodes;
    doc["edges"] = json::array();
    for (const auto& e : sc.edges)
        doc["edges"].push_back(json{{"id", e.name},
                                    {"tail", sc.nodes[e.tail]},
                                    {"head", sc.nodes[e.head]},
                                    {"a", e.a},
                                    {"b", e.b},
                                    {"d", e.d}});
    doc["stations"] = json::array();
    for (int j = 0; j < sc.real_station_count; ++j) {
        const Station& st = sc.stations[j];
        json row{{"id", st.name}, {"edge", sc.edges[st.edge].name}, {"sigma", st.sigma}, {"k", st.k}, {"g", st.g}};
        if (st.ground) row["ground"] = ground_to_json(*st.ground);
        doc["stations"].push_back(row);
    }
    doc["evs"] = json::array();
    for (const auto& ev : sc.evs)
        doc["evs"].push_back(json{{"id", ev.name},
                                  {"s", sc.nodes[ev.origin]},
                                  {"t", sc.nodes[ev.dest]},
                                  {"b", ev.b},
                                  {"b_lo", ev.b_lo},
                                  {"b_hi", ev.b_hi}});
    json opts;
    opts["skip_charging"] = sc.options.skip_charging;
    opts["path_cap"] = sc.options.path_cap;
    if (sc.options.pt) {
        json pt{{"c", sc.options.pt->params.c},
                {"c1", sc.options.pt->params.c1},
                {"c2", sc.options.pt->params.c2},
                {"c3", sc.options.pt->params.c3},
                {"points", sc.options.pt->discretization_points}};
        if (sc.options.pt->pmf) pt["pmf"] = pmf_to_json(*sc.options.pt->pmf);
        opts["pt"] = pt;
    }
    doc["options"] = opts;
    return doc.dump(2) + "\n";
}

void save_scenario(const Scenario& sc, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw error(errc::io, "cannot write scenario file '" + path + "'");
    out << serialize_scenario(sc);
}

std::string serialize_profile(const Scenario& sc, const Profile& p) {
    json doc;
    doc["actions"] = json::array();
    for (std::size_t i = 0; i < p.actions.size(); ++i) {
        const Action& a = p.actions[i];
        json row;
        row["ev"] = sc.evs[i].name;
        row["path"] = json::array();
        for (int e : a.path) row["path"].push_back(sc.edges[e].name);
        row["station"] = sc.stations[a.station].name;
        row["load"] = a.load;
        doc["actions"].push_back(row);
    }
    return doc.dump(2) + "\n";
}

Profile parse_profile(const Scenario& sc, const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw error(errc::validation, std::string("profile: not valid JSON: ") + e.what());
    }
    Profile p;
    p.actions.resize(sc.evs.size());
    std::vector<char> seen(sc.evs.size(), 0);
    for (const auto& row : require(doc, "actions", "profile")) {
        const std::string name = as_string(require(row, "ev", "profile.actions[]"), "profile.actions[].ev");
        const int i = sc.ev_index(name);
        if (i < 0) reject("profile.actions[].ev", "unknown EV '" + name + "'");
        if (seen[i]) reject("profile.actions[].ev", "duplicate action for EV '" + name + "'");
        seen[i] = 1;
        Action a;
        for (const auto& e : require(row, "path", "profile.actions[]")) {
            const std::string edge = as_string(e, "profile.actions[].path[]");
            const int ei = sc.edge_index(edge);
            if (ei < 0) reject("profile.actions[].path", "unknown edge '" + edge + "'");
            a.path.push_back(ei);
        }
        const std::string st = as_string(require(row, "station", "profile.actions[]"), "profile.actions[].station");
        a.station = sc.station_index(st);
        if (a.station < 0) reject("profile.actions[].station", "unknown station '" + st + "'");
        a.load = as_number(require(row, "load", "profile.actions[]"), "profile.actions[].load");
        p.actions[i] = a;
        validate_action(sc, i, p.actions[i]);
    }
    for (std::size_t i = 0; i < seen.size(); ++i)
        if (!seen[i]) reject("profile.actions", "missing action for EV '" + sc.evs[i].name + "'");
    return p;
}

}  // namespace evgrid
