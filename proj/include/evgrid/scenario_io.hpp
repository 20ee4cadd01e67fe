#ifndef EVGRID_SCENARIO_IO_HPP
#define EVGRID_SCENARIO_IO_HPP

#include <string>

#include "evgrid/model.hpp"

namespace evgrid {

// Parses and validates a scenario document. Canonical keys:
//   nodes, edges[{id,tail,head,a,b,d}],
//   stations[{id,edge,sigma,k,g | ground:{type,...}}],
//   evs[{id,s,t,b,b_lo,b_hi}],
//   options{skip_charging, path_cap, pt:{c,c1,c2,c3,pmf,points}}.
// Throws errc::validation with a field path on any malformed input.
Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::string& path);

// Canonical serialization; parse(serialize(sc)) reproduces the scenario
// exactly (numbers round-trip through shortest-representation printing).
std::string serialize_scenario(const Scenario& sc);
void save_scenario(const Scenario& sc, const std::string& path);

std::string serialize_profile(const Scenario& sc, const Profile& p);
Profile parse_profile(const Scenario& sc, const std::string& json_text);

}  // namespace evgrid

#endif
