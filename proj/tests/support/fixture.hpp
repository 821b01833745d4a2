#pragma once

// Shared test networks. two_junction_network mirrors fixtures/two_junction.json
// exactly (a test asserts the two stay in sync); gated_source wraps one
// measured source link behind a junction so a signal plan can impose red
// phases on its exit.

#include <cstdlib>
#include <string>
#include <vector>

#include "linkwave/kinematics.hpp"
#include "linkwave/network.hpp"

namespace linkwave::testfix {

inline FundamentalDiagram std_fd() { return FundamentalDiagram{30, 10, 400}; }

inline LinkSpec std_link(const std::string& id, LinkRole role) {
  return LinkSpec{id, 0.3, std_fd(), role};
}

inline TimeGrid std_grid() { return TimeGrid{0.005, 20}; }

// Demand arrives in capacity platoons (flow 0 or C): every cumulative count
// then sits on the C*dt lattice, so a queue at a green light is never worth
// less than one full step of discharge and the regime-branch dynamics stay
// exact for the signal plans the optimizer can pick.
inline std::vector<double> fixture_inflow(const std::string& link) {
  if (link == "I1")
    return {3000, 0, 3000, 0, 3000, 0, 3000, 0, 3000, 0,
            3000, 0, 3000, 0, 3000, 0, 3000, 0, 3000, 0};
  if (link == "I2")
    return {0, 3000, 0, 3000, 0, 3000, 0, 3000, 0, 3000,
            0, 3000, 0, 3000, 0, 3000, 0, 3000, 0, 3000};
  return {3000, 3000, 0, 0, 3000, 0, 0, 3000, 0, 0,
          3000, 3000, 0, 0, 3000, 0, 0, 3000, 0, 0};
}

inline Network two_junction_network() {
  Network net;
  net.links = {std_link("I1", LinkRole::Source), std_link("I2", LinkRole::Source),
               std_link("I3", LinkRole::Source), std_link("I4", LinkRole::Sink),
               std_link("I5", LinkRole::Internal), std_link("I6", LinkRole::Sink),
               std_link("I7", LinkRole::Sink)};
  net.junctions = {JunctionSpec{"J1", {"I1", "I2"}, {"I4", "I5"}},
                   JunctionSpec{"J2", {"I3", "I5"}, {"I6", "I7"}}};
  for (const std::string id : {"I1", "I2", "I3"}) {
    InflowProfile p;
    p.link = id;
    p.values = fixture_inflow(id);
    net.inflows.push_back(p);
  }
  return net;
}

// One measured source link (A) whose exit is gated by junction JG: green
// when the plan picks slot 0, red when it picks slot 1. B is a silent
// second source, C and D empty sinks that never spill back within the
// fixture horizon.
inline Network gated_source(const std::vector<double>& inflow_a) {
  Network net;
  net.links = {std_link("A", LinkRole::Source), std_link("B", LinkRole::Source),
               std_link("C", LinkRole::Sink), std_link("D", LinkRole::Sink)};
  net.junctions = {JunctionSpec{"JG", {"A", "B"}, {"C", "D"}}};
  InflowProfile pa;
  pa.link = "A";
  pa.values = inflow_a;
  InflowProfile pb;
  pb.link = "B";
  pb.values.assign(inflow_a.size(), 0.0);
  net.inflows = {pa, pb};
  return net;
}

// Four-step single-junction scenario small enough for exhaustive plan
// enumeration: two competing sources with staggered peaks. Links are half
// length (forward lag 1 step) so discharge reaches the sinks inside the
// short horizon and the objective separates the sixteen plans.
inline Network one_junction_network() {
  Network net;
  const auto half = [](const std::string& id, LinkRole role) {
    return LinkSpec{id, 0.15, std_fd(), role};
  };
  net.links = {half("P1", LinkRole::Source), half("P2", LinkRole::Source),
               half("S1", LinkRole::Sink), half("S2", LinkRole::Sink)};
  net.junctions = {JunctionSpec{"JX", {"P1", "P2"}, {"S1", "S2"}}};
  InflowProfile p1;
  p1.link = "P1";
  p1.values = {3000, 3000, 3000, 0};
  InflowProfile p2;
  p2.link = "P2";
  p2.values = {0, 0, 3000, 3000};
  net.inflows = {p1, p2};
  return net;
}

inline TimeGrid short_grid() { return TimeGrid{0.005, 4}; }

// plan[j][s]; slot 1 everywhere = permanent red for slot-0 links
inline SignalPlan uniform_plan(int n_junctions, int n_steps, std::uint8_t slot) {
  SignalPlan plan;
  plan.green_slot.assign(n_junctions, std::vector<std::uint8_t>(n_steps, slot));
  return plan;
}

inline SignalPlan alternating_plan(int n_junctions, int n_steps) {
  SignalPlan plan;
  plan.green_slot.assign(n_junctions, std::vector<std::uint8_t>(n_steps, 0));
  for (int j = 0; j < n_junctions; ++j)
    for (int s = 0; s < n_steps; ++s) plan.green_slot[j][s] = static_cast<std::uint8_t>(s % 2);
  return plan;
}

// Repository root for data files, injected by ctest as LINKWAVE_ROOT.
inline std::string repo_root() {
  const char* env = std::getenv("LINKWAVE_ROOT");
  return env ? env : ".";
}

}  // namespace linkwave::testfix
