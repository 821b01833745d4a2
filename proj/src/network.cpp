#include "linkwave/network.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "linkwave/common.hpp"
#include "linkwave/rational.hpp"

namespace linkwave {

double capacity(const FundamentalDiagram& fd) {
  return fd.free_speed_mph * fd.critical_density();
}

int Network::link_index(const std::string& id) const {
  for (size_t i = 0; i < links.size(); ++i)
    if (links[i].id == id) return static_cast<int>(i);
  return -1;
}

int Network::junction_index(const std::string& id) const {
  for (size_t i = 0; i < junctions.size(); ++i)
    if (junctions[i].id == id) return static_cast<int>(i);
  return -1;
}

const InflowProfile* Network::inflow_for(const std::string& link_id) const {
  for (const auto& p : inflows)
    if (p.link == link_id) return &p;
  return nullptr;
}

std::vector<LinkIncidence> build_incidence(const Network& net) {
  std::vector<LinkIncidence> inc(net.links.size());
  for (size_t j = 0; j < net.junctions.size(); ++j) {
    const auto& jn = net.junctions[j];
    for (int s = 0; s < 2; ++s) {
      const int in = net.link_index(jn.incoming[s]);
      if (in >= 0) {
        inc[in].down_junction = static_cast<int>(j);
        inc[in].down_slot = s;
      }
      const int out = net.link_index(jn.outgoing[s]);
      if (out >= 0) {
        inc[out].up_junction = static_cast<int>(j);
        inc[out].up_slot = s;
      }
    }
  }
  return inc;
}

std::string ValidationReport::to_string() const {
  if (issues.empty()) return "ok";
  std::ostringstream os;
  for (const auto& it : issues) os << it.entity << ": " << it.message << "\n";
  return os.str();
}

namespace {

// Exact wave-offset computation; returns false if any quantity is not a
// plain decimal or the ratio is not a positive integer. On success fills
// `out` and the exact ratio string for diagnostics.
bool try_offsets(const LinkSpec& link, const TimeGrid& grid, Offsets* out,
                 std::string* fwd_str, std::string* bwd_str) {
  try {
    const Rational L = Rational::from_decimal(link.length_miles);
    const Rational k = Rational::from_decimal(link.fd.free_speed_mph);
    const Rational w = Rational::from_decimal(link.fd.wave_speed_mph);
    const Rational dt = Rational::from_decimal(grid.dt_hours);
    const Rational f = L / (k * dt);
    const Rational b = L / (w * dt);
    if (fwd_str) *fwd_str = f.str();
    if (bwd_str) *bwd_str = b.str();
    if (!f.is_integer() || !b.is_integer() || f.num <= 0 || b.num <= 0) return false;
    if (out) {
      out->forward = static_cast<int>(f.num);
      out->backward = static_cast<int>(b.num);
    }
    return true;
  } catch (const ConfigError&) {
    return false;
  }
}

}  // namespace

Offsets offsets(const LinkSpec& link, const TimeGrid& grid) {
  Offsets out;
  std::string f, b;
  if (!try_offsets(link, grid, &out, &f, &b)) {
    throw ConfigError("link " + link.id + ": wave offsets L/(k*dt) = " + f +
                      ", L/(w*dt) = " + b + " must be positive integers");
  }
  return out;
}

ValidationReport validate_network(const Network& net, const TimeGrid& grid) {
  ValidationReport rep;
  auto add = [&rep](const std::string& entity, const std::string& msg) {
    rep.issues.push_back({entity, msg});
  };

  if (!(grid.dt_hours > 0)) add("grid", "dt must be positive");
  if (grid.n_steps <= 0) add("grid", "n_steps must be positive");

  std::set<std::string> seen;
  for (const auto& l : net.links) {
    if (!seen.insert(l.id).second) add(l.id, "duplicate link id");
    if (!(l.length_miles > 0)) add(l.id, "length must be positive");
    if (!(l.fd.free_speed_mph > 0)) add(l.id, "free speed k must be positive");
    if (!(l.fd.wave_speed_mph > 0)) add(l.id, "wave speed w must be positive");
    if (!(l.fd.jam_density_vpm > 0)) add(l.id, "jam density must be positive");
    if (grid.dt_hours > 0 && l.length_miles > 0 && l.fd.free_speed_mph > 0 &&
        l.fd.wave_speed_mph > 0) {
      std::string f, b;
      if (!try_offsets(l, grid, nullptr, &f, &b)) {
        add(l.id, "wave offsets L/(k*dt) = " + f + " and L/(w*dt) = " + b +
                      " must be positive integers");
      }
    }
  }

  const auto inc = build_incidence(net);

  std::set<std::string> jseen;
  for (const auto& j : net.junctions) {
    if (!jseen.insert(j.id).second) add(j.id, "duplicate junction id");
    for (int s = 0; s < 2; ++s) {
      if (net.link_index(j.incoming[s]) < 0)
        add(j.id, "incoming link " + j.incoming[s] + " is not defined");
      if (net.link_index(j.outgoing[s]) < 0)
        add(j.id, "outgoing link " + j.outgoing[s] + " is not defined");
    }
    if (j.incoming[0] == j.incoming[1]) add(j.id, "incoming links must differ");
    if (j.outgoing[0] == j.outgoing[1]) add(j.id, "outgoing links must differ");
    for (int s = 0; s < 2; ++s) {
      const double sum = j.alpha[s][0] + j.alpha[s][1];
      if (j.alpha[s][0] < 0 || j.alpha[s][0] > 1 || j.alpha[s][1] < 0 ||
          j.alpha[s][1] > 1 || std::fabs(sum - 1.0) > 1e-12) {
        add(j.id, "turning ratios for incoming slot " + std::to_string(s) +
                      " must be in [0,1] with row sum 1 (row sum " + fmt9(sum) + ")");
      }
    }
  }

  // Each link may feed at most one junction and be fed by at most one; the
  // incidence builder keeps the last writer, so detect duplicates directly.
  for (size_t li = 0; li < net.links.size(); ++li) {
    int feeds = 0, fed = 0;
    for (const auto& j : net.junctions) {
      for (int s = 0; s < 2; ++s) {
        if (j.incoming[s] == net.links[li].id) ++feeds;
        if (j.outgoing[s] == net.links[li].id) ++fed;
      }
    }
    if (feeds > 1) add(net.links[li].id, "link is incoming to more than one junction");
    if (fed > 1) add(net.links[li].id, "link is outgoing from more than one junction");
  }

  // Role coherence.
  for (size_t li = 0; li < net.links.size(); ++li) {
    const auto& l = net.links[li];
    switch (l.role) {
      case LinkRole::Source:
        if (inc[li].up_junction >= 0)
          add(l.id, "source link cannot be outgoing from a junction");
        if (!net.inflow_for(l.id))
          add(l.id, "source link has no inflow profile");
        break;
      case LinkRole::Internal:
        if (inc[li].up_junction < 0 || inc[li].down_junction < 0)
          add(l.id, "internal link must connect two junctions");
        break;
      case LinkRole::Sink:
        if (inc[li].down_junction >= 0)
          add(l.id, "sink link cannot be incoming to a junction");
        if (inc[li].up_junction < 0)
          add(l.id, "sink link must be outgoing from a junction");
        break;
    }
    if (l.role != LinkRole::Source && net.inflow_for(l.id))
      add(l.id, "only source links may carry an inflow profile");
  }

  // Inflow profiles: shape and bounds.
  for (const auto& p : net.inflows) {
    const int li = net.link_index(p.link);
    if (li < 0) {
      add(p.link, "inflow profile references undefined link");
      continue;
    }
    if (p.randomized) {
      if (p.random_low < 0 || p.random_high < p.random_low)
        add(p.link, "randomized inflow range must satisfy 0 <= low <= high");
      const double cap = capacity(net.links[li].fd);
      if (p.random_high > cap + 1e-9)
        add(p.link, "randomized inflow high " + fmt9(p.random_high) +
                        " exceeds capacity " + fmt9(cap));
      if (!p.values.empty() && static_cast<int>(p.values.size()) != grid.n_steps)
        add(p.link, "inflow profile has " + std::to_string(p.values.size()) +
                        " values, expected " + std::to_string(grid.n_steps));
      continue;
    }
    if (static_cast<int>(p.values.size()) != grid.n_steps) {
      add(p.link, "inflow profile has " + std::to_string(p.values.size()) +
                      " values, expected " + std::to_string(grid.n_steps));
      continue;
    }
    const double cap = capacity(net.links[li].fd);
    for (size_t s = 0; s < p.values.size(); ++s) {
      const double v = p.values[s];
      if (!(v >= 0) || v > cap + 1e-9) {
        add(p.link, "inflow at step " + std::to_string(s) + " is " + fmt9(v) +
                        ", outside [0, " + fmt9(cap) + "]");
        break;
      }
    }
  }

  // Cycle detection over the junction graph induced by internal links.
  const size_t nj = net.junctions.size();
  std::vector<std::vector<int>> adj(nj);
  for (size_t li = 0; li < net.links.size(); ++li) {
    if (inc[li].up_junction >= 0 && inc[li].down_junction >= 0)
      adj[inc[li].up_junction].push_back(inc[li].down_junction);
  }
  std::vector<int> color(nj, 0);  // 0 new, 1 on stack, 2 done
  bool cycle = false;
  auto dfs = [&](auto&& self, int u) -> void {
    color[u] = 1;
    for (int v : adj[u]) {
      if (color[v] == 1) cycle = true;
      else if (color[v] == 0) self(self, v);
    }
    color[u] = 2;
  };
  for (size_t j = 0; j < nj && !cycle; ++j)
    if (color[j] == 0) dfs(dfs, static_cast<int>(j));
  if (cycle) add("network", "internal links form a cycle between junctions");

  return rep;
}

void materialize_inflows(Network& net, const TimeGrid& grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& p : net.inflows) {
    if (!p.randomized || !p.values.empty()) continue;
    p.values.resize(grid.n_steps);
    for (int s = 0; s < grid.n_steps; ++s) {
      // integer veh/h draws keep cumulative-curve comparisons well clear of
      // the MILP's strict-inequality offset
      const double v = uniform_draw(rng, p.random_low, p.random_high);
      p.values[s] = std::round(v);
    }
  }
}

}  // namespace linkwave
