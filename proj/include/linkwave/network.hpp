#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace linkwave {

// Triangular fundamental diagram: flow rises at slope k (mph) up to the
// critical density, then falls at slope -w (mph) to zero at rho_jam (veh/mi).
struct FundamentalDiagram {
  double free_speed_mph = 0;    // k
  double wave_speed_mph = 0;    // w, stored positive
  double jam_density_vpm = 0;   // rho_jam

  double critical_density() const {
    return jam_density_vpm * wave_speed_mph / (free_speed_mph + wave_speed_mph);
  }
};

// Capacity C = k * rho_crit = k * w * rho_jam / (k + w), in veh/h.
double capacity(const FundamentalDiagram& fd);

enum class LinkRole { Source, Internal, Sink };

struct LinkSpec {
  std::string id;
  double length_miles = 0;
  FundamentalDiagram fd;
  LinkRole role = LinkRole::Internal;

  // Local coordinates: the link occupies [a, b] = [0, length].
  double a() const { return 0.0; }
  double b() const { return length_miles; }
  double jam_storage_veh() const { return fd.jam_density_vpm * length_miles; }
};

// Two incoming and two outgoing links; alpha[i][j] is the share of incoming
// slot i's discharge that turns onto outgoing slot j. Rows are stochastic.
struct JunctionSpec {
  std::string id;
  std::array<std::string, 2> incoming;
  std::array<std::string, 2> outgoing;
  std::array<std::array<double, 2>, 2> alpha{{{0.5, 0.5}, {0.5, 0.5}}};
};

struct TimeGrid {
  double dt_hours = 0;
  int n_steps = 0;

  double horizon_hours() const { return dt_hours * n_steps; }
};

// Exogenous inflow for a source link. Either `values` holds one veh/h entry
// per step, or `random_low/high` describe a range to be materialized from a
// seed before use.
struct InflowProfile {
  std::string link;
  std::vector<double> values;
  bool randomized = false;
  double random_low = 0;
  double random_high = 0;
};

struct Network {
  std::vector<LinkSpec> links;
  std::vector<JunctionSpec> junctions;
  std::vector<InflowProfile> inflows;

  int link_index(const std::string& id) const;        // -1 if absent
  int junction_index(const std::string& id) const;    // -1 if absent
  const InflowProfile* inflow_for(const std::string& link_id) const;
};

// Junction incidence seen from a link. Slot is the link's position (0/1) in
// the junction's incoming or outgoing list.
struct LinkIncidence {
  int up_junction = -1;    // junction whose outgoing list contains the link
  int up_slot = -1;
  int down_junction = -1;  // junction whose incoming list contains the link
  int down_slot = -1;
  bool terminal() const { return down_junction < 0; }  // discharges freely
};

std::vector<LinkIncidence> build_incidence(const Network& net);

struct ValidationIssue {
  std::string entity;   // link/junction id, or "grid"/"network"
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
  std::string to_string() const;
};

// Structural and numeric validation: positive geometry, integral wave
// offsets (checked in exact rational arithmetic), row-stochastic turning
// ratios, coherent roles and incidence, inflow profiles present and within
// [0, C], and no cycles through internal links.
ValidationReport validate_network(const Network& net, const TimeGrid& grid);

// Integer step counts for the forward (L/(k*dt)) and backward (L/(w*dt))
// wave traversal. Throws ConfigError if either is not a positive integer;
// validate_network reports the same condition non-throwing.
struct Offsets {
  int forward = 0;   // Delta^f
  int backward = 0;  // Delta^b
};

Offsets offsets(const LinkSpec& link, const TimeGrid& grid);

// Fills any randomized inflow profiles with integer veh/h draws from
// [low, high] using the given seed. Values already present are kept.
void materialize_inflows(Network& net, const TimeGrid& grid, std::uint64_t seed);

}  // namespace linkwave
