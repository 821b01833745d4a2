#pragma once

#include <cstdint>
#include <vector>

#include "linkwave/network.hpp"

namespace linkwave {

// Vehicle-count curves for one link: up[j] / down[j] are the cumulative
// counts past the entrance / exit at time j * dt, j = 0 .. n_steps.
// Flows are constant within a step, so the curves are exactly piecewise
// linear and up[0] == down[0] == 0.
struct CumulativeCurves {
  std::vector<double> up;
  std::vector<double> down;
  double dt_hours = 0;

  int n_steps() const { return static_cast<int>(up.size()) - 1; }
  // Linear interpolation with zero extension for t < 0.
  double up_at(double t) const;
  double down_at(double t) const;
};

// Per-link time series produced by the simulator (and by model extraction).
// Flow entries are indexed by step s = 0 .. n_steps-1 and apply to the
// interval [s*dt, (s+1)*dt); n_up/n_down carry one extra entry.
struct LinkSeries {
  std::vector<double> q_in;        // q_bar, entrance flow
  std::vector<double> q_out;       // q_hat, exit flow
  std::vector<std::uint8_t> regime_in;   // r_bar, shock at entrance
  std::vector<std::uint8_t> regime_out;  // r_hat, shock influence at exit
  std::vector<double> supply_cap;  // q_bar_max
  std::vector<double> demand_cap;  // q_hat_max
  std::vector<double> n_up;
  std::vector<double> n_down;
};

struct Trajectory {
  std::vector<LinkSeries> links;
  int n_steps = 0;
  double dt_hours = 0;
};

CumulativeCurves curves_of(const Trajectory& traj, int link_index);

// Signal plan: green_slot[junction][step] selects which incoming slot (0/1)
// of that junction discharges during the step.
struct SignalPlan {
  std::vector<std::vector<std::uint8_t>> green_slot;
};

// Regime detection from cumulative counts. Ties (equality within 1e-9 veh)
// close toward the congested side at the entrance and the free side at the
// exit, matching the strict-inequality convention of the control model.
bool upstream_regime(double n_up_t, double n_down_lagged, double jam_storage_veh);
bool downstream_regime(double n_up_lagged, double n_down_t);

struct SimulateOptions {
  // When set (default), inflow that would push a source link's entrance
  // count past its lagged storage bound raises SimulationError. The solver
  // disables this to evaluate candidate plans against the model rows instead.
  bool enforce_source_capacity = true;
};

// Explicit forward map: per step, detect regimes from strictly lagged data,
// form demand/supply caps, resolve each junction for its green slot, inject
// source inflows, discharge terminal links at their demand cap, accumulate.
// The network must validate cleanly first.
Trajectory simulate(const Network& net, const TimeGrid& grid, const SignalPlan& plan,
                    const SimulateOptions& opt = {});

// Two-branch variational evaluation of the count surface at (t, x):
//   N(t,x) = min{ up(t - (x-a)/k),  down(t - (b-x)/w) + rho_jam (b - x) }.
// Throws std::domain_error outside x in [a,b] or t in [0, horizon].
double moskowitz(const CumulativeCurves& c, const LinkSpec& link, double t, double x);

// Largest x in [a, b] where the upstream branch does not exceed the
// downstream branch: the free-flow/congested interface. Returns b on an
// entirely free link and a on an entirely queued one. Bisection to 1e-6 mi.
double shock_position(const CumulativeCurves& c, const LinkSpec& link, double t);

// Per-step check of the mid-link storage bound
//   up(t - (c-a)/k) <= down(t - (b-c)/w) + rho_jam (b - c)
// at every grid time; true means the interface has not passed upstream of c.
std::vector<bool> check_bounded_shock(const CumulativeCurves& c, const LinkSpec& link,
                                      double c_position);

struct Metrics {
  double throughput_veh = 0;           // vehicles out of terminal links
  double occupancy_integral_veh_h = 0; // integral of vehicles on links
  double free_flow_baseline_veh_h = 0; // same integral if all travel were free-flow
  double total_delay_veh_h = 0;        // occupancy minus baseline
};

Metrics metrics(const Network& net, const TimeGrid& grid, const Trajectory& traj);

}  // namespace linkwave
