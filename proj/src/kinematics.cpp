#include "linkwave/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "linkwave/common.hpp"
#include "linkwave/riemann.hpp"

namespace linkwave {

namespace {

double interp(const std::vector<double>& v, double dt, double t) {
  if (t <= 0) return 0.0;
  const double pos = t / dt;
  const int lo = static_cast<int>(std::floor(pos));
  const int last = static_cast<int>(v.size()) - 1;
  if (lo >= last) return v[last];
  const double frac = pos - lo;
  return v[lo] * (1.0 - frac) + v[lo + 1] * frac;
}

}  // namespace

double CumulativeCurves::up_at(double t) const { return interp(up, dt_hours, t); }
double CumulativeCurves::down_at(double t) const { return interp(down, dt_hours, t); }

CumulativeCurves curves_of(const Trajectory& traj, int link_index) {
  CumulativeCurves c;
  c.up = traj.links[link_index].n_up;
  c.down = traj.links[link_index].n_down;
  c.dt_hours = traj.dt_hours;
  return c;
}

bool upstream_regime(double n_up_t, double n_down_lagged, double jam_storage_veh) {
  return n_up_t >= n_down_lagged + jam_storage_veh - kTieEps;
}

bool downstream_regime(double n_up_lagged, double n_down_t) {
  return n_up_lagged > n_down_t + kTieEps;
}

Trajectory simulate(const Network& net, const TimeGrid& grid, const SignalPlan& plan,
                    const SimulateOptions& opt) {
  const auto rep = validate_network(net, grid);
  if (!rep.ok()) throw ConfigError("invalid network: " + rep.to_string());
  if (plan.green_slot.size() != net.junctions.size())
    throw ConfigError("plan covers " + std::to_string(plan.green_slot.size()) +
                      " junctions, network has " + std::to_string(net.junctions.size()));
  for (const auto& row : plan.green_slot)
    if (static_cast<int>(row.size()) != grid.n_steps)
      throw ConfigError("plan must cover every step");

  const int n_links = static_cast<int>(net.links.size());
  const int N = grid.n_steps;
  const double dt = grid.dt_hours;
  const auto inc = build_incidence(net);

  std::vector<Offsets> off(n_links);
  std::vector<double> cap(n_links), jam_l(n_links);
  std::vector<const InflowProfile*> inflow(n_links, nullptr);
  for (int i = 0; i < n_links; ++i) {
    off[i] = offsets(net.links[i], grid);
    cap[i] = capacity(net.links[i].fd);
    jam_l[i] = net.links[i].jam_storage_veh();
    inflow[i] = net.inflow_for(net.links[i].id);
    if (inflow[i] && inflow[i]->values.empty())
      throw ConfigError("link " + net.links[i].id +
                        ": randomized inflow profile was never materialized");
  }

  Trajectory traj;
  traj.n_steps = N;
  traj.dt_hours = dt;
  traj.links.resize(n_links);
  for (auto& ls : traj.links) {
    ls.q_in.assign(N, 0.0);
    ls.q_out.assign(N, 0.0);
    ls.regime_in.assign(N, 0);
    ls.regime_out.assign(N, 0);
    ls.supply_cap.assign(N, 0.0);
    ls.demand_cap.assign(N, 0.0);
    ls.n_up.assign(N + 1, 0.0);
    ls.n_down.assign(N + 1, 0.0);
  }

  for (int s = 0; s < N; ++s) {
    // 1. regimes and boundary caps, all from strictly lagged data
    for (int i = 0; i < n_links; ++i) {
      auto& ls = traj.links[i];
      const int sf = s - off[i].forward;
      const int sb = s - off[i].backward;
      const double n_up_lag = sf >= 0 ? ls.n_up[sf] : 0.0;
      const double n_down_lag = sb >= 0 ? ls.n_down[sb] : 0.0;
      const bool r_in = upstream_regime(ls.n_up[s], n_down_lag, jam_l[i]);
      const bool r_out = downstream_regime(n_up_lag, ls.n_down[s]);
      const double q_in_lag = sf >= 0 ? ls.q_in[sf] : 0.0;
      const double q_out_lag = sb >= 0 ? ls.q_out[sb] : 0.0;
      ls.regime_in[s] = r_in ? 1 : 0;
      ls.regime_out[s] = r_out ? 1 : 0;
      // A queue can dissolve (or the last storage gap can close) partway
      // through a step; the capacity branch alone would then overdraw the
      // cumulative curves, so clamp it to what the lagged counts allow.
      const double n_up_next_lag = sf + 1 >= 0 ? ls.n_up[sf + 1] : 0.0;
      const double n_down_next_lag = sb + 1 >= 0 ? ls.n_down[sb + 1] : 0.0;
      const double sendable = std::max(0.0, (n_up_next_lag - ls.n_down[s]) / dt);
      const double storable = std::max(0.0, (n_down_next_lag + jam_l[i] - ls.n_up[s]) / dt);
      ls.demand_cap[s] = r_out ? std::min(cap[i], sendable) : q_in_lag;
      ls.supply_cap[s] = r_in ? q_out_lag : std::min(cap[i], storable);
    }

    // 2. junction discharges for the green slots
    for (size_t j = 0; j < net.junctions.size(); ++j) {
      const auto& jn = net.junctions[j];
      const int g = plan.green_slot[j][s];
      if (g != 0 && g != 1)
        throw ConfigError("junction " + jn.id + " step " + std::to_string(s) +
                          ": green slot must be 0 or 1");
      const int in_g = net.link_index(jn.incoming[g]);
      const int sf = s - off[in_g].forward;
      PhaseState in_state{sf >= 0 ? traj.links[in_g].q_in[sf] : 0.0,
                          traj.links[in_g].regime_out[s] != 0};
      PhaseState out_states[2];
      double alphas[2], caps_out[2];
      int out_idx[2];
      for (int o = 0; o < 2; ++o) {
        const int li = net.link_index(jn.outgoing[o]);
        out_idx[o] = li;
        const int sb = s - off[li].backward;
        out_states[o] = {sb >= 0 ? traj.links[li].q_out[sb] : 0.0,
                         traj.links[li].regime_in[s] != 0};
        alphas[o] = jn.alpha[g][o];
        caps_out[o] = cap[li];
      }
      const auto res = solve_junction(in_state, cap[in_g], {out_states, 2},
                                      {alphas, 2}, {caps_out, 2});
      // clamp the closed-form discharge with the same availability limits the
      // boundary caps carry, keeping the turning split exact
      double q = std::min(res.q_hat_in, traj.links[in_g].demand_cap[s]);
      for (int o = 0; o < 2; ++o)
        if (alphas[o] > 0.0) q = std::min(q, traj.links[out_idx[o]].supply_cap[s] / alphas[o]);
      traj.links[in_g].q_out[s] = q;
      // red slot keeps q_out == 0
      for (int o = 0; o < 2; ++o) traj.links[out_idx[o]].q_in[s] += alphas[o] * q;
    }

    // 3. exogenous source inflows and free terminal discharge
    for (int i = 0; i < n_links; ++i) {
      if (inflow[i]) traj.links[i].q_in[s] = inflow[i]->values[s];
      if (inc[i].terminal()) traj.links[i].q_out[s] = traj.links[i].demand_cap[s];
    }

    // 4. accumulate counts and check source storage
    for (int i = 0; i < n_links; ++i) {
      auto& ls = traj.links[i];
      ls.n_up[s + 1] = ls.n_up[s] + dt * ls.q_in[s];
      ls.n_down[s + 1] = ls.n_down[s] + dt * ls.q_out[s];
      if (opt.enforce_source_capacity && inflow[i]) {
        const int sb = s + 1 - off[i].backward;
        const double n_down_lag = sb >= 0 ? ls.n_down[sb] : 0.0;
        if (ls.n_up[s + 1] > n_down_lag + jam_l[i] + 1e-9) {
          throw SimulationError(net.links[i].id, s,
                                "link " + net.links[i].id + " step " + std::to_string(s) +
                                    ": inflow overfills the spilled-back link (" +
                                    fmt9(ls.n_up[s + 1]) + " > " +
                                    fmt9(n_down_lag + jam_l[i]) + " veh)");
        }
      }
    }
  }
  return traj;
}

double moskowitz(const CumulativeCurves& c, const LinkSpec& link, double t, double x) {
  const double horizon = c.dt_hours * c.n_steps();
  if (x < link.a() - 1e-12 || x > link.b() + 1e-12)
    throw std::domain_error("x = " + fmt9(x) + " outside [" + fmt9(link.a()) + ", " +
                            fmt9(link.b()) + "]");
  if (t < -1e-12 || t > horizon + 1e-12)
    throw std::domain_error("t = " + fmt9(t) + " outside [0, " + fmt9(horizon) + "]");
  const double up_branch = c.up_at(t - (x - link.a()) / link.fd.free_speed_mph);
  const double down_branch = c.down_at(t - (link.b() - x) / link.fd.wave_speed_mph) +
                             link.fd.jam_density_vpm * (link.b() - x);
  return std::min(up_branch, down_branch);
}

double shock_position(const CumulativeCurves& c, const LinkSpec& link, double t) {
  const auto gap = [&](double x) {
    const double up_branch = c.up_at(t - (x - link.a()) / link.fd.free_speed_mph);
    const double down_branch = c.down_at(t - (link.b() - x) / link.fd.wave_speed_mph) +
                               link.fd.jam_density_vpm * (link.b() - x);
    return up_branch - down_branch;  // <= 0 where the free-flow branch governs
  };
  if (gap(link.b()) <= kTieEps) return link.b();
  if (gap(link.a()) > kTieEps) return link.a();
  double lo = link.a(), hi = link.b();  // gap(lo) <= 0 < gap(hi)
  while (hi - lo > kShockBisectTolMiles) {
    const double mid = 0.5 * (lo + hi);
    if (gap(mid) <= kTieEps) lo = mid;
    else hi = mid;
  }
  return lo;
}

std::vector<bool> check_bounded_shock(const CumulativeCurves& c, const LinkSpec& link,
                                      double c_position) {
  if (!(c_position > link.a()) || !(c_position < link.b()))
    throw std::domain_error("interior position required: a < c < b");
  const int N = c.n_steps();
  const double lag_f = (c_position - link.a()) / link.fd.free_speed_mph;
  const double lag_b = (link.b() - c_position) / link.fd.wave_speed_mph;
  const double storage = link.fd.jam_density_vpm * (link.b() - c_position);
  std::vector<bool> ok(N + 1);
  for (int j = 0; j <= N; ++j) {
    const double t = j * c.dt_hours;
    ok[j] = c.up_at(t - lag_f) <= c.down_at(t - lag_b) + storage + kTieEps;
  }
  return ok;
}

Metrics metrics(const Network& net, const TimeGrid& grid, const Trajectory& traj) {
  Metrics m;
  const auto inc = build_incidence(net);
  const double dt = grid.dt_hours;
  for (size_t i = 0; i < net.links.size(); ++i) {
    const auto& ls = traj.links[i];
    if (inc[i].terminal()) m.throughput_veh += ls.n_down.back();
    const int df = offsets(net.links[i], grid).forward;
    for (int j = 1; j <= traj.n_steps; ++j) {
      m.occupancy_integral_veh_h += dt * (ls.n_up[j] - ls.n_down[j]);
      const double n_up_lag = j - df >= 0 ? ls.n_up[j - df] : 0.0;
      m.free_flow_baseline_veh_h += dt * (ls.n_up[j] - n_up_lag);
    }
  }
  m.total_delay_veh_h = m.occupancy_integral_veh_h - m.free_flow_baseline_veh_h;
  return m;
}

}  // namespace linkwave
