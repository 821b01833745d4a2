#pragma once

#include <span>
#include <vector>

#include "linkwave/network.hpp"

namespace linkwave {

// Phase-indexed boundary state of a link end: a flow value plus the regime
// bit that disambiguates which branch of the triangular diagram it sits on.
// congested = false selects the free branch (rho = q/k), congested = true the
// queued branch (rho = rho_jam - q/w).
struct PhaseState {
  double flow = 0;        // veh/h, in [0, C]
  bool congested = false; // regime bit r
};

double density_of(const PhaseState& s, const FundamentalDiagram& fd);

// Largest flow the link end can send (exit of an incoming link):
// q if free, C if congested.
double demand(const PhaseState& s, double cap);

// Largest flow the link end can absorb (entrance of an outgoing link):
// C if free, q if congested.
double supply(const PhaseState& s, double cap);

struct JunctionResolution {
  double q_hat_in = 0;        // discharge of the active incoming link
  bool r_hat_in = false;      // its post-resolution regime
  std::vector<double> q_bar_out;   // alpha-shared inflows to outgoing links
  std::vector<bool> r_bar_out;     // their post-resolution regimes
};

// Resolves the Riemann problem at a diverge-style junction boundary: one
// active incoming link against n >= 1 outgoing links with turning shares
// `alphas` (one per outgoing link, summing to at most 1 of the active row).
// Outgoing links with alpha == 0 receive nothing and do not constrain the
// discharge. A red incoming link is simply not passed here; its discharge is
// zero by the signal, not by this solver.
JunctionResolution solve_junction(const PhaseState& in, double cap_in,
                                  std::span<const PhaseState> outs,
                                  std::span<const double> alphas,
                                  std::span<const double> caps_out);

}  // namespace linkwave
