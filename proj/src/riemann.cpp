#include "linkwave/riemann.hpp"

#include <cmath>
#include <stdexcept>

#include "linkwave/common.hpp"

namespace linkwave {

double density_of(const PhaseState& s, const FundamentalDiagram& fd) {
  const double cap = capacity(fd);
  if (s.flow < -kTieEps || s.flow > cap + 1e-6)
    throw std::domain_error("flow " + fmt9(s.flow) + " outside [0, " + fmt9(cap) + "]");
  if (!s.congested) return s.flow / fd.free_speed_mph;
  return fd.jam_density_vpm - s.flow / fd.wave_speed_mph;
}

double demand(const PhaseState& s, double cap) {
  return s.congested ? cap : s.flow;
}

double supply(const PhaseState& s, double cap) {
  return s.congested ? s.flow : cap;
}

JunctionResolution solve_junction(const PhaseState& in, double cap_in,
                                  std::span<const PhaseState> outs,
                                  std::span<const double> alphas,
                                  std::span<const double> caps_out) {
  if (outs.size() != alphas.size() || outs.size() != caps_out.size())
    throw std::invalid_argument("outgoing state/alpha/capacity lists must align");

  // q_hat = min over the sending limit and each receiving limit scaled by
  // its turning share; zero-share links cannot bind.
  double q_hat = demand(in, cap_in);
  for (size_t i = 0; i < outs.size(); ++i) {
    if (alphas[i] <= 0.0) continue;
    q_hat = std::min(q_hat, supply(outs[i], caps_out[i]) / alphas[i]);
  }

  JunctionResolution res;
  res.q_hat_in = q_hat;
  // Incoming side: a free state stays free only if nothing was held back.
  if (in.congested) {
    res.r_hat_in = true;
  } else {
    res.r_hat_in = q_hat < in.flow - kTieEps;
  }

  res.q_bar_out.resize(outs.size());
  res.r_bar_out.resize(outs.size());
  for (size_t i = 0; i < outs.size(); ++i) {
    const double q = alphas[i] * q_hat;
    res.q_bar_out[i] = q;
    // Outgoing side: a congested state relaxes to free once the arriving
    // flow drops below what the queue was absorbing.
    if (!outs[i].congested) {
      res.r_bar_out[i] = false;
    } else {
      res.r_bar_out[i] = q >= outs[i].flow - kTieEps;
    }
  }
  return res;
}

}  // namespace linkwave
