#include "linkwave/milp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <unordered_map>

#include "linkwave/common.hpp"
#include "linkwave/rational.hpp"

namespace linkwave {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string step_suffix(int step) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "_T%02d", step);
  return buf;
}
}  // namespace

bool var_is_binary(Var v) {
  switch (v) {
    case Var::RBar:
    case Var::RHat:
    case Var::Xi:
    case Var::Eta:
    case Var::U:
      return true;
    default:
      return false;
  }
}

int VarRegistry::add(const VarTag& tag) {
  const int col = static_cast<int>(tags_.size());
  tags_.push_back(tag);
  index_[{static_cast<int>(tag.kind), tag.entity, tag.slot, tag.step}] = col;
  return col;
}

int VarRegistry::lookup(const VarTag& tag) const {
  const auto it = index_.find({static_cast<int>(tag.kind), tag.entity, tag.slot, tag.step});
  return it == index_.end() ? -1 : it->second;
}

const char* row_family_name(RowFamily f) {
  switch (f) {
    case RowFamily::RegimeUp: return "RegimeUp";
    case RowFamily::RegimeDown: return "RegimeDown";
    case RowFamily::SupplyCap: return "SupplyCap";
    case RowFamily::SupplyTie: return "SupplyTie";
    case RowFamily::DemandCap: return "DemandCap";
    case RowFamily::DemandTie: return "DemandTie";
    case RowFamily::Gate: return "Gate";
    case RowFamily::GateTie: return "GateTie";
    case RowFamily::MinBeta: return "MinBeta";
    case RowFamily::MinZeta: return "MinZeta";
    case RowFamily::Turning: return "Turning";
    case RowFamily::Exclusive: return "Exclusive";
    case RowFamily::SinkTie: return "SinkTie";
    case RowFamily::TransitLower: return "TransitLower";
    case RowFamily::StorageCap: return "StorageCap";
    case RowFamily::BoundedShock: return "BoundedShock";
    case RowFamily::MinGreen: return "MinGreen";
  }
  return "?";
}

std::string MilpModel::col_name(int col) const {
  const VarTag& t = registry.tag(col);
  const char* prefix = "";
  bool link_kind = true;
  switch (t.kind) {
    case Var::QBar: prefix = "QBAR"; break;
    case Var::QHat: prefix = "QHAT"; break;
    case Var::RBar: prefix = "RBAR"; break;
    case Var::RHat: prefix = "RHAT"; break;
    case Var::QBarMax: prefix = "QBMX"; break;
    case Var::QHatMax: prefix = "QHMX"; break;
    case Var::ShockSlack: prefix = "SSLK"; break;
    case Var::Zeta: prefix = "ZETA"; link_kind = false; break;
    case Var::Beta: prefix = "BETA"; link_kind = false; break;
    case Var::Xi: prefix = "XI"; link_kind = false; break;
    case Var::Eta: prefix = "ETA"; link_kind = false; break;
    case Var::U: prefix = "U"; link_kind = false; break;
  }
  std::string out = prefix;
  if (link_kind) {
    out += "_" + links[t.entity].id;
  } else {
    out += "_" + junctions[t.entity].id + "_S" + std::to_string(t.slot);
  }
  out += step_suffix(t.step);
  return out;
}

int MilpModel::col_by_name(const std::string& name) const {
  for (int c = 0; c < static_cast<int>(cols.size()); ++c)
    if (col_name(c) == name) return c;
  return -1;
}

namespace {

// Incremental builder: owns the registry/column/row vectors of the model
// under construction and keeps the derived per-link constants at hand.
struct Builder {
  MilpModel& m;
  const Network& net;
  const TimeGrid& grid;
  std::vector<LinkIncidence> inc;

  double m_regime(int li) const {
    if (auto it = m.options.big_m_overrides.find("regime"); it != m.options.big_m_overrides.end())
      return it->second;
    return m.links[li].jam_storage + m.links[li].cap * grid.horizon_hours();
  }
  double m_flow(int li) const {
    if (auto it = m.options.big_m_overrides.find("flow"); it != m.options.big_m_overrides.end())
      return it->second;
    return m.links[li].cap;
  }
  double max_ratio(int j, int slot) const {
    double r = 0;
    for (int o = 0; o < 2; ++o) {
      const double a = m.junctions[j].alpha[slot][o];
      if (a > 0) r = std::max(r, m.links[m.junctions[j].out_links[o]].cap / a);
    }
    return r;
  }
  double m_min(int j, int slot) const {
    if (auto it = m.options.big_m_overrides.find("min"); it != m.options.big_m_overrides.end())
      return it->second;
    return std::max(m.links[m.junctions[j].in_links[slot]].cap, max_ratio(j, slot));
  }

  int add_col(const VarTag& tag, double lo, double hi) {
    const int c = m.registry.add(tag);
    m.cols.push_back({lo, hi, var_is_binary(tag.kind), 0.0});
    return c;
  }

  MilpRow& add_row(std::string name, RowFamily fam, double lo, double hi,
                   std::vector<std::pair<int, double>> terms) {
    m.rows.push_back({std::move(name), fam, lo, hi, std::move(terms), -1, 0, -1, -1});
    return m.rows.back();
  }

  // dt-weighted cumulative count terms: N = dt * sum_{s < upto} flow[s].
  void append_cumulative(std::vector<std::pair<int, double>>& terms, Var kind, int li,
                         int upto, double sign) const {
    for (int s = 0; s < upto; ++s)
      terms.emplace_back(m.col(kind, li, s), sign * grid.dt_hours);
  }
};

void build_columns(Builder& b) {
  const int N = b.grid.n_steps;
  for (int li = 0; li < static_cast<int>(b.m.links.size()); ++li) {
    const auto& L = b.m.links[li];
    const InflowProfile* prof = b.net.inflow_for(L.id);
    for (int s = 0; s < N; ++s) {
      double lo = 0, hi = L.cap;
      if (prof) lo = hi = prof->values[s];  // exogenous entrance flow
      b.add_col({Var::QBar, li, -1, s}, lo, hi);
    }
    for (int s = 0; s < N; ++s) b.add_col({Var::QHat, li, -1, s}, 0, L.cap);
    for (int s = 0; s < N; ++s)
      b.add_col({Var::RBar, li, -1, s}, 0, s < L.backward_offset ? 0 : 1);
    for (int s = 0; s < N; ++s)
      b.add_col({Var::RHat, li, -1, s}, 0, s < L.forward_offset ? 0 : 1);
    if (b.inc[li].up_junction >= 0) {
      for (int s = 0; s < N; ++s) {
        // before any backward wave can arrive the entrance supply is the
        // full capacity, so the column is fixed and its rows are skipped
        if (s < L.backward_offset) b.add_col({Var::QBarMax, li, -1, s}, L.cap, L.cap);
        else b.add_col({Var::QBarMax, li, -1, s}, 0, L.cap);
      }
    }
    for (int s = 0; s < N; ++s) {
      if (s < L.forward_offset) b.add_col({Var::QHatMax, li, -1, s}, 0, 0);
      else b.add_col({Var::QHatMax, li, -1, s}, 0, L.cap);
    }
  }
  for (int j = 0; j < static_cast<int>(b.m.junctions.size()); ++j) {
    const auto& J = b.m.junctions[j];
    for (int slot = 0; slot < 2; ++slot) {
      const double cap_in = b.m.links[J.in_links[slot]].cap;
      const bool a0 = J.alpha[slot][0] > 0, a1 = J.alpha[slot][1] > 0;
      double xi_lo = 0, xi_hi = 1;
      if (!a0 && a1) xi_lo = xi_hi = 1;  // beta must track the second ratio
      if (a0 && !a1) xi_lo = xi_hi = 0;
      for (int s = 0; s < N; ++s) b.add_col({Var::U, j, slot, s}, 0, 1);
      for (int s = 0; s < N; ++s) b.add_col({Var::Zeta, j, slot, s}, 0, cap_in);
      for (int s = 0; s < N; ++s) b.add_col({Var::Beta, j, slot, s}, 0, b.max_ratio(j, slot));
      for (int s = 0; s < N; ++s) b.add_col({Var::Xi, j, slot, s}, xi_lo, xi_hi);
      for (int s = 0; s < N; ++s) b.add_col({Var::Eta, j, slot, s}, 0, 1);
    }
  }
}

void build_regime_rows(Builder& b) {
  const int N = b.grid.n_steps;
  const double eps = b.m.eps_veh;
  for (int li = 0; li < static_cast<int>(b.m.links.size()); ++li) {
    const auto& L = b.m.links[li];
    const double M = b.m_regime(li);
    for (int s = L.backward_offset; s < N; ++s) {
      // congested entrance iff N_down(t - L/w) - N_up(t) + jam storage <= 0
      std::vector<std::pair<int, double>> terms;
      b.append_cumulative(terms, Var::QHat, li, s - L.backward_offset, +1);
      b.append_cumulative(terms, Var::QBar, li, s, -1);
      terms.emplace_back(b.m.col(Var::RBar, li, s), M);
      auto& row = b.add_row("RUP_" + L.id + step_suffix(s), RowFamily::RegimeUp,
                            eps - L.jam_storage, M - L.jam_storage, std::move(terms));
      row.big_m_col = b.m.col(Var::RBar, li, s);
      row.big_m_value = M;
      row.deact_lo = 1;
      row.deact_hi = 0;
    }
    for (int s = L.forward_offset; s < N; ++s) {
      // free exit iff N_up(t - L/k) - N_down(t) <= 0
      std::vector<std::pair<int, double>> terms;
      b.append_cumulative(terms, Var::QBar, li, s - L.forward_offset, +1);
      b.append_cumulative(terms, Var::QHat, li, s, -1);
      terms.emplace_back(b.m.col(Var::RHat, li, s), -M);
      auto& row = b.add_row("RDN_" + L.id + step_suffix(s), RowFamily::RegimeDown,
                            eps - M, 0, std::move(terms));
      row.big_m_col = b.m.col(Var::RHat, li, s);
      row.big_m_value = M;
      row.deact_lo = 0;
      row.deact_hi = 1;
    }
  }
}

void build_cap_rows(Builder& b) {
  const int N = b.grid.n_steps;
  for (int li = 0; li < static_cast<int>(b.m.links.size()); ++li) {
    const auto& L = b.m.links[li];
    const double M = b.m_flow(li);
    if (b.inc[li].up_junction >= 0) {
      for (int s = L.backward_offset; s < N; ++s) {
        const int qbmx = b.m.col(Var::QBarMax, li, s);
        const int rbar = b.m.col(Var::RBar, li, s);
        const int qhat_lag = b.m.col(Var::QHat, li, s - L.backward_offset);
        auto& cap_row = b.add_row("SUPC_" + L.id + step_suffix(s), RowFamily::SupplyCap,
                                  L.cap, kInf, {{qbmx, 1.0}, {rbar, M}});
        cap_row.big_m_col = rbar;
        cap_row.big_m_value = M;
        cap_row.deact_lo = 1;
        auto& tie_hi = b.add_row("SUPU_" + L.id + step_suffix(s), RowFamily::SupplyTie,
                                 -kInf, M, {{qbmx, 1.0}, {qhat_lag, -1.0}, {rbar, M}});
        tie_hi.big_m_col = rbar;
        tie_hi.big_m_value = M;
        tie_hi.deact_hi = 0;
        auto& tie_lo = b.add_row("SUPL_" + L.id + step_suffix(s), RowFamily::SupplyTie,
                                 -M, kInf, {{qbmx, 1.0}, {qhat_lag, -1.0}, {rbar, -M}});
        tie_lo.big_m_col = rbar;
        tie_lo.big_m_value = M;
        tie_lo.deact_lo = 0;
      }
    }
    for (int s = L.forward_offset; s < N; ++s) {
      const int qhmx = b.m.col(Var::QHatMax, li, s);
      const int rhat = b.m.col(Var::RHat, li, s);
      const int qbar_lag = b.m.col(Var::QBar, li, s - L.forward_offset);
      auto& cap_row = b.add_row("DEMC_" + L.id + step_suffix(s), RowFamily::DemandCap,
                                L.cap - M, kInf, {{qhmx, 1.0}, {rhat, -M}});
      cap_row.big_m_col = rhat;
      cap_row.big_m_value = M;
      cap_row.deact_lo = 0;
      auto& tie_hi = b.add_row("DEMU_" + L.id + step_suffix(s), RowFamily::DemandTie,
                               -kInf, 0, {{qhmx, 1.0}, {qbar_lag, -1.0}, {rhat, -M}});
      tie_hi.big_m_col = rhat;
      tie_hi.big_m_value = M;
      tie_hi.deact_hi = 1;
      auto& tie_lo = b.add_row("DEML_" + L.id + step_suffix(s), RowFamily::DemandTie,
                               0, kInf, {{qhmx, 1.0}, {qbar_lag, -1.0}, {rhat, M}});
      tie_lo.big_m_col = rhat;
      tie_lo.big_m_value = M;
      tie_lo.deact_lo = 1;
    }
  }
}

void build_junction_rows(Builder& b) {
  const int N = b.grid.n_steps;
  for (int j = 0; j < static_cast<int>(b.m.junctions.size()); ++j) {
    const auto& J = b.m.junctions[j];
    const std::string jid = J.id;
    for (int slot = 0; slot < 2; ++slot) {
      const int in_li = J.in_links[slot];
      const double Mg = b.m_flow(in_li);
      const double Mm = b.m_min(j, slot);
      const std::string tag = jid + "_S" + std::to_string(slot);
      for (int s = 0; s < N; ++s) {
        const int qhat = b.m.col(Var::QHat, in_li, s);
        const int u = b.m.col(Var::U, j, s, slot);
        const int zeta = b.m.col(Var::Zeta, j, s, slot);
        const int beta = b.m.col(Var::Beta, j, s, slot);
        const int xi = b.m.col(Var::Xi, j, s, slot);
        const int eta = b.m.col(Var::Eta, j, s, slot);
        const int qhmx = b.m.col(Var::QHatMax, in_li, s);

        auto& gate = b.add_row("GATE_" + tag + step_suffix(s), RowFamily::Gate,
                               -kInf, 0, {{qhat, 1.0}, {u, -Mg}});
        gate.big_m_col = u;
        gate.big_m_value = Mg;
        gate.deact_hi = 1;
        b.add_row("GTU_" + tag + step_suffix(s), RowFamily::GateTie, -kInf, 0,
                  {{qhat, 1.0}, {zeta, -1.0}});
        auto& gtl = b.add_row("GTL_" + tag + step_suffix(s), RowFamily::GateTie, -Mg, kInf,
                              {{qhat, 1.0}, {zeta, -1.0}, {u, -Mg}});
        gtl.big_m_col = u;
        gtl.big_m_value = Mg;
        gtl.deact_lo = 0;

        // beta = min over the positive-share supply ratios
        const bool a0 = J.alpha[slot][0] > 0, a1 = J.alpha[slot][1] > 0;
        if (a0 && a1) {
          for (int o = 0; o < 2; ++o) {
            const double inv = 1.0 / J.alpha[slot][o];
            const int qbmx = b.m.col(Var::QBarMax, J.out_links[o], s);
            b.add_row("MBU" + std::to_string(o) + "_" + tag + step_suffix(s),
                      RowFamily::MinBeta, -kInf, 0, {{beta, 1.0}, {qbmx, -inv}});
            // o == 0 is selected by xi = 0, o == 1 by xi = 1
            const double xi_coef = (o == 0) ? Mm : -Mm;
            const double lo = (o == 0) ? 0.0 : -Mm;
            auto& r = b.add_row("MBL" + std::to_string(o) + "_" + tag + step_suffix(s),
                                RowFamily::MinBeta, lo, kInf,
                                {{beta, 1.0}, {qbmx, -inv}, {xi, xi_coef}});
            r.big_m_col = xi;
            r.big_m_value = Mm;
            r.deact_lo = (o == 0) ? 1 : 0;
          }
        } else {
          // one share is zero: beta simply equals the surviving ratio
          const int o = a0 ? 0 : 1;
          const double inv = 1.0 / J.alpha[slot][o];
          const int qbmx = b.m.col(Var::QBarMax, J.out_links[o], s);
          b.add_row("MBE_" + tag + step_suffix(s), RowFamily::MinBeta, 0, 0,
                    {{beta, 1.0}, {qbmx, -inv}});
        }

        // zeta = min(demand cap, beta)
        b.add_row("MZU0_" + tag + step_suffix(s), RowFamily::MinZeta, -kInf, 0,
                  {{zeta, 1.0}, {qhmx, -1.0}});
        b.add_row("MZU1_" + tag + step_suffix(s), RowFamily::MinZeta, -kInf, 0,
                  {{zeta, 1.0}, {beta, -1.0}});
        auto& z0 = b.add_row("MZL0_" + tag + step_suffix(s), RowFamily::MinZeta, 0, kInf,
                             {{zeta, 1.0}, {qhmx, -1.0}, {eta, Mm}});
        z0.big_m_col = eta;
        z0.big_m_value = Mm;
        z0.deact_lo = 1;
        auto& z1 = b.add_row("MZL1_" + tag + step_suffix(s), RowFamily::MinZeta, -Mm, kInf,
                             {{zeta, 1.0}, {beta, -1.0}, {eta, -Mm}});
        z1.big_m_col = eta;
        z1.big_m_value = Mm;
        z1.deact_lo = 0;
      }
    }
    for (int s = 0; s < N; ++s) {
      for (int o = 0; o < 2; ++o) {
        std::vector<std::pair<int, double>> terms{
            {b.m.col(Var::QBar, J.out_links[o], s), 1.0}};
        for (int slot = 0; slot < 2; ++slot) {
          if (J.alpha[slot][o] != 0.0)
            terms.emplace_back(b.m.col(Var::QHat, J.in_links[slot], s), -J.alpha[slot][o]);
        }
        b.add_row("TURN" + std::to_string(o) + "_" + jid + step_suffix(s),
                  RowFamily::Turning, 0, 0, std::move(terms));
      }
      b.add_row("EXCL_" + jid + step_suffix(s), RowFamily::Exclusive, 1, 1,
                {{b.m.col(Var::U, j, s, 0), 1.0}, {b.m.col(Var::U, j, s, 1), 1.0}});
    }
  }
}

void build_physical_rows(Builder& b) {
  const int N = b.grid.n_steps;
  for (int li = 0; li < static_cast<int>(b.m.links.size()); ++li) {
    const auto& L = b.m.links[li];
    if (L.terminal) {
      for (int s = 0; s < N; ++s) {
        b.add_row("SINK_" + L.id + step_suffix(s), RowFamily::SinkTie, 0, 0,
                  {{b.m.col(Var::QHat, li, s), 1.0}, {b.m.col(Var::QHatMax, li, s), -1.0}});
      }
    }
    // vehicles cannot leave earlier than a free-flow traversal permits
    for (int jj = 1; jj <= N; ++jj) {
      std::vector<std::pair<int, double>> terms;
      b.append_cumulative(terms, Var::QBar, li, jj - L.forward_offset, +1);
      b.append_cumulative(terms, Var::QHat, li, jj, -1);
      b.add_row("TRAN_" + L.id + step_suffix(jj), RowFamily::TransitLower, 0, kInf,
                std::move(terms));
    }
    // and cannot pack beyond jam storage
    for (int jj = L.backward_offset; jj <= N; ++jj) {
      std::vector<std::pair<int, double>> terms;
      b.append_cumulative(terms, Var::QBar, li, jj, +1);
      b.append_cumulative(terms, Var::QHat, li, jj - L.backward_offset, -1);
      b.add_row("STOR_" + L.id + step_suffix(jj), RowFamily::StorageCap, -kInf,
                L.jam_storage, std::move(terms));
    }
  }
}

void build_min_green_rows(Builder& b) {
  const int g = b.m.options.min_green_steps;
  if (g < 2) return;
  const int N = b.grid.n_steps;
  for (int j = 0; j < static_cast<int>(b.m.junctions.size()); ++j) {
    for (int slot = 0; slot < 2; ++slot) {
      const std::string tag = b.m.junctions[j].id + "_S" + std::to_string(slot);
      for (int s = 1; s < N; ++s) {
        for (int k = 1; k <= std::min(g - 1, N - 1 - s); ++k) {
          // a switch to green at s must persist through s + k
          b.add_row("MGRN_" + tag + step_suffix(s) + "_K" + std::to_string(k),
                    RowFamily::MinGreen, -kInf, 0,
                    {{b.m.col(Var::U, j, s, slot), 1.0},
                     {b.m.col(Var::U, j, s - 1, slot), -1.0},
                     {b.m.col(Var::U, j, s + k, slot), -1.0}});
        }
      }
    }
  }
}

void build_objective(Builder& b) {
  const int N = b.grid.n_steps;
  switch (b.m.options.objective) {
    case ObjectiveKind::TimeWeightedThroughput:
      for (int li = 0; li < static_cast<int>(b.m.links.size()); ++li) {
        if (!b.m.links[li].terminal) continue;
        for (int s = 0; s < N; ++s)
          b.m.cols[b.m.col(Var::QHat, li, s)].objective = b.grid.dt_hours * (N - s);
      }
      break;
    case ObjectiveKind::Throughput:
      for (int li = 0; li < static_cast<int>(b.m.links.size()); ++li) {
        if (!b.m.links[li].terminal) continue;
        for (int s = 0; s < N; ++s)
          b.m.cols[b.m.col(Var::QHat, li, s)].objective = b.grid.dt_hours;
      }
      break;
    case ObjectiveKind::SoftBoundedShock:
      // slack columns carry weight -1; they are attached by the soft rows
      break;
  }
}

struct PartialOffsets {
  int forward = 0;
  int backward = 0;
};

PartialOffsets shock_offsets(const ModelLinkInfo& L, double dt, double c_miles) {
  const Rational c = Rational::from_decimal(c_miles);
  const Rational len = Rational::from_decimal(L.length);
  const Rational k = Rational::from_decimal(L.free_speed);
  const Rational w = Rational::from_decimal(L.wave_speed);
  const Rational rdt = Rational::from_decimal(dt);
  const Rational fwd = c / (k * rdt);
  const Rational bwd = (len - c) / (w * rdt);
  if (!fwd.is_integer() || fwd.num <= 0 || !bwd.is_integer() || bwd.num <= 0)
    throw ConfigError("link " + L.id + ": shock bound at c = " + fmt9(c_miles) +
                      " needs (c-a)/(k dt) = " + fwd.str() + " and (b-c)/(w dt) = " +
                      bwd.str() + " to be positive integers");
  return {static_cast<int>(fwd.num), static_cast<int>(bwd.num)};
}

void append_shock_rows(MilpModel& m, int li, double c_miles, bool soft) {
  const ModelLinkInfo& L = m.links[li];
  if (!(c_miles > 0) || !(c_miles < L.length))
    throw ConfigError("link " + L.id + ": shock bound position must satisfy a < c < b");
  const auto po = shock_offsets(L, m.dt_hours, c_miles);
  const double storage = L.jam_density * (L.length - c_miles);
  const int N = m.n_steps;
  const int start = std::max(po.forward, po.backward);
  for (int jj = start; jj <= N; ++jj) {
    std::vector<std::pair<int, double>> terms;
    for (int s = 0; s < jj - po.forward; ++s)
      terms.emplace_back(m.col(Var::QBar, li, s), m.dt_hours);
    for (int s = 0; s < jj - po.backward; ++s)
      terms.emplace_back(m.col(Var::QHat, li, s), -m.dt_hours);
    if (soft) {
      const int slack = m.registry.add({Var::ShockSlack, li, -1, jj});
      m.cols.push_back({0, L.jam_storage + L.cap * m.dt_hours * N, false, -1.0});
      terms.emplace_back(slack, -1.0);
    }
    m.rows.push_back({"SHCK_" + L.id + step_suffix(jj), RowFamily::BoundedShock, -kInf,
                      storage, std::move(terms), -1, 0, -1, -1});
  }
}

}  // namespace

void add_bounded_shock(MilpModel& model, const std::string& link_id, double c_miles) {
  for (int li = 0; li < static_cast<int>(model.links.size()); ++li) {
    if (model.links[li].id == link_id) {
      append_shock_rows(model, li, c_miles, false);
      return;
    }
  }
  throw ConfigError("shock bound references undefined link " + link_id);
}

MilpModel build_model(const Network& net, const TimeGrid& grid, const MilpOptions& opt) {
  const auto rep = validate_network(net, grid);
  if (!rep.ok()) throw ConfigError("invalid network: " + rep.to_string());
  for (const auto& p : net.inflows)
    if (p.values.empty())
      throw ConfigError("link " + p.link + ": randomized inflow profile was never materialized");

  MilpModel m;
  m.n_steps = grid.n_steps;
  m.dt_hours = grid.dt_hours;
  m.eps_veh = opt.eps_veh;
  m.options = opt;

  const auto inc = build_incidence(net);
  for (size_t li = 0; li < net.links.size(); ++li) {
    const auto& l = net.links[li];
    const auto off = offsets(l, grid);
    m.links.push_back({l.id, off.forward, off.backward, capacity(l.fd),
                       l.jam_storage_veh(), l.length_miles, l.fd.free_speed_mph,
                       l.fd.wave_speed_mph, l.fd.jam_density_vpm, inc[li].terminal(),
                       net.inflow_for(l.id) != nullptr});
  }
  for (const auto& j : net.junctions) {
    ModelJunctionInfo ji;
    ji.id = j.id;
    for (int s = 0; s < 2; ++s) {
      ji.in_links[s] = net.link_index(j.incoming[s]);
      ji.out_links[s] = net.link_index(j.outgoing[s]);
    }
    ji.alpha = j.alpha;
    m.junctions.push_back(ji);
  }

  Builder b{m, net, grid, inc};
  build_columns(b);
  build_regime_rows(b);
  build_cap_rows(b);
  build_junction_rows(b);
  build_physical_rows(b);
  build_min_green_rows(b);
  build_objective(b);

  const bool soft = opt.objective == ObjectiveKind::SoftBoundedShock;
  for (const auto& spec : opt.bounded_shock) {
    const int li = [&] {
      for (int i = 0; i < static_cast<int>(m.links.size()); ++i)
        if (m.links[i].id == spec.link) return i;
      throw ConfigError("shock bound references undefined link " + spec.link);
    }();
    append_shock_rows(m, li, spec.c_miles, soft);
  }
  return m;
}

double row_activity(const MilpRow& row, const std::vector<double>& x) {
  double a = 0;
  for (const auto& [c, v] : row.terms) a += v * x[c];
  return a;
}

std::optional<RowViolation> check_rows(const MilpModel& model, const std::vector<double>& x,
                                       double tol) {
  std::optional<RowViolation> worst;
  for (int r = 0; r < static_cast<int>(model.rows.size()); ++r) {
    const auto& row = model.rows[r];
    const double a = row_activity(row, x);
    double v = 0;
    if (std::isfinite(row.lo)) v = std::max(v, row.lo - a);
    if (std::isfinite(row.hi)) v = std::max(v, a - row.hi);
    const double scale = std::max({1.0, std::isfinite(row.lo) ? std::fabs(row.lo) : 0.0,
                                   std::isfinite(row.hi) ? std::fabs(row.hi) : 0.0});
    if (v > tol * scale && (!worst || v > worst->amount)) worst = RowViolation{r, v};
  }
  return worst;
}

SignalPlan extract_signal_plan(const MilpModel& model, const std::vector<double>& x,
                               double int_tol) {
  SignalPlan plan;
  plan.green_slot.resize(model.junctions.size());
  for (int j = 0; j < static_cast<int>(model.junctions.size()); ++j) {
    plan.green_slot[j].resize(model.n_steps);
    for (int s = 0; s < model.n_steps; ++s) {
      const double u0 = x[model.col(Var::U, j, s, 0)];
      const double u1 = x[model.col(Var::U, j, s, 1)];
      if (std::fabs(u0 - std::round(u0)) > int_tol || std::fabs(u1 - std::round(u1)) > int_tol)
        throw SolveError("junction " + model.junctions[j].id + " step " + std::to_string(s) +
                         ": signal indicator is fractional (" + fmt9(u0) + ", " + fmt9(u1) + ")");
      if (std::fabs(u0 + u1 - 1.0) > 2 * int_tol)
        throw SolveError("junction " + model.junctions[j].id + " step " + std::to_string(s) +
                         ": exactly one slot must be green");
      plan.green_slot[j][s] = u0 > 0.5 ? 0 : 1;
    }
  }
  return plan;
}

Trajectory extract_flows(const MilpModel& model, const std::vector<double>& x) {
  Trajectory traj;
  traj.n_steps = model.n_steps;
  traj.dt_hours = model.dt_hours;
  traj.links.resize(model.links.size());
  for (int li = 0; li < static_cast<int>(model.links.size()); ++li) {
    const auto& L = model.links[li];
    auto& ls = traj.links[li];
    const int N = model.n_steps;
    ls.q_in.resize(N);
    ls.q_out.resize(N);
    ls.regime_in.resize(N);
    ls.regime_out.resize(N);
    ls.supply_cap.resize(N);
    ls.demand_cap.resize(N);
    ls.n_up.assign(N + 1, 0.0);
    ls.n_down.assign(N + 1, 0.0);
    for (int s = 0; s < N; ++s) {
      ls.q_in[s] = x[model.col(Var::QBar, li, s)];
      ls.q_out[s] = x[model.col(Var::QHat, li, s)];
      ls.regime_in[s] = x[model.col(Var::RBar, li, s)] > 0.5 ? 1 : 0;
      ls.regime_out[s] = x[model.col(Var::RHat, li, s)] > 0.5 ? 1 : 0;
      ls.demand_cap[s] = x[model.col(Var::QHatMax, li, s)];
      const int qbmx = model.col(Var::QBarMax, li, s);
      if (qbmx >= 0) {
        ls.supply_cap[s] = x[qbmx];
      } else {
        const int sb = s - L.backward_offset;
        const double q_out_lag = sb >= 0 ? ls.q_out[sb] : 0.0;
        ls.supply_cap[s] = ls.regime_in[s] ? q_out_lag : L.cap;
      }
      ls.n_up[s + 1] = ls.n_up[s] + model.dt_hours * ls.q_in[s];
      ls.n_down[s + 1] = ls.n_down[s] + model.dt_hours * ls.q_out[s];
    }
  }
  return traj;
}

std::map<RowFamily, int> count_rows_by_family(const MilpModel& model) {
  std::map<RowFamily, int> out;
  for (const auto& r : model.rows) ++out[r.family];
  return out;
}

std::map<RowFamily, int> expected_row_counts(const Network& net, const TimeGrid& grid,
                                             const MilpOptions& opt) {
  std::map<RowFamily, int> out;
  const int N = grid.n_steps;
  const auto inc = build_incidence(net);
  for (size_t li = 0; li < net.links.size(); ++li) {
    const auto off = offsets(net.links[li], grid);
    out[RowFamily::RegimeUp] += std::max(0, N - off.backward);
    out[RowFamily::RegimeDown] += std::max(0, N - off.forward);
    out[RowFamily::DemandCap] += std::max(0, N - off.forward);
    out[RowFamily::DemandTie] += 2 * std::max(0, N - off.forward);
    if (inc[li].up_junction >= 0) {
      out[RowFamily::SupplyCap] += std::max(0, N - off.backward);
      out[RowFamily::SupplyTie] += 2 * std::max(0, N - off.backward);
    }
    if (inc[li].terminal()) out[RowFamily::SinkTie] += N;
    out[RowFamily::TransitLower] += N;
    out[RowFamily::StorageCap] += std::max(0, N + 1 - off.backward);
  }
  for (const auto& j : net.junctions) {
    out[RowFamily::Gate] += 2 * N;
    out[RowFamily::GateTie] += 4 * N;
    out[RowFamily::MinZeta] += 8 * N;
    for (int slot = 0; slot < 2; ++slot) {
      const bool a0 = j.alpha[slot][0] > 0, a1 = j.alpha[slot][1] > 0;
      out[RowFamily::MinBeta] += (a0 && a1 ? 4 : 1) * N;
    }
    out[RowFamily::Turning] += 2 * N;
    out[RowFamily::Exclusive] += N;
  }
  if (opt.min_green_steps >= 2) {
    int per_slot = 0;
    for (int s = 1; s < N; ++s) per_slot += std::min(opt.min_green_steps - 1, N - 1 - s);
    out[RowFamily::MinGreen] += per_slot * 2 * static_cast<int>(net.junctions.size());
  }
  for (const auto& spec : opt.bounded_shock) {
    const int li = net.link_index(spec.link);
    if (li < 0) continue;
    ModelLinkInfo L{spec.link, 0, 0, 0, 0, net.links[li].length_miles,
                    net.links[li].fd.free_speed_mph, net.links[li].fd.wave_speed_mph,
                    net.links[li].fd.jam_density_vpm, false, false};
    const auto po = shock_offsets(L, grid.dt_hours, spec.c_miles);
    out[RowFamily::BoundedShock] += std::max(0, N + 1 - std::max(po.forward, po.backward));
  }
  return out;
}

int count_binary_columns(const MilpModel& model) {
  int n = 0;
  for (const auto& c : model.cols) n += c.binary ? 1 : 0;
  return n;
}

bool audit_exact_min(const MilpModel& model, const std::vector<double>& x, double tol,
                     std::string* detail) {
  for (int j = 0; j < static_cast<int>(model.junctions.size()); ++j) {
    const auto& J = model.junctions[j];
    for (int s = 0; s < model.n_steps; ++s) {
      for (int slot = 0; slot < 2; ++slot) {
        if (x[model.col(Var::U, j, s, slot)] < 0.5) continue;  // red slot: q_hat = 0
        double expected = x[model.col(Var::QHatMax, J.in_links[slot], s)];
        for (int o = 0; o < 2; ++o) {
          const double a = J.alpha[slot][o];
          if (a > 0)
            expected = std::min(expected, x[model.col(Var::QBarMax, J.out_links[o], s)] / a);
        }
        const double got = x[model.col(Var::QHat, J.in_links[slot], s)];
        if (std::fabs(got - expected) > tol) {
          if (detail)
            *detail = "junction " + J.id + " slot " + std::to_string(slot) + " step " +
                      std::to_string(s) + ": discharge " + fmt9(got) +
                      " != min of caps " + fmt9(expected);
          return false;
        }
      }
    }
  }
  return true;
}

bool audit_big_m(const MilpModel& model, const std::vector<double>& x, std::string* detail) {
  for (int r = 0; r < static_cast<int>(model.rows.size()); ++r) {
    const auto& row = model.rows[r];
    if (row.big_m_col < 0) continue;
    // static sufficiency: with the binary at its padding value, the side must
    // hold for every assignment inside the column boxes
    double min_phys = 0, max_phys = 0, bin_coef = 0;
    for (const auto& [c, v] : row.terms) {
      if (c == row.big_m_col) {
        bin_coef = v;
        continue;
      }
      const auto& col = model.cols[c];
      min_phys += v * (v >= 0 ? col.lo : col.hi);
      max_phys += v * (v >= 0 ? col.hi : col.lo);
    }
    const double pad_tol = 1e-6 * std::max(1.0, row.big_m_value);
    if (row.deact_lo >= 0 && std::isfinite(row.lo)) {
      if (min_phys + bin_coef * row.deact_lo < row.lo - pad_tol) {
        if (detail)
          *detail = "row " + row.name + ": big-M " + fmt9(row.big_m_value) +
                    " cannot relax the lower side";
        return false;
      }
    }
    if (row.deact_hi >= 0 && std::isfinite(row.hi)) {
      if (max_phys + bin_coef * row.deact_hi > row.hi + pad_tol) {
        if (detail)
          *detail = "row " + row.name + ": big-M " + fmt9(row.big_m_value) +
                    " cannot relax the upper side";
        return false;
      }
    }
    // regime rows: with the given solution the padded side must stay clear
    if (row.family == RowFamily::RegimeUp || row.family == RowFamily::RegimeDown) {
      const double a = row_activity(row, x);
      const int bin = x[row.big_m_col] > 0.5 ? 1 : 0;
      const double margin = 0.01 * row.big_m_value;
      if (bin == row.deact_lo && std::isfinite(row.lo) && a - row.lo < margin) {
        if (detail) *detail = "row " + row.name + ": padded lower side nearly binding";
        return false;
      }
      if (bin == row.deact_hi && std::isfinite(row.hi) && row.hi - a < margin) {
        if (detail) *detail = "row " + row.name + ": padded upper side nearly binding";
        return false;
      }
    }
  }
  return true;
}

std::vector<double> assignment_from_trajectory(const MilpModel& model, const Trajectory& traj,
                                               const SignalPlan& plan) {
  std::vector<double> x(model.cols.size(), 0.0);
  const int N = model.n_steps;
  // The max-flow columns must carry the pure regime-branch values the tie rows
  // force; the trajectory's boundary caps may sit below them at steps where an
  // availability clamp was active.
  const auto branch_demand = [&](int li, int s) {
    const auto& L = model.links[li];
    if (traj.links[li].regime_out[s]) return L.cap;
    const int sf = s - L.forward_offset;
    return sf >= 0 ? traj.links[li].q_in[sf] : 0.0;
  };
  const auto branch_supply = [&](int li, int s) {
    const auto& L = model.links[li];
    if (!traj.links[li].regime_in[s]) return L.cap;
    const int sb = s - L.backward_offset;
    return sb >= 0 ? traj.links[li].q_out[sb] : 0.0;
  };
  for (int li = 0; li < static_cast<int>(model.links.size()); ++li) {
    const auto& ls = traj.links[li];
    for (int s = 0; s < N; ++s) {
      x[model.col(Var::QBar, li, s)] = ls.q_in[s];
      x[model.col(Var::QHat, li, s)] = ls.q_out[s];
      x[model.col(Var::RBar, li, s)] = ls.regime_in[s];
      x[model.col(Var::RHat, li, s)] = ls.regime_out[s];
      x[model.col(Var::QHatMax, li, s)] = branch_demand(li, s);
      const int qbmx = model.col(Var::QBarMax, li, s);
      if (qbmx >= 0) x[qbmx] = branch_supply(li, s);
    }
  }
  for (int j = 0; j < static_cast<int>(model.junctions.size()); ++j) {
    const auto& J = model.junctions[j];
    for (int s = 0; s < N; ++s) {
      const int g = plan.green_slot[j][s];
      x[model.col(Var::U, j, s, 0)] = g == 0 ? 1.0 : 0.0;
      x[model.col(Var::U, j, s, 1)] = g == 1 ? 1.0 : 0.0;
      for (int slot = 0; slot < 2; ++slot) {
        const bool a0 = J.alpha[slot][0] > 0, a1 = J.alpha[slot][1] > 0;
        double ratio[2] = {kInf, kInf};
        for (int o = 0; o < 2; ++o) {
          if (J.alpha[slot][o] > 0)
            ratio[o] = branch_supply(J.out_links[o], s) / J.alpha[slot][o];
        }
        double beta, xi;
        if (a0 && a1) {
          xi = ratio[0] <= ratio[1] ? 0.0 : 1.0;
          beta = std::min(ratio[0], ratio[1]);
        } else {
          xi = model.cols[model.col(Var::Xi, j, s, slot)].lo;  // fixed selector
          beta = a0 ? ratio[0] : ratio[1];
        }
        const double dem = branch_demand(J.in_links[slot], s);
        const double eta = dem <= beta ? 0.0 : 1.0;
        x[model.col(Var::Beta, j, s, slot)] = beta;
        x[model.col(Var::Xi, j, s, slot)] = xi;
        x[model.col(Var::Eta, j, s, slot)] = eta;
        x[model.col(Var::Zeta, j, s, slot)] = std::min(dem, beta);
      }
    }
  }
  // soft shock slacks absorb whatever the storage bound cannot
  for (const auto& row : model.rows) {
    if (row.family != RowFamily::BoundedShock) continue;
    int slack_col = -1;
    double partial = 0;
    for (const auto& [c, v] : row.terms) {
      if (model.registry.tag(c).kind == Var::ShockSlack) slack_col = c;
      else partial += v * x[c];
    }
    if (slack_col >= 0) x[slack_col] = std::max(0.0, partial - row.hi);
  }
  return x;
}

double objective_of(const MilpModel& model, const Trajectory& traj, const SignalPlan& plan) {
  const auto x = assignment_from_trajectory(model, traj, plan);
  double obj = 0;
  for (size_t c = 0; c < x.size(); ++c) obj += model.cols[c].objective * x[c];
  return obj;
}

}  // namespace linkwave
