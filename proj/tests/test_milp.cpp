#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "doctest.h"
#include "linkwave/common.hpp"
#include "linkwave/kinematics.hpp"
#include "linkwave/milp.hpp"
#include "linkwave/network.hpp"
#include "support/fixture.hpp"

using namespace linkwave;
using namespace linkwave::testfix;

namespace {

const MilpRow& row_by_name(const MilpModel& m, const std::string& name) {
  for (const auto& r : m.rows)
    if (r.name == name) return r;
  FAIL("no row named ", name);
  static MilpRow dummy;
  return dummy;
}

bool has_row(const MilpModel& m, const std::string& name) {
  for (const auto& r : m.rows)
    if (r.name == name) return true;
  return false;
}

}  // namespace

TEST_CASE("fixture model census: columns, binaries, and per-family row counts") {
  const Network net = two_junction_network();
  const MilpModel m = build_model(net, std_grid(), MilpOptions{});

  // 7 links x 20 steps of QBar/QHat/RBar/RHat/QHatMax, QBarMax on the four
  // junction-fed links, and five junction families of 2 junctions x 2 slots.
  CHECK(m.registry.size() == 1180);
  CHECK(static_cast<int>(m.cols.size()) == 1180);
  CHECK(count_binary_columns(m) == 520);

  const auto census = count_rows_by_family(m);
  // Independent arithmetic: offsets are 2 forward / 6 backward on every link.
  CHECK(census.at(RowFamily::RegimeUp) == 7 * 14);
  CHECK(census.at(RowFamily::RegimeDown) == 7 * 18);
  CHECK(census.at(RowFamily::SupplyCap) == 4 * 14);
  CHECK(census.at(RowFamily::SupplyTie) == 2 * 4 * 14);
  CHECK(census.at(RowFamily::DemandCap) == 7 * 18);
  CHECK(census.at(RowFamily::DemandTie) == 2 * 7 * 18);
  CHECK(census.at(RowFamily::Gate) == 4 * 20);
  CHECK(census.at(RowFamily::GateTie) == 2 * 4 * 20);
  CHECK(census.at(RowFamily::MinBeta) == 4 * 4 * 20);
  CHECK(census.at(RowFamily::MinZeta) == 4 * 4 * 20);
  CHECK(census.at(RowFamily::Turning) == 4 * 20);
  CHECK(census.at(RowFamily::Exclusive) == 2 * 20);
  CHECK(census.at(RowFamily::SinkTie) == 3 * 20);
  CHECK(census.at(RowFamily::TransitLower) == 7 * 20);
  CHECK(census.at(RowFamily::StorageCap) == 7 * 15);
  CHECK(static_cast<int>(m.rows.size()) == 2075);
  CHECK(census == expected_row_counts(net, std_grid(), MilpOptions{}));
}

TEST_CASE("column bounds encode the lag fixings and the source inflows") {
  const Network net = two_junction_network();
  const MilpModel m = build_model(net, std_grid(), MilpOptions{});

  for (int li = 0; li < 7; ++li) {
    for (int s = 0; s < 6; ++s) {
      const auto& rb = m.cols[m.col(Var::RBar, li, s)];
      CHECK(rb.lo == 0);
      CHECK(rb.hi == 0);
    }
    for (int s = 0; s < 2; ++s) {
      const auto& rh = m.cols[m.col(Var::RHat, li, s)];
      CHECK(rh.lo == 0);
      CHECK(rh.hi == 0);
      const auto& qm = m.cols[m.col(Var::QHatMax, li, s)];
      CHECK(qm.lo == 0);
      CHECK(qm.hi == 0);
    }
    CHECK(m.cols[m.col(Var::RBar, li, 6)].hi == 1);
    CHECK(m.cols[m.col(Var::RHat, li, 2)].hi == 1);
  }

  // Junction-fed entrance caps are pinned to capacity before the first
  // backward wave can arrive.
  const int i5 = net.link_index("I5");
  for (int s = 0; s < 6; ++s) {
    const auto& c = m.cols[m.col(Var::QBarMax, i5, s)];
    CHECK(c.lo == doctest::Approx(3000.0));
    CHECK(c.hi == doctest::Approx(3000.0));
  }
  CHECK(m.cols[m.col(Var::QBarMax, i5, 6)].lo == 0);

  // Source entrances replay the exogenous inflow exactly.
  const auto& i1_flow = fixture_inflow("I1");
  const int i1 = net.link_index("I1");
  for (int s = 0; s < 20; ++s) {
    const auto& c = m.cols[m.col(Var::QBar, i1, s)];
    CHECK(c.lo == doctest::Approx(i1_flow[s]));
    CHECK(c.hi == doctest::Approx(i1_flow[s]));
  }

  // Source links have no QBarMax column at all.
  CHECK(m.col(Var::QBarMax, i1, 10) == -1);
}

TEST_CASE("representative rows carry the documented shape and big-M values") {
  const Network net = two_junction_network();
  const MilpModel m = build_model(net, std_grid(), MilpOptions{});
  const double M_regime = 120.0 + 3000.0 * 0.1;  // storage + capacity * horizon

  const auto& rup = row_by_name(m, "RUP_I1_T06");
  CHECK(rup.lo == doctest::Approx(1e-4 - 120.0));
  CHECK(rup.hi == doctest::Approx(M_regime - 120.0));
  CHECK(rup.big_m_value == doctest::Approx(M_regime));

  const auto& gate = row_by_name(m, "GATE_J1_S0_T05");
  CHECK(gate.hi == 0);
  CHECK(gate.big_m_value == doctest::Approx(3000.0));
  REQUIRE(gate.terms.size() == 2);
  CHECK(gate.terms[1].second == doctest::Approx(-3000.0));

  // min big-M covers the worst supply ratio: C / 0.5.
  const auto& mzl = row_by_name(m, "MZL0_J1_S0_T05");
  CHECK(mzl.big_m_value == doctest::Approx(6000.0));

  const auto& excl = row_by_name(m, "EXCL_J1_T00");
  CHECK(excl.lo == 1);
  CHECK(excl.hi == 1);

  // Transit rows: N_down(j) - N_up(j - 2) <= 0 with dt coefficients.
  const auto& tran = row_by_name(m, "TRAN_I1_T03");
  CHECK(tran.lo == 0);  // stored as N_up(j-2) - N_down(j) >= 0 or mirrored
  double coef_sum = 0;
  for (const auto& [c, v] : tran.terms) coef_sum += std::abs(v);
  CHECK(coef_sum == doctest::Approx(0.005 * (3 + 1)));

  // Storage rows exist only once the backward offset is reachable.
  CHECK_FALSE(has_row(m, "STOR_I1_T05"));
  CHECK(has_row(m, "STOR_I1_T06"));
  const auto& stor = row_by_name(m, "STOR_I1_T06");
  CHECK(stor.hi == doctest::Approx(120.0));
}

TEST_CASE("objective kinds weight the terminal exit flows as documented") {
  const Network net = two_junction_network();
  const TimeGrid grid = std_grid();

  MilpOptions tw;  // default TimeWeightedThroughput
  const MilpModel m1 = build_model(net, grid, tw);
  const int i4 = net.link_index("I4");
  const int i1 = net.link_index("I1");
  CHECK(m1.cols[m1.col(Var::QHat, i4, 0)].objective == doctest::Approx(0.005 * 20));
  CHECK(m1.cols[m1.col(Var::QHat, i4, 19)].objective == doctest::Approx(0.005));
  CHECK(m1.cols[m1.col(Var::QHat, i1, 5)].objective == 0.0);

  MilpOptions plain;
  plain.objective = ObjectiveKind::Throughput;
  const MilpModel m2 = build_model(net, grid, plain);
  CHECK(m2.cols[m2.col(Var::QHat, i4, 0)].objective == doctest::Approx(0.005));
  CHECK(m2.cols[m2.col(Var::QHat, i4, 19)].objective == doctest::Approx(0.005));

  MilpOptions soft;
  soft.objective = ObjectiveKind::SoftBoundedShock;
  soft.bounded_shock.push_back({"I1", 0.15});
  const MilpModel m3 = build_model(net, grid, soft);
  int slack_cols = 0;
  for (int c = 0; c < m3.registry.size(); ++c) {
    if (m3.registry.tag(c).kind != Var::ShockSlack) continue;
    ++slack_cols;
    CHECK(m3.cols[c].objective == doctest::Approx(-1.0));
  }
  CHECK(slack_cols == 18);  // jj = 3..20 for offsets (1, 3)
}

TEST_CASE("bounded shock rows: position audit, counts, and lag structure") {
  const Network net = two_junction_network();
  MilpModel m = build_model(net, std_grid(), MilpOptions{});
  const std::size_t before = m.rows.size();

  add_bounded_shock(m, "I1", 0.15);
  CHECK(m.rows.size() == before + 18);
  const auto& first = row_by_name(m, "SHCK_I1_T03");
  CHECK(first.hi == doctest::Approx(60.0));  // 400 vpm * 0.15 mi
  // jj = 3 with forward lag 1 and backward lag 3: two entrance terms, none out.
  CHECK(first.terms.size() == 2);
  const auto& last = row_by_name(m, "SHCK_I1_T20");
  CHECK(last.terms.size() == 19 + 17);

  // Offsets (c-a)/(k dt) = 2/3 are rejected in exact arithmetic.
  CHECK_THROWS_WITH_AS(add_bounded_shock(m, "I1", 0.1), doctest::Contains("positive integers"),
                       ConfigError);
  CHECK_THROWS_AS(add_bounded_shock(m, "I1", 0.0), ConfigError);
  CHECK_THROWS_AS(add_bounded_shock(m, "nope", 0.15), ConfigError);
}

TEST_CASE("a zero turning share replaces the selector with an equality") {
  Network net = two_junction_network();
  net.junctions[0].alpha[0] = {1.0, 0.0};
  const MilpModel m = build_model(net, std_grid(), MilpOptions{});
  CHECK(has_row(m, "MBE_J1_S0_T04"));
  CHECK_FALSE(has_row(m, "MBL0_J1_S0_T04"));
  CHECK(has_row(m, "MBL0_J1_S1_T04"));
  const auto census = count_rows_by_family(m);
  CHECK(census.at(RowFamily::MinBeta) == (1 + 4 + 4 + 4) * 20);
  CHECK(census == expected_row_counts(net, std_grid(), MilpOptions{}));

  // The unused selector binary is fixed.
  const auto& xi = m.cols[m.col(Var::Xi, 0, 4, 0)];
  CHECK(xi.lo == xi.hi);
}

TEST_CASE("epsilon band and big-M overrides reach the rows") {
  const Network net = two_junction_network();
  MilpOptions opt;
  opt.eps_veh = 1e-3;
  opt.big_m_overrides["flow"] = 5000.0;
  opt.big_m_overrides["regime"] = 900.0;
  opt.big_m_overrides["min"] = 7000.0;
  const MilpModel m = build_model(net, std_grid(), opt);
  const auto& rup = row_by_name(m, "RUP_I1_T06");
  CHECK(rup.lo == doctest::Approx(1e-3 - 120.0));
  CHECK(rup.hi == doctest::Approx(900.0 - 120.0));
  CHECK(row_by_name(m, "GATE_J1_S0_T05").big_m_value == doctest::Approx(5000.0));
  CHECK(row_by_name(m, "MZL0_J1_S0_T05").big_m_value == doctest::Approx(7000.0));
}

TEST_CASE("minimum green rows appear only when requested") {
  const Network net = two_junction_network();
  MilpOptions opt;
  opt.min_green_steps = 3;
  const MilpModel m = build_model(net, std_grid(), opt);
  const auto census = count_rows_by_family(m);
  // per slot: s = 1..17 contribute 2 rows, s = 18 contributes 1, s = 19 none
  CHECK(census.at(RowFamily::MinGreen) == 4 * (17 * 2 + 1));
  CHECK(census == expected_row_counts(net, std_grid(), opt));
  CHECK(count_rows_by_family(build_model(net, std_grid(), MilpOptions{}))
            .count(RowFamily::MinGreen) == 0);
}

TEST_CASE("model construction is deterministic") {
  const Network net = two_junction_network();
  const MilpModel a = build_model(net, std_grid(), MilpOptions{});
  const MilpModel b = build_model(net, std_grid(), MilpOptions{});
  REQUIRE(a.registry.size() == b.registry.size());
  REQUIRE(a.rows.size() == b.rows.size());
  std::string names_a, names_b;
  for (int c = 0; c < a.registry.size(); ++c) {
    names_a += a.col_name(c);
    names_b += b.col_name(c);
  }
  for (std::size_t r = 0; r < a.rows.size(); ++r) {
    names_a += a.rows[r].name;
    names_b += b.rows[r].name;
    CHECK(a.rows[r].terms == b.rows[r].terms);
  }
  CHECK(fnv1a64(names_a) == fnv1a64(names_b));
}

TEST_CASE("build_model rejects invalid input") {
  Network net = two_junction_network();
  CHECK_THROWS_AS(build_model(net, TimeGrid{0.004, 20}, MilpOptions{}), ConfigError);

  Network randomized = two_junction_network();
  randomized.inflows[0].values.clear();
  randomized.inflows[0].randomized = true;
  randomized.inflows[0].random_low = 100;
  randomized.inflows[0].random_high = 900;
  CHECK_THROWS_WITH_AS(build_model(randomized, std_grid(), MilpOptions{}),
                       doctest::Contains("materialized"), ConfigError);

  MilpOptions bad_shock;
  bad_shock.bounded_shock.push_back({"missing", 0.15});
  CHECK_THROWS_AS(build_model(two_junction_network(), std_grid(), bad_shock), ConfigError);
}

TEST_CASE("a simulated trajectory satisfies every model row") {
  const Network net = two_junction_network();
  const TimeGrid grid = std_grid();
  const MilpModel m = build_model(net, grid, MilpOptions{});
  const SignalPlan plan = alternating_plan(2, 20);
  const auto traj = simulate(net, grid, plan);
  const auto x = assignment_from_trajectory(m, traj, plan);
  REQUIRE(static_cast<int>(x.size()) == m.registry.size());

  const auto bad = check_rows(m, x, 1e-6);
  if (bad) {
    MESSAGE("violated ", m.rows[bad->row].name, " by ", bad->amount);
  }
  CHECK_FALSE(bad.has_value());

  // Binaries in the assignment are honest 0/1 values.
  for (int c = 0; c < m.registry.size(); ++c)
    if (m.cols[c].binary) CHECK(std::abs(x[c] - std::round(x[c])) <= 1e-9);

  std::string detail;
  const bool min_ok = audit_exact_min(m, x, 1e-6, &detail);
  if (!min_ok) MESSAGE(detail);
  CHECK(min_ok);
  const bool big_m_ok = audit_big_m(m, x, &detail);
  if (!big_m_ok) MESSAGE(detail);
  CHECK(big_m_ok);
}

TEST_CASE("extraction inverts the assignment") {
  const Network net = two_junction_network();
  const TimeGrid grid = std_grid();
  const MilpModel m = build_model(net, grid, MilpOptions{});
  const SignalPlan plan = alternating_plan(2, 20);
  const auto traj = simulate(net, grid, plan);
  const auto x = assignment_from_trajectory(m, traj, plan);

  const SignalPlan back = extract_signal_plan(m, x);
  REQUIRE(back.green_slot.size() == plan.green_slot.size());
  for (std::size_t j = 0; j < plan.green_slot.size(); ++j)
    CHECK(back.green_slot[j] == plan.green_slot[j]);

  const Trajectory flows = extract_flows(m, x);
  REQUIRE(flows.links.size() == traj.links.size());
  for (std::size_t li = 0; li < traj.links.size(); ++li) {
    for (int s = 0; s < 20; ++s) {
      CHECK(flows.links[li].q_in[s] == doctest::Approx(traj.links[li].q_in[s]));
      CHECK(flows.links[li].q_out[s] == doctest::Approx(traj.links[li].q_out[s]));
    }
    CHECK(flows.links[li].n_down[20] == doctest::Approx(traj.links[li].n_down[20]));
  }

  // objective_of agrees with the column weights applied to the assignment.
  double by_cols = 0;
  for (int c = 0; c < m.registry.size(); ++c) by_cols += m.cols[c].objective * x[c];
  CHECK(objective_of(m, traj, plan) == doctest::Approx(by_cols));
}

TEST_CASE("zero inflows admit the all-zero flow assignment") {
  Network net = two_junction_network();
  for (auto& prof : net.inflows) prof.values.assign(20, 0.0);
  const MilpModel m = build_model(net, std_grid(), MilpOptions{});
  const SignalPlan plan = alternating_plan(2, 20);
  const auto traj = simulate(net, std_grid(), plan);
  const auto x = assignment_from_trajectory(m, traj, plan);
  CHECK_FALSE(check_rows(m, x, 1e-7).has_value());
  CHECK(objective_of(m, traj, plan) == doctest::Approx(0.0));
}
