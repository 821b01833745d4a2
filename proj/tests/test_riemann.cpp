#include <array>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "linkwave/riemann.hpp"
#include "support/fixture.hpp"

using namespace linkwave;
using namespace linkwave::testfix;

namespace {

// Independent oracle: scan discharge levels on a 1 veh/h grid and keep the
// largest one every boundary can absorb. Demand/supply are restated inline
// so a bug in the library formulas cannot hide.
double brute_force_max_flow(double q_in, bool r_in, double cap_in,
                            const std::array<double, 2>& q_out,
                            const std::array<bool, 2>& r_out,
                            const std::array<double, 2>& alphas,
                            const std::array<double, 2>& caps_out) {
  const double send_limit = r_in ? cap_in : q_in;
  for (double q = std::floor(send_limit); q >= 0; q -= 1.0) {
    bool ok = true;
    for (int j = 0; j < 2 && ok; ++j) {
      if (alphas[j] <= 0) continue;
      const double absorb = r_out[j] ? q_out[j] : caps_out[j];
      if (alphas[j] * q > absorb + 1e-9) ok = false;
    }
    if (ok) return q;
  }
  return 0;
}

}  // namespace

TEST_CASE("phase state density covers both branches") {
  const FundamentalDiagram fd = std_fd();
  CHECK(density_of({1500, false}, fd) == doctest::Approx(50.0));
  CHECK(density_of({1500, true}, fd) == doctest::Approx(250.0));
  CHECK(density_of({3000, false}, fd) == doctest::Approx(100.0));
  CHECK(density_of({3000, true}, fd) == doctest::Approx(100.0));  // branches meet at C
  CHECK(density_of({0, true}, fd) == doctest::Approx(400.0));     // jammed
  CHECK_THROWS_AS(density_of({3200, false}, fd), std::domain_error);
}

TEST_CASE("demand and supply switch on the regime bit") {
  CHECK(demand({1200, false}, 3000) == doctest::Approx(1200));
  CHECK(demand({1200, true}, 3000) == doctest::Approx(3000));
  CHECK(supply({1200, false}, 3000) == doctest::Approx(3000));
  CHECK(supply({1200, true}, 3000) == doctest::Approx(1200));
}

TEST_CASE("junction resolution worked examples") {
  const double cap = 3000;
  const std::array<double, 2> alphas{0.5, 0.5};
  const std::array<double, 2> caps{cap, cap};

  // free inflow into empty links passes through untouched
  {
    const std::vector<PhaseState> outs{{0, false}, {0, false}};
    const auto res = solve_junction({1000, false}, cap, outs, alphas, caps);
    CHECK(res.q_hat_in == doctest::Approx(1000));
    CHECK(!res.r_hat_in);
    CHECK(res.q_bar_out[0] == doctest::Approx(500));
    CHECK(res.q_bar_out[1] == doctest::Approx(500));
    CHECK(!res.r_bar_out[0]);
    CHECK(!res.r_bar_out[1]);
  }

  // congested sender against one congested receiver: receiver limits
  {
    const std::vector<PhaseState> outs{{400, true}, {0, false}};
    const auto res = solve_junction({2000, true}, cap, outs, alphas, caps);
    CHECK(res.q_hat_in == doctest::Approx(800));  // min(3000, 400/0.5, 3000/0.5)
    CHECK(res.r_hat_in);
    CHECK(res.q_bar_out[0] == doctest::Approx(400));
    CHECK(res.r_bar_out[0]);    // still absorbing exactly its queue discharge
    CHECK(!res.r_bar_out[1]);
  }

  // zero-share receiver never binds
  {
    const std::vector<PhaseState> outs{{0, false}, {0, true}};  // second jammed solid
    const std::array<double, 2> one_way{1.0, 0.0};
    const auto res = solve_junction({2000, false}, cap, outs, one_way, caps);
    CHECK(res.q_hat_in == doctest::Approx(2000));
    CHECK(!res.r_hat_in);
    CHECK(res.q_bar_out[1] == doctest::Approx(0));
  }

  // free sender held back by a jammed receiver flips congested
  {
    const std::vector<PhaseState> outs{{0, true}, {0, false}};
    const auto res = solve_junction({1500, false}, cap, outs, alphas, caps);
    CHECK(res.q_hat_in == doctest::Approx(0));
    CHECK(res.r_hat_in);
    CHECK(res.r_bar_out[0]);  // arriving 0 >= queue discharge 0: stays congested
  }
}

TEST_CASE("resolution never exceeds any boundary limit") {
  const double cap = 3000;
  const std::array<double, 2> alphas{0.5, 0.5};
  const std::array<double, 2> caps{cap, cap};
  for (int mask = 0; mask < 8; ++mask) {
    const bool r_in = mask & 1, r0 = mask & 2, r1 = mask & 4;
    for (double q_in : {0.0, 700.0, 3000.0})
      for (double q0 : {0.0, 1200.0, 2600.0})
        for (double q1 : {150.0, 3000.0}) {
          const std::vector<PhaseState> outs{{q0, r0}, {q1, r1}};
          const auto res = solve_junction({q_in, r_in}, cap, outs, alphas, caps);
          CHECK(res.q_hat_in <= (r_in ? cap : q_in) + 1e-9);
          CHECK(0.5 * res.q_hat_in <= (r0 ? q0 : cap) + 1e-9);
          CHECK(0.5 * res.q_hat_in <= (r1 ? q1 : cap) + 1e-9);
          CHECK(res.q_bar_out[0] == doctest::Approx(0.5 * res.q_hat_in));
        }
  }
}

TEST_CASE("brute-force oracle equivalence over the criterion sweep") {
  const auto t0 = std::chrono::steady_clock::now();
  const double cap = 3000;
  const std::array<double, 2> alphas{0.5, 0.5};
  const std::array<double, 2> caps{cap, cap};

  // 10 flow levels per boundary -> 1000 triples, times 8 regime combos
  std::vector<double> levels;
  for (int i = 0; i < 10; ++i) levels.push_back(std::round(3000.0 * i / 9.0));

  int cases = 0;
  double worst = 0;
  for (int mask = 0; mask < 8; ++mask) {
    const bool r_in = mask & 1, r0 = mask & 2, r1 = mask & 4;
    for (double q_in : levels)
      for (double q0 : levels)
        for (double q1 : levels) {
          const std::vector<PhaseState> outs{{q0, r0}, {q1, r1}};
          const auto res =
              solve_junction({q_in, r_in}, cap, outs, alphas, caps);
          const double bf = brute_force_max_flow(q_in, r_in, cap, {q0, q1},
                                                 {r0, r1}, alphas, caps);
          worst = std::max(worst, std::fabs(res.q_hat_in - bf));
          ++cases;
        }
  }
  CHECK(cases == 8000);
  CHECK(worst <= 1.0);

  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(secs < 5.0);
  MESSAGE("oracle sweep: ", cases, " cases, worst gap ", worst, " veh/h in ", secs, " s");
}

TEST_CASE("asymmetric turning shares bind proportionally") {
  const double cap = 3000;
  // alpha = (0.8, 0.2): the big-share receiver binds four times harder
  const std::vector<PhaseState> outs{{500, true}, {500, true}};
  const std::array<double, 2> alphas{0.8, 0.2};
  const std::array<double, 2> caps{cap, cap};
  const auto res = solve_junction({3000, false}, cap, outs, alphas, caps);
  CHECK(res.q_hat_in == doctest::Approx(625));  // min(3000, 500/0.8, 500/0.2)
  CHECK(res.q_bar_out[0] == doctest::Approx(500));
  CHECK(res.q_bar_out[1] == doctest::Approx(125));
  CHECK(res.r_bar_out[0]);
  CHECK(!res.r_bar_out[1]);  // 125 < 500 absorbed: queue relaxes
}
