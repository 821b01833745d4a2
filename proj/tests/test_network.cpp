#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "linkwave/common.hpp"
#include "linkwave/config.hpp"
#include "linkwave/network.hpp"
#include "linkwave/rational.hpp"
#include "support/fixture.hpp"

using namespace linkwave;
using namespace linkwave::testfix;

TEST_CASE("triangular diagram critical density and capacity") {
  const FundamentalDiagram fd = std_fd();
  CHECK(fd.critical_density() == doctest::Approx(100.0));
  CHECK(capacity(fd) == doctest::Approx(3000.0));

  // rho* = rho_jam w / (k + w), C = k rho*
  const FundamentalDiagram other{60, 20, 300};
  CHECK(other.critical_density() == doctest::Approx(75.0));
  CHECK(capacity(other) == doctest::Approx(4500.0));

  CHECK(std_link("X", LinkRole::Source).jam_storage_veh() == doctest::Approx(120.0));
}

TEST_CASE("wave offsets are exact integers") {
  const Offsets o = offsets(std_link("I1", LinkRole::Source), TimeGrid{0.005, 20});
  CHECK(o.forward == 2);
  CHECK(o.backward == 6);

  // dt = 0.004 makes L/(k dt) = 5/2: rejected with the exact ratio named
  CHECK_THROWS_WITH_AS(offsets(std_link("I1", LinkRole::Source), TimeGrid{0.004, 20}),
                       doctest::Contains("5/2"), ConfigError);
}

TEST_CASE("rational decimals") {
  const Rational r = Rational::from_decimal(0.005);
  CHECK(r.num == 1);
  CHECK(r.den == 200);
  CHECK(r.str() == "1/200");
  CHECK(!r.is_integer());
  CHECK((r * Rational::integer(200)).is_integer());
  CHECK((Rational::from_decimal(0.3) / (Rational::integer(30) * r)).num == 2);
  CHECK(Rational::from_decimal(2.5).str() == "5/2");
  CHECK((Rational::from_decimal(0.25) + Rational::from_decimal(0.75)).is_integer());
  CHECK((Rational::integer(3) - Rational::from_decimal(0.5)).str() == "5/2");
  CHECK_THROWS_AS(Rational::from_decimal(1e-10), ConfigError);  // > 9 places
}

TEST_CASE("fnv1a64 hash is stable") {
  CHECK(fnv1a64_hex("") == "cbf29ce484222325");
  CHECK(fnv1a64_hex("abc") == "e71fa2190541574b");
  CHECK(fnv1a64_hex("linkwave") == "42719c451276f8f0");
}

TEST_CASE("two-junction fixture validates cleanly") {
  const Network net = two_junction_network();
  const ValidationReport rep = validate_network(net, std_grid());
  CHECK(rep.ok());
  CHECK(rep.to_string() == "ok");

  const auto inc = build_incidence(net);
  const int i5 = net.link_index("I5");
  CHECK(inc[i5].up_junction == 0);
  CHECK(inc[i5].up_slot == 1);     // J1 outgoing slot 1
  CHECK(inc[i5].down_junction == 1);
  CHECK(inc[i5].down_slot == 1);   // J2 incoming slot 1
  CHECK(!inc[i5].terminal());
  for (const char* id : {"I4", "I6", "I7"}) CHECK(inc[net.link_index(id)].terminal());
  for (const char* id : {"I1", "I2", "I3"}) {
    CHECK(inc[net.link_index(id)].up_junction == -1);
    CHECK(!inc[net.link_index(id)].terminal());
  }
}

TEST_CASE("in-code fixture matches the shipped scenario file") {
  const ScenarioConfig cfg =
      load_config(repo_root() + "/fixtures/two_junction.json");
  const Network net = two_junction_network();
  REQUIRE(cfg.net.links.size() == net.links.size());
  for (size_t i = 0; i < net.links.size(); ++i) {
    CHECK(cfg.net.links[i].id == net.links[i].id);
    CHECK(cfg.net.links[i].length_miles == net.links[i].length_miles);
    CHECK(cfg.net.links[i].role == net.links[i].role);
  }
  REQUIRE(cfg.net.inflows.size() == net.inflows.size());
  for (size_t i = 0; i < net.inflows.size(); ++i) {
    CHECK(cfg.net.inflows[i].link == net.inflows[i].link);
    CHECK(cfg.net.inflows[i].values == net.inflows[i].values);
  }
  CHECK(cfg.grid.dt_hours == std_grid().dt_hours);
  CHECK(cfg.grid.n_steps == std_grid().n_steps);
  CHECK(cfg.options.objective == ObjectiveKind::TimeWeightedThroughput);
}

TEST_CASE("turning ratio row sums are validated") {
  Network net = two_junction_network();
  net.junctions[0].alpha[0][0] = 0.6;
  net.junctions[0].alpha[0][1] = 0.5;
  const ValidationReport rep = validate_network(net, std_grid());
  REQUIRE(!rep.ok());
  CHECK(rep.issues[0].entity == "J1");
  CHECK(rep.issues[0].message.find("row sum 1.1") != std::string::npos);
}

TEST_CASE("role coherence issues are reported") {
  Network net = two_junction_network();
  net.links[net.link_index("I5")].role = LinkRole::Source;  // fed by J1
  ValidationReport rep = validate_network(net, std_grid());
  REQUIRE(!rep.ok());
  CHECK(std::any_of(rep.issues.begin(), rep.issues.end(), [](const ValidationIssue& is) {
    return is.entity == "I5" && is.message.find("source") != std::string::npos;
  }));

  net = two_junction_network();
  InflowProfile bad;
  bad.link = "I4";  // sinks cannot carry inflows
  bad.values.assign(20, 0.0);
  net.inflows.push_back(bad);
  rep = validate_network(net, std_grid());
  REQUIRE(!rep.ok());
  CHECK(std::any_of(rep.issues.begin(), rep.issues.end(), [](const ValidationIssue& is) {
    return is.entity == "I4";
  }));
}

TEST_CASE("duplicate ids are flagged") {
  Network net = two_junction_network();
  net.links.push_back(std_link("I1", LinkRole::Sink));
  const ValidationReport rep = validate_network(net, std_grid());
  CHECK(std::any_of(rep.issues.begin(), rep.issues.end(), [](const ValidationIssue& is) {
    return is.entity == "I1" && is.message.find("duplicate") != std::string::npos;
  }));
}

TEST_CASE("materialized inflows are integral, bounded, and seed-deterministic") {
  Network net = two_junction_network();
  for (auto& p : net.inflows) {
    p.randomized = true;
    p.random_low = 0;
    p.random_high = 3000;
    p.values.clear();
  }
  Network net2 = net;
  Network net3 = net;
  materialize_inflows(net, std_grid(), 7);
  materialize_inflows(net2, std_grid(), 7);
  materialize_inflows(net3, std_grid(), 8);

  bool any_diff = false;
  for (size_t i = 0; i < net.inflows.size(); ++i) {
    REQUIRE(net.inflows[i].values.size() == 20);
    CHECK(net.inflows[i].values == net2.inflows[i].values);
    if (net.inflows[i].values != net3.inflows[i].values) any_diff = true;
    for (const double v : net.inflows[i].values) {
      CHECK(v >= 0);
      CHECK(v <= 3000);
      CHECK(v == std::round(v));  // whole veh/h keeps the MILP epsilon-band clear
    }
  }
  CHECK(any_diff);

  // fixed profiles pass through untouched
  Network fixed = two_junction_network();
  materialize_inflows(fixed, std_grid(), 7);
  CHECK(fixed.inflows[0].values == fixture_inflow("I1"));
}

TEST_CASE("config round trip preserves the scenario") {
  const ScenarioConfig cfg =
      load_config(repo_root() + "/fixtures/two_junction.json");
  const std::string json = config_to_json(cfg.net, cfg.grid, cfg.options);
  const ScenarioConfig back = parse_config(json, "roundtrip.json");
  CHECK(back.net.links.size() == cfg.net.links.size());
  CHECK(back.grid.n_steps == cfg.grid.n_steps);
  for (size_t i = 0; i < cfg.net.inflows.size(); ++i)
    CHECK(back.net.inflows[i].values == cfg.net.inflows[i].values);
  CHECK(config_to_json(back.net, back.grid, back.options) == json);
}

TEST_CASE("config errors name the offending field") {
  CHECK_THROWS_WITH_AS(parse_config("{}", "x.json"), doctest::Contains("format"),
                       ConfigError);
  CHECK_THROWS_AS(parse_config("not json", "x.json"), ConfigError);

  // junction referencing an unknown link fails validation, not parsing
  const std::string json = R"({
    "format": "linkwave-network-v1",
    "grid": {"dt_hours": 0.005, "n_steps": 4},
    "links": [
      {"id": "A", "length_miles": 0.3, "k_mph": 30, "w_mph": 10,
       "rho_jam_vpm": 400, "role": "source"}
    ],
    "junctions": [],
    "inflows": [{"link": "A", "values": [0, 0, 0, 0]}]
  })";
  const ScenarioConfig cfg = parse_config(json, "single.json");
  CHECK(validate_network(cfg.net, cfg.grid).ok());

  CHECK_THROWS_AS(parse_config(R"({
    "format": "linkwave-network-v1",
    "grid": {"dt_hours": 0.005, "n_steps": 4},
    "links": [
      {"id": "A", "length_miles": 0.3, "k_mph": 30, "w_mph": 10,
       "rho_jam_vpm": 400, "role": "nonsense"}
    ],
    "junctions": [],
    "inflows": [{"link": "A", "values": [0, 0, 0, 0]}]
  })", "bad.json"), ConfigError);
}
