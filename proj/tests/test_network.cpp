#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "sdbench/network.hpp"
#include "test_support.hpp"

using namespace sdbench;
using namespace testutil;

TEST_CASE("parse accepts the single-loop document and derives A") {
  const Network net = parse_network(ring4_json());
  CHECK(net.node_count() == 4);
  CHECK(net.branch_count() == 4);
  CHECK(net.supply_count() == 1);
  CHECK(net.open_branch_count() == 1);
  CHECK(net.initial_configuration().open() == std::vector<int>{net.branch_index("b4")});
  CHECK(net.base_power_kva() == 100.0);
}

TEST_CASE("parse rejects malformed documents") {
  CHECK_THROWS_AS(parse_network("{not json"), ParseError);
  CHECK_THROWS_AS(parse_network("[1,2]"), ParseError);

  SECTION("disconnected graph") {
    const std::string doc = network_json(
        {{"n1", true}, {"n2", false, 0.01, 0.0}, {"n3", false, 0.01, 0.0}},
        {{"b1", "n1", "n2"}});
    CHECK_THROWS_AS(parse_network(doc), ParseError);
  }
  SECTION("wrong initially-open cardinality") {
    const std::string doc = network_json(
        {{"n1", true}, {"n2", false, 0.01, 0.0}},
        {{"b1", "n1", "n2"}, {"b2", "n1", "n2", 0.02, 0.01}});
    CHECK_THROWS_AS(parse_network(doc), ParseError);  // A = 1, none flagged open
  }
  SECTION("initially-open set of the right size but not radial") {
    // Opening b3 and b4 leaves the parallel pair b1/b2 closed: a cycle plus
    // an isolated n3, so the cardinality check alone is not enough.
    const std::string doc = network_json(
        {{"n1", true}, {"n2", false, 0.01, 0.0}, {"n3", false, 0.01, 0.0}},
        {{"b1", "n1", "n2"}, {"b2", "n1", "n2", 0.02, 0.01},
         {"b3", "n2", "n3", 0.01, 0.02, true}, {"b4", "n3", "n1", 0.01, 0.02, true}});
    CHECK_THROWS_AS(parse_network(doc), ParseError);
  }
  SECTION("zero-impedance branch") {
    const std::string doc = network_json({{"n1", true}, {"n2", false, 0.01, 0.0}},
                                         {{"b1", "n1", "n2", 0.0, 0.0}});
    CHECK_THROWS_AS(parse_network(doc), ParseError);
  }
  SECTION("supply node carrying load") {
    const std::string doc = network_json({{"n1", true, 0.5, 0.0}, {"n2", false, 0.01, 0.0}},
                                         {{"b1", "n1", "n2"}});
    CHECK_THROWS_AS(parse_network(doc), ParseError);
  }
  SECTION("self-loop branch") {
    const std::string doc = network_json({{"n1", true}, {"n2", false, 0.01, 0.0}},
                                         {{"b1", "n1", "n2"}, {"b2", "n2", "n2", 0.01, 0.02, true}});
    CHECK_THROWS_AS(parse_network(doc), ParseError);
  }
  SECTION("duplicate ids") {
    CHECK_THROWS_AS(parse_network(network_json(
                        {{"n1", true}, {"n1", false, 0.01, 0.0}}, {{"b1", "n1", "n1"}})),
                    ParseError);
  }
  SECTION("voltage band inverted") {
    const std::string doc = network_json(
        {{"n1", true}, {"n2", false, 0.01, 0.0, 1.2, 0.9}}, {{"b1", "n1", "n2"}});
    CHECK_THROWS_AS(parse_network(doc), ParseError);
  }
}

TEST_CASE("A = B - N + S holds on random parsed networks") {
  Rng rng(2024);
  for (int i = 0; i < 50; ++i) {
    const Network net = parse_network(random_graph_json(rng));
    CHECK(net.open_branch_count() ==
          net.branch_count() - net.node_count() + net.supply_count());
    CHECK(static_cast<int>(net.initial_configuration().open().size()) ==
          net.open_branch_count());
  }
}

TEST_CASE("is_radial on the ring and the pendant") {
  const Network ring = parse_network(ring4_json());
  for (int b = 0; b < 4; ++b) CHECK(is_radial(ring, std::vector<int>{b}));

  const Network pend = parse_network(ring4_pendant_json(false));
  CHECK(is_radial(pend, std::vector<std::string>{"b4"}));
  CHECK_FALSE(is_radial(pend, std::vector<std::string>{"b5"}));  // isolates n5
  CHECK_THROWS_AS(is_radial(pend, std::vector<std::string>{"nope"}), std::invalid_argument);
  CHECK_THROWS_AS(is_radial(pend, std::vector<int>{99}), std::invalid_argument);
}

TEST_CASE("is_radial agrees with the reachability oracle on random subsets") {
  Rng rng(7);
  int radial_seen = 0;
  for (int i = 0; i < 60; ++i) {
    const Network net = parse_network(random_graph_json(rng));
    const int a = net.open_branch_count();
    for (int trial = 0; trial < 30; ++trial) {
      std::set<int> subset;
      while (static_cast<int>(subset.size()) < a)
        subset.insert(static_cast<int>(rng.index(net.branch_count())));
      const std::vector<int> open(subset.begin(), subset.end());
      const bool mine = is_radial(net, open);
      CHECK(mine == radial_by_reachability(net, open));
      radial_seen += mine ? 1 : 0;
    }
  }
  CHECK(radial_seen > 0);  // the comparison exercised both outcomes
}

TEST_CASE("detect_loop returns the whole ring when its open branch closes") {
  const Network net = parse_network(ring4_json());
  const std::vector<int> loop = detect_loop(net, net.initial_configuration(),
                                            net.branch_index("b4"));
  CHECK(loop.size() == 4);
  CHECK(loop.front() == net.branch_index("b4"));
  std::set<int> got(loop.begin(), loop.end());
  CHECK(got == std::set<int>{0, 1, 2, 3});

  CHECK_THROWS_AS(detect_loop(net, net.initial_configuration(), net.branch_index("b1")),
                  std::invalid_argument);  // b1 is closed
}

TEST_CASE("detect_loop returns the chord plus the tree path") {
  // Path n1-n2-n3-n4 with a chord n2-n4.
  const std::string doc = network_json(
      {{"n1", true}, {"n2", false, 0.01, 0.0}, {"n3", false, 0.01, 0.0},
       {"n4", false, 0.01, 0.0}},
      {{"b1", "n1", "n2"}, {"b2", "n2", "n3"}, {"b3", "n3", "n4"},
       {"chord", "n2", "n4", 0.01, 0.02, true}});
  const Network net = parse_network(doc);
  const std::vector<int> loop = detect_loop(net, net.initial_configuration(),
                                            net.branch_index("chord"));
  const std::set<int> got(loop.begin(), loop.end());
  CHECK(got == std::set<int>{net.branch_index("chord"), net.branch_index("b2"),
                             net.branch_index("b3")});
}

TEST_CASE("every branch reported by detect_loop restores radiality when opened") {
  Rng rng(11);
  for (int i = 0; i < 40; ++i) {
    const Network net = parse_network(random_graph_json(rng));
    if (net.open_branch_count() == 0) continue;
    const RadialConfiguration cfg = random_radial_config(net, rng);
    for (int close : cfg.open()) {
      const std::vector<int> loop = detect_loop(net, cfg, close);
      CHECK(loop.front() == close);
      for (int open : loop) {
        const RadialConfiguration next = branch_exchange(net, cfg, close, open);
        CHECK(is_radial(net, next));
        CHECK(next.open().size() == cfg.open().size());
      }
    }
  }
}

TEST_CASE("branch_exchange identity and the ring example") {
  const Network net = parse_network(ring4_json());
  const RadialConfiguration& start = net.initial_configuration();
  const int b4 = net.branch_index("b4");
  const int b2 = net.branch_index("b2");

  CHECK(branch_exchange(net, start, b4, b4) == start);
  CHECK(branch_exchange(net, start, b4, b2).open() == std::vector<int>{b2});

  const Network pend = parse_network(ring4_pendant_json(false));
  CHECK_THROWS_AS(branch_exchange(net, start, b2, b4), std::invalid_argument);  // b2 closed
  CHECK_THROWS_AS(branch_exchange(pend, pend.initial_configuration(),
                                  pend.branch_index("b4"), pend.branch_index("b5")),
                  std::invalid_argument);  // pendant is not on the loop
}

TEST_CASE("a thousand random exchanges keep the configuration radial") {
  Rng rng(99);
  const Network net = parse_network(random_graph_json(rng, 12, 4));
  if (net.open_branch_count() == 0) return;
  RadialConfiguration cfg = net.initial_configuration();
  for (int i = 0; i < 1000; ++i) {
    const int close = cfg.open()[rng.index(cfg.open().size())];
    const std::vector<int> loop = detect_loop(net, cfg, close);
    const int open = loop[rng.index(loop.size())];
    cfg = branch_exchange(net, cfg, close, open);
    REQUIRE(is_radial(net, cfg));
  }
}

TEST_CASE("tree count matches the closed form on cycles") {
  for (int n = 3; n <= 10; ++n) {
    const Network net = parse_network(ring_json(n));
    CHECK(count_radial_configs(net) == n);
  }
}

TEST_CASE("tree count matches brute-force subset enumeration") {
  Rng rng(5150);
  for (int i = 0; i < 100; ++i) {
    const Network net = parse_network(random_graph_json(rng));
    const mpz_class psi = count_radial_configs(net);
    REQUIRE(psi.fits_ulong_p());
    CHECK(psi.get_ui() == brute_force_tree_count(net));
  }
}

TEST_CASE("tree count handles parallel branches and multiple supplies") {
  // Two supplies joined by one branch: it can never be closed, trees span
  // the collapsed root only.
  const std::string doc = network_json(
      {{"s1", true}, {"s2", true}, {"n1", false, 0.01, 0.0}},
      {{"b1", "s1", "n1"}, {"b2", "s2", "n1", 0.02, 0.01, true},
       {"tie", "s1", "s2", 0.01, 0.01, true}});
  const Network net = parse_network(doc);
  CHECK(net.open_branch_count() == 2);
  CHECK(count_radial_configs(net) == 2);  // n1 fed from s1 or s2; tie always open

  // Doubled ring edge: parallel pair doubles the count of trees using it.
  const std::string doubled = network_json(
      {{"n1", true}, {"n2", false, 0.01, 0.0}},
      {{"b1", "n1", "n2"}, {"b2", "n1", "n2", 0.02, 0.01, true}});
  CHECK(count_radial_configs(parse_network(doubled)) == 2);
}

TEST_CASE("random_radial_config is radial, deterministic, and covers the ring") {
  const Network net = parse_network(ring4_json());

  Rng a(42), b(42);
  CHECK(random_radial_config(net, a) == random_radial_config(net, b));

  Rng rng(1);
  std::set<std::vector<int>> seen;
  for (int i = 0; i < 10000; ++i) {
    const RadialConfiguration cfg = random_radial_config(net, rng);
    REQUIRE(is_radial(net, cfg));
    seen.insert(cfg.open());
  }
  CHECK(seen.size() == 4);  // all four spanning trees of the 4-cycle observed
}

TEST_CASE("config factories validate their input") {
  const Network net = parse_network(ring4_json());
  CHECK_THROWS_AS(config_from_open_ids(net, {"b1", "b2"}), std::invalid_argument);
  CHECK_THROWS_AS(config_from_open_ids(net, {"zz"}), std::invalid_argument);
  const RadialConfiguration cfg = config_from_open_ids(net, {"b2"});
  CHECK(open_branch_ids(net, cfg) == std::vector<std::string>{"b2"});
  const auto genes = gene_string(net, cfg);
  CHECK(genes == std::vector<std::uint8_t>{1, 0, 1, 1});
}
