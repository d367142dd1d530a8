#pragma once

// JSON builders and independent oracles shared by the test suites. The
// oracles here deliberately re-derive results through different algorithms
// than the library (subset enumeration, BFS reachability, Newton iteration).

#include <cstdint>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdbench/network.hpp"
#include "sdbench/rng.hpp"

namespace testutil {

struct NodeSpec {
  std::string id;
  bool supply = false;
  double p = 0.0;
  double q = 0.0;
  double v_min = 0.9;
  double v_max = 1.1;
};

struct BranchSpec {
  std::string id;
  std::string from;
  std::string to;
  double r = 0.01;
  double x = 0.02;
  bool open = false;
  std::optional<double> i_max;
};

inline std::string network_json(const std::vector<NodeSpec>& nodes,
                                const std::vector<BranchSpec>& branches,
                                double base_kva = 100.0, double base_kv = 10.0) {
  nlohmann::json doc;
  doc["base_power_kVA"] = base_kva;
  doc["base_voltage_kV"] = base_kv;
  doc["nodes"] = nlohmann::json::array();
  for (const NodeSpec& n : nodes) {
    doc["nodes"].push_back({{"id", n.id},
                            {"kind", n.supply ? "supply" : "load"},
                            {"p_pu", n.p},
                            {"q_pu", n.q},
                            {"v_min", n.v_min},
                            {"v_max", n.v_max}});
  }
  doc["branches"] = nlohmann::json::array();
  for (const BranchSpec& b : branches) {
    nlohmann::json jb = {{"id", b.id},   {"from", b.from}, {"to", b.to},
                         {"r_pu", b.r},  {"x_pu", b.x},    {"initially_open", b.open}};
    if (b.i_max) jb["i_max_pu"] = *b.i_max;
    doc["branches"].push_back(jb);
  }
  return doc.dump();
}

/// Supply n1 plus three loads on a 4-cycle; b4 initially open.
inline std::string ring4_json() {
  return network_json(
      {{"n1", true}, {"n2", false, 0.01, 0.005}, {"n3", false, 0.02, 0.01},
       {"n4", false, 0.01, 0.004}},
      {{"b1", "n1", "n2"}, {"b2", "n2", "n3"}, {"b3", "n3", "n4"},
       {"b4", "n4", "n1", 0.01, 0.02, true}});
}

/// Cycle C_n: one supply plus n-1 loads, the closing branch open.
inline std::string ring_json(int n) {
  std::vector<NodeSpec> nodes;
  std::vector<BranchSpec> branches;
  for (int i = 1; i <= n; ++i)
    nodes.push_back({"n" + std::to_string(i), i == 1, i == 1 ? 0.0 : 0.005, 0.0});
  for (int i = 1; i <= n; ++i) {
    branches.push_back({"b" + std::to_string(i), "n" + std::to_string(i),
                        "n" + std::to_string(i % n + 1), 0.01, 0.02, i == n});
  }
  return network_json(nodes, branches);
}

/// Single branch from the supply to one load.
inline std::string two_bus_json(double p, double q, double r, double x) {
  return network_json({{"s", true}, {"l", false, p, q}},
                      {{"b", "s", "l", r, x}});
}

/// Chain s - n1 - ... - n_k with per-node loads.
inline std::string chain_json(const std::vector<std::pair<double, double>>& loads,
                              double r = 0.01, double x = 0.02) {
  std::vector<NodeSpec> nodes{{"s", true}};
  std::vector<BranchSpec> branches;
  std::string prev = "s";
  for (std::size_t i = 0; i < loads.size(); ++i) {
    const std::string id = "n" + std::to_string(i + 1);
    nodes.push_back({id, false, loads[i].first, loads[i].second});
    branches.push_back({"b" + std::to_string(i + 1), prev, id, r, x});
    prev = id;
  }
  return network_json(nodes, branches);
}

/// 4-cycle plus a pendant node hanging off n2 (b5 closed in the valid
/// configuration; opening it isolates n5).
inline std::string ring4_pendant_json(bool pendant_open) {
  return network_json(
      {{"n1", true}, {"n2", false, 0.01, 0.005}, {"n3", false, 0.01, 0.005},
       {"n4", false, 0.01, 0.005}, {"n5", false, 0.01, 0.005}},
      {{"b1", "n1", "n2"}, {"b2", "n2", "n3"}, {"b3", "n3", "n4"},
       {"b4", "n4", "n1", 0.01, 0.02, !pendant_open},
       {"b5", "n2", "n5", 0.01, 0.02, pendant_open}});
}

// Minimal union-find used by the test-side oracles, separate from the
// library's implementation.
class OracleDsu {
 public:
  explicit OracleDsu(int n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  int find(int x) {
    return parent_[x] == x ? x : (parent_[x] = find(parent_[x]));
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent_[a] = b;
    return true;
  }

 private:
  std::vector<int> parent_;
};

/// Random connected graph: spanning tree plus a few extra edges, sometimes
/// with two supplies and occasional parallel branches. The initially-open
/// set is a spanning tree complement found by a test-side Kruskal pass.
inline std::string random_graph_json(sdbench::Rng& rng, int max_nodes = 12,
                                     int max_extra = 4) {
  const int n = 2 + static_cast<int>(rng.index(max_nodes - 1));
  const int supplies = (n >= 3 && rng.chance(0.25)) ? 2 : 1;

  std::vector<NodeSpec> nodes;
  for (int i = 0; i < n; ++i)
    nodes.push_back({"n" + std::to_string(i), i < supplies, i < supplies ? 0.0 : 0.002,
                     0.0, 0.5, 1.5});

  struct Edge {
    int u, v;
  };
  std::vector<Edge> edges;
  for (int i = 1; i < n; ++i) edges.push_back({static_cast<int>(rng.index(i)), i});
  const int extra = static_cast<int>(rng.index(max_extra + 1));
  for (int e = 0; e < extra; ++e) {
    const int u = static_cast<int>(rng.index(n));
    int v = static_cast<int>(rng.index(n));
    if (u == v) v = (v + 1) % n;
    edges.push_back({u, v});  // parallels allowed
  }

  // Collapsed-graph Kruskal pass chooses the closed (tree) branches.
  auto cid = [&](int node) { return node < supplies ? 0 : node - supplies + 1; };
  OracleDsu dsu(n - supplies + 1);
  std::vector<int> order(edges.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::vector<char> open(edges.size(), 1);
  for (int e : order) {
    if (cid(edges[e].u) != cid(edges[e].v) && dsu.unite(cid(edges[e].u), cid(edges[e].v)))
      open[e] = 0;
  }

  std::vector<BranchSpec> branches;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    branches.push_back({"b" + std::to_string(e), "n" + std::to_string(edges[e].u),
                        "n" + std::to_string(edges[e].v), 0.005 + 0.01 * rng.uniform(),
                        0.01 + 0.01 * rng.uniform(), open[e] != 0});
  }
  return network_json(nodes, branches);
}

/// Spanning trees of the collapsed graph counted by brute-force subset
/// enumeration (independent of the matrix-tree route).
inline std::uint64_t brute_force_tree_count(const sdbench::Network& net) {
  const int cn = net.collapsed_count();
  const int take = cn - 1;
  const int nb = net.branch_count();
  if (take == 0) return 1;

  std::vector<int> pick;
  std::uint64_t count = 0;
  auto is_tree = [&]() {
    OracleDsu dsu(cn);
    for (int b : pick) {
      const sdbench::Branch& br = net.branches()[b];
      if (!dsu.unite(net.collapsed_node(br.from), net.collapsed_node(br.to))) return false;
    }
    return true;
  };
  auto rec = [&](auto&& self, int next) -> void {
    if (static_cast<int>(pick.size()) == take) {
      if (is_tree()) ++count;
      return;
    }
    const int need = take - static_cast<int>(pick.size());
    for (int b = next; b + need <= nb; ++b) {
      pick.push_back(b);
      self(self, b + 1);
      pick.pop_back();
    }
  };
  rec(rec, 0);
  return count;
}

/// Reachability check used as the independent radiality oracle: closed
/// branches must touch every node and count exactly N - S after collapsing
/// the supplies, with no cycle.
inline bool radial_by_reachability(const sdbench::Network& net, const std::vector<int>& open) {
  std::vector<char> is_open(net.branch_count(), 0);
  for (int b : open) is_open[b] = 1;
  int closed = 0;
  OracleDsu dsu(net.collapsed_count());
  bool cycle = false;
  for (int b = 0; b < net.branch_count(); ++b) {
    if (is_open[b]) continue;
    ++closed;
    const sdbench::Branch& br = net.branches()[b];
    if (!dsu.unite(net.collapsed_node(br.from), net.collapsed_node(br.to))) cycle = true;
  }
  if (cycle || closed != net.collapsed_count() - 1) return false;
  for (int c = 1; c < net.collapsed_count(); ++c) {
    if (dsu.find(c) != dsu.find(0)) return false;
  }
  return true;
}

}  // namespace testutil
