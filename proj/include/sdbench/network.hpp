#pragma once

#include <gmpxx.h>

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <queue>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdbench/errors.hpp"
#include "sdbench/rng.hpp"

namespace sdbench {

enum class NodeKind { supply, load };

struct Node {
  std::string id;
  NodeKind kind = NodeKind::load;
  double p_load = 0.0;  // active power, p.u.
  double q_load = 0.0;  // reactive power, p.u.
  double v_min = 0.0;   // voltage magnitude limit, p.u.
  double v_max = 0.0;
};

struct Branch {
  std::string id;
  int from = -1;  // node index
  int to = -1;
  double resistance = 0.0;      // p.u.
  double reactance = 0.0;       // p.u.
  std::optional<double> i_max;  // current magnitude limit, p.u.; absent = unconstrained
};

namespace detail {

class DisjointSet {
 public:
  explicit DisjointSet(int n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }

  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];  // path halving
      x = parent_[x];
    }
    return x;
  }

  /// Returns false when both elements already share a set.
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

}  // namespace detail

class RadialConfiguration;

namespace detail {
inline RadialConfiguration config_from_sorted_open(std::vector<int> open);
}

// One radial operating state: the set of open branches. The closed branches
// form a spanning tree of the supply-collapsed graph; instances are only
// produced by the validated factories and the radiality-preserving moves,
// so the invariant holds by construction.
class RadialConfiguration {
 public:
  RadialConfiguration() = default;

  /// Sorted open-branch indices; size equals the network's A.
  const std::vector<int>& open() const { return open_; }

  bool is_open(int branch_idx) const {
    return std::binary_search(open_.begin(), open_.end(), branch_idx);
  }

  bool operator==(const RadialConfiguration&) const = default;

 private:
  explicit RadialConfiguration(std::vector<int> open) : open_(std::move(open)) {}

  std::vector<int> open_;

  friend RadialConfiguration detail::config_from_sorted_open(std::vector<int>);
};

namespace detail {
inline RadialConfiguration config_from_sorted_open(std::vector<int> open) {
  return RadialConfiguration(std::move(open));
}
}  // namespace detail

class Network;
Network parse_network(std::string_view text);

// Immutable model of the weakly meshed distribution graph. Safe to share
// across concurrent workers once parsed.
class Network {
 public:
  int node_count() const { return static_cast<int>(nodes_.size()); }
  int branch_count() const { return static_cast<int>(branches_.size()); }
  int supply_count() const { return static_cast<int>(supply_indices_.size()); }

  /// A = B - N + S: the number of open branches in any radial configuration.
  int open_branch_count() const {
    return branch_count() - node_count() + supply_count();
  }

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Branch>& branches() const { return branches_; }
  const std::vector<int>& supply_indices() const { return supply_indices_; }

  double base_power_kva() const { return base_power_kva_; }
  double base_voltage_kv() const { return base_voltage_kv_; }

  int node_index(std::string_view id) const {
    auto it = node_index_.find(std::string(id));
    if (it == node_index_.end())
      throw std::invalid_argument("unknown node id: " + std::string(id));
    return it->second;
  }

  int branch_index(std::string_view id) const {
    auto it = branch_index_.find(std::string(id));
    if (it == branch_index_.end())
      throw std::invalid_argument("unknown branch id: " + std::string(id));
    return it->second;
  }

  /// Index in the supply-collapsed graph: every supply node maps to 0,
  /// load nodes map to 1..N-S.
  int collapsed_node(int node_idx) const { return collapsed_[node_idx]; }

  /// Node count of the supply-collapsed graph (N - S + 1).
  int collapsed_count() const { return node_count() - supply_count() + 1; }

  /// Configuration defined by the branches flagged initially_open.
  const RadialConfiguration& initial_configuration() const { return initial_; }

 private:
  Network() = default;

  std::vector<Node> nodes_;
  std::vector<Branch> branches_;
  std::vector<int> supply_indices_;
  std::vector<int> collapsed_;
  double base_power_kva_ = 0.0;
  double base_voltage_kv_ = 0.0;
  RadialConfiguration initial_;
  std::unordered_map<std::string, int> node_index_;
  std::unordered_map<std::string, int> branch_index_;

  friend Network parse_network(std::string_view);
};

namespace detail {

inline void check_branch_indices(const Network& net, const std::vector<int>& open) {
  for (int b : open) {
    if (b < 0 || b >= net.branch_count())
      throw std::invalid_argument("branch index out of range: " + std::to_string(b));
  }
}

inline std::vector<int> sorted_unique(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace detail

/// True iff the branches outside `open_indices` form a spanning tree of the
/// supply-collapsed graph: |open| = A, no cycle, every node reachable.
inline bool is_radial(const Network& net, const std::vector<int>& open_indices) {
  detail::check_branch_indices(net, open_indices);
  const std::vector<int> open = detail::sorted_unique(open_indices);
  if (static_cast<int>(open.size()) != net.open_branch_count()) return false;

  detail::DisjointSet dsu(net.collapsed_count());
  int united = 0;
  for (int b = 0; b < net.branch_count(); ++b) {
    if (std::binary_search(open.begin(), open.end(), b)) continue;
    const Branch& br = net.branches()[b];
    const int cu = net.collapsed_node(br.from);
    const int cv = net.collapsed_node(br.to);
    if (cu == cv) return false;  // closed loop (self-loop after collapse)
    if (!dsu.unite(cu, cv)) return false;
    ++united;
  }
  return united == net.collapsed_count() - 1;
}

inline bool is_radial(const Network& net, const RadialConfiguration& cfg) {
  return is_radial(net, cfg.open());
}

inline bool is_radial(const Network& net, const std::vector<std::string>& open_ids) {
  std::vector<int> idx;
  idx.reserve(open_ids.size());
  for (const auto& id : open_ids) idx.push_back(net.branch_index(id));
  return is_radial(net, idx);
}

/// Validated constructor from an open-branch index set.
inline RadialConfiguration config_from_open_indices(const Network& net,
                                                    std::vector<int> open) {
  detail::check_branch_indices(net, open);
  open = detail::sorted_unique(open);
  if (!is_radial(net, open))
    throw std::invalid_argument("open set does not describe a radial configuration");
  return detail::config_from_sorted_open(std::move(open));
}

inline RadialConfiguration config_from_open_ids(const Network& net,
                                                const std::vector<std::string>& ids) {
  std::vector<int> idx;
  idx.reserve(ids.size());
  for (const auto& id : ids) idx.push_back(net.branch_index(id));
  return config_from_open_indices(net, std::move(idx));
}

/// Length-B gene string, 1 = closed, 0 = open.
inline std::vector<std::uint8_t> gene_string(const Network& net,
                                             const RadialConfiguration& cfg) {
  std::vector<std::uint8_t> genes(net.branch_count(), 1);
  for (int b : cfg.open()) genes[b] = 0;
  return genes;
}

inline std::vector<std::string> open_branch_ids(const Network& net,
                                                const RadialConfiguration& cfg) {
  std::vector<std::string> ids;
  ids.reserve(cfg.open().size());
  for (int b : cfg.open()) ids.push_back(net.branches()[b].id);
  return ids;
}

/// Branches of the unique cycle created by closing `close_idx`: the tree
/// path between its endpoints plus the branch itself (first element).
/// A branch joining two supply nodes closes on itself after the collapse
/// and yields a one-element cycle.
inline std::vector<int> detect_loop(const Network& net, const RadialConfiguration& cfg,
                                    int close_idx) {
  if (close_idx < 0 || close_idx >= net.branch_count())
    throw std::invalid_argument("branch index out of range: " + std::to_string(close_idx));
  if (!cfg.is_open(close_idx))
    throw std::invalid_argument("branch to close is not open: " +
                                net.branches()[close_idx].id);

  const int cn = net.collapsed_count();
  const Branch& closing = net.branches()[close_idx];
  const int src = net.collapsed_node(closing.from);
  const int dst = net.collapsed_node(closing.to);
  if (src == dst) return {close_idx};

  // Adjacency of the closed spanning tree over collapsed node ids.
  std::vector<std::vector<std::pair<int, int>>> adj(cn);  // (neighbor, branch)
  for (int b = 0; b < net.branch_count(); ++b) {
    if (cfg.is_open(b)) continue;
    const Branch& br = net.branches()[b];
    const int cu = net.collapsed_node(br.from);
    const int cv = net.collapsed_node(br.to);
    adj[cu].emplace_back(cv, b);
    adj[cv].emplace_back(cu, b);
  }

  std::vector<int> parent_branch(cn, -1);
  std::vector<int> parent_node(cn, -1);
  std::vector<char> seen(cn, 0);
  std::vector<int> stack{src};
  seen[src] = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    if (u == dst) break;
    for (auto [v, b] : adj[u]) {
      if (seen[v]) continue;
      seen[v] = 1;
      parent_node[v] = u;
      parent_branch[v] = b;
      stack.push_back(v);
    }
  }

  std::vector<int> cycle{close_idx};
  for (int u = dst; u != src; u = parent_node[u]) cycle.push_back(parent_branch[u]);
  return cycle;
}

/// Close `close_idx` and open `open_idx`; `open_idx` must lie on the cycle
/// created by the closure (close_idx itself gives the identity exchange).
inline RadialConfiguration branch_exchange(const Network& net,
                                           const RadialConfiguration& cfg,
                                           int close_idx, int open_idx) {
  const std::vector<int> loop = detect_loop(net, cfg, close_idx);
  if (open_idx == close_idx) return cfg;
  if (std::find(loop.begin(), loop.end(), open_idx) == loop.end())
    throw std::invalid_argument("branch to open is not on the created loop: " +
                                net.branches()[open_idx].id);

  std::vector<int> open = cfg.open();
  *std::find(open.begin(), open.end(), close_idx) = open_idx;
  std::sort(open.begin(), open.end());
  return detail::config_from_sorted_open(std::move(open));
}

/// Exact number of radial configurations (spanning trees of the collapsed
/// graph) via the reduced Laplacian determinant, evaluated with
/// fraction-free Bareiss elimination over arbitrary-precision integers.
/// Parallel branches accumulate multiplicity; supply-supply branches are
/// self-loops after the collapse and never enter a tree.
inline mpz_class count_radial_configs(const Network& net) {
  const int cn = net.collapsed_count();
  const int m = cn - 1;
  if (m == 0) return 1;  // single collapsed node: the empty tree

  std::vector<std::vector<mpz_class>> a(m, std::vector<mpz_class>(m, 0));
  for (const Branch& br : net.branches()) {
    const int cu = net.collapsed_node(br.from);
    const int cv = net.collapsed_node(br.to);
    if (cu == cv) continue;
    // Reduced Laplacian: drop row/column of the collapsed root 0.
    if (cu > 0) a[cu - 1][cu - 1] += 1;
    if (cv > 0) a[cv - 1][cv - 1] += 1;
    if (cu > 0 && cv > 0) {
      a[cu - 1][cv - 1] -= 1;
      a[cv - 1][cu - 1] -= 1;
    }
  }

  mpz_class prev = 1;
  int sign = 1;
  for (int k = 0; k < m; ++k) {
    if (a[k][k] == 0) {
      int pivot = -1;
      for (int i = k + 1; i < m; ++i) {
        if (a[i][k] != 0) {
          pivot = i;
          break;
        }
      }
      if (pivot < 0) return 0;
      std::swap(a[k], a[pivot]);
      sign = -sign;
    }
    for (int i = k + 1; i < m; ++i) {
      for (int j = k + 1; j < m; ++j) {
        mpz_class num = a[i][j] * a[k][k] - a[i][k] * a[k][j];
        mpz_divexact(a[i][j].get_mpz_t(), num.get_mpz_t(), prev.get_mpz_t());
      }
      a[i][k] = 0;
    }
    prev = a[k][k];
  }
  mpz_class det = a[m - 1][m - 1] * sign;
  return det;
}

/// A radial configuration drawn by random-weight spanning-tree construction.
/// Deterministic for a given generator state; the draw is not uniform over
/// all trees and does not need to be.
inline RadialConfiguration random_radial_config(const Network& net, Rng& rng) {
  std::vector<int> order(net.branch_count());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);

  detail::DisjointSet dsu(net.collapsed_count());
  std::vector<char> closed(net.branch_count(), 0);
  for (int b : order) {
    const Branch& br = net.branches()[b];
    const int cu = net.collapsed_node(br.from);
    const int cv = net.collapsed_node(br.to);
    if (cu != cv && dsu.unite(cu, cv)) closed[b] = 1;
  }

  std::vector<int> open;
  open.reserve(net.open_branch_count());
  for (int b = 0; b < net.branch_count(); ++b) {
    if (!closed[b]) open.push_back(b);
  }
  return detail::config_from_sorted_open(std::move(open));
}

namespace detail {

inline std::string json_id(const nlohmann::json& v, const char* what) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw ParseError(std::string("network: ") + what + " id must be a string or integer");
}

inline double json_number(const nlohmann::json& obj, const char* key, const char* ctx) {
  if (!obj.contains(key) || !obj[key].is_number())
    throw ParseError(std::string("network: ") + ctx + " requires numeric field '" + key + "'");
  return obj[key].get<double>();
}

inline void check_id_charset(const std::string& id, const char* what) {
  if (id.empty()) throw ParseError(std::string("network: empty ") + what + " id");
  for (char c : id) {
    if (c == ',' || c == ';' || c == '"' || c == '\n' || c == '\r')
      throw ParseError(std::string("network: ") + what + " id '" + id +
                       "' contains a character reserved by the archive format");
  }
}

}  // namespace detail

/// Parse and validate a network document (see the README for the schema).
inline Network parse_network(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed network document: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("network: document must be a JSON object");

  Network net;
  net.base_power_kva_ = detail::json_number(doc, "base_power_kVA", "document");
  net.base_voltage_kv_ = detail::json_number(doc, "base_voltage_kV", "document");
  if (net.base_power_kva_ <= 0 || net.base_voltage_kv_ <= 0)
    throw ParseError("network: base power and base voltage must be positive");

  if (!doc.contains("nodes") || !doc["nodes"].is_array() || doc["nodes"].empty())
    throw ParseError("network: 'nodes' must be a non-empty array");
  if (!doc.contains("branches") || !doc["branches"].is_array())
    throw ParseError("network: 'branches' must be an array");

  for (const auto& jn : doc["nodes"]) {
    if (!jn.is_object()) throw ParseError("network: node entries must be objects");
    Node n;
    n.id = detail::json_id(jn.at("id"), "node");
    detail::check_id_charset(n.id, "node");
    const std::string kind = jn.value("kind", std::string());
    if (kind == "supply")
      n.kind = NodeKind::supply;
    else if (kind == "load")
      n.kind = NodeKind::load;
    else
      throw ParseError("network: node '" + n.id + "' kind must be 'supply' or 'load'");
    n.p_load = detail::json_number(jn, "p_pu", ("node " + n.id).c_str());
    n.q_load = detail::json_number(jn, "q_pu", ("node " + n.id).c_str());
    n.v_min = detail::json_number(jn, "v_min", ("node " + n.id).c_str());
    n.v_max = detail::json_number(jn, "v_max", ("node " + n.id).c_str());
    if (n.kind == NodeKind::supply && (n.p_load != 0.0 || n.q_load != 0.0))
      throw ParseError("network: supply node '" + n.id + "' must carry zero load");
    if (!(n.v_min > 0.0) || !(n.v_min <= n.v_max))
      throw ParseError("network: node '" + n.id + "' requires 0 < v_min <= v_max");
    if (net.node_index_.count(n.id))
      throw ParseError("network: duplicate node id '" + n.id + "'");
    net.node_index_.emplace(n.id, net.node_count());
    if (n.kind == NodeKind::supply) net.supply_indices_.push_back(net.node_count());
    net.nodes_.push_back(std::move(n));
  }
  if (net.supply_indices_.empty())
    throw ParseError("network: at least one supply node is required");

  std::vector<int> initially_open;
  for (const auto& jb : doc["branches"]) {
    if (!jb.is_object()) throw ParseError("network: branch entries must be objects");
    Branch b;
    b.id = detail::json_id(jb.at("id"), "branch");
    detail::check_id_charset(b.id, "branch");
    const std::string from_id = detail::json_id(jb.at("from"), "branch endpoint");
    const std::string to_id = detail::json_id(jb.at("to"), "branch endpoint");
    auto fi = net.node_index_.find(from_id);
    auto ti = net.node_index_.find(to_id);
    if (fi == net.node_index_.end() || ti == net.node_index_.end())
      throw ParseError("network: branch '" + b.id + "' references an unknown node");
    b.from = fi->second;
    b.to = ti->second;
    if (b.from == b.to)
      throw ParseError("network: branch '" + b.id + "' must join two distinct nodes");
    b.resistance = detail::json_number(jb, "r_pu", ("branch " + b.id).c_str());
    b.reactance = detail::json_number(jb, "x_pu", ("branch " + b.id).c_str());
    if (b.resistance < 0 || b.reactance < 0)
      throw ParseError("network: branch '" + b.id + "' has negative impedance");
    if (b.resistance == 0 && b.reactance == 0)
      throw ParseError("network: branch '" + b.id + "' has zero impedance");
    if (jb.contains("i_max_pu") && !jb["i_max_pu"].is_null()) {
      const double imax = detail::json_number(jb, "i_max_pu", ("branch " + b.id).c_str());
      if (imax <= 0)
        throw ParseError("network: branch '" + b.id + "' i_max_pu must be positive");
      b.i_max = imax;
    }
    if (!jb.contains("initially_open") || !jb["initially_open"].is_boolean())
      throw ParseError("network: branch '" + b.id + "' requires boolean 'initially_open'");
    if (net.branch_index_.count(b.id))
      throw ParseError("network: duplicate branch id '" + b.id + "'");
    if (jb["initially_open"].get<bool>()) initially_open.push_back(net.branch_count());
    net.branch_index_.emplace(b.id, net.branch_count());
    net.branches_.push_back(std::move(b));
  }

  if (net.open_branch_count() < 0)
    throw ParseError("network: branch count is too small for the node count (A < 0)");

  // Raw graph with every branch closed must be connected.
  {
    detail::DisjointSet dsu(net.node_count());
    int united = 0;
    for (const Branch& b : net.branches_) united += dsu.unite(b.from, b.to) ? 1 : 0;
    if (united != net.node_count() - 1)
      throw ParseError("network: graph is disconnected with all branches closed");
  }

  net.collapsed_.assign(net.node_count(), 0);
  int next = 1;
  for (int i = 0; i < net.node_count(); ++i) {
    if (net.nodes_[i].kind != NodeKind::supply) net.collapsed_[i] = next++;
  }

  if (static_cast<int>(initially_open.size()) != net.open_branch_count())
    throw ParseError("network: " + std::to_string(initially_open.size()) +
                     " branches flagged initially_open, expected A = " +
                     std::to_string(net.open_branch_count()));
  if (!is_radial(net, initially_open))
    throw ParseError("network: the initially_open set is not a radial configuration");
  net.initial_ = detail::config_from_sorted_open(detail::sorted_unique(initially_open));

  return net;
}

}  // namespace sdbench
