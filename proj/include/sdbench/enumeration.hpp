#pragma once

#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "sdbench/errors.hpp"
#include "sdbench/network.hpp"
#include "sdbench/powerflow.hpp"

namespace sdbench {

struct EnumerationResult {
  std::uint64_t count = 0;
  bool completed = true;  // false: the budget was hit and the stream aborted
};

namespace detail {

// Union-find with an undo trail (no path compression, union by size).
class RollbackDsu {
 public:
  explicit RollbackDsu(int n) : parent_(n), size_(n, 1), components_(n) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }

  int find(int x) const {
    while (parent_[x] != x) x = parent_[x];
    return x;
  }

  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size_[a] > size_[b]) std::swap(a, b);
    parent_[a] = b;
    size_[b] += size_[a];
    trail_.push_back(a);
    --components_;
    return true;
  }

  std::size_t mark() const { return trail_.size(); }

  void rollback(std::size_t mark) {
    while (trail_.size() > mark) {
      const int a = trail_.back();
      trail_.pop_back();
      size_[parent_[a]] -= size_[a];
      parent_[a] = a;
      ++components_;
    }
  }

  int components() const { return components_; }

 private:
  std::vector<int> parent_;
  std::vector<int> size_;
  std::vector<int> trail_;
  int components_;
};

// Contraction/deletion spanning-tree enumerator over the collapsed graph.
// At every level all bridges of the live quotient graph are contracted at
// once (they belong to every remaining tree); the branch step then picks a
// non-bridge edge, so both the include and the exclude subtree are
// guaranteed to produce at least one tree and no dead ends are explored.
template <typename Sink>
class TreeEnumerator {
 public:
  TreeEnumerator(const Network& net, std::uint64_t budget, Sink& sink)
      : net_(net), budget_(budget), sink_(sink), dsu_(net.collapsed_count()),
        closed_(net.branch_count(), 0) {}

  EnumerationResult run() {
    std::vector<int> live;
    live.reserve(net_.branch_count());
    for (int b = 0; b < net_.branch_count(); ++b) {
      const Branch& br = net_.branches()[b];
      if (net_.collapsed_node(br.from) != net_.collapsed_node(br.to)) live.push_back(b);
    }
    recurse(live);
    return {count_, !aborted_};
  }

 private:
  void emit() {
    if (count_ == budget_) {
      aborted_ = true;
      return;
    }
    std::vector<int> open;
    open.reserve(net_.open_branch_count());
    for (int b = 0; b < net_.branch_count(); ++b) {
      if (!closed_[b]) open.push_back(b);
    }
    ++count_;
    sink_(detail::config_from_sorted_open(std::move(open)));
  }

  int endpoint_root(int b, bool second) const {
    const Branch& br = net_.branches()[b];
    return dsu_.find(net_.collapsed_node(second ? br.to : br.from));
  }

  // Bridges of the quotient multigraph spanned by `live`. Returns false when
  // the quotient is disconnected (no spanning tree can be completed).
  bool find_bridges(const std::vector<int>& live, std::vector<int>& bridges) {
    bridges.clear();
    comp_id_.assign(net_.collapsed_count(), -1);
    int n = 0;
    auto local = [&](int root) {
      if (comp_id_[root] < 0) comp_id_[root] = n++;
      return comp_id_[root];
    };
    struct HalfEdge {
      int to;
      int branch;
      int next;
    };
    std::vector<HalfEdge> half;
    half.reserve(live.size() * 2);
    std::vector<int> head;
    for (int b : live) {
      const int u = local(endpoint_root(b, false));
      const int v = local(endpoint_root(b, true));
      head.resize(static_cast<std::size_t>(n), -1);
      half.push_back({v, b, head[u]});
      head[u] = static_cast<int>(half.size()) - 1;
      half.push_back({u, b, head[v]});
      head[v] = static_cast<int>(half.size()) - 1;
    }
    if (n != dsu_.components()) return false;  // a component has no live edge

    std::vector<int> disc(n, -1), low(n, 0), enter(n, -1), eptr(head);
    std::vector<int> stack{0};
    disc[0] = 0;
    low[0] = 0;
    int timer = 1;
    while (!stack.empty()) {
      const int u = stack.back();
      if (eptr[u] == -1) {
        stack.pop_back();
        if (!stack.empty()) {
          const int p = stack.back();
          low[p] = std::min(low[p], low[u]);
          if (low[u] > disc[p]) bridges.push_back(enter[u]);
        }
        continue;
      }
      const HalfEdge e = half[eptr[u]];
      eptr[u] = e.next;
      if (e.branch == enter[u]) continue;  // the edge used to reach u
      if (disc[e.to] < 0) {
        disc[e.to] = timer++;
        low[e.to] = disc[e.to];
        enter[e.to] = e.branch;
        stack.push_back(e.to);
      } else {
        low[u] = std::min(low[u], disc[e.to]);
      }
    }
    return timer == n;
  }

  void recurse(const std::vector<int>& live_in) {
    if (aborted_) return;
    if (dsu_.components() == 1) {
      emit();
      return;
    }

    const std::size_t outer = dsu_.mark();
    std::vector<int> live;
    live.reserve(live_in.size());
    for (int b : live_in) {
      if (endpoint_root(b, false) != endpoint_root(b, true)) live.push_back(b);
    }

    std::vector<int> bridges;
    if (!find_bridges(live, bridges)) return;

    for (int b : bridges) {
      dsu_.unite(endpoint_root(b, false), endpoint_root(b, true));
      closed_[b] = 1;
    }
    if (!bridges.empty()) {
      std::vector<int> kept;
      kept.reserve(live.size() - bridges.size());
      for (int b : live) {
        if (!closed_[b]) kept.push_back(b);
      }
      live.swap(kept);
    }

    if (dsu_.components() == 1) {
      emit();
    } else {
      // The quotient is connected and bridge-free here, so the first live
      // edge can be either contracted or deleted; both subtrees are fertile.
      const int e = live.front();
      const std::vector<int> rest(live.begin() + 1, live.end());
      const std::size_t inner = dsu_.mark();
      dsu_.unite(endpoint_root(e, false), endpoint_root(e, true));
      closed_[e] = 1;
      recurse(rest);
      closed_[e] = 0;
      dsu_.rollback(inner);
      recurse(rest);
    }

    for (int b : bridges) closed_[b] = 0;
    dsu_.rollback(outer);
  }

  const Network& net_;
  std::uint64_t budget_;
  Sink& sink_;
  RollbackDsu dsu_;
  std::vector<char> closed_;
  std::vector<int> comp_id_;
  std::uint64_t count_ = 0;
  bool aborted_ = false;
};

}  // namespace detail

/// Streams every radial configuration (spanning tree of the collapsed graph)
/// exactly once into `sink(const RadialConfiguration&)`. Stops after `budget`
/// configurations; `completed` is false when the stream was cut short.
template <typename Sink>
EnumerationResult enumerate_radial_configs(const Network& net, std::uint64_t budget,
                                           Sink&& sink) {
  detail::TreeEnumerator<std::remove_reference_t<Sink>> enumerator(net, budget, sink);
  return enumerator.run();
}

struct GlobalOptimum {
  double y_g = 0.0;                                  // minimum penalized objective, p.u.
  std::vector<RadialConfiguration> optimal_configs;  // every argmin configuration
  std::uint64_t enumerated = 0;                      // feasible configurations examined
  std::uint64_t infeasible = 0;                      // discarded on power-flow divergence
};

/// Exhaustive Case-G oracle: evaluates the penalized objective over the full
/// configuration stream. Throws BudgetExceeded when the stream does not fit
/// the budget and NoFeasibleSolution when every configuration diverges.
inline GlobalOptimum global_optimum(const Network& net, const OperationalLimits& limits,
                                    const PenaltySpec& penalties,
                                    const PowerFlowOptions& pf_opts = {},
                                    std::uint64_t budget = 10'000'000) {
  GlobalOptimum best;
  bool have = false;
  auto sink = [&](const RadialConfiguration& cfg) {
    const std::optional<double> f = penalized_objective(net, cfg, limits, penalties, pf_opts);
    if (!f) {
      ++best.infeasible;
      return;
    }
    ++best.enumerated;
    if (!have || *f < best.y_g) {
      have = true;
      best.y_g = *f;
      best.optimal_configs.clear();
      best.optimal_configs.push_back(cfg);
    } else if (*f == best.y_g) {
      best.optimal_configs.push_back(cfg);
    }
  };
  const EnumerationResult res = enumerate_radial_configs(net, budget, sink);
  if (!res.completed)
    throw BudgetExceeded("global_optimum: enumeration budget exhausted after " +
                         std::to_string(res.count) + " configurations");
  if (!have) throw NoFeasibleSolution("global_optimum: every configuration diverged");
  return best;
}

}  // namespace sdbench
