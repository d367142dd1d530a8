#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "sdbench/network.hpp"

namespace sdbench {

struct PowerFlowOptions {
  double slack_v = 1.0;  // supply-node voltage magnitude, p.u.
  double tol = 1e-8;     // max node-voltage change for convergence, p.u.
  int max_iter = 100;
};

struct PowerFlowResult {
  std::vector<std::complex<double>> node_voltage;  // per node index, p.u.
  std::vector<double> branch_current;  // magnitude p.u.; zero for open branches
  int iterations = 0;
  bool converged = false;  // false = diverged; callers discard the configuration
};

enum class ViolationKind { undervoltage, overvoltage, overcurrent };

struct Violation {
  ViolationKind kind;
  std::string subject_id;  // node or branch id
  double delta;            // distance beyond the limit, p.u.; always > 0
};

struct OperationalLimits {
  std::vector<double> v_min;                  // per node index
  std::vector<double> v_max;                  // per node index
  std::vector<std::optional<double>> i_max;   // per branch index

  static OperationalLimits from_network(const Network& net) {
    OperationalLimits lim;
    lim.v_min.reserve(net.node_count());
    lim.v_max.reserve(net.node_count());
    for (const Node& n : net.nodes()) {
      lim.v_min.push_back(n.v_min);
      lim.v_max.push_back(n.v_max);
    }
    lim.i_max.reserve(net.branch_count());
    for (const Branch& b : net.branches()) lim.i_max.push_back(b.i_max);
    return lim;
  }
};

struct PenaltySpec {
  double undervoltage = 1e4;
  double overvoltage = 1e4;
  double overcurrent = 1e4;

  double for_kind(ViolationKind k) const {
    switch (k) {
      case ViolationKind::undervoltage: return undervoltage;
      case ViolationKind::overvoltage: return overvoltage;
      case ViolationKind::overcurrent: return overcurrent;
    }
    return 0.0;
  }

  void validate() const {
    if (!(undervoltage > 0) || !(overvoltage > 0) || !(overcurrent > 0))
      throw std::invalid_argument("penalty factors must be strictly positive");
  }
};

/// Backward/forward sweep on the radial tree: backward current aggregation
/// from the leaves, forward voltage update from the (collapsed) supply root.
/// Loads are constant power at nominal. A non-converged or non-finite sweep
/// returns converged = false; that outcome is a value, not an error.
inline PowerFlowResult solve_power_flow(const Network& net, const RadialConfiguration& cfg,
                                        const PowerFlowOptions& opts = {}) {
  if (opts.tol <= 0) throw std::invalid_argument("power flow: tol must be positive");
  if (opts.max_iter < 1) throw std::invalid_argument("power flow: max_iter must be >= 1");
  if (!is_radial(net, cfg))
    throw std::invalid_argument("power flow: configuration is not radial");

  const int cn = net.collapsed_count();
  const int nb = net.branch_count();

  // Orient the closed tree away from the collapsed root.
  std::vector<std::vector<std::pair<int, int>>> adj(cn);  // (child collapsed id, branch)
  for (int b = 0; b < nb; ++b) {
    if (cfg.is_open(b)) continue;
    const Branch& br = net.branches()[b];
    const int cu = net.collapsed_node(br.from);
    const int cv = net.collapsed_node(br.to);
    adj[cu].emplace_back(cv, b);
    adj[cv].emplace_back(cu, b);
  }

  std::vector<int> parent(cn, -1), parent_branch(cn, -1), order;
  order.reserve(cn);
  {
    std::vector<char> seen(cn, 0);
    std::vector<int> queue{0};
    seen[0] = 1;
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
      const int u = queue[qi];
      order.push_back(u);
      for (auto [v, b] : adj[u]) {
        if (seen[v]) continue;
        seen[v] = 1;
        parent[v] = u;
        parent_branch[v] = b;
        queue.push_back(v);
      }
    }
  }

  // Per collapsed node: lumped load and impedance of the branch to its parent.
  std::vector<std::complex<double>> load(cn, {0.0, 0.0});
  for (const Node& n : net.nodes()) {
    if (n.kind == NodeKind::load)
      load[net.collapsed_node(net.node_index(n.id))] += std::complex<double>(n.p_load, n.q_load);
  }
  std::vector<std::complex<double>> z(cn, {0.0, 0.0});
  for (int c = 1; c < cn; ++c) {
    const Branch& br = net.branches()[parent_branch[c]];
    z[c] = {br.resistance, br.reactance};
  }

  std::vector<std::complex<double>> v(cn, {opts.slack_v, 0.0});
  std::vector<std::complex<double>> flow(cn);  // current into node c via its parent branch

  PowerFlowResult out;
  for (int it = 1; it <= opts.max_iter; ++it) {
    // Backward: aggregate constant-power injection currents toward the root.
    for (int i = cn - 1; i >= 1; --i) {
      const int c = order[i];
      flow[c] = std::conj(load[c] / v[c]);
    }
    for (int i = cn - 1; i >= 1; --i) {
      const int c = order[i];
      if (parent[c] != 0) flow[parent[c]] += flow[c];
    }
    // Forward: propagate voltage drops from the root.
    double delta = 0.0;
    bool finite = true;
    for (int i = 1; i < cn; ++i) {
      const int c = order[i];
      const std::complex<double> vn = v[parent[c]] - z[c] * flow[c];
      delta = std::max(delta, std::abs(vn - v[c]));
      v[c] = vn;
      if (!std::isfinite(vn.real()) || !std::isfinite(vn.imag())) finite = false;
    }
    out.iterations = it;
    if (!finite) return out;  // diverged
    if (delta < opts.tol) {
      out.converged = true;
      break;
    }
  }
  if (!out.converged) return out;

  out.node_voltage.resize(net.node_count());
  for (int n = 0; n < net.node_count(); ++n) out.node_voltage[n] = v[net.collapsed_node(n)];
  out.branch_current.assign(nb, 0.0);
  for (int c = 1; c < cn; ++c) out.branch_current[parent_branch[c]] = std::abs(flow[c]);
  return out;
}

/// Total losses: sum of R_b * I_b^2 over the closed branches.
inline double total_losses(const Network& net, const PowerFlowResult& result,
                           const RadialConfiguration& cfg) {
  if (!result.converged)
    throw std::invalid_argument("total_losses: power flow did not converge");
  double p = 0.0;
  for (int b = 0; b < net.branch_count(); ++b) {
    if (cfg.is_open(b)) continue;
    const double i = result.branch_current[b];
    p += net.branches()[b].resistance * i * i;
  }
  return p;
}

/// One Violation per limit actually exceeded, in node-then-branch index order.
inline std::vector<Violation> compute_violations(const Network& net,
                                                 const PowerFlowResult& result,
                                                 const OperationalLimits& limits) {
  if (!result.converged)
    throw std::invalid_argument("compute_violations: power flow did not converge");
  std::vector<Violation> out;
  for (int n = 0; n < net.node_count(); ++n) {
    const double mag = std::abs(result.node_voltage[n]);
    if (mag < limits.v_min[n])
      out.push_back({ViolationKind::undervoltage, net.nodes()[n].id, limits.v_min[n] - mag});
    else if (mag > limits.v_max[n])
      out.push_back({ViolationKind::overvoltage, net.nodes()[n].id, mag - limits.v_max[n]});
  }
  for (int b = 0; b < net.branch_count(); ++b) {
    if (!limits.i_max[b]) continue;
    const double i = result.branch_current[b];
    if (i > *limits.i_max[b])
      out.push_back({ViolationKind::overcurrent, net.branches()[b].id, i - *limits.i_max[b]});
  }
  return out;
}

/// Multiplicative penalty term: 1 + sum of rho_i * delta_i^2.
inline double penalty_factor(const std::vector<Violation>& violations,
                             const PenaltySpec& penalties) {
  double s = 0.0;
  for (const Violation& v : violations) s += penalties.for_kind(v.kind) * v.delta * v.delta;
  return 1.0 + s;
}

/// Penalized objective f_p = P_tot * (1 + sum rho_i * delta_i^2), or nullopt
/// when the power flow diverges (the configuration is infeasible and gets
/// discarded by callers).
inline std::optional<double> penalized_objective(const Network& net,
                                                 const RadialConfiguration& cfg,
                                                 const OperationalLimits& limits,
                                                 const PenaltySpec& penalties,
                                                 const PowerFlowOptions& opts = {}) {
  const PowerFlowResult pf = solve_power_flow(net, cfg, opts);
  if (!pf.converged) return std::nullopt;
  const double p_tot = total_losses(net, pf, cfg);
  return p_tot * penalty_factor(compute_violations(net, pf, limits), penalties);
}

}  // namespace sdbench
