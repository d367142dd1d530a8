#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sdbench/errors.hpp"
#include "sdbench/network.hpp"
#include "sdbench/powerflow.hpp"
#include "sdbench/rng.hpp"

namespace sdbench {

// The reconfiguration problem as the solvers see it: an immutable network
// plus the penalized-objective closure. evaluate() is a pure function of the
// configuration, so distinct runs may share one Problem.
struct Problem {
  const Network* net = nullptr;
  OperationalLimits limits;
  PenaltySpec penalties;
  PowerFlowOptions pf;

  std::optional<double> evaluate(const RadialConfiguration& cfg) const {
    return penalized_objective(*net, cfg, limits, penalties, pf);
  }
};

inline Problem make_problem(const Network& net, PenaltySpec penalties = {},
                            PowerFlowOptions pf = {}) {
  penalties.validate();
  return Problem{&net, OperationalLimits::from_network(net), penalties, pf};
}

struct SaParams {
  double alpha = 0.95;  // cooling rate, in (0,1)
  int n_w = 10;         // worsening moves sampled when estimating c_0
  double p_0 = 0.5;     // target acceptance probability of the mean worsening
  int m_a = 200;        // internal cycle: configurations analyzed
  int m_c = 50;         // internal cycle: configurations accepted
  int n_s = 20;         // adaptive-stop window
  double stop_threshold = 0.0;

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0))
      throw std::invalid_argument("sa: alpha must lie in (0,1)");
    if (!(p_0 > 0.0 && p_0 < 1.0))
      throw std::invalid_argument("sa: p_0 must lie in (0,1)");
    if (n_w < 1) throw std::invalid_argument("sa: n_w must be >= 1");
    if (m_a < 1 || m_c < 1 || m_c > m_a)
      throw std::invalid_argument("sa: need 1 <= m_c <= m_a");
    if (n_s < 1) throw std::invalid_argument("sa: n_s must be >= 1");
    if (stop_threshold < 0) throw std::invalid_argument("sa: stop threshold must be >= 0");
  }
};

struct GaParams {
  int c_ga = 100;      // population size
  double p_c = 0.4;    // crossover probability
  double p_m = 0.001;  // per-gene mutation probability
  int n_s = 20;
  double stop_threshold = 0.0;

  void validate() const {
    if (c_ga < 2) throw std::invalid_argument("ga: population size must be >= 2");
    if (!(p_c >= 0.0 && p_c <= 1.0) || !(p_m >= 0.0 && p_m <= 1.0))
      throw std::invalid_argument("ga: probabilities must lie in [0,1]");
    if (n_s < 1) throw std::invalid_argument("ga: n_s must be >= 1");
    if (stop_threshold < 0) throw std::invalid_argument("ga: stop threshold must be >= 0");
  }
};

struct PsoParams {
  int c_pso = 100;       // swarm size
  double w_init = 0.9;   // initial inertia weight
  double w_final = 0.4;  // final inertia weight
  int n_s = 20;
  double stop_threshold = 0.0;

  void validate() const {
    if (c_pso < 2) throw std::invalid_argument("pso: swarm size must be >= 2");
    if (!(w_final > 0.0) || !(w_final <= w_init))
      throw std::invalid_argument("pso: need 0 < w_final <= w_init");
    if (n_s < 1) throw std::invalid_argument("pso: n_s must be >= 1");
    if (stop_threshold < 0) throw std::invalid_argument("pso: stop threshold must be >= 0");
  }
};

struct SolutionSample {
  std::string solver_id;
  std::string param_fingerprint;
  std::uint64_t seed = 0;
  RadialConfiguration best_config;
  double best_value = 0.0;
  long evaluations = 0;
  int iterations = 0;  // main cycles / generations
  double wall_time_s = 0.0;
  std::vector<double> best_history;  // best value after each iteration
  std::string error;                 // non-empty when the run failed
};

/// True when the best value improved by at most `threshold` across the last
/// n_s recorded iterations (the window spans the n_s most recent entries).
/// With the default threshold 0 this is the strict "best did not change"
/// criterion.
inline bool adaptive_stop(const std::vector<double>& best_history, int n_s,
                          double threshold) {
  if (n_s < 1) throw std::invalid_argument("adaptive_stop: n_s must be >= 1");
  if (threshold < 0) throw std::invalid_argument("adaptive_stop: threshold must be >= 0");
  const std::size_t len = best_history.size();
  if (len < static_cast<std::size_t>(n_s)) return false;
  return best_history[len - n_s] - best_history[len - 1] <= threshold;
}

/// Probability of accepting a candidate that is `delta` worse than the best
/// value at control parameter c: 1 for delta <= 0 and exp(-delta/c) otherwise,
/// vanishing as c -> 0+.
inline double sa_acceptance_probability(double delta, double c) {
  if (delta <= 0.0) return 1.0;
  if (c <= 0.0) return 0.0;
  return std::exp(-delta / c);
}

/// c_0 such that the mean worsening is accepted with probability p_0.
inline double c0_from_mean_worsening(double mean_worsening, double p_0) {
  if (!(p_0 > 0.0 && p_0 < 1.0))
    throw std::invalid_argument("c0_from_mean_worsening: p_0 must lie in (0,1)");
  return mean_worsening / std::log(1.0 / p_0);
}

namespace detail {

/// Random branch-exchange: close a random open branch, open a random other
/// branch on the created loop. nullopt when no exchange can change the
/// configuration.
inline std::optional<RadialConfiguration> random_exchange(const Network& net,
                                                          const RadialConfiguration& cfg,
                                                          Rng& rng) {
  if (cfg.open().empty()) return std::nullopt;
  std::vector<int> order = cfg.open();
  rng.shuffle(order);
  for (int close : order) {
    const std::vector<int> loop = detect_loop(net, cfg, close);
    if (loop.size() < 2) continue;  // closing joins two supplies: identity only
    const int open = loop[1 + rng.index(loop.size() - 1)];
    return branch_exchange(net, cfg, close, open);
  }
  return std::nullopt;
}

/// Exchange that moves `cfg` one step toward `target`: close a branch open
/// only in cfg, reopen a loop branch drawn from target's open set when one
/// lies on the loop.
inline std::optional<RadialConfiguration> targeted_exchange(const Network& net,
                                                            const RadialConfiguration& cfg,
                                                            const RadialConfiguration& target,
                                                            Rng& rng) {
  std::vector<int> closable;
  for (int b : cfg.open()) {
    if (!target.is_open(b)) closable.push_back(b);
  }
  if (closable.empty()) return std::nullopt;
  const int close = closable[rng.index(closable.size())];
  const std::vector<int> loop = detect_loop(net, cfg, close);
  if (loop.size() < 2) return std::nullopt;
  std::vector<int> donors;
  for (std::size_t i = 1; i < loop.size(); ++i) {
    if (target.is_open(loop[i])) donors.push_back(loop[i]);
  }
  const int open = donors.empty() ? loop[1 + rng.index(loop.size() - 1)]
                                  : donors[rng.index(donors.size())];
  return branch_exchange(net, cfg, close, open);
}

/// Number of gene-string positions where the two configurations differ.
inline int gene_difference(const RadialConfiguration& a, const RadialConfiguration& b) {
  int only_a = 0;
  for (int o : a.open()) {
    if (!b.is_open(o)) ++only_a;
  }
  return 2 * only_a;  // |open sets| are equal, so the difference is symmetric
}

inline std::pair<RadialConfiguration, double> feasible_random_config(const Problem& problem,
                                                                     Rng& rng,
                                                                     long& evaluations) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    RadialConfiguration cfg = random_radial_config(*problem.net, rng);
    ++evaluations;
    if (const std::optional<double> f = problem.evaluate(cfg)) return {std::move(cfg), *f};
  }
  throw NoFeasibleSolution("no power-flow-feasible configuration in 1000 random draws");
}

inline double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

/// Estimates the initial SA control parameter: walk by random exchanges
/// accepting every feasible move until n_w worsening moves are seen, then
/// c_0 = mean worsening / ln(1/p_0). Throws DegenerateProblem when the walk
/// cannot collect n_w worsenings.
inline double estimate_c0(const Problem& problem, const RadialConfiguration& start,
                          int n_w, double p_0, Rng& rng, long* evaluations = nullptr) {
  if (!(p_0 > 0.0 && p_0 < 1.0))
    throw std::invalid_argument("estimate_c0: p_0 must lie in (0,1)");
  if (n_w < 1) throw std::invalid_argument("estimate_c0: n_w must be >= 1");

  const std::optional<double> f0 = problem.evaluate(start);
  if (evaluations) ++*evaluations;
  if (!f0) throw std::invalid_argument("estimate_c0: start configuration is infeasible");

  RadialConfiguration cur = start;
  double f_cur = *f0;
  double sum = 0.0;
  int seen = 0;
  const long max_moves = std::max(1000L, 200L * n_w);
  for (long move = 0; move < max_moves && seen < n_w; ++move) {
    std::optional<RadialConfiguration> next = detail::random_exchange(*problem.net, cur, rng);
    if (!next) break;
    const std::optional<double> f = problem.evaluate(*next);
    if (evaluations) ++*evaluations;
    if (!f) continue;  // diverged, discarded
    const double delta = *f - f_cur;
    if (delta > 0.0) {
      sum += delta;
      ++seen;
    }
    cur = std::move(*next);
    f_cur = *f;
  }
  if (seen < n_w)
    throw DegenerateProblem("estimate_c0: fewer than " + std::to_string(n_w) +
                            " worsening moves reachable from the start configuration");
  return c0_from_mean_worsening(sum / n_w, p_0);
}

/// Simulated annealing. The main cycle decays c geometrically; each internal
/// cycle walks by random branch-exchanges from the best configuration so far,
/// always accepting improvements over the best and accepting a worsening
/// delta with probability exp(-delta/c), until m_a configurations were
/// analyzed or m_c accepted. Stops when the best value settles for n_s
/// main-cycle iterations.
inline SolutionSample run_sa(const Problem& problem, const SaParams& params,
                             std::uint64_t seed) {
  params.validate();
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(seed);
  SolutionSample out;
  out.solver_id = "sa";
  out.seed = seed;

  auto [best, f_best] = detail::feasible_random_config(problem, rng, out.evaluations);

  if (problem.net->open_branch_count() == 0) {
    out.best_config = best;
    out.best_value = f_best;
    out.best_history = {f_best};
    out.wall_time_s = detail::seconds_since(t0);
    return out;  // the network admits a single radial configuration
  }

  bool annealing = true;
  double c = 0.0;
  try {
    c = estimate_c0(problem, best, params.n_w, params.p_0, rng, &out.evaluations);
  } catch (const DegenerateProblem&) {
    annealing = false;  // frozen or flat landscape: greedy descent only
  }

  std::vector<double>& history = out.best_history;
  for (int m = 1;; ++m) {
    RadialConfiguration cur = best;
    int analyzed = 0;
    int accepted = 0;
    bool movable = true;
    while (analyzed < params.m_a && accepted < params.m_c) {
      std::optional<RadialConfiguration> cand = detail::random_exchange(*problem.net, cur, rng);
      if (!cand) {
        movable = false;
        break;
      }
      ++analyzed;
      const std::optional<double> f = problem.evaluate(*cand);
      ++out.evaluations;
      if (!f) continue;  // diverged configuration, discarded
      const double delta = *f - f_best;
      if (delta < 0.0) {
        best = *cand;
        f_best = *f;
        cur = std::move(*cand);
        ++accepted;
      } else if (annealing && rng.uniform() < sa_acceptance_probability(delta, c)) {
        cur = std::move(*cand);
        ++accepted;
      }
    }
    history.push_back(f_best);
    out.iterations = m;
    if (!movable || adaptive_stop(history, params.n_s, params.stop_threshold)) break;
    c *= params.alpha;
  }

  out.best_config = std::move(best);
  out.best_value = f_best;
  out.wall_time_s = detail::seconds_since(t0);
  return out;
}

namespace detail {

/// Offspring built from parent A by loop-repair toward parent B: branches
/// open only in A are closed one by one, reopening a loop branch from B's
/// open set when one exists (otherwise the branch stays open).
inline RadialConfiguration ga_crossover(const Network& net, const RadialConfiguration& a,
                                        const RadialConfiguration& b, Rng& rng) {
  RadialConfiguration child = a;
  std::vector<int> to_close;
  for (int o : a.open()) {
    if (!b.is_open(o)) to_close.push_back(o);
  }
  rng.shuffle(to_close);
  for (int o : to_close) {
    if (!child.is_open(o)) continue;
    const std::vector<int> loop = detect_loop(net, child, o);
    std::vector<int> donors;
    for (std::size_t i = 1; i < loop.size(); ++i) {
      if (b.is_open(loop[i])) donors.push_back(loop[i]);
    }
    if (donors.empty()) continue;
    child = branch_exchange(net, child, o, donors[rng.index(donors.size())]);
  }
  return child;
}

}  // namespace detail

/// Genetic algorithm over length-B gene strings (0 = open, 1 = closed).
/// Roulette selection on the minimization fitness (f_worst - f + eps),
/// elitism of one, radiality-preserving crossover with probability p_c and
/// one random branch-exchange per mutated gene (rate p_m per gene).
inline SolutionSample run_ga(const Problem& problem, const GaParams& params,
                             std::uint64_t seed) {
  params.validate();
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(seed);
  SolutionSample out;
  out.solver_id = "ga";
  out.seed = seed;

  struct Individual {
    RadialConfiguration cfg;
    double f;
  };
  std::vector<Individual> pop;
  pop.reserve(params.c_ga);
  std::size_t best_at = 0;
  for (int i = 0; i < params.c_ga; ++i) {
    auto [cfg, f] = detail::feasible_random_config(problem, rng, out.evaluations);
    pop.push_back({std::move(cfg), f});
    if (pop[i].f < pop[best_at].f) best_at = i;
  }
  RadialConfiguration best = pop[best_at].cfg;
  double f_best = pop[best_at].f;

  if (problem.net->open_branch_count() == 0) {
    out.best_config = best;
    out.best_value = f_best;
    out.best_history = {f_best};
    out.wall_time_s = detail::seconds_since(t0);
    return out;
  }

  constexpr double kFitnessFloor = 1e-12;
  const int genes = problem.net->branch_count();
  std::vector<double> cumulative(pop.size());
  std::vector<double>& history = out.best_history;

  for (int g = 1;; ++g) {
    double f_worst = pop[0].f;
    for (const Individual& ind : pop) f_worst = std::max(f_worst, ind.f);
    double total = 0.0;
    for (std::size_t i = 0; i < pop.size(); ++i) {
      total += f_worst - pop[i].f + kFitnessFloor;
      cumulative[i] = total;
    }
    auto roulette = [&]() -> const Individual& {
      const double u = rng.uniform() * total;
      const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
      const std::size_t i = std::min<std::size_t>(it - cumulative.begin(), pop.size() - 1);
      return pop[i];
    };

    std::vector<Individual> next;
    next.reserve(pop.size());
    next.push_back({best, f_best});  // elite
    while (next.size() < pop.size()) {
      const Individual& pa = roulette();
      const Individual& pb = roulette();
      RadialConfiguration cfg = rng.chance(params.p_c)
                                    ? detail::ga_crossover(*problem.net, pa.cfg, pb.cfg, rng)
                                    : pa.cfg;
      for (int gene = 0; gene < genes; ++gene) {
        if (!rng.chance(params.p_m)) continue;
        if (std::optional<RadialConfiguration> moved =
                detail::random_exchange(*problem.net, cfg, rng))
          cfg = std::move(*moved);
      }
      const std::optional<double> f = problem.evaluate(cfg);
      ++out.evaluations;
      if (f) {
        next.push_back({std::move(cfg), *f});
      } else {
        next.push_back(pa);  // diverged offspring discarded, parent survives
      }
      const Individual& added = next.back();
      if (added.f < f_best) {
        best = added.cfg;
        f_best = added.f;
      }
    }
    pop.swap(next);
    history.push_back(f_best);
    out.iterations = g;
    if (adaptive_stop(history, params.n_s, params.stop_threshold)) break;
  }

  out.best_config = std::move(best);
  out.best_value = f_best;
  out.wall_time_s = detail::seconds_since(t0);
  return out;
}

/// Particle swarm over gene strings. Per iteration each particle applies
/// round(w*A) random exchanges (inertia) plus targeted exchanges toward its
/// local best (memory) and the global best (cooperation), each scaled by
/// round((1-w) * gene-difference / 2); the inertia weight decays from w_init
/// to w_final on a natural-exponential schedule.
inline SolutionSample run_pso(const Problem& problem, const PsoParams& params,
                              std::uint64_t seed) {
  params.validate();
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(seed);
  SolutionSample out;
  out.solver_id = "pso";
  out.seed = seed;

  struct Particle {
    RadialConfiguration cfg;
    double f;
    RadialConfiguration best_cfg;
    double best_f;
  };
  std::vector<Particle> swarm;
  swarm.reserve(params.c_pso);
  std::size_t g_at = 0;
  for (int i = 0; i < params.c_pso; ++i) {
    auto [cfg, f] = detail::feasible_random_config(problem, rng, out.evaluations);
    swarm.push_back({cfg, f, cfg, f});
    if (swarm[i].best_f < swarm[g_at].best_f) g_at = i;
  }
  RadialConfiguration g_cfg = swarm[g_at].best_cfg;
  double g_f = swarm[g_at].best_f;

  const int a_count = problem.net->open_branch_count();
  if (a_count == 0) {
    out.best_config = g_cfg;
    out.best_value = g_f;
    out.best_history = {g_f};
    out.wall_time_s = detail::seconds_since(t0);
    return out;
  }

  constexpr double kInertiaHorizon = 100.0;  // iteration-budget estimate for the decay
  std::vector<double>& history = out.best_history;

  for (int m = 1;; ++m) {
    const double w = params.w_final + (params.w_init - params.w_final) *
                                          std::exp(-4.0 * m / kInertiaHorizon);
    for (Particle& p : swarm) {
      RadialConfiguration cand = p.cfg;
      const long inertia_moves = std::lround(w * a_count);
      for (long k = 0; k < inertia_moves; ++k) {
        std::optional<RadialConfiguration> moved = detail::random_exchange(*problem.net, cand, rng);
        if (!moved) break;
        cand = std::move(*moved);
      }
      for (const RadialConfiguration* target : {&p.best_cfg, &g_cfg}) {
        const long moves =
            std::lround((1.0 - w) * detail::gene_difference(cand, *target) / 2.0);
        for (long k = 0; k < moves; ++k) {
          std::optional<RadialConfiguration> moved =
              detail::targeted_exchange(*problem.net, cand, *target, rng);
          if (!moved) break;
          cand = std::move(*moved);
        }
      }
      const std::optional<double> f = problem.evaluate(cand);
      ++out.evaluations;
      if (!f) continue;  // diverged move bundle, particle holds its position
      p.cfg = std::move(cand);
      p.f = *f;
      if (*f < p.best_f) {
        p.best_cfg = p.cfg;
        p.best_f = *f;
      }
      if (*f < g_f) {
        g_cfg = p.cfg;
        g_f = *f;
      }
    }
    history.push_back(g_f);
    out.iterations = m;
    if (adaptive_stop(history, params.n_s, params.stop_threshold)) break;
  }

  out.best_config = std::move(g_cfg);
  out.best_value = g_f;
  out.wall_time_s = detail::seconds_since(t0);
  return out;
}

// One cell of a parameter grid: a fingerprint such as "alpha=0.95" plus the
// seeded run it stands for.
struct ParameterCell {
  std::string fingerprint;
  std::function<SolutionSample(std::uint64_t seed)> run;
};

/// Runs h_s samples over the cell schedule: run k executes cell (k mod G)
/// with seed base_seed + floor(k/G), so one full grid pass keeps the base
/// seed fixed for every cell and further passes derive fresh seeds. Samples
/// are returned in execution order.
inline std::vector<SolutionSample> collect_solutions(const std::vector<ParameterCell>& cells,
                                                     int h_s, std::uint64_t base_seed) {
  if (cells.empty()) throw std::invalid_argument("collect_solutions: no parameter cells");
  if (h_s < 1) throw std::invalid_argument("collect_solutions: H_s must be >= 1");
  std::vector<SolutionSample> out;
  out.reserve(h_s);
  const std::size_t g = cells.size();
  for (int k = 0; k < h_s; ++k) {
    const ParameterCell& cell = cells[static_cast<std::size_t>(k) % g];
    SolutionSample s = cell.run(base_seed + static_cast<std::uint64_t>(k) / g);
    s.param_fingerprint = cell.fingerprint;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace sdbench
