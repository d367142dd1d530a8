#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sdbench {

struct SolutionSet {
  std::string label;
  std::vector<double> values;  // objective values y, p.u.
};

// Step CDF of a solver's H objective values, ascending, step width 1/H.
class EmpiricalCdf {
 public:
  explicit EmpiricalCdf(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty())
      throw std::invalid_argument("empirical CDF requires at least one value");
    for (double v : values_) {
      if (!std::isfinite(v))
        throw std::invalid_argument("empirical CDF values must be finite");
    }
    std::stable_sort(values_.begin(), values_.end());
  }

  std::size_t size() const { return values_.size(); }
  double step() const { return 1.0 / static_cast<double>(values_.size()); }
  const std::vector<double>& values() const { return values_; }

  /// z-th smallest value, z in [1, H].
  double value_at(std::size_t z) const { return values_.at(z - 1); }

  /// F(y): fraction of values <= y.
  double evaluate(double y) const {
    const auto it = std::upper_bound(values_.begin(), values_.end(), y);
    return static_cast<double>(it - values_.begin()) * step();
  }

 private:
  std::vector<double> values_;
};

inline EmpiricalCdf build_cdf(std::vector<double> values) {
  return EmpiricalCdf(std::move(values));
}

enum class ReferenceKind { global, relative };

// Dominating CDF used as the comparison baseline: the replicated global
// optimum (Case G) or the pooled best-H of all solvers (Case R).
struct ReferenceCdf {
  ReferenceKind kind;
  EmpiricalCdf cdf;
  double y_global = std::numeric_limits<double>::quiet_NaN();  // kind == global only
};

namespace detail {
inline void require_equal_h(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    throw std::invalid_argument(std::string(what) +
                                ": CDFs must hold the same number of solutions");
}
}  // namespace detail

/// Every value of `a` strictly beats every value of `b`.
inline bool deterministic_dominance(const SolutionSet& a, const SolutionSet& b) {
  if (a.values.empty() || b.values.empty())
    throw std::invalid_argument("deterministic_dominance: empty solution set");
  return *std::max_element(a.values.begin(), a.values.end()) <
         *std::min_element(b.values.begin(), b.values.end());
}

/// F_a(y) >= F_b(y) everywhere with strict inequality somewhere. For equal-H
/// step CDFs this is the elementwise test y_a(z) <= y_b(z) with a strict <
/// at some rank.
inline bool first_order_dominates(const EmpiricalCdf& fa, const EmpiricalCdf& fb) {
  detail::require_equal_h(fa.size(), fb.size(), "first_order_dominates");
  bool strict = false;
  for (std::size_t i = 0; i < fa.size(); ++i) {
    if (fa.values()[i] > fb.values()[i]) return false;
    if (fa.values()[i] < fb.values()[i]) strict = true;
  }
  return strict;
}

/// Integral of (F_a - F_b) from below stays >= 0 everywhere and is > 0
/// somewhere. The integrand is piecewise constant, so the integral is
/// piecewise linear and extremal at the merged breakpoints.
inline bool second_order_dominates(const EmpiricalCdf& fa, const EmpiricalCdf& fb) {
  detail::require_equal_h(fa.size(), fb.size(), "second_order_dominates");
  std::vector<double> merged;
  merged.reserve(fa.size() + fb.size());
  merged.insert(merged.end(), fa.values().begin(), fa.values().end());
  merged.insert(merged.end(), fb.values().begin(), fb.values().end());
  std::sort(merged.begin(), merged.end());

  double integral = 0.0;
  bool strict = false;
  for (std::size_t i = 1; i < merged.size(); ++i) {
    integral += (fa.evaluate(merged[i - 1]) - fb.evaluate(merged[i - 1])) *
                (merged[i] - merged[i - 1]);
    if (integral < 0.0) return false;
    if (integral > 0.0) strict = true;
  }
  return strict;
}

/// Case-G reference: the global optimum replicated H times.
inline ReferenceCdf reference_cdf_global(double y_g, std::size_t h) {
  if (h < 1) throw std::invalid_argument("reference_cdf_global: H must be >= 1");
  return ReferenceCdf{ReferenceKind::global,
                      EmpiricalCdf(std::vector<double>(h, y_g)), y_g};
}

struct RelativeReference {
  ReferenceCdf reference;
  std::vector<SolutionSet> trimmed;  // each solver's best H values, input order
};

/// Case-R reference: H = min_s H_s; each solver keeps its best H values
/// (rewarding faster solvers that produced more samples); the reference is
/// the best H of the pooled M*H values. Ties at the pool boundary keep the
/// earliest samples in pool order (solver order, then within-solver rank).
inline RelativeReference reference_cdf_relative(const std::vector<SolutionSet>& sets) {
  if (sets.size() < 2)
    throw std::invalid_argument("reference_cdf_relative: at least two solvers required");
  std::size_t h = std::numeric_limits<std::size_t>::max();
  for (const SolutionSet& s : sets) {
    if (s.values.empty())
      throw std::invalid_argument("reference_cdf_relative: empty solution set '" +
                                  s.label + "'");
    h = std::min(h, s.values.size());
  }

  RelativeReference out{ReferenceCdf{ReferenceKind::relative,
                                     EmpiricalCdf(std::vector<double>(1, 0.0)), 0.0},
                        {}};
  std::vector<double> pool;
  pool.reserve(sets.size() * h);
  for (const SolutionSet& s : sets) {
    const EmpiricalCdf cdf = build_cdf(s.values);
    std::vector<double> best(cdf.values().begin(), cdf.values().begin() + h);
    pool.insert(pool.end(), best.begin(), best.end());
    out.trimmed.push_back(SolutionSet{s.label, std::move(best)});
  }
  std::stable_sort(pool.begin(), pool.end());
  pool.resize(h);
  out.reference =
      ReferenceCdf{ReferenceKind::relative, EmpiricalCdf(std::move(pool)),
                   std::numeric_limits<double>::quiet_NaN()};
  return out;
}

/// Strip sum (1/H) * sum_z (y_s(z) - y_ref(z)); for a Case-G reference this
/// equals mean(y_s) - y_G up to rounding. Negative values mean the reference
/// does not dominate and are reported as an error.
inline double area_vs_reference(const EmpiricalCdf& fs, const ReferenceCdf& ref) {
  detail::require_equal_h(fs.size(), ref.cdf.size(), "area_vs_reference");
  double sum = 0.0;
  for (std::size_t i = 0; i < fs.size(); ++i) sum += fs.values()[i] - ref.cdf.values()[i];
  const double area = sum / static_cast<double>(fs.size());
  if (area < 0.0)
    throw std::domain_error("area_vs_reference: negative area; the reference CDF "
                            "does not dominate the test CDF");
  return area;
}

/// 1 / (1 + area): 1 for a null area, in (0,1] for any non-negative area.
inline double opisd(double area) {
  if (area < 0.0) throw std::domain_error("opisd: area must be non-negative");
  return 1.0 / (1.0 + area);
}

/// Percentage of solutions on the reference CDF. Case G: values within eps
/// of the global optimum. Case R: greedy multiset match of the sorted values
/// against the reference entries, each entry consumable once.
inline double perc(const EmpiricalCdf& fs, const ReferenceCdf& ref, double eps = 0.0) {
  detail::require_equal_h(fs.size(), ref.cdf.size(), "perc");
  if (eps < 0.0) throw std::invalid_argument("perc: eps must be >= 0");
  const std::size_t h = fs.size();
  std::size_t matches = 0;
  if (ref.kind == ReferenceKind::global) {
    for (double v : fs.values()) {
      if (std::abs(v - ref.y_global) <= eps) ++matches;
    }
  } else {
    const std::vector<double>& sv = fs.values();
    const std::vector<double>& rv = ref.cdf.values();
    std::size_t i = 0, j = 0;
    while (i < h && j < h) {
      if (std::abs(sv[i] - rv[j]) <= eps) {
        ++matches;
        ++i;
        ++j;
      } else if (sv[i] < rv[j]) {
        ++i;
      } else {
        ++j;
      }
    }
  }
  return 100.0 * static_cast<double>(matches) / static_cast<double>(h);
}

struct SolverScore {
  std::string label;
  double perc_pct = 0.0;
  double area = 0.0;   // p.u.
  double opisd = 0.0;  // recomputed as 1/(1+area) by rank_solvers
  int rank = 0;
};

/// Orders a comparison group built against one shared reference: descending
/// OPISD (equivalently ascending area), ties broken by label.
inline std::vector<SolverScore> rank_solvers(std::vector<SolverScore> scores) {
  if (scores.empty()) throw std::invalid_argument("rank_solvers: empty group");
  for (SolverScore& s : scores) s.opisd = opisd(s.area);
  std::stable_sort(scores.begin(), scores.end(),
                   [](const SolverScore& a, const SolverScore& b) {
                     if (a.area != b.area) return a.area < b.area;
                     return a.label < b.label;
                   });
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i].rank = static_cast<int>(i + 1);
  return scores;
}

}  // namespace sdbench
