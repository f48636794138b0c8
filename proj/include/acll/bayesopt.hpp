#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "acll/detail/random.hpp"
#include "acll/errors.hpp"
#include "acll/gp.hpp"

#include <json.hpp>

namespace acll {

/// size + lambda * risk, the inner objective of the dual search.
inline double lagrangian_objective(double size, double risk, double lambda) {
  if (lambda < 0.0) throw InvalidMultiplierError("lagrangian_objective: lambda must be >= 0");
  return size + lambda * risk;
}

namespace detail {

inline std::string canonical_theta_key(const std::vector<double>& theta) {
  std::string key;
  char buf[32];
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (i) key.push_back(',');
    std::snprintf(buf, sizeof(buf), "%.12f", theta[i]);
    key += buf;
  }
  return key;
}

}  // namespace detail

/// Append-only store of every (theta, size, risk) measurement made during one
/// dual search. Keys are fixed-precision renderings of theta so acquisition
/// jitter cannot trigger duplicate evaluations.
class EvalCache {
 public:
  struct Entry {
    std::vector<double> theta;
    double size = 0.0;
    double risk = 0.0;
    std::size_t eval_cost = 0;  // evaluation counter at insertion
  };

  bool contains(const std::vector<double>& theta) const {
    return index_.count(detail::canonical_theta_key(theta)) != 0;
  }

  const Entry* find(const std::vector<double>& theta) const {
    auto it = index_.find(detail::canonical_theta_key(theta));
    return it == index_.end() ? nullptr : &entries_[it->second];
  }

  void insert(const std::vector<double>& theta, double size, double risk) {
    const std::string key = detail::canonical_theta_key(theta);
    if (index_.count(key))
      throw InvalidStateError("EvalCache: duplicate entry for theta key " + key);
    index_.emplace(key, entries_.size());
    entries_.push_back({theta, size, risk, entries_.size() + 1});
  }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  /// Entries in evaluation order.
  const std::vector<Entry>& entries() const { return entries_; }

  /// JSON-lines audit dump, one object per evaluation in order.
  void dump_jsonl(std::ostream& os) const {
    for (const auto& e : entries_) {
      nlohmann::ordered_json j;
      j["theta"] = e.theta;
      j["size"] = e.size;
      j["risk"] = e.risk;
      os << j.dump() << '\n';
    }
  }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Re-weights every cached measurement into Lagrangian values for a new
/// lambda. Costs no model evaluations.
inline std::pair<std::vector<std::vector<double>>, std::vector<double>> seed_from_cache(
    const EvalCache& cache, double lambda) {
  if (lambda < 0.0) throw InvalidMultiplierError("seed_from_cache: lambda must be >= 0");
  std::vector<std::vector<double>> points;
  std::vector<double> values;
  points.reserve(cache.size());
  values.reserve(cache.size());
  for (const auto& e : cache.entries()) {
    points.push_back(e.theta);
    values.push_back(e.size + lambda * e.risk);
  }
  return {std::move(points), std::move(values)};
}

struct BoBudget {
  int n_init = 6;
  int n_iter = 10;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_init < 2) throw InvalidSpecError("BoBudget: n_init must be >= 2");
    if (n_iter < 1) throw InvalidSpecError("BoBudget: n_iter must be >= 1");
  }
};

struct BoResult {
  std::vector<double> theta;
  double objective = 0.0;
};

using EvalFn = std::function<std::pair<double, double>(const std::vector<double>&)>;

namespace detail {

inline void cached_evaluate(const EvalFn& evaluate, const std::vector<double>& theta,
                            EvalCache& cache) {
  std::pair<double, double> sr;
  try {
    sr = evaluate(theta);
  } catch (const EvaluationError&) {
    throw;
  } catch (const std::exception& ex) {
    throw EvaluationError(theta, ex.what());
  }
  cache.insert(theta, sr.first, sr.second);
}

inline double halton(std::uint64_t index, std::uint64_t base) {
  double f = 1.0;
  double r = 0.0;
  while (index > 0) {
    f /= static_cast<double>(base);
    r += f * static_cast<double>(index % base);
    index /= base;
  }
  return r;
}

// Initial design: the unit-cube corners 0 and 1 first (they anchor the dual
// search), then the interior. d=1 is an even grid over [0,1]; d>1 continues
// with a Halton sequence.
inline std::vector<double> design_point(int k, int n_init, std::size_t d) {
  static const std::uint64_t primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29};
  if (k == 0) return std::vector<double>(d, 0.0);
  if (k == 1) return std::vector<double>(d, 1.0);
  if (d == 1) {
    return {static_cast<double>(k - 1) / static_cast<double>(n_init - 1)};
  }
  std::vector<double> p(d);
  for (std::size_t j = 0; j < d; ++j)
    p[j] = halton(static_cast<std::uint64_t>(k - 1), primes[j % 10]);
  return p;
}

}  // namespace detail

/// One Lagrangian subproblem: minimize size + lambda*risk over theta in
/// [0,1]^dim with a GP surrogate and expected improvement, sharing `cache`
/// with every other lambda round. Returns the best entry over the whole
/// cache, not just this call's evaluations.
inline BoResult bo_minimize(const EvalFn& evaluate, double lambda, EvalCache& cache,
                            const BoBudget& budget, std::size_t dim = 1) {
  if (lambda < 0.0) throw InvalidMultiplierError("bo_minimize: lambda must be >= 0");
  if (dim < 1) throw InvalidSpecError("bo_minimize: dimension must be >= 1");
  budget.validate();

  // (b) top up the initial design from a low-discrepancy sequence
  int k = 0;
  while (cache.size() < static_cast<std::size_t>(budget.n_init)) {
    if (dim == 1 && k >= budget.n_init) break;
    std::vector<double> theta = detail::design_point(k, budget.n_init, dim);
    ++k;
    if (cache.contains(theta)) continue;
    detail::cached_evaluate(evaluate, theta, cache);
  }

  // (c) acquisition-driven rounds
  detail::Rng rng(detail::derive_seed(budget.seed, 0xb0));
  for (int iter = 0; iter < budget.n_iter; ++iter) {
    auto [points, values] = seed_from_cache(cache, lambda);
    const GpModel model = fit_gp(points, values, default_gp_hyper(values));
    const double best = *std::min_element(values.begin(), values.end());

    std::vector<double> candidate;
    double candidate_ei = -1.0;
    if (dim == 1) {
      for (int g = 0; g <= 1000; ++g) {
        const std::vector<double> x{static_cast<double>(g) / 1000.0};
        if (cache.contains(x)) continue;
        const double ei = expected_improvement(model, x, best);
        if (ei > candidate_ei) {
          candidate_ei = ei;
          candidate = x;
        }
      }
    } else {
      std::vector<std::vector<double>> starts(256, std::vector<double>(dim));
      for (auto& s : starts)
        for (auto& c : s) c = rng.uniform();
      std::vector<double> incumbent;
      double incumbent_ei = -1.0;
      for (const auto& s : starts) {
        const double ei = expected_improvement(model, s, best);
        if (ei > incumbent_ei) {
          incumbent_ei = ei;
          incumbent = s;
        }
      }
      // coordinate refinement passes over a fixed per-axis grid
      for (int pass = 0; pass < 3; ++pass) {
        bool moved = false;
        for (std::size_t j = 0; j < dim; ++j) {
          std::vector<double> trial = incumbent;
          for (int g = 0; g <= 100; ++g) {
            trial[j] = static_cast<double>(g) / 100.0;
            const double ei = expected_improvement(model, trial, best);
            if (ei > incumbent_ei) {
              incumbent_ei = ei;
              incumbent[j] = trial[j];
              moved = true;
            }
          }
        }
        if (!moved) break;
      }
      // prefer the refined point, fall back through the multistart pool
      std::vector<std::pair<double, std::vector<double>>> ranked;
      ranked.emplace_back(incumbent_ei, incumbent);
      for (const auto& s : starts) ranked.emplace_back(expected_improvement(model, s, best), s);
      std::stable_sort(ranked.begin(), ranked.end(),
                       [](const auto& a, const auto& b) { return a.first > b.first; });
      for (const auto& [ei, x] : ranked) {
        if (!cache.contains(x)) {
          candidate_ei = ei;
          candidate = x;
          break;
        }
      }
    }
    if (candidate.empty()) break;
    detail::cached_evaluate(evaluate, candidate, cache);
  }

  // (d) incumbent over the whole cache
  if (cache.empty()) throw InvalidStateError("bo_minimize: cache empty after search");
  BoResult result;
  double best_obj = 0.0;
  bool first = true;
  for (const auto& e : cache.entries()) {
    const double obj = e.size + lambda * e.risk;
    if (first || obj < best_obj) {
      best_obj = obj;
      result.theta = e.theta;
      first = false;
    }
  }
  result.objective = best_obj;
  return result;
}

}  // namespace acll
