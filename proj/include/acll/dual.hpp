#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "acll/bayesopt.hpp"
#include "acll/errors.hpp"
#include "acll/pruning.hpp"

#include <json.hpp>

namespace acll {

struct DualSearchConfig {
  double epsilon = 0.02;
  double lambda_lo = 0.0;
  double lambda_hi = 64.0;
  double lambda_tol = 0.01;
  int max_rounds = 12;
  BoBudget bo_budget;

  void validate() const {
    if (epsilon < 0.0) throw InvalidSpecError("DualSearchConfig: epsilon must be >= 0");
    if (lambda_lo < 0.0) throw InvalidSpecError("DualSearchConfig: lambda_lo must be >= 0");
    if (!(lambda_hi > lambda_lo))
      throw InvalidSpecError("DualSearchConfig: lambda_hi must exceed lambda_lo");
    if (!(lambda_tol > 0.0)) throw InvalidSpecError("DualSearchConfig: lambda_tol must be > 0");
    if (max_rounds < 1) throw InvalidSpecError("DualSearchConfig: max_rounds must be >= 1");
    bo_budget.validate();
  }
};

struct DualRound {
  int round = 0;
  double lambda = 0.0;
  std::vector<double> theta;
  double size = 0.0;
  double risk = 0.0;
  double violation = 0.0;
};

struct DualIncumbent {
  std::vector<double> theta;
  double size = 0.0;
  double risk = 0.0;
};

struct DualState {
  int rounds_run = 0;
  bool bracket_converged = false;
  std::optional<DualIncumbent> incumbent;
  std::vector<DualRound> trail;
};

struct DualResult {
  CompressionParams theta;
  double size = 0.0;
  double risk = 0.0;
  double lambda_final = 0.0;
  bool infeasible = false;
  DualState state;
};

/// Evaluated dual function over the cache: g(lambda) = min size + lambda*risk.
inline double dual_value(const EvalCache& cache, double lambda) {
  if (lambda < 0.0) throw InvalidMultiplierError("dual_value: lambda must be >= 0");
  if (cache.empty()) throw InvalidStateError("dual_value: empty cache");
  double best = 0.0;
  bool first = true;
  for (const auto& e : cache.entries()) {
    const double obj = e.size + lambda * e.risk;
    if (first || obj < best) {
      best = obj;
      first = false;
    }
  }
  return best;
}

/// Constrained selection: minimize size subject to risk <= reference_risk +
/// epsilon, by bisecting the multiplier on the sign of the constraint
/// violation at each round's inner minimizer. Every measurement lands in
/// `cache`; the final answer is the smallest feasible cached point, whatever
/// round produced it. If nothing cached is feasible the result carries
/// theta = 0 and the infeasible flag.
inline DualResult acll_select(const EvalFn& evaluate, double reference_risk,
                              const DualSearchConfig& cfg, EvalCache& cache,
                              std::size_t dim = 1) {
  cfg.validate();
  if (!(reference_risk >= 0.0 && reference_risk <= 1.0))
    throw InvalidSpecError("acll_select: reference_risk must lie in [0,1]");

  const double threshold = reference_risk + cfg.epsilon;
  double lo = cfg.lambda_lo;
  double hi = cfg.lambda_hi;
  bool doubled = false;
  bool retry_at_hi = false;
  double last_lambda = cfg.lambda_lo;

  DualState state;
  for (int t = 0; t < cfg.max_rounds; ++t) {
    double lambda;
    if (t == 0) {
      lambda = cfg.lambda_lo;
    } else if (t == 1 || retry_at_hi) {
      lambda = hi;
      retry_at_hi = false;
    } else {
      lambda = 0.5 * (lo + hi);
    }
    last_lambda = lambda;

    BoBudget budget = cfg.bo_budget;
    budget.seed = detail::derive_seed(cfg.bo_budget.seed, static_cast<std::uint64_t>(t));
    const BoResult r = bo_minimize(evaluate, lambda, cache, budget, dim);
    const EvalCache::Entry* entry = cache.find(r.theta);
    if (!entry) throw InvalidStateError("acll_select: minimizer missing from cache");
    const double v = entry->risk - threshold;
    state.trail.push_back({t, lambda, entry->theta, entry->size, entry->risk, v});
    state.rounds_run = t + 1;

    if (v > 0.0) {
      lo = lambda;
      if (t >= 1 && lambda >= hi && !doubled) {
        // top end of the bracket is still infeasible: stretch it once
        doubled = true;
        retry_at_hi = true;
        hi = 2.0 * lambda;
      }
    } else {
      hi = lambda;
      if (!state.incumbent || entry->size < state.incumbent->size)
        state.incumbent = DualIncumbent{entry->theta, entry->size, entry->risk};
    }

    const double width = hi - lo;
    if (width <= 0.0 || (hi > 0.0 && width / hi < cfg.lambda_tol)) {
      state.bracket_converged = true;
      break;
    }
  }

  // Final step: best evidence wins, regardless of which lambda produced it.
  DualResult result;
  result.state = state;
  result.lambda_final = state.incumbent ? hi : last_lambda;

  const EvalCache::Entry* chosen = nullptr;
  for (const auto& e : cache.entries())
    if (e.risk <= threshold && (!chosen || e.size < chosen->size)) chosen = &e;

  if (chosen) {
    result.theta.theta = chosen->theta;
    result.size = chosen->size;
    result.risk = chosen->risk;
  } else {
    result.infeasible = true;
    const std::vector<double> zero(dim, 0.0);
    if (!cache.contains(zero)) detail::cached_evaluate(evaluate, zero, cache);
    const EvalCache::Entry* anchor = cache.find(zero);
    result.theta.theta = zero;
    result.size = anchor->size;
    result.risk = anchor->risk;
  }
  result.theta.granularity = dim == 1 ? Granularity::global : Granularity::per_layer;
  return result;
}

inline nlohmann::ordered_json dual_round_to_json(const DualRound& r) {
  nlohmann::ordered_json j;
  j["round"] = r.round;
  j["lambda"] = r.lambda;
  j["theta"] = r.theta;
  j["size"] = r.size;
  j["risk"] = r.risk;
  j["violation"] = r.violation;
  return j;
}

}  // namespace acll
