#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "acll/errors.hpp"
#include "acll/network.hpp"
#include "acll/ownership.hpp"

namespace acll {

enum class Granularity { global, per_layer };

/// The compression knob theta. Global granularity gives one fraction for the
/// whole trunk; per-layer gives one fraction per trunk weight matrix.
struct CompressionParams {
  std::vector<double> theta;
  Granularity granularity = Granularity::global;

  void validate(std::size_t n_layers) const {
    const std::size_t want = granularity == Granularity::global ? 1 : n_layers;
    if (theta.size() != want)
      throw InvalidSpecError("CompressionParams: theta has dimension " +
                             std::to_string(theta.size()) + ", expected " +
                             std::to_string(want));
    for (double t : theta)
      if (!(t >= 0.0 && t <= 1.0))
        throw InvalidSpecError("CompressionParams: theta components must lie in [0,1]");
  }
};

struct PruneResult {
  Mask retained;
  std::size_t pruned_count = 0;
};

namespace detail {

// Zeroes the floor(theta*n) smallest-magnitude weights among `candidates`
// (flat indices, free prunable weights of one group). Ties break toward the
// lower flat index. Survivors are flagged in `retained`.
inline std::size_t prune_group(Network& net, const std::vector<std::size_t>& candidates,
                               double theta, Mask& retained) {
  const std::size_t n = candidates.size();
  const std::size_t n_prune = static_cast<std::size_t>(std::floor(theta * static_cast<double>(n)));
  std::vector<std::size_t> order = candidates;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ma = std::fabs(net.weights[a]);
    const double mb = std::fabs(net.weights[b]);
    if (ma != mb) return ma < mb;
    return a < b;
  });
  for (std::size_t k = 0; k < n_prune; ++k) net.weights[order[k]] = 0.0;
  for (std::size_t k = n_prune; k < n; ++k) retained[order[k]] = 1;
  return n_prune;
}

}  // namespace detail

/// Magnitude pruning of the newest task's free weights. Zeroes the requested
/// fraction per group inside the network and returns the survivor mask. Free
/// trunk biases are never zeroed and always come back retained; owned weights
/// and head slices are untouched and never appear in the mask.
inline PruneResult prune(Network& net, const OwnershipMap& map, int task_id,
                         const CompressionParams& params) {
  if (task_id != map.n_tasks)
    throw SequencingError("prune: only the newest task compresses");
  if (map.owner.size() != net.weights.size())
    throw ShapeError("prune: ledger length != weight vector length");
  params.validate(net.n_trunk_layers());

  PruneResult result;
  result.retained.assign(net.weights.size(), 0);

  if (params.granularity == Granularity::global) {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < net.weights.size(); ++i)
      if (map.owner[i] == 0 && map.prunable[i]) candidates.push_back(i);
    result.pruned_count =
        detail::prune_group(net, candidates, params.theta[0], result.retained);
  } else {
    for (std::size_t l = 0; l < net.n_trunk_layers(); ++l) {
      std::size_t b, e;
      net.trunk_layer_range(l, b, e);
      std::vector<std::size_t> candidates;
      for (std::size_t i = b; i < e; ++i)
        if (map.owner[i] == 0 && map.prunable[i]) candidates.push_back(i);
      result.pruned_count +=
          detail::prune_group(net, candidates, params.theta[l], result.retained);
    }
  }

  // Free biases ride along with whatever survives.
  for (std::size_t i = 0; i < net.trunk_size(); ++i)
    if (map.owner[i] == 0 && !map.prunable[i]) result.retained[i] = 1;
  return result;
}

/// Fraction of the shared weight pool this retention claims: newly retained
/// prunable weights over all prunable weights. Heads and biases sit outside
/// both counts.
inline double size_of(const Mask& retained, const OwnershipMap& map, int /*task_id*/) {
  if (retained.size() != map.owner.size())
    throw ShapeError("size_of: mask length != ledger length");
  std::size_t kept = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < retained.size(); ++i) {
    if (!map.prunable[i]) continue;
    ++total;
    if (retained[i]) ++kept;
  }
  if (total == 0) return 0.0;
  return static_cast<double>(kept) / static_cast<double>(total);
}

}  // namespace acll
