#pragma once

#include "acll/dataset.hpp"
#include "acll/errors.hpp"
#include "acll/network.hpp"

namespace acll {

struct RiskReading {
  double risk = 0.0;
  int n_samples = 0;
  int task_id = 0;
};

/// Empirical 0-1 risk of the masked network on one split.
inline RiskReading zero_one_risk(const Network& net, const Mask& mask, int task_id,
                                 const DatasetSplit& split) {
  if (split.size() == 0) throw InvalidDataError("zero_one_risk: empty split");
  const std::vector<int> predicted = predict_labels(net, mask, task_id, split);
  int wrong = 0;
  for (std::size_t r = 0; r < split.size(); ++r)
    if (predicted[r] != split.labels[r]) ++wrong;
  RiskReading reading;
  reading.risk = static_cast<double>(wrong) / static_cast<double>(split.size());
  reading.n_samples = static_cast<int>(split.size());
  reading.task_id = task_id;
  return reading;
}

}  // namespace acll
