#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "acll/bayesopt.hpp"
#include "acll/dataset.hpp"
#include "acll/dual.hpp"
#include "acll/errors.hpp"
#include "acll/network.hpp"
#include "acll/ownership.hpp"
#include "acll/pruning.hpp"
#include "acll/risk.hpp"

namespace acll {

struct TaskSpec {
  std::string name;
  TaskDataset dataset;
  TrainConfig train_cfg;
  TrainConfig finetune_cfg;
};

enum class StrategyKind { acll, fixed, finetune, independent };

struct Strategy {
  StrategyKind kind = StrategyKind::acll;
  double epsilon = 0.02;  // acll only
  double rate = 0.5;      // fixed only
  std::string name = "acll";
};

inline const char* strategy_kind_name(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::acll: return "acll";
    case StrategyKind::fixed: return "fixed";
    case StrategyKind::finetune: return "finetune";
    case StrategyKind::independent: return "independent";
  }
  return "?";
}

inline StrategyKind strategy_kind_from_string(const std::string& s) {
  if (s == "acll") return StrategyKind::acll;
  if (s == "fixed") return StrategyKind::fixed;
  if (s == "finetune") return StrategyKind::finetune;
  if (s == "independent") return StrategyKind::independent;
  throw InvalidSpecError("unknown strategy '" + s + "'");
}

struct RunParams {
  std::vector<int> layer_dims{2, 64, 64};
  DualSearchConfig dual;
  Granularity granularity = Granularity::global;
};

struct TaskRecord {
  int task_id = 0;
  std::string name;
  std::vector<double> theta;
  double size = 0.0;
  double reference_risk = 0.0;
  double val_risk = 0.0;  // post-prune, post-finetune, on validation
  double acc_post_task = 0.0;
  double acc_end_of_sequence = 0.0;
  double owned_fraction_after = 0.0;
  std::size_t risk_evals = 0;
  bool infeasible = false;
  bool bracket_converged = false;
  double lambda_final = 0.0;
  std::vector<DualRound> trail;
  std::vector<EvalCache::Entry> cache_entries;
  std::vector<int> predictions_post;  // test-split labels under the task's mask
  std::vector<int> predictions_end;
};

struct SequenceReport {
  std::string strategy_name;
  std::uint64_t seed = 0;
  std::vector<TaskRecord> tasks;
  std::size_t total_risk_evals = 0;
};

namespace detail {

inline Mask head_slice_mask(const Network& net, int task_id) {
  const auto& h = net.head(task_id);
  Mask mask(net.weights.size(), 0);
  const std::size_t end = h.offset + net.head_size(h);
  for (std::size_t i = h.offset; i < end; ++i) mask[i] = 1;
  return mask;
}

inline double accuracy_of(const std::vector<int>& predicted, const DatasetSplit& split) {
  int wrong = 0;
  for (std::size_t r = 0; r < split.size(); ++r)
    if (predicted[r] != split.labels[r]) ++wrong;
  return 1.0 - static_cast<double>(wrong) / static_cast<double>(split.size());
}

inline double owned_fraction(const OwnershipMap& map) {
  std::size_t owned = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < map.owner.size(); ++i) {
    if (!map.prunable[i]) continue;
    ++total;
    if (map.owner[i] != 0) ++owned;
  }
  return total == 0 ? 0.0 : static_cast<double>(owned) / static_cast<double>(total);
}

}  // namespace detail

/// One task of the sequence: register, train, pick theta, prune, fine-tune,
/// freeze. The network and ownership map are advanced in place.
inline TaskRecord train_task(Network& net, OwnershipMap& map, const TaskSpec& task,
                             const Strategy& strategy, int task_id, const RunParams& params,
                             std::uint64_t run_seed) {
  TaskRecord record;
  record.task_id = task_id;
  record.name = task.name;

  // (1) register
  register_head(net, task_id, task.dataset.class_count,
                detail::derive_seed(run_seed, 0x6ead, static_cast<std::uint64_t>(task_id)));
  register_task(map, net, task_id);
  const Mask own_head = detail::head_slice_mask(net, task_id);

  // (2) train on everything still free
  TrainConfig train_cfg = task.train_cfg;
  train_cfg.seed = detail::derive_seed(run_seed, 0x77, static_cast<std::uint64_t>(task_id));
  const Mask train_mask = trainable_mask(map, task_id);
  sgd_train(net, train_mask, task_id, task.dataset.train, train_cfg);

  // (3) uncompressed reference risk
  const Mask base_view = view_for_task(map, task_id);
  const Mask full_mask = mask_union(base_view, train_mask);
  record.reference_risk = zero_one_risk(net, full_mask, task_id, task.dataset.val).risk;

  TrainConfig finetune_cfg = task.finetune_cfg;
  finetune_cfg.seed = detail::derive_seed(run_seed, 0xf7, static_cast<std::uint64_t>(task_id));

  const std::size_t dim =
      params.granularity == Granularity::global ? 1 : net.n_trunk_layers();

  // (4) choose theta
  std::vector<double> theta(dim, 0.0);
  if (strategy.kind == StrategyKind::acll) {
    DualSearchConfig cfg = params.dual;
    cfg.epsilon = strategy.epsilon;
    cfg.bo_budget.seed =
        detail::derive_seed(run_seed, 0xb0, static_cast<std::uint64_t>(task_id));
    EvalCache cache;
    const EvalFn evaluate = [&](const std::vector<double>& t) -> std::pair<double, double> {
      Network trial = net;
      CompressionParams cp{t, params.granularity};
      const PruneResult pr = prune(trial, map, task_id, cp);
      sgd_train(trial, mask_union(pr.retained, own_head), task_id, task.dataset.train,
                finetune_cfg);
      const double risk =
          zero_one_risk(trial, mask_union(base_view, pr.retained), task_id, task.dataset.val)
              .risk;
      return {size_of(pr.retained, map, task_id), risk};
    };
    const DualResult dr = acll_select(evaluate, record.reference_risk, cfg, cache, dim);
    theta = dr.theta.theta;
    record.infeasible = dr.infeasible;
    record.bracket_converged = dr.state.bracket_converged;
    record.lambda_final = dr.lambda_final;
    record.trail = dr.state.trail;
    record.cache_entries = cache.entries();
    record.risk_evals = cache.size();
  } else if (strategy.kind == StrategyKind::fixed) {
    theta.assign(dim, strategy.rate);
  }
  record.theta = theta;

  // (5) prune for real
  const PruneResult pr = prune(net, map, task_id, CompressionParams{theta, params.granularity});
  record.size = size_of(pr.retained, map, task_id);

  // (6) post-prune fine-tune of the survivors
  sgd_train(net, mask_union(pr.retained, own_head), task_id, task.dataset.train, finetune_cfg);

  // (7) freeze (the plain finetune baseline leaves everything thawed)
  if (strategy.kind != StrategyKind::finetune)
    assign_retained(map, pr.retained, task_id);

  const Mask eval_mask = mask_union(base_view, pr.retained);
  record.val_risk = zero_one_risk(net, eval_mask, task_id, task.dataset.val).risk;
  const Mask test_mask =
      strategy.kind == StrategyKind::finetune ? eval_mask : view_for_task(map, task_id);
  record.predictions_post = predict_labels(net, test_mask, task_id, task.dataset.test);
  record.acc_post_task = detail::accuracy_of(record.predictions_post, task.dataset.test);
  record.owned_fraction_after = detail::owned_fraction(map);
  return record;
}

/// Test accuracy of every trained task under its own ownership view.
inline std::vector<double> evaluate_all(const Network& net, const OwnershipMap& map,
                                        const std::vector<TaskSpec>& tasks) {
  std::vector<double> accs(tasks.size(), 0.0);
  for (std::size_t j = 0; j < tasks.size(); ++j) {
    const int task_id = static_cast<int>(j) + 1;
    const Mask view = view_for_task(map, task_id);
    accs[j] = 1.0 - zero_one_risk(net, view, task_id, tasks[j].dataset.test).risk;
  }
  return accs;
}

/// Runs the whole task sequence under one strategy. Mask strategies share a
/// single network; `independent` trains one fresh network per task;
/// `finetune` shares the network with nothing ever frozen.
inline SequenceReport run_sequence(const std::vector<TaskSpec>& tasks, const Strategy& strategy,
                                   std::uint64_t seed, const RunParams& params) {
  if (tasks.empty()) throw InvalidSpecError("run_sequence: need at least one task");
  params.dual.validate();

  SequenceReport report;
  report.strategy_name = strategy.name;
  report.seed = seed;

  if (strategy.kind == StrategyKind::independent) {
    for (std::size_t k = 0; k < tasks.size(); ++k) {
      const std::uint64_t task_seed =
          detail::derive_seed(seed, 0x1d, static_cast<std::uint64_t>(k + 1));
      Network net = init_network(params.layer_dims, detail::derive_seed(task_seed, 0x4e7));
      OwnershipMap map;
      TaskRecord record;
      try {
        record = train_task(net, map, tasks[k], strategy, 1, params, task_seed);
      } catch (const std::exception& e) {
        throw Error("task '" + tasks[k].name + "' (" + std::to_string(k + 1) + "): " + e.what());
      }
      record.task_id = static_cast<int>(k) + 1;
      record.name = tasks[k].name;
      record.predictions_end = predict_labels(net, view_for_task(map, 1), 1, tasks[k].dataset.test);
      record.acc_end_of_sequence = detail::accuracy_of(record.predictions_end, tasks[k].dataset.test);
      report.total_risk_evals += record.risk_evals;
      report.tasks.push_back(std::move(record));
    }
    return report;
  }

  Network net = init_network(params.layer_dims, detail::derive_seed(seed, 0x4e7));
  OwnershipMap map;
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    TaskRecord record;
    try {
      record = train_task(net, map, tasks[k], strategy, static_cast<int>(k) + 1, params, seed);
    } catch (const std::exception& e) {
      throw Error("task '" + tasks[k].name + "' (" + std::to_string(k + 1) + "): " + e.what());
    }
    report.total_risk_evals += record.risk_evals;
    report.tasks.push_back(std::move(record));
  }

  for (std::size_t j = 0; j < tasks.size(); ++j) {
    const int task_id = static_cast<int>(j) + 1;
    const Mask mask = strategy.kind == StrategyKind::finetune
                          ? Mask(net.weights.size(), 1)
                          : view_for_task(map, task_id);
    report.tasks[j].predictions_end = predict_labels(net, mask, task_id, tasks[j].dataset.test);
    report.tasks[j].acc_end_of_sequence =
        detail::accuracy_of(report.tasks[j].predictions_end, tasks[j].dataset.test);
  }
  return report;
}

}  // namespace acll
