#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "acll/errors.hpp"
#include "acll/network.hpp"

#include <json.hpp>

namespace acll {

/// Per-weight ownership ledger. owner[i] = 0 means weight i is free;
/// owner[i] = k means task k claimed it and it is frozen for everyone else.
/// Head slices are claimed by their task at registration. prunable[i] marks
/// the shared trunk weights the compressor may act on (no biases, no heads).
struct OwnershipMap {
  std::vector<int> owner;
  Mask prunable;
  int n_tasks = 0;

  struct HeadSlice {
    int task_id = 0;
    std::size_t begin = 0;
    std::size_t end = 0;
  };
  std::vector<HeadSlice> head_slices;

  const HeadSlice& head_slice(int task_id) const {
    for (const auto& h : head_slices)
      if (h.task_id == task_id) return h;
    throw InvalidTaskError("no head slice recorded for task " + std::to_string(task_id));
  }

  bool in_other_head(std::size_t i, int task_id) const {
    for (const auto& h : head_slices)
      if (h.task_id != task_id && i >= h.begin && i < h.end) return true;
    return false;
  }

  void validate() const {
    if (prunable.size() != owner.size())
      throw ShapeError("OwnershipMap: prunable length != owner length");
    for (int v : owner)
      if (v < 0 || v > n_tasks)
        throw InvalidStateError("OwnershipMap: owner id out of range");
  }
};

/// Registers the newest task: stretches the ledger over the head slice that
/// register_head just appended and claims that slice for the task.
inline void register_task(OwnershipMap& map, const Network& net, int task_id) {
  if (task_id != map.n_tasks + 1)
    throw SequencingError("register_task: tasks must be registered in order 1,2,...");
  const auto& head = net.head(task_id);
  const std::size_t head_end = head.offset + net.head_size(head);
  if (head_end > net.weights.size())
    throw ShapeError("register_task: head slice exceeds weight vector");
  if (map.owner.size() > head.offset)
    throw SequencingError("register_task: ledger already covers this head slice");
  map.owner.resize(net.weights.size(), 0);
  map.prunable.resize(net.weights.size(), 0);
  if (map.n_tasks == 0) {
    for (std::size_t i = 0; i < net.trunk_size(); ++i)
      map.prunable[i] = net.is_trunk_bias(i) ? 0 : 1;
  }
  for (std::size_t i = head.offset; i < head_end; ++i) map.owner[i] = task_id;
  map.head_slices.push_back({task_id, head.offset, head_end});
  map.n_tasks = task_id;
}

/// Inference mask for `task_id`: everything owned by tasks 1..task_id except
/// the head slices of other tasks.
inline Mask view_for_task(const OwnershipMap& map, int task_id) {
  if (task_id < 1 || task_id > map.n_tasks)
    throw InvalidTaskError("view_for_task: unknown task " + std::to_string(task_id));
  Mask mask(map.owner.size(), 0);
  for (std::size_t i = 0; i < map.owner.size(); ++i) {
    const int o = map.owner[i];
    if (o >= 1 && o <= task_id && !map.in_other_head(i, task_id)) mask[i] = 1;
  }
  return mask;
}

/// Update mask for the newest task: free weights plus its own head.
inline Mask trainable_mask(const OwnershipMap& map, int task_id) {
  if (task_id != map.n_tasks)
    throw SequencingError("trainable_mask: only the newest task trains");
  const auto& h = map.head_slice(task_id);
  Mask mask(map.owner.size(), 0);
  for (std::size_t i = 0; i < map.owner.size(); ++i)
    if (map.owner[i] == 0 || (i >= h.begin && i < h.end)) mask[i] = 1;
  return mask;
}

/// Claims the retained weights for `task_id`. Refuses any overlap with
/// already-owned weights; ownership is write-once.
inline void assign_retained(OwnershipMap& map, const Mask& retained, int task_id) {
  if (retained.size() != map.owner.size())
    throw ShapeError("assign_retained: mask length != ledger length");
  if (task_id < 1)
    throw InvalidTaskError("assign_retained: task ids start at 1");
  for (std::size_t i = 0; i < retained.size(); ++i)
    if (retained[i] && map.owner[i] != 0)
      throw OwnershipViolationError("assign_retained: weight " + std::to_string(i) +
                                    " already owned by task " + std::to_string(map.owner[i]));
  for (std::size_t i = 0; i < retained.size(); ++i)
    if (retained[i]) map.owner[i] = task_id;
}

inline nlohmann::json ownership_to_json(const OwnershipMap& map) {
  nlohmann::json j;
  j["owner"] = map.owner;
  j["prunable"] = map.prunable;
  j["n_tasks"] = map.n_tasks;
  auto& slices = j["head_slices"] = nlohmann::json::array();
  for (const auto& h : map.head_slices)
    slices.push_back({{"task_id", h.task_id}, {"begin", h.begin}, {"end", h.end}});
  return j;
}

inline OwnershipMap ownership_from_json(const nlohmann::json& j) {
  OwnershipMap map;
  map.owner = j.at("owner").get<std::vector<int>>();
  map.prunable = j.at("prunable").get<Mask>();
  map.n_tasks = j.at("n_tasks").get<int>();
  for (const auto& hj : j.at("head_slices"))
    map.head_slices.push_back({hj.at("task_id").get<int>(),
                               hj.at("begin").get<std::size_t>(),
                               hj.at("end").get<std::size_t>()});
  map.validate();
  return map;
}

}  // namespace acll
