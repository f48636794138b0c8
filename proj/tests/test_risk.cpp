#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "acll/network.hpp"
#include "acll/ownership.hpp"
#include "acll/risk.hpp"

using namespace acll;

namespace {

// h = relu(x1); logit0 = 0.5 (bias only), logit1 = h. Predicts class 1 iff
// x1 > 0.5.
Network threshold_net() {
  Network net = init_network({2, 1}, 0);
  register_head(net, 1, 2, 0);
  net.weights = {1.0, 0.0, 0.0, 0.0, 1.0, 0.5, 0.0};
  return net;
}

DatasetSplit split_from(std::vector<double> x1, std::vector<int> labels, int classes) {
  DatasetSplit s;
  s.labels = std::move(labels);
  s.class_count = classes;
  s.inputs.resize(2 * x1.size(), 0.0);
  for (std::size_t i = 0; i < x1.size(); ++i) s.inputs[2 * i] = x1[i];
  return s;
}

}  // namespace

TEST_CASE("hand-enumerated predictions give risk 3/8") {
  const Network net = threshold_net();
  const Mask all(net.weights.size(), 1);
  // predictions: 0,0,1,1,0,1,1,0 against labels 1,0,1,0,0,0,1,0 -> 3 wrong
  const DatasetSplit split =
      split_from({-1.0, 0.3, 0.7, 2.0, 0.4, 0.9, 1.5, 0.1}, {1, 0, 1, 0, 0, 0, 1, 0}, 2);
  const RiskReading reading = zero_one_risk(net, all, 1, split);
  CHECK(reading.risk == 0.375);
  CHECK(reading.n_samples == 8);
  CHECK(reading.task_id == 1);
}

TEST_CASE("perfect classifier has risk zero") {
  const Network net = threshold_net();
  const Mask all(net.weights.size(), 1);
  const DatasetSplit split =
      split_from({-1.0, 0.3, 0.7, 2.0, 0.4, 0.9, 1.5, 0.1, 3.0, 0.2},
                 {0, 0, 1, 1, 0, 1, 1, 0, 1, 0}, 2);
  CHECK(zero_one_risk(net, all, 1, split).risk == 0.0);
}

TEST_CASE("constant predictor on a balanced split has risk 1 - 1/k") {
  Network net = init_network({2, 1}, 0);
  register_head(net, 1, 3, 0);
  const Mask none(net.weights.size(), 0);  // dead network predicts class 0
  std::vector<int> labels(99);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 3);
  DatasetSplit split;
  split.labels = labels;
  split.class_count = 3;
  split.inputs.assign(2 * labels.size(), 0.25);
  CHECK(zero_one_risk(net, none, 1, split).risk == 2.0 / 3.0);
}

TEST_CASE("risk times sample count is the misclassification count") {
  const Network net = threshold_net();
  const Mask all(net.weights.size(), 1);
  const DatasetSplit split =
      split_from({-1.0, 0.3, 0.7, 2.0, 0.4}, {1, 0, 1, 0, 0}, 2);
  const RiskReading reading = zero_one_risk(net, all, 1, split);
  const std::vector<int> predicted = predict_labels(net, all, 1, split);
  int wrong = 0;
  for (std::size_t i = 0; i < split.size(); ++i)
    if (predicted[i] != split.labels[i]) ++wrong;
  CHECK(reading.risk == static_cast<double>(wrong) / static_cast<double>(split.size()));
}

TEST_CASE("risk is invariant to row permutation") {
  const Network net = threshold_net();
  const Mask all(net.weights.size(), 1);
  DatasetSplit split =
      split_from({-1.0, 0.3, 0.7, 2.0, 0.4, 0.9, 1.5, 0.1}, {1, 0, 1, 0, 0, 0, 1, 0}, 2);
  const double before = zero_one_risk(net, all, 1, split).risk;
  // rotate the rows
  std::rotate(split.labels.begin(), split.labels.begin() + 3, split.labels.end());
  std::rotate(split.inputs.begin(), split.inputs.begin() + 6, split.inputs.end());
  CHECK(zero_one_risk(net, all, 1, split).risk == before);
}

TEST_CASE("risk under an early view ignores later-task weights") {
  Network net = init_network({2, 4}, 9);
  register_head(net, 1, 2, 10);
  OwnershipMap map;
  register_task(map, net, 1);
  Mask claim(net.weights.size(), 0);
  claim[0] = claim[3] = 1;
  assign_retained(map, claim, 1);
  register_head(net, 2, 2, 11);
  register_task(map, net, 2);

  DatasetSplit split = split_from({0.5, -0.2, 1.5, 0.8}, {0, 1, 1, 0}, 2);
  const Mask view1 = view_for_task(map, 1);
  const double before = zero_one_risk(net, view1, 1, split).risk;
  const std::vector<int> labels_before = predict_labels(net, view1, 1, split);

  // wreck every weight task 1 does not own
  for (std::size_t i = 0; i < net.weights.size(); ++i)
    if (map.owner[i] != 1) net.weights[i] = 1e6;
  CHECK(zero_one_risk(net, view1, 1, split).risk == before);
  CHECK(predict_labels(net, view1, 1, split) == labels_before);
}

TEST_CASE("empty split is rejected") {
  const Network net = threshold_net();
  CHECK_THROWS_AS(zero_one_risk(net, Mask(net.weights.size(), 1), 1, DatasetSplit{}),
                  InvalidDataError);
}
