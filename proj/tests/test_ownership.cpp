#include <catch2/catch_amalgamated.hpp>

#include "acll/network.hpp"
#include "acll/ownership.hpp"

using namespace acll;

namespace {

// Ledger with a hand-set owner vector and no head slices.
OwnershipMap bare_map(std::vector<int> owner, int n_tasks) {
  OwnershipMap map;
  map.owner = std::move(owner);
  map.prunable.assign(map.owner.size(), 1);
  map.n_tasks = n_tasks;
  for (int t = 1; t <= n_tasks; ++t) map.head_slices.push_back({t, 0, 0});
  return map;
}

}  // namespace

TEST_CASE("view_for_task on a hand-set ledger") {
  const OwnershipMap map = bare_map({1, 0, 2, 1}, 2);
  CHECK(view_for_task(map, 1) == Mask{1, 0, 0, 1});
  CHECK(view_for_task(map, 2) == Mask{1, 0, 1, 1});
  CHECK_THROWS_AS(view_for_task(map, 0), InvalidTaskError);
  CHECK_THROWS_AS(view_for_task(map, 3), InvalidTaskError);
}

TEST_CASE("last task sees every owned weight") {
  const OwnershipMap map = bare_map({1, 0, 2, 1, 2}, 2);
  Mask expect(map.owner.size(), 0);
  for (std::size_t i = 0; i < map.owner.size(); ++i) expect[i] = map.owner[i] != 0;
  CHECK(view_for_task(map, 2) == expect);
}

TEST_CASE("trainable_mask covers free weights plus own head") {
  OwnershipMap map = bare_map({1, 0, 2, 0}, 3);
  CHECK(trainable_mask(map, 3) == Mask{0, 1, 0, 1});
  CHECK_THROWS_AS(trainable_mask(map, 2), SequencingError);

  // no free weights left: only the current head remains trainable
  OwnershipMap full = bare_map({1, 1, 2, 2}, 3);
  full.head_slices[2] = {3, 2, 4};  // pretend the tail is task 3's head
  full.owner[2] = 3;
  full.owner[3] = 3;
  CHECK(trainable_mask(full, 3) == Mask{0, 0, 1, 1});
}

TEST_CASE("assign_retained claims exactly the flagged weights") {
  OwnershipMap map = bare_map({1, 0, 0}, 2);
  assign_retained(map, Mask{0, 1, 0}, 2);
  CHECK(map.owner == std::vector<int>{1, 2, 0});

  OwnershipMap untouched = bare_map({1, 0, 0}, 2);
  assign_retained(untouched, Mask{0, 0, 0}, 2);
  CHECK(untouched.owner == std::vector<int>{1, 0, 0});

  OwnershipMap clash = bare_map({1, 0, 0}, 2);
  CHECK_THROWS_AS(assign_retained(clash, Mask{1, 0, 0}, 2), OwnershipViolationError);
  CHECK_THROWS_AS(assign_retained(clash, Mask{1, 0}, 2), ShapeError);
  CHECK_THROWS_AS(assign_retained(clash, Mask{0, 0, 0}, 0), InvalidTaskError);
}

TEST_CASE("registration flow over a real network") {
  Network net = init_network({2, 3}, 5);
  register_head(net, 1, 2, 6);
  OwnershipMap map;
  register_task(map, net, 1);

  CHECK(map.n_tasks == 1);
  CHECK(map.owner.size() == net.weights.size());
  // trunk: 2x3 matrix prunable, 3 biases not, head slice not
  const Mask expected_prunable{1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
  CHECK(map.prunable == expected_prunable);
  // head slice [9, 17) owned by task 1 from registration
  for (std::size_t i = 0; i < 9; ++i) CHECK(map.owner[i] == 0);
  for (std::size_t i = 9; i < 17; ++i) CHECK(map.owner[i] == 1);
  CHECK(map.head_slice(1).begin == 9);
  CHECK(map.head_slice(1).end == 17);

  // first task trains everything
  CHECK(trainable_mask(map, 1) == Mask(net.weights.size(), 1));

  // the view covers only the owned head until weights are claimed
  Mask view = view_for_task(map, 1);
  for (std::size_t i = 0; i < 9; ++i) CHECK(view[i] == 0);
  for (std::size_t i = 9; i < 17; ++i) CHECK(view[i] == 1);

  map.validate();
  CHECK_THROWS_AS(register_task(map, net, 1), SequencingError);
  CHECK_THROWS_AS(register_task(map, net, 3), SequencingError);
}

TEST_CASE("two-task flow keeps views nested and heads private") {
  Network net = init_network({2, 3}, 5);
  register_head(net, 1, 2, 6);
  OwnershipMap map;
  register_task(map, net, 1);
  assign_retained(map, Mask{1, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0}, 1);

  register_head(net, 2, 3, 7);
  register_task(map, net, 2);
  CHECK(map.owner.size() == net.weights.size());
  CHECK(map.n_tasks == 2);

  const Mask view1 = view_for_task(map, 1);
  const Mask view2 = view_for_task(map, 2);
  // task 1 never sees task 2's head
  const auto& h2 = map.head_slice(2);
  for (std::size_t i = h2.begin; i < h2.end; ++i) CHECK(view1[i] == 0);
  // task 2 never sees task 1's head
  const auto& h1 = map.head_slice(1);
  for (std::size_t i = h1.begin; i < h1.end; ++i) CHECK(view2[i] == 0);
  // nesting on shared weights
  for (std::size_t i = 0; i < net.trunk_size(); ++i)
    if (view1[i]) CHECK(view2[i] == 1);

  // write-once: task 2 cannot re-claim task 1's weights
  Mask steal(net.weights.size(), 0);
  steal[0] = 1;
  CHECK_THROWS_AS(assign_retained(map, steal, 2), OwnershipViolationError);

  // but the still-free trunk weight is claimable
  Mask claim(net.weights.size(), 0);
  claim[1] = 1;
  assign_retained(map, claim, 2);
  CHECK(map.owner[1] == 2);
  map.validate();
}

TEST_CASE("validate rejects corrupt ledgers") {
  OwnershipMap map = bare_map({0, 1}, 1);
  map.prunable.pop_back();
  CHECK_THROWS_AS(map.validate(), ShapeError);
  OwnershipMap out_of_range = bare_map({0, 5}, 1);
  CHECK_THROWS_AS(out_of_range.validate(), InvalidStateError);
}

TEST_CASE("ledger json round-trip") {
  Network net = init_network({2, 3}, 5);
  register_head(net, 1, 2, 6);
  OwnershipMap map;
  register_task(map, net, 1);
  Mask claim(net.weights.size(), 0);
  claim[0] = 1;
  claim[4] = 1;
  assign_retained(map, claim, 1);
  const OwnershipMap loaded = ownership_from_json(ownership_to_json(map));
  CHECK(loaded.owner == map.owner);
  CHECK(loaded.prunable == map.prunable);
  CHECK(loaded.n_tasks == map.n_tasks);
  REQUIRE(loaded.head_slices.size() == 1);
  CHECK(loaded.head_slices[0].begin == map.head_slices[0].begin);
  CHECK(loaded.head_slices[0].end == map.head_slices[0].end);
}
