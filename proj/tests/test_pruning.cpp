#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "acll/network.hpp"
#include "acll/ownership.hpp"
#include "acll/pruning.hpp"

using namespace acll;

namespace {

// Trunk with a single 1-output layer so the matrix weights can be hand-set,
// plus a 2-class head for task 1.
struct Rig {
  Network net;
  OwnershipMap map;
};

Rig rig_with_matrix(std::vector<double> matrix) {
  Rig r;
  r.net = init_network({static_cast<int>(matrix.size()), 1}, 0);
  for (std::size_t i = 0; i < matrix.size(); ++i) r.net.weights[i] = matrix[i];
  register_head(r.net, 1, 2, 0);
  register_task(r.map, r.net, 1);
  return r;
}

CompressionParams global_theta(double t) { return {{t}, Granularity::global}; }

}  // namespace

TEST_CASE("magnitude pruning zeroes the smallest weights") {
  Rig r = rig_with_matrix({0.5, -0.1, 0.3, -0.7});
  const PruneResult res = prune(r.net, r.map, 1, global_theta(0.5));
  CHECK(res.pruned_count == 2);
  CHECK(r.net.weights[0] == 0.5);
  CHECK(r.net.weights[1] == 0.0);
  CHECK(r.net.weights[2] == 0.0);
  CHECK(r.net.weights[3] == -0.7);
  CHECK(res.retained[0] == 1);
  CHECK(res.retained[1] == 0);
  CHECK(res.retained[2] == 0);
  CHECK(res.retained[3] == 1);
  // the free trunk bias rides along
  CHECK(res.retained[4] == 1);
  // the head is outside the mask
  for (std::size_t i = 5; i < r.net.weights.size(); ++i) CHECK(res.retained[i] == 0);
}

TEST_CASE("theta 0 prunes nothing, theta 1 prunes everything free") {
  Rig zero = rig_with_matrix({0.5, -0.1, 0.3, -0.7});
  const PruneResult none = prune(zero.net, zero.map, 1, global_theta(0.0));
  CHECK(none.pruned_count == 0);
  for (std::size_t i = 0; i < 5; ++i) CHECK(none.retained[i] == 1);

  Rig one = rig_with_matrix({0.5, -0.1, 0.3, -0.7});
  const PruneResult all = prune(one.net, one.map, 1, global_theta(1.0));
  CHECK(all.pruned_count == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(one.net.weights[i] == 0.0);
    CHECK(all.retained[i] == 0);
  }
  CHECK(all.retained[4] == 1);  // bias survives even total pruning
}

TEST_CASE("magnitude ties break toward the lower flat index") {
  Rig r = rig_with_matrix({0.5, -0.5, 0.5, 0.3});
  const PruneResult res = prune(r.net, r.map, 1, global_theta(0.5));
  CHECK(res.pruned_count == 2);
  // |0.3| goes first, then the tie at |0.5| falls to index 0
  CHECK(r.net.weights[3] == 0.0);
  CHECK(r.net.weights[0] == 0.0);
  CHECK(r.net.weights[1] == -0.5);
  CHECK(r.net.weights[2] == 0.5);
}

TEST_CASE("pruned count is exactly floor(theta * n)") {
  for (double theta : {0.0, 0.1, 1.0 / 3.0, 0.5, 0.749, 0.75, 0.999, 1.0}) {
    Network net = init_network({10, 10}, 17);
    register_head(net, 1, 2, 18);
    OwnershipMap map;
    register_task(map, net, 1);
    const PruneResult res = prune(net, map, 1, global_theta(theta));
    CHECK(res.pruned_count == static_cast<std::size_t>(std::floor(theta * 100.0)));
  }
}

TEST_CASE("size_of counts newly retained over all prunable") {
  Network net = init_network({10, 10}, 17);
  register_head(net, 1, 2, 18);
  OwnershipMap map;
  register_task(map, net, 1);

  SECTION("theta 0 keeps everything") {
    const PruneResult res = prune(net, map, 1, global_theta(0.0));
    CHECK(size_of(res.retained, map, 1) == 1.0);
  }
  SECTION("theta 1 keeps nothing") {
    const PruneResult res = prune(net, map, 1, global_theta(1.0));
    CHECK(size_of(res.retained, map, 1) == 0.0);
  }
  SECTION("theta 0.75 keeps a quarter of 100 weights") {
    const PruneResult res = prune(net, map, 1, global_theta(0.75));
    CHECK(size_of(res.retained, map, 1) == 0.25);
  }
}

TEST_CASE("size is monotone non-increasing in theta") {
  const Network base = [&] {
    Network net = init_network({2, 16, 8}, 23);
    register_head(net, 1, 3, 24);
    return net;
  }();
  OwnershipMap map;
  register_task(map, base, 1);
  double prev = 2.0;
  for (double theta : {0.0, 0.2, 0.35, 0.5, 0.8, 1.0}) {
    Network net = base;
    const PruneResult res = prune(net, map, 1, global_theta(theta));
    const double s = size_of(res.retained, map, 1);
    CHECK(s <= prev);
    prev = s;
  }
}

TEST_CASE("owned weights are untouchable") {
  Network net = init_network({4, 1}, 0);
  net.weights = {0.01, -0.02, 5.0, -6.0, 0.0};
  register_head(net, 1, 2, 0);
  OwnershipMap map;
  register_task(map, net, 1);
  // task 1 claims the two small weights, leaving the big ones free
  Mask claim(net.weights.size(), 0);
  claim[0] = 1;
  claim[1] = 1;
  assign_retained(map, claim, 1);

  register_head(net, 2, 2, 1);
  register_task(map, net, 2);
  const PruneResult res = prune(net, map, 2, global_theta(1.0));
  CHECK(res.pruned_count == 2);
  CHECK(net.weights[0] == 0.01);   // owned, survives despite tiny magnitude
  CHECK(net.weights[1] == -0.02);
  CHECK(net.weights[2] == 0.0);
  CHECK(net.weights[3] == 0.0);
  CHECK(res.retained[0] == 0);     // owned weights are not newly retained
  CHECK(res.retained[1] == 0);
  CHECK(size_of(res.retained, map, 2) == 0.0);
}

TEST_CASE("pruning then masked forward equals zero-overwrite forward") {
  Network net = init_network({2, 8, 4}, 31);
  register_head(net, 1, 3, 32);
  OwnershipMap map;
  register_task(map, net, 1);

  Network pruned = net;
  const PruneResult res = prune(pruned, map, 1, global_theta(0.6));

  Network overwritten = net;
  for (std::size_t i = 0; i < net.weights.size(); ++i)
    if (map.prunable[i] && map.owner[i] == 0 && !res.retained[i]) overwritten.weights[i] = 0.0;

  DatasetSplit batch;
  detail::Rng rng(33);
  batch.class_count = 3;
  batch.labels.assign(10, 0);
  batch.inputs.resize(20);
  for (auto& x : batch.inputs) x = rng.gaussian();

  const Mask view = mask_union(res.retained, [&] {
    Mask head(net.weights.size(), 0);
    for (std::size_t i = net.head(1).offset; i < net.weights.size(); ++i) head[i] = 1;
    return head;
  }());
  CHECK(forward(pruned, view, 1, batch) == forward(overwritten, view, 1, batch));
  // and the pruned net under the view equals the overwritten net unmasked
  CHECK(forward(pruned, view, 1, batch) ==
        forward(overwritten, Mask(net.weights.size(), 1), 1, batch));
}

TEST_CASE("per-layer pruning applies one rate per trunk layer") {
  Network net = init_network({3, 2, 2}, 0);
  // layer 0 matrix (6): indices 0..5; layer 0 bias: 6,7
  // layer 1 matrix (4): indices 8..11; layer 1 bias: 12,13
  net.weights = {0.9, 0.1, -0.5, 0.4, -0.8, 0.2, 0.0, 0.0, 0.7, -0.3, 0.6, -0.1, 0.0, 0.0};
  register_head(net, 1, 2, 0);
  OwnershipMap map;
  register_task(map, net, 1);

  CompressionParams params{{0.5, 1.0}, Granularity::per_layer};
  const PruneResult res = prune(net, map, 1, params);
  CHECK(res.pruned_count == 3 + 4);
  // layer 0: the three smallest magnitudes are 0.1, 0.2, 0.4
  CHECK(net.weights[1] == 0.0);
  CHECK(net.weights[5] == 0.0);
  CHECK(net.weights[3] == 0.0);
  CHECK(net.weights[0] == 0.9);
  CHECK(net.weights[2] == -0.5);
  CHECK(net.weights[4] == -0.8);
  // layer 1: all four zeroed
  for (std::size_t i = 8; i < 12; ++i) CHECK(net.weights[i] == 0.0);
  // biases of both layers ride along
  CHECK(res.retained[6] == 1);
  CHECK(res.retained[7] == 1);
  CHECK(res.retained[12] == 1);
  CHECK(res.retained[13] == 1);
}

TEST_CASE("parameter validation") {
  Network net = init_network({2, 4}, 0);
  register_head(net, 1, 2, 0);
  OwnershipMap map;
  register_task(map, net, 1);

  CHECK_THROWS_AS(prune(net, map, 1, CompressionParams{{1.2}, Granularity::global}),
                  InvalidSpecError);
  CHECK_THROWS_AS(prune(net, map, 1, CompressionParams{{-0.1}, Granularity::global}),
                  InvalidSpecError);
  CHECK_THROWS_AS(prune(net, map, 1, CompressionParams{{0.5, 0.5}, Granularity::global}),
                  InvalidSpecError);
  CHECK_THROWS_AS(prune(net, map, 1, CompressionParams{{0.5, 0.5}, Granularity::per_layer}),
                  InvalidSpecError);  // one trunk layer, two rates
  CHECK_THROWS_AS(prune(net, map, 2, global_theta(0.5)), SequencingError);
  CHECK_THROWS_AS(size_of(Mask{1, 0}, map, 1), ShapeError);
}
