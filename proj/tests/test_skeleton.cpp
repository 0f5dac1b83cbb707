#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "ggmixer/rng.hpp"
#include "ggmixer/skeleton.hpp"

using namespace ggmixer;

namespace {

// Independent oracle: joint-level adjacency expanded by a Kronecker product
// with a 3 x 3 coupling stencil.
std::vector<double> kron_oracle(const std::vector<double>& joint, std::size_t j,
                                const std::array<double, 9>& stencil) {
  const std::size_t n = 3 * j;
  std::vector<double> out(n * n, 0.0);
  for (std::size_t p = 0; p < j; ++p)
    for (std::size_t q = 0; q < j; ++q)
      for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = 0; b < 3; ++b)
          out[(3 * p + a) * n + (3 * q + b)] = joint[p * j + q] * stencil[a * 3 + b];
  return out;
}

std::vector<double> joint_matrix(const SkeletonTopology& topo, bool self_loops) {
  const std::size_t j = topo.joint_count;
  std::vector<double> m(j * j, 0.0);
  for (auto [a, b] : topo.edges) m[a * j + b] = m[b * j + a] = 1.0;
  if (self_loops)
    for (std::size_t p = 0; p < j; ++p) m[p * j + p] = 1.0;
  return m;
}

constexpr std::array<double, 9> kIdentity3 = {1, 0, 0, 0, 1, 0, 0, 0, 1};
constexpr std::array<double, 9> kOnes3 = {1, 1, 1, 1, 1, 1, 1, 1, 1};

}  // namespace

TEST_CASE("single joint with self-loop expands to the 3x3 identity") {
  SkeletonTopology topo{1, {}};
  auto adj = build_spatial_adjacency(topo, CouplingMode::AxisIdentity, true);
  CHECK(adj.matrix.shape() == Shape{3, 3});
  CHECK(adj.matrix.values() == std::vector<double>{1, 0, 0, 0, 1, 0, 0, 0, 1});
}

TEST_CASE("two-joint bone expands per the Kronecker oracle (axis identity)") {
  SkeletonTopology topo{2, {{0, 1}}};
  auto adj = build_spatial_adjacency(topo, CouplingMode::AxisIdentity, true);
  CHECK(adj.matrix.shape() == Shape{6, 6});
  CHECK(adj.matrix.at(0, 3) == 1.0);
  CHECK(adj.matrix.at(0, 4) == 0.0);
  CHECK(adj.matrix.at(0, 0) == 1.0);
  CHECK(adj.matrix.values() == kron_oracle(joint_matrix(topo, true), 2, kIdentity3));
}

TEST_CASE("full-block coupling fills whole 3x3 blocks") {
  SkeletonTopology topo{2, {{0, 1}}};
  auto adj = build_spatial_adjacency(topo, CouplingMode::FullBlock, false);
  int ones = 0;
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b) {
      ones += adj.matrix.at(a, 3 + b) == 1.0;
      ones += adj.matrix.at(3 + a, b) == 1.0;
    }
  CHECK(ones == 18);
  CHECK(adj.matrix.values() == kron_oracle(joint_matrix(topo, false), 2, kOnes3));
}

TEST_CASE("spatial adjacency rejects bad edges") {
  CHECK_THROWS_AS(build_spatial_adjacency({2, {{0, 5}}}, CouplingMode::AxisIdentity, true),
                  TopologyError);
  CHECK_THROWS_AS(build_spatial_adjacency({2, {{1, 1}}}, CouplingMode::AxisIdentity, true),
                  TopologyError);
  CHECK_THROWS_AS(
      build_spatial_adjacency({3, {{0, 1}, {1, 0}}}, CouplingMode::AxisIdentity, true),
      TopologyError);
}

TEST_CASE("temporal adjacency is tridiagonal") {
  auto t3 = build_temporal_adjacency(3, true);
  CHECK(t3.matrix.values() == std::vector<double>{1, 1, 0, 1, 1, 1, 0, 1, 1});

  auto t1 = build_temporal_adjacency(1, true);
  CHECK(t1.matrix.values() == std::vector<double>{1});

  auto t4 = build_temporal_adjacency(4, false);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      const double expect = (i != j && (i > j ? i - j : j - i) == 1) ? 1.0 : 0.0;
      CHECK(t4.matrix.at(i, j) == expect);
    }

  CHECK_THROWS_AS(build_temporal_adjacency(0, true), ParameterError);
}

TEST_CASE("temporal adjacency bandwidth never exceeds one") {
  for (std::size_t frames = 1; frames <= 64; ++frames) {
    for (bool loops : {false, true}) {
      auto adj = build_temporal_adjacency(frames, loops);
      for (std::size_t i = 0; i < frames; ++i)
        for (std::size_t j = 0; j < frames; ++j) {
          const std::size_t gap = i > j ? i - j : j - i;
          if (gap > 1) CHECK(adj.matrix.at(i, j) == 0.0);
        }
    }
  }
}

TEST_CASE("normalize_adjacency fixed points and frozen values") {
  CHECK(normalize_adjacency(Tensor::identity(4)).values() == Tensor::identity(4).values());

  auto t3 = build_temporal_adjacency(3, true);
  Tensor norm = normalize_adjacency(t3.matrix);
  // Degrees (2, 3, 2): oracle D^{-1/2} A D^{-1/2}.
  CHECK(norm.at(0, 1) == doctest::Approx(1.0 / std::sqrt(6.0)).epsilon(1e-12));
  CHECK(norm.at(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  Tensor zero = Tensor::zeros({3, 3});
  CHECK(normalize_adjacency(zero).values() == zero.values());

  Tensor bad = Tensor::from({2, 2}, {0, 1, 0, 0});
  CHECK_THROWS_AS(normalize_adjacency(bad), ContractError);
}

TEST_CASE("normalization preserves symmetry") {
  Rng rng(17);
  for (int inst = 0; inst < 20; ++inst) {
    const std::size_t n = 2 + rng.index(6);
    Tensor a = Tensor::zeros({n, n});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) {
        const double v = rng.bernoulli(0.4) ? rng.uniform(0.0, 2.0) : 0.0;
        a.at(i, j) = a.at(j, i) = v;
      }
    Tensor norm = normalize_adjacency(a);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        CHECK(std::fabs(norm.at(i, j) - norm.at(j, i)) < 1e-12);
  }
}

TEST_CASE("axis-identity expansion commutes with joint relabeling") {
  Rng rng(19);
  SkeletonTopology topo{5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {1, 3}}};

  std::vector<std::size_t> perm(topo.joint_count);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = perm.size(); i > 1; --i)
    std::swap(perm[i - 1], perm[rng.index(i)]);

  SkeletonTopology relabeled{topo.joint_count, {}};
  for (auto [a, b] : topo.edges) relabeled.edges.emplace_back(perm[a], perm[b]);

  auto direct = build_spatial_adjacency(relabeled, CouplingMode::AxisIdentity, true);
  auto base = build_spatial_adjacency(topo, CouplingMode::AxisIdentity, true);

  const std::size_t n = 3 * topo.joint_count;
  for (std::size_t p = 0; p < topo.joint_count; ++p)
    for (std::size_t q = 0; q < topo.joint_count; ++q)
      for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = 0; b < 3; ++b)
          CHECK(direct.matrix.values()[(3 * perm[p] + a) * n + (3 * perm[q] + b)] ==
                base.matrix.values()[(3 * p + a) * n + (3 * q + b)]);
}

TEST_CASE("topology JSON round trip") {
  SkeletonTopology topo = h36m22_topology();
  SkeletonTopology back = topology_from_json(topology_to_json(topo));
  CHECK(back.joint_count == topo.joint_count);
  CHECK(back.edges == topo.edges);

  CHECK_THROWS_AS(topology_from_json("{\"edges\": []}"), IoError);
  CHECK_THROWS_AS(topology_from_json("not json"), IoError);
}

TEST_CASE("shipped topologies are sane") {
  SkeletonTopology tree = h36m22_topology();
  CHECK(tree.joint_count == 22);
  CHECK(tree.edges.size() == 21);  // a tree

  SkeletonTopology chain = chain_topology(8);
  CHECK(chain.edges.size() == 7);
}
