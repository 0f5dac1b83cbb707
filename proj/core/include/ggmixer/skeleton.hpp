#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ggmixer/tensor.hpp"

namespace ggmixer {

// Joint-bone structure. Edges are unordered joint-index pairs; the graph
// may be disconnected.
struct SkeletonTopology {
  std::size_t joint_count = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;

  void validate() const;
};

SkeletonTopology chain_topology(std::size_t joints);

// 22-joint kinematic tree (pelvis root, two legs, spine/head, two arms)
// matching the joint count used by the full-size configuration.
SkeletonTopology h36m22_topology();

SkeletonTopology topology_from_json(const std::string& text);
std::string topology_to_json(const SkeletonTopology& topo);
SkeletonTopology read_topology(const std::filesystem::path& path);
void write_topology(const std::filesystem::path& path, const SkeletonTopology& topo);

// How a J x J joint adjacency expands to the N x N coordinate level
// (N = 3J): AxisIdentity couples same-axis coordinates only (kron with I3),
// FullBlock fills whole 3 x 3 blocks (kron with the all-ones 3 x 3).
enum class CouplingMode { AxisIdentity, FullBlock };

std::string to_string(CouplingMode mode);
CouplingMode coupling_mode_from_string(const std::string& text);

struct SpatialAdjacency {
  Tensor matrix;  // N x N
  CouplingMode coupling = CouplingMode::AxisIdentity;
};

struct TemporalAdjacency {
  Tensor matrix;  // T x T, zero outside |i-j| <= 1
};

SpatialAdjacency build_spatial_adjacency(const SkeletonTopology& topo,
                                         CouplingMode coupling, bool self_loops);

TemporalAdjacency build_temporal_adjacency(std::size_t frames, bool self_loops);

// D^{-1/2} A D^{-1/2} with D the degree diagonal; zero-degree rows pass
// through as zero rows. Requires a symmetric nonnegative input.
Tensor normalize_adjacency(const Tensor& a);

}  // namespace ggmixer
