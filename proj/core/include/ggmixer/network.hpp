#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ggmixer/blocks.hpp"
#include "ggmixer/dct.hpp"
#include "ggmixer/motion.hpp"

namespace ggmixer {

enum class BranchStart { Spatial, Temporal };

std::string to_string(BranchStart start);
BranchStart branch_start_from_string(const std::string& text);

struct NetworkConfig {
  std::size_t joints = 8;
  std::size_t input_frames = 16;
  std::size_t output_frames = 8;
  std::size_t middle_blocks = 2;  // n; each branch runs n + 2 blocks
  CouplingMode coupling_mode = CouplingMode::AxisIdentity;
  bool self_loops = true;
  bool trainable_mask = false;
  BranchStart branch_a_start = BranchStart::Spatial;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t coord_rows() const { return 3 * joints; }
  std::size_t blocks_per_branch() const { return middle_blocks + 2; }
};

std::string config_to_json(const NetworkConfig& config);
NetworkConfig config_from_json(const std::string& text);
NetworkConfig read_config(const std::filesystem::path& path);
void write_config(const std::filesystem::path& path, const NetworkConfig& config);

// How the middle blocks of each branch are flavored.
enum class MiddleLayout {
  Interleaved,        // S,T,S,T... mirrored across branches
  BranchHomogeneous,  // branch A all spatial, branch B all temporal
  AllSpatial,
  AllTemporal,
};

// Structural variant knobs; the default-constructed value is the full
// network: two symmetric branches of fused guided blocks with fusion
// exchanges after the first and before the last block.
struct ModelVariant {
  GuidanceMode spatial_guidance = GuidanceMode::Fused;
  GuidanceMode temporal_guidance = GuidanceMode::Fused;
  bool two_branch = true;
  bool fusion_blocks = true;
  bool full_fuse = false;
  MiddleLayout layout = MiddleLayout::Interleaved;
};

struct Block {
  BlockKind kind = BlockKind::PlainMix;
  GuidanceMode guidance = GuidanceMode::Fused;
  BlockParams params;
};

struct FusionSite {
  std::size_t after_block = 0;
  Tensor mask_s, mask_t;  // defined only with trainable masks
};

struct Model {
  NetworkConfig config;
  ModelVariant variant;
  SkeletonTopology topology;
  std::vector<Block> branch_a;
  std::vector<Block> branch_b;  // empty for single-branch variants
  std::vector<FusionSite> fusion_sites;
  Tensor a_s, a_t;  // normalized adjacency buffers (non-trainable)
  DctBasis dct_in, dct_out;

  // Deterministic (name, tensor) order shared by the optimizer and the
  // checkpoint format.
  std::vector<std::pair<std::string, Tensor>> named_parameters() const;
  void zero_grad() const;
};

Model init_parameters(const NetworkConfig& config, const SkeletonTopology& topology,
                      std::uint64_t seed, const ModelVariant& variant = {});
Model init_parameters(const NetworkConfig& config, std::uint64_t seed);

std::size_t count_parameters(const Model& model);
std::uint64_t parameter_checksum(const Model& model);

// Shares every parameter but replaces both adjacency buffers with zeros
// (inference probe disabling aggregation).
Model with_zero_adjacency(const Model& model);

// N x T pose matrix in, N x T_f prediction out, recorded on the tape.
Tensor forward(Tape& tape, const Model& model, const Tensor& pose_matrix);

MotionSequence predict(const Model& model, const MotionSequence& seq);

}  // namespace ggmixer
