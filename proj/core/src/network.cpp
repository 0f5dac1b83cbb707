#include "ggmixer/network.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ggmixer {
namespace {

Tensor uniform_init(Rng& rng, Shape shape, std::size_t fan_in) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.uniform(-bound, bound);
  return Tensor::from(std::move(shape), std::move(v), true);
}

Tensor support_mask(const Tensor& adjacency) {
  Tensor mask = Tensor::zeros(adjacency.shape(), true);
  for (std::size_t i = 0; i < adjacency.numel(); ++i) {
    mask.values()[i] = adjacency.values()[i] != 0.0 ? 1.0 : 0.0;
  }
  return mask;
}

BlockKind middle_kind(const ModelVariant& variant, BranchStart a_start,
                      bool is_branch_b, std::size_t middle_index) {
  switch (variant.layout) {
    case MiddleLayout::AllSpatial:
      return BlockKind::Spatial;
    case MiddleLayout::AllTemporal:
      return BlockKind::Temporal;
    case MiddleLayout::BranchHomogeneous: {
      const bool a_spatial = a_start == BranchStart::Spatial;
      return (a_spatial != is_branch_b) ? BlockKind::Spatial : BlockKind::Temporal;
    }
    case MiddleLayout::Interleaved: {
      const bool spatial_first = (a_start == BranchStart::Spatial) != is_branch_b;
      const bool even = middle_index % 2 == 0;
      return (spatial_first == even) ? BlockKind::Spatial : BlockKind::Temporal;
    }
  }
  throw ConfigError("unknown middle layout");
}

std::vector<Block> build_branch(Rng& rng, const NetworkConfig& config,
                                const ModelVariant& variant, bool is_branch_b,
                                const Tensor& a_s, const Tensor& a_t) {
  const std::size_t n = config.coord_rows();
  const std::size_t t = config.input_frames;
  const std::size_t blocks = config.blocks_per_branch();
  std::vector<Block> branch;
  branch.reserve(blocks);
  for (std::size_t i = 0; i < blocks; ++i) {
    const bool is_last = i + 1 == blocks;
    const std::size_t t_out = is_last ? config.output_frames : t;

    Block block;
    if (i == 0 || is_last) {
      block.kind = BlockKind::PlainMix;
    } else {
      block.kind = middle_kind(variant, config.branch_a_start, is_branch_b, i - 1);
      block.guidance = block.kind == BlockKind::Spatial ? variant.spatial_guidance
                                                        : variant.temporal_guidance;
    }

    BlockParams& p = block.params;
    p.w_spatial = uniform_init(rng, {n, n}, n);
    p.w_temporal = uniform_init(rng, {t, t_out}, t);
    p.ln1_gamma = Tensor::full({t}, 1.0, true);
    p.ln1_beta = Tensor::zeros({t}, true);
    p.ln2_gamma = Tensor::full({t_out}, 1.0, true);
    p.ln2_beta = Tensor::zeros({t_out}, true);

    if (block.kind != BlockKind::PlainMix) {
      const Tensor& adjacency = block.kind == BlockKind::Spatial ? a_s : a_t;
      if (config.trainable_mask) p.adjacency_mask = support_mask(adjacency);
      if (block.guidance != GuidanceMode::Fused) {
        if (block.guidance == GuidanceMode::StreamOwn) {
          p.w_stream = block.kind == BlockKind::Spatial ? uniform_init(rng, {t, t}, t)
                                                        : uniform_init(rng, {n, n}, n);
        }
        p.ln3_gamma = Tensor::full({t}, 1.0, true);
        p.ln3_beta = Tensor::zeros({t}, true);
        p.ln4_gamma = Tensor::full({t}, 1.0, true);
        p.ln4_beta = Tensor::zeros({t}, true);
      }
    }
    branch.push_back(std::move(block));
  }
  return branch;
}

Tensor run_block(Tape& tape, const Model& model, const Block& block, const Tensor& x) {
  switch (block.kind) {
    case BlockKind::PlainMix:
      return plain_block(tape, x, block.params);
    case BlockKind::Spatial:
      switch (block.guidance) {
        case GuidanceMode::Fused:
          return spatial_block(tape, x, block.params, model.a_s);
        case GuidanceMode::StreamTied:
          return spatial_block_stream(tape, x, block.params, model.a_s, true);
        case GuidanceMode::StreamOwn:
          return spatial_block_stream(tape, x, block.params, model.a_s, false);
      }
      break;
    case BlockKind::Temporal:
      switch (block.guidance) {
        case GuidanceMode::Fused:
          return temporal_block(tape, x, block.params, model.a_t);
        case GuidanceMode::StreamTied:
          return temporal_block_stream(tape, x, block.params, model.a_t, true);
        case GuidanceMode::StreamOwn:
          return temporal_block_stream(tape, x, block.params, model.a_t, false);
      }
      break;
  }
  throw ConfigError("unknown block kind");
}

void collect_block(std::vector<std::pair<std::string, Tensor>>& out,
                   const std::string& prefix, const Block& block) {
  const BlockParams& p = block.params;
  auto push = [&](const char* name, const Tensor& t) {
    if (t.defined()) out.emplace_back(prefix + "." + name, t);
  };
  push("w_spatial", p.w_spatial);
  push("w_temporal", p.w_temporal);
  push("ln1_gamma", p.ln1_gamma);
  push("ln1_beta", p.ln1_beta);
  push("ln2_gamma", p.ln2_gamma);
  push("ln2_beta", p.ln2_beta);
  push("adjacency_mask", p.adjacency_mask);
  push("w_stream", p.w_stream);
  push("ln3_gamma", p.ln3_gamma);
  push("ln3_beta", p.ln3_beta);
  push("ln4_gamma", p.ln4_gamma);
  push("ln4_beta", p.ln4_beta);
}

std::string block_name(const char* branch, std::size_t index) {
  std::ostringstream out;
  out << branch << ".block" << (index < 10 ? "0" : "") << index;
  return out.str();
}

}  // namespace

std::string to_string(BranchStart start) {
  return start == BranchStart::Spatial ? "spatial" : "temporal";
}

BranchStart branch_start_from_string(const std::string& text) {
  if (text == "spatial") return BranchStart::Spatial;
  if (text == "temporal") return BranchStart::Temporal;
  throw ConfigError("unknown branch_a_start \"" + text +
                    "\" (expected spatial or temporal)");
}

void NetworkConfig::validate() const {
  if (joints == 0) throw ConfigError("config: joints must be >= 1");
  if (input_frames == 0) throw ConfigError("config: input_frames must be >= 1");
  if (output_frames == 0) throw ConfigError("config: output_frames must be >= 1");
}

std::string config_to_json(const NetworkConfig& config) {
  nlohmann::json doc;
  doc["joints"] = config.joints;
  doc["input_frames"] = config.input_frames;
  doc["output_frames"] = config.output_frames;
  doc["middle_blocks"] = config.middle_blocks;
  doc["coupling_mode"] = to_string(config.coupling_mode);
  doc["self_loops"] = config.self_loops;
  doc["trainable_mask"] = config.trainable_mask;
  doc["branch_a_start"] = to_string(config.branch_a_start);
  doc["seed"] = config.seed;
  return doc.dump(2);
}

NetworkConfig config_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  NetworkConfig config;
  try {
    config.joints = doc.at("joints").get<std::size_t>();
    config.input_frames = doc.at("input_frames").get<std::size_t>();
    config.output_frames = doc.at("output_frames").get<std::size_t>();
    config.middle_blocks = doc.at("middle_blocks").get<std::size_t>();
    config.coupling_mode =
        coupling_mode_from_string(doc.at("coupling_mode").get<std::string>());
    config.self_loops = doc.at("self_loops").get<bool>();
    config.trainable_mask = doc.at("trainable_mask").get<bool>();
    config.branch_a_start =
        branch_start_from_string(doc.at("branch_a_start").get<std::string>());
    config.seed = doc.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::out_of_range& e) {
    throw ConfigError(std::string("config: missing field: ") + e.what());
  } catch (const nlohmann::json::type_error& e) {
    throw ConfigError(std::string("config: wrong field type: ") + e.what());
  }
  config.validate();
  return config;
}

NetworkConfig read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

void write_config(const std::filesystem::path& path, const NetworkConfig& config) {
  std::ofstream out(path);
  if (!out) throw IoError("config: cannot write " + path.string());
  out << config_to_json(config) << "\n";
}

Model init_parameters(const NetworkConfig& config, const SkeletonTopology& topology,
                      std::uint64_t seed, const ModelVariant& variant) {
  config.validate();
  topology.validate();
  if (topology.joint_count != config.joints) {
    throw ConfigError("config joints " + std::to_string(config.joints) +
                      " do not match topology joints " +
                      std::to_string(topology.joint_count));
  }

  Model model;
  model.config = config;
  model.variant = variant;
  model.topology = topology;
  model.a_s = normalize_adjacency(
      build_spatial_adjacency(topology, config.coupling_mode, config.self_loops).matrix);
  model.a_t = normalize_adjacency(
      build_temporal_adjacency(config.input_frames, config.self_loops).matrix);
  model.dct_in = make_dct_basis(config.input_frames);
  model.dct_out = make_dct_basis(config.output_frames);

  Rng rng(seed);
  model.branch_a = build_branch(rng, config, variant, false, model.a_s, model.a_t);
  if (variant.two_branch) {
    model.branch_b = build_branch(rng, config, variant, true, model.a_s, model.a_t);
    if (variant.fusion_blocks || variant.full_fuse) {
      std::vector<std::size_t> positions;
      if (variant.full_fuse) {
        for (std::size_t i = 0; i + 1 < config.blocks_per_branch(); ++i)
          positions.push_back(i);
      } else {
        positions = {0, config.middle_blocks};
      }
      for (std::size_t pos : positions) {
        FusionSite site;
        site.after_block = pos;
        if (config.trainable_mask) {
          site.mask_s = support_mask(model.a_s);
          site.mask_t = support_mask(model.a_t);
        }
        model.fusion_sites.push_back(std::move(site));
      }
    }
  }
  return model;
}

Model init_parameters(const NetworkConfig& config, std::uint64_t seed) {
  return init_parameters(config, chain_topology(config.joints), seed);
}

std::vector<std::pair<std::string, Tensor>> Model::named_parameters() const {
  std::vector<std::pair<std::string, Tensor>> out;
  for (std::size_t i = 0; i < branch_a.size(); ++i)
    collect_block(out, block_name("branch_a", i), branch_a[i]);
  for (std::size_t i = 0; i < branch_b.size(); ++i)
    collect_block(out, block_name("branch_b", i), branch_b[i]);
  for (std::size_t i = 0; i < fusion_sites.size(); ++i) {
    const FusionSite& site = fusion_sites[i];
    if (site.mask_s.defined())
      out.emplace_back("fusion" + std::to_string(i) + ".mask_s", site.mask_s);
    if (site.mask_t.defined())
      out.emplace_back("fusion" + std::to_string(i) + ".mask_t", site.mask_t);
  }
  return out;
}

void Model::zero_grad() const {
  for (auto& [name, tensor] : named_parameters()) tensor.clear_grad();
}

std::size_t count_parameters(const Model& model) {
  // Masks are stored densely (the adjacency's shape) but are trainable only
  // on the support, so they contribute the support size.
  auto nnz = [](const Tensor& t) {
    std::size_t c = 0;
    for (double v : t.values()) c += v != 0.0;
    return c;
  };
  const std::size_t support_s = nnz(model.a_s);
  const std::size_t support_t = nnz(model.a_t);

  std::size_t total = 0;
  auto add_block = [&](const Block& block) {
    const BlockParams& p = block.params;
    for (const Tensor* t : {&p.w_spatial, &p.w_temporal, &p.ln1_gamma, &p.ln1_beta,
                            &p.ln2_gamma, &p.ln2_beta, &p.w_stream, &p.ln3_gamma,
                            &p.ln3_beta, &p.ln4_gamma, &p.ln4_beta}) {
      if (t->defined()) total += t->numel();
    }
    if (p.adjacency_mask.defined()) {
      total += block.kind == BlockKind::Spatial ? support_s : support_t;
    }
  };
  for (const Block& b : model.branch_a) add_block(b);
  for (const Block& b : model.branch_b) add_block(b);
  for (const FusionSite& site : model.fusion_sites) {
    if (site.mask_s.defined()) total += support_s;
    if (site.mask_t.defined()) total += support_t;
  }
  return total;
}

std::uint64_t parameter_checksum(const Model& model) {
  std::uint64_t hash = 1469598103934665603ull;  // FNV-1a
  auto mix = [&hash](std::uint64_t bits) {
    for (int b = 0; b < 8; ++b) {
      hash ^= (bits >> (8 * b)) & 0xff;
      hash *= 1099511628211ull;
    }
  };
  for (const auto& [name, tensor] : model.named_parameters()) {
    for (char c : name) {
      hash ^= static_cast<unsigned char>(c);
      hash *= 1099511628211ull;
    }
    for (double v : tensor.values()) mix(std::bit_cast<std::uint64_t>(v));
  }
  return hash;
}

Model with_zero_adjacency(const Model& model) {
  Model probe = model;
  probe.a_s = Tensor::zeros(model.a_s.shape());
  probe.a_t = Tensor::zeros(model.a_t.shape());
  return probe;
}

Tensor forward(Tape& tape, const Model& model, const Tensor& pose_matrix) {
  const std::size_t n = model.config.coord_rows();
  const std::size_t t = model.config.input_frames;
  const std::size_t t_f = model.config.output_frames;
  if (pose_matrix.rank() != 2 || pose_matrix.rows() != n || pose_matrix.cols() != t) {
    throw ShapeError("forward: expected pose matrix [" + std::to_string(n) + " " +
                     std::to_string(t) + "], got " + shape_str(pose_matrix.shape()));
  }

  Tensor coeffs = dct_forward(tape, pose_matrix, model.dct_in);
  Tensor a = coeffs;
  Tensor b = coeffs;
  const std::size_t blocks = model.config.blocks_per_branch();
  for (std::size_t i = 0; i < blocks; ++i) {
    a = run_block(tape, model, model.branch_a[i], a);
    if (model.variant.two_branch) b = run_block(tape, model, model.branch_b[i], b);
    for (const FusionSite& site : model.fusion_sites) {
      if (site.after_block != i) continue;
      auto [na, nb] = fusion(tape, a, b, model.a_s, model.a_t, site.mask_s, site.mask_t);
      a = na;
      b = nb;
    }
  }
  Tensor merged = model.variant.two_branch ? add(tape, a, b) : a;
  Tensor decoded = dct_inverse(tape, merged, model.dct_out);

  // Offsets are predicted on top of the last observed pose.
  Tensor residual = Tensor::zeros({n, t_f});
  for (std::size_t r = 0; r < n; ++r) {
    const double last = pose_matrix.at(r, t - 1);
    for (std::size_t c = 0; c < t_f; ++c) residual.at(r, c) = last;
  }
  return add(tape, decoded, residual);
}

MotionSequence predict(const Model& model, const MotionSequence& seq) {
  if (seq.joints != model.config.joints || seq.frames != model.config.input_frames) {
    throw ShapeError("predict: sequence is " + std::to_string(seq.frames) + "x" +
                     std::to_string(seq.joints) + ", model expects " +
                     std::to_string(model.config.input_frames) + "x" +
                     std::to_string(model.config.joints));
  }
  Tape tape;
  Tensor out = forward(tape, model, to_pose_matrix(seq));
  return from_pose_matrix(out, seq.frame_rate);
}

}  // namespace ggmixer
