#include "ggmixer/skeleton.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace ggmixer {

void SkeletonTopology::validate() const {
  if (joint_count == 0) throw TopologyError("topology: joint_count must be positive");
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (auto [a, b] : edges) {
    if (a >= joint_count || b >= joint_count) {
      throw TopologyError("topology: edge (" + std::to_string(a) + "," +
                          std::to_string(b) + ") references a joint outside [0," +
                          std::to_string(joint_count) + ")");
    }
    if (a == b) {
      throw TopologyError("topology: self-edge at joint " + std::to_string(a));
    }
    auto key = std::minmax(a, b);
    if (!seen.insert(key).second) {
      throw TopologyError("topology: duplicate edge (" + std::to_string(key.first) +
                          "," + std::to_string(key.second) + ")");
    }
  }
}

SkeletonTopology chain_topology(std::size_t joints) {
  SkeletonTopology topo;
  topo.joint_count = joints;
  for (std::size_t j = 0; j + 1 < joints; ++j) topo.edges.emplace_back(j, j + 1);
  topo.validate();
  return topo;
}

SkeletonTopology h36m22_topology() {
  SkeletonTopology topo;
  topo.joint_count = 22;
  topo.edges = {
      {0, 1},   {1, 2},   {2, 3},   {3, 4},    // right leg
      {0, 5},   {5, 6},   {6, 7},   {7, 8},    // left leg
      {0, 9},   {9, 10},  {10, 11}, {11, 12},  // spine to head
      {10, 13}, {13, 14}, {14, 15}, {15, 16},  // left arm
      {10, 17}, {17, 18}, {18, 19}, {19, 20},  // right arm
      {12, 21},                                // head top
  };
  topo.validate();
  return topo;
}

SkeletonTopology topology_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(std::string("topology: invalid JSON: ") + e.what());
  }
  SkeletonTopology topo;
  if (!doc.contains("joint_count") || !doc.contains("edges")) {
    throw IoError("topology: expected fields joint_count and edges");
  }
  topo.joint_count = doc.at("joint_count").get<std::size_t>();
  for (const auto& e : doc.at("edges")) {
    if (!e.is_array() || e.size() != 2) {
      throw IoError("topology: each edge must be a pair [i,j]");
    }
    topo.edges.emplace_back(e[0].get<std::size_t>(), e[1].get<std::size_t>());
  }
  topo.validate();
  return topo;
}

std::string topology_to_json(const SkeletonTopology& topo) {
  nlohmann::json doc;
  doc["joint_count"] = topo.joint_count;
  auto edges = nlohmann::json::array();
  for (auto [a, b] : topo.edges) edges.push_back({a, b});
  doc["edges"] = edges;
  return doc.dump(2);
}

SkeletonTopology read_topology(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("topology: cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return topology_from_json(buf.str());
}

void write_topology(const std::filesystem::path& path, const SkeletonTopology& topo) {
  std::ofstream out(path);
  if (!out) throw IoError("topology: cannot write " + path.string());
  out << topology_to_json(topo) << "\n";
}

std::string to_string(CouplingMode mode) {
  return mode == CouplingMode::AxisIdentity ? "axis-identity" : "full-block";
}

CouplingMode coupling_mode_from_string(const std::string& text) {
  if (text == "axis-identity") return CouplingMode::AxisIdentity;
  if (text == "full-block") return CouplingMode::FullBlock;
  throw ConfigError("unknown coupling mode \"" + text +
                    "\" (expected axis-identity or full-block)");
}

SpatialAdjacency build_spatial_adjacency(const SkeletonTopology& topo,
                                         CouplingMode coupling, bool self_loops) {
  topo.validate();
  const std::size_t j = topo.joint_count;

  std::vector<double> joint(j * j, 0.0);
  for (auto [a, b] : topo.edges) joint[a * j + b] = joint[b * j + a] = 1.0;
  if (self_loops)
    for (std::size_t p = 0; p < j; ++p) joint[p * j + p] = 1.0;

  const std::size_t n = 3 * j;
  Tensor out = Tensor::zeros({n, n});
  auto& v = out.values();
  for (std::size_t p = 0; p < j; ++p) {
    for (std::size_t q = 0; q < j; ++q) {
      if (joint[p * j + q] == 0.0) continue;
      for (std::size_t a = 0; a < 3; ++a) {
        for (std::size_t b = 0; b < 3; ++b) {
          if (coupling == CouplingMode::AxisIdentity && a != b) continue;
          v[(3 * p + a) * n + (3 * q + b)] = 1.0;
        }
      }
    }
  }
  return SpatialAdjacency{out, coupling};
}

TemporalAdjacency build_temporal_adjacency(std::size_t frames, bool self_loops) {
  if (frames == 0) throw ParameterError("temporal adjacency: frame count must be positive");
  Tensor out = Tensor::zeros({frames, frames});
  auto& v = out.values();
  for (std::size_t i = 0; i < frames; ++i) {
    if (self_loops) v[i * frames + i] = 1.0;
    if (i + 1 < frames) {
      v[i * frames + (i + 1)] = 1.0;
      v[(i + 1) * frames + i] = 1.0;
    }
  }
  return TemporalAdjacency{out};
}

Tensor normalize_adjacency(const Tensor& a) {
  const std::size_t n = a.rows();
  if (a.cols() != n) {
    throw ContractError("normalize_adjacency: matrix must be square, got " +
                        shape_str(a.shape()));
  }
  const auto& v = a.values();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (v[i * n + j] != v[j * n + i]) {
        throw ContractError("normalize_adjacency: input is asymmetric at (" +
                            std::to_string(i) + "," + std::to_string(j) + ")");
      }
    }
  }
  std::vector<double> inv_sqrt(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (v[i * n + j] < 0.0) {
        throw ContractError("normalize_adjacency: negative entry at row " +
                            std::to_string(i));
      }
      deg += v[i * n + j];
    }
    inv_sqrt[i] = deg > 0.0 ? 1.0 / std::sqrt(deg) : 0.0;
  }
  Tensor out = Tensor::zeros({n, n});
  auto& o = out.values();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      o[i * n + j] = inv_sqrt[i] * v[i * n + j] * inv_sqrt[j];
  return out;
}

}  // namespace ggmixer
