#include "ggmixer/motion.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <queue>

#include "io_util.hpp"

namespace ggmixer {
namespace {

constexpr char kMagic[4] = {'G', 'G', 'M', 'S'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint64_t kMaxFileJoints = 1u << 16;
constexpr std::uint64_t kMaxFileFrames = 1u << 24;

struct Harmonic {
  double amplitude;
  double omega;  // radians per frame
  double phase;
};

// Sum of harmonics with amplitudes capped so that the per-frame angular
// step never exceeds cap * 2*pi*f_max / frame_rate.
std::vector<Harmonic> draw_channel(Rng& rng, const SyntheticSpec& spec, double cap) {
  std::vector<Harmonic> h(spec.num_harmonics);
  double total = 0.0;
  for (auto& hh : h) {
    hh.amplitude = rng.uniform(spec.amplitude_min_rad, spec.amplitude_max_rad);
    hh.omega = 2.0 * std::numbers::pi *
               rng.uniform(spec.frequency_min_hz, spec.frequency_max_hz) /
               spec.frame_rate;
    hh.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    total += hh.amplitude;
  }
  if (total > cap && total > 0.0) {
    const double s = cap / total;
    for (auto& hh : h) hh.amplitude *= s;
  }
  return h;
}

double eval_channel(const std::vector<Harmonic>& h, std::size_t frame) {
  double v = 0.0;
  for (const auto& hh : h) v += hh.amplitude * std::sin(hh.omega * frame + hh.phase);
  return v;
}

// Parent array of a spanning tree rooted at joint 0, with bone lengths per
// joint. Edges outside the tree only matter for adjacency, not kinematics.
struct BoneTree {
  std::vector<std::size_t> order;    // root first, parents before children
  std::vector<std::size_t> parent;   // parent[j], root maps to itself
  std::vector<double> length;        // bone length to parent, mm
};

BoneTree spanning_tree(const SkeletonTopology& topo, const std::vector<double>& bones) {
  const std::size_t j = topo.joint_count;
  std::vector<std::vector<std::pair<std::size_t, double>>> adj(j);
  for (std::size_t e = 0; e < topo.edges.size(); ++e) {
    auto [a, b] = topo.edges[e];
    adj[a].emplace_back(b, bones[e]);
    adj[b].emplace_back(a, bones[e]);
  }
  BoneTree tree;
  tree.parent.assign(j, 0);
  tree.length.assign(j, 0.0);
  std::vector<bool> seen(j, false);
  std::queue<std::size_t> frontier;
  // Disconnected joints become extra roots anchored at the origin offset.
  for (std::size_t root = 0; root < j; ++root) {
    if (seen[root]) continue;
    seen[root] = true;
    tree.parent[root] = root;
    tree.order.push_back(root);
    frontier.push(root);
    while (!frontier.empty()) {
      const std::size_t cur = frontier.front();
      frontier.pop();
      for (auto [next, len] : adj[cur]) {
        if (seen[next]) continue;
        seen[next] = true;
        tree.parent[next] = cur;
        tree.length[next] = len;
        tree.order.push_back(next);
        frontier.push(next);
      }
    }
  }
  return tree;
}

using detail::read_f32;
using detail::read_u32;
using detail::write_f32;
using detail::write_u32;

}  // namespace

void MotionSequence::validate() const {
  if (frames == 0 || joints == 0) {
    throw ConfigError("motion sequence: frames and joints must be positive");
  }
  if (data.size() != frames * joints * 3) {
    throw ShapeError("motion sequence: data size does not match dimensions");
  }
  for (double v : data) {
    if (!std::isfinite(v)) throw NumericError("motion sequence: non-finite coordinate");
  }
}

void SyntheticSpec::validate() const {
  skeleton.validate();
  if (bone_lengths_mm.size() != skeleton.edges.size()) {
    throw ConfigError("synthetic spec: one bone length per edge required");
  }
  for (double l : bone_lengths_mm) {
    if (!(l > 0.0)) throw ConfigError("synthetic spec: bone lengths must be positive");
  }
  if (frames == 0) throw ConfigError("synthetic spec: frames must be positive");
  if (!(frame_rate > 0.0)) throw ConfigError("synthetic spec: frame_rate must be positive");
  if (!(amplitude_min_rad >= 0.0) || amplitude_max_rad < amplitude_min_rad) {
    throw ConfigError("synthetic spec: invalid amplitude range");
  }
  if (!(frequency_min_hz > 0.0) || frequency_max_hz < frequency_min_hz) {
    throw ConfigError("synthetic spec: invalid frequency range");
  }
  if (!(frequency_max_hz < frame_rate / 2.0)) {
    throw ConfigError("synthetic spec: max frequency must stay below frame_rate/2");
  }
}

SyntheticSpec default_synthetic_spec(std::size_t joints, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.skeleton = chain_topology(joints);
  spec.bone_lengths_mm.assign(spec.skeleton.edges.size(), 100.0);
  spec.seed = seed;
  return spec;
}

double max_chain_length(const SyntheticSpec& spec) {
  BoneTree tree = spanning_tree(spec.skeleton, spec.bone_lengths_mm);
  std::vector<double> depth(spec.skeleton.joint_count, 0.0);
  double best = 0.0;
  for (std::size_t j : tree.order) {
    if (tree.parent[j] != j) depth[j] = depth[tree.parent[j]] + tree.length[j];
    best = std::max(best, depth[j]);
  }
  return best;
}

MotionSequence generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t j = spec.skeleton.joint_count;
  BoneTree tree = spanning_tree(spec.skeleton, spec.bone_lengths_mm);
  Rng rng(spec.seed);

  // Per joint: rest direction plus one harmonic set per spherical angle.
  // Each channel's amplitude budget is half the configured maximum so the
  // per-frame displacement bound in terms of amplitude_max_rad holds.
  struct JointMotion {
    double theta0, phi0;
    std::vector<Harmonic> theta, phi;
  };
  std::vector<JointMotion> motion(j);
  for (std::size_t idx : tree.order) {
    if (tree.parent[idx] == idx) continue;
    JointMotion m;
    m.theta0 = rng.uniform(std::numbers::pi * 0.25, std::numbers::pi * 0.75);
    m.phi0 = rng.uniform(0.0, 2.0 * std::numbers::pi);
    m.theta = draw_channel(rng, spec, spec.amplitude_max_rad / 2.0);
    m.phi = draw_channel(rng, spec, spec.amplitude_max_rad / 2.0);
    motion[idx] = std::move(m);
  }
  // Root drift in mm, budgeted well inside the joint bound.
  const double chain = std::max(max_chain_length(spec), 1.0);
  std::vector<std::vector<Harmonic>> root(3);
  for (auto& channel : root) {
    channel = draw_channel(rng, spec, spec.amplitude_max_rad / 8.0);
    for (auto& h : channel) h.amplitude *= chain;
  }

  MotionSequence seq;
  seq.frames = spec.frames;
  seq.joints = j;
  seq.frame_rate = spec.frame_rate;
  seq.data.assign(spec.frames * j * 3, 0.0);

  std::vector<double> pos(j * 3, 0.0);
  for (std::size_t f = 0; f < spec.frames; ++f) {
    for (std::size_t idx : tree.order) {
      double* p = pos.data() + idx * 3;
      if (tree.parent[idx] == idx) {
        p[0] = eval_channel(root[0], f);
        p[1] = eval_channel(root[1], f);
        p[2] = 1000.0 + eval_channel(root[2], f);
      } else {
        const double* q = pos.data() + tree.parent[idx] * 3;
        const JointMotion& m = motion[idx];
        const double theta = m.theta0 + eval_channel(m.theta, f);
        const double phi = m.phi0 + eval_channel(m.phi, f);
        const double len = tree.length[idx];
        p[0] = q[0] + len * std::sin(theta) * std::cos(phi);
        p[1] = q[1] + len * std::sin(theta) * std::sin(phi);
        p[2] = q[2] + len * std::cos(theta);
      }
      for (std::size_t c = 0; c < 3; ++c) seq.at(f, idx, c) = p[c];
    }
  }
  return seq;
}

Tensor to_pose_matrix(const MotionSequence& seq) {
  const std::size_t n = 3 * seq.joints, t = seq.frames;
  Tensor x = Tensor::zeros({n, t});
  auto& v = x.values();
  for (std::size_t f = 0; f < t; ++f)
    for (std::size_t joint = 0; joint < seq.joints; ++joint)
      for (std::size_t c = 0; c < 3; ++c)
        v[(3 * joint + c) * t + f] = seq.at(f, joint, c);
  return x;
}

MotionSequence from_pose_matrix(const Tensor& x, double frame_rate) {
  if (x.rank() != 2 || x.rows() % 3 != 0) {
    throw ShapeError("pose matrix must be (3J) x T, got " + shape_str(x.shape()));
  }
  MotionSequence seq;
  seq.joints = x.rows() / 3;
  seq.frames = x.cols();
  seq.frame_rate = frame_rate;
  seq.data.assign(seq.frames * seq.joints * 3, 0.0);
  const auto& v = x.values();
  for (std::size_t f = 0; f < seq.frames; ++f)
    for (std::size_t joint = 0; joint < seq.joints; ++joint)
      for (std::size_t c = 0; c < 3; ++c)
        seq.at(f, joint, c) = v[(3 * joint + c) * seq.frames + f];
  return seq;
}

Dataset window(const MotionSequence& seq, std::size_t input_frames,
               std::size_t target_frames, std::size_t stride) {
  if (stride == 0) throw ParameterError("window: stride must be positive");
  if (input_frames == 0 || target_frames == 0) {
    throw ParameterError("window: window widths must be positive");
  }
  Dataset ds;
  const std::size_t span = input_frames + target_frames;
  for (std::size_t k = 0; k + span <= seq.frames; k += stride) {
    Window w;
    w.input.frames = input_frames;
    w.input.joints = seq.joints;
    w.input.frame_rate = seq.frame_rate;
    w.input.data.assign(seq.data.begin() + static_cast<std::ptrdiff_t>(k * seq.joints * 3),
                        seq.data.begin() + static_cast<std::ptrdiff_t>((k + input_frames) * seq.joints * 3));
    w.target.frames = target_frames;
    w.target.joints = seq.joints;
    w.target.frame_rate = seq.frame_rate;
    w.target.data.assign(
        seq.data.begin() + static_cast<std::ptrdiff_t>((k + input_frames) * seq.joints * 3),
        seq.data.begin() + static_cast<std::ptrdiff_t>((k + span) * seq.joints * 3));
    ds.windows.push_back(std::move(w));
  }
  return ds;
}

Window augment_reverse(const Window& w, double p, Rng& rng) {
  if (p < 0.0 || p > 1.0) throw ParameterError("augment_reverse: p must lie in [0,1]");
  if (!rng.bernoulli(p)) return w;
  const std::size_t t_in = w.input.frames, t_out = w.target.frames;
  const std::size_t total = t_in + t_out;
  const std::size_t stride = w.input.joints * 3;

  auto frame_of = [&](std::size_t f) -> const double* {
    // Frame f of the reversed concatenated sequence.
    const std::size_t src = total - 1 - f;
    return src < t_in ? w.input.data.data() + src * stride
                      : w.target.data.data() + (src - t_in) * stride;
  };

  Window out;
  out.input = w.input;
  out.target = w.target;
  for (std::size_t f = 0; f < t_in; ++f)
    std::copy(frame_of(f), frame_of(f) + stride, out.input.data.begin() + static_cast<std::ptrdiff_t>(f * stride));
  for (std::size_t f = 0; f < t_out; ++f)
    std::copy(frame_of(t_in + f), frame_of(t_in + f) + stride,
              out.target.data.begin() + static_cast<std::ptrdiff_t>(f * stride));
  return out;
}

void write_motion(const std::filesystem::path& path, const MotionSequence& seq) {
  seq.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("motion file: cannot write " + path.string());
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  write_f32(out, static_cast<float>(seq.frame_rate));
  write_u32(out, static_cast<std::uint32_t>(seq.frames));
  write_u32(out, static_cast<std::uint32_t>(seq.joints));
  for (double v : seq.data) write_f32(out, static_cast<float>(v));
  if (!out) throw IoError("motion file: write failed for " + path.string());
}

MotionSequence read_motion(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("motion file: cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4) throw TruncationError("motion file: truncated header");
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw MagicError("motion file: bad magic in " + path.string());
  }
  const std::uint32_t version = read_u32(in, "version");
  if (version != kVersion) {
    throw VersionError("motion file: unsupported version " + std::to_string(version));
  }
  MotionSequence seq;
  seq.frame_rate = read_f32(in, "frame_rate");
  const std::uint32_t frames = read_u32(in, "frame count");
  const std::uint32_t joints = read_u32(in, "joint count");
  if (frames == 0 || joints == 0 || frames > kMaxFileFrames || joints > kMaxFileJoints) {
    throw DimensionError("motion file: implausible dimensions " + std::to_string(frames) +
                         " x " + std::to_string(joints));
  }
  seq.frames = frames;
  seq.joints = joints;
  seq.data.resize(static_cast<std::size_t>(frames) * joints * 3);
  for (double& v : seq.data) v = read_f32(in, "payload");
  return seq;
}

}  // namespace ggmixer
