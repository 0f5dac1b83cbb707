#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ggmixer/rng.hpp"
#include "ggmixer/skeleton.hpp"
#include "ggmixer/tensor.hpp"

namespace ggmixer {

// T x J x 3 joint coordinates in millimeters, frame-major.
struct MotionSequence {
  std::size_t frames = 0;
  std::size_t joints = 0;
  double frame_rate = 25.0;
  std::vector<double> data;

  double& at(std::size_t frame, std::size_t joint, std::size_t axis) {
    return data[(frame * joints + joint) * 3 + axis];
  }
  double at(std::size_t frame, std::size_t joint, std::size_t axis) const {
    return data[(frame * joints + joint) * 3 + axis];
  }

  void validate() const;
};

// Forward-kinematics generator over a rooted bone tree. Joint angles are
// seeded harmonic sums, so adjacent joints stay coupled through the chain.
struct SyntheticSpec {
  SkeletonTopology skeleton;
  std::vector<double> bone_lengths_mm;  // aligned with skeleton.edges
  std::size_t num_harmonics = 3;
  double amplitude_min_rad = 0.1;
  double amplitude_max_rad = 0.6;
  double frequency_min_hz = 0.2;
  double frequency_max_hz = 1.5;
  std::size_t frames = 400;
  double frame_rate = 25.0;
  std::uint64_t seed = 0;

  void validate() const;
};

SyntheticSpec default_synthetic_spec(std::size_t joints = 8, std::uint64_t seed = 0);

MotionSequence generate_synthetic(const SyntheticSpec& spec);

// Largest cumulative bone length from the root to any joint; the smoothness
// bound of the generator scales with it.
double max_chain_length(const SyntheticSpec& spec);

// Row 3j+c holds coordinate c of joint j over time; column t is the
// flattened pose at frame t.
Tensor to_pose_matrix(const MotionSequence& seq);
MotionSequence from_pose_matrix(const Tensor& x, double frame_rate);

struct Window {
  MotionSequence input;
  MotionSequence target;
};

struct Dataset {
  std::vector<Window> windows;
  std::string split;
};

// Sliding windows: input = [k, k+T), target = [k+T, k+T+T_f) at the given
// stride. A too-short sequence yields an empty dataset.
Dataset window(const MotionSequence& seq, std::size_t input_frames,
               std::size_t target_frames, std::size_t stride);

// With probability p, time-reverse the concatenated input:target sequence
// and split it again at the same boundary.
Window augment_reverse(const Window& w, double p, Rng& rng);

void write_motion(const std::filesystem::path& path, const MotionSequence& seq);
MotionSequence read_motion(const std::filesystem::path& path);

}  // namespace ggmixer
