#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ggmixer/network.hpp"

namespace ggmixer {

struct TrainConfig {
  std::size_t iterations = 2000;
  std::size_t batch_size = 32;
  double lr_initial = 5e-4;
  double lr_final = 5e-6;
  std::size_t lr_drop_iteration = 1833;  // 11/12 of the default run
  std::uint64_t seed = 0;
  double augment_probability = 0.5;
  bool velocity_loss = false;  // optional auxiliary term, off by default
  std::size_t log_every = 100;

  void validate() const;
};

// Differentiable MPJPE between N x T pose matrices (rows 3j+c): mean over
// joints and frames of the per-joint Euclidean error; the root is smoothed
// by eps so the loss stays differentiable at a perfect prediction.
Tensor mpjpe_loss(Tape& tape, const Tensor& pred, const Tensor& target,
                  double eps = 1e-12);

// Plain evaluation-side MPJPE per frame (millimeters), no smoothing.
std::vector<double> mpjpe_per_frame(const MotionSequence& pred,
                                    const MotionSequence& target);

// Step schedule: lr_initial before lr_drop_iteration, lr_final from there on.
double lr_schedule(std::size_t iteration, const TrainConfig& cfg);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam over a fixed named parameter list. Gradients are read
// from the tensors themselves; step() applies the update in place.
class AdamState {
 public:
  explicit AdamState(std::vector<std::pair<std::string, Tensor>> params,
                     AdamConfig config = {});

  void step(double lr);
  std::size_t iteration() const { return step_; }

 private:
  struct Slot {
    std::string name;
    Tensor param;
    std::vector<double> m, v;
  };
  std::vector<Slot> slots_;
  AdamConfig config_;
  std::size_t step_ = 0;
};

struct TrainResult {
  std::vector<double> loss_history;  // one entry per iteration
};

using TrainLogger =
    std::function<void(std::size_t iteration, double loss, double lr)>;

// Seeded minibatch training with replacement; aborts with diagnostics on a
// non-finite loss. The model is updated in place.
TrainResult train(Model& model, const Dataset& data, const TrainConfig& cfg,
                  const TrainLogger& logger = {});

void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     std::uint64_t iteration);

// Restores parameter values (f32 round trip) into an identically configured
// model; returns the stored iteration counter.
std::uint64_t load_checkpoint(const std::filesystem::path& path, const Model& model);

struct CheckpointInfo {
  std::uint64_t iteration = 0;
  std::vector<std::pair<std::string, Shape>> tensors;
  std::size_t total_values = 0;    // raw stored scalars
  std::size_t trainable_values = 0;  // mask tensors counted by support
};

CheckpointInfo inspect_checkpoint(const std::filesystem::path& path);

}  // namespace ggmixer
