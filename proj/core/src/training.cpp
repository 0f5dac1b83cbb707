#include "ggmixer/training.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "io_util.hpp"

namespace ggmixer {
namespace {

constexpr char kMagic[4] = {'G', 'G', 'M', 'X'};
constexpr std::uint32_t kVersion = 1;

// J x N selector summing the three coordinate rows of each joint.
Tensor joint_selector(std::size_t joints) {
  Tensor s = Tensor::zeros({joints, 3 * joints});
  for (std::size_t j = 0; j < joints; ++j)
    for (std::size_t c = 0; c < 3; ++c) s.at(j, 3 * j + c) = 1.0;
  return s;
}

// T x (T-1) forward-difference matrix; right-multiplication yields
// per-frame velocities.
Tensor difference_matrix(std::size_t frames) {
  Tensor d = Tensor::zeros({frames, frames - 1});
  for (std::size_t t = 0; t + 1 < frames; ++t) {
    d.at(t, t) = -1.0;
    d.at(t + 1, t) = 1.0;
  }
  return d;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("train config: batch_size must be positive");
  if (!(lr_initial > 0.0) || !(lr_final > 0.0)) {
    throw ConfigError("train config: learning rates must be positive");
  }
  if (lr_drop_iteration > iterations) {
    throw ConfigError("train config: lr_drop_iteration must not exceed iterations");
  }
  if (augment_probability < 0.0 || augment_probability > 1.0) {
    throw ConfigError("train config: augment_probability must lie in [0,1]");
  }
  if (log_every == 0) throw ConfigError("train config: log_every must be positive");
}

Tensor mpjpe_loss(Tape& tape, const Tensor& pred, const Tensor& target, double eps) {
  if (!pred.same_shape(target)) {
    throw ShapeError("mpjpe: shapes disagree: " + shape_str(pred.shape()) + " vs " +
                     shape_str(target.shape()));
  }
  if (pred.rank() != 2 || pred.rows() % 3 != 0) {
    throw ShapeError("mpjpe: expected a (3J) x T pose matrix, got " +
                     shape_str(pred.shape()));
  }
  const std::size_t joints = pred.rows() / 3;
  const std::size_t frames = pred.cols();
  Tensor diff = sub(tape, pred, target);
  Tensor squared = matmul(tape, joint_selector(joints), mul(tape, diff, diff));
  Tensor norms = sqrt_smooth(tape, squared, eps);
  return scale(tape, sum(tape, norms),
               1.0 / static_cast<double>(joints * frames));
}

std::vector<double> mpjpe_per_frame(const MotionSequence& pred,
                                    const MotionSequence& target) {
  if (pred.frames != target.frames || pred.joints != target.joints) {
    throw ShapeError("mpjpe_per_frame: sequence dimensions disagree");
  }
  std::vector<double> out(pred.frames, 0.0);
  for (std::size_t f = 0; f < pred.frames; ++f) {
    double acc = 0.0;
    for (std::size_t j = 0; j < pred.joints; ++j) {
      double sq = 0.0;
      for (std::size_t c = 0; c < 3; ++c) {
        const double d = pred.at(f, j, c) - target.at(f, j, c);
        sq += d * d;
      }
      acc += std::sqrt(sq);
    }
    out[f] = acc / static_cast<double>(pred.joints);
  }
  return out;
}

double lr_schedule(std::size_t iteration, const TrainConfig& cfg) {
  return iteration < cfg.lr_drop_iteration ? cfg.lr_initial : cfg.lr_final;
}

AdamState::AdamState(std::vector<std::pair<std::string, Tensor>> params,
                     AdamConfig config)
    : config_(config) {
  slots_.reserve(params.size());
  for (auto& [name, tensor] : params) {
    Slot slot;
    slot.name = name;
    slot.param = tensor;
    slot.m.assign(tensor.numel(), 0.0);
    slot.v.assign(tensor.numel(), 0.0);
    slots_.push_back(std::move(slot));
  }
}

void AdamState::step(double lr) {
  ++step_;
  const double bias1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double bias2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  for (Slot& slot : slots_) {
    auto& values = slot.param.values();
    const bool has_grad = slot.param.has_grad();
    const std::vector<double>* grad = has_grad ? &slot.param.grad() : nullptr;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grad ? (*grad)[i] : 0.0;
      if (!std::isfinite(g)) {
        throw NumericError("adam: non-finite gradient in parameter " + slot.name);
      }
      slot.m[i] = config_.beta1 * slot.m[i] + (1.0 - config_.beta1) * g;
      slot.v[i] = config_.beta2 * slot.v[i] + (1.0 - config_.beta2) * g * g;
      const double mhat = slot.m[i] / bias1;
      const double vhat = slot.v[i] / bias2;
      values[i] -= lr * mhat / (std::sqrt(vhat) + config_.eps);
    }
  }
}

TrainResult train(Model& model, const Dataset& data, const TrainConfig& cfg,
                  const TrainLogger& logger) {
  cfg.validate();
  if (data.windows.empty()) throw ConfigError("train: dataset is empty");

  Rng rng(cfg.seed);
  AdamState adam(model.named_parameters());
  const Tensor velocity_map = model.config.output_frames > 1
                                  ? difference_matrix(model.config.output_frames)
                                  : Tensor{};
  TrainResult result;
  result.loss_history.reserve(cfg.iterations);

  model.zero_grad();
  for (std::size_t iter = 0; iter < cfg.iterations; ++iter) {
    const double lr = lr_schedule(iter, cfg);
    Tape tape;
    Tensor total;
    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
      const Window& picked = data.windows[rng.index(data.windows.size())];
      Window sample = augment_reverse(picked, cfg.augment_probability, rng);
      Tensor input = to_pose_matrix(sample.input);
      Tensor target = to_pose_matrix(sample.target);
      Tensor pred = forward(tape, model, input);
      Tensor loss = mpjpe_loss(tape, pred, target);
      if (cfg.velocity_loss && velocity_map.defined()) {
        Tensor vel_loss = mpjpe_loss(tape, matmul(tape, pred, velocity_map),
                                     matmul(tape, target, velocity_map));
        loss = add(tape, loss, vel_loss);
      }
      total = total.defined() ? add(tape, total, loss) : loss;
    }
    Tensor mean_loss = scale(tape, total, 1.0 / static_cast<double>(cfg.batch_size));
    const double value = mean_loss.item();
    if (!std::isfinite(value)) {
      std::ostringstream msg;
      msg << "train: non-finite loss " << value << " at iteration " << iter
          << " (lr " << lr << ")";
      throw NumericError(msg.str());
    }
    tape.backward(mean_loss);
    adam.step(lr);
    model.zero_grad();
    result.loss_history.push_back(value);
    if (logger && (iter % cfg.log_every == 0 || iter + 1 == cfg.iterations)) {
      logger(iter, value, lr);
    }
  }
  return result;
}

void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     std::uint64_t iteration) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("checkpoint: cannot write " + path.string());
  const auto params = model.named_parameters();
  out.write(kMagic, 4);
  detail::write_u32(out, kVersion);
  detail::write_u64(out, iteration);
  detail::write_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, tensor] : params) {
    detail::write_u16(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    const Shape& shape = tensor.shape();
    out.put(static_cast<char>(shape.size()));
    for (std::size_t d : shape) detail::write_u32(out, static_cast<std::uint32_t>(d));
    for (double v : tensor.values()) detail::write_f32(out, static_cast<float>(v));
  }
  if (!out) throw IoError("checkpoint: write failed for " + path.string());
}

namespace {

struct RawTensor {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

std::pair<std::uint64_t, std::vector<RawTensor>> read_all(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4) throw TruncationError("checkpoint: truncated header");
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw MagicError("checkpoint: bad magic in " + path.string());
  }
  const std::uint32_t version = detail::read_u32(in, "checkpoint version");
  if (version != kVersion) {
    throw VersionError("checkpoint: unsupported version " + std::to_string(version));
  }
  const std::uint64_t iteration = detail::read_u64(in, "checkpoint iteration");
  const std::uint32_t count = detail::read_u32(in, "checkpoint tensor count");
  std::vector<RawTensor> tensors;
  tensors.reserve(count);
  for (std::uint32_t t = 0; t < count; ++t) {
    RawTensor raw;
    const std::uint16_t name_len = detail::read_u16(in, "tensor name length");
    raw.name.resize(name_len);
    in.read(raw.name.data(), name_len);
    if (in.gcount() != name_len) throw TruncationError("checkpoint: truncated tensor name");
    const int rank = in.get();
    if (rank == EOF) throw TruncationError("checkpoint: truncated tensor rank");
    if (rank <= 0 || rank > 3) {
      throw DimensionError("checkpoint: implausible rank " + std::to_string(rank) +
                           " for tensor " + raw.name);
    }
    std::size_t numel = 1;
    for (int d = 0; d < rank; ++d) {
      const std::uint32_t dim = detail::read_u32(in, "tensor dimension");
      if (dim == 0 || dim > (1u << 24)) {
        throw DimensionError("checkpoint: implausible dimension " + std::to_string(dim) +
                             " in tensor " + raw.name);
      }
      raw.shape.push_back(dim);
      numel *= dim;
    }
    raw.values.resize(numel);
    for (float& v : raw.values) v = detail::read_f32(in, "tensor payload");
    tensors.push_back(std::move(raw));
  }
  return {iteration, std::move(tensors)};
}

}  // namespace

std::uint64_t load_checkpoint(const std::filesystem::path& path, const Model& model) {
  auto [iteration, tensors] = read_all(path);
  auto params = model.named_parameters();
  std::unordered_map<std::string, Tensor> by_name;
  for (auto& [name, tensor] : params) by_name.emplace(name, tensor);

  if (tensors.size() != params.size()) {
    throw ShapeError("checkpoint: holds " + std::to_string(tensors.size()) +
                     " tensors but the model has " + std::to_string(params.size()));
  }
  for (const RawTensor& raw : tensors) {
    auto it = by_name.find(raw.name);
    if (it == by_name.end()) {
      throw ShapeError("checkpoint: tensor " + raw.name + " does not exist in the model");
    }
    Tensor dst = it->second;
    if (dst.shape() != raw.shape) {
      throw ShapeError("checkpoint: tensor " + raw.name + " has shape " +
                       shape_str(raw.shape) + " but the model expects " +
                       shape_str(dst.shape()));
    }
    for (std::size_t i = 0; i < raw.values.size(); ++i) {
      dst.values()[i] = static_cast<double>(raw.values[i]);
    }
    dst.clear_grad();
  }
  return iteration;
}

CheckpointInfo inspect_checkpoint(const std::filesystem::path& path) {
  auto [iteration, tensors] = read_all(path);
  CheckpointInfo info;
  info.iteration = iteration;
  for (const RawTensor& raw : tensors) {
    info.tensors.emplace_back(raw.name, raw.shape);
    info.total_values += raw.values.size();
    const bool is_mask = raw.name.ends_with("adjacency_mask") ||
                         raw.name.ends_with("mask_s") || raw.name.ends_with("mask_t");
    if (is_mask) {
      for (float v : raw.values) info.trainable_values += v != 0.0f;
    } else {
      info.trainable_values += raw.values.size();
    }
  }
  return info;
}

}  // namespace ggmixer
