#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ggmixer/errors.hpp"

namespace ggmixer {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct TensorData {
  Shape shape;
  std::vector<double> values;  // row-major
  bool requires_grad = false;
  std::vector<double> grad;  // empty until the first accumulation
};

// Shared handle to a dense row-major f64 array. Copies alias the same
// storage, so a parameter handed to a model and updated by an optimizer is
// seen everywhere. Gradients live next to the values and accumulate by
// addition across uses.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor scalar(double value);
  static Tensor identity(std::size_t n);

  bool defined() const { return static_cast<bool>(data_); }

  const Shape& shape() const { return data_->shape; }
  std::size_t rank() const { return data_->shape.size(); }
  std::size_t numel() const { return data_->values.size(); }
  std::size_t rows() const;
  std::size_t cols() const;
  bool same_shape(const Tensor& other) const;

  // Tensor is a handle: const applies to the handle, not the storage, so
  // accessors stay const like shared_ptr's.
  std::vector<double>& values() const { return data_->values; }
  double& at(std::size_t r, std::size_t c) const;
  double item() const;

  bool requires_grad() const { return data_->requires_grad; }
  void set_requires_grad(bool b) const { data_->requires_grad = b; }

  bool has_grad() const { return data_ && !data_->grad.empty(); }
  // Zero-filled on first access; shape matches values.
  std::vector<double>& grad() const;
  void accumulate_grad(std::span<const double> g) const;
  void clear_grad() const;

  // Deep copy that never participates in differentiation.
  Tensor detached_copy() const;

  bool all_finite() const;

  // Stable identity of the underlying storage.
  const TensorData* id() const { return data_.get(); }

 private:
  explicit Tensor(std::shared_ptr<TensorData> data) : data_(std::move(data)) {}
  std::shared_ptr<TensorData> data_;
};

}  // namespace ggmixer
