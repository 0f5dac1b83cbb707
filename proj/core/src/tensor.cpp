#include "ggmixer/tensor.hpp"

#include <cmath>
#include <sstream>

namespace ggmixer {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream out;
  out << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << " ";
    out << shape[i];
  }
  out << "]";
  return out.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_str(shape));
  }
  auto data = std::make_shared<TensorData>();
  data->values.assign(shape_numel(shape), value);
  data->shape = std::move(shape);
  data->requires_grad = requires_grad;
  return Tensor(std::move(data));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape_numel(shape) != values.size()) {
    throw ShapeError("value count " + std::to_string(values.size()) +
                     " does not fill shape " + shape_str(shape));
  }
  auto data = std::make_shared<TensorData>();
  data->shape = std::move(shape);
  data->values = std::move(values);
  data->requires_grad = requires_grad;
  return Tensor(std::move(data));
}

Tensor Tensor::scalar(double value) { return from({1}, {value}); }

Tensor Tensor::identity(std::size_t n) {
  Tensor t = zeros({n, n});
  for (std::size_t i = 0; i < n; ++i) t.values()[i * n + i] = 1.0;
  return t;
}

std::size_t Tensor::rows() const {
  if (rank() != 2) throw ShapeError("rows() on non-2D tensor " + shape_str(shape()));
  return shape()[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw ShapeError("cols() on non-2D tensor " + shape_str(shape()));
  return shape()[1];
}

bool Tensor::same_shape(const Tensor& other) const {
  return data_->shape == other.data_->shape;
}

double& Tensor::at(std::size_t r, std::size_t c) const {
  return data_->values[r * cols() + c];
}

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on non-scalar tensor " + shape_str(shape()));
  return data_->values[0];
}

std::vector<double>& Tensor::grad() const {
  if (data_->grad.empty()) data_->grad.assign(data_->values.size(), 0.0);
  return data_->grad;
}

void Tensor::accumulate_grad(std::span<const double> g) const {
  auto& dst = grad();
  if (g.size() != dst.size()) {
    throw ShapeError("gradient size " + std::to_string(g.size()) +
                     " does not match tensor " + shape_str(shape()));
  }
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[i];
}

void Tensor::clear_grad() const { data_->grad.clear(); }

Tensor Tensor::detached_copy() const {
  return Tensor::from(data_->shape, data_->values, false);
}

bool Tensor::all_finite() const {
  for (double v : data_->values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace ggmixer
