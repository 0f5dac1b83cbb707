#include "ggmixer/dct.hpp"

#include <cmath>
#include <numbers>

namespace ggmixer {

DctBasis make_dct_basis(std::size_t size) {
  if (size == 0) throw ParameterError("dct: size must be positive");
  DctBasis basis;
  basis.size = size;
  basis.c = Tensor::zeros({size, size});
  const double t = static_cast<double>(size);
  for (std::size_t k = 0; k < size; ++k) {
    const double a = std::sqrt((k == 0 ? 1.0 : 2.0) / t);
    for (std::size_t n = 0; n < size; ++n) {
      basis.c.at(k, n) =
          a * std::cos(std::numbers::pi * (static_cast<double>(n) + 0.5) *
                       static_cast<double>(k) / t);
    }
  }
  Tape scratch;
  basis.ct = transpose(scratch, basis.c);
  return basis;
}

Tensor dct_forward(Tape& tape, const Tensor& x, const DctBasis& basis) {
  if (x.cols() != basis.size) {
    throw ShapeError("dct_forward: time width " + shape_str(x.shape()) +
                     " does not match basis size " + std::to_string(basis.size));
  }
  return matmul(tape, x, basis.ct);
}

Tensor dct_inverse(Tape& tape, const Tensor& x, const DctBasis& basis) {
  if (x.cols() != basis.size) {
    throw ShapeError("dct_inverse: time width " + shape_str(x.shape()) +
                     " does not match basis size " + std::to_string(basis.size));
  }
  return matmul(tape, x, basis.c);
}

}  // namespace ggmixer
