#pragma once

#include "ggmixer/ops.hpp"

namespace ggmixer {

// Orthonormal DCT-II: C[k][n] = a_k cos(pi (n + 1/2) k / T) with
// a_0 = sqrt(1/T), a_k = sqrt(2/T), so C C^T = I.
struct DctBasis {
  std::size_t size = 0;
  Tensor c;   // T x T
  Tensor ct;  // C^T
};

DctBasis make_dct_basis(std::size_t size);

// Transforms along the time axis of an N x T pose matrix: forward
// right-multiplies by C^T, inverse by C.
Tensor dct_forward(Tape& tape, const Tensor& x, const DctBasis& basis);
Tensor dct_inverse(Tape& tape, const Tensor& x, const DctBasis& basis);

}  // namespace ggmixer
