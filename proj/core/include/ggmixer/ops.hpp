#pragma once

#include "ggmixer/tape.hpp"
#include "ggmixer/tensor.hpp"

namespace ggmixer {

inline constexpr double kLayerNormEps = 1e-5;

// c[i][j] = sum_k a[i][k] * b[k][j]; backward dA += dC Bt, dB += At dC.
Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);

Tensor transpose(Tape& tape, const Tensor& a);

Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape& tape, const Tensor& a, double s);

// Elementwise (Hadamard) product.
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);

// Full reduction to a shape-{1} tensor.
Tensor sum(Tape& tape, const Tensor& a);

// Elementwise sqrt(x + eps); eps keeps the root differentiable at zero.
Tensor sqrt_smooth(Tape& tape, const Tensor& a, double eps);

// Row-wise normalization over the last dimension of a 2-D input with
// population variance, followed by the affine map gamma * xhat + beta.
// gamma and beta are length-n vectors.
Tensor layer_norm(Tape& tape, const Tensor& x, const Tensor& gamma,
                  const Tensor& beta, double eps = kLayerNormEps);

}  // namespace ggmixer
