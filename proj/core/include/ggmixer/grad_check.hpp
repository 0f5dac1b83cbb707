#pragma once

#include <functional>
#include <span>
#include <string>

#include "ggmixer/ops.hpp"

namespace ggmixer {

struct GradCheckReport {
  double max_rel_error = 0.0;
  bool pass = false;
  std::size_t checked = 0;
  std::string worst;  // "name[i]" of the entry with the largest error
};

// Compares tape gradients of the scalar-valued function `f` against central
// finite differences over every entry of the tensors in `wrt`. `f` must
// close over those tensors and rebuild its computation from their current
// values on each call. Relative error is |g - ghat| / max(1, |g|, |ghat|).
GradCheckReport grad_check(const std::function<Tensor(Tape&)>& f,
                           std::span<const Tensor> wrt, double step = 1e-5,
                           double tol = 1e-4);

GradCheckReport grad_check(const std::function<Tensor(Tape&)>& f,
                           const Tensor& wrt, double step = 1e-5,
                           double tol = 1e-4);

}  // namespace ggmixer
