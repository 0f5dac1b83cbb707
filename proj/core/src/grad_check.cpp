#include "ggmixer/grad_check.hpp"

#include <cmath>
#include <vector>

namespace ggmixer {
namespace {

double eval_scalar(const std::function<Tensor(Tape&)>& f) {
  Tape tape;
  Tensor loss = f(tape);
  if (loss.numel() != 1) {
    throw ShapeError("grad_check: function must be scalar-valued, got " +
                     shape_str(loss.shape()));
  }
  const double v = loss.item();
  if (!std::isfinite(v)) throw NumericError("grad_check: function value is not finite");
  return v;
}

}  // namespace

GradCheckReport grad_check(const std::function<Tensor(Tape&)>& f,
                           std::span<const Tensor> wrt, double step, double tol) {
  if (!(step > 0.0) || step > 1e-2) {
    throw ParameterError("grad_check: step must lie in (0, 1e-2]");
  }

  // Analytic pass.
  Tape tape;
  Tensor loss = f(tape);
  if (loss.numel() != 1) {
    throw ShapeError("grad_check: function must be scalar-valued, got " +
                     shape_str(loss.shape()));
  }
  if (!std::isfinite(loss.item())) {
    throw NumericError("grad_check: function value is not finite");
  }
  tape.backward(loss);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(wrt.size());
  for (const Tensor& w : wrt) {
    analytic.push_back(w.has_grad() ? w.grad()
                                    : std::vector<double>(w.numel(), 0.0));
  }
  for (const Tensor& w : wrt) w.clear_grad();

  GradCheckReport report;
  for (std::size_t t = 0; t < wrt.size(); ++t) {
    const Tensor& w = wrt[t];
    auto& vals = w.values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double saved = vals[i];
      vals[i] = saved + step;
      const double up = eval_scalar(f);
      vals[i] = saved - step;
      const double down = eval_scalar(f);
      vals[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double g = analytic[t][i];
      const double rel =
          std::fabs(g - numeric) /
          std::max({1.0, std::fabs(g), std::fabs(numeric)});
      ++report.checked;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst = "wrt" + std::to_string(t) + "[" + std::to_string(i) + "]";
      }
    }
  }
  report.pass = report.max_rel_error <= tol;
  return report;
}

GradCheckReport grad_check(const std::function<Tensor(Tape&)>& f,
                           const Tensor& wrt, double step, double tol) {
  return grad_check(f, std::span<const Tensor>(&wrt, 1), step, tol);
}

}  // namespace ggmixer
