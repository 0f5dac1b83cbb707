#include "ggmixer/ops.hpp"

#include <cmath>

namespace ggmixer {
namespace {

// out += a (m x k) * b (k x n)
void mm_nn_acc(const double* a, const double* b, double* out, std::size_t m,
               std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* orow = out + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
}

// out += a (m x k) * b^T, b stored (n x k)
void mm_nt_acc(const double* a, const double* b, double* out, std::size_t m,
               std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* orow = out + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = b + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      orow[j] += acc;
    }
  }
}

// out += a^T * b, a stored (k x m), b stored (k x n)
void mm_tn_acc(const double* a, const double* b, double* out, std::size_t m,
               std::size_t k, std::size_t n) {
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = a + p * m;
    const double* brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double* orow = out + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
}

void require_2d(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected a 2-D tensor, got " + shape_str(t.shape()));
  }
}

bool track(const Tensor& a) { return a.requires_grad(); }
bool track(const Tensor& a, const Tensor& b) {
  return a.requires_grad() || b.requires_grad();
}

}  // namespace

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions disagree: " + shape_str(a.shape()) +
                     " x " + shape_str(b.shape()));
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out = Tensor::zeros({m, n}, track(a, b));
  mm_nn_acc(a.values().data(), b.values().data(), out.values().data(), m, k, n);
  if (out.requires_grad()) {
    tape.record({a, b}, out, [a, b, out, m, k, n]() {
      const double* dc = out.grad().data();
      if (a.requires_grad())
        mm_nt_acc(dc, b.values().data(), a.grad().data(), m, n, k);
      if (b.requires_grad())
        mm_tn_acc(a.values().data(), dc, b.grad().data(), k, m, n);
    });
  }
  return out;
}

Tensor transpose(Tape& tape, const Tensor& a) {
  require_2d(a, "transpose");
  const std::size_t m = a.rows(), n = a.cols();
  Tensor out = Tensor::zeros({n, m}, track(a));
  const auto& src = a.values();
  auto& dst = out.values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) dst[j * m + i] = src[i * n + j];
  if (out.requires_grad()) {
    tape.record({a}, out, [a, out, m, n]() {
      const auto& dy = out.grad();
      auto& dx = a.grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) dx[i * n + j] += dy[j * m + i];
    });
  }
  return out;
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("add: shapes disagree: " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
  Tensor out = Tensor::zeros(a.shape(), track(a, b));
  const auto& av = a.values();
  const auto& bv = b.values();
  auto& ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + bv[i];
  if (out.requires_grad()) {
    tape.record({a, b}, out, [a, b, out]() {
      const auto& dy = out.grad();
      if (a.requires_grad()) a.accumulate_grad(dy);
      if (b.requires_grad()) b.accumulate_grad(dy);
    });
  }
  return out;
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("sub: shapes disagree: " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
  Tensor out = Tensor::zeros(a.shape(), track(a, b));
  const auto& av = a.values();
  const auto& bv = b.values();
  auto& ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] - bv[i];
  if (out.requires_grad()) {
    tape.record({a, b}, out, [a, b, out]() {
      const auto& dy = out.grad();
      if (a.requires_grad()) a.accumulate_grad(dy);
      if (b.requires_grad()) {
        auto& db = b.grad();
        for (std::size_t i = 0; i < db.size(); ++i) db[i] -= dy[i];
      }
    });
  }
  return out;
}

Tensor scale(Tape& tape, const Tensor& a, double s) {
  Tensor out = Tensor::zeros(a.shape(), track(a));
  const auto& av = a.values();
  auto& ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * s;
  if (out.requires_grad()) {
    tape.record({a}, out, [a, out, s]() {
      const auto& dy = out.grad();
      auto& dx = a.grad();
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += s * dy[i];
    });
  }
  return out;
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("mul: shapes disagree: " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
  Tensor out = Tensor::zeros(a.shape(), track(a, b));
  const auto& av = a.values();
  const auto& bv = b.values();
  auto& ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * bv[i];
  if (out.requires_grad()) {
    tape.record({a, b}, out, [a, b, out]() {
      const auto& dy = out.grad();
      if (a.requires_grad()) {
        auto& da = a.grad();
        const auto& bv2 = b.values();
        for (std::size_t i = 0; i < da.size(); ++i) da[i] += dy[i] * bv2[i];
      }
      if (b.requires_grad()) {
        auto& db = b.grad();
        const auto& av2 = a.values();
        for (std::size_t i = 0; i < db.size(); ++i) db[i] += dy[i] * av2[i];
      }
    });
  }
  return out;
}

Tensor sum(Tape& tape, const Tensor& a) {
  double acc = 0.0;
  for (double v : a.values()) acc += v;
  Tensor out = Tensor::from({1}, {acc}, track(a));
  if (out.requires_grad()) {
    tape.record({a}, out, [a, out]() {
      const double dy = out.grad()[0];
      auto& dx = a.grad();
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy;
    });
  }
  return out;
}

Tensor sqrt_smooth(Tape& tape, const Tensor& a, double eps) {
  if (eps <= 0.0) throw ParameterError("sqrt_smooth: eps must be positive");
  Tensor out = Tensor::zeros(a.shape(), track(a));
  const auto& av = a.values();
  auto& ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = std::sqrt(av[i] + eps);
  if (out.requires_grad()) {
    tape.record({a}, out, [a, out]() {
      const auto& dy = out.grad();
      const auto& y = out.values();
      auto& dx = a.grad();
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i] * 0.5 / y[i];
    });
  }
  return out;
}

Tensor layer_norm(Tape& tape, const Tensor& x, const Tensor& gamma,
                  const Tensor& beta, double eps) {
  require_2d(x, "layer_norm");
  if (eps <= 0.0) throw ParameterError("layer_norm: eps must be positive");
  const std::size_t m = x.rows(), n = x.cols();
  if (gamma.numel() != n || beta.numel() != n) {
    throw ShapeError("layer_norm: gamma/beta length must match the last dimension " +
                     std::to_string(n) + ", got " + shape_str(gamma.shape()) + " and " +
                     shape_str(beta.shape()));
  }
  Tensor out = Tensor::zeros({m, n}, x.requires_grad() || gamma.requires_grad() ||
                                         beta.requires_grad());
  // Cached per row for the backward rule.
  std::vector<double> xhat(m * n);
  std::vector<double> inv_std(m);
  const auto& xv = x.values();
  const auto& gv = gamma.values();
  const auto& bv = beta.values();
  auto& ov = out.values();
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = xv.data() + i * n;
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += row[j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = row[j] - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[i] = is;
    for (std::size_t j = 0; j < n; ++j) {
      const double xh = (row[j] - mean) * is;
      xhat[i * n + j] = xh;
      ov[i * n + j] = gv[j] * xh + bv[j];
    }
  }
  if (out.requires_grad()) {
    tape.record({x, gamma, beta}, out,
                [x, gamma, beta, out, xhat = std::move(xhat),
                 inv_std = std::move(inv_std), m, n]() {
      const auto& dy = out.grad();
      const auto& gv2 = gamma.values();
      if (beta.requires_grad()) {
        auto& db = beta.grad();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) db[j] += dy[i * n + j];
      }
      if (gamma.requires_grad()) {
        auto& dg = gamma.grad();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j)
            dg[j] += dy[i * n + j] * xhat[i * n + j];
      }
      if (x.requires_grad()) {
        auto& dx = x.grad();
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < m; ++i) {
          double mean_dxh = 0.0, mean_dxh_xh = 0.0;
          for (std::size_t j = 0; j < n; ++j) {
            const double dxh = dy[i * n + j] * gv2[j];
            mean_dxh += dxh;
            mean_dxh_xh += dxh * xhat[i * n + j];
          }
          mean_dxh *= inv_n;
          mean_dxh_xh *= inv_n;
          for (std::size_t j = 0; j < n; ++j) {
            const double dxh = dy[i * n + j] * gv2[j];
            dx[i * n + j] +=
                inv_std[i] * (dxh - mean_dxh - xhat[i * n + j] * mean_dxh_xh);
          }
        }
      }
    });
  }
  return out;
}

}  // namespace ggmixer
