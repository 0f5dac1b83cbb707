#include <doctest.h>

#include <cmath>
#include <vector>

#include "ggmixer/blocks.hpp"
#include "ggmixer/grad_check.hpp"
#include "ggmixer/rng.hpp"

using namespace ggmixer;

namespace {

// ---- straight-line oracle over plain vectors, no tape ---------------------

using Vec = std::vector<double>;

Vec o_mm(const Vec& a, std::size_t m, std::size_t k, const Vec& b, std::size_t n) {
  Vec c(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t p = 0; p < k; ++p) c[i * n + j] += a[i * k + p] * b[p * n + j];
  return c;
}

// W^T X computed directly (the block implements the transposed form, so the
// two routes are algebraically equal but structurally different).
Vec o_wt_x(const Vec& w, std::size_t n, const Vec& x, std::size_t t) {
  Vec out(n * t, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < t; ++j)
      for (std::size_t p = 0; p < n; ++p) out[i * t + j] += w[p * n + i] * x[p * t + j];
  return out;
}

Vec o_add(const Vec& a, const Vec& b) {
  Vec c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] + b[i];
  return c;
}

Vec o_ln(const Vec& x, std::size_t m, std::size_t n, const Vec& gamma,
         const Vec& beta, double eps) {
  Vec y(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += x[i * n + j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = x[i * n + j] - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
    const double is = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j)
      y[i * n + j] = gamma[j] * (x[i * n + j] - mean) * is + beta[j];
  }
  return y;
}

// ---------------------------------------------------------------------------

Tensor random_tensor(Rng& rng, Shape shape, bool requires_grad = false) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return Tensor::from(std::move(shape), std::move(v), requires_grad);
}

BlockParams random_params(Rng& rng, std::size_t n, std::size_t t_in,
                          std::size_t t_out, bool requires_grad = false) {
  BlockParams p;
  p.w_spatial = random_tensor(rng, {n, n}, requires_grad);
  p.w_temporal = random_tensor(rng, {t_in, t_out}, requires_grad);
  p.ln1_gamma = random_tensor(rng, {t_in}, requires_grad);
  p.ln1_beta = random_tensor(rng, {t_in}, requires_grad);
  p.ln2_gamma = random_tensor(rng, {t_out}, requires_grad);
  p.ln2_beta = random_tensor(rng, {t_out}, requires_grad);
  return p;
}

BlockParams identity_params(std::size_t n, std::size_t t) {
  BlockParams p;
  p.w_spatial = Tensor::identity(n);
  p.w_temporal = Tensor::identity(t);
  p.ln1_gamma = Tensor::full({t}, 1.0);
  p.ln1_beta = Tensor::zeros({t});
  p.ln2_gamma = Tensor::full({t}, 1.0);
  p.ln2_beta = Tensor::zeros({t});
  return p;
}

}  // namespace

TEST_CASE("spatial_mix identities and row swap") {
  Tape tape;
  Tensor x = Tensor::from({2, 2}, {1, 2, 3, 4});
  CHECK(spatial_mix(tape, x, Tensor::identity(2)).values() == x.values());
  Tensor swap = Tensor::from({2, 2}, {0, 1, 1, 0});
  CHECK(spatial_mix(tape, x, swap).values() == std::vector<double>{3, 4, 1, 2});
  CHECK(spatial_mix(tape, x, Tensor::zeros({2, 2})).values() ==
        std::vector<double>{0, 0, 0, 0});
}

TEST_CASE("temporal_mix identities and dense oracle") {
  Tape tape;
  Tensor x = Tensor::from({2, 2}, {1, 2, 3, 4});
  CHECK(temporal_mix(tape, x, Tensor::identity(2)).values() == x.values());
  Tensor w = Tensor::from({2, 2}, {1, 1, 0, 1});
  Tensor y = temporal_mix(tape, x, w);
  CHECK(y.values() == std::vector<double>{1, 3, 3, 7});
  CHECK(y.values() == o_mm(x.values(), 2, 2, w.values(), 2));
  CHECK(temporal_mix(tape, x, Tensor::zeros({2, 2})).values() ==
        std::vector<double>{0, 0, 0, 0});
}

TEST_CASE("aggregate by identity and by zero") {
  Tape tape;
  Rng rng(23);
  Tensor x = random_tensor(rng, {3, 4});
  CHECK(aggregate(tape, Tensor::identity(3), x, AggregateSide::Left).values() ==
        x.values());
  Tensor pooled = aggregate(tape, Tensor::zeros({3, 3}), x, AggregateSide::Left);
  for (double v : pooled.values()) CHECK(v == 0.0);
}

TEST_CASE("aggregate spreads mass along a normalized path graph") {
  Tape tape;
  // Path 0-1-2 with self-loops, degrees (2, 3, 2).
  Tensor adj = normalize_adjacency(
      Tensor::from({3, 3}, {1, 1, 0, 1, 1, 1, 0, 1, 1}));
  Tensor onehot = Tensor::from({3, 1}, {1, 0, 0});
  Tensor pooled = aggregate(tape, adj, onehot, AggregateSide::Left);
  Vec expect = o_mm(adj.values(), 3, 3, onehot.values(), 1);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(pooled.values()[i] == doctest::Approx(expect[i]).epsilon(1e-12));
  CHECK(pooled.values()[0] == doctest::Approx(0.5));
  CHECK(pooled.values()[1] == doctest::Approx(1.0 / std::sqrt(6.0)));
  CHECK(pooled.values()[2] == 0.0);
}

TEST_CASE("zero-adjacency guided blocks reduce to the plain block bit for bit") {
  Rng rng(29);
  const std::size_t n = 6, t = 4;
  BlockParams p = random_params(rng, n, t, t);
  Tensor x = random_tensor(rng, {n, t});
  Tensor zero_s = Tensor::zeros({n, n});
  Tensor zero_t = Tensor::zeros({t, t});

  Tape tape;
  Tensor plain = plain_block(tape, x, p);
  Tensor spatial = spatial_block(tape, x, p, zero_s);
  Tensor temporal = temporal_block(tape, x, p, zero_t);
  CHECK(spatial.values() == plain.values());
  CHECK(temporal.values() == plain.values());
}

TEST_CASE("identity mixing with identity adjacency matches the zero-adjacency path") {
  Rng rng(31);
  const std::size_t n = 5, t = 4;
  BlockParams p = identity_params(n, t);
  Tensor x = random_tensor(rng, {n, t});
  NormSettings tight{true, 1e-12};

  Tape tape;
  // LN(2x) = LN(x) up to the eps shift, so both paths coincide.
  Tensor guided = spatial_block(tape, x, p, Tensor::identity(n), tight);
  Tensor plain = spatial_block(tape, x, p, Tensor::zeros({n, n}), tight);
  for (std::size_t i = 0; i < guided.numel(); ++i)
    CHECK(std::fabs(guided.values()[i] - plain.values()[i]) < 1e-9);
}

TEST_CASE("spatial_block matches the straight-line oracle") {
  Rng rng(37);
  const std::size_t n = 6, t = 4;
  BlockParams p = random_params(rng, n, t, t);
  Tensor x = random_tensor(rng, {n, t});
  SkeletonTopology topo = chain_topology(2);
  Tensor a_s = normalize_adjacency(
      build_spatial_adjacency(topo, CouplingMode::AxisIdentity, true).matrix);

  Tape tape;
  Tensor y = spatial_block(tape, x, p, a_s);

  Vec mixed = o_add(o_wt_x(p.w_spatial.values(), n, x.values(), t),
                    o_mm(a_s.values(), n, n, x.values(), t));
  Vec u = o_ln(mixed, n, t, p.ln1_gamma.values(), p.ln1_beta.values(), kLayerNormEps);
  Vec expect = o_ln(o_mm(u, n, t, p.w_temporal.values(), t), n, t,
                    p.ln2_gamma.values(), p.ln2_beta.values(), kLayerNormEps);
  for (std::size_t i = 0; i < expect.size(); ++i)
    CHECK(std::fabs(y.values()[i] - expect[i]) < 1e-12);
}

TEST_CASE("temporal_block matches the straight-line oracle") {
  Rng rng(41);
  const std::size_t n = 6, t = 4;
  BlockParams p = random_params(rng, n, t, t);
  Tensor x = random_tensor(rng, {n, t});
  Tensor a_t = normalize_adjacency(build_temporal_adjacency(t, true).matrix);

  Tape tape;
  Tensor y = temporal_block(tape, x, p, a_t);

  Vec u = o_ln(o_wt_x(p.w_spatial.values(), n, x.values(), t), n, t,
               p.ln1_gamma.values(), p.ln1_beta.values(), kLayerNormEps);
  Vec mixed = o_add(o_mm(u, n, t, p.w_temporal.values(), t),
                    o_mm(u, n, t, a_t.values(), t));
  Vec expect = o_ln(mixed, n, t, p.ln2_gamma.values(), p.ln2_beta.values(),
                    kLayerNormEps);
  for (std::size_t i = 0; i < expect.size(); ++i)
    CHECK(std::fabs(y.values()[i] - expect[i]) < 1e-12);
}

TEST_CASE("temporal_block with a single frame feeds U back through guidance") {
  Rng rng(43);
  const std::size_t n = 4, t = 1;
  BlockParams p = random_params(rng, n, t, t);
  Tensor x = random_tensor(rng, {n, t});
  Tensor a_t = normalize_adjacency(build_temporal_adjacency(1, true).matrix);
  CHECK(a_t.values() == std::vector<double>{1.0});

  Tape tape;
  Tensor y = temporal_block(tape, x, p, a_t);
  // Guidance equals U itself, so the pre-norm sum is U (W + I).
  Vec u = o_ln(o_wt_x(p.w_spatial.values(), n, x.values(), t), n, t,
               p.ln1_gamma.values(), p.ln1_beta.values(), kLayerNormEps);
  Vec mixed(u.size());
  for (std::size_t i = 0; i < u.size(); ++i)
    mixed[i] = u[i] * (p.w_temporal.values()[0] + 1.0);
  Vec expect = o_ln(mixed, n, t, p.ln2_gamma.values(), p.ln2_beta.values(),
                    kLayerNormEps);
  for (std::size_t i = 0; i < expect.size(); ++i)
    CHECK(std::fabs(y.values()[i] - expect[i]) < 1e-12);
}

TEST_CASE("temporal_block requires a square temporal weight") {
  Rng rng(47);
  BlockParams p = random_params(rng, 4, 4, 2);
  Tensor x = random_tensor(rng, {4, 4});
  Tensor a_t = build_temporal_adjacency(4, true).matrix;
  Tape tape;
  CHECK_THROWS_AS(temporal_block(tape, x, p, a_t), ShapeError);
}

TEST_CASE("fusion exchange identities") {
  Rng rng(53);
  const std::size_t n = 6, t = 4;
  Tensor x_a = random_tensor(rng, {n, t});
  Tensor zero_b = Tensor::zeros({n, t});
  Tensor a_s = Tensor::zeros({n, n});
  Tensor a_t = Tensor::zeros({t, t});

  Tape tape;
  auto [a1, b1] = fusion(tape, x_a, zero_b, a_s, a_t);
  CHECK(a1.values() == x_a.values());
  for (double v : b1.values()) CHECK(v == 0.0);

  Tensor x_b = random_tensor(rng, {n, t});
  auto [a2, b2] = fusion(tape, x_a, x_b, Tensor::identity(n), Tensor::identity(t));
  for (std::size_t i = 0; i < a2.numel(); ++i) {
    CHECK(a2.values()[i] == doctest::Approx(x_a.values()[i] + x_b.values()[i]));
    CHECK(b2.values()[i] == doctest::Approx(x_a.values()[i] + x_b.values()[i]));
  }

  CHECK_THROWS_AS(fusion(tape, x_a, Tensor::zeros({n, t + 1}), a_s, a_t), ShapeError);
}

TEST_CASE("fusion matches the straight-line oracle") {
  Rng rng(59);
  const std::size_t n = 6, t = 4;
  Tensor x_a = random_tensor(rng, {n, t});
  Tensor x_b = random_tensor(rng, {n, t});
  Tensor a_s = normalize_adjacency(
      build_spatial_adjacency(chain_topology(2), CouplingMode::AxisIdentity, true).matrix);
  Tensor a_t = normalize_adjacency(build_temporal_adjacency(t, true).matrix);

  Tape tape;
  auto [a_out, b_out] = fusion(tape, x_a, x_b, a_s, a_t);
  Vec ea = o_add(x_a.values(), o_mm(a_s.values(), n, n, x_b.values(), t));
  Vec eb = o_add(x_b.values(), o_mm(x_a.values(), n, t, a_t.values(), t));
  for (std::size_t i = 0; i < ea.size(); ++i) {
    CHECK(std::fabs(a_out.values()[i] - ea[i]) < 1e-12);
    CHECK(std::fabs(b_out.values()[i] - eb[i]) < 1e-12);
  }
}

TEST_CASE("with normalization off the spatial block is (W1^T + A_s) X W2") {
  Rng rng(61);
  const std::size_t n = 6, t = 4;
  BlockParams p = random_params(rng, n, t, t);
  Tensor x = random_tensor(rng, {n, t});
  Tensor a_s = normalize_adjacency(
      build_spatial_adjacency(chain_topology(2), CouplingMode::FullBlock, true).matrix);

  Tape tape;
  Tensor y = spatial_block(tape, x, p, a_s, NormSettings{false, 0.0});

  // Two other association orders of the same linear core.
  Vec lhs(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      lhs[i * n + j] = p.w_spatial.values()[j * n + i] + a_s.values()[i * n + j];
  Vec order1 = o_mm(o_mm(lhs, n, n, x.values(), t), n, t, p.w_temporal.values(), t);
  Vec xw = o_mm(x.values(), n, t, p.w_temporal.values(), t);
  Vec order2 = o_mm(lhs, n, n, xw, t);
  for (std::size_t i = 0; i < order1.size(); ++i) {
    CHECK(std::fabs(y.values()[i] - order1[i]) < 1e-10);
    CHECK(std::fabs(y.values()[i] - order2[i]) < 1e-10);
  }
}

TEST_CASE("temporal guidance never crosses a time gap greater than one") {
  const std::size_t n = 4, t = 6;
  BlockParams p = identity_params(n, t);
  p.w_temporal = Tensor::zeros({t, t});
  Tensor a_t = normalize_adjacency(build_temporal_adjacency(t, true).matrix);
  NormSettings off{false, 0.0};

  for (std::size_t hot = 0; hot < t; ++hot) {
    Tensor x = Tensor::zeros({n, t});
    for (std::size_t i = 0; i < n; ++i) x.at(i, hot) = 1.0;
    Tape tape;
    Tensor y = temporal_block(tape, x, p, a_t, off);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < t; ++j) {
        const std::size_t gap = j > hot ? j - hot : hot - j;
        if (gap > 1) CHECK(y.at(i, j) == 0.0);
      }
  }
}

TEST_CASE("every block kind passes grad_check on all trainable parameters") {
  Rng rng(67);
  const std::size_t n = 6, t = 4;
  Tensor x = random_tensor(rng, {n, t});
  Tensor a_s = normalize_adjacency(
      build_spatial_adjacency(chain_topology(2), CouplingMode::AxisIdentity, true).matrix);
  Tensor a_t = normalize_adjacency(build_temporal_adjacency(t, true).matrix);

  auto check_block = [&](auto&& forward, const BlockParams& p,
                         std::vector<Tensor> extra = {}) {
    std::vector<Tensor> wrt = {p.w_spatial,  p.w_temporal, p.ln1_gamma,
                               p.ln1_beta,   p.ln2_gamma,  p.ln2_beta};
    for (auto& e : extra) wrt.push_back(e);
    auto f = [&](Tape& tp) {
      Tensor y = forward(tp);
      return sum(tp, mul(tp, y, y));
    };
    auto report = grad_check(f, wrt, 1e-5, 1e-4);
    CAPTURE(report.max_rel_error);
    CHECK(report.pass);
  };

  {
    BlockParams p = random_params(rng, n, t, t, true);
    check_block([&](Tape& tp) { return plain_block(tp, x, p); }, p);
  }
  {
    BlockParams p = random_params(rng, n, t, t, true);
    check_block([&](Tape& tp) { return spatial_block(tp, x, p, a_s); }, p);
  }
  {
    BlockParams p = random_params(rng, n, t, t, true);
    check_block([&](Tape& tp) { return temporal_block(tp, x, p, a_t); }, p);
  }
  {
    // Spatial block with a trainable mask on the adjacency support.
    BlockParams p = random_params(rng, n, t, t, true);
    p.adjacency_mask = a_s.detached_copy();
    for (double& v : p.adjacency_mask.values()) v = v != 0.0 ? 1.0 : 0.0;
    p.adjacency_mask.set_requires_grad(true);
    check_block([&](Tape& tp) { return spatial_block(tp, x, p, a_s); }, p,
                {p.adjacency_mask});
  }
  {
    // Separate-stream forms used by the ablation variants.
    BlockParams p = random_params(rng, n, t, t, true);
    p.w_stream = random_tensor(rng, {t, t}, true);
    p.ln3_gamma = random_tensor(rng, {t}, true);
    p.ln3_beta = random_tensor(rng, {t}, true);
    p.ln4_gamma = random_tensor(rng, {t}, true);
    p.ln4_beta = random_tensor(rng, {t}, true);
    check_block([&](Tape& tp) { return spatial_block_stream(tp, x, p, a_s, false); },
                p, {p.w_stream, p.ln3_gamma, p.ln3_beta, p.ln4_gamma, p.ln4_beta});
  }
  {
    BlockParams p = random_params(rng, n, t, t, true);
    p.w_stream = random_tensor(rng, {n, n}, true);
    p.ln3_gamma = random_tensor(rng, {t}, true);
    p.ln3_beta = random_tensor(rng, {t}, true);
    p.ln4_gamma = random_tensor(rng, {t}, true);
    p.ln4_beta = random_tensor(rng, {t}, true);
    check_block([&](Tape& tp) { return temporal_block_stream(tp, x, p, a_t, true); },
                p, {p.w_stream, p.ln3_gamma, p.ln3_beta, p.ln4_gamma, p.ln4_beta});
  }
}
