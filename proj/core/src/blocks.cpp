#include "ggmixer/blocks.hpp"

namespace ggmixer {
namespace {

Tensor norm_or_identity(Tape& tape, const Tensor& x, const Tensor& gamma,
                        const Tensor& beta, NormSettings norm) {
  if (!norm.enabled) return x;
  return layer_norm(tape, x, gamma, beta, norm.eps);
}

}  // namespace

Tensor spatial_mix(Tape& tape, const Tensor& x, const Tensor& w) {
  return transpose(tape, matmul(tape, transpose(tape, x), w));
}

Tensor temporal_mix(Tape& tape, const Tensor& x, const Tensor& w) {
  return matmul(tape, x, w);
}

Tensor aggregate(Tape& tape, const Tensor& adj, const Tensor& x,
                 AggregateSide side, const Tensor& mask) {
  if (adj.rank() != 2 || adj.rows() != adj.cols()) {
    throw ShapeError("aggregate: adjacency must be square, got " +
                     shape_str(adj.shape()));
  }
  Tensor effective = mask.defined() ? mul(tape, adj, mask) : adj;
  return side == AggregateSide::Left ? matmul(tape, effective, x)
                                     : matmul(tape, x, effective);
}

Tensor plain_block(Tape& tape, const Tensor& x, const BlockParams& p,
                   NormSettings norm) {
  Tensor u = norm_or_identity(tape, spatial_mix(tape, x, p.w_spatial),
                              p.ln1_gamma, p.ln1_beta, norm);
  return norm_or_identity(tape, temporal_mix(tape, u, p.w_temporal),
                          p.ln2_gamma, p.ln2_beta, norm);
}

Tensor spatial_block(Tape& tape, const Tensor& x, const BlockParams& p,
                     const Tensor& a_s, NormSettings norm) {
  Tensor mixed = add(tape, spatial_mix(tape, x, p.w_spatial),
                     aggregate(tape, a_s, x, AggregateSide::Left, p.adjacency_mask));
  Tensor u = norm_or_identity(tape, mixed, p.ln1_gamma, p.ln1_beta, norm);
  return norm_or_identity(tape, temporal_mix(tape, u, p.w_temporal),
                          p.ln2_gamma, p.ln2_beta, norm);
}

Tensor temporal_block(Tape& tape, const Tensor& x, const BlockParams& p,
                      const Tensor& a_t, NormSettings norm) {
  if (p.w_temporal.rows() != p.w_temporal.cols()) {
    throw ShapeError("temporal_block: guidance requires a square temporal weight, got " +
                     shape_str(p.w_temporal.shape()));
  }
  Tensor u = norm_or_identity(tape, spatial_mix(tape, x, p.w_spatial),
                              p.ln1_gamma, p.ln1_beta, norm);
  Tensor mixed = add(tape, temporal_mix(tape, u, p.w_temporal),
                     aggregate(tape, a_t, u, AggregateSide::Right, p.adjacency_mask));
  return norm_or_identity(tape, mixed, p.ln2_gamma, p.ln2_beta, norm);
}

Tensor spatial_block_stream(Tape& tape, const Tensor& x, const BlockParams& p,
                            const Tensor& a_s, bool tied, NormSettings norm) {
  Tensor mixer = plain_block(tape, x, p, norm);
  Tensor pooled = aggregate(tape, a_s, x, AggregateSide::Left, p.adjacency_mask);
  Tensor u = norm_or_identity(tape, pooled, p.ln3_gamma, p.ln3_beta, norm);
  const Tensor& update = tied ? p.w_temporal : p.w_stream;
  Tensor stream = norm_or_identity(tape, temporal_mix(tape, u, update),
                                   p.ln4_gamma, p.ln4_beta, norm);
  return add(tape, mixer, stream);
}

Tensor temporal_block_stream(Tape& tape, const Tensor& x, const BlockParams& p,
                             const Tensor& a_t, bool tied, NormSettings norm) {
  Tensor mixer = plain_block(tape, x, p, norm);
  const Tensor& update = tied ? p.w_spatial : p.w_stream;
  Tensor u = norm_or_identity(tape, spatial_mix(tape, x, update),
                              p.ln3_gamma, p.ln3_beta, norm);
  Tensor stream = norm_or_identity(
      tape, aggregate(tape, a_t, u, AggregateSide::Right, p.adjacency_mask),
      p.ln4_gamma, p.ln4_beta, norm);
  return add(tape, mixer, stream);
}

std::pair<Tensor, Tensor> fusion(Tape& tape, const Tensor& x_a, const Tensor& x_b,
                                 const Tensor& a_s, const Tensor& a_t,
                                 const Tensor& mask_s, const Tensor& mask_t) {
  if (!x_a.same_shape(x_b)) {
    throw ShapeError("fusion: branch shapes disagree: " + shape_str(x_a.shape()) +
                     " vs " + shape_str(x_b.shape()));
  }
  Tensor a_out = add(tape, x_a, aggregate(tape, a_s, x_b, AggregateSide::Left, mask_s));
  Tensor b_out = add(tape, x_b, aggregate(tape, a_t, x_a, AggregateSide::Right, mask_t));
  return {a_out, b_out};
}

}  // namespace ggmixer
