#pragma once

#include <utility>

#include "ggmixer/ops.hpp"
#include "ggmixer/skeleton.hpp"

namespace ggmixer {

enum class BlockKind { Spatial, Temporal, PlainMix };

// How graph guidance enters a block. Fused sums the aggregation into the
// mixing path before normalization (the guided-block form). The stream
// modes keep a separate graph-convolution stream next to the mixer and are
// used by the ablation variants: StreamOwn gives the stream its own update
// weight, StreamTied shares the mixer's.
enum class GuidanceMode { Fused, StreamTied, StreamOwn };

struct NormSettings {
  bool enabled = true;
  double eps = kLayerNormEps;
};

struct BlockParams {
  Tensor w_spatial;   // N x N
  Tensor w_temporal;  // T_in x T_out

  Tensor ln1_gamma, ln1_beta;  // width T_in
  Tensor ln2_gamma, ln2_beta;  // width T_out

  // Trainable elementwise mask on the adjacency support; undefined handle
  // means parameter-free aggregation.
  Tensor adjacency_mask;

  // Separate-stream parameters (StreamOwn / StreamTied blocks only).
  Tensor w_stream;
  Tensor ln3_gamma, ln3_beta;
  Tensor ln4_gamma, ln4_beta;
};

enum class AggregateSide { Left, Right };

// (X^T W)^T: mixes rows with an N x N weight.
Tensor spatial_mix(Tape& tape, const Tensor& x, const Tensor& w);

// X W: mixes columns with a T_in x T_out weight.
Tensor temporal_mix(Tape& tape, const Tensor& x, const Tensor& w);

// (adj . mask) X for Left, X (adj . mask) for Right; the mask defaults to
// all-ones on the support.
Tensor aggregate(Tape& tape, const Tensor& adj, const Tensor& x,
                 AggregateSide side, const Tensor& mask = {});

// U = LN(sMix(X)); Y = LN(tMix(U))
Tensor plain_block(Tape& tape, const Tensor& x, const BlockParams& p,
                   NormSettings norm = {});

// U = LN(sMix(X) + Z(A_s, X)); Y = LN(tMix(U))
Tensor spatial_block(Tape& tape, const Tensor& x, const BlockParams& p,
                     const Tensor& a_s, NormSettings norm = {});

// U = LN(sMix(X)); Y = LN(tMix(U) + Z(A_t, U))
Tensor temporal_block(Tape& tape, const Tensor& x, const BlockParams& p,
                      const Tensor& a_t, NormSettings norm = {});

// Mixer output plus a separate spatial graph-convolution stream:
// LN(tMix'(LN(Z(A_s, X)))) with tMix' using w_stream (own) or w_temporal (tied).
Tensor spatial_block_stream(Tape& tape, const Tensor& x, const BlockParams& p,
                            const Tensor& a_s, bool tied, NormSettings norm = {});

// Mixer output plus a separate temporal graph-convolution stream:
// LN(Z(A_t, LN(sMix'(X)))) with sMix' using w_stream (own) or w_spatial (tied).
Tensor temporal_block_stream(Tape& tape, const Tensor& x, const BlockParams& p,
                             const Tensor& a_t, bool tied, NormSettings norm = {});

// Cross-branch exchange: a' = a + Z(A_s, b), b' = b + Z(A_t, a).
std::pair<Tensor, Tensor> fusion(Tape& tape, const Tensor& x_a, const Tensor& x_b,
                                 const Tensor& a_s, const Tensor& a_t,
                                 const Tensor& mask_s = {}, const Tensor& mask_t = {});

}  // namespace ggmixer
