#pragma once

#include "latte/tensor.hpp"

namespace latte {

/// Auxiliary Self-Attention Aggregation over the causal window of
/// per-frame descriptors. The Gram interaction U U^T is smoothed by a
/// shared 1-D kernel along the frame axis and sigmoid-squashed; its
/// column mean gives per-frame relevance. Frames are mixed pointwise
/// (the separable conv's second stage), relevance-pooled, projected,
/// and gated by a factorized swish/softmax weighting head.
struct AaaParams {
    Tensor smooth_k;  // (1, r) shared smoothing kernel, odd r
    Tensor mix;       // (d_u, d_u) pointwise mix
    Tensor w;         // (d_u, d_u) projection after pooling
    Tensor b0, b1;    // (d_u, d_u) factorized weighting pair
};

/// u: (t, d_u) descriptors of frames 1..t -> context vector (d_u).
/// Only the given frames participate; the caller passes the causal
/// prefix.
Tensor aaa_forward(const Tensor& u, const AaaParams& params);

/// r (shared kernel) + d_u^2 (pointwise) + d_u^2 (projection) + 2 d_u^2
/// (weighting pair).
std::size_t aaa_param_count(std::size_t d_u, std::size_t r);

}  // namespace latte
