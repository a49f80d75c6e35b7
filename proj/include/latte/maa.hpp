#pragma once

#include "latte/tensor.hpp"

namespace latte {

/// Memory Attention Aggregation. Two small trainable memory units replace
/// full self-attention: W_mk projects flattened positions into an S-dim
/// key subspace (S < C), softmax over the memory axis gives the attention
/// map, and W_mv reconstructs a memory-augmented C-dim representation.
/// A tanh/sigmoid-gated temporal interaction followed by a per-channel
/// 1-D fusion conv along positions and a mean collapses to a C-vector.
struct MaaParams {
    Tensor w_mk;    // (C, S)
    Tensor w_mv;    // (S, C)
    Tensor w_ta;    // (S, C)
    Tensor fuse_k;  // (C, r) per-channel fusion kernel, odd r
};

struct MemoryAttentionOut {
    Tensor attention;  // A_t (P, S), rows sum to 1
    Tensor enhanced;   // H'_t (P, S)
    Tensor memory;     // O_mem (P, C)
};

MemoryAttentionOut memory_attention(const Tensor& o_flat /*(P,C)*/, const MaaParams& params);

/// Full module: (C,H,W) -> length-C descriptor.
Tensor maa_forward(const Tensor& o_t, const MaaParams& params);

/// 3*C*S projection weights plus r*C fusion kernel (no biases).
std::size_t maa_param_count(std::size_t C, std::size_t S, std::size_t r);

}  // namespace latte
