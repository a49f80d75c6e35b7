#pragma once

#include <vector>

#include "latte/tensor.hpp"

namespace latte {

/// Efficient Multiscale Spatial Aggregation. The input (C,H,W) is split
/// into G channel groups; each group runs a coarse branch (directional
/// pooling -> shared 1x1 channel mix -> sigmoid gates) and a fine branch
/// (3x3 depthwise conv), fused by softmaxed pooled descriptors contracted
/// cross-branch into a sigmoid spatial attention map. The two attended
/// branches concatenate, doubling the channel count to (2C,H,W).
struct EmsaGroupParams {
    Tensor conv1_w;  // (C_g, C_g) shared 1x1 channel mix
    Tensor conv1_b;  // (C_g)
    Tensor dw_w;     // (C_g, 3, 3) depthwise kernels
    Tensor dw_b;     // (C_g)
};

struct EmsaParams {
    std::vector<EmsaGroupParams> groups;
};

/// Mean over both spatial axes: (C,H,W) -> (C). Rejects empty extents.
Tensor global_pool_2d(const Tensor& x);

Tensor emsa_forward(const Tensor& o_t, const EmsaParams& params);

/// Closed-form learnable-scalar count: C^2/G + C (grouped 1x1 mixes with
/// bias) + 10*C (3x3 depthwise stacks with bias). The C^2/G term carries
/// the 1/G reduction relative to an ungrouped channel mix.
std::size_t emsa_param_count(std::size_t C, std::size_t G);

/// The grouped channel-mix term alone (C^2/G), used for the 1/G ratio check.
std::size_t emsa_dominant_param_term(std::size_t C, std::size_t G);

}  // namespace latte
