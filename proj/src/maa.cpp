#include "latte/maa.hpp"

namespace latte {

MemoryAttentionOut memory_attention(const Tensor& o_flat, const MaaParams& params) {
    if (o_flat.rank() != 2)
        throw ValidationError("memory_attention: expects (P,C), got " + shape_str(o_flat.shape));
    std::size_t C = o_flat.shape[1];
    if (params.w_mk.rank() != 2 || params.w_mk.shape[0] != C)
        throw ValidationError("memory_attention: W_mk " + shape_str(params.w_mk.shape) +
                              " does not accept C=" + std::to_string(C));
    std::size_t S = params.w_mk.shape[1];
    if (S >= C)
        throw ValidationError("memory_attention: memory dim S=" + std::to_string(S) +
                              " must be smaller than C=" + std::to_string(C));
    if (params.w_mv.shape != Shape{S, C})
        throw ValidationError("memory_attention: W_mv must be (S,C), got " +
                              shape_str(params.w_mv.shape));

    MemoryAttentionOut out;
    Tensor m_t = matmul(o_flat, params.w_mk);      // (P, S)
    out.attention = softmax(m_t, 1);               // normalize over memory slots
    out.enhanced = mul(out.attention, m_t);        // element-wise, keeps (P, S)
    out.memory = matmul(out.attention, params.w_mv);
    return out;
}

Tensor maa_forward(const Tensor& o_t, const MaaParams& params) {
    if (o_t.rank() != 3)
        throw ValidationError("maa_forward: expects (C,H,W), got " + shape_str(o_t.shape));
    std::size_t C = o_t.shape[0], H = o_t.shape[1], W = o_t.shape[2];
    std::size_t P = H * W;
    std::size_t r = params.fuse_k.rank() == 2 ? params.fuse_k.shape[1] : 0;
    if (params.fuse_k.shape != Shape{C, r} || r == 0 || r % 2 == 0)
        throw ValidationError("maa_forward: fusion kernel must be (C, odd r), got " +
                              shape_str(params.fuse_k.shape));
    std::size_t S = params.w_mk.shape[1];
    if (params.w_ta.shape != Shape{S, C})
        throw ValidationError("maa_forward: W_ta must be (S,C), got " + shape_str(params.w_ta.shape));

    Tensor o_flat = transpose2d(reshape(o_t, {C, P}));  // (P, C)
    MemoryAttentionOut mem = memory_attention(o_flat, params);

    // Temporal attention weights gate the memory-augmented representation.
    Tensor beta = mul(sigmoid(matmul(tanh_t(mem.enhanced), params.w_ta)), mem.memory);  // (P, C)

    // Gate the raw positions, smooth along the position axis per channel,
    // collapse to one value per channel.
    Tensor gated = transpose2d(mul(beta, o_flat));            // (C, P)
    Tensor fused = depthwise_conv1d(gated, params.fuse_k);    // (C, P)
    return reduce_mean(fused, {1});                           // (C)
}

std::size_t maa_param_count(std::size_t C, std::size_t S, std::size_t r) {
    return 3 * C * S + r * C;
}

}  // namespace latte
