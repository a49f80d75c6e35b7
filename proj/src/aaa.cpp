#include "latte/aaa.hpp"

namespace latte {

Tensor aaa_forward(const Tensor& u, const AaaParams& params) {
    if (u.rank() != 2)
        throw ValidationError("aaa_forward: expects (t,d_u), got " + shape_str(u.shape));
    std::size_t t = u.shape[0], du = u.shape[1];
    if (t == 0) throw ValidationError("aaa_forward: empty frame window");
    std::size_t r = params.smooth_k.rank() == 2 ? params.smooth_k.shape[1] : 0;
    if (params.smooth_k.shape != Shape{1, r} || r == 0 || r % 2 == 0)
        throw ValidationError("aaa_forward: smoothing kernel must be (1, odd r), got " +
                              shape_str(params.smooth_k.shape));
    if (params.mix.shape != Shape{du, du} || params.w.shape != Shape{du, du} ||
        params.b0.shape != Shape{du, du} || params.b1.shape != Shape{du, du})
        throw ValidationError("aaa_forward: weight blocks must all be (d_u,d_u) with d_u=" +
                              std::to_string(du));

    // Pairwise frame interaction, smoothed row-wise by the shared kernel.
    Tensor gram = matmul(u, transpose2d(u));  // (t, t)
    Tensor tiled = mul(Tensor::full({t, 1}, 1.0), params.smooth_k);  // (t, r), grads sum over rows
    Tensor interaction = sigmoid(depthwise_conv1d(gram, tiled));     // (t, t)

    // Per-frame relevance: global pooling over the interaction map.
    Tensor relevance = reshape(reduce_mean(interaction, {1}), {1, t});

    // Relevance-pooled, pointwise-mixed, projected context.
    Tensor z = matmul(matmul(relevance, matmul(u, params.mix)), params.w);  // (1, d_u)

    // Factorized weighting head (swish twice, softmax), then gate.
    Tensor wvec = softmax(swish(matmul(swish(matmul(z, params.b0)), params.b1)), 1);
    return reshape(mul(wvec, z), {du});
}

std::size_t aaa_param_count(std::size_t d_u, std::size_t r) {
    return r + 4 * d_u * d_u;
}

}  // namespace latte
