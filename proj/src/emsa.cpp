#include "latte/emsa.hpp"

namespace latte {

Tensor global_pool_2d(const Tensor& x) {
    if (x.rank() != 3)
        throw ValidationError("global_pool_2d: expects (C,H,W), got " + shape_str(x.shape));
    if (x.shape[1] == 0 || x.shape[2] == 0)
        throw ValidationError("global_pool_2d: empty spatial extent " + shape_str(x.shape));
    return reduce_mean(x, {1, 2});
}

Tensor emsa_forward(const Tensor& o_t, const EmsaParams& params) {
    if (o_t.rank() != 3)
        throw ValidationError("emsa_forward: expects (C,H,W), got " + shape_str(o_t.shape));
    std::size_t C = o_t.shape[0], H = o_t.shape[1], W = o_t.shape[2];
    std::size_t G = params.groups.size();
    if (G == 0 || C % G != 0)
        throw ValidationError("emsa_forward: group count " + std::to_string(G) +
                              " does not divide channel count " + std::to_string(C));
    std::size_t cg = C / G;

    std::vector<Tensor> outputs;
    outputs.reserve(G);
    for (std::size_t g = 0; g < G; ++g) {
        const auto& gp = params.groups[g];
        if (gp.conv1_w.shape != Shape{cg, cg} || gp.dw_w.shape != Shape{cg, 3, 3})
            throw ValidationError("emsa_forward: group " + std::to_string(g) +
                                  " parameter shapes do not match C/G = " + std::to_string(cg));
        Tensor x = slice(o_t, 0, g * cg, cg);

        // Coarse branch: directional pooling, shared 1x1 mix, sigmoid gates.
        Tensor pool_h = reduce_mean(x, {2});  // (C_g, H)
        Tensor pool_w = reduce_mean(x, {1});  // (C_g, W)
        Tensor pooled = concat({pool_h, pool_w}, 1);
        Tensor gates = sigmoid(add(matmul(gp.conv1_w, pooled), reshape(gp.conv1_b, {cg, 1})));
        Tensor a_h = reshape(slice(gates, 1, 0, H), {cg, H, 1});
        Tensor a_w = reshape(slice(gates, 1, H, W), {cg, 1, W});
        Tensor x1 = mul(mul(x, a_h), a_w);

        // Fine branch: extent-preserving 3x3 depthwise conv.
        Tensor x2 = add(depthwise_conv2d(x, gp.dw_w), reshape(gp.dw_b, {cg, 1, 1}));

        // Cross-branch dot-product fusion.
        Tensor s1 = reshape(softmax(global_pool_2d(x1), 0), {1, cg});
        Tensor s2 = reshape(softmax(global_pool_2d(x2), 0), {1, cg});
        Tensor t1 = matmul(s1, reshape(x2, {cg, H * W}));
        Tensor t2 = matmul(s2, reshape(x1, {cg, H * W}));
        Tensor attn = reshape(sigmoid(add(t1, t2)), {1, H, W});

        outputs.push_back(concat({mul(x1, attn), mul(x2, attn)}, 0));
    }
    return concat(outputs, 0);
}

std::size_t emsa_param_count(std::size_t C, std::size_t G) {
    if (G == 0 || C % G != 0)
        throw ValidationError("emsa_param_count: G=" + std::to_string(G) + " does not divide C=" +
                              std::to_string(C));
    std::size_t cg = C / G;
    return G * (cg * cg + cg) + G * (9 * cg + cg);
}

std::size_t emsa_dominant_param_term(std::size_t C, std::size_t G) {
    if (G == 0 || C % G != 0)
        throw ValidationError("emsa_dominant_param_term: G=" + std::to_string(G) +
                              " does not divide C=" + std::to_string(C));
    return C * C / G;
}

}  // namespace latte
