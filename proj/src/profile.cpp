#include "latte/profile.hpp"

namespace latte {

namespace {

using LL = long long;

// Layers whose cost depends on the AAA window length t.
std::vector<LayerCost> aaa_layers(std::size_t t_sz, std::size_t du_sz, std::size_t r_sz) {
    LL t = static_cast<LL>(t_sz), du = static_cast<LL>(du_sz), r = static_cast<LL>(r_sz);
    std::vector<LayerCost> ls;
    ls.push_back({"aaa.gram", "aaa", 2 * t * t * du, 0, false});
    ls.push_back({"aaa.smooth", "aaa", 2 * r * t * t + t * t, r, false});
    ls.push_back({"aaa.relevance_pool", "aaa", t * t, 0, false});
    ls.push_back({"aaa.pointwise_mix", "aaa", 2 * t * du * du, du * du, false});
    ls.push_back({"aaa.relevance_weighting", "aaa", 2 * t * du, 0, false});
    ls.push_back({"aaa.project", "aaa", 2 * du * du, du * du, false});
    ls.push_back({"aaa.weighting_head", "aaa", 4 * du * du + 7 * du, 2 * du * du, false});
    return ls;
}

}  // namespace

CostProfile profile_model(const ModelConfig& cfg, std::size_t T) {
    cfg.validate();
    if (T == 0) throw ValidationError("profile_model: horizon T must be >= 1");

    LL C = static_cast<LL>(cfg.channels());
    LL G = static_cast<LL>(cfg.G);
    LL cg = C / G;
    LL H = static_cast<LL>(cfg.layout.grid_h), W = static_cast<LL>(cfg.layout.grid_w);
    LL HW = H * W;
    LL S = static_cast<LL>(cfg.memory_dim());
    LL P = HW;
    LL du = static_cast<LL>(cfg.d_u);
    LL hid = static_cast<LL>(cfg.hidden());
    LL rm = static_cast<LL>(cfg.r_maa);

    CostProfile prof;
    prof.horizon = T;
    auto& L = prof.layers;

    if (cfg.emsa_on) {
        L.push_back({"emsa.directional_pool", "emsa", 2 * C * HW, 0, true});
        // shared 1x1 mix over the pooled (H+W) positions; boundary, not area
        L.push_back({"emsa.coarse_mix", "emsa", G * (2 * cg * cg * (H + W) + 2 * cg * (H + W)),
                     G * (cg * cg + cg), false});
        L.push_back({"emsa.coarse_gate", "emsa", 2 * C * HW, 0, true});
        L.push_back({"emsa.fine_dw3x3", "emsa", 2 * 9 * C * HW + C * HW, 10 * C, true});
        L.push_back({"emsa.fusion", "emsa", 8 * C * HW + 2 * G * HW, 0, true});
        L.push_back({"emsa.fusion_softmax", "emsa", 8 * C, 0, false});  // over channels, not area
    }
    if (cfg.maa_on) {
        L.push_back({"maa.memory_keys", "maa", 2 * P * C * S, C * S, true});
        L.push_back({"maa.attention_softmax", "maa", 4 * P * S, 0, true});
        L.push_back({"maa.enhanced_hadamard", "maa", P * S, 0, true});
        L.push_back({"maa.memory_values", "maa", 2 * P * S * C, S * C, true});
        L.push_back({"maa.temporal_gate", "maa", 2 * P * S * C + P * S + 2 * P * C, S * C, true});
        L.push_back({"maa.fuse", "maa", 2 * P * C + 2 * rm * P * C, rm * C, true});
    }
    if (cfg.emsa_on) L.push_back({"fusion.pool_emsa", "fusion", 2 * C * HW, 0, true});
    L.push_back({"fusion.pool_raw", "fusion", C * HW, 0, true});
    LL fw = static_cast<LL>(cfg.fused_width());
    L.push_back({"fusion.project", "fusion", 2 * fw * du + du, fw * du + du, false});

    if (cfg.aaa_on)
        for (auto& l : aaa_layers(T, cfg.d_u, cfg.r_aaa)) L.push_back(l);

    L.push_back({"head.hidden", "head", 2 * (2 * du) * hid + 2 * hid, 2 * du * hid + hid, false});
    L.push_back({"head.dropout", "head", hid, 0, false});
    L.push_back({"head.out", "head", 2 * hid + 2, hid + 1, false});

    for (const auto& l : L) {
        prof.frame_flops += l.flops;
        prof.params += l.params;
        prof.params_by_module[l.module] += l.params;
    }
    for (const char* m : {"emsa", "maa", "aaa", "fusion", "head"})
        prof.params_by_module.emplace(m, 0);  // switched-off modules report 0

    // Per-video cost: the static part repeats every frame; the AAA window
    // grows with t.
    LL static_flops = prof.frame_flops;
    if (cfg.aaa_on) {
        LL aaa_at_T = 0;
        for (const auto& l : aaa_layers(T, cfg.d_u, cfg.r_aaa)) aaa_at_T += l.flops;
        static_flops -= aaa_at_T;
        prof.video_flops = static_flops * static_cast<LL>(T);
        for (std::size_t t = 1; t <= T; ++t)
            for (const auto& l : aaa_layers(t, cfg.d_u, cfg.r_aaa)) prof.video_flops += l.flops;
    } else {
        prof.video_flops = static_flops * static_cast<LL>(T);
    }
    return prof;
}

}  // namespace latte
