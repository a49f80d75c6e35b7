#pragma once

#include <map>
#include <string>
#include <vector>

#include "latte/model.hpp"

namespace latte {

/// Analytic cost accounting. Frozen counting rules:
///   - matrix multiply (m,k)x(k,n): 2*m*k*n flops (multiply-add = 2);
///   - depthwise conv, width k over P positions and C channels: 2*k*P*C
///     flops, k*C kernel params (3x3 maps to k = 9);
///   - pointwise/1x1 mix over P positions: 2*P*Cin*Cout flops;
///   - element-wise ops (activations, gates, bias adds, dropout mask):
///     1 flop per element;
///   - reductions over n inputs: n flops per output element;
///   - softmax over n: 4*n flops.
/// Flops are for a single forward pass with a deterministic head (K = 1);
/// parameters count learnable scalars only.
struct LayerCost {
    std::string name;
    std::string module;  // emsa | maa | aaa | fusion | head
    long long flops = 0;
    long long params = 0;
    bool spatial = false;  // true when flops scale with the H*W area
};

struct CostProfile {
    std::vector<LayerCost> layers;  // one frame, AAA window at t = T
    long long frame_flops = 0;      // == sum of layer flops
    long long params = 0;           // == sum of layer params
    long long video_flops = 0;      // sum over t = 1..T of the frame cost
    std::map<std::string, long long> params_by_module;
    std::size_t horizon = 0;        // the T used for the AAA window
};

CostProfile profile_model(const ModelConfig& cfg, std::size_t T);

}  // namespace latte
