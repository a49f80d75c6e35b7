#pragma once

// Independent loop-level transcriptions used as oracles. These work on
// plain buffers and never touch the tensor engine, so they stay
// independent of the implementation paths they check.

#include <cstddef>
#include <optional>
#include <vector>

namespace oracle {

double sigmoid(double x);
double swish(double x);

// mean over H x W per channel
std::vector<double> global_pool_2d(const std::vector<double>& x, std::size_t C, std::size_t H,
                                   std::size_t W);

// Single-group (G = 1) grouped two-branch spatial attention, steps (a)-(d):
// coarse directional-pool/1x1/sigmoid gating, fine 3x3 depthwise, softmaxed
// pooled descriptors contracted cross-branch, sigmoid map, concat.
struct EmsaTrace {
    std::vector<double> gates;   // (C, H+W) coarse sigmoid gates
    std::vector<double> attn;    // (H, W) fused sigmoid attention
    std::vector<double> output;  // (2C, H, W)
};
EmsaTrace emsa_g1_trace(const std::vector<double>& x, std::size_t C, std::size_t H, std::size_t W,
                        const std::vector<double>& w1, const std::vector<double>& b1,
                        const std::vector<double>& k3, const std::vector<double>& b3);
std::vector<double> emsa_g1(const std::vector<double>& x, std::size_t C, std::size_t H,
                            std::size_t W, const std::vector<double>& w1,
                            const std::vector<double>& b1, const std::vector<double>& k3,
                            const std::vector<double>& b3);

struct MemAttn {
    std::vector<double> attention;  // (P,S)
    std::vector<double> enhanced;   // (P,S)
    std::vector<double> memory;     // (P,C)
};
MemAttn memory_attention(const std::vector<double>& o_flat, std::size_t P, std::size_t C,
                         std::size_t S, const std::vector<double>& wmk,
                         const std::vector<double>& wmv);

// Full memory-attention module on a (C,H,W) map; returns the length-C
// descriptor.
std::vector<double> maa(const std::vector<double>& o, std::size_t C, std::size_t H, std::size_t W,
                        std::size_t S, std::size_t r, const std::vector<double>& wmk,
                        const std::vector<double>& wmv, const std::vector<double>& wta,
                        const std::vector<double>& fuse);

struct AaaTrace {
    std::vector<double> relevance;  // rho (t)
    std::vector<double> weights;    // softmax vector (d_u)
    std::vector<double> output;     // (d_u)
};
AaaTrace aaa(const std::vector<double>& u, std::size_t t, std::size_t du, std::size_t r,
             const std::vector<double>& smooth, const std::vector<double>& mix,
             const std::vector<double>& w, const std::vector<double>& b0,
             const std::vector<double>& b1);

// O(n^2) average precision: precision/recall recomputed from scratch at
// every rank, all-points interpolation.
double average_precision(const std::vector<double>& scores, const std::vector<int>& labels);

double time_to_accident(const std::vector<double>& probs, std::size_t tau, double fps,
                        double threshold);

struct EvalOut {
    double ap = 0.0;
    double mtta = 0.0;
    std::optional<double> tta_r80;
};
EvalOut evaluate(const std::vector<std::vector<double>>& probs, const std::vector<int>& labels,
                 const std::vector<std::size_t>& onsets, double fps, double theta);

}  // namespace oracle
