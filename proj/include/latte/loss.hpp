#pragma once

#include <vector>

#include "latte/tensor.hpp"

namespace latte {

/// Sign convention of the temporal weight exponent. `as_printed` keeps
/// exp(+beta (tau-t)_+); `decay` flips it to exp(-beta (tau-t)_+). Both
/// collapse to 1 at and after the onset.
enum class OmegaConvention { as_printed, decay };

struct LossConfig {
    double beta = 0.1;   // per-frame exponential rate
    double lambda = 1.0; // video-loss weight
    OmegaConvention convention = OmegaConvention::as_printed;
};

/// exp(sign * beta * max(tau - t, 0)) with frame indices 1-based.
double temporal_weight(std::size_t t, std::size_t tau, double beta, OmegaConvention convention);

/// Exponentially weighted frame cross-entropy for one video. `probs` are
/// scalar tensors (typically on a tape); probabilities are clamped into
/// [1e-12, 1-1e-12] before the logs.
Tensor frame_loss_video(const std::vector<Tensor>& probs, int label, std::size_t onset,
                        const LossConfig& cfg);

/// Cross-entropy on the temporal max; the subgradient flows through the
/// earliest argmax frame only.
Tensor video_loss_video(const std::vector<Tensor>& probs, int label);

/// Batch sums of the above (videos indexed in lockstep).
Tensor frame_loss(const std::vector<std::vector<Tensor>>& probs, const std::vector<int>& labels,
                  const std::vector<std::size_t>& onsets, const LossConfig& cfg);
Tensor video_loss(const std::vector<std::vector<Tensor>>& probs, const std::vector<int>& labels);

/// frame + lambda * video.
Tensor total_loss(const Tensor& frame_part, const Tensor& video_part, double lambda);

}  // namespace latte
