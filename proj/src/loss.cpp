#include "latte/loss.hpp"

#include <cmath>

namespace latte {

namespace {
constexpr double kClampLo = 1e-12;
constexpr double kClampHi = 1.0 - 1e-12;
}  // namespace

double temporal_weight(std::size_t t, std::size_t tau, double beta, OmegaConvention convention) {
    double gap = tau > t ? static_cast<double>(tau - t) : 0.0;
    double sign = convention == OmegaConvention::as_printed ? 1.0 : -1.0;
    return std::exp(sign * beta * gap);
}

Tensor frame_loss_video(const std::vector<Tensor>& probs, int label, std::size_t onset,
                        const LossConfig& cfg) {
    if (probs.empty()) throw ValidationError("frame_loss: empty probability series");
    if (label == 1 && (onset < 1 || onset > probs.size()))
        throw ValidationError("frame_loss: positive video missing a valid onset frame");
    Tensor acc = Tensor::scalar(0.0);
    for (std::size_t t = 1; t <= probs.size(); ++t) {
        Tensor p = clamp(probs[t - 1], kClampLo, kClampHi);
        if (label == 1) {
            double w = temporal_weight(t, onset, cfg.beta, cfg.convention);
            acc = add(acc, mul_scalar(log_t(p), -w));
        } else {
            acc = add(acc, neg(log_t(add_scalar(neg(p), 1.0))));
        }
    }
    return acc;
}

Tensor video_loss_video(const std::vector<Tensor>& probs, int label) {
    if (probs.empty()) throw ValidationError("video_loss: empty probability series");
    Tensor stacked = concat(probs, 0);                       // (T)
    Tensor p_vid = clamp(reduce_max(stacked, 0), kClampLo, kClampHi);
    if (label == 1) return neg(log_t(p_vid));
    return neg(log_t(add_scalar(neg(p_vid), 1.0)));
}

Tensor frame_loss(const std::vector<std::vector<Tensor>>& probs, const std::vector<int>& labels,
                  const std::vector<std::size_t>& onsets, const LossConfig& cfg) {
    if (probs.size() != labels.size() || probs.size() != onsets.size())
        throw ValidationError("frame_loss: batch vectors must have equal length");
    Tensor acc = Tensor::scalar(0.0);
    for (std::size_t v = 0; v < probs.size(); ++v)
        acc = add(acc, frame_loss_video(probs[v], labels[v], onsets[v], cfg));
    return acc;
}

Tensor video_loss(const std::vector<std::vector<Tensor>>& probs, const std::vector<int>& labels) {
    if (probs.size() != labels.size())
        throw ValidationError("video_loss: batch vectors must have equal length");
    Tensor acc = Tensor::scalar(0.0);
    for (std::size_t v = 0; v < probs.size(); ++v)
        acc = add(acc, video_loss_video(probs[v], labels[v]));
    return acc;
}

Tensor total_loss(const Tensor& frame_part, const Tensor& video_part, double lambda) {
    if (lambda < 0.0) throw ValidationError("total_loss: lambda must be >= 0");
    return add(frame_part, mul_scalar(video_part, lambda));
}

}  // namespace latte
