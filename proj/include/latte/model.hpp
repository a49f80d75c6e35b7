#pragma once

#include <optional>
#include <string>
#include <vector>

#include "latte/aaa.hpp"
#include "latte/emsa.hpp"
#include "latte/feature_io.hpp"
#include "latte/maa.hpp"
#include "latte/params.hpp"

namespace latte {

struct ModelConfig {
    std::size_t N = 5, d = 32;
    SpatialLayout layout{2, 4, 4};
    std::size_t G = 4;
    std::size_t S = 0;            // 0 -> C/4
    std::size_t r_maa = 3, r_aaa = 3;
    std::size_t d_u = 32;
    std::size_t head_hidden = 0;  // 0 -> d_u
    double dropout_p = 0.1;
    std::size_t mc_samples = 1;   // >1 averages dropout-sampled head passes at eval
    bool emsa_on = true, maa_on = true, aaa_on = true;
    double threshold = 0.5;

    std::size_t channels() const { return (N + 1) * layout.c_e; }
    std::size_t memory_dim() const { return S ? S : std::max<std::size_t>(1, channels() / 4); }
    std::size_t hidden() const { return head_hidden ? head_hidden : d_u; }
    /// Fused descriptor width fed to the d_u projection: pooled EMSA (2C)
    /// + MAA (C) + pooled raw input (C). Slices of switched-off modules
    /// are zero-filled so ablations share one projection shape.
    std::size_t fused_width() const { return 4 * channels(); }
    void validate() const;
};

/// Per-frame probabilities for one video. Frames are 1-based;
/// crossing_frame is 0 when the series never reaches the threshold.
struct PredictionSeries {
    std::string video_id;
    std::vector<double> probs;
    double p_vid = 0.0;
    std::size_t crossing_frame = 0;
    double threshold = 0.5;
};

PredictionSeries make_series(std::string video_id, std::vector<double> probs, double threshold);

struct AlertRecord {
    std::string video_id;
    std::size_t frame = 0;   // 1-based
    double seconds = 0.0;    // frame / fps
    double probability = 0.0;
    std::vector<std::pair<std::size_t, double>> entities;  // ranked (index, saliency)
    std::string message;
};

enum class Mode { train, eval };

class LatteModel {
public:
    explicit LatteModel(ModelConfig cfg);

    const ModelConfig& config() const { return cfg_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    /// Fills the store with seeded-random weights (documented init:
    /// normal with std 1/sqrt(fan_in) for mixes/projections, zero biases,
    /// averaging kernels for the 1-D fusion/smoothing stacks).
    void init(std::uint64_t seed);

    /// One frame of the pipeline. Appends u_t to `history` and returns
    /// the scalar p_t. `store` is the (possibly tape-watched) parameter
    /// set to read; `rng` feeds dropout masks for this frame.
    Tensor frame_step(std::vector<Tensor>& history, const Tensor& object_features,
                      const Tensor& frame_feature, const ParamStore& store, Mode mode,
                      RandomStream& rng) const;

    /// Causal evaluation over a whole video (no tape).
    PredictionSeries predict_video(const FeatureSequence& seq, std::uint64_t seed) const;

    /// Taped forward over a whole video; returns the per-frame probability
    /// tensors (on `tape`) for loss assembly.
    std::vector<Tensor> forward_probs(const FeatureSequence& seq, const ParamStore& taped,
                                      Mode mode, std::uint64_t dropout_seed) const;

    /// Saliency of each valid object at frame t: |p_t - p_t with object i's
    /// embedding zeroed| (single-frame occlusion), sorted descending, ties
    /// by ascending index. Padded objects are excluded. Occlusion is used
    /// instead of the raw input-gradient norm because the gradient's
    /// per-slot magnitude is dominated by slot weights, not content.
    std::vector<std::pair<std::size_t, double>> attribute_entities(const FeatureSequence& seq,
                                                                   std::size_t t,
                                                                   std::uint64_t seed) const;

    std::vector<AlertRecord> generate_alerts(const PredictionSeries& series,
                                             const FeatureSequence& seq, std::uint64_t seed) const;

private:
    ModelConfig cfg_;
    ParamStore params_;
};

/// One alert per upward threshold crossing (p_{t-1} < theta <= p_t, with
/// p_0 = 0). `attribution` maps a 1-based frame index to ranked entities.
std::vector<AlertRecord> generate_alerts(
    const PredictionSeries& series, double fps,
    const std::function<std::vector<std::pair<std::size_t, double>>(std::size_t)>& attribution);

/// View builders over a (possibly taped) store.
EmsaParams emsa_view(const ParamStore& store, const ModelConfig& cfg);
MaaParams maa_view(const ParamStore& store);
AaaParams aaa_view(const ParamStore& store);

}  // namespace latte
