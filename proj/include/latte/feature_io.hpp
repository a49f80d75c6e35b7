#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "latte/tensor.hpp"

namespace latte {

/// How a d-dimensional feature vector is laid out as a (c_e, h, w) map.
/// Row-major: vector index k maps to channel k/(h*w), then row, then col.
struct SpatialLayout {
    std::size_t c_e = 0, grid_h = 0, grid_w = 0;
    std::size_t d() const { return c_e * grid_h * grid_w; }
    void validate(std::size_t feature_dim) const;
};

/// Default layouts for the two feature widths used throughout: 512 -> (8,8,8),
/// 32 -> (2,4,4). Other widths must be configured explicitly.
std::optional<SpatialLayout> default_layout(std::size_t d);

/// One video's worth of features. Frame indices (onset_frame, crossing
/// frames, ...) are 1-based throughout. `features` is (T, N+1, d) with
/// slot 0 holding the frame-level feature and slots 1..N the objects.
/// `boxes` is (T, N, 4) as (x1,y1,x2,y2) in relative [0,1] coordinates.
/// An object whose box is all-zero at a frame counts as padding and is
/// excluded from attribution ranking.
struct FeatureSequence {
    std::string video_id;
    std::size_t T = 0, N = 0, d = 0;
    double fps = 0.0;
    int label = 0;                  // accident indicator I_v
    std::size_t onset_frame = 0;    // tau, 1-based; 0 = absent (label 0)
    std::vector<double> features;   // T * (N+1) * d
    std::vector<double> boxes;      // T * N * 4
    std::optional<std::pair<std::size_t, std::size_t>> accident_pair;  // synth metadata

    const double* frame_feature(std::size_t t) const;            // t 1-based
    const double* object_feature(std::size_t t, std::size_t i) const;  // i 0-based
    const double* box(std::size_t t, std::size_t i) const;
    bool object_valid(std::size_t t, std::size_t i) const;

    Tensor frame_feature_tensor(std::size_t t) const;   // (d)
    Tensor object_features_tensor(std::size_t t) const; // (N, d)

    void validate() const;
};

/// Multi-scale input tensor: frame feature plus N object features, each
/// reshaped row-major to (c_e, h, w) and stacked along channels to
/// ((N+1)*c_e, h, w). Block 0 is the frame feature.
Tensor spatialize(const Tensor& object_features /*(N,d)*/, const Tensor& frame_feature /*(d)*/,
                  const SpatialLayout& layout);

// --- LFS1 container -------------------------------------------------------
// One directory per dataset: manifest.json plus one binary file per video
// (magic "LFS1", little-endian u32 T,N,d, then T*(N+1)*d f32 features with
// the frame feature first, then T*N*4 f32 boxes). Features are stored as
// 32-bit floats on disk and widened to 64-bit in memory.

void store_sequence(const FeatureSequence& seq, const std::filesystem::path& file);
void save_dataset(const std::vector<FeatureSequence>& seqs, const std::filesystem::path& dir);
std::vector<FeatureSequence> load_dataset(const std::filesystem::path& dir);
FeatureSequence load_sequence(const std::filesystem::path& dataset_dir, const std::string& video_id);

// --- synthetic pre-crash scenario generator -------------------------------

struct SynthConfig {
    std::size_t num_positive = 0, num_negative = 0;
    std::size_t T = 50, N = 5, d = 32;
    double fps = 10.0;
    double difficulty = 0.0;  // in [0,1]
    std::uint64_t seed = 0;
};

/// Deterministic in the seed (per-video derived streams; output rounded
/// through f32 so that store/load round-trips are bitwise).
///
/// Generator contract:
///  - every entity (frame feature and each object) follows an independent
///    random walk: init Normal(0, 0.1), steps Normal(0, 0.05) per coord;
///  - positive videos draw the onset tau uniformly from
///    [ceil(0.6 T), floor(0.95 T)] and designate one accident pair; both
///    pair members receive the dataset's precursor direction (one random
///    unit vector drawn from the dataset seed: the feature space stands
///    in for a fixed backbone embedding, so precursors share semantics
///    across videos) scaled by a ramp that grows linearly from 0 to
///    (1-difficulty)*2.0 + 0.2 over frames [tau - 0.3 T, tau] and stays
///    at full magnitude after tau; the pair's boxes converge linearly
///    toward their midpoint over the same window;
///  - negative videos give one object a distractor bump aiming at
///    magnitude 0.3*difficulty that peaks at a fraction in [0.2, 0.45)
///    of that target and decays back to zero (it never completes);
///  - boxes follow reflected random walks of fixed per-object size.
std::vector<FeatureSequence> synthesize_dataset(const SynthConfig& cfg);

}  // namespace latte
