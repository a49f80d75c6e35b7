#pragma once

#include <optional>
#include <vector>

#include "latte/model.hpp"

namespace latte {

struct CurvePoint {
    double threshold = 0.0, precision = 0.0, recall = 0.0, mean_tta = 0.0;
};

struct EvalResult {
    double ap = 0.0;
    double mtta_seconds = 0.0;                 // at the fixed threshold
    std::optional<double> tta_r80_seconds;     // absent when recall 0.80 is unattainable
    std::vector<CurvePoint> curve;             // thresholds strictly decreasing
};

/// Area under the precision-recall curve with all-points interpolation
/// (interpolated precision at recall r = max precision at recall >= r).
/// Videos are ranked by descending score, ties by ascending index.
/// Requires at least one positive label.
double average_precision(const std::vector<double>& scores, const std::vector<int>& labels);

/// Earliness in seconds of the first crossing at `threshold` relative to
/// the onset: max(0, (tau - t_p)/fps); 0 when the series never crosses at
/// or before tau (misses contribute zero).
double time_to_accident(const PredictionSeries& series, std::size_t tau, double fps,
                        double threshold);

/// Full metric sweep: AP over p_vid, mTTA at theta_fixed, and TTA@R80 via
/// descending unique-score thresholds (largest threshold reaching video-
/// level recall >= 0.80).
EvalResult evaluate(const std::vector<PredictionSeries>& predictions,
                    const std::vector<int>& labels, const std::vector<std::size_t>& onsets,
                    double fps, double theta_fixed);

}  // namespace latte
