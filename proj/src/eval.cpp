#include "latte/eval.hpp"

#include <algorithm>
#include <cmath>

namespace latte {

double average_precision(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw ValidationError("average_precision: scores and labels differ in length");
    std::size_t positives = 0;
    for (int l : labels) positives += l == 1;
    if (positives == 0) throw ValidationError("average_precision: undefined without positive labels");

    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    // Precision at each positive's rank, then all-points interpolation
    // via a running max from the tail.
    std::vector<double> prec_at_pos;
    std::size_t tp = 0;
    for (std::size_t r = 0; r < order.size(); ++r) {
        if (labels[order[r]] == 1) {
            ++tp;
            prec_at_pos.push_back(static_cast<double>(tp) / static_cast<double>(r + 1));
        }
    }
    double running = 0.0;
    double ap = 0.0;
    for (std::size_t i = prec_at_pos.size(); i-- > 0;) {
        running = std::max(running, prec_at_pos[i]);
        ap += running;
    }
    return ap / static_cast<double>(positives);
}

double time_to_accident(const PredictionSeries& series, std::size_t tau, double fps,
                        double threshold) {
    if (!(fps > 0.0)) throw ValidationError("time_to_accident: fps must be positive");
    for (std::size_t t = 1; t <= series.probs.size(); ++t) {
        if (series.probs[t - 1] >= threshold) {
            if (t > tau) return 0.0;  // crossing after the onset: no earliness
            return static_cast<double>(tau - t) / fps;
        }
    }
    return 0.0;  // miss convention
}

EvalResult evaluate(const std::vector<PredictionSeries>& predictions,
                    const std::vector<int>& labels, const std::vector<std::size_t>& onsets,
                    double fps, double theta_fixed) {
    if (predictions.size() != labels.size() || predictions.size() != onsets.size())
        throw ValidationError("evaluate: predictions/labels/onsets differ in length");

    std::vector<double> scores;
    scores.reserve(predictions.size());
    for (const auto& p : predictions) scores.push_back(p.p_vid);

    EvalResult res;
    res.ap = average_precision(scores, labels);

    std::size_t num_pos = 0;
    for (int l : labels) num_pos += l == 1;

    auto mean_tta_at = [&](double thr) {
        double sum = 0.0;
        for (std::size_t v = 0; v < predictions.size(); ++v)
            if (labels[v] == 1) sum += time_to_accident(predictions[v], onsets[v], fps, thr);
        return sum / static_cast<double>(num_pos);
    };
    res.mtta_seconds = mean_tta_at(theta_fixed);

    // Threshold sweep over descending unique video scores.
    std::vector<double> thresholds = scores;
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    for (double thr : thresholds) {
        std::size_t tp = 0, fp = 0;
        for (std::size_t v = 0; v < predictions.size(); ++v) {
            if (scores[v] >= thr) (labels[v] == 1 ? tp : fp) += 1;
        }
        CurvePoint pt;
        pt.threshold = thr;
        pt.recall = static_cast<double>(tp) / static_cast<double>(num_pos);
        pt.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        pt.mean_tta = mean_tta_at(thr);
        res.curve.push_back(pt);
    }
    for (const auto& pt : res.curve) {
        if (pt.recall >= 0.80) {  // thresholds descend, so the first hit is the largest
            res.tta_r80_seconds = pt.mean_tta;
            break;
        }
    }
    return res;
}

}  // namespace latte
