#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "latte/loss.hpp"
#include "latte/model.hpp"

namespace latte {

struct OptimizerConfig {
    enum class Kind { sgd, adam };
    Kind kind = Kind::adam;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

struct TrainConfig {
    std::size_t epochs = 15;
    double lr = 1e-3;
    std::size_t batch_size = 10;  // videos per optimizer step
    OptimizerConfig optimizer;
    std::uint64_t seed = 0;
    std::size_t checkpoint_every = 0;  // epochs; 0 = final only
    std::size_t threads = 1;
    void validate() const;
};

/// Flat-vector optimizer with persistent state across steps. Adam at zero
/// gradient leaves parameters unchanged.
class Optimizer {
public:
    Optimizer(OptimizerConfig cfg, double lr, std::size_t dim);
    void step(std::vector<double>& theta, const std::vector<double>& grad);

private:
    OptimizerConfig cfg_;
    double lr_;
    std::size_t t_ = 0;
    std::vector<double> m_, v_;
};

struct StepLog {
    std::size_t epoch = 0, step = 0;
    double loss_frame = 0.0, loss_video = 0.0, loss_total = 0.0;
    double wall_ms = 0.0;
};

struct TrainResult {
    std::vector<StepLog> log;
};

/// Per-epoch seeded shuffle, per-batch gradient summation over videos
/// (one tape each; merge order is video order regardless of threading),
/// optimizer step after each batch. Deterministic given the seed.
/// `on_checkpoint(epoch)` fires per the cadence and after the last epoch.
TrainResult train(LatteModel& model, const std::vector<FeatureSequence>& dataset,
                  const TrainConfig& tc, const LossConfig& lc,
                  const std::function<void(std::size_t)>& on_checkpoint = {});

}  // namespace latte
