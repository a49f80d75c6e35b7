#include "latte/train.hpp"

#include <chrono>
#include <cmath>
#include <thread>

namespace latte {

void TrainConfig::validate() const {
    // lr == 0 is allowed as a degenerate no-op optimizer
    if (lr < 0.0) throw ValidationError("train config: learning rate must be non-negative");
    if (epochs < 1) throw ValidationError("train config: epochs must be >= 1");
    if (batch_size < 1) throw ValidationError("train config: batch size must be >= 1");
    if (threads < 1) throw ValidationError("train config: threads must be >= 1");
}

Optimizer::Optimizer(OptimizerConfig cfg, double lr, std::size_t dim)
    : cfg_(cfg), lr_(lr), m_(dim, 0.0), v_(dim, 0.0) {}

void Optimizer::step(std::vector<double>& theta, const std::vector<double>& grad) {
    if (theta.size() != m_.size() || grad.size() != m_.size())
        throw ValidationError("optimizer: dimension mismatch");
    if (cfg_.kind == OptimizerConfig::Kind::sgd) {
        for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= lr_ * grad[i];
        return;
    }
    ++t_;
    double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < theta.size(); ++i) {
        m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
        v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
        double mhat = m_[i] / bc1;
        double vhat = v_[i] / bc2;
        theta[i] -= lr_ * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
}

namespace {

struct VideoGrad {
    std::vector<double> grad;
    double loss_frame = 0.0, loss_video = 0.0, loss_total = 0.0;
};

VideoGrad backward_one_video(const LatteModel& model, const FeatureSequence& seq,
                             const LossConfig& lc, std::uint64_t dropout_seed) {
    Tape tape;
    ParamStore taped = model.params().watch_all(tape);
    auto probs = model.forward_probs(seq, taped, Mode::train, dropout_seed);
    Tensor lf = frame_loss_video(probs, seq.label, seq.onset_frame, lc);
    Tensor lv = video_loss_video(probs, seq.label);
    Tensor lt = total_loss(lf, lv, lc.lambda);
    VideoGrad out;
    out.loss_frame = lf.item();
    out.loss_video = lv.item();
    out.loss_total = lt.item();
    auto grads = tape.backward(lt);
    out.grad = taped.flat_grad(grads);
    return out;
}

}  // namespace

TrainResult train(LatteModel& model, const std::vector<FeatureSequence>& dataset,
                  const TrainConfig& tc, const LossConfig& lc,
                  const std::function<void(std::size_t)>& on_checkpoint) {
    tc.validate();
    if (dataset.empty()) throw ValidationError("train: dataset is empty");
    for (const auto& s : dataset) s.validate();

    std::size_t dim = model.params().total_size();
    Optimizer opt(tc.optimizer, tc.lr, dim);
    std::vector<double> theta = model.params().flatten();

    TrainResult result;
    std::size_t global_step = 0;
    for (std::size_t epoch = 1; epoch <= tc.epochs; ++epoch) {
        // Seeded per-epoch shuffle (Fisher-Yates).
        std::vector<std::size_t> order(dataset.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        RandomStream shuffle(derive_seed(tc.seed, "shuffle", epoch));
        for (std::size_t i = order.size(); i-- > 1;)
            std::swap(order[i], order[shuffle.uniform_int(0, i)]);

        for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
            auto t0 = std::chrono::steady_clock::now();
            std::size_t count = std::min(tc.batch_size, order.size() - start);
            ++global_step;

            std::vector<VideoGrad> per_video(count);
            auto run_range = [&](std::size_t lo, std::size_t hi) {
                for (std::size_t b = lo; b < hi; ++b) {
                    const auto& seq = dataset[order[start + b]];
                    std::uint64_t dseed = derive_seed(tc.seed, "drop", epoch, global_step, b);
                    per_video[b] = backward_one_video(model, seq, lc, dseed);
                }
            };
            std::size_t workers = std::min<std::size_t>(tc.threads, count);
            if (workers <= 1) {
                run_range(0, count);
            } else {
                std::vector<std::thread> pool;
                std::size_t chunk = (count + workers - 1) / workers;
                for (std::size_t w = 0; w < workers; ++w) {
                    std::size_t lo = w * chunk, hi = std::min(count, lo + chunk);
                    if (lo < hi) pool.emplace_back(run_range, lo, hi);
                }
                for (auto& th : pool) th.join();
            }

            // Fixed merge order: video order within the batch.
            std::vector<double> grad(dim, 0.0);
            StepLog log;
            log.epoch = epoch;
            log.step = global_step;
            for (std::size_t b = 0; b < count; ++b) {
                const auto& vg = per_video[b];
                for (std::size_t i = 0; i < dim; ++i) grad[i] += vg.grad[i];
                log.loss_frame += vg.loss_frame;
                log.loss_video += vg.loss_video;
                log.loss_total += vg.loss_total;
            }
            if (!std::isfinite(log.loss_total))
                throw Error("train: non-finite loss in epoch " + std::to_string(epoch) + " step " +
                            std::to_string(global_step));

            opt.step(theta, grad);
            model.params().unflatten(theta);

            log.wall_ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - t0)
                              .count();
            result.log.push_back(log);
        }
        if (on_checkpoint &&
            ((tc.checkpoint_every && epoch % tc.checkpoint_every == 0) || epoch == tc.epochs))
            on_checkpoint(epoch);
    }
    return result;
}

}  // namespace latte
