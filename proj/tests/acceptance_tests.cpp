// Acceptance suite: one test case per criterion, each printing a PASS/FAIL
// line with the measured numbers.

#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>

#include "latte/config.hpp"
#include "latte/eval.hpp"
#include "latte/gradcheck.hpp"
#include "latte/profile.hpp"
#include "latte/train.hpp"
#include "oracles.hpp"

using namespace latte;

namespace {

void report(int id, const char* name, bool pass, const std::string& detail = "") {
    std::printf("[criterion %d] %-34s %s%s%s\n", id, name, pass ? "PASS" : "FAIL",
                detail.empty() ? "" : " — ", detail.c_str());
    std::fflush(stdout);
}

double now_s() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

Tensor random_tensor(Shape shape, RandomStream& rs, double scale = 1.0) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (auto& v : t.data) v = rs.normal() * scale;
    return t;
}

// --- shared fixture for criteria 6, 8, 9 -----------------------------------
// 200 train / 50 test, balanced, T=50, N=5, d=32, fps=10, difficulty=0.2,
// seed=42; trained with the paper defaults (15 epochs, lr 1e-3, batch 10).
// The temporal weighting uses the decay convention: the paper's printed
// exponent sign makes early ambiguous frames dominate the loss and destroys
// video-level ranking, so the trainable reading is the decaying one.
struct E2EFixture {
    std::vector<FeatureSequence> train_set, test_set;
    LatteModel model{ModelConfig{}};
    EvalResult result;
    double train_seconds = 0.0;
    std::vector<PredictionSeries> test_preds;

    static ModelConfig config() {
        ModelConfig mc;
        mc.N = 5;
        mc.d = 32;
        mc.layout = {2, 4, 4};
        mc.G = 4;
        mc.S = 3;
        mc.d_u = 32;
        mc.head_hidden = 32;
        return mc;
    }

    static LossConfig loss_config() {
        LossConfig lc;
        lc.convention = OmegaConvention::decay;
        return lc;
    }

    E2EFixture() {
        SynthConfig sc{125, 125, 50, 5, 32, 10.0, 0.2, 42};
        auto all = synthesize_dataset(sc);
        for (std::size_t i = 0; i < 125; ++i)
            (i < 100 ? train_set : test_set).push_back(all[i]);  // positives
        for (std::size_t i = 125; i < 250; ++i)
            (i < 225 ? train_set : test_set).push_back(all[i]);  // negatives

        model = LatteModel(config());
        model.init(42);
        TrainConfig tc;
        tc.epochs = 15;
        tc.lr = 1e-3;
        tc.batch_size = 10;
        tc.seed = 42;
        double t0 = now_s();
        train(model, train_set, tc, loss_config());
        train_seconds = now_s() - t0;

        std::vector<int> labels;
        std::vector<std::size_t> onsets;
        for (std::size_t i = 0; i < test_set.size(); ++i) {
            test_preds.push_back(model.predict_video(test_set[i], derive_seed(42, "eval", i)));
            labels.push_back(test_set[i].label);
            onsets.push_back(test_set[i].onset_frame);
        }
        result = evaluate(test_preds, labels, onsets, 10.0, 0.5);
    }
};

const E2EFixture& e2e() {
    static E2EFixture fixture;
    return fixture;
}

}  // namespace

TEST_CASE("criterion 1: gradient correctness") {
    ModelConfig mc;
    mc.N = 2;
    mc.d = 8;
    mc.layout = {2, 2, 2};
    mc.G = 2;
    mc.S = 2;
    mc.d_u = 8;
    mc.head_hidden = 8;
    LossConfig lc;

    double t0 = now_s();
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        SynthConfig sc{1, 1, 4, 2, 8, 10.0, 0.0, seed};
        auto videos = synthesize_dataset(sc);

        LatteModel model(mc);
        model.init(seed);

        auto loss_value = [&](const ParamStore& store) {
            Tensor acc = Tensor::scalar(0.0);
            for (std::size_t v = 0; v < videos.size(); ++v) {
                auto probs = model.forward_probs(videos[v], store, Mode::train,
                                                 derive_seed(seed, "fd", v));
                Tensor lf = frame_loss_video(probs, videos[v].label, videos[v].onset_frame, lc);
                Tensor lv = video_loss_video(probs, videos[v].label);
                acc = add(acc, total_loss(lf, lv, lc.lambda));
            }
            return acc;
        };

        ParamStore scratch = model.params();
        auto f = [&](const std::vector<double>& theta) {
            scratch.unflatten(theta);
            return loss_value(scratch).item();
        };
        auto fd = finite_diff_gradient(f, model.params().flatten(), 1e-5);

        Tape tape;
        ParamStore taped = model.params().watch_all(tape);
        auto analytic = taped.flat_grad(tape.backward(loss_value(taped)));
        worst = std::max(worst, max_rel_error(analytic, fd, 1e-6));
    }
    double elapsed = now_s() - t0;
    bool pass = worst < 1e-3 && elapsed < 60.0;
    report(1, "gradient correctness", pass,
           "max rel err " + std::to_string(worst) + ", " + std::to_string(elapsed) + " s");
    CHECK(worst < 1e-3);
    CHECK(elapsed < 60.0);
}

TEST_CASE("criterion 2: equation-transcription oracles") {
    double worst = 0.0;

    for (std::uint64_t seed = 0; seed < 50; ++seed) {  // EMSA, G = 1
        RandomStream rs(seed);
        std::size_t C = 2 + seed % 3, H = 1 + seed % 4, W = 1 + (seed / 2) % 3;
        Tensor x = random_tensor({C, H, W}, rs);
        EmsaParams p;
        p.groups.push_back(EmsaGroupParams{random_tensor({C, C}, rs, 0.5),
                                           random_tensor({C}, rs, 0.2),
                                           random_tensor({C, 3, 3}, rs, 0.3),
                                           random_tensor({C}, rs, 0.2)});
        Tensor got = emsa_forward(x, p);
        auto want = oracle::emsa_g1(x.data, C, H, W, p.groups[0].conv1_w.data,
                                    p.groups[0].conv1_b.data, p.groups[0].dw_w.data,
                                    p.groups[0].dw_b.data);
        for (std::size_t i = 0; i < want.size(); ++i)
            worst = std::max(worst, std::fabs(got.data[i] - want[i]));
    }

    for (std::uint64_t seed = 0; seed < 50; ++seed) {  // MAA (incl. memory_attention)
        RandomStream rs(1000 + seed);
        std::size_t C = 8, H = 2, W = 2, S = 3, r = 3;
        Tensor o = random_tensor({C, H, W}, rs);
        MaaParams p{random_tensor({C, S}, rs, 0.5), random_tensor({S, C}, rs, 0.5),
                    random_tensor({S, C}, rs, 0.5), random_tensor({C, r}, rs, 0.4)};
        Tensor got = maa_forward(o, p);
        auto want =
            oracle::maa(o.data, C, H, W, S, r, p.w_mk.data, p.w_mv.data, p.w_ta.data, p.fuse_k.data);
        for (std::size_t c = 0; c < C; ++c) worst = std::max(worst, std::fabs(got.data[c] - want[c]));

        Tensor flat = transpose2d(reshape(o, {C, H * W}));
        auto ma_got = memory_attention(flat, p);
        auto ma_want = oracle::memory_attention(flat.data, H * W, C, S, p.w_mk.data, p.w_mv.data);
        for (std::size_t i = 0; i < ma_want.attention.size(); ++i)
            worst = std::max(worst, std::fabs(ma_got.attention.data[i] - ma_want.attention[i]));
    }

    for (std::uint64_t seed = 0; seed < 50; ++seed) {  // AAA
        RandomStream rs(2000 + seed);
        std::size_t t = 1 + seed % 7, du = 6, r = 3;
        Tensor u = random_tensor({t, du}, rs);
        AaaParams p{random_tensor({1, r}, rs, 0.4), random_tensor({du, du}, rs, 0.4),
                    random_tensor({du, du}, rs, 0.4), random_tensor({du, du}, rs, 0.4),
                    random_tensor({du, du}, rs, 0.4)};
        Tensor got = aaa_forward(u, p);
        auto want =
            oracle::aaa(u.data, t, du, r, p.smooth_k.data, p.mix.data, p.w.data, p.b0.data, p.b1.data);
        for (std::size_t k = 0; k < du; ++k)
            worst = std::max(worst, std::fabs(got.data[k] - want.output[k]));
    }

    bool pass = worst < 1e-12;
    report(2, "equation-transcription oracles", pass, "max abs dev " + std::to_string(worst));
    CHECK(worst < 1e-12);
}

TEST_CASE("criterion 3: loss closed forms") {
    auto scalar_probs = [](std::initializer_list<double> ps) {
        std::vector<Tensor> out;
        for (double p : ps) out.push_back(Tensor::scalar(p));
        return out;
    };
    LossConfig neg_cfg;
    double uniform_negative = frame_loss_video(scalar_probs({0.5, 0.5, 0.5}), 0, 0, neg_cfg).item();
    double want_neg = 3.0 * std::log(2.0);

    LossConfig pos_cfg;
    pos_cfg.beta = 0.5;
    pos_cfg.convention = OmegaConvention::as_printed;
    double weighted_positive =
        frame_loss_video(scalar_probs({0.5, 0.5, 0.5}), 1, 3, pos_cfg).item();
    double want_pos = (std::exp(1.0) + std::exp(0.5) + 1.0) * std::log(2.0);

    Tape tape;
    Tensor p1 = Tensor::scalar(0.2), p2 = Tensor::scalar(0.9);
    tape.watch(p1);
    tape.watch(p2);
    auto g = tape.backward(video_loss_video({p1, p2}, 1));
    double g1 = g.at(p1)[0], g2 = g.at(p2)[0];

    bool pass = std::fabs(uniform_negative - want_neg) < 1e-9 &&
                std::fabs(weighted_positive - want_pos) < 1e-9 && g1 == 0.0 &&
                std::fabs(g2 - (-1.0 / 0.9)) < 1e-9;
    report(3, "loss closed forms", pass,
           "neg " + std::to_string(uniform_negative) + ", pos " + std::to_string(weighted_positive));
    CHECK(std::fabs(uniform_negative - want_neg) < 1e-9);
    CHECK(std::fabs(weighted_positive - want_pos) < 1e-9);
    CHECK(g1 == 0.0);
    CHECK(std::fabs(g2 + 1.0 / 0.9) < 1e-9);
}

TEST_CASE("criterion 4: metric oracle equivalence") {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        RandomStream rs(seed);
        std::size_t n = 2 + rs.uniform_int(0, 28);
        std::vector<std::vector<double>> probs;
        std::vector<int> labels;
        std::vector<std::size_t> onsets;
        bool any_pos = false;
        for (std::size_t v = 0; v < n; ++v) {
            int label = rs.uniform01() < 0.5 ? 1 : 0;
            if (v + 1 == n && !any_pos) label = 1;
            any_pos |= label == 1;
            std::size_t T = 5 + rs.uniform_int(0, 15);
            std::vector<double> p(T);
            for (auto& x : p) x = std::round(rs.uniform01() * 20.0) / 20.0;
            probs.push_back(p);
            labels.push_back(label);
            onsets.push_back(label == 1 ? 1 + rs.uniform_int(0, T - 1) : 0);
        }
        std::vector<PredictionSeries> series;
        for (std::size_t v = 0; v < n; ++v)
            series.push_back(make_series("v" + std::to_string(v), probs[v], 0.5));
        auto got = evaluate(series, labels, onsets, 10.0, 0.5);
        auto want = oracle::evaluate(probs, labels, onsets, 10.0, 0.5);
        worst = std::max(worst, std::fabs(got.ap - want.ap));
        worst = std::max(worst, std::fabs(got.mtta_seconds - want.mtta));
        if (got.tta_r80_seconds.has_value() != want.tta_r80.has_value())
            worst = 1.0;
        else if (want.tta_r80)
            worst = std::max(worst, std::fabs(*got.tta_r80_seconds - *want.tta_r80));
    }
    double perfect = average_precision({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0});
    double fixture = average_precision({0.9, 0.8, 0.7, 0.6}, {1, 0, 1, 0});
    bool pass = worst < 1e-12 && perfect == 1.0 && std::fabs(fixture - 5.0 / 6.0) < 1e-12;
    report(4, "metric oracle equivalence", pass,
           "max dev " + std::to_string(worst) + ", fixture AP " + std::to_string(fixture));
    CHECK(worst < 1e-12);
    CHECK(perfect == 1.0);
    CHECK(std::fabs(fixture - 5.0 / 6.0) < 1e-12);
}

TEST_CASE("criterion 5: efficiency accounting") {
    ModelConfig mc = E2EFixture::config();
    auto prof = profile_model(mc, 50);
    long long flops = 0, params = 0;
    for (const auto& l : prof.layers) {
        flops += l.flops;
        params += l.params;
    }
    bool sums_ok = prof.frame_flops == flops && prof.params == params;

    bool ratio_ok = emsa_dominant_param_term(160, 1) == 8 * emsa_dominant_param_term(160, 8);

    bool separable_ok = true;
    for (std::size_t du = 2; du <= 64; ++du)
        separable_ok &= (3 + du * du) < (3 * du * du);

    bool pass = sums_ok && ratio_ok && separable_ok;
    report(5, "efficiency accounting", pass,
           "params " + std::to_string(prof.params) + ", frame flops " +
               std::to_string(prof.frame_flops));
    CHECK(sums_ok);
    CHECK(ratio_ok);
    CHECK(separable_ok);
}

TEST_CASE("criterion 6: end-to-end learnability") {
    const auto& fx = e2e();
    bool pass = fx.result.ap >= 0.90 && fx.result.mtta_seconds >= 0.5 && fx.train_seconds < 600.0;
    report(6, "end-to-end learnability", pass,
           "AP " + std::to_string(fx.result.ap) + ", mTTA " +
               std::to_string(fx.result.mtta_seconds) + " s, train " +
               std::to_string(fx.train_seconds) + " s");
    CHECK(fx.result.ap >= 0.90);
    CHECK(fx.result.mtta_seconds >= 0.5);
    CHECK(fx.train_seconds < 600.0);
}

TEST_CASE("criterion 7: causality and determinism") {
    // truncation invariance on a fresh stochastic-head model
    ModelConfig mc;
    mc.N = 2;
    mc.d = 8;
    mc.layout = {2, 2, 2};
    mc.G = 2;
    mc.S = 2;
    mc.d_u = 8;
    mc.head_hidden = 8;
    mc.mc_samples = 4;
    mc.dropout_p = 0.2;
    LatteModel model(mc);
    model.init(7);
    SynthConfig sc{1, 0, 10, 2, 8, 10.0, 0.0, 3};
    auto full = synthesize_dataset(sc)[0];
    auto series_full = model.predict_video(full, 11);
    bool causal = true;
    for (std::size_t T = 1; T < full.T; ++T) {
        FeatureSequence cut = full;
        cut.T = T;
        cut.features.resize(T * 3 * 8);
        cut.boxes.resize(T * 2 * 4);
        if (cut.onset_frame > T) {
            cut.label = 0;
            cut.onset_frame = 0;
            cut.accident_pair.reset();
        }
        auto series_cut = model.predict_video(cut, 11);
        for (std::size_t t = 0; t < T; ++t) causal &= series_cut.probs[t] == series_full.probs[t];
    }

    // bitwise training reproducibility
    SynthConfig sc2{3, 3, 8, 2, 8, 10.0, 0.2, 5};
    auto data = synthesize_dataset(sc2);
    auto run = [&]() {
        LatteModel m(mc);
        m.init(13);
        TrainConfig tc;
        tc.epochs = 2;
        tc.batch_size = 2;
        tc.seed = 17;
        return train(m, data, tc, LossConfig{});
    };
    auto a = run(), b = run();
    bool reproducible = a.log.size() == b.log.size();
    for (std::size_t i = 0; reproducible && i < a.log.size(); ++i)
        reproducible = a.log[i].loss_total == b.log[i].loss_total;

    // the three alert fixtures
    auto no_attr = [](std::size_t) { return std::vector<std::pair<std::size_t, double>>{}; };
    auto two = generate_alerts(make_series("v", {0.1, 0.7, 0.8, 0.3, 0.6}, 0.5), 10.0, no_attr);
    auto boundary = generate_alerts(make_series("v", {0.9, 0.9, 0.9}, 0.5), 10.0, no_attr);
    auto none = generate_alerts(make_series("v", {0.1, 0.2, 0.3}, 0.5), 10.0, no_attr);
    bool alerts_ok = two.size() == 2 && two[0].frame == 2 && two[1].frame == 5 &&
                     boundary.size() == 1 && boundary[0].frame == 1 && none.empty();

    bool pass = causal && reproducible && alerts_ok;
    report(7, "causality and determinism", pass);
    CHECK(causal);
    CHECK(reproducible);
    CHECK(alerts_ok);
}

TEST_CASE("criterion 8: ablation harness") {
    ModelConfig base = E2EFixture::config();
    auto base_prof = profile_model(base, 50);
    std::size_t C = base.channels();

    bool subtotals_ok = true;
    struct Toggle {
        bool ModelConfig::*flag;
        const char* module;
        long long count;
    };
    std::vector<Toggle> toggles{
        {&ModelConfig::emsa_on, "emsa", static_cast<long long>(emsa_param_count(C, base.G))},
        {&ModelConfig::maa_on, "maa",
         static_cast<long long>(maa_param_count(C, base.memory_dim(), base.r_maa))},
        {&ModelConfig::aaa_on, "aaa",
         static_cast<long long>(aaa_param_count(base.d_u, base.r_aaa))}};
    for (const auto& t : toggles) {
        ModelConfig cfg = base;
        cfg.*(t.flag) = false;
        auto prof = profile_model(cfg, 50);
        subtotals_ok &= prof.params_by_module.at(t.module) == 0;
        subtotals_ok &= base_prof.params - prof.params == t.count;
        subtotals_ok &= base_prof.params_by_module.at(t.module) == t.count;
    }

    // A (no EMSA), B (no MAA), C (no AAA), full: one epoch each on the
    // acceptance dataset; "trains without error" is the criterion.
    const auto& fx = e2e();
    bool trains_ok = true;
    for (int which = 0; which < 4; ++which) {
        ModelConfig cfg = base;
        if (which == 0) cfg.emsa_on = false;
        if (which == 1) cfg.maa_on = false;
        if (which == 2) cfg.aaa_on = false;
        try {
            LatteModel m(cfg);
            m.init(100 + which);
            TrainConfig tc;
            tc.epochs = 1;
            tc.batch_size = 10;
            tc.seed = 100 + which;
            train(m, fx.train_set, tc, E2EFixture::loss_config());
        } catch (const std::exception& e) {
            trains_ok = false;
            MESSAGE("configuration ", which, " failed: ", e.what());
        }
    }

    bool pass = subtotals_ok && trains_ok;
    report(8, "ablation harness", pass);
    CHECK(subtotals_ok);
    CHECK(trains_ok);
}

TEST_CASE("criterion 9: attribution sanity") {
    const auto& fx = e2e();
    std::size_t hits = 0, total = 0;
    for (const auto& seq : fx.test_set) {
        if (seq.label != 1) continue;
        ++total;
        auto ranked = fx.model.attribute_entities(seq, seq.onset_frame, 42);
        if (ranked.size() < 2) continue;
        std::pair<std::size_t, std::size_t> top{ranked[0].first, ranked[1].first};
        auto pair = *seq.accident_pair;
        if ((top.first == pair.first && top.second == pair.second) ||
            (top.first == pair.second && top.second == pair.first))
            ++hits;
    }
    double rate = static_cast<double>(hits) / static_cast<double>(total);
    bool pass = rate >= 0.80;
    report(9, "attribution sanity", pass,
           std::to_string(hits) + "/" + std::to_string(total) + " top-2 hits");
    CHECK(rate >= 0.80);
}
