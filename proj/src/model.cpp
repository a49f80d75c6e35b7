#include "latte/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace latte {

void ModelConfig::validate() const {
    layout.validate(d);
    std::size_t C = channels();
    if (G == 0 || C % G != 0)
        throw ValidationError("model config: G=" + std::to_string(G) + " does not divide C=" +
                              std::to_string(C));
    std::size_t s = memory_dim();
    if (s == 0 || s >= C)
        throw ValidationError("model config: memory dim S=" + std::to_string(s) +
                              " must be in [1, C)");
    if (r_maa % 2 == 0 || r_aaa % 2 == 0)
        throw ValidationError("model config: fusion/smoothing widths must be odd");
    if (d_u == 0 || hidden() == 0) throw ValidationError("model config: d_u and head width must be >= 1");
    if (!(threshold > 0.0 && threshold < 1.0))
        throw ValidationError("model config: threshold must lie in (0,1)");
    if (dropout_p < 0.0 || dropout_p >= 1.0)
        throw ValidationError("model config: dropout_p must be in [0,1)");
    if (mc_samples == 0) throw ValidationError("model config: mc_samples must be >= 1");
}

PredictionSeries make_series(std::string video_id, std::vector<double> probs, double threshold) {
    PredictionSeries s;
    s.video_id = std::move(video_id);
    s.threshold = threshold;
    s.probs = std::move(probs);
    if (s.probs.empty()) throw ValidationError("prediction series needs at least one frame");
    s.p_vid = *std::max_element(s.probs.begin(), s.probs.end());
    for (std::size_t t = 1; t <= s.probs.size(); ++t)
        if (s.probs[t - 1] >= threshold) {
            s.crossing_frame = t;
            break;
        }
    return s;
}

LatteModel::LatteModel(ModelConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

namespace {

Tensor random_matrix(Shape shape, double fan_in, RandomStream& rs) {
    Tensor t = Tensor::zeros(shape);
    double scale = 1.0 / std::sqrt(fan_in);
    for (auto& v : t.data) v = rs.normal(0.0, scale);
    return t;
}

}  // namespace

void LatteModel::init(std::uint64_t seed) {
    RandomStream rs(derive_seed(seed, "init"));
    ParamStore ps;
    std::size_t C = cfg_.channels(), cg = C / cfg_.G, S = cfg_.memory_dim();
    std::size_t du = cfg_.d_u, hid = cfg_.hidden();

    if (cfg_.emsa_on) {
        for (std::size_t g = 0; g < cfg_.G; ++g) {
            std::string p = "emsa.g" + std::to_string(g) + ".";
            ps.add(p + "conv1_w", random_matrix({cg, cg}, static_cast<double>(cg), rs));
            ps.add(p + "conv1_b", Tensor::zeros({cg}));
            ps.add(p + "dw_w", random_matrix({cg, 3, 3}, 9.0, rs));
            ps.add(p + "dw_b", Tensor::zeros({cg}));
        }
    }
    if (cfg_.maa_on) {
        ps.add("maa.w_mk", random_matrix({C, S}, static_cast<double>(C), rs));
        ps.add("maa.w_mv", random_matrix({S, C}, static_cast<double>(S), rs));
        ps.add("maa.w_ta", random_matrix({S, C}, static_cast<double>(S), rs));
        ps.add("maa.fuse_k", Tensor::full({C, cfg_.r_maa}, 1.0 / static_cast<double>(cfg_.r_maa)));
    }
    if (cfg_.aaa_on) {
        ps.add("aaa.smooth_k",
               Tensor::full({1, cfg_.r_aaa}, 1.0 / static_cast<double>(cfg_.r_aaa)));
        ps.add("aaa.mix", random_matrix({du, du}, static_cast<double>(du), rs));
        ps.add("aaa.w", random_matrix({du, du}, static_cast<double>(du), rs));
        ps.add("aaa.b0", random_matrix({du, du}, static_cast<double>(du), rs));
        ps.add("aaa.b1", random_matrix({du, du}, static_cast<double>(du), rs));
    }
    ps.add("fusion.w", random_matrix({cfg_.fused_width(), du},
                                     static_cast<double>(cfg_.fused_width()), rs));
    ps.add("fusion.b", Tensor::zeros({du}));
    ps.add("head.w1", random_matrix({2 * du, hid}, static_cast<double>(2 * du), rs));
    ps.add("head.b1", Tensor::zeros({hid}));
    ps.add("head.w2", random_matrix({hid, 1}, static_cast<double>(hid), rs));
    ps.add("head.b2", Tensor::zeros({1}));
    params_ = std::move(ps);
}

EmsaParams emsa_view(const ParamStore& store, const ModelConfig& cfg) {
    EmsaParams p;
    for (std::size_t g = 0; g < cfg.G; ++g) {
        std::string pre = "emsa.g" + std::to_string(g) + ".";
        p.groups.push_back(EmsaGroupParams{store.at(pre + "conv1_w"), store.at(pre + "conv1_b"),
                                           store.at(pre + "dw_w"), store.at(pre + "dw_b")});
    }
    return p;
}

MaaParams maa_view(const ParamStore& store) {
    return MaaParams{store.at("maa.w_mk"), store.at("maa.w_mv"), store.at("maa.w_ta"),
                     store.at("maa.fuse_k")};
}

AaaParams aaa_view(const ParamStore& store) {
    return AaaParams{store.at("aaa.smooth_k"), store.at("aaa.mix"), store.at("aaa.w"),
                     store.at("aaa.b0"), store.at("aaa.b1")};
}

Tensor LatteModel::frame_step(std::vector<Tensor>& history, const Tensor& object_features,
                              const Tensor& frame_feature, const ParamStore& store, Mode mode,
                              RandomStream& rng) const {
    const auto& cfg = cfg_;
    std::size_t C = cfg.channels(), du = cfg.d_u;

    Tensor o_t = spatialize(object_features, frame_feature, cfg.layout);

    Tensor e_t = cfg.emsa_on ? global_pool_2d(emsa_forward(o_t, emsa_view(store, cfg)))
                             : Tensor::zeros({2 * C});
    Tensor m_t = cfg.maa_on ? maa_forward(o_t, maa_view(store)) : Tensor::zeros({C});
    Tensor raw = global_pool_2d(o_t);

    Tensor fused_in = reshape(concat({e_t, m_t, raw}, 0), {1, cfg.fused_width()});
    Tensor u_row = add(matmul(fused_in, store.at("fusion.w")), reshape(store.at("fusion.b"), {1, du}));
    Tensor u_t = reshape(u_row, {du});
    history.push_back(u_t);

    Tensor c_t = u_t;
    if (cfg.aaa_on) {
        std::vector<Tensor> rows;
        rows.reserve(history.size());
        for (const auto& h : history) rows.push_back(reshape(h, {1, du}));
        c_t = aaa_forward(concat(rows, 0), aaa_view(store));
    }

    Tensor head_in = reshape(concat({u_t, c_t}, 0), {1, 2 * du});
    Tensor hidden = swish(add(matmul(head_in, store.at("head.w1")),
                              reshape(store.at("head.b1"), {1, cfg.hidden()})));
    auto head_out = [&](const Tensor& h) {
        return sigmoid(
            add(matmul(h, store.at("head.w2")), reshape(store.at("head.b2"), {1, 1})));
    };

    Tensor p_t;
    if (mode == Mode::train) {
        p_t = head_out(dropout(hidden, cfg.dropout_p, rng));
    } else if (cfg.mc_samples <= 1) {
        p_t = head_out(hidden);  // dropout is the identity at K=1
    } else {
        Tensor acc = head_out(dropout(hidden, cfg.dropout_p, rng));
        for (std::size_t k = 1; k < cfg.mc_samples; ++k)
            acc = add(acc, head_out(dropout(hidden, cfg.dropout_p, rng)));
        p_t = mul_scalar(acc, 1.0 / static_cast<double>(cfg.mc_samples));
    }
    return reshape(p_t, {1});
}

std::vector<Tensor> LatteModel::forward_probs(const FeatureSequence& seq, const ParamStore& store,
                                              Mode mode, std::uint64_t dropout_seed) const {
    if (seq.d != cfg_.d || seq.N != cfg_.N)
        throw ValidationError(seq.video_id + ": sequence (N=" + std::to_string(seq.N) + ",d=" +
                              std::to_string(seq.d) + ") does not match model config (N=" +
                              std::to_string(cfg_.N) + ",d=" + std::to_string(cfg_.d) + ")");
    std::vector<Tensor> probs;
    probs.reserve(seq.T);
    std::vector<Tensor> history;
    history.reserve(seq.T);
    const char* stream = mode == Mode::train ? "drop" : "mc";
    for (std::size_t t = 1; t <= seq.T; ++t) {
        RandomStream rng(derive_seed(dropout_seed, stream, t));
        probs.push_back(frame_step(history, seq.object_features_tensor(t),
                                   seq.frame_feature_tensor(t), store, mode, rng));
    }
    return probs;
}

PredictionSeries LatteModel::predict_video(const FeatureSequence& seq, std::uint64_t seed) const {
    auto probs = forward_probs(seq, params_, Mode::eval, seed);
    std::vector<double> values;
    values.reserve(probs.size());
    for (const auto& p : probs) values.push_back(p.item());
    return make_series(seq.video_id, std::move(values), cfg_.threshold);
}

std::vector<std::pair<std::size_t, double>> LatteModel::attribute_entities(
    const FeatureSequence& seq, std::size_t t, std::uint64_t seed) const {
    if (t < 1 || t > seq.T)
        throw ValidationError("attribute_entities: frame " + std::to_string(t) + " out of range [1," +
                              std::to_string(seq.T) + "]");
    // History up to t-1 is shared context for all occlusions.
    std::vector<Tensor> history;
    for (std::size_t k = 1; k < t; ++k) {
        RandomStream rng(derive_seed(seed, "mc", k));
        frame_step(history, seq.object_features_tensor(k), seq.frame_feature_tensor(k), params_,
                   Mode::eval, rng);
    }
    Tensor q = seq.object_features_tensor(t);
    Tensor g = seq.frame_feature_tensor(t);
    auto prob_with = [&](const Tensor& objects) {
        std::vector<Tensor> hist = history;
        RandomStream rng(derive_seed(seed, "mc", t));
        return frame_step(hist, objects, g, params_, Mode::eval, rng).item();
    };
    double p0 = prob_with(q);

    std::vector<std::pair<std::size_t, double>> ranked;
    for (std::size_t i = 0; i < seq.N; ++i) {
        if (!seq.object_valid(t, i)) continue;
        Tensor occluded = q;
        std::fill(occluded.data.begin() + static_cast<std::ptrdiff_t>(i * seq.d),
                  occluded.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * seq.d), 0.0);
        ranked.emplace_back(i, std::fabs(p0 - prob_with(occluded)));
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    return ranked;
}

std::vector<AlertRecord> generate_alerts(
    const PredictionSeries& series, double fps,
    const std::function<std::vector<std::pair<std::size_t, double>>(std::size_t)>& attribution) {
    std::vector<AlertRecord> alerts;
    double prev = 0.0;  // p_0 = 0 convention
    for (std::size_t t = 1; t <= series.probs.size(); ++t) {
        double p = series.probs[t - 1];
        if (prev < series.threshold && p >= series.threshold) {
            AlertRecord a;
            a.video_id = series.video_id;
            a.frame = t;
            a.seconds = static_cast<double>(t) / fps;
            a.probability = p;
            a.entities = attribution ? attribution(t)
                                     : std::vector<std::pair<std::size_t, double>>{};
            std::string ids = "[";
            for (std::size_t i = 0; i < a.entities.size() && i < 2; ++i) {
                if (i) ids += ",";
                ids += std::to_string(a.entities[i].first);
            }
            ids += "]";
            char buf[128];
            std::snprintf(buf, sizeof(buf), "accident risk %.2f at t=%.1fs; entities %s", p,
                          a.seconds, ids.c_str());
            a.message = buf;
            alerts.push_back(std::move(a));
        }
        prev = p;
    }
    return alerts;
}

std::vector<AlertRecord> LatteModel::generate_alerts(const PredictionSeries& series,
                                                     const FeatureSequence& seq,
                                                     std::uint64_t seed) const {
    return latte::generate_alerts(series, seq.fps, [&](std::size_t frame) {
        return attribute_entities(seq, frame, seed);
    });
}

}  // namespace latte
