#include "oracles.hpp"

#include <algorithm>
#include <cmath>

namespace oracle {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double swish(double x) { return x * sigmoid(x); }

std::vector<double> global_pool_2d(const std::vector<double>& x, std::size_t C, std::size_t H,
                                   std::size_t W) {
    std::vector<double> z(C, 0.0);
    for (std::size_t c = 0; c < C; ++c) {
        double sum = 0.0;
        for (std::size_t j = 0; j < H; ++j)
            for (std::size_t i = 0; i < W; ++i) sum += x[(c * H + j) * W + i];
        z[c] = sum / static_cast<double>(H * W);
    }
    return z;
}

namespace {

std::vector<double> softmax_vec(const std::vector<double>& v) {
    double mx = *std::max_element(v.begin(), v.end());
    std::vector<double> out(v.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - mx);
        sum += out[i];
    }
    for (auto& e : out) e /= sum;
    return out;
}

}  // namespace

EmsaTrace emsa_g1_trace(const std::vector<double>& x, std::size_t C, std::size_t H, std::size_t W,
                        const std::vector<double>& w1, const std::vector<double>& b1,
                        const std::vector<double>& k3, const std::vector<double>& b3) {
    auto at = [&](const std::vector<double>& m, std::size_t c, std::size_t i, std::size_t j) {
        return m[(c * H + i) * W + j];
    };

    // (a) coarse branch
    std::vector<double> pool_h(C * H, 0.0), pool_w(C * W, 0.0);
    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t i = 0; i < H; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < W; ++j) s += at(x, c, i, j);
            pool_h[c * H + i] = s / static_cast<double>(W);
        }
        for (std::size_t j = 0; j < W; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < H; ++i) s += at(x, c, i, j);
            pool_w[c * W + j] = s / static_cast<double>(H);
        }
    }
    std::size_t L = H + W;
    std::vector<double> cat(C * L);
    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t i = 0; i < H; ++i) cat[c * L + i] = pool_h[c * H + i];
        for (std::size_t j = 0; j < W; ++j) cat[c * L + H + j] = pool_w[c * W + j];
    }
    std::vector<double> gate(C * L);
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t p = 0; p < L; ++p) {
            double s = b1[c];
            for (std::size_t c2 = 0; c2 < C; ++c2) s += w1[c * C + c2] * cat[c2 * L + p];
            gate[c * L + p] = sigmoid(s);
        }
    std::vector<double> x1(C * H * W);
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t i = 0; i < H; ++i)
            for (std::size_t j = 0; j < W; ++j)
                x1[(c * H + i) * W + j] = at(x, c, i, j) * gate[c * L + i] * gate[c * L + H + j];

    // (b) fine branch: 3x3 depthwise, zero padding
    std::vector<double> x2(C * H * W);
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t i = 0; i < H; ++i)
            for (std::size_t j = 0; j < W; ++j) {
                double s = b3[c];
                for (int u = 0; u < 3; ++u)
                    for (int v = 0; v < 3; ++v) {
                        int pi = static_cast<int>(i) + u - 1, pj = static_cast<int>(j) + v - 1;
                        if (pi < 0 || pj < 0 || pi >= static_cast<int>(H) || pj >= static_cast<int>(W))
                            continue;
                        s += x[(c * H + pi) * W + pj] * k3[(c * 3 + u) * 3 + v];
                    }
                x2[(c * H + i) * W + j] = s;
            }

    // (c) cross-branch fusion
    std::vector<double> s1 = softmax_vec(global_pool_2d(x1, C, H, W));
    std::vector<double> s2 = softmax_vec(global_pool_2d(x2, C, H, W));
    std::vector<double> attn(H * W);
    for (std::size_t i = 0; i < H; ++i)
        for (std::size_t j = 0; j < W; ++j) {
            double t1 = 0.0, t2 = 0.0;
            for (std::size_t c = 0; c < C; ++c) {
                t1 += s1[c] * x2[(c * H + i) * W + j];
                t2 += s2[c] * x1[(c * H + i) * W + j];
            }
            attn[i * W + j] = sigmoid(t1 + t2);
        }

    // (d) concat of the attended branches
    std::vector<double> out(2 * C * H * W);
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t i = 0; i < H; ++i)
            for (std::size_t j = 0; j < W; ++j) {
                out[(c * H + i) * W + j] = x1[(c * H + i) * W + j] * attn[i * W + j];
                out[((C + c) * H + i) * W + j] = x2[(c * H + i) * W + j] * attn[i * W + j];
            }
    return EmsaTrace{std::move(gate), std::move(attn), std::move(out)};
}

std::vector<double> emsa_g1(const std::vector<double>& x, std::size_t C, std::size_t H,
                            std::size_t W, const std::vector<double>& w1,
                            const std::vector<double>& b1, const std::vector<double>& k3,
                            const std::vector<double>& b3) {
    return emsa_g1_trace(x, C, H, W, w1, b1, k3, b3).output;
}

MemAttn memory_attention(const std::vector<double>& o_flat, std::size_t P, std::size_t C,
                         std::size_t S, const std::vector<double>& wmk,
                         const std::vector<double>& wmv) {
    MemAttn out;
    std::vector<double> m(P * S, 0.0);
    for (std::size_t p = 0; p < P; ++p)
        for (std::size_t s = 0; s < S; ++s) {
            double acc = 0.0;
            for (std::size_t c = 0; c < C; ++c) acc += o_flat[p * C + c] * wmk[c * S + s];
            m[p * S + s] = acc;
        }
    out.attention.resize(P * S);
    for (std::size_t p = 0; p < P; ++p) {
        std::vector<double> row(m.begin() + p * S, m.begin() + (p + 1) * S);
        auto sm = softmax_vec(row);
        std::copy(sm.begin(), sm.end(), out.attention.begin() + p * S);
    }
    out.enhanced.resize(P * S);
    for (std::size_t i = 0; i < P * S; ++i) out.enhanced[i] = out.attention[i] * m[i];
    out.memory.assign(P * C, 0.0);
    for (std::size_t p = 0; p < P; ++p)
        for (std::size_t c = 0; c < C; ++c) {
            double acc = 0.0;
            for (std::size_t s = 0; s < S; ++s) acc += out.attention[p * S + s] * wmv[s * C + c];
            out.memory[p * C + c] = acc;
        }
    return out;
}

std::vector<double> maa(const std::vector<double>& o, std::size_t C, std::size_t H, std::size_t W,
                        std::size_t S, std::size_t r, const std::vector<double>& wmk,
                        const std::vector<double>& wmv, const std::vector<double>& wta,
                        const std::vector<double>& fuse) {
    std::size_t P = H * W;
    std::vector<double> o_flat(P * C);
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t p = 0; p < P; ++p) o_flat[p * C + c] = o[c * P + p];

    MemAttn mem = memory_attention(o_flat, P, C, S, wmk, wmv);

    std::vector<double> beta(P * C);
    for (std::size_t p = 0; p < P; ++p)
        for (std::size_t c = 0; c < C; ++c) {
            double acc = 0.0;
            for (std::size_t s = 0; s < S; ++s)
                acc += std::tanh(mem.enhanced[p * S + s]) * wta[s * C + c];
            beta[p * C + c] = sigmoid(acc) * mem.memory[p * C + c];
        }

    std::vector<double> gated(P * C);
    for (std::size_t i = 0; i < P * C; ++i) gated[i] = beta[i] * o_flat[i];

    int pad = static_cast<int>(r / 2);
    std::vector<double> h(C, 0.0);
    for (std::size_t c = 0; c < C; ++c) {
        double sum = 0.0;
        for (std::size_t p = 0; p < P; ++p) {
            double acc = 0.0;
            for (std::size_t u = 0; u < r; ++u) {
                int q = static_cast<int>(p) + static_cast<int>(u) - pad;
                if (q < 0 || q >= static_cast<int>(P)) continue;
                acc += gated[static_cast<std::size_t>(q) * C + c] * fuse[c * r + u];
            }
            sum += acc;
        }
        h[c] = sum / static_cast<double>(P);
    }
    return h;
}

AaaTrace aaa(const std::vector<double>& u, std::size_t t, std::size_t du, std::size_t r,
             const std::vector<double>& smooth, const std::vector<double>& mix,
             const std::vector<double>& w, const std::vector<double>& b0,
             const std::vector<double>& b1) {
    AaaTrace out;
    std::vector<double> gram(t * t, 0.0);
    for (std::size_t i = 0; i < t; ++i)
        for (std::size_t j = 0; j < t; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < du; ++k) acc += u[i * du + k] * u[j * du + k];
            gram[i * t + j] = acc;
        }
    int pad = static_cast<int>(r / 2);
    std::vector<double> interaction(t * t);
    for (std::size_t i = 0; i < t; ++i)
        for (std::size_t j = 0; j < t; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < r; ++k) {
                int q = static_cast<int>(j) + static_cast<int>(k) - pad;
                if (q < 0 || q >= static_cast<int>(t)) continue;
                acc += gram[i * t + static_cast<std::size_t>(q)] * smooth[k];
            }
            interaction[i * t + j] = sigmoid(acc);
        }
    out.relevance.assign(t, 0.0);
    for (std::size_t i = 0; i < t; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < t; ++j) s += interaction[i * t + j];
        out.relevance[i] = s / static_cast<double>(t);
    }
    std::vector<double> mixed(t * du, 0.0);
    for (std::size_t i = 0; i < t; ++i)
        for (std::size_t k = 0; k < du; ++k) {
            double acc = 0.0;
            for (std::size_t k2 = 0; k2 < du; ++k2) acc += u[i * du + k2] * mix[k2 * du + k];
            mixed[i * du + k] = acc;
        }
    std::vector<double> pooled(du, 0.0);
    for (std::size_t k = 0; k < du; ++k)
        for (std::size_t i = 0; i < t; ++i) pooled[k] += out.relevance[i] * mixed[i * du + k];
    std::vector<double> z(du, 0.0);
    for (std::size_t k = 0; k < du; ++k)
        for (std::size_t k2 = 0; k2 < du; ++k2) z[k] += pooled[k2] * w[k2 * du + k];

    std::vector<double> h0(du, 0.0), h1(du, 0.0);
    for (std::size_t k = 0; k < du; ++k) {
        double acc = 0.0;
        for (std::size_t k2 = 0; k2 < du; ++k2) acc += z[k2] * b0[k2 * du + k];
        h0[k] = swish(acc);
    }
    for (std::size_t k = 0; k < du; ++k) {
        double acc = 0.0;
        for (std::size_t k2 = 0; k2 < du; ++k2) acc += h0[k2] * b1[k2 * du + k];
        h1[k] = swish(acc);
    }
    out.weights = softmax_vec(h1);
    out.output.resize(du);
    for (std::size_t k = 0; k < du; ++k) out.output[k] = out.weights[k] * z[k];
    return out;
}

double average_precision(const std::vector<double>& scores, const std::vector<int>& labels) {
    std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::size_t total_pos = 0;
    for (int l : labels) total_pos += l == 1;

    // precision/recall at every rank, recomputed from scratch (O(n^2))
    std::vector<double> precision(n), recall(n);
    for (std::size_t q = 0; q < n; ++q) {
        std::size_t tp = 0;
        for (std::size_t r = 0; r <= q; ++r) tp += labels[order[r]] == 1;
        precision[q] = static_cast<double>(tp) / static_cast<double>(q + 1);
        recall[q] = static_cast<double>(tp) / static_cast<double>(total_pos);
    }
    std::vector<double> interp(n);
    for (std::size_t q = 0; q < n; ++q) {
        double best = 0.0;
        for (std::size_t q2 = q; q2 < n; ++q2) best = std::max(best, precision[q2]);
        interp[q] = best;
    }
    double ap = 0.0, prev_recall = 0.0;
    for (std::size_t q = 0; q < n; ++q) {
        if (labels[order[q]] == 1) {
            ap += (recall[q] - prev_recall) * interp[q];
            prev_recall = recall[q];
        }
    }
    return ap;
}

double time_to_accident(const std::vector<double>& probs, std::size_t tau, double fps,
                        double threshold) {
    for (std::size_t t = 1; t <= probs.size(); ++t)
        if (probs[t - 1] >= threshold)
            return t > tau ? 0.0 : static_cast<double>(tau - t) / fps;
    return 0.0;
}

EvalOut evaluate(const std::vector<std::vector<double>>& probs, const std::vector<int>& labels,
                 const std::vector<std::size_t>& onsets, double fps, double theta) {
    EvalOut out;
    std::size_t n = probs.size();
    std::vector<double> scores(n);
    for (std::size_t v = 0; v < n; ++v) scores[v] = *std::max_element(probs[v].begin(), probs[v].end());
    out.ap = average_precision(scores, labels);

    std::size_t num_pos = 0;
    for (int l : labels) num_pos += l == 1;
    double sum = 0.0;
    for (std::size_t v = 0; v < n; ++v)
        if (labels[v] == 1) sum += time_to_accident(probs[v], onsets[v], fps, theta);
    out.mtta = sum / static_cast<double>(num_pos);

    std::vector<double> thresholds = scores;
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    double best_thr = 0.0;
    bool found = false;
    for (double thr : thresholds) {
        std::size_t tp = 0;
        for (std::size_t v = 0; v < n; ++v) tp += labels[v] == 1 && scores[v] >= thr;
        double recall = static_cast<double>(tp) / static_cast<double>(num_pos);
        if (recall >= 0.80) {
            if (!found || thr > best_thr) {
                best_thr = thr;
                found = true;
            }
        }
    }
    if (found) {
        double s = 0.0;
        for (std::size_t v = 0; v < n; ++v)
            if (labels[v] == 1) s += time_to_accident(probs[v], onsets[v], fps, best_thr);
        out.tta_r80 = s / static_cast<double>(num_pos);
    }
    return out;
}

}  // namespace oracle
