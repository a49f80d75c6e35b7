#include "latte/feature_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>

#include <json.hpp>

static_assert(std::endian::native == std::endian::little,
              "LFS1 I/O assumes a little-endian host");

namespace latte {

using nlohmann::json;
namespace fs = std::filesystem;

void SpatialLayout::validate(std::size_t feature_dim) const {
    if (c_e == 0 || grid_h == 0 || grid_w == 0)
        throw ValidationError("layout: extents must be positive");
    if (d() != feature_dim)
        throw ValidationError("layout: d=" + std::to_string(feature_dim) +
                              " is not factorable as c_e*h*w = " + std::to_string(c_e) + "*" +
                              std::to_string(grid_h) + "*" + std::to_string(grid_w));
}

std::optional<SpatialLayout> default_layout(std::size_t d) {
    if (d == 512) return SpatialLayout{8, 8, 8};
    if (d == 32) return SpatialLayout{2, 4, 4};
    return std::nullopt;
}

const double* FeatureSequence::frame_feature(std::size_t t) const {
    return &features[((t - 1) * (N + 1)) * d];
}

const double* FeatureSequence::object_feature(std::size_t t, std::size_t i) const {
    return &features[((t - 1) * (N + 1) + 1 + i) * d];
}

const double* FeatureSequence::box(std::size_t t, std::size_t i) const {
    return &boxes[((t - 1) * N + i) * 4];
}

bool FeatureSequence::object_valid(std::size_t t, std::size_t i) const {
    const double* b = box(t, i);
    return b[0] != 0.0 || b[1] != 0.0 || b[2] != 0.0 || b[3] != 0.0;
}

Tensor FeatureSequence::frame_feature_tensor(std::size_t t) const {
    const double* p = frame_feature(t);
    return Tensor({d}, std::vector<double>(p, p + d));
}

Tensor FeatureSequence::object_features_tensor(std::size_t t) const {
    const double* p = &features[((t - 1) * (N + 1) + 1) * d];
    return Tensor({N, d}, std::vector<double>(p, p + N * d));
}

void FeatureSequence::validate() const {
    if (T == 0 || d == 0) throw ValidationError(video_id + ": T and d must be positive");
    if (!(fps > 0.0)) throw ValidationError(video_id + ": fps must be positive");
    if (label != 0 && label != 1) throw ValidationError(video_id + ": label must be 0 or 1");
    if (label == 1 && (onset_frame < 1 || onset_frame > T))
        throw ValidationError(video_id + ": onset frame " + std::to_string(onset_frame) +
                              " out of range [1," + std::to_string(T) + "]");
    if (label == 0 && onset_frame != 0)
        throw ValidationError(video_id + ": negative video must not carry an onset frame");
    if (features.size() != T * (N + 1) * d)
        throw ValidationError(video_id + ": feature buffer length " + std::to_string(features.size()) +
                              " does not match T*(N+1)*d = " + std::to_string(T * (N + 1) * d));
    if (boxes.size() != T * N * 4)
        throw ValidationError(video_id + ": box buffer length mismatch");
    if (accident_pair) {
        auto [a, b] = *accident_pair;
        if (a >= N || b >= N || a == b)
            throw ValidationError(video_id + ": invalid accident pair indices");
    }
}

Tensor spatialize(const Tensor& object_features, const Tensor& frame_feature,
                  const SpatialLayout& layout) {
    if (frame_feature.rank() != 1)
        throw ValidationError("spatialize: frame feature must be rank 1, got " +
                              shape_str(frame_feature.shape));
    layout.validate(frame_feature.shape[0]);
    Tensor g = reshape(frame_feature, {layout.c_e, layout.grid_h, layout.grid_w});
    if (object_features.size() == 0) return g;
    if (object_features.rank() != 2 || object_features.shape[1] != frame_feature.shape[0])
        throw ValidationError("spatialize: object features " + shape_str(object_features.shape) +
                              " do not match feature dim " + std::to_string(frame_feature.shape[0]));
    std::size_t n = object_features.shape[0];
    Tensor q = reshape(object_features, {n * layout.c_e, layout.grid_h, layout.grid_w});
    return concat({g, q}, 0);
}

// --------------------------------------------------------------------------
// LFS1
// --------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'L', 'F', 'S', '1'};

void write_u32(std::ofstream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), 4);
}

std::vector<float> to_f32(const std::vector<double>& v) {
    std::vector<float> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i]);
    return out;
}

std::string iso_now() {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

json manifest_entry(const FeatureSequence& s, const std::string& file) {
    json e{{"video_id", s.video_id}, {"file", file},     {"label", s.label},
           {"fps", s.fps},           {"T", s.T},         {"N", s.N},
           {"d", s.d}};
    if (s.label == 1) e["onset_frame"] = s.onset_frame;
    if (s.accident_pair) e["accident_pair"] = {s.accident_pair->first, s.accident_pair->second};
    return e;
}

FeatureSequence read_sequence_file(const fs::path& file, const json& meta) {
    FeatureSequence s;
    s.video_id = meta.at("video_id").get<std::string>();
    s.T = meta.at("T").get<std::size_t>();
    s.N = meta.at("N").get<std::size_t>();
    s.d = meta.at("d").get<std::size_t>();
    s.fps = meta.at("fps").get<double>();
    s.label = meta.at("label").get<int>();
    s.onset_frame = meta.contains("onset_frame") ? meta.at("onset_frame").get<std::size_t>() : 0;
    if (meta.contains("accident_pair")) {
        auto p = meta.at("accident_pair");
        s.accident_pair = {p.at(0).get<std::size_t>(), p.at(1).get<std::size_t>()};
    }

    std::ifstream is(file, std::ios::binary);
    if (!is) throw ValidationError("cannot open feature file " + file.string());
    std::size_t actual = fs::file_size(file);
    std::size_t feat_count = s.T * (s.N + 1) * s.d;
    std::size_t box_count = s.T * s.N * 4;
    std::size_t expected = 4 + 12 + 4 * (feat_count + box_count);
    if (actual != expected)
        throw ValidationError(file.string() + ": truncated or oversized file: expected " +
                              std::to_string(expected) + " bytes, found " + std::to_string(actual));

    char magic[4];
    is.read(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw ValidationError(file.string() + ": bad magic bytes (not an LFS1 file)");
    std::uint32_t hdr[3];
    is.read(reinterpret_cast<char*>(hdr), 12);
    if (hdr[0] != s.T || hdr[1] != s.N || hdr[2] != s.d)
        throw ValidationError(file.string() + ": shape header (" + std::to_string(hdr[0]) + "," +
                              std::to_string(hdr[1]) + "," + std::to_string(hdr[2]) +
                              ") disagrees with manifest (" + std::to_string(s.T) + "," +
                              std::to_string(s.N) + "," + std::to_string(s.d) + ")");

    std::vector<float> feats(feat_count), boxes(box_count);
    is.read(reinterpret_cast<char*>(feats.data()), static_cast<std::streamsize>(4 * feat_count));
    is.read(reinterpret_cast<char*>(boxes.data()), static_cast<std::streamsize>(4 * box_count));
    if (!is) throw ValidationError(file.string() + ": short read");
    s.features.assign(feats.begin(), feats.end());
    s.boxes.assign(boxes.begin(), boxes.end());
    s.validate();
    return s;
}

json load_manifest(const fs::path& dir) {
    fs::path mf = dir / "manifest.json";
    std::ifstream is(mf);
    if (!is) throw ValidationError("cannot open manifest " + mf.string());
    json m;
    try {
        is >> m;
    } catch (const json::exception& e) {
        throw ValidationError(mf.string() + ": invalid JSON: " + e.what());
    }
    if (!m.contains("format_version") || m.at("format_version").get<std::string>() != "LFS1")
        throw ValidationError(mf.string() + ": unsupported or missing format_version");
    return m;
}

}  // namespace

void store_sequence(const FeatureSequence& seq, const fs::path& file) {
    seq.validate();
    std::ofstream os(file, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot write feature file " + file.string());
    os.write(kMagic, 4);
    write_u32(os, static_cast<std::uint32_t>(seq.T));
    write_u32(os, static_cast<std::uint32_t>(seq.N));
    write_u32(os, static_cast<std::uint32_t>(seq.d));
    auto feats = to_f32(seq.features);
    auto boxes = to_f32(seq.boxes);
    os.write(reinterpret_cast<const char*>(feats.data()),
             static_cast<std::streamsize>(4 * feats.size()));
    os.write(reinterpret_cast<const char*>(boxes.data()),
             static_cast<std::streamsize>(4 * boxes.size()));
    if (!os) throw Error("write failed for " + file.string());
}

void save_dataset(const std::vector<FeatureSequence>& seqs, const fs::path& dir) {
    fs::create_directories(dir);
    json manifest{{"format_version", "LFS1"}, {"created_at", iso_now()}, {"videos", json::array()}};
    for (const auto& s : seqs) {
        std::string file = s.video_id + ".lfs";
        store_sequence(s, dir / file);
        manifest["videos"].push_back(manifest_entry(s, file));
    }
    std::ofstream os(dir / "manifest.json");
    if (!os) throw Error("cannot write manifest in " + dir.string());
    os << manifest.dump(2) << "\n";
}

std::vector<FeatureSequence> load_dataset(const fs::path& dir) {
    json m = load_manifest(dir);
    std::vector<FeatureSequence> out;
    for (const auto& e : m.at("videos")) out.push_back(read_sequence_file(dir / e.at("file").get<std::string>(), e));
    return out;
}

FeatureSequence load_sequence(const fs::path& dataset_dir, const std::string& video_id) {
    json m = load_manifest(dataset_dir);
    for (const auto& e : m.at("videos"))
        if (e.at("video_id").get<std::string>() == video_id)
            return read_sequence_file(dataset_dir / e.at("file").get<std::string>(), e);
    throw ValidationError("video '" + video_id + "' not found in " + dataset_dir.string());
}

// --------------------------------------------------------------------------
// synthetic generator
// --------------------------------------------------------------------------

namespace {

struct BoxTrack {
    double w, h;
    std::vector<std::array<double, 2>> centers;  // per frame
};

BoxTrack make_box_track(RandomStream& rs, std::size_t T) {
    BoxTrack b;
    b.w = rs.uniform(0.05, 0.2);
    b.h = rs.uniform(0.05, 0.2);
    double cx = rs.uniform(0.2, 0.8), cy = rs.uniform(0.2, 0.8);
    b.centers.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
        b.centers[t] = {cx, cy};
        cx = std::clamp(cx + rs.normal(0.0, 0.01), 0.05, 0.95);
        cy = std::clamp(cy + rs.normal(0.0, 0.01), 0.05, 0.95);
    }
    return b;
}

// One precursor direction per dataset: the feature space stands in for a
// fixed backbone embedding, where accident precursors share semantics
// across videos. Drawn from the dataset-level stream.
std::vector<double> dataset_precursor_direction(const SynthConfig& cfg) {
    RandomStream rs(derive_seed(cfg.seed, "synth.dir"));
    std::vector<double> dir(cfg.d);
    double norm = 0.0;
    for (auto& v : dir) {
        v = rs.normal();
        norm += v * v;
    }
    norm = std::sqrt(norm);
    for (auto& v : dir) v /= norm;
    return dir;
}

FeatureSequence gen_video(std::uint64_t stream_seed, const SynthConfig& cfg, bool positive,
                          const std::vector<double>& precursor_dir, std::string id) {
    RandomStream rs(stream_seed);
    const std::size_t T = cfg.T, N = cfg.N, d = cfg.d;

    FeatureSequence s;
    s.video_id = std::move(id);
    s.T = T;
    s.N = N;
    s.d = d;
    s.fps = cfg.fps;
    s.label = positive ? 1 : 0;
    s.features.assign(T * (N + 1) * d, 0.0);
    s.boxes.assign(T * N * 4, 0.0);

    // Base random walks for frame feature (entity 0) and all objects.
    for (std::size_t e = 0; e <= N; ++e) {
        std::vector<double> x(d);
        for (auto& v : x) v = rs.normal(0.0, 0.1);
        for (std::size_t t = 0; t < T; ++t) {
            double* dst = &s.features[(t * (N + 1) + e) * d];
            std::copy(x.begin(), x.end(), dst);
            for (auto& v : x) v += rs.normal(0.0, 0.05);
        }
    }

    std::vector<BoxTrack> tracks;
    tracks.reserve(N);
    for (std::size_t i = 0; i < N; ++i) tracks.push_back(make_box_track(rs, T));

    double window = 0.3 * static_cast<double>(T);

    if (positive) {
        std::size_t tau_lo = static_cast<std::size_t>(std::ceil(0.6 * static_cast<double>(T)));
        std::size_t tau_hi = static_cast<std::size_t>(std::floor(0.95 * static_cast<double>(T)));
        tau_lo = std::max<std::size_t>(tau_lo, 1);
        if (T < 4 || tau_lo > tau_hi)
            throw ValidationError("synthesize_dataset: onset window [0.6T,0.95T] empty for T=" +
                                  std::to_string(T));
        if (N < 2)
            throw ValidationError("synthesize_dataset: positive videos need N >= 2 for an accident pair");
        std::size_t tau = rs.uniform_int(tau_lo, tau_hi);
        s.onset_frame = tau;
        std::size_t a = rs.uniform_int(0, N - 1);
        std::size_t b = rs.uniform_int(0, N - 2);
        if (b >= a) ++b;
        s.accident_pair = {std::min(a, b), std::max(a, b)};

        const std::vector<double>& dir = precursor_dir;
        double magnitude = (1.0 - cfg.difficulty) * 2.0 + 0.2;
        double start = static_cast<double>(tau) - window;
        for (std::size_t t = 1; t <= T; ++t) {
            double progress =
                std::clamp((static_cast<double>(t) - start) / window, 0.0, 1.0);
            if (progress <= 0.0) continue;
            double m = magnitude * progress;
            for (std::size_t which : {s.accident_pair->first, s.accident_pair->second}) {
                double* dst = &s.features[((t - 1) * (N + 1) + 1 + which) * d];
                for (std::size_t k = 0; k < d; ++k) dst[k] += m * dir[k];
            }
            // Box convergence of the pair toward their midpoint.
            auto& ca = tracks[s.accident_pair->first].centers[t - 1];
            auto& cb = tracks[s.accident_pair->second].centers[t - 1];
            double mx = 0.5 * (ca[0] + cb[0]), my = 0.5 * (ca[1] + cb[1]);
            double f = 0.9 * progress;
            ca = {ca[0] + f * (mx - ca[0]), ca[1] + f * (my - ca[1])};
            cb = {cb[0] + f * (mx - cb[0]), cb[1] + f * (my - cb[1])};
        }
    } else {
        // Distractor bump that never completes (emulates a near-miss).
        std::size_t which = rs.uniform_int(0, N - 1);
        double target = 0.3 * cfg.difficulty;
        double peak_frac = rs.uniform(0.2, 0.45);
        double start = rs.uniform(0.3 * static_cast<double>(T), 0.6 * static_cast<double>(T));
        std::vector<double> dir(d);
        double norm = 0.0;
        for (auto& v : dir) {
            v = rs.normal();
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (auto& v : dir) v /= norm;

        double rise = peak_frac * window;  // frames to the peak, same slope as a real ramp
        for (std::size_t t = 1; t <= T; ++t) {
            double x = static_cast<double>(t) - start;
            double m = 0.0;
            if (x > 0.0 && x < 2.0 * rise) {
                double frac = x < rise ? x / rise : 2.0 - x / rise;
                m = target * peak_frac * frac;
            }
            if (m == 0.0) continue;
            double* dst = &s.features[((t - 1) * (N + 1) + 1 + which) * d];
            for (std::size_t k = 0; k < d; ++k) dst[k] += m * dir[k];
        }
    }

    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t t = 0; t < T; ++t) {
            const auto& c = tracks[i].centers[t];
            double* b = &s.boxes[(t * N + i) * 4];
            b[0] = std::clamp(c[0] - tracks[i].w / 2, 0.0, 1.0);
            b[1] = std::clamp(c[1] - tracks[i].h / 2, 0.0, 1.0);
            b[2] = std::clamp(c[0] + tracks[i].w / 2, 0.0, 1.0);
            b[3] = std::clamp(c[1] + tracks[i].h / 2, 0.0, 1.0);
        }

    // Disk format is f32; round now so round-trips are bitwise.
    for (auto& v : s.features) v = static_cast<float>(v);
    for (auto& v : s.boxes) v = static_cast<float>(v);
    s.validate();
    return s;
}

std::string padded(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04zu", i);
    return buf;
}

}  // namespace

std::vector<FeatureSequence> synthesize_dataset(const SynthConfig& cfg) {
    if (cfg.T < 1 || cfg.N < 1 || cfg.d < 1)
        throw ValidationError("synthesize_dataset: T, N, d must be >= 1");
    if (cfg.difficulty < 0.0 || cfg.difficulty > 1.0)
        throw ValidationError("synthesize_dataset: difficulty must be in [0,1]");
    if (cfg.num_positive > 0 && cfg.T < 4)
        throw ValidationError("synthesize_dataset: onset window [0.6T,0.95T] empty for T=" +
                              std::to_string(cfg.T));
    std::vector<FeatureSequence> out;
    out.reserve(cfg.num_positive + cfg.num_negative);
    std::vector<double> dir = dataset_precursor_direction(cfg);
    for (std::size_t i = 0; i < cfg.num_positive; ++i)
        out.push_back(
            gen_video(derive_seed(cfg.seed, "synth.pos", i), cfg, true, dir, "pos" + padded(i)));
    for (std::size_t i = 0; i < cfg.num_negative; ++i)
        out.push_back(
            gen_video(derive_seed(cfg.seed, "synth.neg", i), cfg, false, dir, "neg" + padded(i)));
    return out;
}

}  // namespace latte
