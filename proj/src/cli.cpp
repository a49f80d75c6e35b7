#include "latte/cli.hpp"

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "latte/config.hpp"
#include "latte/eval.hpp"
#include "latte/profile.hpp"

namespace latte {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path.string());
    os << content;
    if (!os) throw Error("write failed for " + path.string());
}

void write_resolved(const RunConfig& rc, const fs::path& out) {
    write_text(out / "resolved_config.json", rc.resolved.dump(2) + "\n");
}

json profile_to_json(const CostProfile& p) {
    json layers = json::array();
    for (const auto& l : p.layers)
        layers.push_back(json{{"name", l.name},
                              {"module", l.module},
                              {"flops", l.flops},
                              {"params", l.params},
                              {"spatial", l.spatial}});
    return json{{"per_layer", layers},
                {"totals",
                 {{"frame_flops", p.frame_flops},
                  {"video_flops", p.video_flops},
                  {"params", p.params}}},
                {"params_by_module", p.params_by_module},
                {"horizon", p.horizon}};
}

json series_to_json(const PredictionSeries& s) {
    json j{{"video_id", s.video_id},
           {"threshold", s.threshold},
           {"p_vid", s.p_vid},
           {"probs", s.probs}};
    if (s.crossing_frame)
        j["crossing_frame"] = s.crossing_frame;
    else
        j["crossing_frame"] = nullptr;
    return j;
}

json alerts_to_json(const std::vector<AlertRecord>& alerts) {
    json arr = json::array();
    for (const auto& a : alerts) {
        json ents = json::array();
        for (const auto& [i, s] : a.entities) ents.push_back(json::array({i, s}));
        arr.push_back(json{{"video_id", a.video_id},
                           {"frame", a.frame},
                           {"seconds", a.seconds},
                           {"probability", a.probability},
                           {"entities", ents},
                           {"message", a.message}});
    }
    return arr;
}

std::pair<std::size_t, std::size_t> dataset_dims(const std::vector<FeatureSequence>& data) {
    if (data.empty()) throw ValidationError("dataset is empty");
    for (const auto& s : data)
        if (s.N != data[0].N || s.d != data[0].d)
            throw ValidationError("dataset mixes feature dimensions: " + s.video_id + " has (N=" +
                                  std::to_string(s.N) + ",d=" + std::to_string(s.d) + ")");
    return {data[0].N, data[0].d};
}

double dataset_fps(const std::vector<FeatureSequence>& data) {
    for (const auto& s : data)
        if (s.fps != data[0].fps)
            throw ValidationError("dataset mixes frame rates; evaluation needs a single fps");
    return data[0].fps;
}

int cmd_synth(const RunConfig& rc, const fs::path& out) {
    auto data = synthesize_dataset(rc.synth);
    save_dataset(data, out);
    write_resolved(rc, out);
    std::cerr << "synthesized " << data.size() << " videos into " << out.string() << "\n";
    return 0;
}

int cmd_train(RunConfig rc, const fs::path& data_dir, const fs::path& out) {
    auto data = load_dataset(data_dir);
    auto [N, d] = dataset_dims(data);
    rc.bind_data_dims(N, d);

    LatteModel model(rc.model);
    model.init(rc.seed);

    auto result = train(model, data, rc.train, rc.loss, [&](std::size_t epoch) {
        fs::path dir = epoch == rc.train.epochs
                           ? out / "checkpoint"
                           : out / "checkpoints" / ("epoch_" + std::to_string(epoch));
        save_checkpoint(model, dir);
    });

    std::string log;
    for (const auto& e : result.log) {
        json rec{{"epoch", e.epoch},         {"step", e.step},
                 {"loss_frame", e.loss_frame}, {"loss_video", e.loss_video},
                 {"loss_total", e.loss_total}, {"wall_ms", e.wall_ms}};
        log += rec.dump() + "\n";
    }
    write_text(out / "train_log.jsonl", log);
    write_resolved(rc, out);
    std::cerr << "trained " << rc.train.epochs << " epochs; final loss "
              << (result.log.empty() ? 0.0 : result.log.back().loss_total) << "\n";
    return 0;
}

int cmd_eval(RunConfig rc, const fs::path& data_dir, const fs::path& ckpt, const fs::path& out) {
    LatteModel model = load_checkpoint(ckpt);
    auto data = load_dataset(data_dir);
    auto [N, d] = dataset_dims(data);
    if (N != model.config().N || d != model.config().d)
        throw ValidationError("checkpoint expects (N=" + std::to_string(model.config().N) + ",d=" +
                              std::to_string(model.config().d) + "), dataset has (N=" +
                              std::to_string(N) + ",d=" + std::to_string(d) + ")");

    std::vector<PredictionSeries> preds;
    std::vector<int> labels;
    std::vector<std::size_t> onsets;
    for (std::size_t i = 0; i < data.size(); ++i) {
        preds.push_back(model.predict_video(data[i], derive_seed(rc.seed, "eval", i)));
        labels.push_back(data[i].label);
        onsets.push_back(data[i].onset_frame);
    }
    EvalResult res = evaluate(preds, labels, onsets, dataset_fps(data), model.config().threshold);
    CostProfile prof = profile_model(model.config(), data[0].T);

    json curve = json::array();
    std::string csv = "threshold,precision,recall,mean_tta\n";
    for (const auto& pt : res.curve) {
        curve.push_back(json{{"threshold", pt.threshold},
                             {"precision", pt.precision},
                             {"recall", pt.recall},
                             {"mean_tta", pt.mean_tta}});
        csv += std::to_string(pt.threshold) + "," + std::to_string(pt.precision) + "," +
               std::to_string(pt.recall) + "," + std::to_string(pt.mean_tta) + "\n";
    }
    json report{{"ap", res.ap},
                {"mtta_s", res.mtta_seconds},
                {"tta_r80_s", res.tta_r80_seconds ? json(*res.tta_r80_seconds) : json(nullptr)},
                {"curve", curve},
                {"cost", profile_to_json(prof)}};
    write_text(out / "report.json", report.dump(2) + "\n");
    write_text(out / "pr_curve.csv", csv);
    rc.resolved["model"] = model_config_to_json(model.config());
    write_resolved(rc, out);
    std::cerr << "ap=" << res.ap << " mtta_s=" << res.mtta_seconds << "\n";
    return 0;
}

int cmd_predict(RunConfig rc, const fs::path& data_dir, const fs::path& ckpt,
                const std::string& video_id, const fs::path& out) {
    LatteModel model = load_checkpoint(ckpt);
    FeatureSequence seq = load_sequence(data_dir, video_id);
    std::uint64_t seed = derive_seed(rc.seed, "eval", 0);
    PredictionSeries series = model.predict_video(seq, seed);
    auto alerts = model.generate_alerts(series, seq, seed);

    write_text(out / "prediction.json", series_to_json(series).dump(2) + "\n");
    write_text(out / "alerts.json", alerts_to_json(alerts).dump(2) + "\n");
    std::string csv = "frame,probability\n";
    for (std::size_t t = 1; t <= series.probs.size(); ++t)
        csv += std::to_string(t) + "," + std::to_string(series.probs[t - 1]) + "\n";
    write_text(out / "probs.csv", csv);
    rc.resolved["model"] = model_config_to_json(model.config());
    write_resolved(rc, out);
    std::cerr << "p_vid=" << series.p_vid << " alerts=" << alerts.size() << "\n";
    return 0;
}

int cmd_profile(const RunConfig& rc) {
    ModelConfig mc = rc.model;
    if (mc.N == 0 || mc.d == 0 || mc.layout.c_e == 0) {
        mc.N = rc.synth.N;
        mc.d = rc.synth.d;
        if (mc.layout.c_e == 0) {
            auto lay = default_layout(mc.d);
            if (!lay)
                throw ValidationError("profile: no default layout for d=" + std::to_string(mc.d) +
                                      "; set model.layout explicitly");
            mc.layout = *lay;
        }
    }
    CostProfile prof = profile_model(mc, rc.synth.T);
    std::cout << profile_to_json(prof).dump(2) << "\n";
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"LATTE accident-anticipation engine"};
    app.require_subcommand(1);

    std::string config_file, data_dir, ckpt, video_id, out_dir;
    std::vector<std::string> overrides;
    std::size_t threads = 0;

    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        auto* opt = cmd->add_option("--config", config_file, "JSON config file");
        if (needs_config) opt->check(CLI::ExistingFile);
        cmd->add_option("--set", overrides,
                        "dotted-path override, e.g. --set model.G=8 (repeatable)");
    };

    auto* synth = app.add_subcommand("synth", "synthesize an LFS1 dataset");
    add_common(synth, true);
    synth->add_option("--out", out_dir, "output directory")->required();

    auto* tr = app.add_subcommand("train", "train a model on an LFS1 dataset");
    add_common(tr, true);
    tr->add_option("--data", data_dir, "dataset directory")->required()->check(CLI::ExistingDirectory);
    tr->add_option("--out", out_dir, "output directory")->required();
    tr->add_option("--threads", threads, "worker threads for batch parallelism");

    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    add_common(ev, false);
    ev->add_option("--data", data_dir, "dataset directory")->required()->check(CLI::ExistingDirectory);
    ev->add_option("--ckpt", ckpt, "checkpoint directory")->required();
    ev->add_option("--out", out_dir, "output directory")->required();

    auto* pr = app.add_subcommand("predict", "per-frame probabilities and alerts for one video");
    add_common(pr, false);
    pr->add_option("--data", data_dir, "dataset directory")->required()->check(CLI::ExistingDirectory);
    pr->add_option("--ckpt", ckpt, "checkpoint directory")->required();
    pr->add_option("--video", video_id, "video id")->required();
    pr->add_option("--out", out_dir, "output directory")->required();

    auto* pf = app.add_subcommand("profile", "print the analytic cost profile as JSON");
    add_common(pf, true);

    std::vector<const char*> argv;
    argv.push_back("latte");
    for (const auto& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help() << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        RunConfig rc = resolve_config(config_file.empty() ? fs::path{} : fs::path(config_file),
                                      overrides);
        if (threads > 0) {
            rc.train.threads = threads;
            rc.resolved["train"]["threads"] = threads;
        }
        if (synth->parsed()) return cmd_synth(rc, out_dir);
        if (tr->parsed()) return cmd_train(rc, data_dir, out_dir);
        if (ev->parsed()) return cmd_eval(rc, data_dir, ckpt, out_dir);
        if (pr->parsed()) return cmd_predict(rc, data_dir, ckpt, video_id, out_dir);
        if (pf->parsed()) return cmd_profile(rc);
        std::cerr << "error: no subcommand\n";
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace latte
