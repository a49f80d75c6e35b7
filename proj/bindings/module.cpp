#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "latte/cli.hpp"
#include "latte/config.hpp"
#include "latte/eval.hpp"
#include "latte/profile.hpp"
#include "latte/train.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

using DArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

latte::Tensor from_numpy(const DArray& a) {
    latte::Shape shape(static_cast<std::size_t>(a.ndim()));
    for (py::ssize_t i = 0; i < a.ndim(); ++i)
        shape[static_cast<std::size_t>(i)] = static_cast<std::size_t>(a.shape(i));
    std::vector<double> data(a.data(), a.data() + a.size());
    return latte::Tensor(std::move(shape), std::move(data));
}

py::array_t<double> to_numpy(const latte::Tensor& t) {
    std::vector<py::ssize_t> shape(t.shape.begin(), t.shape.end());
    py::array_t<double> out(shape);
    std::copy(t.data.begin(), t.data.end(), out.mutable_data());
    return out;
}

json profile_json(const latte::CostProfile& p) {
    json layers = json::array();
    for (const auto& l : p.layers)
        layers.push_back(json{{"name", l.name},
                              {"module", l.module},
                              {"flops", l.flops},
                              {"params", l.params}});
    return json{{"per_layer", layers},
                {"totals",
                 {{"frame_flops", p.frame_flops},
                  {"video_flops", p.video_flops},
                  {"params", p.params}}},
                {"params_by_module", p.params_by_module}};
}

latte::ModelConfig bound_model_config(latte::RunConfig& rc, std::size_t N, std::size_t d) {
    rc.bind_data_dims(N, d);
    return rc.model;
}

std::string synthesize(const std::string& config_json, const std::string& out_dir) {
    latte::RunConfig rc = latte::resolve_config_json(json::parse(config_json));
    auto data = latte::synthesize_dataset(rc.synth);
    latte::save_dataset(data, out_dir);
    return json{{"videos", data.size()}}.dump();
}

std::string train_run(const std::string& config_json, const std::string& data_dir,
                      const std::string& out_dir) {
    latte::RunConfig rc = latte::resolve_config_json(json::parse(config_json));
    auto data = latte::load_dataset(data_dir);
    latte::LatteModel model(bound_model_config(rc, data.at(0).N, data.at(0).d));
    model.init(rc.seed);
    auto result = latte::train(model, data, rc.train, rc.loss);
    latte::save_checkpoint(model, std::filesystem::path(out_dir) / "checkpoint");
    return json{{"steps", result.log.size()},
                {"final_loss", result.log.empty() ? 0.0 : result.log.back().loss_total},
                {"params", model.params().total_size()}}
        .dump();
}

std::string evaluate_run(const std::string& data_dir, const std::string& ckpt,
                         std::uint64_t seed) {
    latte::LatteModel model = latte::load_checkpoint(ckpt);
    auto data = latte::load_dataset(data_dir);
    std::vector<latte::PredictionSeries> preds;
    std::vector<int> labels;
    std::vector<std::size_t> onsets;
    for (std::size_t i = 0; i < data.size(); ++i) {
        preds.push_back(model.predict_video(data[i], latte::derive_seed(seed, "eval", i)));
        labels.push_back(data[i].label);
        onsets.push_back(data[i].onset_frame);
    }
    auto res = latte::evaluate(preds, labels, onsets, data.at(0).fps, model.config().threshold);
    return json{{"ap", res.ap},
                {"mtta_s", res.mtta_seconds},
                {"tta_r80_s", res.tta_r80_seconds ? json(*res.tta_r80_seconds) : json(nullptr)}}
        .dump();
}

std::string predict_run(const std::string& data_dir, const std::string& ckpt,
                        const std::string& video_id, std::uint64_t seed) {
    latte::LatteModel model = latte::load_checkpoint(ckpt);
    auto seq = latte::load_sequence(data_dir, video_id);
    auto series = model.predict_video(seq, seed);
    auto alerts = model.generate_alerts(series, seq, seed);
    json alerts_j = json::array();
    for (const auto& a : alerts)
        alerts_j.push_back(json{{"frame", a.frame},
                                {"seconds", a.seconds},
                                {"probability", a.probability},
                                {"message", a.message}});
    return json{{"video_id", series.video_id},
                {"probs", series.probs},
                {"p_vid", series.p_vid},
                {"crossing_frame",
                 series.crossing_frame ? json(series.crossing_frame) : json(nullptr)},
                {"alerts", alerts_j}}
        .dump();
}

std::string profile_run(const std::string& config_json) {
    latte::RunConfig rc = latte::resolve_config_json(json::parse(config_json));
    latte::ModelConfig mc = bound_model_config(rc, rc.synth.N, rc.synth.d);
    return profile_json(latte::profile_model(mc, rc.synth.T)).dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "LATTE accident-anticipation engine (C++ core)";

    // tensor kernels on numpy arrays
    m.def("softmax", [](const DArray& a, std::size_t axis) {
        return to_numpy(latte::softmax(from_numpy(a), axis));
    });
    m.def("sigmoid", [](const DArray& a) { return to_numpy(latte::sigmoid(from_numpy(a))); });
    m.def("swish", [](const DArray& a) { return to_numpy(latte::swish(from_numpy(a))); });
    m.def("matmul", [](const DArray& a, const DArray& b) {
        return to_numpy(latte::matmul(from_numpy(a), from_numpy(b)));
    });
    m.def("depthwise_conv2d", [](const DArray& x, const DArray& k) {
        return to_numpy(latte::depthwise_conv2d(from_numpy(x), from_numpy(k)));
    });
    m.def("global_pool_2d",
          [](const DArray& x) { return to_numpy(latte::global_pool_2d(from_numpy(x))); });
    m.def("spatialize", [](const DArray& objects, const DArray& frame, std::size_t c_e,
                           std::size_t grid_h, std::size_t grid_w) {
        return to_numpy(latte::spatialize(from_numpy(objects), from_numpy(frame),
                                          latte::SpatialLayout{c_e, grid_h, grid_w}));
    });
    m.def("emsa_param_count", &latte::emsa_param_count);
    m.def("maa_param_count", &latte::maa_param_count);
    m.def("aaa_param_count", &latte::aaa_param_count);

    // runs (JSON-string interface; the python package wraps these in dicts)
    m.def("default_config", []() { return latte::default_config_json().dump(); });
    m.def("synthesize", &synthesize, py::arg("config_json"), py::arg("out_dir"));
    m.def("train", &train_run, py::arg("config_json"), py::arg("data_dir"), py::arg("out_dir"));
    m.def("evaluate", &evaluate_run, py::arg("data_dir"), py::arg("ckpt"), py::arg("seed") = 42);
    m.def("predict", &predict_run, py::arg("data_dir"), py::arg("ckpt"), py::arg("video_id"),
          py::arg("seed") = 42);
    m.def("profile", &profile_run, py::arg("config_json"));
    m.def("run_cli", &latte::run_cli, py::arg("args"));

    py::register_exception<latte::ValidationError>(m, "ValidationError", PyExc_ValueError);
}
