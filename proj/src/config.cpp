#include "latte/config.hpp"

#include <bit>
#include <cstdlib>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "LCK1 I/O assumes a little-endian host");

namespace latte {

using nlohmann::json;
namespace fs = std::filesystem;

json default_config_json() {
    return json{
        {"version", 1},
        {"seed", 42},
        {"synth",
         {{"num_positive", 100},
          {"num_negative", 100},
          {"T", 50},
          {"N", 5},
          {"d", 32},
          {"fps", 10.0},
          {"difficulty", 0.2}}},
        {"model",
         {{"layout", {{"c_e", 0}, {"grid_h", 0}, {"grid_w", 0}}},  // 0 = derive from d
          {"G", 4},
          {"S", 0},
          {"r_maa", 3},
          {"r_aaa", 3},
          {"d_u", 32},
          {"head_hidden", 0},
          {"dropout_p", 0.1},
          {"mc_samples", 1},
          {"emsa_on", true},
          {"maa_on", true},
          {"aaa_on", true},
          {"threshold", 0.5}}},
        {"loss", {{"beta", 0.1}, {"lambda", 1.0}, {"convention", "as_printed"}}},
        {"train",
         {{"epochs", 15},
          {"lr", 1e-3},
          {"batch_size", 10},
          {"optimizer",
           {{"kind", "adam"}, {"beta1", 0.9}, {"beta2", 0.999}, {"eps", 1e-8}}},
          {"checkpoint_every", 0},
          {"threads", 1}}},
    };
}

namespace {

void deep_merge(json& base, const json& overlay) {
    if (!overlay.is_object() || !base.is_object()) {
        base = overlay;
        return;
    }
    for (auto it = overlay.begin(); it != overlay.end(); ++it) {
        if (base.contains(it.key()) && base[it.key()].is_object() && it->is_object())
            deep_merge(base[it.key()], *it);
        else
            base[it.key()] = *it;
    }
}

void apply_override(json& base, const std::string& expr) {
    auto eq = expr.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ValidationError("override '" + expr + "' is not of the form path.key=value");
    std::string path = expr.substr(0, eq), value = expr.substr(eq + 1);
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::exception&) {
        parsed = value;  // bare word -> string
    }
    json* node = &base;
    std::size_t start = 0;
    while (true) {
        auto dot = path.find('.', start);
        std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
        if (key.empty()) throw ValidationError("override '" + expr + "' has an empty path segment");
        if (dot == std::string::npos) {
            (*node)[key] = parsed;
            break;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

template <typename T>
T get_field(const json& j, const std::string& section, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ValidationError("config: bad or missing key " + section + "." + key + ": " + e.what());
    }
}

}  // namespace

void RunConfig::bind_data_dims(std::size_t N, std::size_t d) {
    model.N = N;
    model.d = d;
    if (model.layout.c_e == 0) {
        auto lay = default_layout(d);
        if (!lay)
            throw ValidationError("config: no default layout for d=" + std::to_string(d) +
                                  "; set model.layout explicitly");
        model.layout = *lay;
    }
    model.validate();
    resolved["model"]["N"] = N;
    resolved["model"]["d"] = d;
    resolved["model"]["layout"] =
        json{{"c_e", model.layout.c_e}, {"grid_h", model.layout.grid_h}, {"grid_w", model.layout.grid_w}};
}

RunConfig config_from_json(json merged) {
    RunConfig rc;
    rc.resolved = merged;
    rc.seed = get_field<std::uint64_t>(merged, "", "seed");

    const json& sy = merged.at("synth");
    rc.synth.num_positive = get_field<std::size_t>(sy, "synth", "num_positive");
    rc.synth.num_negative = get_field<std::size_t>(sy, "synth", "num_negative");
    rc.synth.T = get_field<std::size_t>(sy, "synth", "T");
    rc.synth.N = get_field<std::size_t>(sy, "synth", "N");
    rc.synth.d = get_field<std::size_t>(sy, "synth", "d");
    rc.synth.fps = get_field<double>(sy, "synth", "fps");
    rc.synth.difficulty = get_field<double>(sy, "synth", "difficulty");
    rc.synth.seed = rc.seed;

    const json& mo = merged.at("model");
    rc.model.layout.c_e = get_field<std::size_t>(mo.at("layout"), "model.layout", "c_e");
    rc.model.layout.grid_h = get_field<std::size_t>(mo.at("layout"), "model.layout", "grid_h");
    rc.model.layout.grid_w = get_field<std::size_t>(mo.at("layout"), "model.layout", "grid_w");
    rc.model.G = get_field<std::size_t>(mo, "model", "G");
    rc.model.S = get_field<std::size_t>(mo, "model", "S");
    rc.model.r_maa = get_field<std::size_t>(mo, "model", "r_maa");
    rc.model.r_aaa = get_field<std::size_t>(mo, "model", "r_aaa");
    rc.model.d_u = get_field<std::size_t>(mo, "model", "d_u");
    rc.model.head_hidden = get_field<std::size_t>(mo, "model", "head_hidden");
    rc.model.dropout_p = get_field<double>(mo, "model", "dropout_p");
    rc.model.mc_samples = get_field<std::size_t>(mo, "model", "mc_samples");
    rc.model.emsa_on = get_field<bool>(mo, "model", "emsa_on");
    rc.model.maa_on = get_field<bool>(mo, "model", "maa_on");
    rc.model.aaa_on = get_field<bool>(mo, "model", "aaa_on");
    rc.model.threshold = get_field<double>(mo, "model", "threshold");
    // 0 marks "not yet bound": train binds from the dataset, profile from synth
    rc.model.N = mo.contains("N") ? mo.at("N").get<std::size_t>() : 0;
    rc.model.d = mo.contains("d") ? mo.at("d").get<std::size_t>() : 0;

    const json& lo = merged.at("loss");
    rc.loss.beta = get_field<double>(lo, "loss", "beta");
    rc.loss.lambda = get_field<double>(lo, "loss", "lambda");
    std::string conv = get_field<std::string>(lo, "loss", "convention");
    if (conv == "as_printed")
        rc.loss.convention = OmegaConvention::as_printed;
    else if (conv == "decay")
        rc.loss.convention = OmegaConvention::decay;
    else
        throw ValidationError("config: loss.convention must be 'as_printed' or 'decay', got '" +
                              conv + "'");
    if (rc.loss.lambda < 0.0) throw ValidationError("config: loss.lambda must be >= 0");

    const json& tr = merged.at("train");
    rc.train.epochs = get_field<std::size_t>(tr, "train", "epochs");
    rc.train.lr = get_field<double>(tr, "train", "lr");
    rc.train.batch_size = get_field<std::size_t>(tr, "train", "batch_size");
    rc.train.checkpoint_every = get_field<std::size_t>(tr, "train", "checkpoint_every");
    rc.train.threads = get_field<std::size_t>(tr, "train", "threads");
    rc.train.seed = rc.seed;
    const json& op = tr.at("optimizer");
    std::string kind = get_field<std::string>(op, "train.optimizer", "kind");
    if (kind == "adam")
        rc.train.optimizer.kind = OptimizerConfig::Kind::adam;
    else if (kind == "sgd")
        rc.train.optimizer.kind = OptimizerConfig::Kind::sgd;
    else
        throw ValidationError("config: train.optimizer.kind must be 'adam' or 'sgd', got '" + kind +
                              "'");
    rc.train.optimizer.beta1 = get_field<double>(op, "train.optimizer", "beta1");
    rc.train.optimizer.beta2 = get_field<double>(op, "train.optimizer", "beta2");
    rc.train.optimizer.eps = get_field<double>(op, "train.optimizer", "eps");
    rc.train.validate();
    return rc;
}

RunConfig resolve_config_json(const json& user) {
    json merged = default_config_json();
    deep_merge(merged, user);
    return config_from_json(merged);
}

RunConfig resolve_config(const fs::path& file, const std::vector<std::string>& overrides) {
    json merged = default_config_json();

    // Seed precedence: --set seed > file seed > LATTE_SEED > default.
    if (const char* env = std::getenv("LATTE_SEED")) {
        try {
            merged["seed"] = std::stoull(env);
        } catch (const std::exception&) {
            throw ValidationError("LATTE_SEED is not an integer: '" + std::string(env) + "'");
        }
    }
    if (!file.empty()) {
        std::ifstream is(file);
        if (!is) throw ValidationError("cannot open config file " + file.string());
        json user;
        try {
            is >> user;
        } catch (const json::exception& e) {
            throw ValidationError(file.string() + ": invalid JSON: " + e.what());
        }
        deep_merge(merged, user);
    }
    for (const auto& o : overrides) apply_override(merged, o);
    return config_from_json(merged);
}

json model_config_to_json(const ModelConfig& m) {
    return json{
        {"N", m.N},
        {"d", m.d},
        {"layout", {{"c_e", m.layout.c_e}, {"grid_h", m.layout.grid_h}, {"grid_w", m.layout.grid_w}}},
        {"G", m.G},
        {"S", m.S},
        {"r_maa", m.r_maa},
        {"r_aaa", m.r_aaa},
        {"d_u", m.d_u},
        {"head_hidden", m.head_hidden},
        {"dropout_p", m.dropout_p},
        {"mc_samples", m.mc_samples},
        {"emsa_on", m.emsa_on},
        {"maa_on", m.maa_on},
        {"aaa_on", m.aaa_on},
        {"threshold", m.threshold},
    };
}

namespace {

ModelConfig model_config_from_json(const json& j) {
    ModelConfig m;
    m.N = get_field<std::size_t>(j, "model", "N");
    m.d = get_field<std::size_t>(j, "model", "d");
    m.layout.c_e = get_field<std::size_t>(j.at("layout"), "model.layout", "c_e");
    m.layout.grid_h = get_field<std::size_t>(j.at("layout"), "model.layout", "grid_h");
    m.layout.grid_w = get_field<std::size_t>(j.at("layout"), "model.layout", "grid_w");
    m.G = get_field<std::size_t>(j, "model", "G");
    m.S = get_field<std::size_t>(j, "model", "S");
    m.r_maa = get_field<std::size_t>(j, "model", "r_maa");
    m.r_aaa = get_field<std::size_t>(j, "model", "r_aaa");
    m.d_u = get_field<std::size_t>(j, "model", "d_u");
    m.head_hidden = get_field<std::size_t>(j, "model", "head_hidden");
    m.dropout_p = get_field<double>(j, "model", "dropout_p");
    m.mc_samples = get_field<std::size_t>(j, "model", "mc_samples");
    m.emsa_on = get_field<bool>(j, "model", "emsa_on");
    m.maa_on = get_field<bool>(j, "model", "maa_on");
    m.aaa_on = get_field<bool>(j, "model", "aaa_on");
    m.threshold = get_field<double>(j, "model", "threshold");
    m.validate();
    return m;
}

}  // namespace

void save_checkpoint(const LatteModel& model, const fs::path& dir) {
    fs::create_directories(dir);
    json manifest{{"format", "LCK1"},
                  {"config", model_config_to_json(model.config())},
                  {"params", json::array()}};
    std::size_t offset = 0;
    std::ofstream blob(dir / "params.bin", std::ios::binary | std::ios::trunc);
    if (!blob) throw Error("cannot write " + (dir / "params.bin").string());
    for (const auto& [name, t] : model.params().entries()) {
        manifest["params"].push_back(json{{"name", name}, {"shape", t.shape}, {"offset", offset}});
        blob.write(reinterpret_cast<const char*>(t.data.data()),
                   static_cast<std::streamsize>(8 * t.size()));
        offset += 8 * t.size();
    }
    if (!blob) throw Error("write failed for " + (dir / "params.bin").string());
    std::ofstream mf(dir / "manifest.json");
    if (!mf) throw Error("cannot write " + (dir / "manifest.json").string());
    mf << manifest.dump(2) << "\n";
}

LatteModel load_checkpoint(const fs::path& dir) {
    fs::path mfp = fs::is_directory(dir) ? dir / "manifest.json" : dir;
    fs::path base = mfp.parent_path();
    std::ifstream mf(mfp);
    if (!mf) throw ValidationError("cannot open checkpoint manifest " + mfp.string());
    json manifest;
    try {
        mf >> manifest;
    } catch (const json::exception& e) {
        throw ValidationError(mfp.string() + ": invalid JSON: " + e.what());
    }
    if (!manifest.contains("format") || manifest.at("format").get<std::string>() != "LCK1")
        throw ValidationError(mfp.string() + ": not an LCK1 checkpoint");

    LatteModel model(model_config_from_json(manifest.at("config")));
    model.init(0);  // builds the canonical parameter layout for this config

    std::ifstream blob(base / "params.bin", std::ios::binary);
    if (!blob) throw ValidationError("cannot open " + (base / "params.bin").string());

    const auto& inventory = manifest.at("params");
    auto& store = model.params();
    if (inventory.size() != store.entries().size())
        throw ValidationError("checkpoint: parameter inventory has " +
                              std::to_string(inventory.size()) + " entries, config implies " +
                              std::to_string(store.entries().size()));
    std::size_t i = 0;
    for (auto& [name, t] : store.entries()) {
        const json& e = inventory.at(i++);
        if (e.at("name").get<std::string>() != name)
            throw ValidationError("checkpoint: parameter order mismatch at '" + name + "' vs '" +
                                  e.at("name").get<std::string>() + "'");
        Shape shape = e.at("shape").get<Shape>();
        if (shape != t.shape)
            throw ValidationError("checkpoint: shape of '" + name + "' is " + shape_str(shape) +
                                  ", config implies " + shape_str(t.shape));
        blob.seekg(static_cast<std::streamoff>(e.at("offset").get<std::size_t>()));
        blob.read(reinterpret_cast<char*>(t.data.data()),
                  static_cast<std::streamsize>(8 * t.size()));
        if (!blob) throw ValidationError("checkpoint: short read for parameter '" + name + "'");
    }
    return model;
}

}  // namespace latte
