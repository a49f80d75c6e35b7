#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "latte/loss.hpp"
#include "latte/model.hpp"
#include "latte/train.hpp"

namespace latte {

/// Effective configuration of one run: built-in defaults, deep-merged
/// with a JSON config file, then dotted-path --set overrides. The merged
/// JSON is echoed verbatim as resolved_config.json so any run can be
/// reproduced from it alone.
struct RunConfig {
    std::uint64_t seed = 42;
    SynthConfig synth;
    ModelConfig model;
    LossConfig loss;
    TrainConfig train;
    nlohmann::json resolved;

    /// Copies N/d (and auto layout) into the model config and re-echoes
    /// them into `resolved`.
    void bind_data_dims(std::size_t N, std::size_t d);
};

nlohmann::json default_config_json();

/// `file` may be empty (defaults only). Each override is "dotted.path=value"
/// with the value parsed as JSON (bare words fall back to strings).
RunConfig resolve_config(const std::filesystem::path& file,
                         const std::vector<std::string>& overrides);
RunConfig config_from_json(nlohmann::json merged);
/// Defaults deep-merged with a user JSON object (the bindings' entry point).
RunConfig resolve_config_json(const nlohmann::json& user);

nlohmann::json model_config_to_json(const ModelConfig& m);

// --- LCK1 checkpoints ------------------------------------------------------
// Directory with manifest.json (format, config echo, parameter inventory of
// name/shape/byte offset) and params.bin (little-endian f64 blob). Loading
// validates every name and shape against the config's parameter layout.

void save_checkpoint(const LatteModel& model, const std::filesystem::path& dir);
LatteModel load_checkpoint(const std::filesystem::path& dir);

}  // namespace latte
