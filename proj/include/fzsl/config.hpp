#ifndef FZSL_CONFIG_HPP
#define FZSL_CONFIG_HPP

#include "fzsl/toy.hpp"
#include "fzsl/train.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fzsl {

struct ShardPaths {
    std::filesystem::path features;
    std::filesystem::path labels;
};

/// Everything a `train`/`eval`/`sweep-gamma` run needs. Relative paths in the
/// JSON file are resolved against the file's directory.
struct RunConfig {
    std::filesystem::path attributes;
    std::filesystem::path split;
    ShardPaths train_data, val_data, test_data;
    bool normalize_attributes = false;

    Index embed_dim = 16;
    std::string trunk = "identity";  // or "tanh", initialized to W = I, b = 0

    TrainConfig train;
    std::optional<double> gamma;
    ToyRunConfig toy;
    std::uint64_t seed = 0;

    bool has_data() const { return !attributes.empty(); }
    void set_seed(std::uint64_t s);
    void validate() const;
};

RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& cfg);

/// Per-dataset hyperparameters from the supplementary table: number of
/// fictitious samples, keep rate and the reported calibration constant.
struct Preset {
    std::string name;
    int m;
    double keep_rate;
    double gamma;
};

const std::vector<Preset>& presets();
void apply_preset(RunConfig& cfg, std::string_view name);

}  // namespace fzsl

#endif  // FZSL_CONFIG_HPP
