#include "fzsl/config.hpp"

#include <cmath>
#include <fstream>

namespace fzsl {

namespace {

using nlohmann::json;

template <typename T>
void read(const json& obj, const char* key, const std::string& where, T& out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("field '" + where + key + "': " + e.what());
    }
}

const json& section(const json& j, const char* key) {
    static const json empty = json::object();
    if (!j.contains(key)) return empty;
    if (!j.at(key).is_object()) throw ConfigError(std::string("field '") + key + "': expected an object");
    return j.at(key);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

void read_shard(const json& data, const char* key, const std::filesystem::path& base, ShardPaths& out) {
    if (!data.contains(key)) return;
    const json& s = data.at(key);
    if (!s.is_object() || !s.contains("features") || !s.contains("labels"))
        throw ConfigError(std::string("field 'data.") + key + "': expected {features, labels}");
    std::string f, l;
    read(s, "features", std::string("data.") + key + ".", f);
    read(s, "labels", std::string("data.") + key + ".", l);
    out = {resolve(base, f), resolve(base, l)};
}

}  // namespace

void RunConfig::set_seed(std::uint64_t s) {
    seed = s;
    train.seed = s;
    train.augment.seed = s;
    toy.data.seed = s;
}

void RunConfig::validate() const {
    if (embed_dim < 1) throw ConfigError("model.embed_dim must be positive");
    if (trunk != "identity" && trunk != "tanh") throw ConfigError("model.trunk must be 'identity' or 'tanh'");
    if (gamma && !std::isfinite(*gamma)) throw ConfigError("gamma must be finite");
    train.validate();
    toy.validate();
}

RunConfig parse_run_config(const json& j, const std::filesystem::path& base) {
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    RunConfig cfg;

    std::uint64_t seed = 0;
    read(j, "seed", "", seed);

    const json& data = section(j, "data");
    std::string attributes, split;
    read(data, "attributes", "data.", attributes);
    read(data, "split", "data.", split);
    if (!attributes.empty()) cfg.attributes = resolve(base, attributes);
    if (!split.empty()) cfg.split = resolve(base, split);
    read_shard(data, "train", base, cfg.train_data);
    read_shard(data, "val", base, cfg.val_data);
    read_shard(data, "test", base, cfg.test_data);
    read(data, "normalize_attributes", "data.", cfg.normalize_attributes);

    const json& model = section(j, "model");
    read(model, "embed_dim", "model.", cfg.embed_dim);
    read(model, "trunk", "model.", cfg.trunk);

    const json& train = section(j, "train");
    read(train, "epochs_frozen", "train.", cfg.train.epochs_frozen);
    read(train, "epochs_finetune", "train.", cfg.train.epochs_finetune);
    read(train, "lr_frozen", "train.", cfg.train.lr_frozen);
    read(train, "lr_finetune", "train.", cfg.train.lr_finetune);
    read(train, "batch_size", "train.", cfg.train.batch_size);
    OptimizerConfig opt;
    if (train.contains("optimizer")) {
        const json& o = train.at("optimizer");
        if (!o.is_object()) throw ConfigError("field 'train.optimizer': expected an object");
        std::string type = "adam";
        read(o, "type", "train.optimizer.", type);
        if (type == "adam")
            opt.kind = OptimizerConfig::Kind::adam;
        else if (type == "sgd")
            opt.kind = OptimizerConfig::Kind::sgd;
        else
            throw ConfigError("field 'train.optimizer.type': expected 'adam' or 'sgd', got '" + type + "'");
        read(o, "beta1", "train.optimizer.", opt.beta1);
        read(o, "beta2", "train.optimizer.", opt.beta2);
        read(o, "eps", "train.optimizer.", opt.eps);
    }
    cfg.train.optimizer = opt;

    const json& augment = section(j, "augment");
    std::string strategy = to_string(cfg.train.augment.strategy);
    read(augment, "strategy", "augment.", strategy);
    cfg.train.augment.strategy = parse_strategy(strategy);
    read(augment, "m", "augment.", cfg.train.augment.m);
    read(augment, "p", "augment.", cfg.train.augment.p);
    read(augment, "mix_alpha", "augment.", cfg.train.augment.mix_alpha);

    int grid = cfg.train.grid.count;
    read(j, "grid", "", grid);
    cfg.train.grid.count = grid;
    if (j.contains("gamma") && !j.at("gamma").is_null()) {
        double g = 0.0;
        read(j, "gamma", "", g);
        cfg.gamma = g;
    }

    const json& toy = section(j, "toy");
    read(toy, "variance", "toy.", cfg.toy.data.variance);
    read(toy, "samples_per_class", "toy.", cfg.toy.data.samples_per_class);
    read(toy, "hidden", "toy.", cfg.toy.hidden);
    read(toy, "epochs", "toy.", cfg.toy.epochs);
    read(toy, "batch_size", "toy.", cfg.toy.batch_size);
    read(toy, "lr", "toy.", cfg.toy.lr);
    read(toy, "m", "toy.", cfg.toy.m);
    read(toy, "p", "toy.", cfg.toy.p);
    read(toy, "resolution", "toy.", cfg.toy.resolution);
    read(toy, "extent", "toy.", cfg.toy.extent);
    cfg.toy.grid = cfg.train.grid;

    cfg.set_seed(seed);
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    return parse_run_config(j, path.parent_path());
}

nlohmann::json to_json(const RunConfig& cfg) {
    const auto& t = cfg.train;
    json j{{"seed", cfg.seed},
           {"model", {{"embed_dim", cfg.embed_dim}, {"trunk", cfg.trunk}}},
           {"train",
            {{"epochs_frozen", t.epochs_frozen},
             {"epochs_finetune", t.epochs_finetune},
             {"lr_frozen", t.lr_frozen},
             {"lr_finetune", t.lr_finetune},
             {"batch_size", t.batch_size},
             {"optimizer",
              {{"type", t.optimizer.kind == OptimizerConfig::Kind::adam ? "adam" : "sgd"},
               {"beta1", t.optimizer.beta1},
               {"beta2", t.optimizer.beta2},
               {"eps", t.optimizer.eps}}}}},
           {"augment",
            {{"strategy", to_string(t.augment.strategy)},
             {"m", t.augment.m},
             {"p", t.augment.p},
             {"mix_alpha", t.augment.mix_alpha}}},
           {"grid", t.grid.count}};
    j["gamma"] = cfg.gamma ? json(*cfg.gamma) : json(nullptr);
    return j;
}

const std::vector<Preset>& presets() {
    static const std::vector<Preset> table{
        {"cub-dt3", 70, 0.5, 2.58},   {"cub-rl3", 30, 0.5, 3.139},   {"cub-rl4", 30, 0.5, 4.53},
        {"awa2-dt3", 8, 0.5, 4.231},  {"awa2-rl3", 15, 0.5, 8.721},  {"awa2-rl4", 8, 0.25, 5.457},
        {"sun-dt3", 30, 0.85, 1.086}, {"sun-rl3", 25, 0.75, 1.508},  {"sun-rl4", 8, 0.75, 1.594},
    };
    return table;
}

void apply_preset(RunConfig& cfg, std::string_view name) {
    for (const Preset& p : presets()) {
        if (p.name != name) continue;
        cfg.train.augment.strategy = Strategy::fictitious_dropout;
        cfg.train.augment.m = p.m;
        cfg.train.augment.p = 1.0 - p.keep_rate;
        cfg.train.epochs_frozen = 30;
        cfg.train.epochs_finetune = 50;
        cfg.gamma = p.gamma;
        return;
    }
    std::string known;
    for (const Preset& p : presets()) known += (known.empty() ? "" : ", ") + p.name;
    throw ConfigError("unknown preset '" + std::string(name) + "' (known: " + known + ")");
}

}  // namespace fzsl
