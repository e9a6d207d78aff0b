#include "fzsl/config.hpp"

#include "support.hpp"

#include <doctest.h>

#include <string>

using namespace fzsl;
using nlohmann::json;

namespace {

std::string config_error(const json& j) {
    try {
        parse_run_config(j);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("empty config gives the documented defaults") {
    const RunConfig cfg = parse_run_config(json::object());
    CHECK_FALSE(cfg.has_data());
    CHECK(cfg.embed_dim == 16);
    CHECK(cfg.trunk == "identity");
    CHECK(cfg.train.epochs_frozen == 30);
    CHECK(cfg.train.epochs_finetune == 50);
    CHECK(cfg.train.batch_size == 50);
    CHECK(cfg.train.augment.strategy == Strategy::none);
    CHECK(cfg.train.optimizer.kind == OptimizerConfig::Kind::adam);
    CHECK(cfg.train.grid.count == 201);
    CHECK_FALSE(cfg.gamma.has_value());
    CHECK(cfg.toy.data.samples_per_class == 200);
}

TEST_CASE("seed propagates to every stream") {
    const RunConfig cfg = parse_run_config(json{{"seed", 42}});
    CHECK(cfg.seed == 42);
    CHECK(cfg.train.seed == 42);
    CHECK(cfg.train.augment.seed == 42);
    CHECK(cfg.toy.data.seed == 42);
}

TEST_CASE("sections are read and round trip through to_json") {
    const json j = {{"seed", 3},
                    {"model", {{"embed_dim", 8}, {"trunk", "tanh"}}},
                    {"train",
                     {{"epochs_frozen", 2},
                      {"epochs_finetune", 1},
                      {"lr_frozen", 0.01},
                      {"batch_size", 7},
                      {"optimizer", {{"type", "sgd"}}}}},
                    {"augment", {{"strategy", "cutmix_fictitious"}, {"m", 4}, {"p", 0.25}}},
                    {"grid", 11},
                    {"gamma", 1.5}};
    const RunConfig cfg = parse_run_config(j);
    CHECK(cfg.embed_dim == 8);
    CHECK(cfg.trunk == "tanh");
    CHECK(cfg.train.epochs_frozen == 2);
    CHECK(cfg.train.lr_frozen == 0.01);
    CHECK(cfg.train.batch_size == 7);
    CHECK(cfg.train.optimizer.kind == OptimizerConfig::Kind::sgd);
    CHECK(cfg.train.augment.strategy == Strategy::cutmix_fictitious);
    CHECK(cfg.train.augment.m == 4);
    CHECK(cfg.train.augment.p == 0.25);
    CHECK(cfg.train.grid.count == 11);
    CHECK(cfg.gamma == 1.5);

    const RunConfig back = parse_run_config(to_json(cfg));
    CHECK(to_json(back) == to_json(cfg));
}

TEST_CASE("bad fields are named in the error") {
    CHECK(config_error({{"train", {{"lr_frozen", "fast"}}}}).find("train.lr_frozen") != std::string::npos);
    CHECK(config_error({{"train", {{"lr_frozen", -1.0}}}}).find("lr") != std::string::npos);
    CHECK(config_error({{"model", {{"trunk", "resnet"}}}}).find("model.trunk") != std::string::npos);
    CHECK(config_error({{"train", {{"optimizer", {{"type", "rmsprop"}}}}}}).find("train.optimizer.type") !=
          std::string::npos);
    CHECK(config_error({{"data", {{"train", "x.zslf"}}}}).find("data.train") != std::string::npos);
    CHECK(config_error({{"augment", 3}}).find("augment") != std::string::npos);
    CHECK(config_error({{"augment", {{"p", 1.5}}}}).find("augment.p") != std::string::npos);
    CHECK_FALSE(config_error({{"augment", {{"strategy", "nope"}}}}).empty());
    CHECK_FALSE(config_error(json::array()).empty());
}

TEST_CASE("relative data paths resolve against the config directory") {
    const json j = {{"data",
                     {{"attributes", "attrs.csv"},
                      {"split", "/abs/split.json"},
                      {"train", {{"features", "tr.zslf"}, {"labels", "sub/tr.csv"}}}}}};
    const RunConfig cfg = parse_run_config(j, "/base/dir");
    CHECK(cfg.attributes == std::filesystem::path("/base/dir/attrs.csv"));
    CHECK(cfg.split == std::filesystem::path("/abs/split.json"));
    CHECK(cfg.train_data.features == std::filesystem::path("/base/dir/tr.zslf"));
    CHECK(cfg.train_data.labels == std::filesystem::path("/base/dir/sub/tr.csv"));

    testing::ScratchDir dir("cfg");
    testing::spit(dir / "c.json", j.dump());
    CHECK(load_run_config(dir / "c.json").attributes == dir / "attrs.csv");
    testing::spit(dir / "broken.json", "{\"seed\": ");
    CHECK_THROWS_AS(load_run_config(dir / "broken.json"), ConfigError);
    CHECK_THROWS_AS(load_run_config(dir / "missing.json"), ConfigError);
}

TEST_CASE("presets convert keep rates to drop probabilities") {
    struct Row {
        const char* name;
        int m;
        double keep;
        double gamma;
    };
    const Row table[] = {{"cub-dt3", 70, 0.5, 2.58},   {"cub-rl3", 30, 0.5, 3.139},  {"cub-rl4", 30, 0.5, 4.53},
                         {"awa2-dt3", 8, 0.5, 4.231},  {"awa2-rl3", 15, 0.5, 8.721}, {"awa2-rl4", 8, 0.25, 5.457},
                         {"sun-dt3", 30, 0.85, 1.086}, {"sun-rl3", 25, 0.75, 1.508}, {"sun-rl4", 8, 0.75, 1.594}};
    CHECK(presets().size() == std::size(table));
    for (const Row& row : table) {
        RunConfig cfg;
        apply_preset(cfg, row.name);
        CHECK(cfg.train.augment.strategy == Strategy::fictitious_dropout);
        CHECK(cfg.train.augment.m == row.m);
        CHECK(cfg.train.augment.p == doctest::Approx(1.0 - row.keep).epsilon(1e-15));
        CHECK(cfg.gamma == row.gamma);
        CHECK_NOTHROW(cfg.validate());
    }
    RunConfig cfg;
    try {
        apply_preset(cfg, "imagenet");
        FAIL("expected a config error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("cub-dt3") != std::string::npos);
    }
}
