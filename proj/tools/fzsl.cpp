// fzsl: toy reproduction, training, evaluation and gradient checks.

#include "fzsl/checkpoint.hpp"
#include "fzsl/config.hpp"
#include "fzsl/gradcheck.hpp"
#include "fzsl/synthetic.hpp"
#include "fzsl/toy.hpp"
#include "fzsl/train.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace fzsl;

namespace {

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string preset;
    std::string strategy;
    std::optional<int> m;
    std::optional<double> p;
    std::optional<int> grid;
};

void add_common(CLI::App* sub, CommonFlags& f) {
    sub->add_option("--config", f.config, "JSON run configuration");
    sub->add_option("--seed", f.seed, "master seed (overrides the config)");
    sub->add_option("--out", f.out, "output directory");
    sub->add_option("--preset", f.preset, "dataset hyperparameter preset, e.g. cub-dt3");
    sub->add_option("--strategy", f.strategy, "augmentation strategy");
    sub->add_option("--m", f.m, "generated samples per batch");
    sub->add_option("--p", f.p, "drop probability");
    sub->add_option("--grid", f.grid, "gamma grid size");
}

RunConfig resolve_config(const CommonFlags& f) {
    RunConfig cfg = f.config.empty() ? parse_run_config(nlohmann::json::object()) : load_run_config(f.config);
    if (!f.preset.empty()) apply_preset(cfg, f.preset);
    if (f.seed) cfg.set_seed(*f.seed);
    if (!f.strategy.empty()) cfg.train.augment.strategy = parse_strategy(f.strategy);
    if (f.m) cfg.train.augment.m = cfg.toy.m = *f.m;
    if (f.p) cfg.train.augment.p = cfg.toy.p = *f.p;
    if (f.grid) cfg.train.grid.count = cfg.toy.grid.count = *f.grid;
    cfg.validate();
    return cfg;
}

fs::path out_dir(const CommonFlags& f, const char* fallback) {
    const fs::path dir = f.out.empty() ? fs::path(fallback) : fs::path(f.out);
    fs::create_directories(dir);
    return dir;
}

// Timestamps live here only, so the other outputs stay hash-comparable.
void log_run(const fs::path& dir, const std::string& line) {
    std::ofstream log(dir / "run.log", std::ios::app);
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    log << stamp << " " << line << "\n";
}

void write_json(const fs::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

struct LoadedData {
    ClassCatalog catalog;
    SampleSet train;
    SampleSet val_seen, val_unseen;
    SampleSet test_seen, test_unseen;
};

LoadedData load_data(const RunConfig& cfg, bool need_train) {
    if (!cfg.has_data()) throw ConfigError("field 'data.attributes': required for this command");
    if (cfg.split.empty()) throw ConfigError("field 'data.split': required for this command");
    LoadedData d;
    d.catalog = load_attributes(cfg.attributes, cfg.split);
    if (cfg.normalize_attributes) d.catalog = d.catalog.normalized();
    auto shard = [&](const ShardPaths& paths, const char* name, SampleRole role) {
        if (paths.features.empty()) throw ConfigError(std::string("field 'data.") + name + "': required for this command");
        return load_features(paths.features, paths.labels, d.catalog, role);
    };
    if (need_train) d.train = shard(cfg.train_data, "train", SampleRole::train);
    const SampleSet val = shard(cfg.val_data, "val", SampleRole::val);
    d.val_seen = val.filter(d.catalog, true, SampleRole::val);
    d.val_unseen = val.filter(d.catalog, false, SampleRole::val);
    if (!cfg.test_data.features.empty()) {
        const SampleSet test = shard(cfg.test_data, "test", SampleRole::test_seen);
        d.test_seen = test.filter(d.catalog, true, SampleRole::test_seen);
        d.test_unseen = test.filter(d.catalog, false, SampleRole::test_unseen);
    }
    return d;
}

void check_model_matches(const HeadModel& model, const LoadedData& d) {
    const auto dims = model.head.dims();
    if (dims.attributes != d.catalog.num_attributes())
        throw ConfigError("checkpoint has " + std::to_string(dims.attributes) + " attributes, catalog has " +
                          std::to_string(d.catalog.num_attributes()));
    const Index f = d.val_seen.empty() ? d.val_unseen.feature_dim() : d.val_seen.feature_dim();
    if (model.trunk.output_dim(f) != dims.feature_dim || (model.trunk.trainable() && model.trunk.W.rows() != f))
        throw ConfigError("checkpoint feature width does not match the data (f = " + std::to_string(f) + ")");
}

nlohmann::json split_metrics(const HeadModel& model, const SampleSet& seen, const SampleSet& unseen,
                             const ClassCatalog& catalog, double gamma) {
    MetricsReport r = evaluate_gzsl(model, seen, unseen, catalog, gamma);
    r.t1 = evaluate_czsl(model, unseen, catalog);
    return r.to_json();
}

int cmd_toy(const CommonFlags& f) {
    const RunConfig cfg = resolve_config(f);
    const fs::path dir = out_dir(f, "out/toy");
    log_run(dir, "toy seed=" + std::to_string(cfg.seed));
    const ToyReport report = run_toy(cfg.toy);
    write_toy_outputs(report, dir);
    for (const auto& v : report.variants)
        std::cout << to_string(v.variant) << ": gamma=" << v.sweep.best_gamma << " hm=" << v.test.hm
                  << " acc_s=" << v.test.acc_s << " acc_u=" << v.test.acc_u << "\n";
    return 0;
}

int cmd_train(const CommonFlags& f) {
    const RunConfig cfg = resolve_config(f);
    const LoadedData d = load_data(cfg, true);
    const fs::path dir = out_dir(f, "out/train");
    log_run(dir, "train seed=" + std::to_string(cfg.seed));

    const Index feature_dim = d.train.feature_dim();
    HeadModel model;
    model.trunk = cfg.trunk == "tanh" ? identity_initialized_trunk(feature_dim) : FeatureStage<Real>::identity();
    const HeadDims dims{d.catalog.num_attributes(), model.trunk.output_dim(feature_dim), cfg.embed_dim};
    model.head = init_head_params<Real>(dims, Rng::mix(cfg.seed, "init/head"));

    const auto records = two_phase_train(model, d.train, d.val_seen, d.val_unseen, d.catalog, cfg.train);
    record_curves(records, dir / "curves.csv");
    const double swept = records.empty() ? 0.0 : records.back().best_gamma;
    const double gamma = cfg.gamma.value_or(swept);
    save_checkpoint(dir / "checkpoint.bin", model, {cfg.seed, static_cast<long>(records.size()), swept});

    nlohmann::json metrics{{"config", to_json(cfg)},
                           {"swept_gamma", swept},
                           {"val", split_metrics(model, d.val_seen, d.val_unseen, d.catalog, swept)}};
    if (!d.test_seen.empty() && !d.test_unseen.empty())
        metrics["test"] = split_metrics(model, d.test_seen, d.test_unseen, d.catalog, gamma);
    write_json(dir / "metrics.json", metrics);
    if (!records.empty()) {
        const auto& last = records.back();
        std::cout << "epochs=" << records.size() << " val_hm=" << last.val_hm << " best_gamma=" << last.best_gamma
                  << "\n";
    }
    return 0;
}

HeadModel load_head(const std::string& path) {
    if (path.empty()) throw ConfigError("--checkpoint is required");
    Checkpoint ck = load_checkpoint(path);
    if (!ck.head) throw ConfigError("checkpoint " + path + " does not hold an attention-head model");
    return *ck.head;
}

int cmd_eval(const CommonFlags& f, const std::string& checkpoint, const std::string& split,
             std::optional<double> gamma_flag) {
    const RunConfig cfg = resolve_config(f);
    const LoadedData d = load_data(cfg, false);
    const Checkpoint ck = load_checkpoint(checkpoint);
    if (!ck.head) throw ConfigError("checkpoint " + checkpoint + " does not hold an attention-head model");
    const HeadModel& model = *ck.head;
    check_model_matches(model, d);
    const double gamma = gamma_flag ? *gamma_flag : cfg.gamma ? *cfg.gamma : ck.meta.gamma.value_or(0.0);
    const bool val = split == "val";
    const SampleSet& seen = val ? d.val_seen : d.test_seen;
    const SampleSet& unseen = val ? d.val_unseen : d.test_unseen;
    if (seen.empty() || unseen.empty()) throw ConfigError("split '" + split + "' lacks seen or unseen samples");
    const nlohmann::json report = split_metrics(model, seen, unseen, d.catalog, gamma);
    const fs::path dir = out_dir(f, "out/eval");
    log_run(dir, "eval split=" + split);
    write_json(dir / "metrics.json", report);
    std::cout << report.dump(2) << "\n";
    return 0;
}

int cmd_sweep(const CommonFlags& f, const std::string& checkpoint) {
    const RunConfig cfg = resolve_config(f);
    const LoadedData d = load_data(cfg, false);
    const HeadModel model = load_head(checkpoint);
    check_model_matches(model, d);
    const auto sweep = sweep_gamma(model, d.val_seen, d.val_unseen, d.catalog, cfg.train.grid);
    const fs::path dir = out_dir(f, "out/sweep");
    log_run(dir, "sweep-gamma");
    sweep.write_csv(dir / "sweep.csv");
    std::cout << "best_gamma=" << sweep.best_gamma << " best_hm=" << sweep.best_hm << "\n";
    return 0;
}

int cmd_gradcheck(const CommonFlags& f, int head, int shallow, double tolerance) {
    const std::uint64_t seed = f.seed.value_or(0);
    const auto results = gradcheck_suite(seed, head, shallow, tolerance);
    const nlohmann::json j = to_json(results);
    if (!f.out.empty()) {
        const fs::path dir = out_dir(f, "");
        log_run(dir, "gradcheck seed=" + std::to_string(seed));
        write_json(dir / "gradcheck.json", j);
    }
    double worst = 0.0;
    for (const auto& r : results) worst = std::max(worst, r.report.worst());
    const bool ok = j.at("passed").get<bool>();
    std::cout << (ok ? "PASS" : "FAIL") << " instances=" << results.size() << " worst_relative_error=" << worst
              << " tolerance=" << tolerance << "\n";
    return ok ? 0 : 3;
}

int cmd_make_synthetic(const CommonFlags& f) {
    SyntheticConfig sc;
    sc.seed = f.seed.value_or(0);
    const fs::path dir = out_dir(f, "out/synthetic");
    write_synthetic(make_synthetic(sc), dir, sc.seed);
    std::cout << "wrote " << (dir / "config.json").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fictitious-class zero-shot learning toolkit"};
    app.require_subcommand(1);

    CommonFlags flags;
    auto* toy = app.add_subcommand("toy", "train the three toy variants and export boundaries");
    add_common(toy, flags);

    auto* train = app.add_subcommand("train", "two-phase training from a config");
    add_common(train, flags);

    std::string checkpoint, split = "test";
    std::optional<double> gamma;
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
    add_common(eval, flags);
    eval->add_option("--checkpoint", checkpoint)->required();
    eval->add_option("--split", split)->check(CLI::IsMember({"val", "test"}));
    eval->add_option("--gamma", gamma, "calibration constant");

    auto* sweep = app.add_subcommand("sweep-gamma", "sweep gamma on the validation split");
    add_common(sweep, flags);
    sweep->add_option("--checkpoint", checkpoint)->required();

    int head_instances = 20, shallow_instances = 20;
    double tolerance = 1e-5;
    auto* gc = app.add_subcommand("gradcheck", "finite-difference check of the analytic gradients");
    add_common(gc, flags);
    gc->add_option("--head", head_instances)->check(CLI::NonNegativeNumber);
    gc->add_option("--shallow", shallow_instances)->check(CLI::NonNegativeNumber);
    gc->add_option("--tolerance", tolerance);

    auto* synth = app.add_subcommand("make-synthetic", "write the synthetic forgetting dataset");
    add_common(synth, flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*toy) return cmd_toy(flags);
        if (*train) return cmd_train(flags);
        if (*eval) return cmd_eval(flags, checkpoint, split, gamma);
        if (*sweep) return cmd_sweep(flags, checkpoint);
        if (*gc) return cmd_gradcheck(flags, head_instances, shallow_instances, tolerance);
        if (*synth) return cmd_make_synthetic(flags);
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return 2;
    } catch (const ContractError& e) {
        std::cerr << "contract error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
