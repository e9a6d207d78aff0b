#include "fzsl/synthetic.hpp"

#include "fzsl/rng.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>

namespace fzsl {

void SyntheticConfig::validate() const {
    if (attributes < 2 || seen_classes < 2 || unseen_classes < 1 || regions < 1 || feature_dim < 1)
        throw ConfigError("synthetic: dims too small");
    if (unseen_only_attributes < 0 || unseen_only_attributes >= attributes)
        throw ConfigError("synthetic: unseen_only_attributes must leave shared attributes");
    if (train_per_class < 1 || eval_per_class < 1) throw ConfigError("synthetic: per-class counts must be positive");
    if (!(noise >= 0.0)) throw ConfigError("synthetic: noise must be non-negative");
}

FeatureStage<Real> identity_initialized_trunk(Index feature_dim) {
    return FeatureStage<Real>::tanh_stage(Matrix::Identity(feature_dim, feature_dim), Vector::Zero(feature_dim));
}

SyntheticData make_synthetic(const SyntheticConfig& cfg) {
    cfg.validate();
    Rng rng = Rng(cfg.seed).fork("synthetic/catalog");
    const int n = cfg.attributes;
    const int shared = n - cfg.unseen_only_attributes;
    const int classes = cfg.seen_classes + cfg.unseen_classes;

    // Distinct binary class vectors. Seen classes use shared attributes only;
    // unseen classes add at least one unseen-only attribute.
    Matrix attributes = Matrix::Zero(classes, n);
    std::set<std::vector<int>> used;
    for (int c = 0; c < classes; ++c) {
        const bool unseen = c >= cfg.seen_classes;
        for (int attempt = 0;; ++attempt) {
            std::vector<int> bits(static_cast<std::size_t>(n), 0);
            int on = 0;
            for (int j = 0; j < shared; ++j) on += bits[j] = rng.bernoulli(0.5) ? 1 : 0;
            if (unseen) {
                const int extra = shared + static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.unseen_only_attributes)));
                bits[extra] = 1;
                ++on;
                for (int j = shared; j < n; ++j) on += (j != extra && rng.bernoulli(0.5)) ? (bits[j] = 1) : 0;
            }
            if (on >= 2 && used.insert(bits).second) {
                for (int j = 0; j < n; ++j) attributes(c, j) = bits[j];
                break;
            }
            if (attempt > 10000) throw ConfigError("synthetic: cannot draw distinct class vectors");
        }
    }
    std::vector<std::string> ids;
    std::vector<Index> seen, unseen;
    for (int c = 0; c < classes; ++c) {
        ids.push_back("c" + std::to_string(c));
        (c < cfg.seen_classes ? seen : unseen).push_back(c);
    }

    Matrix prototypes(n, cfg.feature_dim);
    Rng proto_rng = Rng(cfg.seed).fork("synthetic/prototypes");
    for (int j = 0; j < n; ++j) {
        for (int k = 0; k < cfg.feature_dim; ++k) prototypes(j, k) = proto_rng.normal();
        prototypes.row(j).normalize();
    }

    SyntheticData d{ClassCatalog(ids, attributes, seen, unseen), {}, {}, {}, {}, {}};
    auto draw = [&](Rng& r, SampleSet& set, Index cls, int count, const std::string& prefix) {
        std::vector<int> active;
        for (int j = 0; j < n; ++j)
            if (attributes(cls, j) != 0.0) active.push_back(j);
        for (int i = 0; i < count; ++i) {
            Matrix x(cfg.regions, cfg.feature_dim);
            for (int region = 0; region < cfg.regions; ++region) {
                const int j = active[r.below(active.size())];
                for (int k = 0; k < cfg.feature_dim; ++k) x(region, k) = static_cast<float>(prototypes(j, k) + cfg.noise * r.normal());
            }
            set.sample_ids.push_back(prefix + ids[static_cast<std::size_t>(cls)] + "_" + std::to_string(i));
            set.features.push_back(std::move(x));
            set.labels.push_back(cls);
        }
    };
    Rng train_rng = Rng(cfg.seed).fork("synthetic/train");
    Rng val_rng = Rng(cfg.seed).fork("synthetic/val");
    Rng test_rng = Rng(cfg.seed).fork("synthetic/test");
    d.train.role = SampleRole::train;
    d.val_seen.role = d.val_unseen.role = SampleRole::val;
    d.test_seen.role = SampleRole::test_seen;
    d.test_unseen.role = SampleRole::test_unseen;
    for (const Index c : seen) draw(train_rng, d.train, c, cfg.train_per_class, "train_");
    for (const Index c : seen) draw(val_rng, d.val_seen, c, cfg.eval_per_class, "val_");
    for (const Index c : unseen) draw(val_rng, d.val_unseen, c, cfg.eval_per_class, "val_");
    for (const Index c : seen) draw(test_rng, d.test_seen, c, cfg.eval_per_class, "test_");
    for (const Index c : unseen) draw(test_rng, d.test_unseen, c, cfg.eval_per_class, "test_");
    return d;
}

TrainConfig forgetting_train_config(std::uint64_t seed) {
    TrainConfig t;
    t.epochs_frozen = 20;
    t.epochs_finetune = 30;
    t.lr_frozen = 3e-3;
    t.lr_finetune = 3e-3;
    t.batch_size = 32;
    t.seed = seed;
    t.augment.seed = seed;
    return t;
}

ForgettingRun run_forgetting(const SyntheticData& data, std::uint64_t seed) {
    const ClassCatalog catalog = data.catalog.normalized();
    const Index f = data.train.feature_dim();
    ForgettingRun run;
    run.model.trunk = identity_initialized_trunk(f);
    run.model.head = init_head_params<Real>({catalog.num_attributes(), f, 16}, Rng::mix(seed, "init/head"));
    run.records = two_phase_train(run.model, data.train, data.val_seen, data.val_unseen, catalog,
                                  forgetting_train_config(seed));
    return run;
}

double finetune_gamma_trend(const std::vector<EpochRecord>& records) {
    std::vector<double> gammas;
    for (const auto& r : records)
        if (r.phase == Phase::finetune) gammas.push_back(r.best_gamma);
    return kendall_tau_vs_index(gammas);
}

void write_synthetic(const SyntheticData& data, const std::filesystem::path& dir, std::uint64_t seed) {
    std::filesystem::create_directories(dir);
    save_attributes(data.catalog, dir / "attributes.csv", dir / "split.json");
    auto merge = [](const SampleSet& a, const SampleSet& b) {
        SampleSet out = a;
        out.sample_ids.insert(out.sample_ids.end(), b.sample_ids.begin(), b.sample_ids.end());
        out.features.insert(out.features.end(), b.features.begin(), b.features.end());
        out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
        return out;
    };
    save_features(data.train, data.catalog, dir / "train.zslf", dir / "train_labels.csv");
    save_features(merge(data.val_seen, data.val_unseen), data.catalog, dir / "val.zslf", dir / "val_labels.csv");
    save_features(merge(data.test_seen, data.test_unseen), data.catalog, dir / "test.zslf", dir / "test_labels.csv");

    const TrainConfig schedule = forgetting_train_config(seed);
    const nlohmann::json cfg{
        {"seed", seed},
        {"data",
         {{"attributes", "attributes.csv"},
          {"split", "split.json"},
          {"train", {{"features", "train.zslf"}, {"labels", "train_labels.csv"}}},
          {"val", {{"features", "val.zslf"}, {"labels", "val_labels.csv"}}},
          {"test", {{"features", "test.zslf"}, {"labels", "test_labels.csv"}}},
          {"normalize_attributes", true}}},
        {"model", {{"embed_dim", 16}, {"trunk", "tanh"}}},
        {"train",
         {{"epochs_frozen", schedule.epochs_frozen},
          {"epochs_finetune", schedule.epochs_finetune},
          {"lr_frozen", schedule.lr_frozen},
          {"lr_finetune", schedule.lr_finetune},
          {"batch_size", schedule.batch_size},
          {"optimizer", {{"type", "adam"}, {"beta1", 0.9}, {"beta2", 0.999}, {"eps", 1e-8}}}}},
        {"augment", {{"strategy", "none"}, {"m", 0}, {"p", 0.5}, {"mix_alpha", 1.0}}},
        {"grid", 201}};
    std::ofstream out(dir / "config.json");
    if (!out) throw FormatError("cannot write " + (dir / "config.json").string());
    out << cfg.dump(2) << "\n";
}

}  // namespace fzsl
