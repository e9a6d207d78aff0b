#include "fzsl/toy.hpp"

#include <charconv>
#include <fstream>

namespace fzsl {

namespace {
std::string fmt_real(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}
}  // namespace

void ToyRunConfig::validate() const {
    data.validate();
    if (hidden <= 0) throw ConfigError("toy.hidden must be positive");
    if (epochs <= 0) throw ConfigError("toy.epochs must be positive");
    if (batch_size <= 0) throw ConfigError("toy.batch_size must be positive");
    if (!(lr > 0.0)) throw ConfigError("toy.lr must be positive");
    if (m < 0) throw ConfigError("toy.m must be non-negative");
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("toy.p must lie in (0, 1)");
    if (resolution < 2) throw ConfigError("toy.resolution must be at least 2");
    if (!(extent > 0.0)) throw ConfigError("toy.extent must be positive");
}

const char* to_string(ToyVariant v) {
    switch (v) {
        case ToyVariant::vanilla: return "vanilla";
        case ToyVariant::regular_dropout: return "regular_dropout";
        case ToyVariant::fictitious: return "fictitious";
    }
    return "?";
}

ToyDatasets make_toy_datasets(const ToyConfig& cfg) {
    ToyData main = generate_toy(cfg);
    ToyConfig val_cfg = cfg;
    val_cfg.seed = Rng::mix(cfg.seed, "toy/validation");
    ToyData val = generate_toy(val_cfg);
    ToyDatasets d{main.catalog, std::move(main.train), {}, {}, {}, {}};
    d.val_seen = val.test.filter(d.catalog, true, SampleRole::val);
    d.val_unseen = val.test.filter(d.catalog, false, SampleRole::val);
    d.test_seen = main.test.filter(d.catalog, true, SampleRole::test_seen);
    d.test_unseen = main.test.filter(d.catalog, false, SampleRole::test_unseen);
    return d;
}

std::vector<std::size_t> BoundaryGrid::class_counts(Index classes) const {
    std::vector<std::size_t> counts(static_cast<std::size_t>(classes), 0);
    for (const Index c : predicted) ++counts.at(static_cast<std::size_t>(c));
    return counts;
}

void BoundaryGrid::write_csv(const std::filesystem::path& path, const ClassCatalog& catalog) const {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write " + path.string());
    out << "x,y,predicted_class\n";
    std::size_t k = 0;
    for (const double y : xs)
        for (const double x : xs) out << fmt_real(x) << "," << fmt_real(y) << "," << catalog.class_ids()[predicted[k++]] << "\n";
}

BoundaryGrid boundary_grid(const ShallowModel& model, const ClassCatalog& catalog, double gamma, int resolution,
                           double extent) {
    require(resolution >= 2, "boundary_grid: resolution must be at least 2");
    BoundaryGrid g{resolution, extent, {}, {}};
    for (int i = 0; i < resolution; ++i)
        g.xs.push_back(-extent + 2.0 * extent * static_cast<double>(i) / static_cast<double>(resolution - 1));
    Matrix point(1, 2);
    for (const double y : g.xs)
        for (const double x : g.xs) {
            point << x, y;
            const Vector s = model.scores(point, catalog.attributes());
            g.predicted.push_back(argmax(calibrated_scores<double>(s, catalog.seen_mask(), gamma)));
        }
    return g;
}

ToyVariantResult run_toy_variant(const ToyRunConfig& cfg, const ToyDatasets& data, ToyVariant variant) {
    cfg.validate();
    AugmentConfig aug;
    aug.m = cfg.m;
    aug.p = cfg.p;
    aug.strategy = variant == ToyVariant::vanilla           ? Strategy::none
                   : variant == ToyVariant::regular_dropout ? Strategy::dropout
                                                            : Strategy::fictitious_dropout;
    ToyVariantResult r;
    r.variant = variant;
    const Index dim = data.catalog.num_attributes();
    r.model.params = init_shallow_params<Real>(dim, cfg.hidden, dim, Rng::mix(cfg.data.seed, "toy/init"));
    Optimizer opt(cfg.optimizer);
    Rng rng = Rng(cfg.data.seed).fork(std::string("toy/train/") + to_string(variant));
    for (int e = 0; e < cfg.epochs; ++e)
        r.epoch_losses.push_back(train_epoch(r.model, data.train, data.catalog, aug, cfg.batch_size, cfg.lr, opt, rng));

    r.sweep = sweep_gamma(r.model, data.val_seen, data.val_unseen, data.catalog, cfg.grid);
    r.test = evaluate_gzsl(r.model, data.test_seen, data.test_unseen, data.catalog, r.sweep.best_gamma);
    r.test.t1 = evaluate_czsl(r.model, data.test_unseen, data.catalog);
    r.boundary = boundary_grid(r.model, data.catalog, r.sweep.best_gamma, cfg.resolution, cfg.extent);
    return r;
}

ToyReport run_toy(const ToyRunConfig& cfg) {
    cfg.validate();
    ToyReport report{cfg, make_toy_datasets(cfg.data), {}};
    for (const auto v : kToyVariants) report.variants.push_back(run_toy_variant(cfg, report.data, v));
    return report;
}

nlohmann::json ToyReport::metrics_json() const {
    nlohmann::json j;
    j["seed"] = config.data.seed;
    j["variance"] = config.data.variance;
    j["samples_per_class"] = config.data.samples_per_class;
    j["epochs"] = config.epochs;
    j["m"] = config.m;
    j["p"] = config.p;
    j["variants"] = nlohmann::json::object();
    for (const auto& v : variants) {
        auto m = v.test.to_json();
        m["val_best_hm"] = v.sweep.best_hm;
        m["final_train_loss"] = v.epoch_losses.empty() ? 0.0 : v.epoch_losses.back();
        nlohmann::json regions = nlohmann::json::object();
        const auto counts = v.boundary.class_counts(data.catalog.num_classes());
        for (Index c = 0; c < data.catalog.num_classes(); ++c)
            regions[data.catalog.class_ids()[c]] = counts[static_cast<std::size_t>(c)];
        m["boundary_cells"] = regions;
        j["variants"][to_string(v.variant)] = m;
    }
    return j;
}

void write_toy_outputs(const ToyReport& report, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    {
        std::ofstream out(out_dir / "toy_metrics.json");
        if (!out) throw FormatError("cannot write " + (out_dir / "toy_metrics.json").string());
        out << report.metrics_json().dump(2) << "\n";
    }
    for (const auto& v : report.variants) {
        v.boundary.write_csv(out_dir / (std::string("boundary_") + to_string(v.variant) + ".csv"), report.data.catalog);
        v.sweep.write_csv(out_dir / (std::string("sweep_") + to_string(v.variant) + ".csv"));
    }
}

}  // namespace fzsl
