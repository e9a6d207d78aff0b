#ifndef FZSL_TOY_HPP
#define FZSL_TOY_HPP

#include "fzsl/data.hpp"
#include "fzsl/evaluate.hpp"
#include "fzsl/optim.hpp"
#include "fzsl/train.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace fzsl {

// Three 2-D Gaussians (two seen, one unseen) and a one-hidden-layer network
// whose classifier is fixed to the class centroids.
struct ToyRunConfig {
    ToyConfig data;
    int hidden = 32;
    int epochs = 300;
    int batch_size = 64;
    double lr = 1e-3;
    OptimizerConfig optimizer;
    int m = 5;
    double p = 0.5;
    GridSpec grid;
    int resolution = 201;
    double extent = 2.0;

    void validate() const;
};

enum class ToyVariant { vanilla, regular_dropout, fictitious };
inline constexpr std::array<ToyVariant, 3> kToyVariants{ToyVariant::vanilla, ToyVariant::regular_dropout,
                                                        ToyVariant::fictitious};
const char* to_string(ToyVariant v);

struct ToyDatasets {
    ClassCatalog catalog;
    SampleSet train;
    SampleSet val_seen, val_unseen;
    SampleSet test_seen, test_unseen;
};

/// Train/test from the configured seed plus an independent validation draw
/// used only to choose gamma.
ToyDatasets make_toy_datasets(const ToyConfig& cfg);

struct BoundaryGrid {
    int resolution = 0;
    double extent = 0.0;
    std::vector<double> xs;
    std::vector<Index> predicted;  // row-major over (y, x), y ascending

    std::vector<std::size_t> class_counts(Index classes) const;
    void write_csv(const std::filesystem::path& path, const ClassCatalog& catalog) const;
};

/// Calibrated argmax over [-extent, extent]^2 on a resolution x resolution lattice.
BoundaryGrid boundary_grid(const ShallowModel& model, const ClassCatalog& catalog, double gamma, int resolution,
                           double extent);

struct ToyVariantResult {
    ToyVariant variant = ToyVariant::vanilla;
    ShallowModel model;
    std::vector<double> epoch_losses;
    GammaSweepResult sweep;
    MetricsReport test;
    BoundaryGrid boundary;
};

ToyVariantResult run_toy_variant(const ToyRunConfig& cfg, const ToyDatasets& data, ToyVariant variant);

struct ToyReport {
    ToyRunConfig config;
    ToyDatasets data;
    std::vector<ToyVariantResult> variants;

    nlohmann::json metrics_json() const;
};

ToyReport run_toy(const ToyRunConfig& cfg);

/// toy_metrics.json, boundary_<variant>.csv and sweep_<variant>.csv.
void write_toy_outputs(const ToyReport& report, const std::filesystem::path& out_dir);

}  // namespace fzsl

#endif  // FZSL_TOY_HPP
