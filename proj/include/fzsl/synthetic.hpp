#ifndef FZSL_SYNTHETIC_HPP
#define FZSL_SYNTHETIC_HPP

#include "fzsl/data.hpp"
#include "fzsl/feature_stage.hpp"
#include "fzsl/train.hpp"

#include <cstdint>
#include <filesystem>

namespace fzsl {

/// Region-feature dataset for the fine-tuning experiments. Every attribute has
/// a prototype direction; each region of a sample shows one of its class's
/// active attributes plus noise. A subset of attributes is active almost only
/// in unseen classes, so seen-class fitting gives the feature stage no reason
/// to preserve them.
struct SyntheticConfig {
    int attributes = 8;
    int seen_classes = 8;
    int unseen_classes = 4;
    int unseen_only_attributes = 3;
    int regions = 8;
    int feature_dim = 8;
    int train_per_class = 60;
    int eval_per_class = 20;
    double noise = 0.3;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SyntheticData {
    ClassCatalog catalog;
    SampleSet train;
    SampleSet val_seen, val_unseen;
    SampleSet test_seen, test_unseen;
};

SyntheticData make_synthetic(const SyntheticConfig& cfg);

/// tanh stage with W = I and b = 0: the "pretrained" starting point.
FeatureStage<Real> identity_initialized_trunk(Index feature_dim);

/// Schedule used for the forgetting curves: plain cross-entropy, 20 frozen
/// epochs, then 30 with the feature stage unfrozen, both at 3e-3.
TrainConfig forgetting_train_config(std::uint64_t seed);

struct ForgettingRun {
    HeadModel model;
    std::vector<EpochRecord> records;
};

/// Normalized attributes, identity-initialized tanh trunk and a fresh head,
/// trained with forgetting_train_config. Same path as `train` on the files
/// written by write_synthetic.
ForgettingRun run_forgetting(const SyntheticData& data, std::uint64_t seed);

/// Kendall tau of best_gamma against epoch over the finetune records.
double finetune_gamma_trend(const std::vector<EpochRecord>& records);

/// attributes.csv, split.json, {train,val,test}.zslf with *_labels.csv, and a
/// config.json that points at them.
void write_synthetic(const SyntheticData& data, const std::filesystem::path& dir, std::uint64_t seed);

}  // namespace fzsl

#endif  // FZSL_SYNTHETIC_HPP
