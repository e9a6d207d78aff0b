#ifndef FZSL_TRAIN_HPP
#define FZSL_TRAIN_HPP

#include "fzsl/augment.hpp"
#include "fzsl/common.hpp"
#include "fzsl/data.hpp"
#include "fzsl/evaluate.hpp"
#include "fzsl/feature_stage.hpp"
#include "fzsl/model.hpp"
#include "fzsl/optim.hpp"
#include "fzsl/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace fzsl {

/// Feature stage followed by the attribute-attention head.
struct HeadModel {
    FeatureStage<Real> trunk;
    HeadParams<Real> head;

    Vector scores(const Matrix& features, const Matrix& classifiers) const {
        return head_forward(trunk.forward(features), head, classifiers).scores;
    }
};

/// Toy network over flattened sample features (R x f read row by row).
struct ShallowModel {
    ShallowParams<Real> params;

    static Vector flatten(const Matrix& features) {
        Vector x(features.size());
        Index k = 0;
        for (Index r = 0; r < features.rows(); ++r)
            for (Index c = 0; c < features.cols(); ++c) x(k++) = features(r, c);
        return x;
    }

    Vector scores(const Matrix& features, const Matrix& classifiers) const {
        return shallow_forward(flatten(features), params, classifiers).scores;
    }
};

struct TrainConfig {
    int epochs_frozen = 30;
    int epochs_finetune = 50;
    double lr_frozen = 1e-3;
    double lr_finetune = 1e-4;
    int batch_size = 50;
    OptimizerConfig optimizer;
    AugmentConfig augment;
    std::uint64_t seed = 0;
    GridSpec grid;

    void validate() const;
};

enum class Phase { frozen, finetune };
const char* to_string(Phase p);

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_acc_u = 0.0;
    double val_acc_s = 0.0;
    double val_hm = 0.0;
    double best_gamma = 0.0;
    Phase phase = Phase::frozen;
};

struct HeadStep {
    double loss = 0.0;
    Index active_classes = 0;
    HeadParams<Real> head_grad;
    FeatureStage<Real> trunk_grad;
};

/// One forward/backward pass over a batch with augmentation applied after the
/// attention block. `labels` index rows of `seen_classifiers`; the classifier
/// rows are constants. Gradients of generated samples are routed back to
/// their sources through the blend weights.
HeadStep head_step(const HeadModel& model, const std::vector<Matrix>& raw_batch, const std::vector<Index>& labels,
                   const Matrix& seen_classifiers, const AugmentConfig& augment, Rng& rng, bool with_trunk);

struct ShallowStep {
    double loss = 0.0;
    Index active_classes = 0;
    ShallowParams<Real> grad;
};

/// The toy path: augmentation acts directly on the flattened input, viewed as
/// an n x 1 attribute matrix, and on the class centroids.
ShallowStep shallow_step(const ShallowModel& model, const std::vector<Matrix>& raw_batch,
                         const std::vector<Index>& labels, const Matrix& seen_classifiers,
                         const AugmentConfig& augment, Rng& rng);

/// Shuffled mini-batches with one optimizer step each; returns the mean batch
/// loss. `trunk_opt == nullptr` keeps the feature stage frozen.
double train_epoch(HeadModel& model, const SampleSet& train, const ClassCatalog& catalog,
                   const AugmentConfig& augment, int batch_size, double lr, Optimizer& head_opt,
                   Optimizer* trunk_opt, Rng& rng);

double train_epoch(ShallowModel& model, const SampleSet& train, const ClassCatalog& catalog,
                   const AugmentConfig& augment, int batch_size, double lr, Optimizer& opt, Rng& rng);

/// Mean un-augmented cross-entropy over the seen classifiers.
double evaluation_loss(const HeadModel& model, const SampleSet& set, const ClassCatalog& catalog);

/// Head-only training for epochs_frozen at lr_frozen, then head and feature
/// stage together at lr_finetune. Each epoch ends with a validation gamma
/// sweep recorded as an EpochRecord.
std::vector<EpochRecord> two_phase_train(HeadModel& model, const SampleSet& train, const SampleSet& val_seen,
                                         const SampleSet& val_unseen, const ClassCatalog& catalog,
                                         const TrainConfig& cfg);

void record_curves(const std::vector<EpochRecord>& records, const std::filesystem::path& path);
std::vector<EpochRecord> read_curves(const std::filesystem::path& path);

/// Kendall rank correlation (tau-b) between a sequence and its index.
double kendall_tau_vs_index(const std::vector<double>& values);

}  // namespace fzsl

#endif  // FZSL_TRAIN_HPP
