#ifndef FZSL_EVALUATE_HPP
#define FZSL_EVALUATE_HPP

#include "fzsl/common.hpp"
#include "fzsl/data.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fzsl {

/// s~_i = s_i - gamma for seen classes; unseen scores untouched.
template <typename Scalar>
VectorX<Scalar> calibrated_scores(const VectorX<Scalar>& scores, const std::vector<bool>& seen_mask, Scalar gamma) {
    require(static_cast<Index>(seen_mask.size()) == scores.size(), "calibrated_scores: mask width differs");
    VectorX<Scalar> out = scores;
    for (Index i = 0; i < out.size(); ++i)
        if (seen_mask[static_cast<std::size_t>(i)]) out(i) -= gamma;
    return out;
}

double harmonic_mean(double acc_u, double acc_s);

/// Mean over `classes` of the fraction of that class's samples predicted
/// correctly. Throws ContractError naming any class without samples.
double per_class_accuracy(std::span<const Index> predictions, std::span<const Index> labels,
                          std::span<const Index> classes, std::map<Index, double>* per_class = nullptr);

/// Distinct labels in order of first appearance.
std::vector<Index> present_classes(std::span<const Index> labels);

struct MetricsReport {
    double acc_u = 0.0;
    double acc_s = 0.0;
    double hm = 0.0;
    std::optional<double> t1;
    std::map<std::string, double> per_class;
    double gamma_used = 0.0;

    nlohmann::json to_json() const;
    static MetricsReport from_json(const nlohmann::json& j);
};

struct GammaSweepResult {
    std::vector<double> grid;
    std::vector<double> hm_curve;
    std::vector<double> acc_u_curve;
    std::vector<double> acc_s_curve;
    double best_gamma = 0.0;
    double best_hm = 0.0;

    void write_csv(const std::filesystem::path& path) const;
};

/// Explicit values when given, otherwise `count` points over [0, spread] with
/// spread the range of seen-class scores on the validation shards.
struct GridSpec {
    int count = 201;
    std::vector<double> values;
};

/// Samples x classes scores, one row per sample of a shard.
struct ScoreTable {
    Matrix scores;
    std::vector<Index> labels;
};

template <typename Model>
ScoreTable score_table(const Model& model, const SampleSet& set, const Matrix& classifiers) {
    ScoreTable t{Matrix(static_cast<Index>(set.size()), classifiers.rows()), set.labels};
    for (std::size_t i = 0; i < set.size(); ++i)
        t.scores.row(static_cast<Index>(i)) = model.scores(set.features[i], classifiers).transpose();
    return t;
}

std::vector<Index> predict(const Matrix& scores, const std::vector<bool>& seen_mask, double gamma);

/// GZSL metrics from scores over every catalog class.
MetricsReport evaluate_gzsl(const ScoreTable& seen_shard, const ScoreTable& unseen_shard,
                            const ClassCatalog& catalog, double gamma);

/// T1 from scores over the unseen classifiers only (columns follow catalog.unseen()).
double evaluate_czsl(const ScoreTable& unseen_over_unseen, const ClassCatalog& catalog);

std::vector<double> gamma_grid(const ScoreTable& seen_shard, const ScoreTable& unseen_shard,
                               const ClassCatalog& catalog, const GridSpec& spec);

GammaSweepResult sweep_gamma(const ScoreTable& seen_shard, const ScoreTable& unseen_shard,
                             const ClassCatalog& catalog, const GridSpec& spec);

// Model-level entry points. A model exposes
// `Vector scores(const Matrix& features, const Matrix& classifiers) const`.

template <typename Model>
MetricsReport evaluate_gzsl(const Model& model, const SampleSet& test_seen, const SampleSet& test_unseen,
                            const ClassCatalog& catalog, double gamma) {
    return evaluate_gzsl(score_table(model, test_seen, catalog.attributes()),
                         score_table(model, test_unseen, catalog.attributes()), catalog, gamma);
}

template <typename Model>
double evaluate_czsl(const Model& model, const SampleSet& test_unseen, const ClassCatalog& catalog) {
    return evaluate_czsl(score_table(model, test_unseen, catalog.unseen_classifiers()), catalog);
}

template <typename Model>
GammaSweepResult sweep_gamma(const Model& model, const SampleSet& val_seen, const SampleSet& val_unseen,
                             const ClassCatalog& catalog, const GridSpec& spec = {}) {
    return sweep_gamma(score_table(model, val_seen, catalog.attributes()),
                       score_table(model, val_unseen, catalog.attributes()), catalog, spec);
}

}  // namespace fzsl

#endif  // FZSL_EVALUATE_HPP
