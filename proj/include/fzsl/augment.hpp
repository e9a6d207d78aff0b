#ifndef FZSL_AUGMENT_HPP
#define FZSL_AUGMENT_HPP

#include "fzsl/common.hpp"
#include "fzsl/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fzsl {

// Every strategy operates on attribute-representative matrices H (n x f), i.e.
// after the attention block. `dropout` is plain dropout that keeps the source
// label; the toy experiment uses it as its third model.
enum class Strategy {
    none,
    fictitious_dropout,
    manifold_mixup,
    mixup_add,
    mixup_fictitious,
    features_cutmix,
    features_cutmix_add,
    cutmix_fictitious,
    dropout,
};

Strategy parse_strategy(std::string_view name);
const char* to_string(Strategy s);

/// `p` is the probability of DROPPING an attribute (b ~ Ber(1 - p) keeps it).
/// Published keep-rates (1 - p) must be converted before use.
struct AugmentConfig {
    Strategy strategy = Strategy::none;
    int m = 0;
    double p = 0.5;
    double mix_alpha = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Row j of a generated H equals sum_k row_weights[k](j) * H_{sources[k]} row j.
/// Generation is linear in the source matrices, so gradients route back by
/// the same weights.
template <typename Scalar>
struct Blend {
    std::vector<Index> sources;
    std::vector<VectorX<Scalar>> row_weights;

    static Blend identity(Index source, Index rows) {
        return {{source}, {VectorX<Scalar>::Ones(rows)}};
    }

    MatrixX<Scalar> realize(const std::vector<MatrixX<Scalar>>& batch) const {
        MatrixX<Scalar> out = MatrixX<Scalar>::Zero(batch.at(sources.front()).rows(), batch.at(sources.front()).cols());
        for (std::size_t k = 0; k < sources.size(); ++k)
            out.noalias() += row_weights[k].asDiagonal() * batch.at(static_cast<std::size_t>(sources[k]));
        return out;
    }
};

/// Generated samples assigned to new classes appended after the N_s seen
/// classifiers. extra_labels index the active classifier [seen; extra rows].
template <typename Scalar>
struct FictitiousBatch {
    std::vector<MatrixX<Scalar>> extra_H;
    MatrixX<Scalar> extra_attribute_rows;  // m x n
    std::vector<Index> extra_labels;
    std::vector<Index> source_indices;  // primary source of each generated sample
    std::vector<Mask> masks;            // dropout strategies only
    std::optional<MatrixX<Scalar>> soft_targets;
    std::vector<Blend<Scalar>> provenance;

    std::size_t size() const { return extra_H.size(); }

    MatrixX<Scalar> active_classifier(const MatrixX<Scalar>& seen_classifiers) const {
        MatrixX<Scalar> out(seen_classifiers.rows() + extra_attribute_rows.rows(), seen_classifiers.cols());
        out << seen_classifiers, extra_attribute_rows;
        return out;
    }
};

/// Complete replacement batch for label-mixing strategies.
template <typename Scalar>
struct MixedBatch {
    std::vector<MatrixX<Scalar>> H;
    MatrixX<Scalar> targets;  // rows are distributions over the seen classifiers
    std::vector<Blend<Scalar>> provenance;

    std::size_t size() const { return H.size(); }
};

/// Everything one training step feeds through the post-attention layers.
template <typename Scalar>
struct StepBatch {
    std::vector<MatrixX<Scalar>> H;
    std::vector<Blend<Scalar>> provenance;
    MatrixX<Scalar> targets;      // inputs x active classes
    MatrixX<Scalar> classifiers;  // active classes x n
};

// ---- primitives ---------------------------------------------------------------------

template <typename Scalar>
MatrixX<Scalar> apply_mask(const MatrixX<Scalar>& H, const Mask& mask) {
    require(mask.size() == H.rows(), "apply_mask: mask length differs from attribute count");
    return mask.template cast<Scalar>().asDiagonal() * H;
}

template <typename Scalar>
VectorX<Scalar> apply_mask(const VectorX<Scalar>& a, const Mask& mask) {
    require(mask.size() == a.size(), "apply_mask: mask length differs from attribute count");
    return a.cwiseProduct(mask.template cast<Scalar>());
}

/// Each attribute kept with probability 1 - p.
inline Mask sample_mask(Index n, double p, Rng& rng) {
    Mask mask(n);
    for (Index j = 0; j < n; ++j) mask(j) = rng.bernoulli(p) ? 0 : 1;
    return mask;
}

/// Uniform over all 2^n attribute subsets.
inline Mask sample_subset(Index n, Rng& rng) { return sample_mask(n, 0.5, rng); }

inline double subset_fraction(const Mask& subset) {
    return subset.size() == 0 ? 0.0 : static_cast<double>(subset.cast<int>().sum()) / static_cast<double>(subset.size());
}

/// Rows j in `subset` from H_a, the remaining rows from H_b.
template <typename Scalar>
MatrixX<Scalar> stitch(const MatrixX<Scalar>& Ha, const MatrixX<Scalar>& Hb, const Mask& subset) {
    require(Ha.rows() == Hb.rows() && Ha.cols() == Hb.cols() && subset.size() == Ha.rows(),
            "stitch: shapes disagree");
    MatrixX<Scalar> out = Hb;
    for (Index j = 0; j < subset.size(); ++j)
        if (subset(j)) out.row(j) = Ha.row(j);
    return out;
}

namespace detail {

inline void require_batch(std::size_t batch, std::size_t labels) {
    require(labels == batch, "augment: one label/target per batch member");
}

template <typename Scalar>
Blend<Scalar> mix_blend(Index a, Index b, Scalar lambda, Index rows) {
    return {{a, b}, {VectorX<Scalar>::Constant(rows, lambda), VectorX<Scalar>::Constant(rows, Scalar(1) - lambda)}};
}

template <typename Scalar>
Blend<Scalar> stitch_blend(Index a, Index b, const Mask& subset) {
    const VectorX<Scalar> w = subset.template cast<Scalar>();
    return {{a, b}, {w, VectorX<Scalar>::Ones(w.size()) - w}};
}

inline std::vector<std::pair<Index, Index>> half_pairs(std::size_t batch) {
    std::vector<std::pair<Index, Index>> pairs;
    const std::size_t half = batch / 2;
    for (std::size_t i = 0; i < half; ++i) pairs.emplace_back(static_cast<Index>(i), static_cast<Index>(i + half));
    return pairs;
}

inline std::vector<std::pair<Index, Index>> random_pairs(std::size_t batch, int m, Rng& rng) {
    std::vector<std::pair<Index, Index>> pairs;
    for (int i = 0; i < m; ++i) {
        const auto a = static_cast<Index>(rng.below(batch));
        const auto b = static_cast<Index>(rng.below(batch));
        pairs.emplace_back(a, b);
    }
    return pairs;
}

template <typename Scalar>
void append_original(MixedBatch<Scalar>& out, const std::vector<MatrixX<Scalar>>& batch_H,
                     const MatrixX<Scalar>& targets, std::size_t i, Index row) {
    out.H.push_back(batch_H[i]);
    out.provenance.push_back(Blend<Scalar>::identity(static_cast<Index>(i), batch_H[i].rows()));
    out.targets.row(row) = targets.row(static_cast<Index>(i));
}

}  // namespace detail

// ---- fictitious dropout -----------------------------------------------------------------

/// Deterministic core: sample `sources[i]` is masked by `masks[i]`, and the
/// same mask is applied to its class vector to form fictitious class N_s + i.
/// `labels` index rows of `seen_classifiers`.
template <typename Scalar>
FictitiousBatch<Scalar> fictitious_dropout(const std::vector<MatrixX<Scalar>>& batch_H,
                                           const std::vector<Index>& labels,
                                           const MatrixX<Scalar>& seen_classifiers,
                                           const std::vector<Index>& sources, const std::vector<Mask>& masks) {
    detail::require_batch(batch_H.size(), labels.size());
    require(sources.size() == masks.size(), "fictitious_dropout: one mask per source");
    require(sources.empty() || !batch_H.empty(), "fictitious_dropout: m > 0 needs a nonempty batch");
    const Index n = seen_classifiers.cols();
    const Index base = seen_classifiers.rows();
    FictitiousBatch<Scalar> out;
    out.extra_attribute_rows.resize(static_cast<Index>(sources.size()), n);
    for (std::size_t i = 0; i < sources.size(); ++i) {
        const auto src = static_cast<std::size_t>(sources[i]);
        require(src < batch_H.size(), "fictitious_dropout: source index out of range");
        require(labels[src] >= 0 && labels[src] < base, "fictitious_dropout: label outside seen classifiers");
        out.extra_H.push_back(apply_mask(batch_H[src], masks[i]));
        const VectorX<Scalar> a = seen_classifiers.row(labels[src]).transpose();
        out.extra_attribute_rows.row(static_cast<Index>(i)) = apply_mask(a, masks[i]).transpose();
        out.extra_labels.push_back(base + static_cast<Index>(i));
        out.source_indices.push_back(sources[i]);
        out.masks.push_back(masks[i]);
        out.provenance.push_back({{sources[i]}, {masks[i].template cast<Scalar>()}});
    }
    return out;
}

template <typename Scalar>
FictitiousBatch<Scalar> fictitious_dropout(const std::vector<MatrixX<Scalar>>& batch_H,
                                           const std::vector<Index>& labels,
                                           const MatrixX<Scalar>& seen_classifiers, const AugmentConfig& cfg,
                                           Rng& rng) {
    require(cfg.m == 0 || !batch_H.empty(), "fictitious_dropout: m > 0 needs a nonempty batch");
    std::vector<Index> sources;
    std::vector<Mask> masks;
    for (int i = 0; i < cfg.m; ++i) {
        sources.push_back(static_cast<Index>(rng.below(batch_H.size())));
        masks.push_back(sample_mask(seen_classifiers.cols(), cfg.p, rng));
    }
    return fictitious_dropout(batch_H, labels, seen_classifiers, sources, masks);
}

/// Plain dropout: m masked copies appended, each keeping its source target.
template <typename Scalar>
MixedBatch<Scalar> regular_dropout(const std::vector<MatrixX<Scalar>>& batch_H, const MatrixX<Scalar>& targets,
                                   const std::vector<Index>& sources, const std::vector<Mask>& masks) {
    detail::require_batch(batch_H.size(), static_cast<std::size_t>(targets.rows()));
    require(sources.size() == masks.size(), "regular_dropout: one mask per source");
    MixedBatch<Scalar> out;
    out.targets.resize(static_cast<Index>(batch_H.size() + sources.size()), targets.cols());
    for (std::size_t i = 0; i < batch_H.size(); ++i) detail::append_original(out, batch_H, targets, i, static_cast<Index>(i));
    for (std::size_t i = 0; i < sources.size(); ++i) {
        const auto src = static_cast<std::size_t>(sources[i]);
        out.H.push_back(apply_mask(batch_H.at(src), masks[i]));
        out.provenance.push_back({{sources[i]}, {masks[i].template cast<Scalar>()}});
        out.targets.row(static_cast<Index>(batch_H.size() + i)) = targets.row(sources[i]);
    }
    return out;
}

template <typename Scalar>
MixedBatch<Scalar> regular_dropout(const std::vector<MatrixX<Scalar>>& batch_H, const MatrixX<Scalar>& targets,
                                   const AugmentConfig& cfg, Rng& rng) {
    require(cfg.m == 0 || !batch_H.empty(), "regular_dropout: m > 0 needs a nonempty batch");
    std::vector<Index> sources;
    std::vector<Mask> masks;
    for (int i = 0; i < cfg.m; ++i) {
        sources.push_back(static_cast<Index>(rng.below(batch_H.size())));
        masks.push_back(sample_mask(batch_H.front().rows(), cfg.p, rng));
    }
    return regular_dropout(batch_H, targets, sources, masks);
}

// ---- mixup family ------------------------------------------------------------------------

/// First half mixed with second half; the result replaces the batch. An odd
/// leftover passes through unchanged; batches smaller than two pass through.
template <typename Scalar>
MixedBatch<Scalar> manifold_mixup(const std::vector<MatrixX<Scalar>>& batch_H, const MatrixX<Scalar>& targets,
                                  const std::vector<Scalar>& lambdas) {
    detail::require_batch(batch_H.size(), static_cast<std::size_t>(targets.rows()));
    const auto pairs = detail::half_pairs(batch_H.size());
    require(lambdas.size() == pairs.size(), "manifold_mixup: one lambda per pair");
    const bool odd = batch_H.size() % 2 == 1;
    MixedBatch<Scalar> out;
    out.targets.resize(static_cast<Index>(pairs.size() + (odd ? 1 : 0)), targets.cols());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto [a, b] = pairs[i];
        const Scalar l = lambdas[i];
        out.H.push_back(l * batch_H[a] + (Scalar(1) - l) * batch_H[b]);
        out.provenance.push_back(detail::mix_blend(a, b, l, batch_H[a].rows()));
        out.targets.row(static_cast<Index>(i)) = l * targets.row(a) + (Scalar(1) - l) * targets.row(b);
    }
    if (odd) detail::append_original(out, batch_H, targets, batch_H.size() - 1, static_cast<Index>(pairs.size()));
    return out;
}

template <typename Scalar>
MixedBatch<Scalar> manifold_mixup(const std::vector<MatrixX<Scalar>>& batch_H, const MatrixX<Scalar>& targets,
                                  const AugmentConfig& cfg, Rng& rng) {
    std::vector<Scalar> lambdas;
    for (std::size_t i = 0; i < batch_H.size() / 2; ++i)
        lambdas.push_back(static_cast<Scalar>(rng.beta(cfg.mix_alpha, cfg.mix_alpha)));
    return manifold_mixup(batch_H, targets, lambdas);
}

/// Mixed pairs appended to the untouched batch.
template <typename Scalar>
MixedBatch<Scalar> mixup_add(const std::vector<MatrixX<Scalar>>& batch_H, const MatrixX<Scalar>& targets,
                             const std::vector<std::pair<Index, Index>>& pairs, const std::vector<Scalar>& lambdas) {
    detail::require_batch(batch_H.size(), static_cast<std::size_t>(targets.rows()));
    require(lambdas.size() == pairs.size(), "mixup_add: one lambda per pair");
    MixedBatch<Scalar> out;
    out.targets.resize(static_cast<Index>(batch_H.size() + pairs.size()), targets.cols());
    for (std::size_t i = 0; i < batch_H.size(); ++i) detail::append_original(out, batch_H, targets, i, static_cast<Index>(i));
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto [a, b] = pairs[i];
        const Scalar l = lambdas[i];
        out.H.push_back(l * batch_H.at(a) + (Scalar(1) - l) * batch_H.at(b));
        out.provenance.push_back(detail::mix_blend(a, b, l, batch_H[a].rows()));
        out.targets.row(static_cast<Index>(batch_H.size() + i)) = l * targets.row(a) + (Scalar(1) - l) * targets.row(b);
    }
    return out;
}

template <typename Scalar>
MixedBatch<Scalar> mixup_add(const std::vector<MatrixX<Scalar>>& batch_H, const MatrixX<Scalar>& targets,
                             const AugmentConfig& cfg, Rng& rng) {
    if (batch_H.size() < 2) return mixup_add(batch_H, targets, {}, std::vector<Scalar>{});
    std::vector<std::pair<Index, Index>> pairs;
    std::vector<Scalar> lambdas;
    for (int i = 0; i < cfg.m; ++i) {
        pairs.push_back(detail::random_pairs(batch_H.size(), 1, rng).front());
        lambdas.push_back(static_cast<Scalar>(rng.beta(cfg.mix_alpha, cfg.mix_alpha)));
    }
    return mixup_add(batch_H, targets, pairs, lambdas);
}

/// Mixed pairs appended as new classes whose vectors mix the source classes.
template <typename Scalar>
FictitiousBatch<Scalar> mixup_fictitious(const std::vector<MatrixX<Scalar>>& batch_H,
                                         const std::vector<Index>& labels,
                                         const MatrixX<Scalar>& seen_classifiers,
                                         const std::vector<std::pair<Index, Index>>& pairs,
                                         const std::vector<Scalar>& lambdas) {
    detail::require_batch(batch_H.size(), labels.size());
    require(lambdas.size() == pairs.size(), "mixup_fictitious: one lambda per pair");
    const Index base = seen_classifiers.rows();
    FictitiousBatch<Scalar> out;
    out.extra_attribute_rows.resize(static_cast<Index>(pairs.size()), seen_classifiers.cols());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto [a, b] = pairs[i];
        const Scalar l = lambdas[i];
        out.extra_H.push_back(l * batch_H.at(a) + (Scalar(1) - l) * batch_H.at(b));
        out.extra_attribute_rows.row(static_cast<Index>(i)) =
            l * seen_classifiers.row(labels[a]) + (Scalar(1) - l) * seen_classifiers.row(labels[b]);
        out.extra_labels.push_back(base + static_cast<Index>(i));
        out.source_indices.push_back(a);
        out.provenance.push_back(detail::mix_blend(a, b, l, batch_H[a].rows()));
    }
    return out;
}

template <typename Scalar>
FictitiousBatch<Scalar> mixup_fictitious(const std::vector<MatrixX<Scalar>>& batch_H,
                                         const std::vector<Index>& labels,
                                         const MatrixX<Scalar>& seen_classifiers, const AugmentConfig& cfg,
                                         Rng& rng) {
    if (batch_H.size() < 2) return mixup_fictitious(batch_H, labels, seen_classifiers, {}, std::vector<Scalar>{});
    std::vector<std::pair<Index, Index>> pairs;
    std::vector<Scalar> lambdas;
    for (int i = 0; i < cfg.m; ++i) {
        pairs.push_back(detail::random_pairs(batch_H.size(), 1, rng).front());
        lambdas.push_back(static_cast<Scalar>(rng.beta(cfg.mix_alpha, cfg.mix_alpha)));
    }
    return mixup_fictitious(batch_H, labels, seen_classifiers, pairs, lambdas);
}

// ---- attribute-wise cutmix -------------------------------------------------------------

/// Rows in subsets[i] come from the pair's first member; the target mixes with
/// weight |S|/n. With add_to_batch the stitched samples are appended to the
/// batch, otherwise pairs are (first half, second half) and replace it.
template <typename Scalar>
MixedBatch<Scalar> features_cutmix(const std::vector<MatrixX<Scalar>>& batch_H, const MatrixX<Scalar>& targets,
                                   const std::vector<std::pair<Index, Index>>& pairs,
                                   const std::vector<Mask>& subsets, bool add_to_batch) {
    detail::require_batch(batch_H.size(), static_cast<std::size_t>(targets.rows()));
    require(subsets.size() == pairs.size(), "features_cutmix: one subset per pair");
    const bool odd = !add_to_batch && batch_H.size() % 2 == 1;
    const std::size_t kept = add_to_batch ? batch_H.size() : 0;
    MixedBatch<Scalar> out;
    out.targets.resize(static_cast<Index>(kept + pairs.size() + (odd ? 1 : 0)), targets.cols());
    for (std::size_t i = 0; i < kept; ++i) detail::append_original(out, batch_H, targets, i, static_cast<Index>(i));
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto [a, b] = pairs[i];
        const Scalar w = static_cast<Scalar>(subset_fraction(subsets[i]));
        out.H.push_back(stitch(batch_H.at(a), batch_H.at(b), subsets[i]));
        out.provenance.push_back(detail::stitch_blend<Scalar>(a, b, subsets[i]));
        out.targets.row(static_cast<Index>(kept + i)) = w * targets.row(a) + (Scalar(1) - w) * targets.row(b);
    }
    if (odd) detail::append_original(out, batch_H, targets, batch_H.size() - 1, static_cast<Index>(pairs.size()));
    return out;
}

template <typename Scalar>
MixedBatch<Scalar> features_cutmix(const std::vector<MatrixX<Scalar>>& batch_H, const MatrixX<Scalar>& targets,
                                   const AugmentConfig& cfg, bool add_to_batch, Rng& rng) {
    std::vector<std::pair<Index, Index>> pairs;
    if (add_to_batch) {
        if (batch_H.size() >= 2)
            for (int i = 0; i < cfg.m; ++i) pairs.push_back(detail::random_pairs(batch_H.size(), 1, rng).front());
    } else {
        pairs = detail::half_pairs(batch_H.size());
    }
    std::vector<Mask> subsets;
    for (std::size_t i = 0; i < pairs.size(); ++i) subsets.push_back(sample_subset(batch_H.front().rows(), rng));
    return features_cutmix(batch_H, targets, pairs, subsets, add_to_batch);
}

/// Stitched samples appended as new classes with vectors
/// (|S|/n) a_{y_a} + (1 - |S|/n) a_{y_b}.
template <typename Scalar>
FictitiousBatch<Scalar> cutmix_fictitious(const std::vector<MatrixX<Scalar>>& batch_H,
                                          const std::vector<Index>& labels,
                                          const MatrixX<Scalar>& seen_classifiers,
                                          const std::vector<std::pair<Index, Index>>& pairs,
                                          const std::vector<Mask>& subsets) {
    detail::require_batch(batch_H.size(), labels.size());
    require(subsets.size() == pairs.size(), "cutmix_fictitious: one subset per pair");
    const Index base = seen_classifiers.rows();
    FictitiousBatch<Scalar> out;
    out.extra_attribute_rows.resize(static_cast<Index>(pairs.size()), seen_classifiers.cols());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto [a, b] = pairs[i];
        const Scalar w = static_cast<Scalar>(subset_fraction(subsets[i]));
        out.extra_H.push_back(stitch(batch_H.at(a), batch_H.at(b), subsets[i]));
        out.extra_attribute_rows.row(static_cast<Index>(i)) =
            w * seen_classifiers.row(labels[a]) + (Scalar(1) - w) * seen_classifiers.row(labels[b]);
        out.extra_labels.push_back(base + static_cast<Index>(i));
        out.source_indices.push_back(a);
        out.provenance.push_back(detail::stitch_blend<Scalar>(a, b, subsets[i]));
    }
    return out;
}

template <typename Scalar>
FictitiousBatch<Scalar> cutmix_fictitious(const std::vector<MatrixX<Scalar>>& batch_H,
                                          const std::vector<Index>& labels,
                                          const MatrixX<Scalar>& seen_classifiers, const AugmentConfig& cfg,
                                          Rng& rng) {
    std::vector<std::pair<Index, Index>> pairs;
    std::vector<Mask> subsets;
    if (batch_H.size() >= 2)
        for (int i = 0; i < cfg.m; ++i) {
            pairs.push_back(detail::random_pairs(batch_H.size(), 1, rng).front());
            subsets.push_back(sample_subset(seen_classifiers.cols(), rng));
        }
    return cutmix_fictitious(batch_H, labels, seen_classifiers, pairs, subsets);
}

// ---- dispatch --------------------------------------------------------------------------

template <typename Scalar>
StepBatch<Scalar> with_fictitious(const std::vector<MatrixX<Scalar>>& batch_H, const std::vector<Index>& labels,
                                  const MatrixX<Scalar>& seen_classifiers, FictitiousBatch<Scalar> fict) {
    StepBatch<Scalar> step;
    step.classifiers = fict.active_classifier(seen_classifiers);
    const Index width = step.classifiers.rows();
    step.targets = MatrixX<Scalar>::Zero(static_cast<Index>(batch_H.size() + fict.size()), width);
    for (std::size_t i = 0; i < batch_H.size(); ++i) {
        step.H.push_back(batch_H[i]);
        step.provenance.push_back(Blend<Scalar>::identity(static_cast<Index>(i), batch_H[i].rows()));
        step.targets(static_cast<Index>(i), labels[i]) = Scalar(1);
    }
    for (std::size_t i = 0; i < fict.size(); ++i) {
        step.H.push_back(std::move(fict.extra_H[i]));
        step.provenance.push_back(std::move(fict.provenance[i]));
        step.targets(static_cast<Index>(batch_H.size() + i), fict.extra_labels[i]) = Scalar(1);
    }
    return step;
}

template <typename Scalar>
StepBatch<Scalar> from_mixed(MixedBatch<Scalar> mixed, const MatrixX<Scalar>& seen_classifiers) {
    return {std::move(mixed.H), std::move(mixed.provenance), std::move(mixed.targets), seen_classifiers};
}

/// Applies the configured strategy to one batch of attribute representatives.
/// `labels` index rows of `seen_classifiers`.
template <typename Scalar>
StepBatch<Scalar> augment_step(const std::vector<MatrixX<Scalar>>& batch_H, const std::vector<Index>& labels,
                               const MatrixX<Scalar>& seen_classifiers, const AugmentConfig& cfg, Rng& rng) {
    detail::require_batch(batch_H.size(), labels.size());
    const MatrixX<Scalar> onehot = [&] {
        MatrixX<Scalar> t = MatrixX<Scalar>::Zero(static_cast<Index>(labels.size()), seen_classifiers.rows());
        for (std::size_t i = 0; i < labels.size(); ++i) {
            require(labels[i] >= 0 && labels[i] < seen_classifiers.rows(), "augment: label outside seen classifiers");
            t(static_cast<Index>(i), labels[i]) = Scalar(1);
        }
        return t;
    }();
    switch (cfg.strategy) {
        case Strategy::none:
            return from_mixed(regular_dropout(batch_H, onehot, {}, {}), seen_classifiers);
        case Strategy::dropout:
            return from_mixed(regular_dropout(batch_H, onehot, cfg, rng), seen_classifiers);
        case Strategy::fictitious_dropout:
            return with_fictitious(batch_H, labels, seen_classifiers,
                                   fictitious_dropout(batch_H, labels, seen_classifiers, cfg, rng));
        case Strategy::manifold_mixup:
            return from_mixed(manifold_mixup(batch_H, onehot, cfg, rng), seen_classifiers);
        case Strategy::mixup_add:
            return from_mixed(mixup_add(batch_H, onehot, cfg, rng), seen_classifiers);
        case Strategy::mixup_fictitious:
            return with_fictitious(batch_H, labels, seen_classifiers,
                                   mixup_fictitious(batch_H, labels, seen_classifiers, cfg, rng));
        case Strategy::features_cutmix:
            return from_mixed(features_cutmix(batch_H, onehot, cfg, false, rng), seen_classifiers);
        case Strategy::features_cutmix_add:
            return from_mixed(features_cutmix(batch_H, onehot, cfg, true, rng), seen_classifiers);
        case Strategy::cutmix_fictitious:
            return with_fictitious(batch_H, labels, seen_classifiers,
                                   cutmix_fictitious(batch_H, labels, seen_classifiers, cfg, rng));
    }
    throw ContractError("augment_step: unknown strategy");
}

/// Audit dump: `sample_id,mask_bits`, one line per generated sample.
void write_mask_audit(const std::filesystem::path& path, const std::vector<std::string>& source_ids,
                      const std::vector<Mask>& masks);

template <typename Scalar>
void write_mask_audit(const std::filesystem::path& path, const std::vector<std::string>& batch_ids,
                      const FictitiousBatch<Scalar>& batch) {
    std::vector<std::string> ids;
    for (const Index s : batch.source_indices) ids.push_back(batch_ids.at(static_cast<std::size_t>(s)));
    write_mask_audit(path, ids, batch.masks);
}

}  // namespace fzsl

#endif  // FZSL_AUGMENT_HPP
