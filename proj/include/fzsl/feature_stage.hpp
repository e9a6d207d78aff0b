#ifndef FZSL_FEATURE_STAGE_HPP
#define FZSL_FEATURE_STAGE_HPP

#include "fzsl/common.hpp"
#include "fzsl/model.hpp"

#include <array>

namespace fzsl {

/// Trainable stand-in for a backbone: region features pass through
/// tanh(X W + b) row by row, or through unchanged for precomputed features.
template <typename Scalar>
struct FeatureStage {
    enum class Kind { identity, tanh };

    Kind kind = Kind::identity;
    MatrixX<Scalar> W;  // f_in x f
    VectorX<Scalar> b;

    static FeatureStage identity() { return {}; }
    static FeatureStage tanh_stage(MatrixX<Scalar> W, VectorX<Scalar> b) {
        require(W.cols() == b.size(), "feature stage: bias width differs from W");
        return {Kind::tanh, std::move(W), std::move(b)};
    }

    bool trainable() const { return kind == Kind::tanh; }
    Index output_dim(Index input_dim) const { return trainable() ? W.cols() : input_dim; }

    FeatureStage zeros_like() const {
        return {kind, MatrixX<Scalar>::Zero(W.rows(), W.cols()), VectorX<Scalar>::Zero(b.size())};
    }

    std::array<ParamBlock<Scalar>, 2> blocks() { return {make_block<Scalar>("trunk_W", W), make_block<Scalar>("trunk_b", b)}; }
    std::array<ParamBlock<const Scalar>, 2> blocks() const {
        auto self = const_cast<FeatureStage*>(this)->blocks();
        return {ParamBlock<const Scalar>{self[0].name, self[0].values, self[0].rows, self[0].cols},
                ParamBlock<const Scalar>{self[1].name, self[1].values, self[1].rows, self[1].cols}};
    }

    MatrixX<Scalar> forward(const MatrixX<Scalar>& X) const {
        if (!trainable()) return X;
        require(X.cols() == W.rows(), "feature stage: input width differs from W rows");
        return ((X * W).rowwise() + b.transpose()).array().tanh().matrix();
    }

    /// Accumulates parameter gradients given the forward output `F`.
    void backward(const MatrixX<Scalar>& X, const MatrixX<Scalar>& F, const MatrixX<Scalar>& dF,
                  FeatureStage& grads) const {
        if (!trainable()) return;
        const MatrixX<Scalar> dpre = dF.array() * (Scalar(1) - F.array().square());
        grads.W.noalias() += X.transpose() * dpre;
        grads.b += dpre.colwise().sum().transpose();
    }
};

}  // namespace fzsl

#endif  // FZSL_FEATURE_STAGE_HPP
