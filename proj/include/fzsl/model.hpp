#ifndef FZSL_MODEL_HPP
#define FZSL_MODEL_HPP

#include "fzsl/common.hpp"
#include "fzsl/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fzsl {

/// Flat view of one parameter matrix, used by optimizers, the gradient checker
/// and checkpoints. Eigen storage is contiguous column-major.
template <typename Scalar>
struct ParamBlock {
    std::string_view name;
    std::span<Scalar> values;
    Index rows;
    Index cols;
};

template <typename Scalar, typename Derived>
ParamBlock<Scalar> make_block(std::string_view name, Eigen::PlainObjectBase<Derived>& m) {
    return {name, std::span<Scalar>(m.data(), static_cast<std::size_t>(m.size())), m.rows(), m.cols()};
}

constexpr double kSigmoidClamp = 30.0;

template <typename Scalar>
Scalar sigmoid(Scalar x) {
    x = std::clamp<Scalar>(x, -kSigmoidClamp, kSigmoidClamp);
    return Scalar(1) / (Scalar(1) + std::exp(-x));
}

template <typename Scalar>
VectorX<Scalar> softmax(const VectorX<Scalar>& logits) {
    VectorX<Scalar> p = (logits.array() - logits.maxCoeff()).exp();
    return p / p.sum();
}

template <typename Scalar>
VectorX<Scalar> log_softmax(const VectorX<Scalar>& logits) {
    const Scalar shift = logits.maxCoeff();
    const Scalar lse = shift + std::log((logits.array() - shift).exp().sum());
    return logits.array() - lse;
}

/// Cross-entropy against a target distribution over the active classifier
/// set. Returns the loss; writes d loss / d scores into `dscores`.
template <typename Scalar>
Scalar cross_entropy(const VectorX<Scalar>& scores, const VectorX<Scalar>& target,
                     VectorX<Scalar>& dscores) {
    require(scores.size() == target.size(), "cross_entropy: target width differs from score width");
    const VectorX<Scalar> logp = log_softmax(scores);
    dscores = logp.array().exp().matrix() - target;
    Scalar loss = 0;
    for (Index k = 0; k < target.size(); ++k)
        if (target(k) != Scalar(0)) loss -= target(k) * logp(k);
    return loss;
}

template <typename Scalar>
VectorX<Scalar> one_hot(Index label, Index classes) {
    require(label >= 0 && label < classes,
            "label " + std::to_string(label) + " outside classifier set of " + std::to_string(classes));
    VectorX<Scalar> t = VectorX<Scalar>::Zero(classes);
    t(label) = Scalar(1);
    return t;
}

// ---- attribute-attention head ---------------------------------------------------

struct HeadDims {
    Index attributes = 0;   // n
    Index feature_dim = 0;  // f
    Index embed_dim = 16;   // d_v
};

template <typename Scalar>
struct HeadParams {
    MatrixX<Scalar> V;        // n x d_v, rows v_j
    MatrixX<Scalar> W_alpha;  // f x d_v
    MatrixX<Scalar> W_beta;   // d_v x f
    MatrixX<Scalar> W_e;      // d_v x f

    static HeadParams zeros(const HeadDims& d) {
        return {MatrixX<Scalar>::Zero(d.attributes, d.embed_dim),
                MatrixX<Scalar>::Zero(d.feature_dim, d.embed_dim),
                MatrixX<Scalar>::Zero(d.embed_dim, d.feature_dim),
                MatrixX<Scalar>::Zero(d.embed_dim, d.feature_dim)};
    }

    HeadDims dims() const { return {V.rows(), W_alpha.rows(), V.cols()}; }

    std::array<ParamBlock<Scalar>, 4> blocks() {
        return {make_block<Scalar>("V", V), make_block<Scalar>("W_alpha", W_alpha),
                make_block<Scalar>("W_beta", W_beta), make_block<Scalar>("W_e", W_e)};
    }
    std::array<ParamBlock<const Scalar>, 4> blocks() const {
        auto self = const_cast<HeadParams*>(this)->blocks();
        std::array<ParamBlock<const Scalar>, 4> out;
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = {self[i].name, self[i].values, self[i].rows, self[i].cols};
        return out;
    }

    void validate() const {
        const HeadDims d = dims();
        require(d.attributes > 0 && d.feature_dim > 0 && d.embed_dim > 0, "head dims must be positive");
        require(W_alpha.cols() == d.embed_dim && W_beta.rows() == d.embed_dim &&
                    W_beta.cols() == d.feature_dim && W_e.rows() == d.embed_dim &&
                    W_e.cols() == d.feature_dim,
                "head parameter shapes disagree");
        if (!(V.allFinite() && W_alpha.allFinite() && W_beta.allFinite() && W_e.allFinite()))
            throw NumericError("head parameters contain non-finite entries");
    }
};

template <typename Scalar>
struct AttentionOutput {
    MatrixX<Scalar> A;  // R x n, columns sum to one
    MatrixX<Scalar> H;  // n x f, rows h_j
};

template <typename Scalar>
struct EmbedOutput {
    VectorX<Scalar> z;
    VectorX<Scalar> gate;  // pre-sigmoid v_j W_e h_j
    VectorX<Scalar> e;
    VectorX<Scalar> psi;
};

template <typename Scalar>
struct ForwardTrace {
    MatrixX<Scalar> A;
    MatrixX<Scalar> H;
    VectorX<Scalar> z;
    VectorX<Scalar> gate;
    VectorX<Scalar> e;
    VectorX<Scalar> psi;
    VectorX<Scalar> scores;
};

/// A_{i,j} = softmax over regions i of x_i W_alpha v_j; h_j = sum_r A_{r,j} x_r.
template <typename Scalar>
AttentionOutput<Scalar> attention_forward(const MatrixX<Scalar>& features, const HeadParams<Scalar>& params) {
    require(features.cols() == params.W_alpha.rows(),
            "attention: feature width " + std::to_string(features.cols()) + " != W_alpha rows " +
                std::to_string(params.W_alpha.rows()));
    if (!features.allFinite()) throw NumericError("attention: non-finite region features");
    const MatrixX<Scalar> logits = features * (params.W_alpha * params.V.transpose());
    MatrixX<Scalar> A(logits.rows(), logits.cols());
    for (Index j = 0; j < logits.cols(); ++j) {
        const auto col = logits.col(j);
        A.col(j) = (col.array() - col.maxCoeff()).exp();
        A.col(j) /= A.col(j).sum();
    }
    if (!A.allFinite()) throw NumericError("attention: non-finite attention weights");
    MatrixX<Scalar> H = A.transpose() * features;
    return {std::move(A), std::move(H)};
}

/// z_j = v_j W_beta h_j, e_j = sigmoid(v_j W_e h_j), psi = z * e.
template <typename Scalar>
EmbedOutput<Scalar> embed_forward(const MatrixX<Scalar>& H, const HeadParams<Scalar>& params) {
    require(H.rows() == params.V.rows() && H.cols() == params.W_beta.cols(),
            "embed: H shape disagrees with head parameters");
    const MatrixX<Scalar> P = params.V * params.W_beta;
    const MatrixX<Scalar> Q = params.V * params.W_e;
    EmbedOutput<Scalar> out;
    out.z = (P.array() * H.array()).rowwise().sum();
    out.gate = (Q.array() * H.array()).rowwise().sum();
    out.e = out.gate.unaryExpr([](Scalar g) { return sigmoid(g); });
    out.psi = out.z.cwiseProduct(out.e);
    return out;
}

/// s_k = psi . classifiers_k
template <typename Scalar>
VectorX<Scalar> score_classes(const VectorX<Scalar>& psi, const MatrixX<Scalar>& classifiers) {
    require(classifiers.cols() == psi.size(),
            "score_classes: classifier width " + std::to_string(classifiers.cols()) +
                " != embedding width " + std::to_string(psi.size()));
    return classifiers * psi;
}

template <typename Scalar>
ForwardTrace<Scalar> head_forward(const MatrixX<Scalar>& features, const HeadParams<Scalar>& params,
                                  const MatrixX<Scalar>& classifiers) {
    auto att = attention_forward(features, params);
    auto emb = embed_forward(att.H, params);
    VectorX<Scalar> scores = score_classes(emb.psi, classifiers);
    return {std::move(att.A), std::move(att.H), std::move(emb.z), std::move(emb.gate),
            std::move(emb.e), std::move(emb.psi), std::move(scores)};
}

/// Backprop d loss / d psi through the gated bilinear pair. Accumulates into
/// grads.V / W_beta / W_e and returns d loss / d H.
template <typename Scalar>
MatrixX<Scalar> embed_backward(const MatrixX<Scalar>& H, const EmbedOutput<Scalar>& fwd,
                               const VectorX<Scalar>& dpsi, const HeadParams<Scalar>& params,
                               HeadParams<Scalar>& grads) {
    const VectorX<Scalar> dz = dpsi.cwiseProduct(fwd.e);
    VectorX<Scalar> dgate(fwd.gate.size());
    for (Index j = 0; j < dgate.size(); ++j) {
        const Scalar ej = fwd.e(j);
        dgate(j) = std::abs(fwd.gate(j)) < Scalar(kSigmoidClamp) ? dpsi(j) * fwd.z(j) * ej * (1 - ej) : Scalar(0);
    }
    const MatrixX<Scalar> dP = dz.asDiagonal() * H;
    const MatrixX<Scalar> dQ = dgate.asDiagonal() * H;
    grads.W_beta.noalias() += params.V.transpose() * dP;
    grads.W_e.noalias() += params.V.transpose() * dQ;
    grads.V.noalias() += dP * params.W_beta.transpose() + dQ * params.W_e.transpose();
    return dz.asDiagonal() * (params.V * params.W_beta) + dgate.asDiagonal() * (params.V * params.W_e);
}

/// Backprop d loss / d H through the region softmax. Accumulates into
/// grads.V / W_alpha and returns d loss / d features.
template <typename Scalar>
MatrixX<Scalar> attention_backward(const MatrixX<Scalar>& features, const MatrixX<Scalar>& A,
                                   const MatrixX<Scalar>& dH, const HeadParams<Scalar>& params,
                                   HeadParams<Scalar>& grads) {
    const MatrixX<Scalar> dA = features * dH.transpose();  // R x n
    MatrixX<Scalar> dfeatures = A * dH;
    const RowVectorX<Scalar> inner = (A.array() * dA.array()).colwise().sum();
    const MatrixX<Scalar> dlogits = A.array() * (dA.rowwise() - inner).array();
    const MatrixX<Scalar> M = params.W_alpha * params.V.transpose();  // f x n
    const MatrixX<Scalar> dM = features.transpose() * dlogits;
    dfeatures.noalias() += dlogits * M.transpose();
    grads.W_alpha.noalias() += dM * params.V;
    grads.V.noalias() += dM.transpose() * params.W_alpha;
    return dfeatures;
}

template <typename Params, typename Scalar = double>
struct LossAndGrad {
    Scalar loss = 0;
    Params grad;
};

/// Mean soft-target cross-entropy over a batch and its gradient with respect
/// to every head parameter. Row b of `targets` is the distribution over the
/// rows of `classifiers` for sample b; the classifiers stay constant.
template <typename Scalar>
LossAndGrad<HeadParams<Scalar>, Scalar> forward_backward(const std::vector<MatrixX<Scalar>>& batch,
                                                         const MatrixX<Scalar>& targets,
                                                         const MatrixX<Scalar>& classifiers,
                                                         const HeadParams<Scalar>& params) {
    require(!batch.empty(), "forward_backward: empty batch");
    require(targets.rows() == static_cast<Index>(batch.size()) && targets.cols() == classifiers.rows(),
            "forward_backward: targets must be batch x classes");
    LossAndGrad<HeadParams<Scalar>, Scalar> out{0, HeadParams<Scalar>::zeros(params.dims())};
    const Scalar scale = Scalar(1) / static_cast<Scalar>(batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const auto att = attention_forward(batch[b], params);
        const auto emb = embed_forward(att.H, params);
        const VectorX<Scalar> scores = score_classes(emb.psi, classifiers);
        VectorX<Scalar> dscores;
        out.loss += scale * cross_entropy<Scalar>(scores, targets.row(static_cast<Index>(b)).transpose(), dscores);
        const VectorX<Scalar> dpsi = classifiers.transpose() * (scale * dscores);
        const MatrixX<Scalar> dH = embed_backward(att.H, emb, dpsi, params, out.grad);
        attention_backward(batch[b], att.A, dH, params, out.grad);
    }
    if (!std::isfinite(out.loss)) throw NumericError("forward_backward: non-finite loss");
    return out;
}

template <typename Scalar>
MatrixX<Scalar> one_hot_rows(const std::vector<Index>& labels, Index classes) {
    MatrixX<Scalar> t = MatrixX<Scalar>::Zero(static_cast<Index>(labels.size()), classes);
    for (std::size_t i = 0; i < labels.size(); ++i)
        t.row(static_cast<Index>(i)) = one_hot<Scalar>(labels[i], classes).transpose();
    return t;
}

template <typename Scalar>
LossAndGrad<HeadParams<Scalar>, Scalar> forward_backward(const std::vector<MatrixX<Scalar>>& batch,
                                                         const std::vector<Index>& labels,
                                                         const MatrixX<Scalar>& classifiers,
                                                         const HeadParams<Scalar>& params) {
    require(labels.size() == batch.size(), "forward_backward: one label per sample");
    return forward_backward(batch, one_hot_rows<Scalar>(labels, classifiers.rows()), classifiers, params);
}

// ---- shallow scorer (toy network) -------------------------------------------------------

template <typename Scalar>
struct ShallowParams {
    MatrixX<Scalar> W1;  // in x hidden
    VectorX<Scalar> b1;
    MatrixX<Scalar> W2;  // hidden x out
    VectorX<Scalar> b2;

    static ShallowParams zeros(Index in, Index hidden, Index out) {
        return {MatrixX<Scalar>::Zero(in, hidden), VectorX<Scalar>::Zero(hidden),
                MatrixX<Scalar>::Zero(hidden, out), VectorX<Scalar>::Zero(out)};
    }
    ShallowParams zeros_like() const { return zeros(W1.rows(), W1.cols(), W2.cols()); }

    Index input_dim() const { return W1.rows(); }
    Index hidden_dim() const { return W1.cols(); }
    Index output_dim() const { return W2.cols(); }

    std::array<ParamBlock<Scalar>, 4> blocks() {
        return {make_block<Scalar>("W1", W1), make_block<Scalar>("b1", b1),
                make_block<Scalar>("W2", W2), make_block<Scalar>("b2", b2)};
    }
    std::array<ParamBlock<const Scalar>, 4> blocks() const {
        auto self = const_cast<ShallowParams*>(this)->blocks();
        std::array<ParamBlock<const Scalar>, 4> out;
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = {self[i].name, self[i].values, self[i].rows, self[i].cols};
        return out;
    }

    void validate() const {
        require(W1.cols() == b1.size() && W2.rows() == b1.size() && W2.cols() == b2.size(),
                "shallow parameter shapes disagree");
        if (!(W1.allFinite() && b1.allFinite() && W2.allFinite() && b2.allFinite()))
            throw NumericError("shallow parameters contain non-finite entries");
    }
};

template <typename Scalar>
struct ShallowTrace {
    VectorX<Scalar> pre;  // W1^T x + b1
    VectorX<Scalar> hidden;
    VectorX<Scalar> embedding;
    VectorX<Scalar> scores;
};

/// embedding = W2^T relu(W1^T x + b1) + b2; scores = classifiers * embedding.
template <typename Scalar>
ShallowTrace<Scalar> shallow_forward(const VectorX<Scalar>& x, const ShallowParams<Scalar>& params,
                                     const MatrixX<Scalar>& classifiers) {
    require(x.size() == params.input_dim(), "shallow: input width disagrees with W1");
    ShallowTrace<Scalar> t;
    t.pre = params.W1.transpose() * x + params.b1;
    t.hidden = t.pre.cwiseMax(Scalar(0));
    t.embedding = params.W2.transpose() * t.hidden + params.b2;
    t.scores = score_classes(t.embedding, classifiers);
    return t;
}

template <typename Scalar>
void shallow_backward(const VectorX<Scalar>& x, const ShallowTrace<Scalar>& t,
                      const VectorX<Scalar>& dembedding, const ShallowParams<Scalar>& params,
                      ShallowParams<Scalar>& grads) {
    grads.W2.noalias() += t.hidden * dembedding.transpose();
    grads.b2 += dembedding;
    const VectorX<Scalar> dpre =
        (params.W2 * dembedding).cwiseProduct((t.pre.array() > Scalar(0)).template cast<Scalar>().matrix());
    grads.W1.noalias() += x * dpre.transpose();
    grads.b1 += dpre;
}

template <typename Scalar>
LossAndGrad<ShallowParams<Scalar>, Scalar> forward_backward(const std::vector<VectorX<Scalar>>& inputs,
                                                            const MatrixX<Scalar>& targets,
                                                            const MatrixX<Scalar>& classifiers,
                                                            const ShallowParams<Scalar>& params) {
    require(!inputs.empty(), "forward_backward: empty batch");
    require(targets.rows() == static_cast<Index>(inputs.size()) && targets.cols() == classifiers.rows(),
            "forward_backward: targets must be batch x classes");
    LossAndGrad<ShallowParams<Scalar>, Scalar> out{0, params.zeros_like()};
    const Scalar scale = Scalar(1) / static_cast<Scalar>(inputs.size());
    for (std::size_t b = 0; b < inputs.size(); ++b) {
        const auto t = shallow_forward(inputs[b], params, classifiers);
        VectorX<Scalar> dscores;
        out.loss += scale * cross_entropy<Scalar>(t.scores, targets.row(static_cast<Index>(b)).transpose(), dscores);
        shallow_backward<Scalar>(inputs[b], t, classifiers.transpose() * (scale * dscores), params, out.grad);
    }
    if (!std::isfinite(out.loss)) throw NumericError("forward_backward: non-finite loss");
    return out;
}

template <typename Scalar>
LossAndGrad<ShallowParams<Scalar>, Scalar> forward_backward(const std::vector<VectorX<Scalar>>& inputs,
                                                            const std::vector<Index>& labels,
                                                            const MatrixX<Scalar>& classifiers,
                                                            const ShallowParams<Scalar>& params) {
    require(labels.size() == inputs.size(), "forward_backward: one label per sample");
    return forward_backward(inputs, one_hot_rows<Scalar>(labels, classifiers.rows()), classifiers, params);
}

// ---- initialization -----------------------------------------------------------------------

namespace detail {
template <typename Scalar, typename Derived>
void fill_normal(Eigen::PlainObjectBase<Derived>& m, Rng rng, double stddev) {
    for (Index j = 0; j < m.cols(); ++j)
        for (Index i = 0; i < m.rows(); ++i) m(i, j) = static_cast<Scalar>(rng.normal() * stddev);
}
}  // namespace detail

/// V ~ N(0, 1); W_alpha, W_beta, W_e ~ N(0, 1/f), all driven by the seed.
template <typename Scalar = double>
HeadParams<Scalar> init_head_params(const HeadDims& dims, std::uint64_t seed) {
    require(dims.attributes > 0 && dims.feature_dim > 0 && dims.embed_dim > 0,
            "init_head_params: dims must be positive");
    auto p = HeadParams<Scalar>::zeros(dims);
    const Rng root(seed);
    const double s = 1.0 / std::sqrt(static_cast<double>(dims.feature_dim));
    detail::fill_normal<Scalar>(p.V, root.fork("head/V"), 1.0);
    detail::fill_normal<Scalar>(p.W_alpha, root.fork("head/W_alpha"), s);
    detail::fill_normal<Scalar>(p.W_beta, root.fork("head/W_beta"), s);
    detail::fill_normal<Scalar>(p.W_e, root.fork("head/W_e"), s);
    return p;
}

/// Weights and biases ~ N(0, 1/fan_in) with fan_in the layer's input width.
template <typename Scalar = double>
ShallowParams<Scalar> init_shallow_params(Index in, Index hidden, Index out, std::uint64_t seed) {
    require(in > 0 && hidden > 0 && out > 0, "init_shallow_params: dims must be positive");
    auto p = ShallowParams<Scalar>::zeros(in, hidden, out);
    const Rng root(seed);
    const double s1 = 1.0 / std::sqrt(static_cast<double>(in));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    detail::fill_normal<Scalar>(p.W1, root.fork("shallow/W1"), s1);
    detail::fill_normal<Scalar>(p.b1, root.fork("shallow/b1"), s1);
    detail::fill_normal<Scalar>(p.W2, root.fork("shallow/W2"), s2);
    detail::fill_normal<Scalar>(p.b2, root.fork("shallow/b2"), s2);
    return p;
}

// ---- finite-difference gradient checker -------------------------------------------------

struct BlockCheck {
    std::string name;
    double max_abs_error = 0.0;
    double relative_error = 0.0;  // max |analytic - numeric| / max(|analytic|, |numeric|) over the block
};

struct GradCheckReport {
    std::vector<BlockCheck> blocks;
    double tolerance = 0.0;
    bool passed = true;

    double worst() const {
        double w = 0.0;
        for (const auto& b : blocks) w = std::max(w, b.relative_error);
        return w;
    }
};

// Denominator floor for the block-relative error. Below it the check is
// effectively absolute, which keeps round-off in the differences (~1e-10 for
// O(1) losses at step 1e-6) from failing blocks whose true gradient is zero.
constexpr double kGradCheckFloor = 1e-4;

/// Central differences over every entry of every block of `params`. The
/// relative error is taken per block against the block's largest gradient
/// magnitude; an all-zero block reports zero error.
template <typename Params, typename LossFn>
GradCheckReport grad_check(const Params& params, const Params& analytic, LossFn&& loss,
                           double tolerance, double step = 1e-6) {
    GradCheckReport report;
    report.tolerance = tolerance;
    Params probe = params;
    auto probe_blocks = probe.blocks();
    const auto analytic_blocks = analytic.blocks();
    for (std::size_t b = 0; b < probe_blocks.size(); ++b) {
        auto& block = probe_blocks[b];
        const auto& expected = analytic_blocks[b].values;
        require(expected.size() == block.values.size(), "grad_check: gradient shape mismatch");
        double max_err = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < block.values.size(); ++i) {
            const auto saved = block.values[i];
            block.values[i] = saved + step;
            const double up = static_cast<double>(loss(probe));
            block.values[i] = saved - step;
            const double down = static_cast<double>(loss(probe));
            block.values[i] = saved;
            const double numeric = (up - down) / (2.0 * step);
            const double a = static_cast<double>(expected[i]);
            max_err = std::max(max_err, std::abs(a - numeric));
            scale = std::max({scale, std::abs(a), std::abs(numeric)});
        }
        const double rel = max_err > 0.0 ? max_err / std::max(scale, kGradCheckFloor) : 0.0;
        report.blocks.push_back({std::string(block.name), max_err, rel});
        if (!(rel < tolerance)) report.passed = false;
    }
    return report;
}

}  // namespace fzsl

#endif  // FZSL_MODEL_HPP
