#include "fzsl/gradcheck.hpp"

#include "fzsl/rng.hpp"

namespace fzsl {

namespace {

Index between(Rng& rng, Index lo, Index hi) { return lo + static_cast<Index>(rng.below(static_cast<std::uint64_t>(hi - lo + 1))); }

Matrix normal_matrix(Rng& rng, Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
    return m;
}

Matrix soft_targets(Rng& rng, Index batch, Index classes) {
    Matrix t(batch, classes);
    for (Index i = 0; i < batch; ++i) {
        for (Index k = 0; k < classes; ++k) t(i, k) = rng.uniform() + 1e-3;
        t.row(i) /= t.row(i).sum();
    }
    return t;
}

}  // namespace

GradCheckReport gradcheck_head_instance(std::uint64_t seed, double tolerance, double step) {
    Rng rng = Rng(seed).fork("gradcheck/head");
    const HeadDims dims{between(rng, 2, 5), between(rng, 2, 4), between(rng, 2, 4)};
    const Index regions = between(rng, 2, 4), classes = between(rng, 2, 5), batch_size = between(rng, 1, 3);
    const auto params = init_head_params<Real>(dims, rng.next_u64());
    std::vector<Matrix> batch;
    for (Index b = 0; b < batch_size; ++b) batch.push_back(normal_matrix(rng, regions, dims.feature_dim));
    const Matrix classifiers = normal_matrix(rng, classes, dims.attributes);
    const Matrix targets = soft_targets(rng, batch_size, classes);
    const auto analytic = forward_backward<Real>(batch, targets, classifiers, params);
    return grad_check(
        params, analytic.grad,
        [&](const HeadParams<Real>& p) { return forward_backward<Real>(batch, targets, classifiers, p).loss; },
        tolerance, step);
}

GradCheckReport gradcheck_shallow_instance(std::uint64_t seed, double tolerance, double step) {
    Rng rng = Rng(seed).fork("gradcheck/shallow");
    const Index in = between(rng, 2, 4), hidden = between(rng, 3, 8), classes = between(rng, 2, 4);
    const Index batch_size = between(rng, 1, 4);
    const auto params = init_shallow_params<Real>(in, hidden, in, rng.next_u64());
    std::vector<Vector> inputs;
    for (Index b = 0; b < batch_size; ++b) inputs.push_back(normal_matrix(rng, in, 1).col(0));
    const Matrix classifiers = normal_matrix(rng, classes, in);
    const Matrix targets = soft_targets(rng, batch_size, classes);
    const auto analytic = forward_backward<Real>(inputs, targets, classifiers, params);
    return grad_check(
        params, analytic.grad,
        [&](const ShallowParams<Real>& p) { return forward_backward<Real>(inputs, targets, classifiers, p).loss; },
        tolerance, step);
}

std::vector<GradCheckInstance> gradcheck_suite(std::uint64_t seed, int head_instances, int shallow_instances,
                                               double tolerance, double step) {
    std::vector<GradCheckInstance> out;
    for (int k = 0; k < head_instances; ++k)
        out.push_back({"head", k, gradcheck_head_instance(Rng::mix(seed, "head/" + std::to_string(k)), tolerance, step)});
    for (int k = 0; k < shallow_instances; ++k)
        out.push_back(
            {"shallow", k, gradcheck_shallow_instance(Rng::mix(seed, "shallow/" + std::to_string(k)), tolerance, step)});
    return out;
}

nlohmann::json to_json(const std::vector<GradCheckInstance>& results) {
    nlohmann::json arr = nlohmann::json::array();
    bool all = true;
    for (const auto& r : results) {
        nlohmann::json blocks = nlohmann::json::array();
        for (const auto& b : r.report.blocks)
            blocks.push_back({{"block", b.name}, {"max_abs_error", b.max_abs_error}, {"relative_error", b.relative_error}});
        arr.push_back({{"kind", r.kind}, {"index", r.index}, {"passed", r.report.passed}, {"blocks", blocks}});
        all = all && r.report.passed;
    }
    return {{"passed", all}, {"instances", arr}};
}

}  // namespace fzsl
