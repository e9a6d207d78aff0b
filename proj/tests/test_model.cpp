#include "fzsl/data.hpp"
#include "fzsl/gradcheck.hpp"
#include "fzsl/model.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace fzsl;
using namespace fzsl::testing;

namespace {

HeadParams<Real> random_head(Rng& rng, const HeadDims& d) { return init_head_params<Real>(d, rng.next_u64()); }

HeadParams<Real> scalar_head(double v, double wa, double wb, double we) {
    HeadParams<Real> p = HeadParams<Real>::zeros({1, 1, 1});
    p.V(0, 0) = v;
    p.W_alpha(0, 0) = wa;
    p.W_beta(0, 0) = wb;
    p.W_e(0, 0) = we;
    return p;
}

}  // namespace

TEST_CASE("attention columns are softmax distributions over regions") {
    Rng rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        const HeadDims d{random_int(rng, 1, 6), random_int(rng, 1, 5), random_int(rng, 1, 4)};
        const Index R = random_int(rng, 1, 7);
        const auto p = random_head(rng, d);
        const Matrix X = random_matrix(rng, R, d.feature_dim, 3.0);
        const auto out = attention_forward(X, p);
        REQUIRE(out.A.rows() == R);
        REQUIRE(out.A.cols() == d.attributes);
        for (Index j = 0; j < d.attributes; ++j) CHECK(std::abs(out.A.col(j).sum() - 1.0) < 1e-9);
        CHECK((out.A.array() >= 0.0).all());
        CHECK((out.H - out.A.transpose() * X).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("single-region attention is all ones and copies the region") {
    Rng rng(2);
    const auto p = random_head(rng, {3, 4, 2});
    const Matrix X = random_matrix(rng, 1, 4);
    const auto out = attention_forward(X, p);
    CHECK(out.A.isOnes());
    for (Index j = 0; j < 3; ++j) CHECK(out.H.row(j) == X.row(0));
}

TEST_CASE("equal logits give uniform attention") {
    Rng rng(3);
    const auto p = random_head(rng, {2, 3, 2});
    Matrix X(4, 3);
    X.rowwise() = random_vector(rng, 3).transpose();
    const auto out = attention_forward(X, p);
    CHECK((out.A.array() - 0.25).abs().maxCoeff() < 1e-15);
}

TEST_CASE("closed-form two-region softmax") {
    const auto p = scalar_head(1.0, 1.0, 0.0, 0.0);
    Matrix X(2, 1);
    X << std::log(2.0), 0.0;
    const auto out = attention_forward(X, p);
    CHECK(out.A(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(out.A(1, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("embed_forward special cases") {
    Rng rng(4);
    auto p = random_head(rng, {3, 4, 2});
    const Matrix H = random_matrix(rng, 3, 4);

    p.W_beta.setZero();
    auto out = embed_forward(H, p);
    CHECK(out.z.isZero());
    CHECK(out.psi.isZero());

    p = random_head(rng, {3, 4, 2});
    p.W_e.setZero();
    out = embed_forward(H, p);
    CHECK((out.e.array() == 0.5).all());
    CHECK(out.psi == 0.5 * out.z);

    const auto s = scalar_head(2.0, 0.0, 3.0, 0.0);
    const auto one = embed_forward(Matrix(Matrix::Ones(1, 1)), s);
    CHECK(out.psi.size() == 3);
    CHECK(one.z(0) == 6.0);
}

TEST_CASE("gates stay in (0,1) and psi = z * e") {
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const auto p = random_head(rng, {4, 3, 3});
        const auto out = embed_forward(random_matrix(rng, 4, 3, 20.0), p);
        CHECK((out.e.array() > 0.0).all());
        CHECK((out.e.array() < 1.0).all());
        CHECK(out.psi == out.z.cwiseProduct(out.e));
    }
    CHECK(sigmoid(1e6) < 1.0);
    CHECK(sigmoid(-1e6) > 0.0);
    CHECK(std::isfinite(sigmoid(-1e308)));
}

TEST_CASE("score_classes examples") {
    const Vector psi = (Vector(2) << 1, 2).finished();
    const Matrix cls = (Matrix(2, 2) << 1, 0, 1, 1).finished();
    const Vector s = score_classes(psi, cls);
    CHECK(s(0) == 1.0);
    CHECK(s(1) == 3.0);
    CHECK(score_classes(Vector(Vector::Zero(2)), cls).isZero());
    CHECK(score_classes(psi, Matrix(Matrix::Identity(2, 2))) == psi);
    CHECK_THROWS_AS(score_classes(psi, Matrix(Matrix::Identity(3, 3))), ContractError);
}

TEST_CASE("score_classes is linear in psi") {
    Rng rng(6);
    for (int trial = 0; trial < 500; ++trial) {
        const Index n = random_int(rng, 1, 6), K = random_int(rng, 1, 6);
        const Matrix cls = random_matrix(rng, K, n);
        const Vector a = random_vector(rng, n), b = random_vector(rng, n);
        const double al = rng.normal(), be = rng.normal();
        const Vector lhs = score_classes(Vector(al * a + be * b), cls);
        const Vector rhs = al * score_classes(a, cls) + be * score_classes(b, cls);
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, rhs.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("argmax keeps the original under a duplicated classifier row") {
    Rng rng(7);
    for (int trial = 0; trial < 300; ++trial) {
        const Index n = 3, K = random_int(rng, 2, 5);
        Matrix cls = random_matrix(rng, K, n);
        const Vector psi = random_vector(rng, n);
        const Index before = argmax(score_classes(psi, cls));
        Matrix dup(K + 1, n);
        dup << cls, cls.row(before);
        CHECK(argmax(score_classes(psi, dup)) == before);
    }
}

TEST_CASE("shallow scorer examples") {
    const auto zero = ShallowParams<Real>::zeros(2, 4, 2);
    const Matrix centroids = (Matrix(2, 2) << 1, 1, -1, -1).finished();
    const auto t = shallow_forward(Vector(Vector::Ones(2)), zero, centroids);
    CHECK(t.embedding.isZero());
    CHECK(t.scores.isZero());

    // hidden units 0,1 pass x through on the positive orthant; W2 reads them back.
    auto pass = ShallowParams<Real>::zeros(2, 2, 2);
    pass.W1 = Matrix::Identity(2, 2);
    pass.W2 = Matrix::Identity(2, 2);
    const Vector x = (Vector(2) << 1, 1).finished();
    const auto out = shallow_forward(x, pass, centroids);
    CHECK(out.embedding == x);
    CHECK(out.scores(0) == 2.0);
    CHECK(out.scores(1) == -2.0);
    CHECK(argmax(out.scores) == 0);
}

TEST_CASE("permuting classifier rows permutes shallow scores") {
    Rng rng(8);
    const auto p = init_shallow_params<Real>(2, 8, 2, 3);
    const Matrix cls = random_matrix(rng, 4, 2);
    const std::vector<Index> perm{2, 0, 3, 1};
    Matrix permuted(4, 2);
    for (Index k = 0; k < 4; ++k) permuted.row(k) = cls.row(perm[static_cast<std::size_t>(k)]);
    for (int trial = 0; trial < 50; ++trial) {
        const Vector x = random_vector(rng, 2);
        const Vector a = shallow_forward(x, p, cls).scores, b = shallow_forward(x, p, permuted).scores;
        for (Index k = 0; k < 4; ++k) CHECK(b(k) == a(perm[static_cast<std::size_t>(k)]));
    }
}

TEST_CASE("identical scores give loss ln K") {
    Rng rng(9);
    for (const Index K : {1, 2, 5, 17}) {
        // W_beta = 0 makes psi = 0, so every class scores zero.
        auto p = random_head(rng, {3, 2, 2});
        p.W_beta.setZero();
        const auto r = forward_backward<Real>(random_batch(rng, 3, 2, 2), std::vector<Index>{0, 0, 0},
                                              random_matrix(rng, K, 3), p);
        CHECK(r.loss == doctest::Approx(std::log(static_cast<double>(K))).epsilon(1e-14));
    }
}

TEST_CASE("cross entropy vanishes as the true score grows") {
    double previous = std::numeric_limits<double>::infinity();
    for (const double t : {1.0, 10.0, 100.0, 1000.0}) {
        Vector s = Vector::Zero(4);
        s(2) = t;
        Vector d;
        const double loss = cross_entropy<Real>(s, one_hot<Real>(2, 4), d);
        // Strictly smaller until the loss rounds to exactly zero.
        CHECK((loss < previous || loss == 0.0));
        CHECK(loss >= 0.0);
        previous = loss;
    }
    CHECK(previous < 1e-300);
}

TEST_CASE("labels outside the classifier set are contract errors") {
    Rng rng(10);
    const auto p = random_head(rng, {2, 2, 2});
    CHECK_THROWS_AS(forward_backward<Real>(random_batch(rng, 1, 2, 2), std::vector<Index>{3},
                                           random_matrix(rng, 3, 2), p),
                    ContractError);
}

TEST_CASE("initialization is seeded, fan-in scaled and rejects zero dims") {
    const HeadDims d{3, 4, 5};
    const auto a = init_head_params<Real>(d, 42), b = init_head_params<Real>(d, 42), c = init_head_params<Real>(d, 43);
    CHECK(a.V == b.V);
    CHECK(a.W_alpha == b.W_alpha);
    CHECK(a.W_e == b.W_e);
    CHECK(a.V != c.V);
    CHECK(a.W_beta != c.W_beta);
    CHECK_THROWS_AS(init_head_params<Real>({0, 4, 5}, 1), ContractError);
    CHECK_THROWS_AS(init_shallow_params<Real>(2, 0, 2, 1), ContractError);

    // 10^5 W_alpha entries with f = 4: variance 1/f within 5%.
    const auto big = init_head_params<Real>({1, 4, 25000}, 11);
    const double var_wa = big.W_alpha.array().square().mean() - std::pow(big.W_alpha.mean(), 2);
    CHECK(std::abs(var_wa - 0.25) < 0.05 * 0.25);
    const auto wide = init_head_params<Real>({100000, 4, 1}, 12);
    const double var_v = wide.V.array().square().mean() - std::pow(wide.V.mean(), 2);
    CHECK(std::abs(var_v - 1.0) < 0.05);
    const auto sh = init_shallow_params<Real>(5, 20000, 2, 13);
    const double var_w1 = sh.W1.array().square().mean() - std::pow(sh.W1.mean(), 2);
    CHECK(std::abs(var_w1 - 0.2) < 0.05 * 0.2);
}

TEST_CASE("forward pass is bit-deterministic") {
    Rng rng(14);
    const auto p = random_head(rng, {4, 3, 2});
    const Matrix X = random_matrix(rng, 5, 3);
    const Matrix cls = random_matrix(rng, 6, 4);
    const auto a = head_forward(X, p, cls), b = head_forward(X, p, cls);
    CHECK(a.A == b.A);
    CHECK(a.H == b.H);
    CHECK(a.psi == b.psi);
    CHECK(a.scores == b.scores);
}

TEST_CASE("analytic gradients match central differences on random instances") {
    for (int k = 0; k < 20; ++k) {
        const auto head = gradcheck_head_instance(1000 + k, 1e-5);
        CHECK_MESSAGE(head.passed, "head instance " << k << " worst " << head.worst());
        const auto shallow = gradcheck_shallow_instance(2000 + k, 1e-5);
        CHECK_MESSAGE(shallow.passed, "shallow instance " << k << " worst " << shallow.worst());
    }
}

TEST_CASE("toy shallow model with seed 7 passes the check") {
    const ToyData toy = generate_toy({});
    const auto params = init_shallow_params<Real>(2, 32, 2, 7);
    std::vector<Vector> xs;
    std::vector<Index> labels;
    for (std::size_t i = 0; i < 8; ++i) {
        xs.push_back(toy.train.features[i * 50].row(0).transpose());
        labels.push_back(toy.train.labels[i * 50]);
    }
    const Matrix cls = toy.catalog.seen_classifiers();
    const auto g = forward_backward<Real>(xs, labels, cls, params);
    const auto report = grad_check(
        params, g.grad, [&](const ShallowParams<Real>& p) { return forward_backward<Real>(xs, labels, cls, p).loss; },
        1e-5);
    CHECK(report.passed);
}

TEST_CASE("a zero-gradient block reports zero error") {
    Rng rng(15);
    auto p = random_head(rng, {3, 2, 2});
    p.W_beta.setZero();  // z = 0, so nothing reaches W_e
    const auto batch = random_batch(rng, 2, 3, 2);
    const Matrix cls = random_matrix(rng, 3, 3);
    const std::vector<Index> labels{0, 2};
    const auto g = forward_backward<Real>(batch, labels, cls, p);
    CHECK(g.grad.W_e.isZero());
    const auto report = grad_check(
        p, g.grad, [&](const HeadParams<Real>& q) { return forward_backward<Real>(batch, labels, cls, q).loss; },
        1e-5);
    CHECK(report.passed);
    CHECK(report.blocks[3].name == "W_e");
    CHECK(report.blocks[3].relative_error == 0.0);
}

TEST_CASE("a corrupted gradient fails the check") {
    Rng rng(16);
    const auto p = random_head(rng, {3, 2, 2});
    const auto batch = random_batch(rng, 2, 3, 2);
    const Matrix cls = random_matrix(rng, 3, 3);
    const std::vector<Index> labels{1, 2};
    auto g = forward_backward<Real>(batch, labels, cls, p);
    g.grad.W_alpha(0, 0) += 1.0;
    const auto report = grad_check(
        p, g.grad, [&](const HeadParams<Real>& q) { return forward_backward<Real>(batch, labels, cls, q).loss; },
        1e-5);
    CHECK_FALSE(report.passed);
    CHECK(report.blocks[1].relative_error > 1e-2);
}
