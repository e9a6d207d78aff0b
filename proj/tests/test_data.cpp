#include "fzsl/data.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cstring>

using namespace fzsl;
using namespace fzsl::testing;

namespace {

void write_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void write_f32(std::string& buf, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    write_u32(buf, bits);
}

std::string tensor_bytes(std::uint32_t count, std::uint32_t R, std::uint32_t f, std::size_t floats,
                         const char* magic = "ZSLF", std::uint32_t version = 1) {
    std::string buf(magic, 4);
    write_u32(buf, version);
    write_u32(buf, count);
    write_u32(buf, R);
    write_u32(buf, f);
    for (std::size_t i = 0; i < floats; ++i) write_f32(buf, static_cast<float>(i) * 0.5f);
    return buf;
}

ClassCatalog three_class_catalog() {
    Matrix a(3, 4);
    a << 1, 0, 0.5, 2, 0, 1, 1, 0, 3, 3, 0, 1;
    return ClassCatalog({"0", "1", "2"}, a, {0, 1}, {2});
}

}  // namespace

TEST_CASE("catalog constructor enforces the seen/unseen partition") {
    const Matrix a = Matrix::Identity(3, 2);
    CHECK_NOTHROW(ClassCatalog({"a", "b", "c"}, a, {0, 1}, {2}));
    CHECK_THROWS_AS(ClassCatalog({"a", "b", "c"}, a, {0, 1}, {1, 2}), ContractError);
    CHECK_THROWS_AS(ClassCatalog({"a", "b", "c"}, a, {0}, {2}), ContractError);
    CHECK_THROWS_AS(ClassCatalog({"a", "b", "c"}, a, {0, 3}, {2}), ContractError);
    CHECK_THROWS_AS(ClassCatalog({"a", "b"}, a, {0, 1}, {2}), ContractError);
    Matrix bad = a;
    bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(ClassCatalog({"a", "b", "c"}, bad, {0, 1}, {2}), ContractError);
    CHECK_THROWS_AS(ClassCatalog({"a", "b", "c"}, a, {0, 1}, {2}, {{0}, {2}}), ContractError);
    CHECK_THROWS_AS(ClassCatalog({"a", "b", "c"}, a, {0, 1}, {2}, {{0}}), ContractError);

    const ClassCatalog c({"a", "b", "c"}, a, {2, 0}, {1}, {{0}, {2}});
    CHECK(c.num_seen() == 2);
    CHECK(c.seen_position(2) == 0);
    CHECK(c.seen_position(0) == 1);
    CHECK(c.seen_position(1) == -1);
    CHECK(c.seen_classifiers().row(0) == a.row(2));
    CHECK(c.find("b") == 1);
    CHECK_FALSE(c.find("zz").has_value());
}

TEST_CASE("normalized catalog rows have unit norm and zero rows survive") {
    Matrix a(3, 2);
    a << 3, 4, 0, 0, -1, 1;
    const ClassCatalog c = ClassCatalog({"a", "b", "c"}, a, {0, 1}, {2}).normalized();
    CHECK(c.attributes()(0, 0) == doctest::Approx(0.6));
    CHECK(c.attributes()(0, 1) == doctest::Approx(0.8));
    CHECK(c.attributes().row(1).isZero());
    CHECK(c.attributes().row(2).norm() == doctest::Approx(1.0));
}

TEST_CASE("generate_toy builds the three-blob catalog") {
    ToyConfig cfg;
    const ToyData d = generate_toy(cfg);
    REQUIRE(d.catalog.num_classes() == 3);
    CHECK(d.catalog.num_seen() == 2);
    CHECK(d.catalog.num_unseen() == 1);
    CHECK(d.catalog.attributes().row(0) == (Matrix(1, 2) << 1, 1).finished());
    CHECK(d.catalog.attributes().row(1) == (Matrix(1, 2) << -1, -1).finished());
    CHECK(d.catalog.attributes().row(2) == (Matrix(1, 2) << -1, 1).finished());
    CHECK(d.train.size() == 400);
    CHECK(d.test.size() == 600);
    CHECK(d.train.regions() == 1);
    CHECK(d.train.feature_dim() == 2);
    for (const Index l : d.train.labels) CHECK(d.catalog.is_seen(l));
    CHECK_NOTHROW(d.train.validate(d.catalog));
}

TEST_CASE("generate_toy rejects invalid configs") {
    ToyConfig cfg;
    cfg.variance = 0.0;
    CHECK_THROWS_AS(generate_toy(cfg), ConfigError);
    cfg = {};
    cfg.unseen_centers.clear();
    CHECK_THROWS_AS(generate_toy(cfg), ConfigError);
    cfg = {};
    cfg.samples_per_class = 0;
    CHECK_THROWS_AS(generate_toy(cfg), ConfigError);
}

TEST_CASE("vanishing variance puts every sample on its centroid") {
    ToyConfig cfg;
    cfg.variance = 1e-300;
    cfg.samples_per_class = 1;
    const ToyData d = generate_toy(cfg);
    for (std::size_t i = 0; i < d.test.size(); ++i) {
        const Matrix& x = d.test.features[i];
        const auto row = d.catalog.attributes().row(d.test.labels[i]);
        CHECK(x(0, 0) == doctest::Approx(row(0)).epsilon(1e-12));
        CHECK(x(0, 1) == doctest::Approx(row(1)).epsilon(1e-12));
    }
}

TEST_CASE("generate_toy is deterministic per seed and differs across seeds") {
    ToyConfig cfg;
    cfg.seed = 17;
    const ToyData a = generate_toy(cfg), b = generate_toy(cfg);
    REQUIRE(a.train.size() == b.train.size());
    for (std::size_t i = 0; i < a.train.size(); ++i) CHECK(a.train.features[i] == b.train.features[i]);
    cfg.seed = 18;
    const ToyData c = generate_toy(cfg);
    CHECK(a.train.features[0] != c.train.features[0]);
}

TEST_CASE("per-class toy means converge to the centers") {
    for (const int per_class : {50, 400, 3000}) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            ToyConfig cfg;
            cfg.seed = seed;
            cfg.samples_per_class = per_class;
            const ToyData d = generate_toy(cfg);
            const double tol = 3.0 * std::sqrt(cfg.variance / per_class);
            for (Index cls = 0; cls < 2; ++cls) {
                Eigen::RowVector2d mean = Eigen::RowVector2d::Zero();
                int n = 0;
                for (std::size_t i = 0; i < d.train.size(); ++i)
                    if (d.train.labels[i] == cls) {
                        mean += d.train.features[i].row(0);
                        ++n;
                    }
                mean /= n;
                const auto center = d.catalog.attributes().row(cls);
                CHECK(std::abs(mean(0) - center(0)) < tol);
                CHECK(std::abs(mean(1) - center(1)) < tol);
            }
        }
    }
}

TEST_CASE("load_attributes parses a three-class file") {
    ScratchDir dir("attr");
    spit(dir / "a.csv", "class_id,a_0,a_1,a_2,a_3\n0,1,0,0.5,2\n1,0,1,1,0\n2,3,3,0,1\n");
    spit(dir / "s.json", R"({"seen":[0,1],"unseen":[2]})");
    const ClassCatalog c = load_attributes(dir / "a.csv", dir / "s.json");
    CHECK(c.num_seen() == 2);
    CHECK(c.num_attributes() == 4);
    CHECK(c.attributes() == three_class_catalog().attributes());
}

TEST_CASE("load_attributes names unknown split ids and bad lines") {
    ScratchDir dir("attr_err");
    spit(dir / "a.csv", "class_id,a_0\nx,1\ny,2\n");
    spit(dir / "s.json", R"({"seen":["x"],"unseen":["zz"]})");
    try {
        load_attributes(dir / "a.csv", dir / "s.json");
        FAIL("expected a format error");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("\"zz\"") != std::string::npos);
    }
    spit(dir / "s.json", R"({"seen":["x"],"unseen":["y"]})");
    spit(dir / "r.csv", "class_id,a_0,a_1\nx,1,2\ny,2\n");
    try {
        load_attributes(dir / "r.csv", dir / "s.json");
        FAIL("expected a format error");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find(":3") != std::string::npos);
    }
    spit(dir / "n.csv", "class_id,a_0\nx,1\ny,abc\n");
    CHECK_THROWS_AS(load_attributes(dir / "n.csv", dir / "s.json"), FormatError);
}

TEST_CASE("load_attributes accepts a single class with one attribute") {
    ScratchDir dir("attr_min");
    spit(dir / "a.csv", "class_id,a_0\nonly,0.25\n");
    spit(dir / "s.json", R"({"seen":[],"unseen":["only"]})");
    const ClassCatalog c = load_attributes(dir / "a.csv", dir / "s.json");
    CHECK(c.attributes().rows() == 1);
    CHECK(c.attributes().cols() == 1);
    CHECK(c.attributes()(0, 0) == 0.25);
}

TEST_CASE("feature tensor parses declared shapes and rejects corrupt files") {
    ScratchDir dir("tensor");
    spit(dir / "ok.zslf", tensor_bytes(2, 3, 5, 30));
    const FeatureTensor t = read_feature_tensor(dir / "ok.zslf");
    REQUIRE(t.samples.size() == 2);
    CHECK(t.samples[0].rows() == 3);
    CHECK(t.samples[0].cols() == 5);
    CHECK(t.samples[1](2, 4) == 14.5);
    CHECK(t.samples[0](0, 1) == 0.5);

    auto expect_error = [&](const std::string& bytes, const char* fragment) {
        spit(dir / "bad.zslf", bytes);
        try {
            read_feature_tensor(dir / "bad.zslf");
            FAIL("expected a format error");
        } catch (const FormatError& e) {
            CHECK(std::string(e.what()).find(fragment) != std::string::npos);
        }
    };
    expect_error(tensor_bytes(2, 3, 5, 29), "truncated");
    expect_error(tensor_bytes(2, 3, 5, 30, "ZSLX"), "magic");
    expect_error(tensor_bytes(2, 3, 5, 30, "ZSLF", 2), "version");
    expect_error(tensor_bytes(1, 0x10000, 0x10000, 0), "overflow");
    expect_error(tensor_bytes(2, 3, 5, 31), "trailing");
    expect_error("ZSL", "truncated");
}

TEST_CASE("toy features round-trip through the binary format") {
    ScratchDir dir("roundtrip");
    const ToyData d = generate_toy({});
    save_features(d.test, d.catalog, dir / "t.zslf", dir / "t.csv");
    const SampleSet back = load_features(dir / "t.zslf", dir / "t.csv", d.catalog, SampleRole::test_seen);
    REQUIRE(back.size() == d.test.size());
    CHECK(back.labels == d.test.labels);
    CHECK(back.sample_ids == d.test.sample_ids);
    for (std::size_t i = 0; i < back.size(); ++i)
        CHECK(back.features[i] == d.test.features[i].cast<float>().cast<double>());

    // Once values are representable in f32, save(load(x)) is byte-identical.
    save_features(back, d.catalog, dir / "u.zslf", dir / "u.csv");
    CHECK(slurp(dir / "t.zslf") == slurp(dir / "u.zslf"));
    CHECK(slurp(dir / "t.csv") == slurp(dir / "u.csv"));
}

TEST_CASE("attribute files round-trip byte-exactly") {
    ScratchDir dir("attr_rt");
    Rng rng(5);
    const ClassCatalog c({"p", "q", "r", "s"}, random_matrix(rng, 4, 3), {0, 2, 3}, {1}, {{0, 3}, {2}});
    save_attributes(c, dir / "a.csv", dir / "s.json");
    const ClassCatalog back = load_attributes(dir / "a.csv", dir / "s.json");
    CHECK(back.attributes() == c.attributes());
    CHECK(back.seen() == c.seen());
    CHECK(back.unseen() == c.unseen());
    CHECK(back.folds() == c.folds());
    save_attributes(back, dir / "b.csv", dir / "t.json");
    CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
    CHECK(slurp(dir / "s.json") == slurp(dir / "t.json"));
}

TEST_CASE("labels csv must reference catalog classes") {
    ScratchDir dir("labels");
    const ToyData d = generate_toy({});
    save_features(d.train, d.catalog, dir / "t.zslf", dir / "t.csv");
    spit(dir / "t.csv", "sample_id,class_id\nfoo,nope\n");
    CHECK_THROWS_AS(load_features(dir / "t.zslf", dir / "t.csv", d.catalog, SampleRole::train), FormatError);
}

TEST_CASE("train-role sets reject unseen labels; filter splits by partition") {
    const ToyData d = generate_toy({});
    SampleSet bad = d.test;
    bad.role = SampleRole::train;
    CHECK_THROWS_AS(bad.validate(d.catalog), ContractError);
    const SampleSet seen = d.test.filter(d.catalog, true, SampleRole::test_seen);
    const SampleSet unseen = d.test.filter(d.catalog, false, SampleRole::test_unseen);
    CHECK(seen.size() + unseen.size() == d.test.size());
    for (const Index l : seen.labels) CHECK(d.catalog.is_seen(l));
    for (const Index l : unseen.labels) CHECK_FALSE(d.catalog.is_seen(l));
}
