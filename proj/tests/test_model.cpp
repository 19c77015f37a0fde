#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "zsl/errors.hpp"
#include "zsl/model.hpp"
#include "zsl/rng.hpp"

using namespace zsl;
namespace fs = std::filesystem;

namespace {

ModelShape tiny_shape(std::size_t d_x, std::size_t D) {
    ModelShape s;
    s.feature_dim = d_x;
    s.attr_dim = D;
    s.enc_hidden1 = 8;
    s.enc_hidden2 = 6;
    s.dec_hidden = 8;
    s.reg_hidden = 8;
    return s;
}

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Matrix m(r, c);
    for (double& v : m.data) v = rng.uniform(lo, hi);
    return m;
}

void zero_params(Mlp& mlp) {
    for (auto& layer : mlp.layers) {
        for (double& v : layer.weights.data) v = 0.0;
        for (double& v : layer.bias) v = 0.0;
    }
}

}  // namespace

TEST_CASE("dimension contract holds for all published attribute widths") {
    for (std::size_t D : {102u, 312u, 85u, 85u}) {
        const ZslModel m = init_model(tiny_shape(64, D), 1);
        CHECK(m.encoder.out_dim() == D);
        CHECK(m.decoder.in_dim() == 2 * D);
        CHECK(m.decoder.out_dim() == 64);
        CHECK(m.regressor.out_dim() == 2 * D);
    }
}

TEST_CASE("encode produces one D-dim row per sample") {
    const ZslModel m = init_model(tiny_shape(32, 12), 3);
    Rng rng(1);
    const Matrix out = encode(m, random_matrix(5, 32, rng));
    CHECK(out.rows == 5);
    CHECK(out.cols == 12);
}

TEST_CASE("zero-weight encoder maps everything to zero") {
    ZslModel m = init_model(tiny_shape(16, 4), 5);
    zero_params(m.encoder);
    Rng rng(2);
    const Matrix out = encode(m, random_matrix(3, 16, rng));
    for (double v : out.data) CHECK(v == 0.0);
}

TEST_CASE("decode concatenates embedding and attribute slots") {
    const ZslModel m = init_model(tiny_shape(16, 4), 7);
    Rng rng(3);
    const Matrix embed = random_matrix(2, 4, rng);
    const Matrix attr = random_matrix(2, 4, rng, 0.0, 1.0);
    const Matrix out = decode(m, embed, attr);
    CHECK(out.rows == 2);
    CHECK(out.cols == 16);

    // Batched decode equals stacked row-wise decodes.
    for (std::size_t i = 0; i < 2; ++i) {
        const Matrix erow = gather_rows(embed, {i});
        const Matrix arow = gather_rows(attr, {i});
        const Matrix single = decode(m, erow, arow);
        for (std::size_t j = 0; j < 16; ++j) CHECK(single(0, j) == out(i, j));
    }

    CHECK_THROWS_AS(decode(m, embed, random_matrix(3, 4, rng)), std::invalid_argument);
}

TEST_CASE("zero-weight decoder reconstructs zeros") {
    ZslModel m = init_model(tiny_shape(16, 4), 9);
    zero_params(m.decoder);
    Rng rng(4);
    const Matrix out = decode(m, random_matrix(2, 4, rng), random_matrix(2, 4, rng));
    for (double v : out.data) CHECK(v == 0.0);
}

TEST_CASE("regress splits the 2D output into semantic and discriminative halves") {
    const ZslModel m = init_model(tiny_shape(16, 4), 11);
    Rng rng(5);
    const Matrix xhat = random_matrix(3, 16, rng);
    const auto [sem, dis] = regress(m, xhat);
    CHECK(sem.rows == 3);
    CHECK(sem.cols == 4);
    CHECK(dis.cols == 4);

    // Concatenating the halves reproduces the raw regressor output.
    const Matrix raw = forward(m.regressor, xhat);
    const Matrix glued = hcat(sem, dis);
    for (std::size_t i = 0; i < raw.data.size(); ++i) CHECK(glued.data[i] == raw.data[i]);
}

TEST_CASE("feedback refine with T=1 equals decode of encode") {
    const ZslModel m = init_model(tiny_shape(16, 4), 13);
    Rng rng(6);
    const Matrix x = random_matrix(4, 16, rng);
    const Matrix attr = random_matrix(4, 4, rng, 0.0, 1.0);
    const auto outs = feedback_refine(m, x, attr, {1});
    REQUIRE(outs.size() == 1);
    const Matrix direct = decode(m, encode(m, x), attr);
    for (std::size_t i = 0; i < direct.data.size(); ++i) {
        CHECK(outs[0].data[i] == direct.data[i]);
    }
}

TEST_CASE("feedback refine unrolls through the regressor") {
    const ZslModel m = init_model(tiny_shape(16, 4), 15);
    Rng rng(7);
    const Matrix x = random_matrix(3, 16, rng);
    const Matrix attr = random_matrix(3, 4, rng, 0.0, 1.0);
    const auto outs = feedback_refine(m, x, attr, {3});
    REQUIRE(outs.size() == 3);

    // Manual unrolling: each iterate depends only on the previous one.
    Matrix expect = decode(m, encode(m, x), attr);
    for (std::size_t t = 1; t < 3; ++t) {
        const auto [sem, dis] = regress(m, expect);
        expect = decode(m, dis, sem);
        for (std::size_t i = 0; i < expect.data.size(); ++i) {
            CHECK(outs[t].data[i] == expect.data[i]);
        }
    }
}

TEST_CASE("feedback refine with a zero regressor decodes the zero embedding") {
    ZslModel m = init_model(tiny_shape(16, 4), 17);
    zero_params(m.regressor);
    Rng rng(8);
    const Matrix x = random_matrix(2, 16, rng);
    const Matrix attr = random_matrix(2, 4, rng, 0.0, 1.0);
    const auto outs = feedback_refine(m, x, attr, {2});
    const Matrix zeros(2, 4, 0.0);
    const Matrix expect = decode(m, zeros, zeros);
    for (std::size_t i = 0; i < expect.data.size(); ++i) {
        CHECK(outs[1].data[i] == expect.data[i]);
    }
}

TEST_CASE("generate_unseen shapes, determinism and zero-noise behaviour") {
    const ZslModel m = init_model(tiny_shape(16, 4), 19);
    Rng rng(9);
    const Matrix attrs = random_matrix(3, 4, rng, 0.0, 1.0);
    const std::vector<int> ids = {10, 11, 12};

    GenerateConfig cfg;
    cfg.samples_per_class = 5;
    cfg.noise_sigma = 0.05;
    cfg.seed = 123;
    const GeneratedSet a = generate_unseen(m, attrs, ids, cfg);
    CHECK(a.features.rows == 15);
    CHECK(a.features.cols == 16);
    CHECK(a.labels.size() == 15);
    CHECK(a.labels[0] == 10);
    CHECK(a.labels[14] == 12);

    const GeneratedSet b = generate_unseen(m, attrs, ids, cfg);
    for (std::size_t i = 0; i < a.features.data.size(); ++i) {
        CHECK(a.features.data[i] == b.features.data[i]);
    }

    // sigma = 0: every sample of a class is identical and equals
    // decode([a, a]).
    cfg.noise_sigma = 0.0;
    cfg.samples_per_class = 3;
    const GeneratedSet c = generate_unseen(m, attrs, ids, cfg);
    const Matrix direct = decode(m, attrs, attrs);
    for (std::size_t cls = 0; cls < 3; ++cls) {
        for (std::size_t s = 0; s < 3; ++s) {
            for (std::size_t j = 0; j < 16; ++j) {
                CHECK(c.features(cls * 3 + s, j) == direct(cls, j));
            }
        }
    }
}

TEST_CASE("model files round-trip") {
    const ZslModel m = init_model(tiny_shape(16, 4), 21);
    const fs::path path = fs::temp_directory_path() / "zsl_model_roundtrip.zslf";
    save_model(m, path.string());
    const ZslModel loaded = load_model(path.string());
    CHECK(loaded.feature_dim == 16);
    CHECK(loaded.attr_dim == 4);
    const auto check_mlp = [](const Mlp& a, const Mlp& b) {
        const auto pa = flatten_params(a);
        const auto pb = flatten_params(b);
        REQUIRE(pa.size() == pb.size());
        for (std::size_t i = 0; i < pa.size(); ++i) {
            CHECK(pb[i] == static_cast<double>(static_cast<float>(pa[i])));
        }
    };
    check_mlp(m.encoder, loaded.encoder);
    check_mlp(m.decoder, loaded.decoder);
    check_mlp(m.regressor, loaded.regressor);

    // Truncation leaves no partial model behind.
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()) - 20);
    out.close();
    CHECK_THROWS_AS(load_model(path.string()), FormatError);
    fs::remove(path);
}
