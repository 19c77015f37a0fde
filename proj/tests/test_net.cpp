#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "zsl/errors.hpp"
#include "zsl/gradcheck.hpp"
#include "zsl/net.hpp"
#include "zsl/rng.hpp"

using namespace zsl;
namespace fs = std::filesystem;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Matrix m(r, c);
    for (double& v : m.data) v = rng.uniform(lo, hi);
    return m;
}

// Sum of squared outputs: gradient w.r.t. the output is 2*output.
double sq_loss_forward(const Mlp& mlp, const Matrix& x) {
    const Matrix out = forward(mlp, x);
    double s = 0.0;
    for (double v : out.data) s += v * v;
    return s;
}

double layer_grad_check(Mlp mlp, const Matrix& x) {
    ForwardCache cache;
    const Matrix out = forward(mlp, x, &cache);
    Matrix grad_out(out.rows, out.cols);
    for (std::size_t i = 0; i < out.data.size(); ++i) grad_out.data[i] = 2.0 * out.data[i];
    const MlpGrads grads = backward(mlp, cache, grad_out);

    const std::vector<double> theta = flatten_params(mlp);
    const std::vector<double> analytic = flatten_grads(grads);
    const auto f = [&mlp, &x](const std::vector<double>& t) mutable {
        std::size_t off = 0;
        unflatten_params(mlp, t, off);
        return sq_loss_forward(mlp, x);
    };
    return grad_check(f, analytic, theta, 1e-5);
}

}  // namespace

TEST_CASE("identity linear layer reproduces its input") {
    Mlp mlp;
    DenseLayer layer;
    layer.weights = Matrix::identity(3);
    layer.bias.assign(3, 0.0);
    layer.activation = Activation::linear;
    mlp.layers.push_back(layer);

    Rng rng(5);
    const Matrix x = random_matrix(4, 3, rng);
    const Matrix out = forward(mlp, x);
    for (std::size_t i = 0; i < x.data.size(); ++i) CHECK(out.data[i] == x.data[i]);

    // Identity Jacobian: grad_input equals grad_output.
    ForwardCache cache;
    forward(mlp, x, &cache);
    const Matrix g = random_matrix(4, 3, rng);
    Matrix grad_in;
    backward(mlp, cache, g, &grad_in);
    for (std::size_t i = 0; i < g.data.size(); ++i) CHECK(grad_in.data[i] == g.data[i]);
}

TEST_CASE("leaky relu applies the fixed 0.2 slope") {
    Mlp mlp;
    DenseLayer layer;
    layer.weights = Matrix(1, 1, 1.0);
    layer.bias.assign(1, 0.0);
    layer.activation = Activation::leaky_relu;
    mlp.layers.push_back(layer);

    Matrix x(1, 1, -1.0);
    const Matrix out = forward(mlp, x);
    CHECK(out(0, 0) == doctest::Approx(-0.2));

    // Local derivative 0.2 on the negative side.
    Matrix x2(1, 1, -2.0);
    ForwardCache cache;
    forward(mlp, x2, &cache);
    Matrix g(1, 1, 1.0);
    Matrix grad_in;
    backward(mlp, cache, g, &grad_in);
    CHECK(grad_in(0, 0) == doctest::Approx(0.2));
}

TEST_CASE("published encoder shape maps 4x2048 to 4x85") {
    const Mlp mlp = init_mlp(2048,
                             {{1024, Activation::leaky_relu},
                              {512, Activation::leaky_relu},
                              {85, Activation::linear}},
                             99);
    Rng rng(17);
    const Matrix x = random_matrix(4, 2048, rng);
    const Matrix out = forward(mlp, x);
    CHECK(out.rows == 4);
    CHECK(out.cols == 85);
}

TEST_CASE("forward is deterministic") {
    const Mlp mlp = init_mlp(6, {{5, Activation::leaky_relu}, {3, Activation::linear}}, 1);
    Rng rng(2);
    const Matrix x = random_matrix(3, 6, rng);
    const Matrix a = forward(mlp, x);
    const Matrix b = forward(mlp, x);
    for (std::size_t i = 0; i < a.data.size(); ++i) CHECK(a.data[i] == b.data[i]);
}

TEST_CASE("gradients pass the finite-difference check for every layer type") {
    Rng rng(23);
    SUBCASE("single linear layer") {
        const Mlp mlp = init_mlp(4, {{3, Activation::linear}}, 31);
        CHECK(layer_grad_check(mlp, random_matrix(5, 4, rng)) <= 1e-4);
    }
    SUBCASE("single leaky layer") {
        const Mlp mlp = init_mlp(4, {{3, Activation::leaky_relu}}, 32);
        CHECK(layer_grad_check(mlp, random_matrix(5, 4, rng)) <= 1e-4);
    }
    SUBCASE("stacked leaky + linear") {
        const Mlp mlp = init_mlp(6,
                                 {{8, Activation::leaky_relu},
                                  {5, Activation::leaky_relu},
                                  {4, Activation::linear}},
                                 33);
        CHECK(layer_grad_check(mlp, random_matrix(7, 6, rng)) <= 1e-4);
    }
}

TEST_CASE("backward rejects mismatched caches") {
    const Mlp mlp = init_mlp(4, {{3, Activation::linear}}, 3);
    Rng rng(5);
    ForwardCache cache;
    forward(mlp, random_matrix(2, 4, rng), &cache);
    const Matrix bad(3, 3, 0.0);
    CHECK_THROWS_AS(backward(mlp, cache, bad), std::invalid_argument);
}

TEST_CASE("adam with zero gradient leaves parameters unchanged") {
    Mlp mlp = init_mlp(3, {{2, Activation::linear}}, 7);
    const std::vector<double> before = flatten_params(mlp);
    AdamState state = AdamState::init(mlp, {});
    const MlpGrads zeros = MlpGrads::zeros_like(mlp);
    adam_step(mlp, zeros, state);
    const std::vector<double> after = flatten_params(mlp);
    for (std::size_t i = 0; i < before.size(); ++i) CHECK(before[i] == after[i]);
    CHECK(state.step == 1);
}

TEST_CASE("first adam step moves by about -lr * sign(gradient)") {
    Mlp mlp = init_mlp(2, {{2, Activation::linear}}, 8);
    const std::vector<double> before = flatten_params(mlp);
    AdamConfig cfg;
    cfg.lr = 1e-3;
    AdamState state = AdamState::init(mlp, cfg);
    MlpGrads grads = MlpGrads::zeros_like(mlp);
    Rng rng(9);
    for (auto& w : grads.weights) {
        for (double& v : w.data) v = rng.uniform(-1.0, 1.0);
    }
    adam_step(mlp, grads, state);
    const std::vector<double> after = flatten_params(mlp);
    const std::vector<double> g = flatten_grads(grads);
    for (std::size_t i = 0; i < before.size(); ++i) {
        if (g[i] == 0.0) continue;
        const double step = after[i] - before[i];
        // Bias-corrected first step is -lr * g/(|g| + eps') ~ -lr * sign(g).
        CHECK(step * (g[i] > 0 ? 1.0 : -1.0) < 0.0);
        CHECK(std::fabs(step) <= cfg.lr * 1.0001);
        CHECK(std::fabs(step) >= cfg.lr * 0.99);
    }
}

TEST_CASE("adam with lr=0 is the identity") {
    Mlp mlp = init_mlp(3, {{3, Activation::leaky_relu}}, 10);
    const std::vector<double> before = flatten_params(mlp);
    AdamConfig cfg;
    cfg.lr = 0.0;
    AdamState state = AdamState::init(mlp, cfg);
    MlpGrads grads = MlpGrads::zeros_like(mlp);
    for (auto& w : grads.weights) {
        for (double& v : w.data) v = 0.5;
    }
    adam_step(mlp, grads, state);
    const std::vector<double> after = flatten_params(mlp);
    for (std::size_t i = 0; i < before.size(); ++i) CHECK(before[i] == after[i]);
}

TEST_CASE("two adam steps on a quadratic reduce its value") {
    // f(w) = |w|^2 over a 1-layer parameterization.
    Mlp mlp = init_mlp(2, {{2, Activation::linear}}, 11);
    AdamConfig cfg;
    cfg.lr = 0.05;
    AdamState state = AdamState::init(mlp, cfg);
    const auto value = [&]() {
        double s = 0.0;
        for (double v : flatten_params(mlp)) s += v * v;
        return s;
    };
    const double before = value();
    for (int i = 0; i < 2; ++i) {
        MlpGrads grads = MlpGrads::zeros_like(mlp);
        for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
            for (std::size_t k = 0; k < mlp.layers[l].weights.data.size(); ++k) {
                grads.weights[l].data[k] = 2.0 * mlp.layers[l].weights.data[k];
            }
            for (std::size_t k = 0; k < mlp.layers[l].bias.size(); ++k) {
                grads.bias[l][k] = 2.0 * mlp.layers[l].bias[k];
            }
        }
        adam_step(mlp, grads, state);
    }
    CHECK(value() < before);
}

TEST_CASE("adam rejects non-finite gradients") {
    Mlp mlp = init_mlp(2, {{2, Activation::linear}}, 12);
    AdamState state = AdamState::init(mlp, {});
    MlpGrads grads = MlpGrads::zeros_like(mlp);
    grads.weights[0].data[1] = std::nan("");
    CHECK_THROWS_AS(adam_step(mlp, grads, state), TrainingError);
}

TEST_CASE("init is deterministic and bounded with zero bias") {
    const std::vector<LayerSpec> spec = {{64, Activation::leaky_relu}, {8, Activation::linear}};
    const Mlp a = init_mlp(24, spec, 1234);
    const Mlp b = init_mlp(24, spec, 1234);
    const std::vector<double> pa = flatten_params(a);
    const std::vector<double> pb = flatten_params(b);
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i] == pb[i]);

    for (const auto& layer : a.layers) {
        const double bound = std::sqrt(6.0 / static_cast<double>(layer.fan_in()));
        for (double w : layer.weights.data) {
            CHECK(w >= -bound);
            CHECK(w <= bound);
        }
        for (double bias : layer.bias) CHECK(bias == 0.0);
    }

    const Mlp c = init_mlp(24, spec, 1235);
    CHECK(flatten_params(c) != pa);
}

TEST_CASE("init rejects zero-width layers") {
    CHECK_THROWS_AS(init_mlp(4, {{0, Activation::linear}}, 1), std::invalid_argument);
}

TEST_CASE("weight files round-trip at f32 precision") {
    const Mlp mlp = init_mlp(6, {{5, Activation::leaky_relu}, {4, Activation::linear}}, 77);
    const fs::path path = fs::temp_directory_path() / "zsl_net_roundtrip.zslf";
    save_weights(mlp, path.string());
    const Mlp loaded = load_weights(path.string());
    REQUIRE(loaded.layers.size() == mlp.layers.size());
    const std::vector<double> a = flatten_params(mlp);
    const std::vector<double> b = flatten_params(loaded);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(std::fabs(a[i] - b[i]) <= 1.2e-7 * std::fabs(a[i]));
        // And the loaded value is exactly the f32 narrowing.
        CHECK(b[i] == static_cast<double>(static_cast<float>(a[i])));
    }
    CHECK(loaded.layers[0].activation == Activation::leaky_relu);
    CHECK(loaded.layers[1].activation == Activation::linear);

    // Saving the loaded model reproduces the file byte for byte.
    const fs::path path2 = fs::temp_directory_path() / "zsl_net_roundtrip2.zslf";
    save_weights(loaded, path2.string());
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);
    fs::remove(path);
    fs::remove(path2);
}

TEST_CASE("truncated and corrupted weight files are rejected") {
    const Mlp mlp = init_mlp(4, {{3, Activation::linear}}, 5);
    const fs::path path = fs::temp_directory_path() / "zsl_net_corrupt.zslf";
    save_weights(mlp, path.string());

    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();

    SUBCASE("truncation") {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
        out.close();
        CHECK_THROWS_WITH_AS(load_weights(path.string()), doctest::Contains("truncated"),
                             FormatError);
    }
    SUBCASE("bad magic") {
        bytes[0] = 'X';
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.close();
        CHECK_THROWS_WITH_AS(load_weights(path.string()), doctest::Contains("magic"),
                             FormatError);
    }
    SUBCASE("flipped payload byte fails the checksum") {
        bytes[bytes.size() - 8] = static_cast<char>(bytes[bytes.size() - 8] ^ 0x40);
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.close();
        CHECK_THROWS_WITH_AS(load_weights(path.string()), doctest::Contains("checksum"),
                             FormatError);
    }
    fs::remove(path);
}
