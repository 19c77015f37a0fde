#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "zsl/matrix.hpp"

namespace zsl {

enum class Activation : std::uint8_t { linear = 0, leaky_relu = 1 };

// Fixed by the architecture; not a tunable.
inline constexpr double kLeakySlope = 0.2;

struct DenseLayer {
    Matrix weights;            // fan_in x fan_out
    std::vector<double> bias;  // fan_out
    Activation activation = Activation::linear;

    std::size_t fan_in() const { return weights.rows; }
    std::size_t fan_out() const { return weights.cols; }
};

struct Mlp {
    std::vector<DenseLayer> layers;

    std::size_t in_dim() const { return layers.front().fan_in(); }
    std::size_t out_dim() const { return layers.back().fan_out(); }
    std::size_t param_count() const;
};

/// Per-layer pre- and post-activation values of one forward pass, consumed
/// by backward().
struct ForwardCache {
    Matrix input;
    std::vector<Matrix> pre;
    std::vector<Matrix> post;
};

/// Parameter gradients shaped exactly like the Mlp they came from.
struct MlpGrads {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> bias;

    static MlpGrads zeros_like(const Mlp& mlp);
    void accumulate(const MlpGrads& other);
    void scale(double s);
};

struct LayerSpec {
    std::size_t width = 0;
    Activation activation = Activation::linear;
};

/// Uniform(-sqrt(6/fan_in), +sqrt(6/fan_in)) weights, zero bias,
/// deterministic under seed.
Mlp init_mlp(std::size_t input_dim, const std::vector<LayerSpec>& layers, std::uint64_t seed);

/// Returns the output batch; fills *cache when given (needed for backward).
Matrix forward(const Mlp& mlp, const Matrix& batch, ForwardCache* cache = nullptr);

/// Analytic reverse pass. grad_output must be shaped like the forward
/// output; returns parameter gradients and writes d(loss)/d(batch) to
/// *grad_input when given.
MlpGrads backward(const Mlp& mlp, const ForwardCache& cache, const Matrix& grad_output,
                  Matrix* grad_input = nullptr);

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    AdamConfig cfg;
    std::vector<Matrix> m_w, v_w;
    std::vector<std::vector<double>> m_b, v_b;
    std::int64_t step = 0;

    static AdamState init(const Mlp& mlp, const AdamConfig& cfg);
};

/// One bias-corrected Adam update in place. Throws TrainingError on
/// non-finite gradients.
void adam_step(Mlp& mlp, const MlpGrads& grads, AdamState& state);

/// Weight file, magic "ZSLF": version, layer table, f32 blobs, CRC32.
void save_weights(const Mlp& mlp, const std::string& path);
Mlp load_weights(const std::string& path);

/// Same serialization into an open stream, for embedding in model files.
void write_mlp(std::ostream& out, const Mlp& mlp);
Mlp read_mlp(std::istream& in, const std::string& context);

/// Flatten/restore all parameters; layout is layer-major, weights row-major
/// then bias. Used by the gradient-check harness.
std::vector<double> flatten_params(const Mlp& mlp);
void unflatten_params(Mlp& mlp, const std::vector<double>& theta, std::size_t& offset);
std::vector<double> flatten_grads(const MlpGrads& grads);

}  // namespace zsl
