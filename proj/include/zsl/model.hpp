#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "zsl/matrix.hpp"
#include "zsl/net.hpp"

namespace zsl {

/// Hidden widths of the three networks. The defaults are the published
/// architecture for 2048-dim features; desk-scale runs shrink them.
struct ModelShape {
    std::size_t feature_dim = 2048;   // d_x
    std::size_t attr_dim = 85;        // D
    std::size_t enc_hidden1 = 1024;
    std::size_t enc_hidden2 = 512;
    std::size_t dec_hidden = 1024;
    std::size_t reg_hidden = 1024;
};

struct FeedbackConfig {
    // T = 1: the regressor acts purely as a training regularizer.
    // T > 1: reconstructions are rerouted through the regressor T-1 times.
    std::size_t iterations = 1;
};

/// Encoder d_x -> D (discriminative embedding), decoder 2D -> d_x
/// (generator over [embedding | attribute]), regressor d_x -> 2D
/// ([semantic | discriminative] halves).
struct ZslModel {
    std::size_t feature_dim = 0;  // d_x
    std::size_t attr_dim = 0;     // D
    Mlp encoder;
    Mlp decoder;
    Mlp regressor;
};

ZslModel init_model(const ModelShape& shape, std::uint64_t seed);

/// phi_e(x): one embedding row per sample, n x D.
Matrix encode(const ZslModel& model, const Matrix& x);

/// phi_d([embed, attr]): reconstructed features, n x d_x.
Matrix decode(const ZslModel& model, const Matrix& embed, const Matrix& attr);

/// Regressor output split at column D: semantic half first, then the
/// discriminative half.
std::pair<Matrix, Matrix> regress(const ZslModel& model, const Matrix& xhat);

/// T reconstructions: the first from decode(encode(x), attr), each later one
/// from decoding the previous reconstruction's regressor halves
/// (discriminative half in the embedding slot, semantic half in the
/// attribute slot).
std::vector<Matrix> feedback_refine(const ZslModel& model, const Matrix& x, const Matrix& attr,
                                    const FeedbackConfig& cfg);

struct GenerateConfig {
    std::size_t samples_per_class = 200;  // k
    double noise_sigma = 0.05;            // jitter on the discriminative slot
    std::size_t refine_iterations = 1;    // extra regressor round trips when > 1
    std::uint64_t seed = 0;
};

struct GeneratedSet {
    Matrix features;          // (classes * k) x d_x
    std::vector<int> labels;  // class id per row
};

/// Synthesizes k feature rows per attribute row by decoding
/// [attr + noise, attr]; class_ids labels the output rows.
GeneratedSet generate_unseen(const ZslModel& model, const Matrix& attrs,
                             const std::vector<int>& class_ids, const GenerateConfig& cfg);

/// Model file: magic "ZSLM", version, d_x, D, then the three serialized
/// networks (encoder, decoder, regressor).
void save_model(const ZslModel& model, const std::string& path);
ZslModel load_model(const std::string& path);

}  // namespace zsl
