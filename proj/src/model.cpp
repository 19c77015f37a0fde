#include "zsl/model.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "zsl/errors.hpp"
#include "zsl/rng.hpp"

namespace zsl {

ZslModel init_model(const ModelShape& shape, std::uint64_t seed) {
    if (shape.feature_dim == 0 || shape.attr_dim == 0) {
        throw std::invalid_argument("init_model: zero feature or attribute dimension");
    }
    ZslModel model;
    model.feature_dim = shape.feature_dim;
    model.attr_dim = shape.attr_dim;
    const std::size_t D = shape.attr_dim;
    model.encoder = init_mlp(shape.feature_dim,
                             {{shape.enc_hidden1, Activation::leaky_relu},
                              {shape.enc_hidden2, Activation::leaky_relu},
                              {D, Activation::linear}},
                             Rng::child_seed(seed, 1));
    model.decoder = init_mlp(2 * D,
                             {{shape.dec_hidden, Activation::leaky_relu},
                              {shape.feature_dim, Activation::linear}},
                             Rng::child_seed(seed, 2));
    model.regressor = init_mlp(shape.feature_dim,
                               {{shape.reg_hidden, Activation::leaky_relu},
                                {2 * D, Activation::linear}},
                               Rng::child_seed(seed, 3));
    return model;
}

Matrix encode(const ZslModel& model, const Matrix& x) {
    if (x.cols != model.feature_dim) {
        throw std::invalid_argument("encode: batch " + x.shape_str() + " vs feature dim " +
                                    std::to_string(model.feature_dim));
    }
    return forward(model.encoder, x);
}

Matrix decode(const ZslModel& model, const Matrix& embed, const Matrix& attr) {
    if (embed.rows != attr.rows || embed.cols != model.attr_dim ||
        attr.cols != model.attr_dim) {
        throw std::invalid_argument("decode: embed " + embed.shape_str() + " attr " +
                                    attr.shape_str() + " vs D=" +
                                    std::to_string(model.attr_dim));
    }
    return forward(model.decoder, hcat(embed, attr));
}

std::pair<Matrix, Matrix> regress(const ZslModel& model, const Matrix& xhat) {
    if (xhat.cols != model.feature_dim) {
        throw std::invalid_argument("regress: batch " + xhat.shape_str() +
                                    " vs feature dim " + std::to_string(model.feature_dim));
    }
    const Matrix out = forward(model.regressor, xhat);
    const std::size_t D = model.attr_dim;
    return {col_slice(out, 0, D), col_slice(out, D, 2 * D)};
}

std::vector<Matrix> feedback_refine(const ZslModel& model, const Matrix& x, const Matrix& attr,
                                    const FeedbackConfig& cfg) {
    if (cfg.iterations < 1) {
        throw std::invalid_argument("feedback_refine: iterations must be >= 1");
    }
    std::vector<Matrix> outputs;
    outputs.reserve(cfg.iterations);
    outputs.push_back(decode(model, encode(model, x), attr));
    for (std::size_t t = 1; t < cfg.iterations; ++t) {
        auto [sem, dis] = regress(model, outputs.back());
        outputs.push_back(decode(model, dis, sem));
    }
    return outputs;
}

GeneratedSet generate_unseen(const ZslModel& model, const Matrix& attrs,
                             const std::vector<int>& class_ids, const GenerateConfig& cfg) {
    if (attrs.rows != class_ids.size()) {
        throw std::invalid_argument("generate_unseen: " + std::to_string(class_ids.size()) +
                                    " class ids for " + std::to_string(attrs.rows) +
                                    " attribute rows");
    }
    if (attrs.cols != model.attr_dim) {
        throw std::invalid_argument("generate_unseen: attrs " + attrs.shape_str() +
                                    " vs D=" + std::to_string(model.attr_dim));
    }
    if (cfg.samples_per_class < 1) {
        throw std::invalid_argument("generate_unseen: need at least one sample per class");
    }
    Rng rng(cfg.seed);
    const std::size_t k = cfg.samples_per_class;
    const std::size_t n = attrs.rows * k;
    Matrix jittered(n, model.attr_dim);
    Matrix exact(n, model.attr_dim);
    GeneratedSet out;
    out.labels.reserve(n);
    for (std::size_t c = 0; c < attrs.rows; ++c) {
        const double* arow = attrs.row(c);
        for (std::size_t s = 0; s < k; ++s) {
            const std::size_t r = c * k + s;
            double* jrow = jittered.row(r);
            double* erow = exact.row(r);
            for (std::size_t j = 0; j < model.attr_dim; ++j) {
                const double eta = cfg.noise_sigma > 0.0 ? cfg.noise_sigma * rng.gaussian() : 0.0;
                jrow[j] = arow[j] + eta;
                erow[j] = arow[j];
            }
            out.labels.push_back(class_ids[c]);
        }
    }
    out.features = decode(model, jittered, exact);
    for (std::size_t t = 1; t < cfg.refine_iterations; ++t) {
        auto [sem, dis] = regress(model, out.features);
        out.features = decode(model, dis, sem);
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {
constexpr char kModelMagic[4] = {'Z', 'S', 'L', 'M'};
constexpr std::uint16_t kModelVersion = 1;
}  // namespace

void save_model(const ZslModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("save_model: cannot open " + path);
    out.write(kModelMagic, 4);
    const std::uint16_t version = kModelVersion;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    const std::uint32_t dx = static_cast<std::uint32_t>(model.feature_dim);
    const std::uint32_t D = static_cast<std::uint32_t>(model.attr_dim);
    out.write(reinterpret_cast<const char*>(&dx), sizeof(dx));
    out.write(reinterpret_cast<const char*>(&D), sizeof(D));
    write_mlp(out, model.encoder);
    write_mlp(out, model.decoder);
    write_mlp(out, model.regressor);
    if (!out) throw FormatError("save_model: write failed for " + path);
}

ZslModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("load_model: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, kModelMagic, 4) != 0) {
        throw FormatError(path + ": bad model magic at byte offset 0");
    }
    std::uint16_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (in.gcount() != sizeof(version) || version != kModelVersion) {
        throw FormatError(path + ": unsupported model version at byte offset 4");
    }
    std::uint32_t dx = 0, D = 0;
    in.read(reinterpret_cast<char*>(&dx), sizeof(dx));
    in.read(reinterpret_cast<char*>(&D), sizeof(D));
    if (!in || dx == 0 || D == 0) {
        throw FormatError(path + ": bad model header dimensions at byte offset 6");
    }
    ZslModel model;
    model.feature_dim = dx;
    model.attr_dim = D;
    model.encoder = read_mlp(in, path + " (encoder)");
    model.decoder = read_mlp(in, path + " (decoder)");
    model.regressor = read_mlp(in, path + " (regressor)");
    if (model.encoder.in_dim() != dx || model.encoder.out_dim() != D ||
        model.decoder.in_dim() != 2 * static_cast<std::size_t>(D) ||
        model.decoder.out_dim() != dx || model.regressor.in_dim() != dx ||
        model.regressor.out_dim() != 2 * static_cast<std::size_t>(D)) {
        throw FormatError(path + ": network shapes disagree with the d_x/D header");
    }
    return model;
}

}  // namespace zsl
