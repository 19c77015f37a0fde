#include "zsl/net.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "zsl/errors.hpp"
#include "zsl/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "weight files are little-endian; big-endian hosts unsupported");

namespace zsl {

namespace {

double activate(Activation act, double x) {
    if (act == Activation::leaky_relu && x < 0.0) return kLeakySlope * x;
    return x;
}

double activate_deriv(Activation act, double pre) {
    if (act == Activation::leaky_relu && pre < 0.0) return kLeakySlope;
    return 1.0;
}

}  // namespace

std::size_t Mlp::param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.data.size() + l.bias.size();
    return n;
}

MlpGrads MlpGrads::zeros_like(const Mlp& mlp) {
    MlpGrads g;
    for (const auto& l : mlp.layers) {
        g.weights.emplace_back(l.weights.rows, l.weights.cols, 0.0);
        g.bias.emplace_back(l.bias.size(), 0.0);
    }
    return g;
}

void MlpGrads::accumulate(const MlpGrads& other) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
        for (std::size_t i = 0; i < weights[l].data.size(); ++i) {
            weights[l].data[i] += other.weights[l].data[i];
        }
        for (std::size_t i = 0; i < bias[l].size(); ++i) {
            bias[l][i] += other.bias[l][i];
        }
    }
}

void MlpGrads::scale(double s) {
    for (auto& w : weights) {
        for (double& v : w.data) v *= s;
    }
    for (auto& b : bias) {
        for (double& v : b) v *= s;
    }
}

Mlp init_mlp(std::size_t input_dim, const std::vector<LayerSpec>& layers, std::uint64_t seed) {
    if (input_dim == 0) throw std::invalid_argument("init_mlp: zero input dim");
    if (layers.empty()) throw std::invalid_argument("init_mlp: no layers");
    Rng rng(seed);
    Mlp mlp;
    std::size_t fan_in = input_dim;
    for (const auto& spec : layers) {
        if (spec.width == 0) throw std::invalid_argument("init_mlp: zero-width layer");
        DenseLayer layer;
        layer.weights = Matrix(fan_in, spec.width);
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        for (double& w : layer.weights.data) w = rng.uniform(-bound, bound);
        layer.bias.assign(spec.width, 0.0);
        layer.activation = spec.activation;
        mlp.layers.push_back(std::move(layer));
        fan_in = spec.width;
    }
    return mlp;
}

Matrix forward(const Mlp& mlp, const Matrix& batch, ForwardCache* cache) {
    if (batch.cols != mlp.in_dim()) {
        throw std::invalid_argument("forward: batch " + batch.shape_str() +
                                    " does not match input dim " +
                                    std::to_string(mlp.in_dim()));
    }
    if (cache) {
        cache->input = batch;
        cache->pre.clear();
        cache->post.clear();
    }
    Matrix x = batch;
    for (const auto& layer : mlp.layers) {
        Matrix pre = matmul(x, layer.weights);
        for (std::size_t i = 0; i < pre.rows; ++i) {
            double* row = pre.row(i);
            for (std::size_t j = 0; j < pre.cols; ++j) row[j] += layer.bias[j];
        }
        Matrix post = pre;
        if (layer.activation == Activation::leaky_relu) {
            for (double& v : post.data) v = activate(layer.activation, v);
        }
        if (cache) {
            cache->pre.push_back(pre);
            cache->post.push_back(post);
        }
        x = std::move(post);
    }
    return x;
}

MlpGrads backward(const Mlp& mlp, const ForwardCache& cache, const Matrix& grad_output,
                  Matrix* grad_input) {
    const std::size_t L = mlp.layers.size();
    if (cache.pre.size() != L || cache.post.size() != L) {
        throw std::invalid_argument("backward: cache depth " +
                                    std::to_string(cache.pre.size()) +
                                    " does not match layer count " + std::to_string(L));
    }
    if (!grad_output.same_shape(cache.post.back())) {
        throw std::invalid_argument("backward: grad_output " + grad_output.shape_str() +
                                    " does not match output " +
                                    cache.post.back().shape_str());
    }
    MlpGrads grads = MlpGrads::zeros_like(mlp);
    Matrix g = grad_output;
    for (std::size_t li = L; li-- > 0;) {
        const DenseLayer& layer = mlp.layers[li];
        const Matrix& pre = cache.pre[li];
        // d(post)/d(pre)
        if (layer.activation == Activation::leaky_relu) {
            for (std::size_t i = 0; i < g.data.size(); ++i) {
                g.data[i] *= activate_deriv(layer.activation, pre.data[i]);
            }
        }
        const Matrix& below = (li == 0) ? cache.input : cache.post[li - 1];
        grads.weights[li] = matmul(transpose(below), g);
        for (std::size_t i = 0; i < g.rows; ++i) {
            const double* row = g.row(i);
            for (std::size_t j = 0; j < g.cols; ++j) grads.bias[li][j] += row[j];
        }
        if (li > 0 || grad_input) {
            g = matmul(g, transpose(layer.weights));
        }
    }
    if (grad_input) *grad_input = std::move(g);
    return grads;
}

AdamState AdamState::init(const Mlp& mlp, const AdamConfig& cfg) {
    AdamState s;
    s.cfg = cfg;
    for (const auto& l : mlp.layers) {
        s.m_w.emplace_back(l.weights.rows, l.weights.cols, 0.0);
        s.v_w.emplace_back(l.weights.rows, l.weights.cols, 0.0);
        s.m_b.emplace_back(l.bias.size(), 0.0);
        s.v_b.emplace_back(l.bias.size(), 0.0);
    }
    return s;
}

namespace {

void adam_update(double* param, double* m, double* v, const double* g, std::size_t n,
                 const AdamConfig& cfg, double bc1, double bc2) {
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(g[i])) {
            throw TrainingError("adam_step: non-finite gradient");
        }
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        param[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
}

}  // namespace

void adam_step(Mlp& mlp, const MlpGrads& grads, AdamState& state) {
    if (grads.weights.size() != mlp.layers.size()) {
        throw std::invalid_argument("adam_step: gradient layer count mismatch");
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.cfg.beta2, static_cast<double>(state.step));
    for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
        DenseLayer& layer = mlp.layers[l];
        if (!grads.weights[l].same_shape(layer.weights) ||
            grads.bias[l].size() != layer.bias.size()) {
            throw std::invalid_argument("adam_step: gradient shape mismatch at layer " +
                                        std::to_string(l));
        }
        adam_update(layer.weights.data.data(), state.m_w[l].data.data(),
                    state.v_w[l].data.data(), grads.weights[l].data.data(),
                    layer.weights.data.size(), state.cfg, bc1, bc2);
        adam_update(layer.bias.data(), state.m_b[l].data(), state.v_b[l].data(),
                    grads.bias[l].data(), layer.bias.size(), state.cfg, bc1, bc2);
    }
}

// ---------------------------------------------------------------------------
// Serialization: magic "ZSLF", u16 version, u32 layer count, per-layer table
// (u32 fan_in, u32 fan_out, u8 activation), then per-layer little-endian f32
// weight and bias blobs, then CRC32 of everything before it.

namespace {

constexpr char kMagic[4] = {'Z', 'S', 'L', 'F'};
constexpr std::uint16_t kVersion = 1;

std::array<std::uint32_t, 256> make_crc_table() {
    std::array<std::uint32_t, 256> table{};
    for (std::uint32_t i = 0; i < 256; ++i) {
        std::uint32_t c = i;
        for (int k = 0; k < 8; ++k) {
            c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
        }
        table[i] = c;
    }
    return table;
}

std::uint32_t crc32_update(std::uint32_t crc, const void* buf, std::size_t len) {
    static const std::array<std::uint32_t, 256> table = make_crc_table();
    const auto* p = static_cast<const unsigned char*>(buf);
    crc ^= 0xFFFFFFFFu;
    for (std::size_t i = 0; i < len; ++i) {
        crc = table[(crc ^ p[i]) & 0xFFu] ^ (crc >> 8);
    }
    return crc ^ 0xFFFFFFFFu;
}

class CrcWriter {
public:
    explicit CrcWriter(std::ostream& out) : out_(out) {}

    void write(const void* buf, std::size_t len) {
        out_.write(static_cast<const char*>(buf), static_cast<std::streamsize>(len));
        crc_ = crc32_update(crc_, buf, len);
    }

    template <typename T>
    void write_pod(T v) {
        write(&v, sizeof(T));
    }

    std::uint32_t crc() const { return crc_; }

private:
    std::ostream& out_;
    std::uint32_t crc_ = 0;
};

class CrcReader {
public:
    CrcReader(std::istream& in, std::string context) : in_(in), context_(std::move(context)) {}

    void read(void* buf, std::size_t len) {
        in_.read(static_cast<char*>(buf), static_cast<std::streamsize>(len));
        if (static_cast<std::size_t>(in_.gcount()) != len) {
            throw FormatError(context_ + ": truncated at byte offset " +
                              std::to_string(offset_ + static_cast<std::size_t>(in_.gcount())));
        }
        crc_ = crc32_update(crc_, buf, len);
        offset_ += len;
    }

    template <typename T>
    T read_pod() {
        T v;
        read(&v, sizeof(T));
        return v;
    }

    std::uint32_t crc() const { return crc_; }
    std::size_t offset() const { return offset_; }
    const std::string& context() const { return context_; }

private:
    std::istream& in_;
    std::string context_;
    std::uint32_t crc_ = 0;
    std::size_t offset_ = 0;
};

}  // namespace

void write_mlp(std::ostream& out, const Mlp& mlp) {
    CrcWriter w(out);
    w.write(kMagic, 4);
    w.write_pod<std::uint16_t>(kVersion);
    w.write_pod<std::uint32_t>(static_cast<std::uint32_t>(mlp.layers.size()));
    for (const auto& layer : mlp.layers) {
        w.write_pod<std::uint32_t>(static_cast<std::uint32_t>(layer.fan_in()));
        w.write_pod<std::uint32_t>(static_cast<std::uint32_t>(layer.fan_out()));
        w.write_pod<std::uint8_t>(static_cast<std::uint8_t>(layer.activation));
    }
    for (const auto& layer : mlp.layers) {
        for (double v : layer.weights.data) w.write_pod<float>(static_cast<float>(v));
        for (double v : layer.bias) w.write_pod<float>(static_cast<float>(v));
    }
    const std::uint32_t crc = w.crc();
    out.write(reinterpret_cast<const char*>(&crc), sizeof(crc));
}

Mlp read_mlp(std::istream& in, const std::string& context) {
    CrcReader r(in, context);
    char magic[4];
    r.read(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw FormatError(context + ": bad magic at byte offset 0");
    }
    const auto version = r.read_pod<std::uint16_t>();
    if (version != kVersion) {
        throw FormatError(context + ": unsupported version " + std::to_string(version) +
                          " at byte offset 4");
    }
    const auto layer_count = r.read_pod<std::uint32_t>();
    if (layer_count == 0 || layer_count > 1024) {
        throw FormatError(context + ": implausible layer count " +
                          std::to_string(layer_count) + " at byte offset 6");
    }
    struct Entry {
        std::uint32_t fan_in, fan_out;
        std::uint8_t act;
    };
    std::vector<Entry> entries;
    for (std::uint32_t l = 0; l < layer_count; ++l) {
        Entry e;
        e.fan_in = r.read_pod<std::uint32_t>();
        e.fan_out = r.read_pod<std::uint32_t>();
        e.act = r.read_pod<std::uint8_t>();
        if (e.fan_in == 0 || e.fan_out == 0 || e.act > 1) {
            throw FormatError(context + ": bad layer table entry " + std::to_string(l));
        }
        entries.push_back(e);
    }
    Mlp mlp;
    for (const auto& e : entries) {
        DenseLayer layer;
        layer.weights = Matrix(e.fan_in, e.fan_out);
        layer.bias.assign(e.fan_out, 0.0);
        layer.activation = static_cast<Activation>(e.act);
        mlp.layers.push_back(std::move(layer));
    }
    for (auto& layer : mlp.layers) {
        for (double& v : layer.weights.data) v = static_cast<double>(r.read_pod<float>());
        for (double& v : layer.bias) v = static_cast<double>(r.read_pod<float>());
    }
    const std::uint32_t expected = r.crc();
    std::uint32_t stored;
    in.read(reinterpret_cast<char*>(&stored), sizeof(stored));
    if (static_cast<std::size_t>(in.gcount()) != sizeof(stored)) {
        throw FormatError(context + ": truncated checksum at byte offset " +
                          std::to_string(r.offset()));
    }
    if (stored != expected) {
        throw FormatError(context + ": checksum mismatch at byte offset " +
                          std::to_string(r.offset()));
    }
    return mlp;
}

void save_weights(const Mlp& mlp, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("save_weights: cannot open " + path);
    write_mlp(out, mlp);
    if (!out) throw FormatError("save_weights: write failed for " + path);
}

Mlp load_weights(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("load_weights: cannot open " + path);
    return read_mlp(in, path);
}

std::vector<double> flatten_params(const Mlp& mlp) {
    std::vector<double> theta;
    theta.reserve(mlp.param_count());
    for (const auto& l : mlp.layers) {
        theta.insert(theta.end(), l.weights.data.begin(), l.weights.data.end());
        theta.insert(theta.end(), l.bias.begin(), l.bias.end());
    }
    return theta;
}

void unflatten_params(Mlp& mlp, const std::vector<double>& theta, std::size_t& offset) {
    for (auto& l : mlp.layers) {
        for (double& v : l.weights.data) v = theta[offset++];
        for (double& v : l.bias) v = theta[offset++];
    }
}

std::vector<double> flatten_grads(const MlpGrads& grads) {
    std::vector<double> g;
    for (std::size_t l = 0; l < grads.weights.size(); ++l) {
        g.insert(g.end(), grads.weights[l].data.begin(), grads.weights[l].data.end());
        g.insert(g.end(), grads.bias[l].begin(), grads.bias[l].end());
    }
    return g;
}

}  // namespace zsl
