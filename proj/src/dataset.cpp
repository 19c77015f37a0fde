#include "zsl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "zsl/errors.hpp"
#include "zsl/net.hpp"
#include "zsl/npy.hpp"
#include "zsl/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace zsl {

Matrix ZslDataset::attrs_for(const std::vector<std::size_t>& idx) const {
    Matrix a(idx.size(), attributes.cols);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const int cls = labels[idx[i]];
        const double* src = attributes.row(static_cast<std::size_t>(cls));
        double* dst = a.row(i);
        for (std::size_t j = 0; j < attributes.cols; ++j) dst[j] = src[j];
    }
    return a;
}

Matrix ZslDataset::attrs_of_classes(const std::vector<int>& classes) const {
    std::vector<std::size_t> rows;
    rows.reserve(classes.size());
    for (int c : classes) rows.push_back(static_cast<std::size_t>(c));
    return gather_rows(attributes, rows);
}

std::vector<int> ZslDataset::labels_for(const std::vector<std::size_t>& idx) const {
    std::vector<int> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(labels[i]);
    return out;
}

void validate_dataset(const ZslDataset& ds, const std::string& origin) {
    const std::size_t n = ds.features.rows;
    const std::size_t C = ds.attributes.rows;
    if (ds.labels.size() != n) {
        throw FormatError(origin + ": " + std::to_string(ds.labels.size()) +
                          " labels for " + std::to_string(n) + " feature rows");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (ds.labels[i] < 0 || static_cast<std::size_t>(ds.labels[i]) >= C) {
            throw FormatError(origin + ": labels row " + std::to_string(i) + " has class " +
                              std::to_string(ds.labels[i]) + " outside [0, " +
                              std::to_string(C) + ")");
        }
    }
    for (std::size_t i = 0; i < C; ++i) {
        const double* row = ds.attributes.row(i);
        for (std::size_t j = 0; j < ds.attributes.cols; ++j) {
            if (!(row[j] >= 0.0 && row[j] <= 1.0)) {
                throw FormatError(origin + ": attributes row " + std::to_string(i) +
                                  " entry outside [0,1]");
            }
        }
    }
    if (!all_finite(ds.features)) {
        throw FormatError(origin + ": non-finite feature entries");
    }

    std::set<int> seen(ds.split.seen_classes.begin(), ds.split.seen_classes.end());
    std::set<int> unseen(ds.split.unseen_classes.begin(), ds.split.unseen_classes.end());
    for (int c : seen) {
        if (unseen.count(c)) {
            throw FormatError(origin + ": class " + std::to_string(c) +
                              " appears in both seen and unseen sets");
        }
        if (c < 0 || static_cast<std::size_t>(c) >= C) {
            throw FormatError(origin + ": seen class " + std::to_string(c) +
                              " outside [0, " + std::to_string(C) + ")");
        }
    }
    for (int c : unseen) {
        if (c < 0 || static_cast<std::size_t>(c) >= C) {
            throw FormatError(origin + ": unseen class " + std::to_string(c) +
                              " outside [0, " + std::to_string(C) + ")");
        }
    }

    auto check_indices = [&](const std::vector<std::size_t>& idx, const std::set<int>& allowed,
                             const std::string& name) {
        for (std::size_t i : idx) {
            if (i >= n) {
                throw FormatError(origin + ": " + name + " index " + std::to_string(i) +
                                  " outside [0, " + std::to_string(n) + ")");
            }
            if (!allowed.count(ds.labels[i])) {
                throw FormatError(origin + ": " + name + " index " + std::to_string(i) +
                                  " carries class " + std::to_string(ds.labels[i]) +
                                  " outside its class set");
            }
        }
    };
    check_indices(ds.split.train_idx, seen, "train");
    check_indices(ds.split.test_seen_idx, seen, "test_seen");
    check_indices(ds.split.test_unseen_idx, unseen, "test_unseen");

    std::set<std::size_t> used;
    auto check_disjoint = [&](const std::vector<std::size_t>& idx, const std::string& name) {
        for (std::size_t i : idx) {
            if (!used.insert(i).second) {
                throw FormatError(origin + ": index " + std::to_string(i) +
                                  " appears in more than one split set (" + name + ")");
            }
        }
    };
    check_disjoint(ds.split.train_idx, "train");
    check_disjoint(ds.split.test_seen_idx, "test_seen");
    check_disjoint(ds.split.test_unseen_idx, "test_unseen");
}

namespace {

Matrix read_csv_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("read_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw FormatError(path + ": empty CSV");
    std::vector<double> values;
    std::size_t cols = 0, rows = 0;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t c = 0;
        while (std::getline(ss, cell, ',')) {
            try {
                values.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw FormatError(path + ": row " + std::to_string(lineno) +
                                  " has non-numeric cell '" + cell + "'");
            }
            ++c;
        }
        if (cols == 0) {
            cols = c;
        } else if (c != cols) {
            throw FormatError(path + ": row " + std::to_string(lineno) + " has " +
                              std::to_string(c) + " cells, expected " + std::to_string(cols));
        }
        ++rows;
    }
    Matrix m(rows, cols);
    m.data = std::move(values);
    return m;
}

Matrix read_matrix_file(const fs::path& dir, const std::string& stem) {
    const fs::path npy = dir / (stem + ".npy");
    if (fs::exists(npy)) return read_npy(npy.string());
    const fs::path csv = dir / (stem + ".csv");
    if (fs::exists(csv)) return read_csv_matrix(csv.string());
    throw FormatError("load_dataset: missing " + stem + ".npy / " + stem + ".csv in " +
                      dir.string());
}

std::vector<int> read_labels(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("load_dataset: missing " + path.string());
    std::vector<int> labels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            labels.push_back(std::stoi(line));
        } catch (const std::exception&) {
            throw FormatError(path.string() + ": row " + std::to_string(lineno) +
                              " is not an integer label");
        }
    }
    return labels;
}

template <typename T>
std::vector<T> json_list(const json& j, const std::string& key, const std::string& path) {
    if (!j.contains(key) || !j[key].is_array()) {
        throw FormatError(path + ": split manifest missing array '" + key + "'");
    }
    std::vector<T> out;
    for (const auto& v : j[key]) out.push_back(v.get<T>());
    return out;
}

}  // namespace

ZslDataset load_dataset(const std::string& dir) {
    const fs::path root(dir);
    ZslDataset ds;
    ds.features = read_matrix_file(root, "features");
    ds.attributes = read_matrix_file(root, "attributes");
    ds.labels = read_labels(root / "labels.txt");

    const fs::path split_path = root / "split.json";
    std::ifstream in(split_path);
    if (!in) throw FormatError("load_dataset: missing " + split_path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError(split_path.string() + ": " + e.what());
    }
    ds.split.seen_classes = json_list<int>(j, "seen", split_path.string());
    ds.split.unseen_classes = json_list<int>(j, "unseen", split_path.string());
    ds.split.train_idx = json_list<std::size_t>(j, "train", split_path.string());
    ds.split.test_seen_idx = json_list<std::size_t>(j, "test_seen", split_path.string());
    ds.split.test_unseen_idx = json_list<std::size_t>(j, "test_unseen", split_path.string());
    std::sort(ds.split.seen_classes.begin(), ds.split.seen_classes.end());
    std::sort(ds.split.unseen_classes.begin(), ds.split.unseen_classes.end());

    validate_dataset(ds, dir);
    return ds;
}

void save_dataset(const ZslDataset& ds, const std::string& dir) {
    const fs::path root(dir);
    fs::create_directories(root);
    write_npy((root / "features.npy").string(), ds.features, NpyDtype::f64);
    write_npy((root / "attributes.npy").string(), ds.attributes, NpyDtype::f64);

    std::ofstream labels(root / "labels.txt");
    for (int l : ds.labels) labels << l << "\n";
    if (!labels) throw FormatError("save_dataset: write failed for labels.txt");

    json j;
    j["seen"] = ds.split.seen_classes;
    j["unseen"] = ds.split.unseen_classes;
    j["train"] = ds.split.train_idx;
    j["test_seen"] = ds.split.test_seen_idx;
    j["test_unseen"] = ds.split.test_unseen_idx;
    std::ofstream split(root / "split.json");
    split << j.dump(2) << "\n";
    if (!split) throw FormatError("save_dataset: write failed for split.json");
}

ZslDataset synth_generate(const SynthConfig& cfg) {
    if (cfg.attr_dim < 1) throw ConfigError("synth: attr_dim must be >= 1");
    if (cfg.feature_dim < cfg.attr_dim) {
        throw ConfigError("synth: feature_dim must be >= attr_dim");
    }
    if (cfg.seen_classes < 1) throw ConfigError("synth: seen_classes must be >= 1");
    if (cfg.unseen_classes < 1) throw ConfigError("synth: unseen_classes must be >= 1");
    if (cfg.samples_per_class < 1) throw ConfigError("synth: samples_per_class must be >= 1");

    const std::size_t C = cfg.seen_classes + cfg.unseen_classes;
    const std::size_t per = cfg.samples_per_class;
    const std::size_t n = C * per;

    Rng attr_rng(Rng::child_seed(cfg.seed, 11));
    ZslDataset ds;
    ds.attributes = Matrix(C, cfg.attr_dim);
    for (double& v : ds.attributes.data) v = attr_rng.uniform01();

    // Fixed random attribute-to-feature map; one hidden LeakyReLU layer.
    const Mlp map = init_mlp(cfg.attr_dim,
                             {{4 * cfg.attr_dim, Activation::leaky_relu},
                              {cfg.feature_dim, Activation::linear}},
                             Rng::child_seed(cfg.seed, 12));
    const Matrix class_means = forward(map, ds.attributes);

    Rng noise_rng(Rng::child_seed(cfg.seed, 13));
    ds.features = Matrix(n, cfg.feature_dim);
    ds.labels.reserve(n);
    for (std::size_t c = 0; c < C; ++c) {
        const double* mean = class_means.row(c);
        for (std::size_t s = 0; s < per; ++s) {
            double* row = ds.features.row(c * per + s);
            for (std::size_t j = 0; j < cfg.feature_dim; ++j) {
                const double eta =
                    cfg.noise_sigma > 0.0 ? cfg.noise_sigma * noise_rng.gaussian() : 0.0;
                row[j] = mean[j] + eta;
            }
            ds.labels.push_back(static_cast<int>(c));
        }
    }

    Rng split_rng(Rng::child_seed(cfg.seed, 14));
    for (std::size_t c = 0; c < C; ++c) {
        std::vector<std::size_t> idx(per);
        for (std::size_t s = 0; s < per; ++s) idx[s] = c * per + s;
        if (c < cfg.seen_classes) {
            ds.split.seen_classes.push_back(static_cast<int>(c));
            split_rng.shuffle(idx);
            const std::size_t n_train = std::max<std::size_t>(1, per * 8 / 10);
            for (std::size_t s = 0; s < idx.size(); ++s) {
                (s < n_train ? ds.split.train_idx : ds.split.test_seen_idx).push_back(idx[s]);
            }
        } else {
            ds.split.unseen_classes.push_back(static_cast<int>(c));
            ds.split.test_unseen_idx.insert(ds.split.test_unseen_idx.end(), idx.begin(),
                                            idx.end());
        }
    }
    std::sort(ds.split.train_idx.begin(), ds.split.train_idx.end());
    std::sort(ds.split.test_seen_idx.begin(), ds.split.test_seen_idx.end());

    validate_dataset(ds, "synth");
    return ds;
}

PkBatcher::PkBatcher(const ZslDataset& ds, std::size_t P, std::size_t K, std::uint64_t seed)
    : P_(P), K_(K), seed_(seed) {
    if (P < 2) throw ConfigError("pk_batches: P must be >= 2");
    if (K < 2) throw ConfigError("pk_batches: K must be >= 2");
    for (std::size_t i : ds.split.train_idx) {
        class_pools_[ds.labels[i]].push_back(i);
    }
    std::size_t feasible = 0;
    for (auto it = class_pools_.begin(); it != class_pools_.end();) {
        if (it->second.size() < K) {
            it = class_pools_.erase(it);  // too small to ever fill a slot
        } else {
            ++feasible;
            ++it;
        }
    }
    if (feasible < P) {
        throw ConfigError("pk_batches: only " + std::to_string(feasible) +
                          " train classes have >= " + std::to_string(K) +
                          " samples, need P=" + std::to_string(P));
    }
}

std::vector<std::vector<std::size_t>> PkBatcher::next_epoch() {
    Rng rng(Rng::child_seed(seed_, epoch_++));
    std::map<int, std::vector<std::size_t>> pools = class_pools_;
    for (auto& [cls, pool] : pools) rng.shuffle(pool);

    std::vector<std::vector<std::size_t>> batches;
    for (;;) {
        std::vector<int> eligible;
        for (const auto& [cls, pool] : pools) {
            if (pool.size() >= K_) eligible.push_back(cls);
        }
        if (eligible.size() < P_) break;
        rng.shuffle(eligible);
        std::vector<std::size_t> batch;
        batch.reserve(P_ * K_);
        for (std::size_t p = 0; p < P_; ++p) {
            auto& pool = pools[eligible[p]];
            for (std::size_t k = 0; k < K_; ++k) {
                batch.push_back(pool.back());
                pool.pop_back();
            }
        }
        batches.push_back(std::move(batch));
    }
    return batches;
}

}  // namespace zsl
