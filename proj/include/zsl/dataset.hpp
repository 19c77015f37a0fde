#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "zsl/matrix.hpp"

namespace zsl {

struct SplitSpec {
    std::vector<int> seen_classes;   // sorted, disjoint from unseen
    std::vector<int> unseen_classes; // sorted
    std::vector<std::size_t> train_idx;        // seen-class rows only
    std::vector<std::size_t> test_seen_idx;    // held-out seen rows (GZSL)
    std::vector<std::size_t> test_unseen_idx;  // unseen-class rows only
};

/// Features, labels, per-class attribute rows in [0,1], and the split.
struct ZslDataset {
    Matrix features;          // n x d_x
    std::vector<int> labels;  // n, class ids indexing attribute rows
    Matrix attributes;        // C x D
    SplitSpec split;

    std::size_t num_samples() const { return features.rows; }
    std::size_t num_classes() const { return attributes.rows; }
    std::size_t feature_dim() const { return features.cols; }
    std::size_t attr_dim() const { return attributes.cols; }

    /// Attribute row of each listed sample, stacked in order.
    Matrix attrs_for(const std::vector<std::size_t>& idx) const;
    /// Attribute rows of the given classes, stacked in class order.
    Matrix attrs_of_classes(const std::vector<int>& classes) const;
    std::vector<int> labels_for(const std::vector<std::size_t>& idx) const;
};

/// Checks every dataset invariant; throws FormatError naming the offending
/// file/field and row. `origin` names the dataset in messages.
void validate_dataset(const ZslDataset& ds, const std::string& origin);

/// Reads features/attributes (NPY or headered CSV), labels.txt and
/// split.json from a directory, then validates.
ZslDataset load_dataset(const std::string& dir);

/// Writes the directory format read by load_dataset (features/attributes as
/// f64 NPY).
void save_dataset(const ZslDataset& ds, const std::string& dir);

struct SynthConfig {
    std::size_t attr_dim = 16;      // D
    std::size_t feature_dim = 64;   // d_x, must be >= D
    std::size_t seen_classes = 20;
    std::size_t unseen_classes = 5;
    std::size_t samples_per_class = 100;
    double noise_sigma = 0.1;       // per-coordinate feature noise
    std::uint64_t seed = 0;
};

/// Desk-scale benchmark: uniform class attributes mapped through a fixed
/// random two-layer net to class-mean features; samples are means plus
/// Gaussian noise. Seen classes split 80/20 into train/test_seen; unseen
/// classes go wholly to test_unseen. Deterministic under cfg.seed.
ZslDataset synth_generate(const SynthConfig& cfg);

/// P-classes-by-K-samples batch sampler over the train split. Each epoch
/// draws without replacement inside each class; classes with fewer than K
/// remaining samples sit out the rest of the epoch.
class PkBatcher {
public:
    PkBatcher(const ZslDataset& ds, std::size_t P, std::size_t K, std::uint64_t seed);

    /// All batches of one epoch, each exactly P*K train indices (K per class).
    std::vector<std::vector<std::size_t>> next_epoch();

    std::size_t classes_per_batch() const { return P_; }
    std::size_t samples_per_class() const { return K_; }

private:
    std::size_t P_, K_;
    std::map<int, std::vector<std::size_t>> class_pools_;  // train indices per class
    std::uint64_t seed_;
    std::uint64_t epoch_ = 0;
};

}  // namespace zsl
