#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "zsl/dataset.hpp"
#include "zsl/losses.hpp"
#include "zsl/matrix.hpp"
#include "zsl/model.hpp"
#include "zsl/net.hpp"

namespace zsl {

struct TrainConfig {
    std::size_t epochs = 50;
    std::size_t batch_classes = 8;  // P
    std::size_t batch_samples = 4;  // K
    AdamConfig adam;
    ObjectiveWeights weights;
    TripletConfig triplet;
    FeedbackConfig feedback;
    std::uint64_t seed = 0;
};

struct EpochStats {
    std::size_t epoch = 0;
    double l_triplet = 0.0;   // unweighted term means over the epoch's batches
    double l_reconstr = 0.0;
    double l_reg = 0.0;
    double l_total = 0.0;     // weighted objective
};

struct TrainLog {
    std::vector<EpochStats> epochs;
};

struct BatchLosses {
    double l_triplet = 0.0;
    double l_reconstr = 0.0;
    double l_reg = 0.0;
    double l_total = 0.0;
};

struct BatchBackprop {
    BatchLosses losses;
    MlpGrads encoder;
    MlpGrads decoder;
    MlpGrads regressor;
};

/// Objective of one batch: triplet on the embeddings, plus
/// reconstruction/regressor terms averaged over the feedback iterations.
BatchLosses eval_objective(const ZslModel& model, const Matrix& x, const std::vector<int>& labels,
                           const Matrix& attr, const ObjectiveWeights& w,
                           const TripletConfig& triplet, const FeedbackConfig& feedback);

/// Same objective with one joint analytic backward pass through all three
/// networks (regressor gradients flow into decoder and encoder).
BatchBackprop backprop_objective(const ZslModel& model, const Matrix& x,
                                 const std::vector<int>& labels, const Matrix& attr,
                                 const ObjectiveWeights& w, const TripletConfig& triplet,
                                 const FeedbackConfig& feedback);

/// Minimizes the full objective with PK batches and one Adam step per batch
/// per network. Deterministic under cfg.seed. Throws TrainingError naming
/// epoch/batch on non-finite losses or gradients.
TrainLog train(ZslModel& model, const ZslDataset& ds, const TrainConfig& cfg);

// ---------------------------------------------------------------------------
// Classifiers

struct SvmConfig {
    double reg = 1e-4;
    std::size_t epochs = 50;
    std::uint64_t seed = 0;
};

/// One-vs-rest linear SVM trained by Pegasos-style stochastic subgradient
/// descent (step 1/(reg*t)) with balanced positive/negative sampling.
struct LinearSvm {
    Matrix weights;            // one row per class
    std::vector<double> bias;  // per class
    std::vector<int> classes;  // sorted; row order of weights/bias/scores
};

LinearSvm fit_svm(const Matrix& x, const std::vector<int>& y, const SvmConfig& cfg);

/// Argmax-of-score labels (ties to the lowest class id) plus the raw
/// n x classes score matrix.
std::pair<std::vector<int>, Matrix> svm_predict(const LinearSvm& svm, const Matrix& x);

/// Majority vote among the k nearest training rows by squared Euclidean
/// distance; ties break to the lowest class id.
std::vector<int> knn_predict(const Matrix& train_x, const std::vector<int>& train_y,
                             const Matrix& x, std::size_t k);

/// Vote-fraction score matrix behind knn_predict, for ROC curves.
std::pair<std::vector<int>, Matrix> knn_predict_scores(const Matrix& train_x,
                                                       const std::vector<int>& train_y,
                                                       const Matrix& x, std::size_t k,
                                                       const std::vector<int>& classes);

// ---------------------------------------------------------------------------
// End-to-end prediction

struct ClassifierConfig {
    enum class Kind { svm, knn };
    Kind kind = Kind::svm;
    SvmConfig svm;
    std::size_t knn_k = 5;
    GenerateConfig gen;
};

struct PredictResult {
    std::vector<int> labels;   // one per test row
    Matrix scores;             // n x classes
    std::vector<int> classes;  // score column order
};

/// Generates unseen-class features from their attributes, fits the
/// classifier over the unseen label space only, and predicts the real
/// test_unseen rows.
PredictResult zsl_predict(const ZslModel& model, const ZslDataset& ds,
                          const ClassifierConfig& cfg);

struct GzslResult {
    PredictResult seen;        // predictions for the test_seen pool
    PredictResult unseen;      // predictions for the test_unseen pool
    std::vector<int> classes;  // union label space
};

/// One classifier over seen+unseen, trained on real seen train features plus
/// generated unseen features; the two test pools are predicted separately.
GzslResult gzsl_predict(const ZslModel& model, const ZslDataset& ds,
                        const ClassifierConfig& cfg);

}  // namespace zsl
