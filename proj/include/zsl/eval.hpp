#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "zsl/matrix.hpp"

namespace zsl {

struct PerClassAccuracy {
    std::map<int, double> per_class;
    double mean = 0.0;  // unweighted over classes
};

/// Per-class top-1: correct_i / total_i per class, averaged with equal class
/// weight. Throws EvalError naming a class with zero test samples or a truth
/// label outside the class set.
PerClassAccuracy per_class_top1(const std::vector<int>& pred, const std::vector<int>& truth,
                                const std::vector<int>& classes);

/// 2ab/(a+b), 0 when both sides are 0.
double harmonic_mean(double acc_seen, double acc_unseen);

struct ConfusionMatrix {
    std::vector<int> classes;  // row/column order
    Matrix counts;             // counts(i,j) = truth classes[i] predicted classes[j]
};

ConfusionMatrix confusion_matrix(const std::vector<int>& pred, const std::vector<int>& truth,
                                 const std::vector<int>& classes);

struct RocCurve {
    int class_id = 0;
    std::vector<double> fpr;  // per threshold step, descending threshold
    std::vector<double> tpr;
    double auc = 0.0;
};

struct RocResult {
    std::vector<RocCurve> curves;
    std::vector<int> skipped;  // classes absent from the truth labels
};

/// One-vs-rest ROC per score column; tied scores collapse into one threshold
/// step so an uninformative scorer scores exactly 0.5 AUC (trapezoidal).
RocResult roc_auc(const Matrix& scores, const std::vector<int>& truth,
                  const std::vector<int>& classes);

struct GzslMetrics {
    double acc_seen = 0.0;
    double acc_unseen = 0.0;
    double harmonic = 0.0;
};

struct EvalReport {
    double top1 = 0.0;
    std::map<int, double> per_class;
    std::vector<int> classes;
    ConfusionMatrix confusion;
    std::optional<GzslMetrics> gzsl;
    std::optional<RocResult> roc;
    std::optional<Matrix> embeddings_2d;     // test embeddings projected to 2 PCs
    std::vector<int> embedding_labels;
};

/// First two principal components of the rows of x (power iteration with
/// deflation), returned as an n x 2 matrix.
Matrix pca_2d(const Matrix& x);

/// Writes report.json, confusion.csv, roc_<class>.csv and embeddings.csv
/// into dir. Floats are written with 17 significant digits.
void emit_report(const EvalReport& report, const std::string& dir);

}  // namespace zsl
