#include "zsl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "zsl/errors.hpp"
#include "zsl/rng.hpp"

namespace fs = std::filesystem;

namespace zsl {

PerClassAccuracy per_class_top1(const std::vector<int>& pred, const std::vector<int>& truth,
                                const std::vector<int>& classes) {
    if (pred.size() != truth.size()) {
        throw EvalError("per_class_top1: " + std::to_string(pred.size()) +
                        " predictions for " + std::to_string(truth.size()) + " truths");
    }
    std::map<int, std::size_t> total, correct;
    for (int c : classes) total[c] = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const auto it = total.find(truth[i]);
        if (it == total.end()) {
            throw EvalError("per_class_top1: truth label " + std::to_string(truth[i]) +
                            " outside the class set");
        }
        it->second += 1;
        if (pred[i] == truth[i]) correct[truth[i]] += 1;
    }
    PerClassAccuracy acc;
    double sum = 0.0;
    for (int c : classes) {
        if (total[c] == 0) {
            throw EvalError("per_class_top1: class " + std::to_string(c) +
                            " has no test samples");
        }
        const double a = static_cast<double>(correct[c]) / static_cast<double>(total[c]);
        acc.per_class[c] = a;
        sum += a;
    }
    acc.mean = sum / static_cast<double>(classes.size());
    return acc;
}

double harmonic_mean(double acc_seen, double acc_unseen) {
    if (acc_seen == acc_unseen) return acc_seen;  // keeps H(a, a) == a exact
    const double denom = acc_seen + acc_unseen;
    if (denom == 0.0) return 0.0;
    return 2.0 * acc_seen * acc_unseen / denom;
}

ConfusionMatrix confusion_matrix(const std::vector<int>& pred, const std::vector<int>& truth,
                                 const std::vector<int>& classes) {
    if (pred.size() != truth.size()) {
        throw EvalError("confusion_matrix: prediction/truth length mismatch");
    }
    std::map<int, std::size_t> index;
    for (std::size_t i = 0; i < classes.size(); ++i) index[classes[i]] = i;
    ConfusionMatrix cm;
    cm.classes = classes;
    cm.counts = Matrix(classes.size(), classes.size(), 0.0);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const auto t = index.find(truth[i]);
        const auto p = index.find(pred[i]);
        if (t == index.end()) {
            throw EvalError("confusion_matrix: truth label " + std::to_string(truth[i]) +
                            " outside the class set");
        }
        if (p == index.end()) {
            throw EvalError("confusion_matrix: predicted label " + std::to_string(pred[i]) +
                            " outside the class set");
        }
        cm.counts(t->second, p->second) += 1.0;
    }
    return cm;
}

RocResult roc_auc(const Matrix& scores, const std::vector<int>& truth,
                  const std::vector<int>& classes) {
    if (scores.rows != truth.size()) {
        throw EvalError("roc_auc: " + std::to_string(scores.rows) + " score rows for " +
                        std::to_string(truth.size()) + " truths");
    }
    if (scores.cols != classes.size()) {
        throw EvalError("roc_auc: " + std::to_string(scores.cols) + " score columns for " +
                        std::to_string(classes.size()) + " classes");
    }
    RocResult res;
    const std::size_t n = truth.size();
    for (std::size_t ci = 0; ci < classes.size(); ++ci) {
        const int cls = classes[ci];
        std::size_t n_pos = 0;
        for (int t : truth) {
            if (t == cls) ++n_pos;
        }
        const std::size_t n_neg = n - n_pos;
        if (n_pos == 0 || n_neg == 0) {
            res.skipped.push_back(cls);
            continue;
        }
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return scores(a, ci) > scores(b, ci);
        });

        RocCurve curve;
        curve.class_id = cls;
        curve.fpr.push_back(0.0);
        curve.tpr.push_back(0.0);
        double auc = 0.0;
        std::size_t tp = 0, fp = 0;
        std::size_t i = 0;
        while (i < n) {
            // All samples tied at this score form one threshold step.
            const double s = scores(order[i], ci);
            while (i < n && scores(order[i], ci) == s) {
                if (truth[order[i]] == cls) {
                    ++tp;
                } else {
                    ++fp;
                }
                ++i;
            }
            const double fpr = static_cast<double>(fp) / static_cast<double>(n_neg);
            const double tpr = static_cast<double>(tp) / static_cast<double>(n_pos);
            auc += (fpr - curve.fpr.back()) * (tpr + curve.tpr.back()) * 0.5;
            curve.fpr.push_back(fpr);
            curve.tpr.push_back(tpr);
        }
        curve.auc = auc;
        res.curves.push_back(std::move(curve));
    }
    return res;
}

Matrix pca_2d(const Matrix& x) {
    const std::size_t n = x.rows;
    const std::size_t d = x.cols;
    Matrix centered = x;
    for (std::size_t j = 0; j < d; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += x(i, j);
        mean /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) centered(i, j) -= mean;
    }
    Matrix cov = matmul(transpose(centered), centered);  // scale is irrelevant

    auto power_iterate = [&](const Matrix& m) {
        Rng rng(42);
        std::vector<double> v(d);
        for (double& e : v) e = rng.uniform(-1.0, 1.0);
        for (int iter = 0; iter < 200; ++iter) {
            std::vector<double> next(d, 0.0);
            for (std::size_t i = 0; i < d; ++i) {
                const double* row = m.row(i);
                for (std::size_t j = 0; j < d; ++j) next[i] += row[j] * v[j];
            }
            double norm = 0.0;
            for (double e : next) norm += e * e;
            norm = std::sqrt(norm);
            if (norm < 1e-300) return std::vector<double>(d, 0.0);
            for (double& e : next) e /= norm;
            v = std::move(next);
        }
        return v;
    };

    const std::vector<double> v1 = power_iterate(cov);
    double lambda1 = 0.0;
    {
        std::vector<double> cv(d, 0.0);
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) cv[i] += cov(i, j) * v1[j];
        }
        for (std::size_t i = 0; i < d; ++i) lambda1 += v1[i] * cv[i];
    }
    Matrix deflated = cov;
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) deflated(i, j) -= lambda1 * v1[i] * v1[j];
    }
    const std::vector<double> v2 = d >= 2 ? power_iterate(deflated) : std::vector<double>(d, 0.0);

    Matrix out(n, 2, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = centered.row(i);
        double p1 = 0.0, p2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            p1 += row[j] * v1[j];
            p2 += row[j] * v2[j];
        }
        out(i, 0) = p1;
        out(i, 1) = p2;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Report files

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void emit_report(const EvalReport& report, const std::string& dir) {
    fs::create_directories(dir);
    const fs::path root(dir);

    {
        std::ofstream out(root / "report.json");
        if (!out) throw FormatError("emit_report: cannot open " + (root / "report.json").string());
        out << "{\n";
        out << "  \"top1\": " << fmt17(report.top1) << ",\n";
        out << "  \"per_class\": {";
        bool first = true;
        for (const auto& [cls, acc] : report.per_class) {
            out << (first ? "" : ", ") << "\"" << cls << "\": " << fmt17(acc);
            first = false;
        }
        out << "},\n";
        out << "  \"classes\": [";
        for (std::size_t i = 0; i < report.classes.size(); ++i) {
            out << (i ? ", " : "") << report.classes[i];
        }
        out << "],\n";
        if (report.gzsl) {
            out << "  \"gzsl\": {\"acc_seen\": " << fmt17(report.gzsl->acc_seen)
                << ", \"acc_unseen\": " << fmt17(report.gzsl->acc_unseen)
                << ", \"H\": " << fmt17(report.gzsl->harmonic) << "},\n";
        } else {
            out << "  \"gzsl\": null,\n";
        }
        if (report.roc) {
            out << "  \"auc\": {";
            first = true;
            for (const auto& curve : report.roc->curves) {
                out << (first ? "" : ", ") << "\"" << curve.class_id
                    << "\": " << fmt17(curve.auc);
                first = false;
            }
            out << "}\n";
        } else {
            out << "  \"auc\": null\n";
        }
        out << "}\n";
        if (!out) throw FormatError("emit_report: write failed for report.json");
    }

    {
        std::ofstream out(root / "confusion.csv");
        out << "truth";
        for (int c : report.confusion.classes) out << "," << c;
        out << "\n";
        for (std::size_t i = 0; i < report.confusion.classes.size(); ++i) {
            out << report.confusion.classes[i];
            for (std::size_t j = 0; j < report.confusion.classes.size(); ++j) {
                out << "," << static_cast<long long>(report.confusion.counts(i, j));
            }
            out << "\n";
        }
        if (!out) throw FormatError("emit_report: write failed for confusion.csv");
    }

    if (report.roc) {
        for (const auto& curve : report.roc->curves) {
            const fs::path path = root / ("roc_" + std::to_string(curve.class_id) + ".csv");
            std::ofstream out(path);
            out << "fpr,tpr\n";
            for (std::size_t i = 0; i < curve.fpr.size(); ++i) {
                out << fmt17(curve.fpr[i]) << "," << fmt17(curve.tpr[i]) << "\n";
            }
            if (!out) throw FormatError("emit_report: write failed for " + path.string());
        }
    }

    if (report.embeddings_2d) {
        std::ofstream out(root / "embeddings.csv");
        out << "pc1,pc2,label\n";
        for (std::size_t i = 0; i < report.embeddings_2d->rows; ++i) {
            out << fmt17((*report.embeddings_2d)(i, 0)) << ","
                << fmt17((*report.embeddings_2d)(i, 1)) << "," << report.embedding_labels[i]
                << "\n";
        }
        if (!out) throw FormatError("emit_report: write failed for embeddings.csv");
    }
}

}  // namespace zsl
