#include "zsl/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include "zsl/errors.hpp"
#include "zsl/rng.hpp"

namespace zsl {

namespace {

struct UnrolledForward {
    Matrix embeds;
    ForwardCache enc_cache;
    TripletResult triplet;
    // One entry per feedback iteration.
    std::vector<ForwardCache> dec_caches;
    std::vector<ForwardCache> reg_caches;
    std::vector<Matrix> xhats;
    std::vector<Matrix> sems;
    std::vector<Matrix> dises;
    std::vector<ReconstructionResult> recs;
    std::vector<RegressorLossResult> regs;
    std::vector<RegressorLossResult> regs_crossed;  // halves swapped
    BatchLosses losses;
};

UnrolledForward run_forward(const ZslModel& model, const Matrix& x,
                            const std::vector<int>& labels, const Matrix& attr,
                            const ObjectiveWeights& w, const TripletConfig& triplet,
                            const FeedbackConfig& feedback, bool keep_caches) {
    if (feedback.iterations < 1) {
        throw std::invalid_argument("objective: feedback iterations must be >= 1");
    }
    const std::size_t D = model.attr_dim;
    const std::size_t T = feedback.iterations;

    UnrolledForward f;
    f.embeds = forward(model.encoder, x, keep_caches ? &f.enc_cache : nullptr);
    f.triplet = triplet_batch_hard(f.embeds, labels, triplet);

    double rec_sum = 0.0, reg_sum = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        const Matrix z = (t == 0) ? hcat(f.embeds, attr) : hcat(f.dises[t - 1], f.sems[t - 1]);
        f.dec_caches.emplace_back();
        Matrix xhat = forward(model.decoder, z, keep_caches ? &f.dec_caches.back() : nullptr);
        f.recs.push_back(reconstruction_loss(x, xhat));
        rec_sum += f.recs.back().loss;

        f.reg_caches.emplace_back();
        const Matrix reg_out =
            forward(model.regressor, xhat, keep_caches ? &f.reg_caches.back() : nullptr);
        f.xhats.push_back(std::move(xhat));
        f.sems.push_back(col_slice(reg_out, 0, D));
        f.dises.push_back(col_slice(reg_out, D, 2 * D));
        // Both halves regress onto both targets (the printed loss applies one
        // regressor output to the semantic and the discriminative term); the
        // straight call covers sem->a / dis->embed, the crossed call covers
        // dis->a / sem->embed.
        f.regs.push_back(regressor_loss(f.sems[t], f.dises[t], attr, f.embeds, w.lambda));
        f.regs_crossed.push_back(
            regressor_loss(f.dises[t], f.sems[t], attr, f.embeds, w.lambda));
        reg_sum += f.regs.back().loss + f.regs_crossed.back().loss;
    }
    f.losses.l_triplet = f.triplet.loss;
    f.losses.l_reconstr = rec_sum / static_cast<double>(T);
    f.losses.l_reg = reg_sum / static_cast<double>(T);
    f.losses.l_total = full_objective(f.losses.l_triplet, f.losses.l_reconstr, f.losses.l_reg, w);
    return f;
}

void add_into(Matrix& dst, const Matrix& src, double scale) {
    for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += scale * src.data[i];
}

}  // namespace

BatchLosses eval_objective(const ZslModel& model, const Matrix& x, const std::vector<int>& labels,
                           const Matrix& attr, const ObjectiveWeights& w,
                           const TripletConfig& triplet, const FeedbackConfig& feedback) {
    return run_forward(model, x, labels, attr, w, triplet, feedback, false).losses;
}

BatchBackprop backprop_objective(const ZslModel& model, const Matrix& x,
                                 const std::vector<int>& labels, const Matrix& attr,
                                 const ObjectiveWeights& w, const TripletConfig& triplet,
                                 const FeedbackConfig& feedback) {
    UnrolledForward f = run_forward(model, x, labels, attr, w, triplet, feedback, true);
    const std::size_t D = model.attr_dim;
    const std::size_t T = feedback.iterations;
    const std::size_t n = x.rows;
    const double inv_T = 1.0 / static_cast<double>(T);

    BatchBackprop out;
    out.losses = f.losses;
    out.encoder = MlpGrads::zeros_like(model.encoder);
    out.decoder = MlpGrads::zeros_like(model.decoder);
    out.regressor = MlpGrads::zeros_like(model.regressor);

    Matrix grad_embeds = f.triplet.grad;  // zero when the triplet term is disabled

    // Walk the unrolled chain backwards; grad_sem/grad_dis carry what flows
    // into iteration t's regressor output from iteration t+1's decode input.
    Matrix carry_sem, carry_dis;
    for (std::size_t t = T; t-- > 0;) {
        Matrix grad_reg_out(n, 2 * D, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double* grow = grad_reg_out.row(i);
            const double* gs = f.regs[t].grad_sem.row(i);
            const double* gd = f.regs[t].grad_dis.row(i);
            // The crossed call's first argument was the dis half and its
            // second the sem half, so its gradients land swapped.
            const double* xs = f.regs_crossed[t].grad_sem.row(i);
            const double* xd = f.regs_crossed[t].grad_dis.row(i);
            for (std::size_t j = 0; j < D; ++j) {
                grow[j] = w.beta * inv_T * (gs[j] + xd[j]);
                grow[D + j] = w.beta * inv_T * (gd[j] + xs[j]);
            }
        }
        if (t + 1 < T) {
            for (std::size_t i = 0; i < n; ++i) {
                double* grow = grad_reg_out.row(i);
                const double* cs = carry_sem.row(i);
                const double* cd = carry_dis.row(i);
                for (std::size_t j = 0; j < D; ++j) {
                    grow[j] += cs[j];
                    grow[D + j] += cd[j];
                }
            }
        }

        Matrix grad_xhat_from_reg;
        MlpGrads reg_grads =
            backward(model.regressor, f.reg_caches[t], grad_reg_out, &grad_xhat_from_reg);
        out.regressor.accumulate(reg_grads);

        Matrix grad_xhat = grad_xhat_from_reg;
        add_into(grad_xhat, f.recs[t].grad_xhat, w.alpha * inv_T);

        Matrix grad_z;
        MlpGrads dec_grads = backward(model.decoder, f.dec_caches[t], grad_xhat, &grad_z);
        out.decoder.accumulate(dec_grads);

        // Direct dependency of the discriminative regressor terms on the
        // embeddings.
        add_into(grad_embeds, f.regs[t].grad_embed, w.beta * inv_T);
        add_into(grad_embeds, f.regs_crossed[t].grad_embed, w.beta * inv_T);

        if (t == 0) {
            // z_1 = [embeds | attr]; the attribute slot is data.
            const Matrix ge = col_slice(grad_z, 0, D);
            add_into(grad_embeds, ge, 1.0);
        } else {
            // z_t = [dis_{t-1} | sem_{t-1}]
            carry_dis = col_slice(grad_z, 0, D);
            carry_sem = col_slice(grad_z, D, 2 * D);
        }
    }

    out.encoder = backward(model.encoder, f.enc_cache, grad_embeds);
    return out;
}

TrainLog train(ZslModel& model, const ZslDataset& ds, const TrainConfig& cfg) {
    if (cfg.epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (ds.feature_dim() != model.feature_dim || ds.attr_dim() != model.attr_dim) {
        throw ConfigError("train: dataset dims (d_x=" + std::to_string(ds.feature_dim()) +
                          ", D=" + std::to_string(ds.attr_dim()) +
                          ") do not match model (d_x=" + std::to_string(model.feature_dim) +
                          ", D=" + std::to_string(model.attr_dim) + ")");
    }
    PkBatcher batcher(ds, cfg.batch_classes, cfg.batch_samples,
                      Rng::child_seed(cfg.seed, 21));
    AdamState enc_state = AdamState::init(model.encoder, cfg.adam);
    AdamState dec_state = AdamState::init(model.decoder, cfg.adam);
    AdamState reg_state = AdamState::init(model.regressor, cfg.adam);

    TrainLog log;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto batches = batcher.next_epoch();
        if (batches.empty()) {
            throw ConfigError("train: PK sampler produced no batches");
        }
        EpochStats stats;
        stats.epoch = epoch;
        for (std::size_t b = 0; b < batches.size(); ++b) {
            const auto& idx = batches[b];
            const Matrix x = gather_rows(ds.features, idx);
            const std::vector<int> labels = ds.labels_for(idx);
            const Matrix attr = ds.attrs_for(idx);
            try {
                BatchBackprop bp = backprop_objective(model, x, labels, attr, cfg.weights,
                                                      cfg.triplet, cfg.feedback);
                adam_step(model.encoder, bp.encoder, enc_state);
                adam_step(model.decoder, bp.decoder, dec_state);
                adam_step(model.regressor, bp.regressor, reg_state);
                stats.l_triplet += bp.losses.l_triplet;
                stats.l_reconstr += bp.losses.l_reconstr;
                stats.l_reg += bp.losses.l_reg;
                stats.l_total += bp.losses.l_total;
            } catch (const TrainingError& e) {
                throw TrainingError("epoch " + std::to_string(epoch) + " batch " +
                                    std::to_string(b) + ": " + e.what());
            }
        }
        const double inv_b = 1.0 / static_cast<double>(batches.size());
        stats.l_triplet *= inv_b;
        stats.l_reconstr *= inv_b;
        stats.l_reg *= inv_b;
        stats.l_total *= inv_b;
        log.epochs.push_back(stats);
    }
    return log;
}

// ---------------------------------------------------------------------------
// Linear SVM (Pegasos)

LinearSvm fit_svm(const Matrix& x, const std::vector<int>& y, const SvmConfig& cfg) {
    if (x.rows == 0) throw ConfigError("fit_svm: empty training set");
    if (y.size() != x.rows) {
        throw ConfigError("fit_svm: " + std::to_string(y.size()) + " labels for " +
                          std::to_string(x.rows) + " rows");
    }
    std::set<int> class_set(y.begin(), y.end());
    if (class_set.size() < 2) {
        throw ConfigError("fit_svm: need at least two classes, got " +
                          std::to_string(class_set.size()));
    }
    LinearSvm svm;
    svm.classes.assign(class_set.begin(), class_set.end());
    svm.weights = Matrix(svm.classes.size(), x.cols, 0.0);
    svm.bias.assign(svm.classes.size(), 0.0);

    const std::size_t steps = cfg.epochs * x.rows;
    for (std::size_t ci = 0; ci < svm.classes.size(); ++ci) {
        const int cls = svm.classes[ci];
        std::vector<std::size_t> pos, neg;
        for (std::size_t i = 0; i < y.size(); ++i) {
            (y[i] == cls ? pos : neg).push_back(i);
        }
        Rng rng(Rng::child_seed(cfg.seed, 0x5173u + ci));
        std::vector<std::size_t> pos_pool, neg_pool;
        auto draw = [&rng](std::vector<std::size_t>& pool, const std::vector<std::size_t>& all) {
            if (pool.empty()) {
                pool = all;
                rng.shuffle(pool);
            }
            const std::size_t i = pool.back();
            pool.pop_back();
            return i;
        };

        double* w = svm.weights.row(ci);
        double& b = svm.bias[ci];
        for (std::size_t t = 1; t <= steps; ++t) {
            // Balanced sampling: alternate the positive and negative pools.
            const std::size_t i =
                (t % 2 == 1) ? draw(pos_pool, pos) : draw(neg_pool, neg);
            const double target = (y[i] == cls) ? 1.0 : -1.0;
            const double* xi = x.row(i);
            double score = b;
            for (std::size_t j = 0; j < x.cols; ++j) score += w[j] * xi[j];

            const double eta = 1.0 / (cfg.reg * static_cast<double>(t));
            const double shrink = 1.0 - 1.0 / static_cast<double>(t);  // 1 - eta*reg
            for (std::size_t j = 0; j < x.cols; ++j) w[j] *= shrink;
            if (target * score < 1.0) {
                for (std::size_t j = 0; j < x.cols; ++j) w[j] += eta * target * xi[j];
                // Unregularized bias with a decaying step.
                b += target / static_cast<double>(t);
            }
        }
    }
    return svm;
}

std::pair<std::vector<int>, Matrix> svm_predict(const LinearSvm& svm, const Matrix& x) {
    if (x.cols != svm.weights.cols) {
        throw std::invalid_argument("svm_predict: input " + x.shape_str() +
                                    " does not match trained dim " +
                                    std::to_string(svm.weights.cols));
    }
    Matrix scores = matmul(x, transpose(svm.weights));
    for (std::size_t i = 0; i < scores.rows; ++i) {
        double* row = scores.row(i);
        for (std::size_t c = 0; c < svm.classes.size(); ++c) row[c] += svm.bias[c];
    }
    std::vector<int> labels(x.rows);
    for (std::size_t i = 0; i < scores.rows; ++i) {
        const double* row = scores.row(i);
        std::size_t best = 0;
        for (std::size_t c = 1; c < svm.classes.size(); ++c) {
            if (row[c] > row[best]) best = c;  // ties keep the lowest class id
        }
        labels[i] = svm.classes[best];
    }
    return {std::move(labels), std::move(scores)};
}

// ---------------------------------------------------------------------------
// KNN

std::pair<std::vector<int>, Matrix> knn_predict_scores(const Matrix& train_x,
                                                       const std::vector<int>& train_y,
                                                       const Matrix& x, std::size_t k,
                                                       const std::vector<int>& classes) {
    if (train_x.rows == 0) throw ConfigError("knn_predict: empty training set");
    if (k < 1 || k > train_x.rows) {
        throw ConfigError("knn_predict: k=" + std::to_string(k) + " with " +
                          std::to_string(train_x.rows) + " training rows");
    }
    if (x.cols != train_x.cols) {
        throw std::invalid_argument("knn_predict: input " + x.shape_str() +
                                    " does not match training dim " +
                                    std::to_string(train_x.cols));
    }
    std::map<int, std::size_t> class_col;
    for (std::size_t c = 0; c < classes.size(); ++c) class_col[classes[c]] = c;

    std::vector<int> labels(x.rows);
    Matrix scores(x.rows, classes.size(), 0.0);
    std::vector<std::pair<double, std::size_t>> dists(train_x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const double* q = x.row(i);
        for (std::size_t r = 0; r < train_x.rows; ++r) {
            const double* t = train_x.row(r);
            double d = 0.0;
            for (std::size_t j = 0; j < x.cols; ++j) {
                const double diff = q[j] - t[j];
                d += diff * diff;
            }
            dists[r] = {d, r};
        }
        std::partial_sort(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(k),
                          dists.end());
        std::map<int, std::size_t> votes;
        for (std::size_t r = 0; r < k; ++r) votes[train_y[dists[r].second]] += 1;
        int best = 0;
        std::size_t best_votes = 0;
        for (const auto& [cls, count] : votes) {
            if (count > best_votes) {  // map order makes ties pick the lowest id
                best = cls;
                best_votes = count;
            }
            const auto col = class_col.find(cls);
            if (col != class_col.end()) {
                scores(i, col->second) =
                    static_cast<double>(count) / static_cast<double>(k);
            }
        }
        labels[i] = best;
    }
    return {std::move(labels), std::move(scores)};
}

std::vector<int> knn_predict(const Matrix& train_x, const std::vector<int>& train_y,
                             const Matrix& x, std::size_t k) {
    std::set<int> class_set(train_y.begin(), train_y.end());
    std::vector<int> classes(class_set.begin(), class_set.end());
    return knn_predict_scores(train_x, train_y, x, k, classes).first;
}

// ---------------------------------------------------------------------------
// End-to-end prediction

namespace {

PredictResult run_classifier(const Matrix& train_x, const std::vector<int>& train_y,
                             const Matrix& test_x, const std::vector<int>& classes,
                             const ClassifierConfig& cfg) {
    PredictResult res;
    res.classes = classes;
    if (cfg.kind == ClassifierConfig::Kind::svm) {
        LinearSvm svm = fit_svm(train_x, train_y, cfg.svm);
        auto [labels, scores] = svm_predict(svm, test_x);
        res.labels = std::move(labels);
        res.scores = std::move(scores);
    } else {
        auto [labels, scores] = knn_predict_scores(train_x, train_y, test_x, cfg.knn_k, classes);
        res.labels = std::move(labels);
        res.scores = std::move(scores);
    }
    return res;
}

}  // namespace

PredictResult zsl_predict(const ZslModel& model, const ZslDataset& ds,
                          const ClassifierConfig& cfg) {
    if (ds.split.test_unseen_idx.empty()) {
        throw ConfigError("zsl_predict: empty test_unseen split");
    }
    const std::vector<int>& unseen = ds.split.unseen_classes;
    const Matrix attrs = ds.attrs_of_classes(unseen);
    const GeneratedSet gen = generate_unseen(model, attrs, unseen, cfg.gen);
    const Matrix test_x = gather_rows(ds.features, ds.split.test_unseen_idx);
    return run_classifier(gen.features, gen.labels, test_x, unseen, cfg);
}

GzslResult gzsl_predict(const ZslModel& model, const ZslDataset& ds,
                        const ClassifierConfig& cfg) {
    if (ds.split.test_seen_idx.empty()) {
        throw ConfigError("gzsl_predict: empty test_seen split");
    }
    if (ds.split.test_unseen_idx.empty()) {
        throw ConfigError("gzsl_predict: empty test_unseen split");
    }
    const std::vector<int>& unseen = ds.split.unseen_classes;
    const Matrix attrs = ds.attrs_of_classes(unseen);
    const GeneratedSet gen = generate_unseen(model, attrs, unseen, cfg.gen);

    const Matrix real_x = gather_rows(ds.features, ds.split.train_idx);
    const std::vector<int> real_y = ds.labels_for(ds.split.train_idx);

    Matrix train_x(real_x.rows + gen.features.rows, real_x.cols);
    std::copy(real_x.data.begin(), real_x.data.end(), train_x.data.begin());
    std::copy(gen.features.data.begin(), gen.features.data.end(),
              train_x.data.begin() + static_cast<std::ptrdiff_t>(real_x.data.size()));
    std::vector<int> train_y = real_y;
    train_y.insert(train_y.end(), gen.labels.begin(), gen.labels.end());

    GzslResult res;
    res.classes = ds.split.seen_classes;
    res.classes.insert(res.classes.end(), unseen.begin(), unseen.end());
    std::sort(res.classes.begin(), res.classes.end());

    const std::set<int> covered(train_y.begin(), train_y.end());
    for (int c : res.classes) {
        if (!covered.count(c)) {
            throw ConfigError("gzsl_predict: class " + std::to_string(c) +
                              " has no training rows (real or generated)");
        }
    }

    const Matrix seen_x = gather_rows(ds.features, ds.split.test_seen_idx);
    const Matrix unseen_x = gather_rows(ds.features, ds.split.test_unseen_idx);
    if (cfg.kind == ClassifierConfig::Kind::svm) {
        LinearSvm svm = fit_svm(train_x, train_y, cfg.svm);
        auto [ls, ss] = svm_predict(svm, seen_x);
        res.seen = {std::move(ls), std::move(ss), res.classes};
        auto [lu, su] = svm_predict(svm, unseen_x);
        res.unseen = {std::move(lu), std::move(su), res.classes};
    } else {
        auto [ls, ss] = knn_predict_scores(train_x, train_y, seen_x, cfg.knn_k, res.classes);
        res.seen = {std::move(ls), std::move(ss), res.classes};
        auto [lu, su] = knn_predict_scores(train_x, train_y, unseen_x, cfg.knn_k, res.classes);
        res.unseen = {std::move(lu), std::move(su), res.classes};
    }
    return res;
}

}  // namespace zsl
