#include "zsl/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "zsl/errors.hpp"

namespace zsl {

TripletResult triplet_batch_hard(const Matrix& embeds, const std::vector<int>& labels,
                                 const TripletConfig& cfg) {
    const std::size_t n = embeds.rows;
    if (labels.size() != n) {
        throw std::invalid_argument("triplet_batch_hard: " + std::to_string(labels.size()) +
                                    " labels for " + std::to_string(n) + " rows");
    }
    TripletResult res;
    res.grad = Matrix(embeds.rows, embeds.cols, 0.0);
    if (!cfg.enabled()) return res;

    const Matrix dists = pairwise_sq_dists(embeds);
    res.hardest_positive.resize(n);
    res.hardest_negative.resize(n);

    double total = 0.0;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        bool has_pos = false, has_neg = false;
        std::size_t pos = 0, neg = 0;
        double d1 = -1.0, d2 = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            if (labels[j] == labels[i]) {
                if (!has_pos || dists(i, j) > d1) {
                    d1 = dists(i, j);
                    pos = j;
                    has_pos = true;
                }
            } else {
                if (!has_neg || dists(i, j) < d2) {
                    d2 = dists(i, j);
                    neg = j;
                    has_neg = true;
                }
            }
        }
        if (!has_pos) {
            throw std::invalid_argument("triplet_batch_hard: class " +
                                        std::to_string(labels[i]) +
                                        " has a single sample in the batch");
        }
        if (!has_neg) {
            throw std::invalid_argument("triplet_batch_hard: class " +
                                        std::to_string(labels[i]) +
                                        " is the only class in the batch");
        }
        res.hardest_positive[i] = pos;
        res.hardest_negative[i] = neg;
        const double term = cfg.margin + d1 - d2;
        if (term > 0.0) {
            total += term;
            // d(d1)/d(e): 2(e_i - e_p) at the anchor, negated at the positive.
            // d(-d2)/d(e): -2(e_i - e_n) at the anchor, +2(e_i - e_n) at the negative.
            const double* ei = embeds.row(i);
            const double* ep = embeds.row(pos);
            const double* en = embeds.row(neg);
            double* gi = res.grad.row(i);
            double* gp = res.grad.row(pos);
            double* gn = res.grad.row(neg);
            for (std::size_t c = 0; c < embeds.cols; ++c) {
                const double dp = 2.0 * (ei[c] - ep[c]) * inv_n;
                const double dn = 2.0 * (ei[c] - en[c]) * inv_n;
                gi[c] += dp - dn;
                gp[c] -= dp;
                gn[c] += dn;
            }
        }
    }
    res.loss = total * inv_n;
    return res;
}

ReconstructionResult reconstruction_loss(const Matrix& x, const Matrix& xhat) {
    if (!x.same_shape(xhat)) {
        throw std::invalid_argument("reconstruction_loss: shape mismatch " + x.shape_str() +
                                    " vs " + xhat.shape_str());
    }
    ReconstructionResult res;
    res.grad_xhat = Matrix(x.rows, x.cols);
    const double inv_n = 1.0 / static_cast<double>(x.rows);
    double total = 0.0;
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        const double diff = x.data[i] - xhat.data[i];
        total += diff * diff;
        res.grad_xhat.data[i] = 2.0 * (xhat.data[i] - x.data[i]) * inv_n;
    }
    res.loss = total * inv_n;
    return res;
}

RegressorLossResult regressor_loss(const Matrix& sem, const Matrix& dis, const Matrix& attr,
                                   const Matrix& embed, double lambda) {
    if (!sem.same_shape(attr) || !dis.same_shape(embed) || !sem.same_shape(dis)) {
        throw std::invalid_argument(
            "regressor_loss: shape mismatch sem " + sem.shape_str() + " dis " +
            dis.shape_str() + " attr " + attr.shape_str() + " embed " + embed.shape_str());
    }
    RegressorLossResult res;
    res.grad_sem = Matrix(sem.rows, sem.cols);
    res.grad_dis = Matrix(dis.rows, dis.cols);
    res.grad_embed = Matrix(embed.rows, embed.cols);
    const double inv_n = 1.0 / static_cast<double>(sem.rows);
    double sem_total = 0.0, dis_total = 0.0;
    for (std::size_t i = 0; i < sem.data.size(); ++i) {
        const double ds = attr.data[i] - sem.data[i];
        sem_total += ds * ds;
        res.grad_sem.data[i] = 2.0 * (sem.data[i] - attr.data[i]) * inv_n;

        const double dd = embed.data[i] - dis.data[i];
        dis_total += dd * dd;
        res.grad_dis.data[i] = lambda * 2.0 * (dis.data[i] - embed.data[i]) * inv_n;
        res.grad_embed.data[i] = lambda * 2.0 * (embed.data[i] - dis.data[i]) * inv_n;
    }
    res.semantic = sem_total * inv_n;
    res.discriminative = dis_total * inv_n;
    res.loss = res.semantic + lambda * res.discriminative;
    return res;
}

double full_objective(double l_triplet, double l_reconstr, double l_reg,
                      const ObjectiveWeights& w) {
    if (!std::isfinite(l_triplet)) throw TrainingError("full_objective: non-finite triplet term");
    if (!std::isfinite(l_reconstr)) {
        throw TrainingError("full_objective: non-finite reconstruction term");
    }
    if (!std::isfinite(l_reg)) throw TrainingError("full_objective: non-finite regressor term");
    return l_triplet + w.alpha * l_reconstr + w.beta * l_reg;
}

}  // namespace zsl
