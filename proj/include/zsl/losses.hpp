#pragma once

#include <vector>

#include "zsl/matrix.hpp"

namespace zsl {

struct TripletConfig {
    // Margin of the hinge. Values <= 0 disable the term entirely (loss and
    // gradient identically zero), which is how the triplet ablation is run.
    double margin = 1.0;

    bool enabled() const { return margin > 0.0; }
};

struct ObjectiveWeights {
    double alpha = 1.0;   // reconstruction weight
    double beta = 1.0;    // regressor weight
    double lambda = 1.0;  // discriminative-vs-semantic weight inside the regressor loss
};

struct TripletResult {
    double loss = 0.0;
    Matrix grad;  // d(loss)/d(embeds), n x D
    // Chosen hardest positive/negative row per anchor, for oracle tests.
    std::vector<std::size_t> hardest_positive;
    std::vector<std::size_t> hardest_negative;
};

/// Batch-hard triplet loss: per anchor the farthest same-class row and the
/// nearest different-class row, hinge at the margin, mean over anchors.
/// Ties break toward the lowest row index; anchors exactly at the hinge kink
/// contribute zero gradient. Throws std::invalid_argument naming the class
/// when an anchor has no positive or no negative available.
TripletResult triplet_batch_hard(const Matrix& embeds, const std::vector<int>& labels,
                                 const TripletConfig& cfg);

struct ReconstructionResult {
    double loss = 0.0;
    Matrix grad_xhat;  // (2/n) (xhat - x)
};

/// Mean over rows of the squared reconstruction error.
ReconstructionResult reconstruction_loss(const Matrix& x, const Matrix& xhat);

struct RegressorLossResult {
    double loss = 0.0;          // semantic + lambda * discriminative
    double semantic = 0.0;      // mean |a - sem|^2
    double discriminative = 0.0;  // mean |embed - dis|^2
    Matrix grad_sem;    // d/d(sem)
    Matrix grad_dis;    // d/d(dis)
    Matrix grad_embed;  // direct d/d(embed) through the discriminative term
};

RegressorLossResult regressor_loss(const Matrix& sem, const Matrix& dis, const Matrix& attr,
                                   const Matrix& embed, double lambda);

/// Weighted total: l_triplet + alpha * l_reconstr + beta * l_reg.
/// Throws TrainingError naming the term when one is non-finite.
double full_objective(double l_triplet, double l_reconstr, double l_reg,
                      const ObjectiveWeights& w);

}  // namespace zsl
