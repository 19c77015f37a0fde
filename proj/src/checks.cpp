#include "zsl/checks.hpp"

#include <functional>

#include "zsl/gradcheck.hpp"
#include "zsl/losses.hpp"
#include "zsl/model.hpp"
#include "zsl/net.hpp"
#include "zsl/pipeline.hpp"
#include "zsl/rng.hpp"

namespace zsl {

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double lo, double hi) {
    Matrix m(r, c);
    for (double& v : m.data) v = rng.uniform(lo, hi);
    return m;
}

ModelShape tiny_shape() {
    ModelShape s;
    s.feature_dim = 12;
    s.attr_dim = 4;
    s.enc_hidden1 = 8;
    s.enc_hidden2 = 6;
    s.dec_hidden = 8;
    s.reg_hidden = 8;
    return s;
}

// Gradient of sum-of-squares of an Mlp's output w.r.t. its parameters.
double mlp_sq_output_check(const Mlp& mlp_in, const Matrix& x, double eps) {
    Mlp mlp = mlp_in;
    ForwardCache cache;
    const Matrix out = forward(mlp, x, &cache);
    Matrix grad_out(out.rows, out.cols);
    for (std::size_t i = 0; i < out.data.size(); ++i) grad_out.data[i] = 2.0 * out.data[i];
    const MlpGrads grads = backward(mlp, cache, grad_out);
    const std::vector<double> theta = flatten_params(mlp);
    const auto f = [&mlp, &x](const std::vector<double>& t) {
        std::size_t off = 0;
        unflatten_params(mlp, t, off);
        const Matrix o = forward(mlp, x);
        double s = 0.0;
        for (double v : o.data) s += v * v;
        return s;
    };
    return grad_check(f, flatten_grads(grads), theta, eps);
}

std::vector<double> flatten_model(const ZslModel& m) {
    std::vector<double> theta = flatten_params(m.encoder);
    const auto dec = flatten_params(m.decoder);
    const auto reg = flatten_params(m.regressor);
    theta.insert(theta.end(), dec.begin(), dec.end());
    theta.insert(theta.end(), reg.begin(), reg.end());
    return theta;
}

void unflatten_model(ZslModel& m, const std::vector<double>& theta) {
    std::size_t off = 0;
    unflatten_params(m.encoder, theta, off);
    unflatten_params(m.decoder, theta, off);
    unflatten_params(m.regressor, theta, off);
}

double composed_objective_check(std::size_t feedback_iters, double eps, bool corrupt) {
    ZslModel model = init_model(tiny_shape(), 20240817);
    Rng rng(404);
    const Matrix x = random_matrix(8, 12, rng, -1.5, 1.5);
    const std::vector<int> labels = {0, 0, 0, 1, 1, 2, 2, 1};
    const Matrix attr = random_matrix(8, 4, rng, 0.0, 1.0);
    const ObjectiveWeights w{1.0, 1.0, 1.0};
    const TripletConfig trip{1.0};
    const FeedbackConfig fb{feedback_iters};

    const BatchBackprop bp = backprop_objective(model, x, labels, attr, w, trip, fb);
    std::vector<double> analytic = flatten_grads(bp.encoder);
    const auto gd = flatten_grads(bp.decoder);
    const auto gr = flatten_grads(bp.regressor);
    analytic.insert(analytic.end(), gd.begin(), gd.end());
    analytic.insert(analytic.end(), gr.begin(), gr.end());
    if (corrupt) analytic[analytic.size() / 2] += 0.25;

    const std::vector<double> theta = flatten_model(model);
    const auto f = [&](const std::vector<double>& t) {
        ZslModel probe = model;
        unflatten_model(probe, t);
        return eval_objective(probe, x, labels, attr, w, trip, fb).l_total;
    };
    return grad_check(f, analytic, theta, eps);
}

}  // namespace

std::vector<GradCheckEntry> run_gradcheck_suite(double eps, double tol, bool corrupt_one) {
    std::vector<GradCheckEntry> entries;
    const auto add = [&](const std::string& name, double err) {
        entries.push_back({name, err, err <= tol});
    };
    Rng rng(909);

    {
        const Mlp mlp = init_mlp(5, {{4, Activation::linear}}, 1);
        add("layer linear", mlp_sq_output_check(mlp, random_matrix(6, 5, rng, -1, 1), eps));
    }
    {
        const Mlp mlp = init_mlp(5, {{4, Activation::leaky_relu}}, 2);
        add("layer leaky_relu slope 0.2",
            mlp_sq_output_check(mlp, random_matrix(6, 5, rng, -1, 1), eps));
    }
    {
        const Mlp mlp = init_mlp(6,
                                 {{8, Activation::leaky_relu},
                                  {5, Activation::leaky_relu},
                                  {4, Activation::linear}},
                                 3);
        add("mlp stacked hidden+linear",
            mlp_sq_output_check(mlp, random_matrix(5, 6, rng, -1, 1), eps));
    }
    {
        // Triplet loss w.r.t. the embeddings.
        Matrix e = random_matrix(8, 4, rng, -2, 2);
        const std::vector<int> labels = {0, 0, 1, 1, 2, 2, 0, 1};
        const TripletResult r = triplet_batch_hard(e, labels, {1.0});
        const auto f = [&](const std::vector<double>& t) {
            Matrix m(e.rows, e.cols);
            m.data = t;
            return triplet_batch_hard(m, labels, {1.0}).loss;
        };
        add("triplet batch-hard", grad_check(f, r.grad.data, e.data, eps));
    }
    {
        const Matrix x = random_matrix(5, 7, rng, -1, 1);
        Matrix xhat = random_matrix(5, 7, rng, -1, 1);
        const ReconstructionResult r = reconstruction_loss(x, xhat);
        const auto f = [&](const std::vector<double>& t) {
            Matrix m(5, 7);
            m.data = t;
            return reconstruction_loss(x, m).loss;
        };
        add("reconstruction", grad_check(f, r.grad_xhat.data, xhat.data, eps));
    }
    {
        // Regressor losses checked through the networks they train.
        ZslModel model = init_model(tiny_shape(), 5);
        const Matrix x = random_matrix(6, 12, rng, -1.5, 1.5);
        const Matrix attr = random_matrix(6, 4, rng, 0, 1);
        const Matrix embeds = encode(model, x);
        const Matrix xhat = decode(model, embeds, attr);

        const auto reg_loss_of = [&](const Mlp& regressor, double lambda, int which) {
            Mlp reg = regressor;
            const Matrix out = forward(reg, xhat);
            const Matrix sem = col_slice(out, 0, 4);
            const Matrix dis = col_slice(out, 4, 8);
            const RegressorLossResult r = regressor_loss(sem, dis, attr, embeds, lambda);
            if (which == 0) return r.semantic;
            if (which == 1) return lambda * r.discriminative;
            return r.loss;
        };
        const auto check_reg = [&](double lambda, int which, const std::string& name) {
            Mlp reg = model.regressor;
            ForwardCache cache;
            const Matrix out = forward(reg, xhat, &cache);
            const Matrix sem = col_slice(out, 0, 4);
            const Matrix dis = col_slice(out, 4, 8);
            const RegressorLossResult r = regressor_loss(sem, dis, attr, embeds, lambda);
            Matrix grad_out(out.rows, out.cols, 0.0);
            for (std::size_t i = 0; i < out.rows; ++i) {
                for (std::size_t j = 0; j < 4; ++j) {
                    if (which != 1) grad_out(i, j) = r.grad_sem(i, j);
                    if (which != 0) grad_out(i, 4 + j) = r.grad_dis(i, j);
                }
            }
            const MlpGrads grads = backward(reg, cache, grad_out);
            const std::vector<double> theta = flatten_params(reg);
            const auto f = [&](const std::vector<double>& t) {
                Mlp probe = model.regressor;
                std::size_t off = 0;
                unflatten_params(probe, t, off);
                return reg_loss_of(probe, lambda, which);
            };
            add(name, grad_check(f, flatten_grads(grads), theta, eps));
        };
        check_reg(1.0, 0, "regressor semantic term");
        check_reg(0.7, 1, "regressor discriminative term");
        check_reg(0.7, 2, "regressor combined");
    }
    add("composed objective (T=1)", composed_objective_check(1, eps, corrupt_one));
    add("composed objective (T=2)", composed_objective_check(2, eps, false));
    return entries;
}

}  // namespace zsl
