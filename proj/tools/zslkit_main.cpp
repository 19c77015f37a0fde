// zslkit: dataset synthesis, training, generation, evaluation and gradient
// checks for the attribute-based zero-shot pipeline.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "zsl/checks.hpp"
#include "zsl/dataset.hpp"
#include "zsl/errors.hpp"
#include "zsl/eval.hpp"
#include "zsl/model.hpp"
#include "zsl/npy.hpp"
#include "zsl/pipeline.hpp"
#include "zsl/rng.hpp"

namespace fs = std::filesystem;
using namespace zsl;

namespace {

struct CliOptions {
    std::string data_dir;
    std::string out_dir;
    std::string model_path;
    std::string mode = "zsl";
    std::uint64_t seed = 0;

    SynthConfig synth;

    std::size_t epochs = 50;
    std::size_t batch_p = 8;
    std::size_t batch_k = 4;
    AdamConfig adam;
    ObjectiveWeights weights;
    double margin = 1.0;
    std::size_t feedback_iters = 1;
    std::size_t enc_h1 = 1024;
    std::size_t enc_h2 = 512;
    std::size_t dec_h = 1024;
    std::size_t reg_h = 1024;

    std::string classifier = "svm";
    double svm_reg = 1e-4;
    std::size_t svm_epochs = 50;
    std::size_t knn_k = 5;
    std::size_t gen_samples = 200;
    double gen_noise = 0.05;

    std::string report_dir;
    bool gradcheck_corrupt = false;
};

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_effective_config(const CLI::App& app, const std::string& out_dir) {
    fs::create_directories(out_dir);
    std::ofstream out(fs::path(out_dir) / "effective-config.ini");
    out << app.config_to_str(true, false);
    if (!out) throw FormatError("cannot write effective-config.ini under " + out_dir);
}

void write_trainlog(const TrainLog& log, const std::string& path) {
    std::ofstream out(path);
    out << "{\n  \"epochs\": [\n";
    for (std::size_t i = 0; i < log.epochs.size(); ++i) {
        const EpochStats& e = log.epochs[i];
        out << "    {\"epoch\": " << e.epoch << ", \"l_triplet\": " << fmt17(e.l_triplet)
            << ", \"l_reconstr\": " << fmt17(e.l_reconstr)
            << ", \"l_reg\": " << fmt17(e.l_reg) << ", \"l_total\": " << fmt17(e.l_total)
            << "}" << (i + 1 < log.epochs.size() ? "," : "") << "\n";
    }
    out << "  ]\n}\n";
    if (!out) throw FormatError("cannot write " + path);
}

TrainConfig to_train_config(const CliOptions& o) {
    TrainConfig cfg;
    cfg.epochs = o.epochs;
    cfg.batch_classes = o.batch_p;
    cfg.batch_samples = o.batch_k;
    cfg.adam = o.adam;
    cfg.weights = o.weights;
    cfg.triplet.margin = o.margin;
    cfg.feedback.iterations = o.feedback_iters;
    cfg.seed = o.seed;
    return cfg;
}

ClassifierConfig to_classifier_config(const CliOptions& o) {
    ClassifierConfig cfg;
    cfg.kind = o.classifier == "knn" ? ClassifierConfig::Kind::knn
                                     : ClassifierConfig::Kind::svm;
    cfg.svm.reg = o.svm_reg;
    cfg.svm.epochs = o.svm_epochs;
    cfg.svm.seed = Rng::child_seed(o.seed, 101);
    cfg.knn_k = o.knn_k;
    cfg.gen.samples_per_class = o.gen_samples;
    cfg.gen.noise_sigma = o.gen_noise;
    cfg.gen.refine_iterations = o.feedback_iters;
    cfg.gen.seed = Rng::child_seed(o.seed, 102);
    return cfg;
}

int cmd_synth(const CLI::App& app, const CliOptions& o) {
    SynthConfig cfg = o.synth;
    cfg.seed = o.seed;
    const ZslDataset ds = synth_generate(cfg);
    save_dataset(ds, o.out_dir);
    write_effective_config(app, o.out_dir);
    std::printf("synth: wrote %zu samples (%zu classes, d_x=%zu, D=%zu) to %s\n",
                ds.num_samples(), ds.num_classes(), ds.feature_dim(), ds.attr_dim(),
                o.out_dir.c_str());
    return 0;
}

int cmd_train(const CLI::App& app, const CliOptions& o) {
    const ZslDataset ds = load_dataset(o.data_dir);
    ModelShape shape;
    shape.feature_dim = ds.feature_dim();
    shape.attr_dim = ds.attr_dim();
    shape.enc_hidden1 = o.enc_h1;
    shape.enc_hidden2 = o.enc_h2;
    shape.dec_hidden = o.dec_h;
    shape.reg_hidden = o.reg_h;
    ZslModel model = init_model(shape, Rng::child_seed(o.seed, 100));

    const TrainConfig cfg = to_train_config(o);
    const TrainLog log = train(model, ds, cfg);

    fs::create_directories(o.out_dir);
    save_model(model, (fs::path(o.out_dir) / "model.zslf").string());
    write_trainlog(log, (fs::path(o.out_dir) / "trainlog.json").string());
    write_effective_config(app, o.out_dir);
    std::printf("train: %zu epochs, final losses triplet %.6g reconstr %.6g reg %.6g total %.6g\n",
                log.epochs.size(), log.epochs.back().l_triplet, log.epochs.back().l_reconstr,
                log.epochs.back().l_reg, log.epochs.back().l_total);
    return 0;
}

int cmd_generate(const CLI::App& app, const CliOptions& o) {
    const ZslDataset ds = load_dataset(o.data_dir);
    const ZslModel model = load_model(o.model_path);
    GenerateConfig gen;
    gen.samples_per_class = o.gen_samples;
    gen.noise_sigma = o.gen_noise;
    gen.refine_iterations = o.feedback_iters;
    gen.seed = Rng::child_seed(o.seed, 102);
    const Matrix attrs = ds.attrs_of_classes(ds.split.unseen_classes);
    const GeneratedSet set = generate_unseen(model, attrs, ds.split.unseen_classes, gen);

    fs::create_directories(o.out_dir);
    write_npy((fs::path(o.out_dir) / "generated.npy").string(), set.features, NpyDtype::f64);
    std::ofstream labels(fs::path(o.out_dir) / "generated_labels.txt");
    for (int l : set.labels) labels << l << "\n";
    if (!labels) throw FormatError("cannot write generated_labels.txt");
    write_effective_config(app, o.out_dir);
    std::printf("generate: %zu rows for %zu unseen classes -> %s\n", set.features.rows,
                ds.split.unseen_classes.size(), o.out_dir.c_str());
    return 0;
}

EvalReport build_zsl_report(const ZslModel& model, const ZslDataset& ds,
                            const ClassifierConfig& cfg) {
    const PredictResult res = zsl_predict(model, ds, cfg);
    const std::vector<int> truth = ds.labels_for(ds.split.test_unseen_idx);

    EvalReport report;
    report.classes = ds.split.unseen_classes;
    const PerClassAccuracy acc = per_class_top1(res.labels, truth, report.classes);
    report.top1 = acc.mean;
    report.per_class = acc.per_class;
    report.confusion = confusion_matrix(res.labels, truth, report.classes);
    report.roc = roc_auc(res.scores, truth, res.classes);

    const Matrix test_x = gather_rows(ds.features, ds.split.test_unseen_idx);
    report.embeddings_2d = pca_2d(encode(model, test_x));
    report.embedding_labels = truth;
    return report;
}

EvalReport build_gzsl_report(const ZslModel& model, const ZslDataset& ds,
                             const ClassifierConfig& cfg) {
    const GzslResult res = gzsl_predict(model, ds, cfg);
    const std::vector<int> truth_seen = ds.labels_for(ds.split.test_seen_idx);
    const std::vector<int> truth_unseen = ds.labels_for(ds.split.test_unseen_idx);

    const PerClassAccuracy acc_s =
        per_class_top1(res.seen.labels, truth_seen, ds.split.seen_classes);
    const PerClassAccuracy acc_u =
        per_class_top1(res.unseen.labels, truth_unseen, ds.split.unseen_classes);

    EvalReport report;
    report.classes = res.classes;
    report.gzsl = GzslMetrics{acc_s.mean, acc_u.mean, harmonic_mean(acc_s.mean, acc_u.mean)};

    // Pooled views over the union label space.
    std::vector<int> pred_all = res.seen.labels;
    pred_all.insert(pred_all.end(), res.unseen.labels.begin(), res.unseen.labels.end());
    std::vector<int> truth_all = truth_seen;
    truth_all.insert(truth_all.end(), truth_unseen.begin(), truth_unseen.end());
    const PerClassAccuracy acc_all = per_class_top1(pred_all, truth_all, res.classes);
    report.top1 = acc_all.mean;
    report.per_class = acc_all.per_class;
    report.confusion = confusion_matrix(pred_all, truth_all, res.classes);

    Matrix scores_all(res.seen.scores.rows + res.unseen.scores.rows, res.seen.scores.cols);
    std::copy(res.seen.scores.data.begin(), res.seen.scores.data.end(),
              scores_all.data.begin());
    std::copy(res.unseen.scores.data.begin(), res.unseen.scores.data.end(),
              scores_all.data.begin() +
                  static_cast<std::ptrdiff_t>(res.seen.scores.data.size()));
    report.roc = roc_auc(scores_all, truth_all, res.classes);

    std::vector<std::size_t> pooled_idx = ds.split.test_seen_idx;
    pooled_idx.insert(pooled_idx.end(), ds.split.test_unseen_idx.begin(),
                      ds.split.test_unseen_idx.end());
    report.embeddings_2d = pca_2d(encode(model, gather_rows(ds.features, pooled_idx)));
    report.embedding_labels = truth_all;
    return report;
}

int cmd_eval(const CLI::App& app, const CliOptions& o, const std::string& forced_mode) {
    const std::string mode = forced_mode.empty() ? o.mode : forced_mode;
    const ZslDataset ds = load_dataset(o.data_dir);
    const ZslModel model = load_model(o.model_path);
    const ClassifierConfig cfg = to_classifier_config(o);

    const EvalReport report = mode == "gzsl" ? build_gzsl_report(model, ds, cfg)
                                             : build_zsl_report(model, ds, cfg);
    emit_report(report, o.out_dir);
    write_effective_config(app, o.out_dir);
    if (report.gzsl) {
        std::printf("gzsl: acc_seen %.4f acc_unseen %.4f H %.4f -> %s\n",
                    report.gzsl->acc_seen, report.gzsl->acc_unseen, report.gzsl->harmonic,
                    o.out_dir.c_str());
    } else {
        std::printf("zsl: per-class top-1 %.4f over %zu classes -> %s\n", report.top1,
                    report.classes.size(), o.out_dir.c_str());
    }
    return 0;
}

int cmd_gradcheck(const CliOptions& o) {
    const auto entries = run_gradcheck_suite(1e-5, 1e-4, o.gradcheck_corrupt);
    bool all_pass = true;
    for (const auto& e : entries) {
        std::printf("%-34s %11.3e  %s\n", e.name.c_str(), e.max_rel_err,
                    e.pass ? "PASS" : "FAIL");
        all_pass &= e.pass;
    }
    std::printf("gradcheck: %zu components, %s\n", entries.size(),
                all_pass ? "all within 1e-4" : "FAILURES above 1e-4");
    return all_pass ? 0 : 1;
}

int cmd_report(const CliOptions& o) {
    fs::path path(o.report_dir);
    if (fs::is_directory(path)) path /= "report.json";
    std::ifstream in(path);
    if (!in) throw FormatError("report: cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    std::printf("report %s\n", path.string().c_str());
    std::printf("  top1: %s\n", fmt17(j.at("top1").get<double>()).c_str());
    for (const auto& [cls, acc] : j.at("per_class").items()) {
        std::printf("  class %-6s %s\n", cls.c_str(), fmt17(acc.get<double>()).c_str());
    }
    if (!j.at("gzsl").is_null()) {
        const double acc_s = j["gzsl"].at("acc_seen").get<double>();
        const double acc_u = j["gzsl"].at("acc_unseen").get<double>();
        const double h = j["gzsl"].at("H").get<double>();
        std::printf("  gzsl: acc_seen %s acc_unseen %s H %s\n", fmt17(acc_s).c_str(),
                    fmt17(acc_u).c_str(), fmt17(h).c_str());
        if (h != harmonic_mean(acc_s, acc_u)) {
            throw EvalError("report: stored H disagrees with its per-side accuracies");
        }
    }
    if (j.contains("auc") && !j.at("auc").is_null()) {
        for (const auto& [cls, auc] : j.at("auc").items()) {
            std::printf("  auc %-6s %s\n", cls.c_str(), fmt17(auc.get<double>()).c_str());
        }
    }
    return 0;
}

void add_common_hyperparams(CLI::App* sub, CliOptions& o) {
    sub->add_option("--lr", o.adam.lr, "Adam learning rate");
    sub->add_option("--beta1", o.adam.beta1, "Adam beta1");
    sub->add_option("--beta2", o.adam.beta2, "Adam beta2");
    sub->add_option("--adam-eps", o.adam.eps, "Adam epsilon");
    sub->add_option("--margin", o.margin, "triplet margin; <= 0 disables the term");
    sub->add_option("--alpha", o.weights.alpha, "reconstruction weight");
    sub->add_option("--beta", o.weights.beta, "regressor weight");
    sub->add_option("--lambda", o.weights.lambda, "discriminative-vs-semantic weight");
    sub->add_option("--feedback-iters", o.feedback_iters, "feedback iterations T");
}

void add_classifier_options(CLI::App* sub, CliOptions& o) {
    sub->add_option("--classifier", o.classifier, "svm or knn")
        ->check(CLI::IsMember({"svm", "knn"}));
    sub->add_option("--svm-reg", o.svm_reg, "SVM L2 regularization");
    sub->add_option("--svm-epochs", o.svm_epochs, "SVM training epochs");
    sub->add_option("--knn-k", o.knn_k, "KNN neighbour count");
    sub->add_option("--gen-samples", o.gen_samples, "generated samples per unseen class");
    sub->add_option("--gen-noise", o.gen_noise, "generation noise sigma");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"discriminative-embedding autoencoder for zero-shot learning"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default(true);
    app.set_config("--config", "", "INI config file; command-line flags override it");
    app.allow_config_extras(false);

    CliOptions o_synth, o_train, o_gen, o_eval, o_gzsl, o_grad, o_report;

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic benchmark dataset");
    synth->add_option("--out", o_synth.out_dir, "output dataset directory")->required();
    synth->add_option("--seed", o_synth.seed, "RNG seed");
    synth->add_option("--attr-dim", o_synth.synth.attr_dim, "attribute dimension D")
        ->check(CLI::PositiveNumber);
    synth->add_option("--feature-dim", o_synth.synth.feature_dim, "feature dimension d_x")
        ->check(CLI::PositiveNumber);
    synth->add_option("--seen", o_synth.synth.seen_classes, "seen class count")
        ->check(CLI::PositiveNumber);
    synth->add_option("--unseen", o_synth.synth.unseen_classes, "unseen class count")
        ->check(CLI::PositiveNumber);
    synth->add_option("--per-class", o_synth.synth.samples_per_class, "samples per class")
        ->check(CLI::PositiveNumber);
    synth->add_option("--noise", o_synth.synth.noise_sigma, "feature noise sigma_x");

    CLI::App* train_cmd = app.add_subcommand("train", "train the model on a dataset");
    train_cmd->add_option("--data", o_train.data_dir, "dataset directory")->required();
    train_cmd->add_option("--out", o_train.out_dir, "run output directory")->required();
    train_cmd->add_option("--seed", o_train.seed, "RNG seed");
    train_cmd->add_option("--epochs", o_train.epochs, "training epochs")
        ->check(CLI::PositiveNumber);
    train_cmd->add_option("--batch-p", o_train.batch_p, "classes per batch (P)");
    train_cmd->add_option("--batch-k", o_train.batch_k, "samples per class per batch (K)");
    train_cmd->add_option("--enc-h1", o_train.enc_h1, "encoder first hidden width");
    train_cmd->add_option("--enc-h2", o_train.enc_h2, "encoder second hidden width");
    train_cmd->add_option("--dec-h", o_train.dec_h, "decoder hidden width");
    train_cmd->add_option("--reg-h", o_train.reg_h, "regressor hidden width");
    add_common_hyperparams(train_cmd, o_train);

    CLI::App* generate = app.add_subcommand("generate", "generate unseen-class features");
    generate->add_option("--data", o_gen.data_dir, "dataset directory")->required();
    generate->add_option("--model", o_gen.model_path, "trained model file")->required();
    generate->add_option("--out", o_gen.out_dir, "output directory")->required();
    generate->add_option("--seed", o_gen.seed, "RNG seed");
    generate->add_option("--gen-samples", o_gen.gen_samples, "samples per unseen class");
    generate->add_option("--gen-noise", o_gen.gen_noise, "generation noise sigma");
    generate->add_option("--feedback-iters", o_gen.feedback_iters, "refine iterations");

    CLI::App* eval_cmd = app.add_subcommand("eval", "classify and report metrics");
    eval_cmd->add_option("--data", o_eval.data_dir, "dataset directory")->required();
    eval_cmd->add_option("--model", o_eval.model_path, "trained model file")->required();
    eval_cmd->add_option("--out", o_eval.out_dir, "report directory")->required();
    eval_cmd->add_option("--seed", o_eval.seed, "RNG seed");
    eval_cmd->add_option("--mode", o_eval.mode, "zsl or gzsl")
        ->check(CLI::IsMember({"zsl", "gzsl"}));
    eval_cmd->add_option("--feedback-iters", o_eval.feedback_iters, "refine iterations");
    add_classifier_options(eval_cmd, o_eval);

    CLI::App* gzsl = app.add_subcommand("gzsl", "eval in generalized mode");
    gzsl->add_option("--data", o_gzsl.data_dir, "dataset directory")->required();
    gzsl->add_option("--model", o_gzsl.model_path, "trained model file")->required();
    gzsl->add_option("--out", o_gzsl.out_dir, "report directory")->required();
    gzsl->add_option("--seed", o_gzsl.seed, "RNG seed");
    gzsl->add_option("--feedback-iters", o_gzsl.feedback_iters, "refine iterations");
    add_classifier_options(gzsl, o_gzsl);

    CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient table");
    gradcheck->add_flag("--corrupt", o_grad.gradcheck_corrupt,
                        "test hook: corrupt one analytic gradient")
        ->group("");  // hidden

    CLI::App* report = app.add_subcommand("report", "print and verify an emitted report");
    report->add_option("--report", o_report.report_dir, "report directory or report.json")
        ->required();

    // Lets --config (held by the main app) appear after the subcommand name.
    for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough(true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (synth->parsed()) return cmd_synth(app, o_synth);
        if (train_cmd->parsed()) return cmd_train(app, o_train);
        if (generate->parsed()) return cmd_generate(app, o_gen);
        if (eval_cmd->parsed()) return cmd_eval(app, o_eval, "");
        if (gzsl->parsed()) return cmd_eval(app, o_gzsl, "gzsl");
        if (gradcheck->parsed()) return cmd_gradcheck(o_grad);
        if (report->parsed()) return cmd_report(o_report);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
