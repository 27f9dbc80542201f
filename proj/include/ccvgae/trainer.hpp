#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccvgae/adam.hpp"
#include "ccvgae/autodiff.hpp"
#include "ccvgae/graph_io.hpp"
#include "ccvgae/metrics.hpp"
#include "ccvgae/model.hpp"
#include "ccvgae/objective.hpp"
#include "ccvgae/random.hpp"

namespace ccvgae {

struct TrainConfig {
    int epochs = 200;
    double lr = 0.01;
    int hidden_dim = 32;
    int latent_dim = 16;
    double alpha = 1.0;
    double beta = 1.0;
    double r = 1.0;
    long seed = 0;
    DagForm dag_form = DagForm::PolyPlus;
    AttrMode attr_mode = AttrMode::Direct;
    double val_frac = 0.05;
    double test_frac = 0.10;

    void validate() const {
        if (epochs < 1) throw ConfigError("config: epochs must be >= 1");
        if (hidden_dim < 1 || latent_dim < 1) throw ConfigError("config: dims must be positive");
        if (!(lr > 0.0)) throw ConfigError("config: lr must be positive");
        if (!(r > 0.0)) throw ConfigError("config: r must be positive");
        if (val_frac < 0.0 || val_frac >= 1.0 || test_frac < 0.0 || test_frac >= 1.0)
            throw ConfigError("config: fractions must be in [0, 1)");
    }
};

inline nlohmann::json to_json(const TrainConfig& c) {
    return nlohmann::json{{"epochs", c.epochs},
                          {"lr", c.lr},
                          {"hidden_dim", c.hidden_dim},
                          {"latent_dim", c.latent_dim},
                          {"alpha", c.alpha},
                          {"beta", c.beta},
                          {"r", c.r},
                          {"seed", c.seed},
                          {"dag_form", to_string(c.dag_form)},
                          {"attr_mode", to_string(c.attr_mode)},
                          {"val_frac", c.val_frac},
                          {"test_frac", c.test_frac}};
}

// Flat-key config parse; unknown keys are rejected with the full valid list so
// typos fail loudly instead of silently training with defaults.
inline TrainConfig train_config_from_json(const nlohmann::json& j) {
    static const char* const valid[] = {"epochs", "lr",   "hidden_dim", "latent_dim",
                                        "alpha",  "beta", "r",          "seed",
                                        "dag_form", "attr_mode", "val_frac", "test_frac"};
    for (const auto& [key, unused] : j.items()) {
        const bool known = std::any_of(std::begin(valid), std::end(valid),
                                       [&](const char* v) { return key == v; });
        if (!known) {
            std::string msg = "config: unknown key '" + key + "'; valid keys:";
            for (const char* v : valid) msg += std::string(" ") + v;
            throw ConfigError(msg);
        }
    }
    TrainConfig c;
    if (j.contains("epochs")) c.epochs = j["epochs"].get<int>();
    if (j.contains("lr")) c.lr = j["lr"].get<double>();
    if (j.contains("hidden_dim")) c.hidden_dim = j["hidden_dim"].get<int>();
    if (j.contains("latent_dim")) c.latent_dim = j["latent_dim"].get<int>();
    if (j.contains("alpha")) c.alpha = j["alpha"].get<double>();
    if (j.contains("beta")) c.beta = j["beta"].get<double>();
    if (j.contains("r")) c.r = j["r"].get<double>();
    if (j.contains("seed")) c.seed = j["seed"].get<long>();
    if (j.contains("dag_form")) c.dag_form = dag_form_from_string(j["dag_form"].get<std::string>());
    if (j.contains("attr_mode")) c.attr_mode = attr_mode_from_string(j["attr_mode"].get<std::string>());
    if (j.contains("val_frac")) c.val_frac = j["val_frac"].get<double>();
    if (j.contains("test_frac")) c.test_frac = j["test_frac"].get<double>();
    c.validate();
    return c;
}

struct LossTerms {
    double recon = 0.0;
    double kl = 0.0;
    double dag = 0.0;
    double mse = 0.0;
    double total = 0.0;
};

struct EvalReport {
    double auc = 0.0;
    double ap = 0.0;
    std::vector<LossTerms> loss_trajectory;
    TrainConfig config;
    double wall_time_s = 0.0;
};

enum class ScoreMode { Mean, Sample };

// Scores sigmoid(g_i . g_j) for the requested pairs. Mean mode sets the
// latent to mu, making scoring deterministic for a fixed checkpoint.
inline std::vector<double> score_edges(const CcvgaeParams& params, const Matrix& anorm,
                                       const Matrix& attrs, const std::vector<Edge>& pairs,
                                       ScoreMode mode = ScoreMode::Mean,
                                       RandomStream* sample_rng = nullptr) {
    const std::size_t n = anorm.rows();
    Matrix noise(n, params.k());
    if (mode == ScoreMode::Sample) {
        if (!sample_rng) throw ConfigError("score_edges: sample mode needs an rng");
        noise = sample_rng->gaussian_matrix(n, params.k());
    }
    const EncoderOutput enc = encode(params, anorm, attrs, noise);
    const Matrix g = causal_layer(params.phi, enc.eps);

    std::vector<double> scores;
    scores.reserve(pairs.size());
    for (const Edge& e : pairs) {
        if (e.first < 0 || e.second < 0 || static_cast<std::size_t>(e.first) >= n ||
            static_cast<std::size_t>(e.second) >= n)
            throw DimensionError("score_edges: pair index out of range");
        double dot = 0.0;
        for (int t = 0; t < params.k(); ++t) dot += g(e.first, t) * g(e.second, t);
        scores.push_back(sigmoid(dot));
    }
    return scores;
}

// AUC/AP of positives vs negatives under a given scorer output ordering:
// positives first, then negatives.
inline std::pair<double, double> rank_metrics(const std::vector<double>& pos_scores,
                                              const std::vector<double>& neg_scores) {
    std::vector<int> labels;
    std::vector<double> scores;
    labels.reserve(pos_scores.size() + neg_scores.size());
    scores.reserve(labels.capacity());
    for (double s : pos_scores) {
        labels.push_back(1);
        scores.push_back(s);
    }
    for (double s : neg_scores) {
        labels.push_back(0);
        scores.push_back(s);
    }
    return {auc(labels, scores), average_precision(labels, scores)};
}

// Full-batch training loop: encode on the train-edge adjacency, causal layer,
// both decoders, combined loss, Adam, then re-zero the diagonal of phi. Fresh
// reparameterization noise every epoch, all draws derived from config.seed.
inline std::pair<CcvgaeParams, EvalReport> fit(const GraphDataset& g, const EdgeSplit& split,
                                               const TrainConfig& cfg) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();

    CcvgaeParams params =
        init_params(g.d, cfg.hidden_dim, cfg.latent_dim, cfg.seed, cfg.attr_mode);
    const NormalizedAdjacency anorm = normalize_edges(g.n, split.train_pos);
    RandomStream noise_rng = RandomStream::derived(static_cast<std::uint64_t>(cfg.seed), 3);

    AdamState adam;
    adam.lr = cfg.lr;

    EvalReport report;
    report.config = cfg;
    report.loss_trajectory.reserve(cfg.epochs);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Tape tape;
        ParamVars pv = register_params(tape, params);
        const Matrix noise = noise_rng.gaussian_matrix(g.n, cfg.latent_dim);

        EncoderVars enc = encode(tape, pv, anorm.matrix, g.attrs, noise);
        Var factors = causal_layer(tape, pv.phi, enc.eps);
        Var adj_probs = decode_adjacency(tape, factors);
        Var attr_hat = decode_attributes(tape, factors, pv, cfg.attr_mode, g.d);

        Var recon = recon_loss(tape, adj_probs, split.train_pos, g.n);
        Var kl = kl_loss(tape, enc.mu, enc.log_sigma, g.n);
        Var dag = dag_penalty(tape, pv.phi, cfg.r, cfg.dag_form);
        Var mse = mse_loss(tape, g.attrs, attr_hat);
        Var loss = total_loss(tape, recon, kl, dag, mse, cfg.alpha, cfg.beta);

        LossTerms terms{recon.value()[0], kl.value()[0], dag.value()[0], mse.value()[0],
                        loss.value()[0]};
        if (!std::isfinite(terms.total))
            throw NumericError("fit: non-finite loss at epoch " + std::to_string(epoch) +
                               " (recon=" + std::to_string(terms.recon) +
                               ", kl=" + std::to_string(terms.kl) + ")");
        report.loss_trajectory.push_back(terms);

        tape.backward(loss);

        std::vector<Matrix> grads{pv.w0.grad(), pv.w1.grad(), pv.w2.grad(), pv.phi.grad()};
        std::vector<Matrix*> targets{&params.w0, &params.w1, &params.w2, &params.phi};
        if (pv.w3) {
            grads.push_back(pv.w3->grad());
            targets.push_back(&*params.w3);
        }
        std::vector<const Matrix*> grad_ptrs;
        for (const Matrix& gm : grads) grad_ptrs.push_back(&gm);
        adam_step(adam, targets, grad_ptrs);

        for (int i = 0; i < cfg.latent_dim; ++i) params.phi(i, i) = 0.0;
    }

    if (!split.test_pos.empty() && !split.test_neg.empty()) {
        const auto pos = score_edges(params, anorm.matrix, g.attrs, split.test_pos);
        const auto neg = score_edges(params, anorm.matrix, g.attrs, split.test_neg);
        std::tie(report.auc, report.ap) = rank_metrics(pos, neg);
    }

    report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {std::move(params), std::move(report)};
}

// Singular values of the factor matrix, descending, largest scaled to 1.
inline std::vector<double> svd_spectrum(const Matrix& factors) {
    if (factors.max_abs() == 0.0)
        throw NumericDomainError("svd_spectrum: factor matrix is all zero");
    std::vector<double> sv = singular_values(factors);
    const double top = sv.front();
    for (double& v : sv) v /= top;
    return sv;
}

// Mean-mode factors for a whole graph, the input to the spectrum report.
inline Matrix latent_factors(const CcvgaeParams& params, const Matrix& anorm,
                             const Matrix& attrs) {
    const EncoderOutput enc = encode(params, anorm, attrs, Matrix(anorm.rows(), params.k()));
    return causal_layer(params.phi, enc.eps);
}

inline nlohmann::json to_json(const EvalReport& r) {
    nlohmann::json losses = nlohmann::json::array();
    for (const LossTerms& t : r.loss_trajectory)
        losses.push_back({{"recon", t.recon},
                          {"kl", t.kl},
                          {"dag", t.dag},
                          {"mse", t.mse},
                          {"total", t.total}});
    return nlohmann::json{{"auc", r.auc},
                          {"ap", r.ap},
                          {"epochs", static_cast<int>(r.loss_trajectory.size())},
                          {"losses", losses},
                          {"config", to_json(r.config)},
                          {"wall_time_s", r.wall_time_s}};
}

inline void save_report(const EvalReport& r, const std::filesystem::path& path) {
    detail::write_text_file(path, to_json(r).dump(2) + "\n");
}

} // namespace ccvgae
