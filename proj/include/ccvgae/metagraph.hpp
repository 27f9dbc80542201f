#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccvgae/autodiff.hpp"
#include "ccvgae/graph_io.hpp"
#include "ccvgae/metrics.hpp"
#include "ccvgae/model.hpp"
#include "ccvgae/objective.hpp"
#include "ccvgae/parallel.hpp"
#include "ccvgae/synth.hpp"
#include "ccvgae/trainer.hpp"

namespace ccvgae {

// ---------------------------------------------------------------------------
// graph families
// ---------------------------------------------------------------------------

// Graphs drawn from one generator (shared causal matrix, independent node
// noise) with a fixed meta-train/val/test assignment over the list.
struct GraphFamily {
    std::vector<GraphDataset> graphs;
    std::vector<std::size_t> meta_train;
    std::vector<std::size_t> meta_val;
    std::vector<std::size_t> meta_test;
};

inline GraphFamily build_family(const ScmSpec& spec, int count, long seed) {
    if (count < 5) throw ConfigError("build_family: need at least 5 graphs");
    GraphFamily family;
    family.graphs.reserve(count);
    for (int i = 0; i < count; ++i) {
        RandomStream factor_rng =
            RandomStream::derived(static_cast<std::uint64_t>(seed), 100 + 2 * i);
        RandomStream edge_rng =
            RandomStream::derived(static_cast<std::uint64_t>(seed), 101 + 2 * i);
        const Matrix factors = gen_factors(spec, factor_rng);
        GraphDataset g = gen_graph_from_factors(spec, factors, edge_rng);
        g.name = "family-" + std::to_string(i);
        family.graphs.push_back(std::move(g));
    }
    const int n_train = static_cast<int>(0.8 * count);
    const int n_val = static_cast<int>(0.1 * count);
    for (int i = 0; i < count; ++i) {
        if (i < n_train)
            family.meta_train.push_back(i);
        else if (i < n_train + n_val)
            family.meta_val.push_back(i);
        else
            family.meta_test.push_back(i);
    }
    return family;
}

// ---------------------------------------------------------------------------
// configuration and global state
// ---------------------------------------------------------------------------

struct MetaConfig {
    int inner_loops = 10;
    double inner_lr = 0.05;  // plain gradient steps, meta-training and adaptation
    double outer_lr = 0.02;  // global update rate
    double edge_fraction = 0.05;
    int signature_dim = 16; // must match latent_dim
    long seed = 0;
    int meta_epochs = 7; // batched passes over the meta-train graphs
    int hidden_dim = 32;
    int latent_dim = 16;
    double alpha = 1.0; // acyclicity weight inside the adaptation loss
    double r = 1.0;
    double grad_clip = 5.0; // global-norm cap for the plain gradient steps

    void validate() const {
        if (inner_loops < 0) throw ConfigError("meta config: inner_loops must be >= 0");
        if (!(inner_lr > 0.0) || !(outer_lr >= 0.0))
            throw ConfigError("meta config: learning rates must be positive");
        if (!(edge_fraction > 0.0) || !(edge_fraction < 1.0))
            throw ConfigError("meta config: edge_fraction must lie in (0, 1)");
        if (signature_dim != latent_dim)
            throw ConfigError("meta config: signature_dim must equal latent_dim");
        if (meta_epochs < 1) throw ConfigError("meta config: meta_epochs must be >= 1");
    }
};

inline nlohmann::json to_json(const MetaConfig& c) {
    return nlohmann::json{{"inner_loops", c.inner_loops}, {"inner_lr", c.inner_lr},
                          {"outer_lr", c.outer_lr},       {"edge_fraction", c.edge_fraction},
                          {"signature_dim", c.signature_dim}, {"seed", c.seed},
                          {"meta_epochs", c.meta_epochs}, {"hidden_dim", c.hidden_dim},
                          {"latent_dim", c.latent_dim},   {"alpha", c.alpha},
                          {"r", c.r},                     {"grad_clip", c.grad_clip}};
}

// Graph-signature network: one GCN layer, mean pool, affine map, sigmoid gate.
struct SignatureNet {
    Matrix wg; // d x signature_dim
    Matrix wa; // signature_dim x signature_dim
    Matrix ba; // 1 x signature_dim
};

// Shared state updated only by the outer loop.
struct GlobalState {
    Matrix w0; // d x h
    Matrix w1; // h x k
    Matrix w2; // h x k
    SignatureNet psi;
    Matrix c_global; // k x k shared causal matrix

    // FNV-1a over every parameter byte; used to assert non-mutation.
    std::uint64_t digest() const {
        std::uint64_t h = 1469598103934665603ULL;
        auto eat = [&h](const Matrix& m) {
            for (double v : m.data()) {
                std::uint64_t bits;
                static_assert(sizeof bits == sizeof v);
                std::memcpy(&bits, &v, sizeof bits);
                for (int b = 0; b < 8; ++b) {
                    h ^= (bits >> (8 * b)) & 0xffULL;
                    h *= 1099511628211ULL;
                }
            }
        };
        eat(w0);
        eat(w1);
        eat(w2);
        eat(psi.wg);
        eat(psi.wa);
        eat(psi.ba);
        eat(c_global);
        return h;
    }
};

inline GlobalState init_global_state(int d, const MetaConfig& cfg) {
    cfg.validate();
    GlobalState s;
    const CcvgaeParams base = init_params(d, cfg.hidden_dim, cfg.latent_dim, cfg.seed);
    s.w0 = base.w0;
    s.w1 = base.w1;
    s.w2 = base.w2;
    RandomStream rng = RandomStream::derived(static_cast<std::uint64_t>(cfg.seed), 23);
    auto glorot = [&rng](std::size_t fi, std::size_t fo) {
        const double b = std::sqrt(6.0 / static_cast<double>(fi + fo));
        return rng.uniform_matrix(fi, fo, -b, b);
    };
    s.psi.wg = glorot(d, cfg.signature_dim);
    s.psi.wa = glorot(cfg.signature_dim, cfg.signature_dim);
    s.psi.ba = Matrix(1, cfg.signature_dim);
    s.c_global = Matrix(cfg.latent_dim, cfg.latent_dim);
    return s;
}

// ---------------------------------------------------------------------------
// graph signature
// ---------------------------------------------------------------------------

inline Matrix signature(const SignatureNet& psi, const GraphDataset& g,
                        const std::vector<Edge>& visible_edges) {
    const Matrix anorm = normalize_edges(g.n, visible_edges).matrix;
    const Matrix h =
        matmul(matmul(anorm, g.attrs), psi.wg).map([](double x) { return x > 0.0 ? x : 0.0; });
    Matrix pooled(1, h.cols());
    for (std::size_t c = 0; c < h.cols(); ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < h.rows(); ++r) s += h(r, c);
        pooled(0, c) = s / static_cast<double>(h.rows());
    }
    return (matmul(pooled, psi.wa) + psi.ba).map([](double x) { return sigmoid(x); });
}

// Tape-resident signature for the outer loss, differentiable through psi.
struct SignatureVars {
    Var wg, wa, ba;
};

inline Var signature(Tape& tape, const SignatureVars& psi, const GraphDataset& g,
                     const std::vector<Edge>& visible_edges) {
    const Matrix anorm = normalize_edges(g.n, visible_edges).matrix;
    Var h = tape.relu(tape.matmul(tape.constant(matmul(anorm, g.attrs)), psi.wg));
    Matrix pool_row(1, g.n, 1.0 / static_cast<double>(g.n));
    Var pooled = tape.matmul(tape.constant(pool_row), h);
    return tape.sigmoid(tape.add(tape.matmul(pooled, psi.wa), psi.ba));
}

// ---------------------------------------------------------------------------
// adaptation forward pass
// ---------------------------------------------------------------------------

// Local view of the GNN weights during adaptation.
struct LocalParams {
    Matrix w0, w1, w2;
};

namespace detail {

struct GatedForward {
    Var mu, log_sigma, factors;
};

// Smooth squash of the log-sigma head into (-5, 5): 10 sigmoid(0.4 x) - 5.
// Near zero it is the identity; far out it saturates instead of feeding
// exp() values the plain-gradient meta loops cannot survive.
inline Var bounded_log_sigma(Tape& tape, Var raw) {
    Var squashed = tape.scale(tape.sigmoid(tape.scale(raw, 0.4)), 10.0);
    return tape.sub(squashed,
                    tape.constant(Matrix(raw.rows(), raw.cols(), 5.0)));
}

// Encoder with the mu / log-sigma heads gated per latent dimension, then the
// shared causal layer. The gate is broadcast across nodes via ones * gate.
inline GatedForward gated_forward(Tape& tape, Var w0, Var w1, Var w2, Var c, Var gate,
                                  const Matrix& anorm, const Matrix& attrs,
                                  const Matrix& noise) {
    Var a = tape.constant(anorm);
    Var hidden = tape.relu(tape.matmul(tape.constant(matmul(anorm, attrs)), w0));
    Var propagated = tape.matmul(a, hidden);
    Var bcast = tape.matmul(tape.constant(Matrix::ones(anorm.rows(), 1)), gate);
    Var mu = tape.hadamard(tape.matmul(propagated, w1), bcast);
    Var log_sigma =
        bounded_log_sigma(tape, tape.hadamard(tape.matmul(propagated, w2), bcast));
    Var eps = tape.add(mu, tape.hadamard(tape.exp(log_sigma), tape.constant(noise)));
    return {mu, log_sigma, causal_layer(tape, c, eps)};
}

// Joint rescale so the concatenated gradient norm stays below max_norm.
inline void clip_gradients(std::vector<Matrix*> grads, double max_norm) {
    double sq = 0.0;
    for (const Matrix* g : grads)
        for (double v : g->data()) sq += v * v;
    const double norm = std::sqrt(sq);
    if (norm <= max_norm) return;
    const double scale = max_norm / norm;
    for (Matrix* g : grads)
        for (double& v : g->data()) v *= scale;
}

inline Var adaptation_loss(Tape& tape, const GatedForward& fwd, Var c,
                           const std::vector<Edge>& target_edges, int n, double alpha,
                           double r) {
    Var probs = decode_adjacency(tape, fwd.factors);
    Var recon = recon_loss(tape, probs, target_edges, n);
    Var kl = kl_loss(tape, fwd.mu, fwd.log_sigma, n);
    Var dag = dag_penalty(tape, c, r);
    return tape.add(tape.add(recon, kl), tape.scale(dag, alpha));
}

} // namespace detail

// k gradient-descent steps on the local GNN weights. The signature gate is
// computed once up front and held constant (gradient-stopped); the shared
// causal matrix stays frozen throughout.
inline LocalParams inner_adapt(const GlobalState& global, const GraphDataset& g,
                               const std::vector<Edge>& train_edges, const MetaConfig& cfg,
                               RandomStream& rng, bool use_signature = true) {
    LocalParams local{global.w0, global.w1, global.w2};
    Matrix gate = use_signature ? signature(global.psi, g, train_edges)
                                : Matrix::ones(1, cfg.latent_dim);
    const Matrix anorm = normalize_edges(g.n, train_edges).matrix;

    for (int loop = 0; loop < cfg.inner_loops; ++loop) {
        Tape tape;
        Var w0 = tape.variable(local.w0);
        Var w1 = tape.variable(local.w1);
        Var w2 = tape.variable(local.w2);
        Var c = tape.constant(global.c_global); // frozen during adaptation
        Var gate_v = tape.constant(gate);
        const Matrix noise = rng.gaussian_matrix(g.n, cfg.latent_dim);

        auto fwd = detail::gated_forward(tape, w0, w1, w2, c, gate_v, anorm, g.attrs, noise);
        Var loss =
            detail::adaptation_loss(tape, fwd, c, train_edges, g.n, cfg.alpha, cfg.r);
        if (!std::isfinite(loss.value()[0]))
            throw NumericError("inner_adapt: non-finite loss at loop " + std::to_string(loop));
        tape.backward(loss);

        Matrix g0 = w0.grad(), g1 = w1.grad(), g2 = w2.grad();
        detail::clip_gradients({&g0, &g1, &g2}, cfg.grad_clip);
        for (std::size_t i = 0; i < local.w0.size(); ++i) local.w0[i] -= cfg.inner_lr * g0[i];
        for (std::size_t i = 0; i < local.w1.size(); ++i) local.w1[i] -= cfg.inner_lr * g1[i];
        for (std::size_t i = 0; i < local.w2.size(); ++i) local.w2[i] -= cfg.inner_lr * g2[i];
    }
    return local;
}

// Loss value of one gated forward pass; used to monitor adaptation progress.
inline double adaptation_loss_value(const GlobalState& global, const LocalParams& local,
                                    const GraphDataset& g, const std::vector<Edge>& train_edges,
                                    const MetaConfig& cfg, RandomStream& rng,
                                    bool use_signature = true) {
    Matrix gate = use_signature ? signature(global.psi, g, train_edges)
                                : Matrix::ones(1, cfg.latent_dim);
    const Matrix anorm = normalize_edges(g.n, train_edges).matrix;
    Tape tape;
    Var w0 = tape.constant(local.w0), w1 = tape.constant(local.w1), w2 = tape.constant(local.w2);
    Var c = tape.constant(global.c_global);
    const Matrix noise = rng.gaussian_matrix(g.n, cfg.latent_dim);
    auto fwd = detail::gated_forward(tape, w0, w1, w2, c, tape.constant(gate), anorm, g.attrs,
                                     noise);
    return detail::adaptation_loss(tape, fwd, c, train_edges, g.n, cfg.alpha, cfg.r).value()[0];
}

// One graph's contribution to the outer update: where its adapted GNN weights
// land after the validation-gradient step, plus the psi / causal gradients.
struct OuterStep {
    Matrix w0_target, w1_target, w2_target;
    Matrix g_wg, g_wa, g_ba, g_c;
};

// First-order meta-gradient at the adapted weights: the validation loss is
// rebuilt with the signature on train+val edges left on the tape, so psi and
// the shared causal matrix receive gradients alongside the GNN weights.
inline OuterStep compute_outer_step(const GlobalState& global, const GraphDataset& g,
                                    const std::vector<Edge>& train_edges,
                                    const std::vector<Edge>& val_edges,
                                    const LocalParams& adapted, const MetaConfig& cfg,
                                    RandomStream& rng) {
    std::vector<Edge> visible = train_edges;
    visible.insert(visible.end(), val_edges.begin(), val_edges.end());
    std::sort(visible.begin(), visible.end());

    Tape tape;
    Var w0 = tape.variable(adapted.w0);
    Var w1 = tape.variable(adapted.w1);
    Var w2 = tape.variable(adapted.w2);
    SignatureVars psi{tape.variable(global.psi.wg), tape.variable(global.psi.wa),
                      tape.variable(global.psi.ba)};
    Var c = tape.variable(global.c_global);

    Var gate = signature(tape, psi, g, visible);
    const Matrix anorm = normalize_edges(g.n, train_edges).matrix;
    const Matrix noise = rng.gaussian_matrix(g.n, cfg.latent_dim);
    auto fwd = detail::gated_forward(tape, w0, w1, w2, c, gate, anorm, g.attrs, noise);
    Var loss = detail::adaptation_loss(tape, fwd, c, visible, g.n, cfg.alpha, cfg.r);
    if (!std::isfinite(loss.value()[0]))
        throw NumericError("outer step: non-finite validation loss");
    tape.backward(loss);

    OuterStep step{adapted.w0, adapted.w1, adapted.w2,
                   psi.wg.grad(), psi.wa.grad(), psi.ba.grad(), c.grad()};
    Matrix g_w0 = w0.grad(), g_w1 = w1.grad(), g_w2 = w2.grad();
    detail::clip_gradients(
        {&g_w0, &g_w1, &g_w2, &step.g_wg, &step.g_wa, &step.g_ba, &step.g_c}, cfg.grad_clip);
    for (std::size_t i = 0; i < g_w0.size(); ++i) step.w0_target[i] -= cfg.outer_lr * g_w0[i];
    for (std::size_t i = 0; i < g_w1.size(); ++i) step.w1_target[i] -= cfg.outer_lr * g_w1[i];
    for (std::size_t i = 0; i < g_w2.size(); ++i) step.w2_target[i] -= cfg.outer_lr * g_w2[i];
    return step;
}

inline void apply_outer_steps(GlobalState& global, const std::vector<OuterStep>& steps,
                              const MetaConfig& cfg) {
    if (steps.empty()) return;
    const double inv = 1.0 / static_cast<double>(steps.size());
    auto average_target = [&](Matrix& dst, Matrix OuterStep::* field) {
        dst = Matrix(dst.rows(), dst.cols());
        for (const OuterStep& s : steps)
            for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += inv * (s.*field)[i];
    };
    average_target(global.w0, &OuterStep::w0_target);
    average_target(global.w1, &OuterStep::w1_target);
    average_target(global.w2, &OuterStep::w2_target);

    auto grad_step = [&](Matrix& dst, Matrix OuterStep::* field) {
        for (const OuterStep& s : steps)
            for (std::size_t i = 0; i < dst.size(); ++i)
                dst[i] -= cfg.outer_lr * inv * (s.*field)[i];
    };
    grad_step(global.psi.wg, &OuterStep::g_wg);
    grad_step(global.psi.wa, &OuterStep::g_wa);
    grad_step(global.psi.ba, &OuterStep::g_ba);
    grad_step(global.c_global, &OuterStep::g_c);
    for (int i = 0; i < cfg.latent_dim; ++i) global.c_global(i, i) = 0.0;
}

// Single-graph convenience wrapper: compute one outer step and apply it.
inline void outer_update(GlobalState& global, const GraphDataset& g,
                         const std::vector<Edge>& train_edges,
                         const std::vector<Edge>& val_edges, const LocalParams& adapted,
                         const MetaConfig& cfg, RandomStream& rng) {
    if (cfg.outer_lr == 0.0) return;
    const OuterStep step = compute_outer_step(global, g, train_edges, val_edges, adapted,
                                              cfg, rng);
    apply_outer_steps(global, {step}, cfg);
}

// ---------------------------------------------------------------------------
// meta-training and the few-shot sweep
// ---------------------------------------------------------------------------

namespace detail {

// train fraction = edge_fraction, 20% validation, remainder test.
inline EdgeSplit fewshot_split(const GraphDataset& g, double fraction, long seed) {
    return split_edges(g, 0.20, 1.0 - 0.20 - fraction, seed);
}

} // namespace detail

// One batched pass per meta-epoch: every meta-train graph adapts from the
// same global snapshot, and the averaged outer steps are applied at once.
inline void meta_train(GlobalState& global, const GraphFamily& family, const MetaConfig& cfg) {
    cfg.validate();
    for (int epoch = 0; epoch < cfg.meta_epochs; ++epoch) {
        std::vector<OuterStep> steps;
        steps.reserve(family.meta_train.size());
        for (std::size_t idx : family.meta_train) {
            const GraphDataset& g = family.graphs[idx];
            const EdgeSplit split = detail::fewshot_split(
                g, cfg.edge_fraction, cfg.seed + static_cast<long>(idx));
            RandomStream rng = RandomStream::derived(
                static_cast<std::uint64_t>(cfg.seed),
                1000 + 10 * static_cast<std::uint64_t>(idx) + epoch);
            LocalParams adapted = inner_adapt(global, g, split.train_pos, cfg, rng);
            steps.push_back(
                compute_outer_step(global, g, split.train_pos, split.val_pos, adapted, cfg, rng));
        }
        apply_outer_steps(global, steps, cfg);
    }
}

// Multi-task pretraining without the meta machinery: the same gradient steps
// applied directly to one shared parameter set, no signature gating.
inline void pretrain(GlobalState& global, const GraphFamily& family, const MetaConfig& cfg) {
    cfg.validate();
    for (int epoch = 0; epoch < cfg.meta_epochs; ++epoch) {
        for (std::size_t idx : family.meta_train) {
            const GraphDataset& g = family.graphs[idx];
            const EdgeSplit split = detail::fewshot_split(
                g, cfg.edge_fraction, cfg.seed + static_cast<long>(idx));
            RandomStream rng = RandomStream::derived(
                static_cast<std::uint64_t>(cfg.seed),
                2000 + 10 * static_cast<std::uint64_t>(idx) + epoch);
            LocalParams adapted =
                inner_adapt(global, g, split.train_pos, cfg, rng, /*use_signature=*/false);
            global.w0 = adapted.w0;
            global.w1 = adapted.w1;
            global.w2 = adapted.w2;
        }
    }
}

// Mean-mode scores through the gated forward pass.
inline std::vector<double> score_gated(const GlobalState& global, const LocalParams& local,
                                       const GraphDataset& g,
                                       const std::vector<Edge>& train_edges,
                                       const std::vector<Edge>& pairs, const MetaConfig& cfg,
                                       bool use_signature) {
    Matrix gate = use_signature ? signature(global.psi, g, train_edges)
                                : Matrix::ones(1, cfg.latent_dim);
    const Matrix anorm = normalize_edges(g.n, train_edges).matrix;
    Tape tape;
    auto fwd = detail::gated_forward(tape, tape.constant(local.w0), tape.constant(local.w1),
                                     tape.constant(local.w2), tape.constant(global.c_global),
                                     tape.constant(gate), anorm, g.attrs,
                                     Matrix(g.n, cfg.latent_dim));
    const Matrix factors = fwd.factors.value();
    std::vector<double> scores;
    scores.reserve(pairs.size());
    for (const Edge& e : pairs) {
        double dot = 0.0;
        for (int t = 0; t < cfg.latent_dim; ++t) dot += factors(e.first, t) * factors(e.second, t);
        scores.push_back(sigmoid(dot));
    }
    return scores;
}

struct FewshotCell {
    int loops = 0;
    double fraction = 0.0;
    std::string method; // "cc" | "pretrain" | "rand"
    double auc_mean = 0.0;
    double auc_std = 0.0;
};

struct FewshotReport {
    std::vector<FewshotCell> cells;
    MetaConfig config;
};

namespace detail {

// Adapt on the revealed fraction of a meta-test graph and score the held-out
// test edges against their sampled negatives.
inline double evaluate_on_graph(const GlobalState& state, const GraphDataset& g,
                                const MetaConfig& cfg, long split_seed, bool use_signature) {
    const EdgeSplit split = fewshot_split(g, cfg.edge_fraction, split_seed);
    RandomStream rng =
        RandomStream::derived(static_cast<std::uint64_t>(cfg.seed), 3000 + split_seed);
    LocalParams adapted = inner_adapt(state, g, split.train_pos, cfg, rng, use_signature);
    auto pos = score_gated(state, adapted, g, split.train_pos, split.test_pos, cfg,
                           use_signature);
    auto neg = score_gated(state, adapted, g, split.train_pos, split.test_neg, cfg,
                           use_signature);
    return rank_metrics(pos, neg).first;
}

inline std::pair<double, double> mean_std(const std::vector<double>& xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(xs.size());
    return {mean, std::sqrt(var)};
}

} // namespace detail

// Full sweep over (loops, fraction) cells for the meta-trained model, the
// no-meta pretrain baseline, and a random-initialization baseline, all under
// identical per-graph splits. Training happens once per fraction with the
// config's inner_loops; the loops axis varies only the meta-test adaptation
// depth. Meta-test evaluation parallelizes per graph.
inline FewshotReport run_fewshot(const GraphFamily& family, const MetaConfig& base_cfg,
                                 const std::vector<int>& loops_list,
                                 const std::vector<double>& fractions, int threads = 1) {
    base_cfg.validate();
    if (family.meta_test.empty())
        throw ConfigError("run_fewshot: family has no meta-test graphs");
    const int d = family.graphs.front().d;

    FewshotReport report;
    report.config = base_cfg;

    for (double fraction : fractions) {
        MetaConfig cfg = base_cfg;
        cfg.edge_fraction = fraction;

        GlobalState meta_state = init_global_state(d, cfg);
        meta_train(meta_state, family, cfg);

        GlobalState pre_state = init_global_state(d, cfg);
        pretrain(pre_state, family, cfg);

        MetaConfig rand_cfg = cfg;
        rand_cfg.seed = cfg.seed + 7919; // distinct random initialization
        GlobalState rand_state = init_global_state(d, rand_cfg);

        struct MethodRun {
            const char* name;
            const GlobalState* state;
            bool use_signature;
        };
        const MethodRun runs[] = {{"cc", &meta_state, true},
                                  {"pretrain", &pre_state, false},
                                  {"rand", &rand_state, false}};
        for (int loops : loops_list) {
            MetaConfig eval_cfg = cfg;
            eval_cfg.inner_loops = loops;
            for (const MethodRun& run : runs) {
                std::vector<double> aucs(family.meta_test.size());
                parallel_for(family.meta_test.size(), threads, [&](std::size_t i) {
                    const std::size_t idx = family.meta_test[i];
                    aucs[i] = detail::evaluate_on_graph(
                        *run.state, family.graphs[idx], eval_cfg,
                        eval_cfg.seed + static_cast<long>(idx), run.use_signature);
                });
                const auto [mean, sd] = detail::mean_std(aucs);
                report.cells.push_back({loops, fraction, run.name, mean, sd});
            }
        }
    }
    return report;
}

inline nlohmann::json to_json(const FewshotReport& r) {
    nlohmann::json cells = nlohmann::json::array();
    for (const FewshotCell& c : r.cells)
        cells.push_back({{"loops", c.loops},
                         {"fraction", c.fraction},
                         {"method", c.method},
                         {"auc_mean", c.auc_mean},
                         {"auc_std", c.auc_std}});
    return nlohmann::json{{"cells", cells}, {"config", to_json(r.config)}};
}

inline void save_fewshot_report(const FewshotReport& r, const std::filesystem::path& path) {
    detail::write_text_file(path, to_json(r).dump(2) + "\n");
}

} // namespace ccvgae
