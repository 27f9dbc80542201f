#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ccvgae/graph_io.hpp"
#include "ccvgae/metagraph.hpp"
#include "ccvgae/model.hpp"
#include "ccvgae/parallel.hpp"
#include "ccvgae/synth.hpp"
#include "ccvgae/theory.hpp"
#include "ccvgae/trainer.hpp"

namespace fs = std::filesystem;
using namespace ccvgae;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumeric = 2;
constexpr int kExitCheckFailed = 3;

struct SynthArgs {
    std::string out;
    int k = 16;
    int n = 100;
    double noise_var = 10.0;
    long seed = 0;
};

int cmd_synth(const SynthArgs& a) {
    const ScmSpec spec = gen_spec(a.k, a.n, a.noise_var, a.seed);
    const GraphDataset g = gen_graph(spec);
    save_graph(g, a.out);
    save_scm(spec, g.edges.size(), fs::path(a.out) / "scm.json");
    std::printf("wrote %s: n=%d d=%d edges=%zu\n", a.out.c_str(), g.n, g.d, g.edges.size());
    return kExitOk;
}

struct SplitArgs {
    std::string data;
    std::string out;
    double val_frac = 0.05;
    double test_frac = 0.10;
    long seed = 0;
};

int cmd_split(const SplitArgs& a) {
    const GraphDataset g = load_graph(a.data);
    const EdgeSplit split = split_edges(g, a.val_frac, a.test_frac, a.seed);
    const fs::path out = a.out.empty() ? fs::path(a.data) / "split.json" : fs::path(a.out);
    save_split(split, out);
    std::printf("wrote %s: train=%zu val=%zu test=%zu\n", out.string().c_str(),
                split.train_pos.size(), split.val_pos.size(), split.test_pos.size());
    return kExitOk;
}

struct TrainArgs {
    std::string data;
    std::string split;
    std::string out;
    std::string config_path;
    // flag overrides; only applied when the user passed them
    CLI::App* sub = nullptr;
    int epochs = 0;
    double lr = 0.0, alpha = 0.0, beta = 0.0, r = 0.0;
    int hidden_dim = 0, latent_dim = 0;
    long seed = 0;
    std::string dag_form, attr_mode;
};

TrainConfig resolve_train_config(const TrainArgs& a) {
    TrainConfig cfg;
    if (!a.config_path.empty())
        cfg = train_config_from_json(nlohmann::json::parse(detail::read_text_file(a.config_path)));
    if (a.sub->count("--epochs")) cfg.epochs = a.epochs;
    if (a.sub->count("--lr")) cfg.lr = a.lr;
    if (a.sub->count("--hidden-dim")) cfg.hidden_dim = a.hidden_dim;
    if (a.sub->count("--latent-dim")) cfg.latent_dim = a.latent_dim;
    if (a.sub->count("--alpha")) cfg.alpha = a.alpha;
    if (a.sub->count("--beta")) cfg.beta = a.beta;
    if (a.sub->count("--r")) cfg.r = a.r;
    if (a.sub->count("--seed")) cfg.seed = a.seed;
    if (a.sub->count("--dag-form")) cfg.dag_form = dag_form_from_string(a.dag_form);
    if (a.sub->count("--attr-mode")) cfg.attr_mode = attr_mode_from_string(a.attr_mode);
    cfg.validate();
    return cfg;
}

int cmd_train(const TrainArgs& a) {
    const GraphDataset g = load_graph(a.data);
    const EdgeSplit split = load_split(a.split);
    validate_split(g, split);
    const TrainConfig cfg = resolve_train_config(a);

    auto [params, report] = fit(g, split, cfg);
    fs::create_directories(a.out);
    checkpoint_save(params, fs::path(a.out) / "checkpoint.json");
    save_report(report, fs::path(a.out) / "report.json");
    std::printf("trained %d epochs: test auc=%.4f ap=%.4f (out: %s)\n", cfg.epochs, report.auc,
                report.ap, a.out.c_str());
    return kExitOk;
}

struct EvalArgs {
    std::string checkpoint;
    std::string data;
    std::string split;
    std::string out;
};

int cmd_eval(const EvalArgs& a) {
    const CcvgaeParams params = checkpoint_load(a.checkpoint);
    const GraphDataset g = load_graph(a.data);
    const EdgeSplit split = load_split(a.split);
    validate_split(g, split);

    const Matrix anorm = normalize_edges(g.n, split.train_pos).matrix;
    const auto pos = score_edges(params, anorm, g.attrs, split.test_pos);
    const auto neg = score_edges(params, anorm, g.attrs, split.test_neg);
    const auto [auc_value, ap_value] = rank_metrics(pos, neg);

    nlohmann::json j{{"auc", auc_value},
                     {"ap", ap_value},
                     {"epochs", 0},
                     {"losses", nlohmann::json::array()},
                     {"config",
                      {{"checkpoint", a.checkpoint}, {"data", a.data}, {"split", a.split}}},
                     {"wall_time_s", 0.0}};
    detail::write_text_file(a.out, j.dump(2) + "\n");
    std::printf("eval: auc=%.4f ap=%.4f (out: %s)\n", auc_value, ap_value, a.out.c_str());
    return kExitOk;
}

struct SvdArgs {
    std::string checkpoint;
    std::string data;
    std::string split; // accepted for interface symmetry; spectrum uses the full graph
    std::string out;
};

int cmd_svd(const SvdArgs& a) {
    const CcvgaeParams params = checkpoint_load(a.checkpoint);
    const GraphDataset g = load_graph(a.data);
    const Matrix factors = latent_factors(params, normalize(g).matrix, g.attrs);
    const std::vector<double> spectrum = svd_spectrum(factors);
    nlohmann::json j{{"spectrum", spectrum}};
    detail::write_text_file(a.out, j.dump(2) + "\n");
    std::printf("svd: %zu singular values, top ratio 1.0 (out: %s)\n", spectrum.size(),
                a.out.c_str());
    return kExitOk;
}

struct FewshotArgs {
    std::string out;
    int family_count = 12;
    std::vector<int> loops{10, 30, 50, 70};
    std::vector<double> fractions{0.05, 0.10};
    long seed = 0;
    int k = 16;
    int n = 100;
    double noise_var = 0.5;
    int meta_epochs = 7;
    double inner_lr = 0.05;
    double outer_lr = 0.02;
};

int cmd_fewshot(const FewshotArgs& a) {
    const ScmSpec spec = gen_spec(a.k, a.n, a.noise_var, a.seed);
    const GraphFamily family = build_family(spec, a.family_count, a.seed);
    MetaConfig cfg;
    cfg.seed = a.seed;
    cfg.latent_dim = a.k;
    cfg.signature_dim = a.k;
    cfg.meta_epochs = a.meta_epochs;
    cfg.inner_lr = a.inner_lr;
    cfg.outer_lr = a.outer_lr;
    const FewshotReport rep =
        run_fewshot(family, cfg, a.loops, a.fractions, configured_threads());
    save_fewshot_report(rep, a.out);
    for (const FewshotCell& c : rep.cells)
        std::printf("loops=%-3d fraction=%.2f %-9s auc=%.4f +- %.4f\n", c.loops, c.fraction,
                    c.method.c_str(), c.auc_mean, c.auc_std);
    std::printf("wrote %s\n", a.out.c_str());
    return kExitOk;
}

struct TheoryArgs {
    std::string out;
    long seed = 0;
    std::size_t samples = 100000;
};

int cmd_theory(const TheoryArgs& a) {
    const TheoryReport report = run_theory_suite(a.seed, a.samples);
    save_theory_report(report, a.out);
    for (const TheoryCheck& c : report.checks)
        std::printf("%-26s %s\n", c.name.c_str(), c.pass ? "pass" : "FAIL");
    std::printf("wrote %s\n", a.out.c_str());
    return report.all_pass() ? kExitOk : kExitCheckFailed;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Causal-disentanglement VGAE: train, evaluate and verify"};
    app.require_subcommand(1);

    SynthArgs synth_args;
    CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic SCM graph dataset");
    synth->add_option("--out", synth_args.out, "Output dataset directory")->required();
    synth->add_option("--k", synth_args.k, "Latent dimension");
    synth->add_option("--n", synth_args.n, "Node count");
    synth->add_option("--noise-var", synth_args.noise_var, "Exogenous noise variance");
    synth->add_option("--seed", synth_args.seed, "Random seed");

    SplitArgs split_args;
    CLI::App* split = app.add_subcommand("split", "Split edges into train/val/test");
    split->add_option("--data", split_args.data, "Dataset directory")->required();
    split->add_option("--out", split_args.out, "Output path (default: <data>/split.json)");
    split->add_option("--val-frac", split_args.val_frac, "Validation fraction");
    split->add_option("--test-frac", split_args.test_frac, "Test fraction");
    split->add_option("--seed", split_args.seed, "Random seed");

    TrainArgs train_args;
    CLI::App* train = app.add_subcommand("train", "Train a model and write checkpoint + report");
    train->add_option("--data", train_args.data, "Dataset directory")->required();
    train->add_option("--split", train_args.split, "split.json path")->required();
    train->add_option("--out", train_args.out, "Output directory")->required();
    train->add_option("--config", train_args.config_path, "JSON config file");
    train->add_option("--epochs", train_args.epochs, "Training epochs");
    train->add_option("--lr", train_args.lr, "Adam learning rate");
    train->add_option("--hidden-dim", train_args.hidden_dim, "GCN hidden width");
    train->add_option("--latent-dim", train_args.latent_dim, "Latent dimension");
    train->add_option("--alpha", train_args.alpha, "Acyclicity penalty weight");
    train->add_option("--beta", train_args.beta, "Attribute MSE weight");
    train->add_option("--r", train_args.r, "Acyclicity penalty scale");
    train->add_option("--seed", train_args.seed, "Random seed");
    train->add_option("--dag-form", train_args.dag_form, "poly_plus | paper_literal_abs");
    train->add_option("--attr-mode", train_args.attr_mode, "direct | linear");
    train_args.sub = train;

    EvalArgs eval_args;
    CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a split");
    eval->add_option("--checkpoint", eval_args.checkpoint, "checkpoint.json")->required();
    eval->add_option("--data", eval_args.data, "Dataset directory")->required();
    eval->add_option("--split", eval_args.split, "split.json path")->required();
    eval->add_option("--out", eval_args.out, "Output report.json")->required();

    SvdArgs svd_args;
    CLI::App* svd = app.add_subcommand("svd", "Singular-value spectrum of the latent factors");
    svd->add_option("--checkpoint", svd_args.checkpoint, "checkpoint.json")->required();
    svd->add_option("--data", svd_args.data, "Dataset directory")->required();
    svd->add_option("--split", svd_args.split, "Accepted for symmetry; unused");
    svd->add_option("--out", svd_args.out, "Output svd.json")->required();

    FewshotArgs fewshot_args;
    CLI::App* fewshot = app.add_subcommand("fewshot", "Few-shot link prediction sweep");
    fewshot->add_option("--out", fewshot_args.out, "Output fewshot_report.json")->required();
    fewshot->add_option("--family-count", fewshot_args.family_count, "Graphs in the family");
    fewshot->add_option("--loops", fewshot_args.loops, "Adaptation loop counts")
        ->delimiter(',');
    fewshot->add_option("--fractions", fewshot_args.fractions, "Revealed edge fractions")
        ->delimiter(',');
    fewshot->add_option("--seed", fewshot_args.seed, "Random seed");
    fewshot->add_option("--k", fewshot_args.k, "Latent dimension");
    fewshot->add_option("--n", fewshot_args.n, "Nodes per graph");
    fewshot->add_option("--noise-var", fewshot_args.noise_var, "Exogenous noise variance");
    fewshot->add_option("--meta-epochs", fewshot_args.meta_epochs, "Meta-training epochs");
    fewshot->add_option("--inner-lr", fewshot_args.inner_lr, "Inner-loop rate");
    fewshot->add_option("--outer-lr", fewshot_args.outer_lr, "Outer-loop rate");

    TheoryArgs theory_args;
    CLI::App* theory = app.add_subcommand("theory", "Run the numerical verification suite");
    theory->add_option("--out", theory_args.out, "Output theory_report.json")->required();
    theory->add_option("--seed", theory_args.seed, "Random seed");
    theory->add_option("--samples", theory_args.samples, "Monte Carlo sample count");

    try {
        app.parse(argc, argv);
        if (synth->parsed()) return cmd_synth(synth_args);
        if (split->parsed()) return cmd_split(split_args);
        if (train->parsed()) return cmd_train(train_args);
        if (eval->parsed()) return cmd_eval(eval_args);
        if (svd->parsed()) return cmd_svd(svd_args);
        if (fewshot->parsed()) return cmd_fewshot(fewshot_args);
        if (theory->parsed()) return cmd_theory(theory_args);
        return kExitUsage;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e); // prints help or the parse diagnostic
        return code == 0 ? kExitOk : kExitUsage;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return kExitNumeric;
    } catch (const SingularMatrixError& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return kExitNumeric;
    } catch (const NumericDomainError& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    }
}
