#pragma once

#include <string>
#include <vector>

#include "ccvgae/autodiff.hpp"
#include "ccvgae/graph_io.hpp"
#include "ccvgae/matrix.hpp"

namespace ccvgae {

enum class DagForm { PolyPlus, PaperLiteralAbs };

inline std::string to_string(DagForm f) {
    return f == DagForm::PolyPlus ? "poly_plus" : "paper_literal_abs";
}

inline DagForm dag_form_from_string(const std::string& s) {
    if (s == "poly_plus") return DagForm::PolyPlus;
    if (s == "paper_literal_abs") return DagForm::PaperLiteralAbs;
    throw ConfigError("dag_form must be 'poly_plus' or 'paper_literal_abs', got '" + s + "'");
}

// Dense 0/1 target with self-loops set, matching the propagation operator's
// A + I convention.
inline Matrix adjacency_with_self_loops(int n, const std::vector<Edge>& edges) {
    Matrix a(n, n);
    for (int i = 0; i < n; ++i) a(i, i) = 1.0;
    for (const Edge& e : edges) {
        a(e.first, e.second) = 1.0;
        a(e.second, e.first) = 1.0;
    }
    return a;
}

// Rebalanced binary cross-entropy over all n^2 ordered entries. With m
// positive entries, positives are upweighted by (n^2-m)/m and the mean is
// rescaled by n^2/(2(n^2-m)); degenerate all-positive targets fall back to
// unit weights. Probabilities are clamped to [1e-10, 1-1e-10].
inline Var recon_loss(Tape& tape, Var p, const std::vector<Edge>& train_edges, int n) {
    const Matrix labels = adjacency_with_self_loops(n, train_edges);
    p.value().require_same_shape(labels, "recon_loss");

    const double total = static_cast<double>(n) * n;
    const double m = static_cast<double>(n) + 2.0 * static_cast<double>(train_edges.size());
    const double negatives = total - m;
    const double pos_w = negatives > 0.0 ? negatives / m : 1.0;
    const double norm = negatives > 0.0 ? total / (2.0 * negatives) : 1.0;

    Var pc = tape.clamp(p, 1e-10, 1.0 - 1e-10);
    Var pos_term = tape.hadamard(tape.constant(labels * pos_w), tape.log(pc));
    Var neg_term = tape.hadamard(
        tape.constant(Matrix::ones(n, n) - labels),
        tape.log(tape.sub(tape.constant(Matrix::ones(n, n)), pc)));
    return tape.scale(tape.sum(tape.add(pos_term, neg_term)), -norm / total);
}

// KL(q || N(0, I)) averaged per node: (1/n) sum -0.5 (1 + 2 log s - mu^2 - s^2).
inline Var kl_loss(Tape& tape, Var mu, Var log_sigma, int n) {
    mu.value().require_same_shape(log_sigma.value(), "kl_loss");
    Var two_log_sigma = tape.scale(log_sigma, 2.0);
    Var inner = tape.add(tape.constant(Matrix::ones(mu.rows(), mu.cols())), two_log_sigma);
    inner = tape.sub(inner, tape.square(mu));
    inner = tape.sub(inner, tape.exp(two_log_sigma));
    return tape.scale(tape.sum(inner), -0.5 / static_cast<double>(n));
}

// Acyclicity penalty on the causal adjacency.
//   poly_plus:         tr((I + (r/K) Phi.Phi)^K) - K, nonnegative, zero iff
//                      the support graph is acyclic
//   paper_literal_abs: |tr((I - (r/K) Phi.Phi)^K) - K|, the signed variant
//                      wrapped in an absolute value
inline Var dag_penalty(Tape& tape, Var phi, double r, DagForm form = DagForm::PolyPlus) {
    if (!(r > 0.0)) throw ConfigError("dag_penalty: r must be positive");
    phi.value().require_square("dag_penalty");
    const std::size_t k = phi.value().rows();
    const double c = r / static_cast<double>(k);

    Var w = tape.hadamard(phi, phi);
    Var eye = tape.constant(Matrix::identity(k));
    Var base = form == DagForm::PolyPlus ? tape.add(eye, tape.scale(w, c))
                                         : tape.sub(eye, tape.scale(w, c));
    Var h = tape.sub(tape.power_trace(base, k),
                     tape.constant_scalar(static_cast<double>(k)));
    return form == DagForm::PolyPlus ? h : tape.abs(h);
}

inline Var mse_loss(Tape& tape, const Matrix& target, Var prediction) {
    target.require_same_shape(prediction.value(), "mse_loss");
    Var diff = tape.sub(prediction, tape.constant(target));
    return tape.scale(tape.sum(tape.square(diff)), 1.0 / static_cast<double>(target.size()));
}

inline Var total_loss(Tape& tape, Var recon, Var kl, Var dag, Var mse, double alpha,
                      double beta) {
    Var elbo_part = tape.add(recon, kl);
    return tape.add(elbo_part, tape.add(tape.scale(dag, alpha), tape.scale(mse, beta)));
}

} // namespace ccvgae
