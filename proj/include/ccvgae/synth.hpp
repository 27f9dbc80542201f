#pragma once

#include <cmath>
#include <filesystem>

#include <json.hpp>

#include "ccvgae/autodiff.hpp"
#include "ccvgae/graph_io.hpp"
#include "ccvgae/matrix.hpp"
#include "ccvgae/random.hpp"

namespace ccvgae {

// Ground-truth generator: a linear SCM over k latent factors whose samples
// drive both node attributes and edge probabilities.
struct ScmSpec {
    int k = 16;
    int n = 100;
    Matrix c; // k x k, strictly lower triangular
    double noise_var = 1.0;
    long seed = 0;

    void validate() const {
        if (k < 1 || n < 1) throw ConfigError("scm spec: k and n must be positive");
        if (!(noise_var > 0.0)) throw ConfigError("scm spec: noise_var must be positive");
        c.require_square("scm spec");
        for (std::size_t i = 0; i < c.rows(); ++i)
            for (std::size_t j = i; j < c.cols(); ++j)
                if (c(i, j) != 0.0)
                    throw ConfigError("scm spec: c must be strictly lower triangular");
    }
};

// Strictly lower-triangular weights drawn uniform on [-1, 1].
inline ScmSpec gen_spec(int k, int n, double noise_var, long seed) {
    ScmSpec spec;
    spec.k = k;
    spec.n = n;
    spec.noise_var = noise_var;
    spec.seed = seed;
    spec.c = Matrix(k, k);
    RandomStream rng = RandomStream::derived(static_cast<std::uint64_t>(seed), 0);
    for (int i = 1; i < k; ++i)
        for (int j = 0; j < i; ++j) spec.c(i, j) = rng.uniform(-1.0, 1.0);
    spec.validate();
    return spec;
}

// Each node row z solves z^T = (I - C^T)^{-1} eps^T with independent
// N(0, noise_var I) noise, i.e. Z = E (I - C)^{-1} row-wise.
inline Matrix gen_factors(const ScmSpec& spec, RandomStream& rng) {
    spec.validate();
    const Matrix i_minus_c = Matrix::identity(spec.k) - spec.c;
    const Matrix transform = inverse(i_minus_c); // unit triangular, always invertible
    const double stddev = std::sqrt(spec.noise_var);
    Matrix noise = rng.gaussian_matrix(spec.n, spec.k, stddev);
    return matmul(noise, transform);
}

inline Matrix gen_factors(const ScmSpec& spec) {
    RandomStream rng = RandomStream::derived(static_cast<std::uint64_t>(spec.seed), 1);
    return gen_factors(spec, rng);
}

// Attributes are 20*sin(Z); each unordered pair is a Bernoulli draw with
// probability sigmoid(z_i . z_j). No self-loops.
inline GraphDataset gen_graph_from_factors(const ScmSpec& spec, const Matrix& factors,
                                           RandomStream& rng) {
    GraphDataset g;
    g.n = spec.n;
    g.d = spec.k;
    g.name = "synthetic";
    g.attrs = factors.map([](double z) { return 20.0 * std::sin(z); });
    for (int i = 0; i < spec.n; ++i) {
        for (int j = i + 1; j < spec.n; ++j) {
            double dot = 0.0;
            for (int t = 0; t < spec.k; ++t) dot += factors(i, t) * factors(j, t);
            if (rng.uniform() < sigmoid(dot)) g.edges.emplace_back(i, j);
        }
    }
    g.validate();
    return g;
}

inline GraphDataset gen_graph(const ScmSpec& spec) {
    RandomStream factor_rng = RandomStream::derived(static_cast<std::uint64_t>(spec.seed), 1);
    RandomStream edge_rng = RandomStream::derived(static_cast<std::uint64_t>(spec.seed), 2);
    const Matrix factors = gen_factors(spec, factor_rng);
    return gen_graph_from_factors(spec, factors, edge_rng);
}

// scm.json keeps the ground truth next to the generated dataset; the realized
// undirected edge count is recorded because the draw is stochastic.
inline void save_scm(const ScmSpec& spec, std::size_t realized_edges,
                     const std::filesystem::path& path) {
    nlohmann::json c_rows = nlohmann::json::array();
    for (int i = 0; i < spec.k; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j < spec.k; ++j) row.push_back(spec.c(i, j));
        c_rows.push_back(row);
    }
    nlohmann::json j{{"k", spec.k},
                     {"n", spec.n},
                     {"noise_var", spec.noise_var},
                     {"seed", spec.seed},
                     {"c", c_rows},
                     {"realized_edges", realized_edges}};
    detail::write_text_file(path, j.dump(2) + "\n");
}

inline ScmSpec load_scm(const std::filesystem::path& path) {
    const nlohmann::json j = nlohmann::json::parse(detail::read_text_file(path));
    ScmSpec spec;
    spec.k = j.at("k").get<int>();
    spec.n = j.at("n").get<int>();
    spec.noise_var = j.at("noise_var").get<double>();
    spec.seed = j.at("seed").get<long>();
    spec.c = Matrix(spec.k, spec.k);
    const auto& rows = j.at("c");
    for (int i = 0; i < spec.k; ++i)
        for (int jj = 0; jj < spec.k; ++jj) spec.c(i, jj) = rows[i][jj].get<double>();
    spec.validate();
    return spec;
}

} // namespace ccvgae
