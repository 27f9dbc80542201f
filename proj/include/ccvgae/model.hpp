#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "ccvgae/autodiff.hpp"
#include "ccvgae/graph_io.hpp"
#include "ccvgae/matrix.hpp"
#include "ccvgae/random.hpp"

namespace ccvgae {

enum class AttrMode { Direct, Linear };

inline std::string to_string(AttrMode m) { return m == AttrMode::Direct ? "direct" : "linear"; }

inline AttrMode attr_mode_from_string(const std::string& s) {
    if (s == "direct") return AttrMode::Direct;
    if (s == "linear") return AttrMode::Linear;
    throw ConfigError("attr_mode must be 'direct' or 'linear', got '" + s + "'");
}

// Trainable state: two-layer GCN encoder weights, the causal adjacency, and
// an optional linear attribute readout for datasets where d != k.
struct CcvgaeParams {
    Matrix w0;  // d x h, shared first layer
    Matrix w1;  // h x k, mean head
    Matrix w2;  // h x k, log-sigma head
    Matrix phi; // k x k causal adjacency, zero diagonal maintained by training
    std::optional<Matrix> w3; // k x d readout, linear mode only
    AttrMode attr_mode = AttrMode::Direct;

    int d() const { return static_cast<int>(w0.rows()); }
    int h() const { return static_cast<int>(w0.cols()); }
    int k() const { return static_cast<int>(w1.cols()); }
};

inline CcvgaeParams init_params(int d, int h, int k, long seed,
                                AttrMode mode = AttrMode::Direct) {
    if (d < 1 || h < 1 || k < 1) throw ConfigError("init_params: dims must be positive");
    RandomStream rng = RandomStream::derived(static_cast<std::uint64_t>(seed), 7);
    auto glorot = [&rng](std::size_t fan_in, std::size_t fan_out) {
        const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        return rng.uniform_matrix(fan_in, fan_out, -s, s);
    };
    CcvgaeParams p;
    p.w0 = glorot(d, h);
    p.w1 = glorot(h, k);
    p.w2 = glorot(h, k);
    p.phi = Matrix(k, k); // causal structure starts empty
    p.attr_mode = mode;
    if (mode == AttrMode::Linear) p.w3 = glorot(k, d);
    return p;
}

// Tape handles for one training step's view of the parameters.
struct ParamVars {
    Var w0, w1, w2, phi;
    std::optional<Var> w3;
};

inline ParamVars register_params(Tape& tape, const CcvgaeParams& p) {
    ParamVars v{tape.variable(p.w0), tape.variable(p.w1), tape.variable(p.w2),
                tape.variable(p.phi), std::nullopt};
    if (p.w3) v.w3 = tape.variable(*p.w3);
    return v;
}

// ---------------------------------------------------------------------------
// forward pieces (tape-building)
// ---------------------------------------------------------------------------

struct EncoderVars {
    Var mu;        // n x k
    Var log_sigma; // n x k
    Var eps;       // n x k reparameterized sample
};

// hidden = relu(A X W0); mu = A hidden W1; log_sigma = A hidden W2;
// eps = mu + exp(log_sigma) * noise. The first layer is shared between heads.
inline EncoderVars encode(Tape& tape, const ParamVars& params, const Matrix& anorm,
                          const Matrix& attrs, const Matrix& rng_noise) {
    Var a = tape.constant(anorm);
    Var x = tape.constant(attrs);
    Var hidden = tape.relu(tape.matmul(tape.matmul(a, x), params.w0));
    Var propagated = tape.matmul(a, hidden);
    Var mu = tape.matmul(propagated, params.w1);
    Var log_sigma = tape.matmul(propagated, params.w2);
    rng_noise.require_same_shape(mu.value(), "encode: rng_noise");
    Var eps = tape.add(mu, tape.hadamard(tape.exp(log_sigma), tape.constant(rng_noise)));
    return EncoderVars{mu, log_sigma, eps};
}

// G^T = (I - Phi^T)^{-1} eps^T, realized row-wise as G = eps (I - Phi)^{-1}.
inline Var causal_layer(Tape& tape, Var phi, Var eps) {
    const std::size_t k = phi.value().rows();
    Var i_minus_phi = tape.sub(tape.constant(Matrix::identity(k)), phi);
    return tape.matmul(eps, tape.inverse(i_minus_phi));
}

inline Var decode_adjacency(Tape& tape, Var g) {
    return tape.sigmoid(tape.matmul(g, tape.transpose(g)));
}

inline Var decode_attributes(Tape& tape, Var g, const ParamVars& params, AttrMode mode,
                             int d) {
    if (mode == AttrMode::Direct) {
        if (static_cast<int>(g.cols()) != d)
            throw ConfigError("decode_attributes: direct mode needs d == k, got d=" +
                              std::to_string(d) + " k=" + std::to_string(g.cols()));
        return tape.elu(g);
    }
    if (!params.w3) throw ConfigError("decode_attributes: linear mode needs w3");
    return tape.elu(tape.matmul(g, *params.w3));
}

// ---------------------------------------------------------------------------
// plain-matrix inference (no tape, no gradients)
// ---------------------------------------------------------------------------

struct EncoderOutput {
    Matrix mu;
    Matrix log_sigma;
    Matrix eps;
};

inline EncoderOutput encode(const CcvgaeParams& p, const Matrix& anorm, const Matrix& attrs,
                            const Matrix& rng_noise) {
    Matrix hidden = matmul(matmul(anorm, attrs), p.w0)
                        .map([](double x) { return x > 0.0 ? x : 0.0; });
    Matrix propagated = matmul(anorm, hidden);
    EncoderOutput out;
    out.mu = matmul(propagated, p.w1);
    out.log_sigma = matmul(propagated, p.w2);
    rng_noise.require_same_shape(out.mu, "encode: rng_noise");
    Matrix scaled = hadamard(out.log_sigma.map([](double x) { return std::exp(x); }), rng_noise);
    out.eps = out.mu + scaled;
    return out;
}

inline Matrix causal_layer(const Matrix& phi, const Matrix& eps) {
    phi.require_square("causal_layer");
    return matmul(eps, inverse(Matrix::identity(phi.rows()) - phi));
}

// ---------------------------------------------------------------------------
// checkpoint round-trip
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::json matrix_to_json(const Matrix& m) {
    return nlohmann::json{
        {"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
    const auto rows = j.at("rows").get<std::size_t>();
    const auto cols = j.at("cols").get<std::size_t>();
    std::vector<double> data = j.at("data").get<std::vector<double>>();
    if (data.size() != rows * cols) throw IoError("checkpoint: matrix data length mismatch");
    return Matrix(rows, cols, std::move(data));
}

} // namespace detail

inline void checkpoint_save(const CcvgaeParams& p, const std::filesystem::path& path) {
    nlohmann::json j{{"d", p.d()},
                     {"h", p.h()},
                     {"k", p.k()},
                     {"attr_mode", to_string(p.attr_mode)},
                     {"w0", detail::matrix_to_json(p.w0)},
                     {"w1", detail::matrix_to_json(p.w1)},
                     {"w2", detail::matrix_to_json(p.w2)},
                     {"phi", detail::matrix_to_json(p.phi)},
                     {"w3", p.w3 ? detail::matrix_to_json(*p.w3) : nlohmann::json(nullptr)}};
    detail::write_text_file(path, j.dump(2) + "\n");
}

inline CcvgaeParams checkpoint_load(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(detail::read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw IoError("checkpoint: parse failure: " + std::string(e.what()));
    }
    CcvgaeParams p;
    try {
        p.attr_mode = attr_mode_from_string(j.at("attr_mode").get<std::string>());
        p.w0 = detail::matrix_from_json(j.at("w0"));
        p.w1 = detail::matrix_from_json(j.at("w1"));
        p.w2 = detail::matrix_from_json(j.at("w2"));
        p.phi = detail::matrix_from_json(j.at("phi"));
        if (!j.at("w3").is_null()) p.w3 = detail::matrix_from_json(j.at("w3"));
    } catch (const nlohmann::json::exception& e) {
        throw IoError("checkpoint: missing or malformed field: " + std::string(e.what()));
    }
    const int d = j.at("d").get<int>(), h = j.at("h").get<int>(), k = j.at("k").get<int>();
    const bool shapes_ok =
        p.w0.rows() == static_cast<std::size_t>(d) && p.w0.cols() == static_cast<std::size_t>(h) &&
        p.w1.rows() == static_cast<std::size_t>(h) && p.w1.cols() == static_cast<std::size_t>(k) &&
        p.w2.rows() == static_cast<std::size_t>(h) && p.w2.cols() == static_cast<std::size_t>(k) &&
        p.phi.rows() == static_cast<std::size_t>(k) && p.phi.cols() == static_cast<std::size_t>(k) &&
        (!p.w3 || (p.w3->rows() == static_cast<std::size_t>(k) &&
                   p.w3->cols() == static_cast<std::size_t>(d)));
    if (!shapes_ok) throw IoError("checkpoint: matrix shapes disagree with header dims");
    if (p.attr_mode == AttrMode::Linear && !p.w3)
        throw IoError("checkpoint: linear attr_mode requires w3");
    return p;
}

} // namespace ccvgae
