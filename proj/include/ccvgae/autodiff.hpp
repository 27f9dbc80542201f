#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "ccvgae/errors.hpp"
#include "ccvgae/matrix.hpp"

namespace ccvgae {

class Tape;

// Lightweight handle to a node on a tape. Copyable; the tape owns the data.
struct Var {
    Tape* tape = nullptr;
    std::size_t id = 0;

    const Matrix& value() const;
    Matrix grad() const; // zeros of value shape if backward never reached it
    std::size_t rows() const;
    std::size_t cols() const;
};

// Reverse-mode differentiation tape over dense matrices.
//
// Usage is define-by-run: register leaves with variable()/constant(), compose
// with the op methods, call backward() on a 1x1 loss, then read grads off the
// leaves. A tape is single-owner; build a fresh one per training step.
class Tape {
public:
    Var variable(Matrix value) { return push(std::move(value), /*needs_grad=*/true); }
    Var constant(Matrix value) { return push(std::move(value), /*needs_grad=*/false); }

    Var constant_scalar(double v) { return constant(Matrix(1, 1, std::vector<double>{v})); }

    std::size_t size() const { return nodes_.size(); }

    const Matrix& value(std::size_t id) const { return nodes_[id].value; }
    const Matrix& grad(std::size_t id) const { return nodes_[id].grad; }

    // ---- binary elementwise ----

    Var add(Var a, Var b) {
        val(a).require_same_shape(val(b), "add");
        return binary(a, b, val(a) + val(b),
                      [](Tape& t, const Matrix& g, std::size_t pa, std::size_t pb) {
                          t.accumulate(pa, g);
                          t.accumulate(pb, g);
                      });
    }

    Var sub(Var a, Var b) {
        val(a).require_same_shape(val(b), "sub");
        return binary(a, b, val(a) - val(b),
                      [](Tape& t, const Matrix& g, std::size_t pa, std::size_t pb) {
                          t.accumulate(pa, g);
                          t.accumulate(pb, g * -1.0);
                      });
    }

    Var hadamard(Var a, Var b) {
        val(a).require_same_shape(val(b), "hadamard");
        return binary(a, b, ccvgae::hadamard(val(a), val(b)),
                      [](Tape& t, const Matrix& g, std::size_t pa, std::size_t pb) {
                          t.accumulate(pa, ccvgae::hadamard(g, t.value(pb)));
                          t.accumulate(pb, ccvgae::hadamard(g, t.value(pa)));
                      });
    }

    Var matmul(Var a, Var b) {
        Matrix out = ccvgae::matmul(val(a), val(b));
        return binary(a, b, std::move(out),
                      [](Tape& t, const Matrix& g, std::size_t pa, std::size_t pb) {
                          if (t.wants_grad(pa))
                              t.accumulate(pa, ccvgae::matmul(g, t.value(pb).transposed()));
                          if (t.wants_grad(pb))
                              t.accumulate(pb, ccvgae::matmul(t.value(pa).transposed(), g));
                      });
    }

    // ---- unary ----

    Var scale(Var a, double s) {
        return unary(a, val(a) * s, [s](Tape& t, const Matrix& g, std::size_t pa) {
            t.accumulate(pa, g * s);
        });
    }

    Var transpose(Var a) {
        return unary(a, val(a).transposed(), [](Tape& t, const Matrix& g, std::size_t pa) {
            t.accumulate(pa, g.transposed());
        });
    }

    Var sigmoid(Var a) {
        Matrix out = val(a).map([](double x) { return sigmoid_scalar(x); });
        const std::size_t out_id = nodes_.size();
        return unary(a, std::move(out), [out_id](Tape& t, const Matrix& g, std::size_t pa) {
            const Matrix& s = t.value(out_id);
            Matrix gp = g;
            for (std::size_t i = 0; i < gp.size(); ++i) gp[i] *= s[i] * (1.0 - s[i]);
            t.accumulate(pa, gp);
        });
    }

    Var relu(Var a) {
        Matrix out = val(a).map([](double x) { return x > 0.0 ? x : 0.0; });
        return unary(a, std::move(out), [](Tape& t, const Matrix& g, std::size_t pa) {
            const Matrix& x = t.value(pa);
            Matrix gp = g;
            for (std::size_t i = 0; i < gp.size(); ++i) gp[i] = x[i] > 0.0 ? gp[i] : 0.0;
            t.accumulate(pa, gp);
        });
    }

    // ELU with unit scale: x for x >= 0, e^x - 1 below.
    Var elu(Var a) {
        Matrix out = val(a).map([](double x) { return x >= 0.0 ? x : std::expm1(x); });
        const std::size_t out_id = nodes_.size();
        return unary(a, std::move(out), [out_id](Tape& t, const Matrix& g, std::size_t pa) {
            const Matrix& x = t.value(pa);
            const Matrix& y = t.value(out_id);
            Matrix gp = g;
            for (std::size_t i = 0; i < gp.size(); ++i)
                gp[i] *= x[i] >= 0.0 ? 1.0 : y[i] + 1.0;
            t.accumulate(pa, gp);
        });
    }

    Var exp(Var a) {
        Matrix out = val(a).map([](double x) { return std::exp(x); });
        const std::size_t out_id = nodes_.size();
        return unary(a, std::move(out), [out_id](Tape& t, const Matrix& g, std::size_t pa) {
            t.accumulate(pa, ccvgae::hadamard(g, t.value(out_id)));
        });
    }

    Var log(Var a) {
        const Matrix& x = val(a);
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (!(x[i] > 0.0)) throw NumericDomainError("log: non-positive entry");
        }
        Matrix out = x.map([](double v) { return std::log(v); });
        return unary(a, std::move(out), [](Tape& t, const Matrix& g, std::size_t pa) {
            const Matrix& x = t.value(pa);
            Matrix gp = g;
            for (std::size_t i = 0; i < gp.size(); ++i) gp[i] /= x[i];
            t.accumulate(pa, gp);
        });
    }

    // |x| with subgradient 0 at the origin.
    Var abs(Var a) {
        Matrix out = val(a).map([](double x) { return std::abs(x); });
        return unary(a, std::move(out), [](Tape& t, const Matrix& g, std::size_t pa) {
            const Matrix& x = t.value(pa);
            Matrix gp = g;
            for (std::size_t i = 0; i < gp.size(); ++i)
                gp[i] *= x[i] > 0.0 ? 1.0 : (x[i] < 0.0 ? -1.0 : 0.0);
            t.accumulate(pa, gp);
        });
    }

    Var square(Var a) {
        Matrix out = val(a).map([](double x) { return x * x; });
        return unary(a, std::move(out), [](Tape& t, const Matrix& g, std::size_t pa) {
            const Matrix& x = t.value(pa);
            Matrix gp = g;
            for (std::size_t i = 0; i < gp.size(); ++i) gp[i] *= 2.0 * x[i];
            t.accumulate(pa, gp);
        });
    }

    // Clamp into [lo, hi]; gradient passes where the input was in range.
    Var clamp(Var a, double lo, double hi) {
        Matrix out = val(a).map([lo, hi](double x) { return std::min(std::max(x, lo), hi); });
        return unary(a, std::move(out), [lo, hi](Tape& t, const Matrix& g, std::size_t pa) {
            const Matrix& x = t.value(pa);
            Matrix gp = g;
            for (std::size_t i = 0; i < gp.size(); ++i)
                gp[i] = (x[i] >= lo && x[i] <= hi) ? gp[i] : 0.0;
            t.accumulate(pa, gp);
        });
    }

    Var inverse(Var a) {
        val(a).require_square("inverse");
        Matrix inv = ccvgae::inverse(val(a));
        const std::size_t out_id = nodes_.size();
        return unary(a, std::move(inv), [out_id](Tape& t, const Matrix& g, std::size_t pa) {
            const Matrix inv_t = t.value(out_id).transposed();
            Matrix gp = ccvgae::matmul(ccvgae::matmul(inv_t, g), inv_t) * -1.0;
            t.accumulate(pa, gp);
        });
    }

    // ---- reductions ----

    Var sum(Var a) {
        Matrix out(1, 1, std::vector<double>{val(a).sum()});
        return unary(a, std::move(out), [](Tape& t, const Matrix& g, std::size_t pa) {
            const Matrix& x = t.value(pa);
            t.accumulate(pa, Matrix(x.rows(), x.cols(), g[0]));
        });
    }

    Var trace(Var a) {
        val(a).require_square("trace");
        Matrix out(1, 1, std::vector<double>{val(a).trace()});
        return unary(a, std::move(out), [](Tape& t, const Matrix& g, std::size_t pa) {
            const Matrix& x = t.value(pa);
            Matrix gp(x.rows(), x.cols());
            for (std::size_t i = 0; i < x.rows(); ++i) gp(i, i) = g[0];
            t.accumulate(pa, gp);
        });
    }

    // tr(M^k) built from k-1 tape products, so gradients flow through each.
    // k == 0 degenerates to the trace of I, a constant.
    Var power_trace(Var m, std::size_t k) {
        val(m).require_square("power_trace");
        if (k == 0) return constant_scalar(static_cast<double>(val(m).rows()));
        Var p = m;
        for (std::size_t i = 1; i < k; ++i) p = matmul(p, m);
        return trace(p);
    }

    // ---- backward sweep ----

    void backward(Var loss) {
        if (loss.tape != this) throw DimensionError("backward: loss from another tape");
        const Matrix& lv = val(loss);
        if (lv.rows() != 1 || lv.cols() != 1)
            throw DimensionError("backward: loss must be 1x1");
        nodes_[loss.id].grad = Matrix(1, 1, 1.0);
        for (std::size_t id = loss.id + 1; id-- > 0;) {
            Node& node = nodes_[id];
            if (!node.needs_grad || !node.backprop) continue;
            if (node.grad.empty()) continue;
            node.backprop(*this, node.grad);
        }
    }

private:
    struct Node {
        Matrix value;
        Matrix grad; // allocated lazily, zero until backward touches it
        bool needs_grad = false;
        std::function<void(Tape&, const Matrix& grad_out)> backprop;
    };

    friend struct Var;

    const Matrix& val(Var v) const { return nodes_[v.id].value; }

    bool wants_grad(std::size_t id) const { return nodes_[id].needs_grad; }

    void accumulate(std::size_t id, const Matrix& g) {
        Node& node = nodes_[id];
        if (!node.needs_grad) return;
        if (node.grad.empty()) {
            node.grad = g;
        } else {
            for (std::size_t i = 0; i < g.size(); ++i) node.grad[i] += g[i];
        }
    }

    Var push(Matrix value, bool needs_grad,
             std::function<void(Tape&, const Matrix&)> backprop = nullptr) {
        Node node;
        node.value = std::move(value);
        node.needs_grad = needs_grad;
        node.backprop = std::move(backprop);
        nodes_.push_back(std::move(node));
        return Var{this, nodes_.size() - 1};
    }

    template <typename Back>
    Var unary(Var a, Matrix out, Back&& back) {
        check_owned(a);
        const std::size_t pa = a.id;
        const bool ng = nodes_[pa].needs_grad;
        return push(std::move(out), ng,
                    ng ? std::function<void(Tape&, const Matrix&)>(
                             [pa, back = std::forward<Back>(back)](Tape& t, const Matrix& g) {
                                 back(t, g, pa);
                             })
                       : nullptr);
    }

    template <typename Back>
    Var binary(Var a, Var b, Matrix out, Back&& back) {
        check_owned(a);
        check_owned(b);
        const std::size_t pa = a.id, pb = b.id;
        const bool ng = nodes_[pa].needs_grad || nodes_[pb].needs_grad;
        return push(std::move(out), ng,
                    ng ? std::function<void(Tape&, const Matrix&)>(
                             [pa, pb, back = std::forward<Back>(back)](Tape& t, const Matrix& g) {
                                 back(t, g, pa, pb);
                             })
                       : nullptr);
    }

    void check_owned(Var v) const {
        if (v.tape != this) throw DimensionError("tape op: operand from another tape");
    }

    static double sigmoid_scalar(double x) {
        return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                        : std::exp(x) / (1.0 + std::exp(x));
    }

    std::vector<Node> nodes_;
};

inline const Matrix& Var::value() const { return tape->value(id); }

inline Matrix Var::grad() const {
    const Matrix& g = tape->grad(id);
    if (!g.empty()) return g;
    const Matrix& v = value();
    return Matrix(v.rows(), v.cols());
}

inline std::size_t Var::rows() const { return value().rows(); }
inline std::size_t Var::cols() const { return value().cols(); }

// Numerically stable scalar sigmoid, shared by non-tape code paths.
inline double sigmoid(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

} // namespace ccvgae
