#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ccvgae/adam.hpp"
#include "ccvgae/autodiff.hpp"
#include "oracles.hpp"

using namespace ccvgae;

namespace {

// Analytic gradient of f(x) via the tape vs central finite differences.
double tape_vs_fd(const std::function<Var(Tape&, Var)>& build, const Matrix& x,
                  Matrix* analytic_out = nullptr) {
    Tape tape;
    Var xv = tape.variable(x);
    Var loss = build(tape, xv);
    tape.backward(loss);
    Matrix analytic = xv.grad();
    if (analytic_out) *analytic_out = analytic;
    Matrix fd = oracles::finite_difference_grad(
        [&](const Matrix& xp) {
            Tape t2;
            Var v = t2.variable(xp);
            return build(t2, v).value()[0];
        },
        x);
    return oracles::grad_rel_error(analytic, fd);
}

} // namespace

TEST_CASE("matmul values and basic gradients") {
    Tape tape;
    Var a = tape.variable(Matrix(2, 2, {1, 2, 3, 4}));
    Var v = tape.constant(Matrix(2, 1, {1, 1}));
    Var prod = tape.matmul(a, v);
    CHECK(prod.value()(0, 0) == doctest::Approx(3));
    CHECK(prod.value()(1, 0) == doctest::Approx(7));

    // gradient of sum(A*B) wrt A is ones*B^T
    Tape t2;
    Matrix bm(3, 2, {1, 2, 3, 4, 5, 6});
    Var a2 = t2.variable(Matrix(2, 3, 1.0));
    Var b2 = t2.constant(bm);
    Var loss = t2.sum(t2.matmul(a2, b2));
    t2.backward(loss);
    Matrix expect = matmul(Matrix::ones(2, 2), bm.transposed());
    CHECK((a2.grad() - expect).max_abs() < 1e-12);
}

TEST_CASE("elementwise op values") {
    Tape tape;
    Var x = tape.variable(Matrix(1, 3, {0.0, -1.0, -3.0}));
    CHECK(tape.sigmoid(x).value()[0] == doctest::Approx(0.5));
    CHECK(tape.elu(x).value()[1] == doctest::Approx(std::exp(-1.0) - 1.0));
    CHECK(tape.relu(x).value()[2] == doctest::Approx(0.0));

    Var loss = tape.sum(tape.relu(x));
    tape.backward(loss);
    CHECK(x.grad()[2] == 0.0); // relu(-3) gradient

    CHECK_THROWS_AS(tape.log(x), NumericDomainError);
    CHECK_THROWS_AS(tape.add(x, tape.constant(Matrix(2, 2))), DimensionError);
}

TEST_CASE("gradients match finite differences across ops") {
    RandomStream rng(11);
    for (int trial = 0; trial < 5; ++trial) {
        const std::size_t n = 3 + trial % 3;
        Matrix x = oracles::random_matrix_away_from_zero(rng, n, n, 1e-3);

        CHECK(tape_vs_fd([](Tape& t, Var v) { return t.sum(t.sigmoid(v)); }, x) < 1e-5);
        CHECK(tape_vs_fd([](Tape& t, Var v) { return t.sum(t.elu(v)); }, x) < 1e-5);
        CHECK(tape_vs_fd([](Tape& t, Var v) { return t.sum(t.relu(v)); }, x) < 1e-5);
        CHECK(tape_vs_fd([](Tape& t, Var v) { return t.sum(t.exp(v)); }, x) < 1e-5);
        CHECK(tape_vs_fd([](Tape& t, Var v) { return t.sum(t.square(v)); }, x) < 1e-5);
        CHECK(tape_vs_fd([](Tape& t, Var v) { return t.sum(t.hadamard(v, v)); }, x) < 1e-5);

        Matrix pos = x.map([](double v) { return std::abs(v) + 0.5; });
        CHECK(tape_vs_fd([](Tape& t, Var v) { return t.sum(t.log(v)); }, pos) < 1e-5);

        Matrix b = rng.gaussian_matrix(n, n);
        CHECK(tape_vs_fd(
                  [&](Tape& t, Var v) { return t.sum(t.matmul(v, t.constant(b))); }, x) < 1e-5);
        CHECK(tape_vs_fd(
                  [&](Tape& t, Var v) { return t.sum(t.matmul(t.constant(b), v)); }, x) < 1e-5);
        CHECK(tape_vs_fd([](Tape& t, Var v) { return t.sum(t.transpose(v)); }, x) < 1e-5);
    }
}

TEST_CASE("inverse value, gradient and singularity") {
    Tape tape;
    Var i3 = tape.variable(Matrix::identity(3));
    CHECK((tape.inverse(i3).value() - Matrix::identity(3)).max_abs() == 0.0);

    Var tri = tape.variable(Matrix(2, 2, {1, 0, -0.5, 1}));
    Matrix inv = tape.inverse(tri).value();
    CHECK(inv(1, 0) == doctest::Approx(0.5));

    RandomStream rng(5);
    for (int trial = 0; trial < 4; ++trial) {
        Matrix x = rng.gaussian_matrix(3, 3);
        for (int i = 0; i < 3; ++i) x(i, i) += 3.0;
        CHECK(tape_vs_fd([](Tape& t, Var v) { return t.sum(t.inverse(v)); }, x) < 1e-5);
    }

    Tape t3;
    Var sing = t3.variable(Matrix(2, 2, {1, 1, 1, 1}));
    CHECK_THROWS_AS(t3.inverse(sing), SingularMatrixError);
}

TEST_CASE("power_trace values and gradient") {
    Tape tape;
    CHECK(tape.power_trace(tape.variable(Matrix::identity(3)), 1).value()[0] ==
          doctest::Approx(3.0));

    Var m = tape.variable(Matrix(2, 2, {1, 0.5, 0.5, 1}));
    CHECK(tape.power_trace(m, 2).value()[0] == doctest::Approx(2.5));

    // k = 0 falls back to tr(I) as a constant
    CHECK(tape.power_trace(m, 0).value()[0] == doctest::Approx(2.0));

    RandomStream rng(13);
    for (int trial = 0; trial < 4; ++trial) {
        Matrix x = rng.gaussian_matrix(4, 4) * 0.5;
        CHECK(tape_vs_fd([](Tape& t, Var v) { return t.power_trace(v, 3); }, x) < 1e-5);
    }
}

TEST_CASE("backward on simple closed forms") {
    Tape tape;
    Var x = tape.variable(Matrix(2, 3, {1, -2, 3, 0.5, -0.25, 2}));
    Var loss = tape.sum(x);
    tape.backward(loss);
    CHECK((x.grad() - Matrix::ones(2, 3)).max_abs() == 0.0);

    Tape t2;
    Matrix xm(2, 2, {1, -2, 3, 0.5});
    Var x2 = t2.variable(xm);
    t2.backward(t2.sum(t2.hadamard(x2, x2)));
    CHECK((x2.grad() - xm * 2.0).max_abs() < 1e-12);

    Tape t3;
    CHECK_THROWS_AS(t3.backward(t3.variable(Matrix(2, 2))), DimensionError);
}

TEST_CASE("composed GCN-style layer gradient matches finite differences") {
    RandomStream rng(21);
    Matrix anorm = rng.gaussian_matrix(4, 4) * 0.3;
    Matrix feats = rng.gaussian_matrix(4, 3);
    Matrix w = oracles::random_matrix_away_from_zero(rng, 3, 2, 1e-2);

    auto build = [&](Tape& t, Var wv) {
        Var h = t.relu(t.matmul(t.constant(matmul(anorm, feats)), wv));
        return t.sum(t.square(h));
    };
    CHECK(tape_vs_fd(build, w) < 1e-5);
}

TEST_CASE("tape replay is deterministic") {
    auto run = [] {
        RandomStream rng(99);
        Tape tape;
        Var a = tape.variable(rng.gaussian_matrix(4, 4));
        Var b = tape.variable(rng.gaussian_matrix(4, 4));
        Var loss = tape.sum(tape.sigmoid(tape.matmul(a, b)));
        tape.backward(loss);
        return std::make_tuple(loss.value()[0], a.grad(), b.grad());
    };
    auto r1 = run();
    auto r2 = run();
    CHECK(std::get<0>(r1) == std::get<0>(r2));
    CHECK(std::get<1>(r1) == std::get<1>(r2));
    CHECK(std::get<2>(r1) == std::get<2>(r2));
}

TEST_CASE("adam: zero gradient leaves parameters untouched") {
    AdamState state;
    Matrix p(2, 2, {1, 2, 3, 4});
    Matrix g(2, 2);
    Matrix before = p;
    adam_step(state, {&p}, {&g});
    CHECK(p == before);
}

TEST_CASE("adam: first bias-corrected step moves by about lr") {
    AdamState state;
    state.lr = 0.1;
    Matrix p(1, 1, {1.0});
    Matrix g(1, 1, {1.0});
    adam_step(state, {&p}, {&g});
    CHECK(p[0] == doctest::Approx(0.9).epsilon(1e-6));
}

TEST_CASE("adam drives a quadratic to zero") {
    AdamState state;
    state.lr = 0.05;
    Matrix p(1, 1, {1.0});
    for (int step = 0; step < 500; ++step) {
        Matrix g(1, 1, {2.0 * p[0]});
        adam_step(state, {&p}, {&g});
        if (std::abs(p[0]) < 0.01) break;
    }
    CHECK(std::abs(p[0]) < 0.01);
}

TEST_CASE("adam rejects mismatched shapes") {
    AdamState state;
    Matrix p(2, 2);
    Matrix g(2, 1);
    CHECK_THROWS_AS(adam_step(state, {&p}, {&g}), DimensionError);
}
