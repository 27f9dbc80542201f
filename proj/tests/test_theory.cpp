#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ccvgae/theory.hpp"
#include "oracles.hpp"

using namespace ccvgae;

TEST_CASE("acyclicity_oracle: base cases") {
    CHECK(acyclicity_oracle(Matrix(3, 3)));

    Matrix two_cycle(2, 2);
    two_cycle(0, 1) = 1.0;
    two_cycle(1, 0) = 1.0;
    CHECK(!acyclicity_oracle(two_cycle));

    RandomStream rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix tri(5, 5);
        for (int i = 1; i < 5; ++i)
            for (int j = 0; j < i; ++j)
                if (rng.uniform() < 0.6) tri(i, j) = rng.uniform(-1.0, 1.0);
        CHECK(acyclicity_oracle(tri));
    }
}

TEST_CASE("acyclicity_oracle agrees with an independent DFS on random digraphs") {
    RandomStream rng(9);
    for (int trial = 0; trial < 300; ++trial) {
        const int k = 2 + static_cast<int>(rng.uniform_index(5));
        Matrix phi(k, k);
        std::vector<std::vector<int>> adj(k);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) {
                if (i == j) continue;
                if (rng.uniform() < 0.3) {
                    phi(i, j) = rng.uniform(-1.0, 1.0);
                    if (phi(i, j) != 0.0) adj[i].push_back(j);
                }
            }
        CHECK(acyclicity_oracle(phi) == !oracles::has_directed_cycle(adj));
    }
}

TEST_CASE("perm_triangular_check: identity, single edge, random DAGs") {
    PermTriangularResult r0 = perm_triangular_check(Matrix(3, 3));
    CHECK(r0.ok);
    CHECK(r0.permutation == std::vector<int>{0, 1, 2});

    // 1 -> 0 : source 1 must come first
    Matrix phi(2, 2);
    phi(1, 0) = 0.8;
    PermTriangularResult r1 = perm_triangular_check(phi);
    CHECK(r1.ok);
    CHECK(r1.permutation == std::vector<int>{1, 0});

    RandomStream rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        Matrix dag = random_dag_phi(5, 0.5, rng);
        CHECK(perm_triangular_check(dag).ok); // k=5 includes the brute-force path
    }

    Matrix cyc(2, 2);
    cyc(0, 1) = cyc(1, 0) = 1.0;
    CHECK_THROWS_AS(perm_triangular_check(cyc), ConfigError);
}

TEST_CASE("perm_triangular_check holds for 500 random DAGs up to k=8") {
    RandomStream rng(21);
    for (int trial = 0; trial < 500; ++trial) {
        const int k = 2 + static_cast<int>(rng.uniform_index(7));
        CHECK(perm_triangular_check(random_dag_phi(k, 0.4, rng)).ok);
    }
}

TEST_CASE("cdf bound: worked sigma=1, delta=1 instance") {
    const BoundRow row = linear_bound_check(1.0, 1.0);
    // F(1) = Phi(1) = 0.8413..., f_L(1) = 0.8989...
    CHECK(scaled_normal_cdf(1.0, 1.0) == doctest::Approx(0.841345).epsilon(1e-5));
    CHECK(linear_cdf_surrogate(1.0) == doctest::Approx(0.898942).epsilon(1e-5));
    CHECK(row.empirical_max_err == doctest::Approx(0.0576).epsilon(2e-3));
    CHECK(row.analytic_bound == doctest::Approx(0.15698).epsilon(1e-4));
    CHECK(row.pass);
}

TEST_CASE("cdf bound: shrinks to zero with delta and is monotone in delta") {
    const BoundRow tiny = linear_bound_check(1.0, 1e-4);
    CHECK(tiny.empirical_max_err < 1e-6);
    CHECK(tiny.analytic_bound < 1e-6);
    CHECK(tiny.pass);

    double prev = 0.0;
    for (double delta : {0.25, 0.5, 1.0, 2.0, 3.0}) {
        const double b = cdf_surrogate_bound(delta, 1.0);
        CHECK(b > prev);
        prev = b;
    }
}

TEST_CASE("cdf bound holds on the full grid") {
    for (double sigma : {0.5, 1.0, 2.0})
        for (double delta : {0.25, 0.5, 1.0, 2.0, 3.0}) {
            const BoundRow row = linear_bound_check(sigma, delta);
            INFO("sigma=", sigma, " delta=", delta);
            CHECK(row.pass);
        }
}

TEST_CASE("construction_demo: independence case and analytic correlation") {
    LinearUniformSpec indep;
    indep.omega = Matrix(2, 2);
    indep.r0 = {0.0, 0.0};
    indep.r1 = {1.0, 1.0};
    const ConstructionReport r = construction_demo(indep, 100000, 5);
    CHECK(std::abs(r.corr_constructed) < 0.02);
    CHECK(r.ks_z1 < 0.05);
    CHECK(r.ks_z2 < 0.05);

    LinearUniformSpec chained = indep;
    chained.omega(1, 0) = 1.0;
    const ConstructionReport c = construction_demo(chained, 100000, 5);
    CHECK(c.corr_constructed == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.03));
    CHECK(c.corr_diff < 0.02);
}

TEST_CASE("construction_demo: ten random specs stay within divergence budgets") {
    RandomStream rng(31);
    for (int i = 0; i < 10; ++i) {
        const LinearUniformSpec spec = random_linear_uniform_spec(rng);
        const ConstructionReport r = construction_demo(spec, 100000, 100 + i);
        INFO("spec ", i, " omega=", spec.omega(1, 0));
        CHECK(r.ks_z1 < 0.05);
        CHECK(r.ks_z2 < 0.05);
        CHECK(r.corr_diff < 0.02);
    }
}

TEST_CASE("consistency_check: root-n rate and shrinking error") {
    ScmSpec spec = gen_spec(4, 1, 1.0, 7);
    const ConsistencyReport r = consistency_check(spec, {100, 1000, 10000});
    CHECK(r.mean_errors.back() < r.mean_errors.front());
    CHECK(r.slope == doctest::Approx(-0.5).epsilon(0.2));
    CHECK(std::abs(r.slope + 0.5) <= 0.1);

    // deterministic per seed
    const ConsistencyReport r2 = consistency_check(spec, {100, 1000, 10000});
    CHECK(r2.mean_errors == r.mean_errors);
}

TEST_CASE("theory suite aggregates and serializes") {
    const TheoryReport report = run_theory_suite(0, 100000); // thresholds assume 1e5 draws
    CHECK(report.all_pass());

    const nlohmann::json j = to_json(report);
    CHECK(j.at("all_pass").get<bool>());
    CHECK(j.at("checks").size() == report.checks.size());
    bool saw_bound = false, saw_consistency = false;
    for (const auto& c : j.at("checks")) {
        if (c.at("name") == "cdf_linearization_bound") saw_bound = true;
        if (c.at("name") == "consistency_slope") saw_consistency = true;
    }
    CHECK(saw_bound);
    CHECK(saw_consistency);
}
