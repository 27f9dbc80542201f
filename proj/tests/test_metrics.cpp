#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ccvgae/metrics.hpp"
#include "ccvgae/random.hpp"
#include "oracles.hpp"

using namespace ccvgae;

TEST_CASE("auc: separation, concordance fraction, all-tied") {
    CHECK(auc({1, 1, 0, 0}, {0.9, 0.8, 0.3, 0.1}) == 1.0);
    CHECK(auc({1, 0, 1, 0}, {0.9, 0.8, 0.2, 0.1}) == 0.75);
    CHECK(auc({1, 0, 1, 0}, {0.5, 0.5, 0.5, 0.5}) == 0.5);
    CHECK_THROWS_AS(auc({1, 1}, {0.5, 0.6}), ConfigError);
    CHECK_THROWS_AS(auc({1, 1}, {0.5}), DimensionError);
}

TEST_CASE("average_precision: worked rankings") {
    CHECK(average_precision({1, 1, 0, 0}, {0.9, 0.8, 0.3, 0.1}) == 1.0);
    // order P,N,P,N
    CHECK(average_precision({1, 0, 1, 0}, {0.9, 0.8, 0.7, 0.1}) ==
          doctest::Approx(5.0 / 6.0));
    // single positive ranked last of 4
    CHECK(average_precision({0, 0, 0, 1}, {0.9, 0.8, 0.7, 0.1}) == 0.25);
    CHECK_THROWS_AS(average_precision({0, 0}, {0.5, 0.6}), ConfigError);
}

TEST_CASE("auc ties broken at half weight") {
    // one positive tied with one negative, one clean win
    CHECK(auc({1, 0, 0}, {0.5, 0.5, 0.1}) == 0.75);
}

TEST_CASE("ap ties broken by stable input order") {
    // scores tied; input order puts the negative first
    CHECK(average_precision({0, 1}, {0.5, 0.5}) == 0.5);
    CHECK(average_precision({1, 0}, {0.5, 0.5}) == 1.0);
}

TEST_CASE("auc and ap equal brute-force oracles on 1000 random small cases") {
    RandomStream rng(1234);
    int checked = 0;
    while (checked < 1000) {
        const std::size_t n = 2 + rng.uniform_index(19);
        std::vector<int> labels(n);
        std::vector<double> scores(n);
        bool any_pos = false, any_neg = false;
        for (std::size_t i = 0; i < n; ++i) {
            labels[i] = rng.uniform() < 0.4 ? 1 : 0;
            // coarse score grid makes ties common
            scores[i] = static_cast<double>(rng.uniform_index(8)) / 8.0;
            (labels[i] ? any_pos : any_neg) = true;
        }
        if (!any_pos || !any_neg) continue;
        ++checked;
        CHECK(auc(labels, scores) == oracles::auc_pairwise(labels, scores));
        CHECK(average_precision(labels, scores) ==
              oracles::average_precision_counting(labels, scores));
    }
}
