#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "ccvgae/graph_io.hpp"
#include "ccvgae/random.hpp"

using namespace ccvgae;
namespace fs = std::filesystem;

namespace {

fs::path make_dataset_dir(const std::string& tag, int n, int d, const std::string& edges,
                          const std::string& attrs) {
    const fs::path dir = fs::temp_directory_path() / ("ccvgae_gio_" + tag);
    fs::create_directories(dir);
    std::ofstream(dir / "meta.json") << "{\"n\": " << n << ", \"d\": " << d
                                     << ", \"name\": \"" << tag << "\"}\n";
    std::ofstream(dir / "edges.tsv") << edges;
    std::ofstream(dir / "attrs.csv") << attrs;
    return dir;
}

GraphDataset random_graph(int n, double density, long seed) {
    RandomStream rng(seed);
    GraphDataset g;
    g.n = n;
    g.d = 2;
    g.name = "random";
    g.attrs = rng.gaussian_matrix(n, 2);
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v)
            if (rng.uniform() < density) g.edges.emplace_back(u, v);
    return g;
}

} // namespace

TEST_CASE("load_graph: edgeless, path graph, and error lines") {
    auto dir = make_dataset_dir("empty", 3, 1, "", "0\n1\n2\n");
    GraphDataset g = load_graph(dir);
    CHECK(g.n == 3);
    CHECK(g.edges.empty());

    auto dir2 = make_dataset_dir("path", 3, 1, "0\t1\n1\t2\n", "0\n0\n0\n");
    GraphDataset g2 = load_graph(dir2);
    CHECK(g2.edges.size() == 2);
    CHECK(g2.has_edge(1, 0));

    auto dir3 = make_dataset_dir("selfloop", 3, 1, "2\t2\n", "0\n0\n0\n");
    CHECK_THROWS_AS(load_graph(dir3), IoError);

    auto dir4 = make_dataset_dir("dup", 3, 1, "0\t1\n1\t0\n", "0\n0\n0\n");
    CHECK_THROWS_AS(load_graph(dir4), IoError);

    auto dir5 = make_dataset_dir("oob", 3, 1, "0\t9\n", "0\n0\n0\n");
    CHECK_THROWS_AS(load_graph(dir5), IoError);

    auto dir6 = make_dataset_dir("ragged", 2, 2, "", "1,2\n3\n");
    CHECK_THROWS_AS(load_graph(dir6), IoError);

    CHECK_THROWS_AS(load_graph(fs::temp_directory_path() / "ccvgae_gio_does_not_exist"),
                    IoError);
}

TEST_CASE("load_graph: comments ignored, either edge order accepted") {
    auto dir = make_dataset_dir("comments", 4, 1, "# header\n3\t0\n# mid\n1\t2\n",
                                "0\n0\n0\n0\n");
    GraphDataset g = load_graph(dir);
    REQUIRE(g.edges.size() == 2);
    CHECK(g.edges[0] == Edge{0, 3});
    CHECK(g.edges[1] == Edge{1, 2});
}

TEST_CASE("save -> load round-trips exactly") {
    GraphDataset g = random_graph(12, 0.3, 5);
    const fs::path dir = fs::temp_directory_path() / "ccvgae_gio_roundtrip";
    save_graph(g, dir);
    GraphDataset back = load_graph(dir);
    CHECK(back.n == g.n);
    CHECK(back.d == g.d);
    CHECK(back.edges == g.edges);
    CHECK(back.attrs == g.attrs);
    CHECK(back.name == g.name);
}

TEST_CASE("normalize: single node, single edge, symmetry, spectral radius") {
    GraphDataset one;
    one.n = 1;
    one.d = 0;
    one.attrs = Matrix(1, 0);
    CHECK(normalize(one).matrix(0, 0) == doctest::Approx(1.0));

    GraphDataset two;
    two.n = 2;
    two.d = 0;
    two.attrs = Matrix(2, 0);
    two.edges = {{0, 1}};
    Matrix a = normalize(two).matrix;
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(0.5));

    GraphDataset g = random_graph(10, 0.4, 3);
    Matrix an = normalize(g).matrix;
    CHECK((an - an.transposed()).max_abs() < 1e-12);
    // support only on self-loops and edges
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j)
            if (an(i, j) != 0.0) CHECK((i == j || g.has_edge(i, j)));

    auto eig = symmetric_eigenvalues(an);
    for (double ev : eig) CHECK(std::abs(ev) <= 1.0 + 1e-9);
}

TEST_CASE("split_edges: fraction handling and determinism") {
    GraphDataset g = random_graph(30, 0.25, 11);

    EdgeSplit all_train = split_edges(g, 0.0, 0.0, 1);
    CHECK(all_train.train_pos.size() == g.edges.size());
    CHECK(all_train.val_pos.empty());
    CHECK(all_train.test_pos.empty());

    // exact floor counts on a 100-edge graph
    GraphDataset big = random_graph(40, 0.2, 13);
    while (big.edges.size() > 100) big.edges.pop_back();
    REQUIRE(big.edges.size() == 100);
    EdgeSplit s = split_edges(big, 0.05, 0.10, 2);
    CHECK(s.train_pos.size() == 85);
    CHECK(s.val_pos.size() == 5);
    CHECK(s.test_pos.size() == 10);
    CHECK(s.val_neg.size() == 5);
    CHECK(s.test_neg.size() == 10);

    EdgeSplit s2 = split_edges(big, 0.05, 0.10, 2);
    CHECK(s2.train_pos == s.train_pos);
    CHECK(s2.val_neg == s.val_neg);

    EdgeSplit s3 = split_edges(big, 0.05, 0.10, 3);
    CHECK(s3.train_pos != s.train_pos);

    CHECK_THROWS_AS(split_edges(g, 0.6, 0.5, 1), ConfigError);
}

TEST_CASE("split invariants hold by reconstruction") {
    GraphDataset g = random_graph(25, 0.3, 17);
    for (long seed : {0L, 1L, 2L}) {
        EdgeSplit s = split_edges(g, 0.1, 0.2, seed);

        std::set<Edge> train(s.train_pos.begin(), s.train_pos.end());
        std::set<Edge> val(s.val_pos.begin(), s.val_pos.end());
        std::set<Edge> test(s.test_pos.begin(), s.test_pos.end());
        CHECK(train.size() + val.size() + test.size() == g.edges.size());

        std::set<Edge> all;
        all.insert(train.begin(), train.end());
        all.insert(val.begin(), val.end());
        all.insert(test.begin(), test.end());
        CHECK(all == std::set<Edge>(g.edges.begin(), g.edges.end()));

        std::set<Edge> negs(s.val_neg.begin(), s.val_neg.end());
        negs.insert(s.test_neg.begin(), s.test_neg.end());
        CHECK(negs.size() == s.val_neg.size() + s.test_neg.size()); // disjoint
        for (const Edge& e : negs) {
            CHECK(e.first < e.second);
            CHECK(!g.has_edge(e.first, e.second));
        }
    }
}

TEST_CASE("sample_negatives: enumeration case and exhaustion") {
    // 4-node path graph 0-1-2-3 has exactly 3 non-edges
    GraphDataset g;
    g.n = 4;
    g.d = 0;
    g.attrs = Matrix(4, 0);
    g.edges = {{0, 1}, {1, 2}, {2, 3}};

    auto negs = sample_negatives(g, 3, {}, 9L);
    std::set<Edge> got(negs.begin(), negs.end());
    CHECK(got == std::set<Edge>{{0, 2}, {0, 3}, {1, 3}});

    CHECK_THROWS_AS(sample_negatives(g, 4, {}, 9L), ConfigError);

    // complete graph: nothing to sample
    GraphDataset complete;
    complete.n = 3;
    complete.d = 0;
    complete.attrs = Matrix(3, 0);
    complete.edges = {{0, 1}, {0, 2}, {1, 2}};
    CHECK_THROWS_AS(sample_negatives(complete, 1, {}, 9L), ConfigError);

    // exclusions shrink the pool
    auto one = sample_negatives(g, 1, {{0, 2}, {0, 3}}, 9L);
    REQUIRE(one.size() == 1);
    CHECK(one[0] == Edge{1, 3});
}

TEST_CASE("sample_negatives: rejection path stays canonical and non-edge") {
    GraphDataset g = random_graph(50, 0.1, 23);
    auto negs = sample_negatives(g, 100, {}, 4L);
    CHECK(negs.size() == 100);
    std::set<Edge> seen;
    for (const Edge& e : negs) {
        CHECK(e.first < e.second);
        CHECK(!g.has_edge(e.first, e.second));
        CHECK(seen.insert(e).second);
    }
}

TEST_CASE("split.json round-trip") {
    GraphDataset g = random_graph(20, 0.3, 31);
    EdgeSplit s = split_edges(g, 0.1, 0.2, 7);
    const fs::path path = fs::temp_directory_path() / "ccvgae_split_rt.json";
    save_split(s, path);
    EdgeSplit back = load_split(path);
    CHECK(back.train_pos == s.train_pos);
    CHECK(back.val_pos == s.val_pos);
    CHECK(back.val_neg == s.val_neg);
    CHECK(back.test_pos == s.test_pos);
    CHECK(back.test_neg == s.test_neg);
    CHECK(back.seed == s.seed);
}
