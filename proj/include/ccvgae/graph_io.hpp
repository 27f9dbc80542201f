#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ccvgae/errors.hpp"
#include "ccvgae/matrix.hpp"
#include "ccvgae/random.hpp"

namespace ccvgae {

using Edge = std::pair<int, int>;

inline Edge canonical_edge(int u, int v) { return u < v ? Edge{u, v} : Edge{v, u}; }

// Undirected attributed graph. Edges are canonical (u < v), sorted, unique.
struct GraphDataset {
    int n = 0;
    int d = 0;
    std::string name;
    std::vector<Edge> edges;
    Matrix attrs; // n x d

    bool has_edge(int u, int v) const {
        return std::binary_search(edges.begin(), edges.end(), canonical_edge(u, v));
    }

    void validate() const {
        if (n < 0 || d < 0) throw IoError("graph: negative dimension");
        if (attrs.rows() != static_cast<std::size_t>(n) ||
            attrs.cols() != static_cast<std::size_t>(d))
            throw IoError("graph: attrs shape disagrees with meta");
        Edge prev{-1, -1};
        for (const Edge& e : edges) {
            if (e.first >= e.second) throw IoError("graph: edge not canonical or self-loop");
            if (e.first < 0 || e.second >= n) throw IoError("graph: node index out of range");
            if (e == prev) throw IoError("graph: duplicate edge");
            if (e < prev) throw IoError("graph: edges not sorted");
            prev = e;
        }
    }
};

struct NormalizedAdjacency {
    Matrix matrix; // n x n
};

struct EdgeSplit {
    std::vector<Edge> train_pos;
    std::vector<Edge> val_pos;
    std::vector<Edge> test_pos;
    std::vector<Edge> val_neg;
    std::vector<Edge> test_neg;
    long seed = 0;
};

// ---------------------------------------------------------------------------
// dataset directory format: edges.tsv + attrs.csv + meta.json
// ---------------------------------------------------------------------------

namespace detail {

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
}

// Shortest decimal that reparses to the identical double.
inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

inline GraphDataset load_graph(const std::filesystem::path& dir) {
    using nlohmann::json;
    const json meta = json::parse(detail::read_text_file(dir / "meta.json"));
    GraphDataset g;
    g.n = meta.at("n").get<int>();
    g.d = meta.at("d").get<int>();
    g.name = meta.value("name", "");
    if (g.n < 0 || g.d < 0) throw IoError("meta.json: negative n or d");

    // edges.tsv: one "u<TAB>v" pair per line, '#' comments ignored
    {
        std::istringstream in(detail::read_text_file(dir / "edges.tsv"));
        std::string line;
        std::unordered_set<long long> seen;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            std::istringstream ls(line);
            long u, v;
            if (!(ls >> u >> v)) throw IoError("edges.tsv: malformed line '" + line + "'");
            if (u == v) throw IoError("edges.tsv: self-loop at node " + std::to_string(u));
            if (u < 0 || v < 0 || u >= g.n || v >= g.n)
                throw IoError("edges.tsv: node index out of range in '" + line + "'");
            const Edge e = canonical_edge(static_cast<int>(u), static_cast<int>(v));
            const long long key = static_cast<long long>(e.first) * g.n + e.second;
            if (!seen.insert(key).second)
                throw IoError("edges.tsv: duplicate edge '" + line + "'");
            g.edges.push_back(e);
        }
        std::sort(g.edges.begin(), g.edges.end());
    }

    // attrs.csv: n rows of d comma-separated reals
    {
        std::istringstream in(detail::read_text_file(dir / "attrs.csv"));
        std::string line;
        g.attrs = Matrix(g.n, g.d);
        int row = 0;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            if (row >= g.n) throw IoError("attrs.csv: more rows than meta n");
            std::istringstream ls(line);
            std::string cell;
            int col = 0;
            while (std::getline(ls, cell, ',')) {
                if (col >= g.d) throw IoError("attrs.csv: ragged row " + std::to_string(row));
                try {
                    g.attrs(row, col) = std::stod(cell);
                } catch (const std::exception&) {
                    throw IoError("attrs.csv: bad number '" + cell + "'");
                }
                ++col;
            }
            if (col != g.d) throw IoError("attrs.csv: ragged row " + std::to_string(row));
            ++row;
        }
        if (row != g.n) throw IoError("attrs.csv: expected " + std::to_string(g.n) + " rows");
    }

    g.validate();
    return g;
}

inline void save_graph(const GraphDataset& g, const std::filesystem::path& dir) {
    g.validate();
    std::filesystem::create_directories(dir);

    nlohmann::json meta{{"n", g.n}, {"d", g.d}, {"name", g.name}};
    detail::write_text_file(dir / "meta.json", meta.dump(2) + "\n");

    std::ostringstream edges;
    for (const Edge& e : g.edges) edges << e.first << '\t' << e.second << '\n';
    detail::write_text_file(dir / "edges.tsv", edges.str());

    std::ostringstream attrs;
    for (int r = 0; r < g.n; ++r) {
        for (int c = 0; c < g.d; ++c) {
            if (c) attrs << ',';
            attrs << detail::format_double(g.attrs(r, c));
        }
        attrs << '\n';
    }
    detail::write_text_file(dir / "attrs.csv", attrs.str());
}

// ---------------------------------------------------------------------------
// normalized adjacency
// ---------------------------------------------------------------------------

// D^{-1/2} (A + I) D^{-1/2} over the given edge subset; self-loops keep
// isolated nodes well defined.
inline NormalizedAdjacency normalize_edges(int n, const std::vector<Edge>& edges) {
    if (n < 1) throw DimensionError("normalize: graph must have at least one node");
    std::vector<double> degree(n, 1.0); // self-loop contribution
    for (const Edge& e : edges) {
        degree[e.first] += 1.0;
        degree[e.second] += 1.0;
    }
    std::vector<double> inv_sqrt(n);
    for (int i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(degree[i]);

    Matrix a(n, n);
    for (int i = 0; i < n; ++i) a(i, i) = inv_sqrt[i] * inv_sqrt[i];
    for (const Edge& e : edges) {
        const double w = inv_sqrt[e.first] * inv_sqrt[e.second];
        a(e.first, e.second) = w;
        a(e.second, e.first) = w;
    }
    return NormalizedAdjacency{std::move(a)};
}

inline NormalizedAdjacency normalize(const GraphDataset& g) {
    return normalize_edges(g.n, g.edges);
}

// ---------------------------------------------------------------------------
// negative sampling and edge splitting
// ---------------------------------------------------------------------------

inline std::vector<Edge> sample_negatives(const GraphDataset& g, std::size_t k,
                                          const std::vector<Edge>& exclude,
                                          RandomStream& rng) {
    const long long n = g.n;
    std::unordered_set<long long> blocked;
    auto key = [n](const Edge& e) { return static_cast<long long>(e.first) * n + e.second; };
    for (const Edge& e : g.edges) blocked.insert(key(e));
    for (const Edge& e : exclude) blocked.insert(key(canonical_edge(e.first, e.second)));

    const long long total_pairs = n * (n - 1) / 2;
    const long long available = total_pairs - static_cast<long long>(blocked.size());
    if (static_cast<long long>(k) > available)
        throw ConfigError("sample_negatives: requested " + std::to_string(k) +
                          " non-edges but only " + std::to_string(available) + " exist");

    std::vector<Edge> out;
    out.reserve(k);
    if (static_cast<long long>(k) * 2 < available && n >= 4) {
        // plenty of room: rejection sampling
        std::unordered_set<long long> chosen;
        while (out.size() < k) {
            const int u = static_cast<int>(rng.uniform_index(g.n));
            const int v = static_cast<int>(rng.uniform_index(g.n));
            if (u == v) continue;
            const Edge e = canonical_edge(u, v);
            const long long ek = key(e);
            if (blocked.count(ek) || chosen.count(ek)) continue;
            chosen.insert(ek);
            out.push_back(e);
        }
    } else {
        // dense graph or large request: enumerate and shuffle
        std::vector<Edge> pool;
        pool.reserve(static_cast<std::size_t>(available));
        for (int u = 0; u < g.n; ++u)
            for (int v = u + 1; v < g.n; ++v)
                if (!blocked.count(static_cast<long long>(u) * n + v)) pool.emplace_back(u, v);
        rng.shuffle(pool);
        out.assign(pool.begin(), pool.begin() + k);
    }
    return out;
}

inline std::vector<Edge> sample_negatives(const GraphDataset& g, std::size_t k,
                                          const std::vector<Edge>& exclude, long seed) {
    RandomStream rng(static_cast<std::uint64_t>(seed));
    return sample_negatives(g, k, exclude, rng);
}

inline EdgeSplit split_edges(const GraphDataset& g, double val_frac, double test_frac,
                             long seed) {
    if (val_frac < 0.0 || test_frac < 0.0 || val_frac + test_frac >= 1.0)
        throw ConfigError("split_edges: fractions must be nonnegative and sum below 1");

    const std::size_t total = g.edges.size();
    const auto n_val = static_cast<std::size_t>(val_frac * static_cast<double>(total));
    const auto n_test = static_cast<std::size_t>(test_frac * static_cast<double>(total));
    if (val_frac > 0.0 && n_val == 0)
        throw ConfigError("split_edges: too few edges for requested val fraction");
    if (test_frac > 0.0 && n_test == 0)
        throw ConfigError("split_edges: too few edges for requested test fraction");

    RandomStream rng(static_cast<std::uint64_t>(seed));
    std::vector<Edge> shuffled = g.edges;
    rng.shuffle(shuffled);

    EdgeSplit split;
    split.seed = seed;
    split.test_pos.assign(shuffled.begin(), shuffled.begin() + n_test);
    split.val_pos.assign(shuffled.begin() + n_test, shuffled.begin() + n_test + n_val);
    split.train_pos.assign(shuffled.begin() + n_test + n_val, shuffled.end());

    // one joint draw keeps val and test negatives disjoint
    std::vector<Edge> negs = sample_negatives(g, n_val + n_test, {}, rng);
    split.val_neg.assign(negs.begin(), negs.begin() + n_val);
    split.test_neg.assign(negs.begin() + n_val, negs.end());
    return split;
}

// Checks that a split actually partitions the dataset's edge set and that its
// negatives are genuine non-edges.
inline void validate_split(const GraphDataset& g, const EdgeSplit& split) {
    std::vector<Edge> all = split.train_pos;
    all.insert(all.end(), split.val_pos.begin(), split.val_pos.end());
    all.insert(all.end(), split.test_pos.begin(), split.test_pos.end());
    std::sort(all.begin(), all.end());
    if (std::adjacent_find(all.begin(), all.end()) != all.end())
        throw IoError("split: positive lists overlap");
    if (all != g.edges) throw IoError("split: positives do not partition the edge set");

    std::vector<Edge> negs = split.val_neg;
    negs.insert(negs.end(), split.test_neg.begin(), split.test_neg.end());
    std::sort(negs.begin(), negs.end());
    if (std::adjacent_find(negs.begin(), negs.end()) != negs.end())
        throw IoError("split: negative lists overlap");
    for (const Edge& e : negs) {
        if (e.first >= e.second || e.first < 0 || e.second >= g.n)
            throw IoError("split: negative edge malformed");
        if (g.has_edge(e.first, e.second))
            throw IoError("split: negative entry is a real edge");
    }
    if (split.val_neg.size() != split.val_pos.size() ||
        split.test_neg.size() != split.test_pos.size())
        throw IoError("split: negative counts disagree with positives");
}

// ---------------------------------------------------------------------------
// split.json round-trip
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::json edges_to_json(const std::vector<Edge>& edges) {
    nlohmann::json arr = nlohmann::json::array();
    for (const Edge& e : edges) arr.push_back({e.first, e.second});
    return arr;
}

inline std::vector<Edge> edges_from_json(const nlohmann::json& arr) {
    std::vector<Edge> out;
    out.reserve(arr.size());
    for (const auto& pair : arr) {
        if (!pair.is_array() || pair.size() != 2) throw IoError("split.json: bad edge entry");
        out.emplace_back(pair[0].get<int>(), pair[1].get<int>());
    }
    return out;
}

} // namespace detail

inline void save_split(const EdgeSplit& split, const std::filesystem::path& path) {
    nlohmann::json j{{"train_pos", detail::edges_to_json(split.train_pos)},
                     {"val_pos", detail::edges_to_json(split.val_pos)},
                     {"val_neg", detail::edges_to_json(split.val_neg)},
                     {"test_pos", detail::edges_to_json(split.test_pos)},
                     {"test_neg", detail::edges_to_json(split.test_neg)},
                     {"seed", split.seed}};
    detail::write_text_file(path, j.dump(2) + "\n");
}

inline EdgeSplit load_split(const std::filesystem::path& path) {
    const nlohmann::json j = nlohmann::json::parse(detail::read_text_file(path));
    EdgeSplit split;
    split.train_pos = detail::edges_from_json(j.at("train_pos"));
    split.val_pos = detail::edges_from_json(j.at("val_pos"));
    split.val_neg = detail::edges_from_json(j.at("val_neg"));
    split.test_pos = detail::edges_from_json(j.at("test_pos"));
    split.test_neg = detail::edges_from_json(j.at("test_neg"));
    split.seed = j.at("seed").get<long>();
    return split;
}

} // namespace ccvgae
