#include "spnas/bench_store.hpp"
#include "spnas/error.hpp"
#include "spnas/graph_encoding.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

namespace {

using spnas::CellEdge;
using spnas::CellSpec;
using spnas::Matrix;

const std::vector<std::string> kVocab = {"none", "skip_connect", "nor_conv_1x1", "nor_conv_3x3",
                                         "avg_pool_3x3"};

CellSpec benchmark_cell() {
    return {4,
            {{0, 1, "nor_conv_3x3"},
             {0, 2, "skip_connect"},
             {1, 2, "nor_conv_1x1"},
             {0, 3, "avg_pool_3x3"},
             {1, 3, "none"},
             {2, 3, "nor_conv_3x3"}},
            kVocab};
}

bool strictly_upper(const Matrix& a) {
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c <= r; ++c)
            if (a(r, c) != 0.0)
                return false;
    return true;
}

std::size_t count_rows_with_column(const Matrix& f, std::size_t col) {
    std::size_t n = 0;
    for (std::size_t r = 0; r < f.rows(); ++r)
        n += f(r, col) == 1.0 ? 1 : 0;
    return n;
}

TEST(GraphEncoding, SmallestCell) {
    const CellSpec spec{2, {{0, 1, "conv3x3"}}, {"conv3x3", "pool"}};
    const auto g = spnas::encode_cell(spec);
    ASSERT_EQ(g.node_count, 3u);
    EXPECT_EQ(g.adjacency, (Matrix{{0, 1, 0}, {0, 0, 1}, {0, 0, 0}}));
    // No skip op in the vocabulary: INPUT, 2 ops, OUTPUT, INTERNAL.
    ASSERT_EQ(g.feature_dim(), 5u);
    EXPECT_EQ(g.features(0, 0), 1.0);
    EXPECT_EQ(g.features(1, 1), 1.0);
    EXPECT_EQ(g.features(2, 3), 1.0);
}

TEST(GraphEncoding, BenchmarkCellHasTenNodes) {
    const auto g = spnas::encode_cell(benchmark_cell());
    EXPECT_EQ(g.node_count, 10u);
    EXPECT_EQ(spnas::expanded_node_count(benchmark_cell()), 10u);
    EXPECT_EQ(g.feature_dim(), kVocab.size() + 2); // skip_connect doubles as INTERNAL
}

TEST(GraphEncoding, EdgeOrderDoesNotMatter) {
    CellSpec spec = benchmark_cell();
    const auto reference = spnas::encode_cell(spec);
    std::mt19937_64 rng(5);
    for (int i = 0; i < 20; ++i) {
        std::shuffle(spec.edges.begin(), spec.edges.end(), rng);
        EXPECT_EQ(spnas::encode_cell(spec), reference);
    }
}

TEST(GraphEncoding, StructuralInvariants) {
    const auto g = spnas::encode_cell(benchmark_cell());
    const auto layout = spnas::FeatureLayout::for_vocabulary(kVocab);
    EXPECT_TRUE(strictly_upper(g.adjacency));
    for (std::size_t r = 0; r < g.node_count; ++r) {
        double s = 0.0;
        for (double v : g.features.row(r))
            s += v;
        EXPECT_EQ(s, 1.0) << "row " << r;
    }
    EXPECT_EQ(g.features(0, layout.input_column), 1.0);
    EXPECT_EQ(g.features(g.node_count - 1, layout.output_column), 1.0);
    EXPECT_EQ(count_rows_with_column(g.features, layout.input_column), 1u);
    EXPECT_EQ(count_rows_with_column(g.features, layout.output_column), 1u);
    EXPECT_TRUE(spnas::validate_dag(g.adjacency).acyclic);
}

TEST(GraphEncoding, OpNodesAreWiredBetweenTheirDataNodes) {
    const auto g = spnas::encode_cell(benchmark_cell());
    // Every op node has exactly one predecessor and one successor; every
    // data node except INPUT has at least one predecessor.
    const auto layout = spnas::FeatureLayout::for_vocabulary(kVocab);
    std::size_t op_nodes = 0;
    for (std::size_t v = 0; v < g.node_count; ++v) {
        std::size_t in = 0, out = 0;
        for (std::size_t u = 0; u < g.node_count; ++u) {
            in += g.adjacency(u, v) != 0.0;
            out += g.adjacency(v, u) != 0.0;
        }
        const bool is_data = g.features(v, layout.input_column) == 1.0 ||
                             g.features(v, layout.output_column) == 1.0 ||
                             (in != 1 || out != 1);
        if (!is_data) {
            ++op_nodes;
            EXPECT_EQ(in, 1u);
            EXPECT_EQ(out, 1u);
        }
    }
    EXPECT_GE(op_nodes, 4u); // internal data nodes with 1-in/1-out look the same
}

TEST(GraphEncoding, PaddingAddsIsolatedZeroRows) {
    const auto g = spnas::encode_cell(benchmark_cell(), 14);
    EXPECT_EQ(g.rows(), 14u);
    EXPECT_EQ(g.node_count, 10u);
    for (std::size_t r = 10; r < 14; ++r) {
        for (std::size_t c = 0; c < 14; ++c) {
            EXPECT_EQ(g.adjacency(r, c), 0.0);
            EXPECT_EQ(g.adjacency(c, r), 0.0);
        }
        for (double v : g.features.row(r))
            EXPECT_EQ(v, 0.0);
    }
}

TEST(GraphEncoding, UnknownOpIsVocabularyError) {
    CellSpec spec = benchmark_cell();
    spec.edges[2].op = "dil_conv_5x5";
    try {
        spnas::encode_cell(spec);
        FAIL();
    } catch (const spnas::VocabularyError& e) {
        EXPECT_NE(std::string(e.what()).find("dil_conv_5x5"), std::string::npos);
    }
}

TEST(GraphEncoding, CycleIsEncodingErrorNamingBackEdge) {
    const CellSpec spec{3, {{0, 1, "a"}, {1, 2, "a"}, {2, 1, "a"}}, {"a"}};
    try {
        spnas::encode_cell(spec);
        FAIL();
    } catch (const spnas::EncodingError& e) {
        EXPECT_NE(std::string(e.what()).find("back edge 2->1"), std::string::npos) << e.what();
    }
}

TEST(GraphEncoding, MalformedSpecs) {
    EXPECT_THROW(spnas::encode_cell({2, {{0, 2, "a"}}, {"a"}}), spnas::EncodingError);
    EXPECT_THROW(spnas::encode_cell({2, {{1, 1, "a"}}, {"a"}}), spnas::EncodingError);
    EXPECT_THROW(spnas::encode_cell({2, {{0, 1, "a"}, {0, 1, "a"}}, {"a"}}), spnas::EncodingError);
    EXPECT_THROW(spnas::encode_cell({3, {{1, 0, "a"}}, {"a"}}), spnas::EncodingError);
    EXPECT_THROW(spnas::encode_cell({1, {}, {"a"}}), spnas::EncodingError);
}

TEST(ValidateDag, UpperTriangularIsAcyclic) {
    const Matrix a{{0, 1, 1}, {0, 0, 1}, {0, 0, 0}};
    const auto r = spnas::validate_dag(a);
    EXPECT_TRUE(r.acyclic);
    EXPECT_EQ(r.topological_order, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(ValidateDag, TwoCycle) {
    const auto r = spnas::validate_dag(Matrix{{0, 1}, {1, 0}});
    EXPECT_FALSE(r.acyclic);
    std::vector<std::size_t> cyc = r.cycle;
    std::sort(cyc.begin(), cyc.end());
    EXPECT_EQ(cyc, (std::vector<std::size_t>{0, 1}));
}

TEST(ValidateDag, NonSquareIsDimensionError) {
    EXPECT_THROW(spnas::validate_dag(Matrix(2, 3)), spnas::DimensionError);
}

TEST(ValidateDag, ShuffledRandomDagsRecoverATopologicalOrder) {
    std::mt19937_64 rng(8);
    std::bernoulli_distribution edge(0.4);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 8;
        Matrix upper(n, n);
        for (std::size_t u = 0; u < n; ++u)
            for (std::size_t v = u + 1; v < n; ++v)
                upper(u, v) = edge(rng) ? 1.0 : 0.0;
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        Matrix shuffled(n, n);
        for (std::size_t u = 0; u < n; ++u)
            for (std::size_t v = 0; v < n; ++v)
                shuffled(perm[u], perm[v]) = upper(u, v);

        const auto r = spnas::validate_dag(shuffled);
        ASSERT_TRUE(r.acyclic);
        std::vector<std::size_t> pos(n);
        for (std::size_t i = 0; i < n; ++i)
            pos[r.topological_order[i]] = i;
        Matrix reindexed(n, n);
        for (std::size_t u = 0; u < n; ++u)
            for (std::size_t v = 0; v < n; ++v)
                reindexed(pos[u], pos[v]) = shuffled(u, v);
        EXPECT_TRUE(strictly_upper(reindexed));
    }
}

TEST(ValidateDag, RandomCyclesAreReportedAsRealCycles) {
    std::mt19937_64 rng(9);
    std::bernoulli_distribution edge(0.3);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 7;
        Matrix a(n, n);
        for (std::size_t u = 0; u < n; ++u)
            for (std::size_t v = 0; v < n; ++v)
                a(u, v) = (u != v && edge(rng)) ? 1.0 : 0.0;
        const auto r = spnas::validate_dag(a);
        if (r.acyclic)
            continue;
        ASSERT_GE(r.cycle.size(), 2u);
        for (std::size_t i = 0; i < r.cycle.size(); ++i)
            EXPECT_EQ(a(r.cycle[i], r.cycle[(i + 1) % r.cycle.size()]), 1.0);
    }
}

TEST(GraphEncoding, InjectiveOnSyntheticSpace) {
    const auto store = spnas::generate_synthetic({.seed = 3, .size = 3000});
    std::set<std::pair<std::vector<double>, std::vector<double>>> seen;
    for (const auto& r : store.records()) {
        const auto g = spnas::encode_cell(r.cell);
        const auto& a = g.adjacency.data();
        const auto& f = g.features.data();
        EXPECT_TRUE(seen.emplace(std::vector<double>(a.begin(), a.end()),
                                 std::vector<double>(f.begin(), f.end()))
                        .second)
            << r.id;
    }
}

TEST(GraphEncoding, Deterministic) {
    EXPECT_EQ(spnas::encode_cell(benchmark_cell(), 12), spnas::encode_cell(benchmark_cell(), 12));
}

} // namespace
