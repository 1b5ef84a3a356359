#include "embproj/knn.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace embproj;
using testutil::to_matrix;

TEST(Neighbors, CollinearEuclidean) {
    const auto list = neighbors(to_matrix({{0, 0}, {1, 0}, {3, 0}}), 0, 2, Metric::Euclidean);
    ASSERT_EQ(list.neighbors.size(), 2u);
    EXPECT_EQ(list.neighbors[0], (Neighbor{1, 1.0}));
    EXPECT_EQ(list.neighbors[1], (Neighbor{2, 3.0}));
}

TEST(Neighbors, CosineOrdering) {
    const auto list = neighbors(to_matrix({{1, 0}, {0, 1}, {1, 1}}), 0, 2, Metric::Cosine);
    ASSERT_EQ(list.neighbors.size(), 2u);
    EXPECT_EQ(list.neighbors[0].index, 2u);
    EXPECT_NEAR(list.neighbors[0].distance, 1.0 - 1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(list.neighbors[0].distance, 0.29289, 1e-5);
    EXPECT_EQ(list.neighbors[1].index, 1u);
    EXPECT_NEAR(list.neighbors[1].distance, 1.0, 1e-15);
}

TEST(Neighbors, KCoercedToNMinusOne) {
    const auto list = neighbors(to_matrix({{0}, {1}, {2}}), 0, 100, Metric::Euclidean);
    EXPECT_EQ(list.neighbors.size(), 2u);
    EXPECT_EQ(list.k, 100u);
    EXPECT_TRUE(neighbors(to_matrix({{5.0}}), 0, 3, Metric::Cosine).neighbors.empty());
}

TEST(Neighbors, Errors) {
    const Matrix m = to_matrix({{0}, {1}, {2}});
    try {
        neighbors(m, 3, 1, Metric::Euclidean);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::IndexOutOfRange);
    }
    try {
        neighbors(m, 0, 0, Metric::Euclidean);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
    }
}

TEST(Neighbors, ZeroVectorCosineIsOne) {
    const auto list = neighbors(to_matrix({{0, 0}, {1, 0}, {-3, 2}}), 0, 2, Metric::Cosine);
    for (const auto& nb : list.neighbors) EXPECT_EQ(nb.distance, 1.0);
    EXPECT_EQ(list.neighbors[0].index, 1u);
}

TEST(Neighbors, MatchesNaiveSortIncludingTies) {
    std::mt19937_64 rng(42);
    std::uniform_int_distribution<int> small(-2, 2), nd(2, 200), dd(1, 6);
    for (int trial = 0; trial < 40; ++trial) {
        // Integer-valued coordinates force plenty of exact ties.
        oracle::Rows rows(nd(rng), std::vector<double>(dd(rng)));
        for (auto& r : rows)
            for (auto& v : r) v = small(rng);
        const Matrix m = to_matrix(rows);
        std::uniform_int_distribution<std::size_t> pick(0, rows.size() - 1);
        for (bool cosine : {false, true}) {
            const std::size_t anchor = pick(rng), k = 1 + pick(rng);
            const auto got = neighbors(m, anchor, k, cosine ? Metric::Cosine : Metric::Euclidean);
            const auto want = oracle::naive_neighbors(rows, anchor, k, cosine);
            ASSERT_EQ(got.neighbors.size(), want.size());
            for (std::size_t i = 0; i < want.size(); ++i) {
                EXPECT_EQ(got.neighbors[i].index, want[i].first);
                EXPECT_EQ(got.neighbors[i].distance, want[i].second);
            }
        }
    }
}

TEST(Neighbors, PermutationEquivariant) {
    std::mt19937_64 rng(8);
    const auto rows = oracle::gaussian_rows(60, 5, rng);
    std::vector<std::size_t> perm(rows.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    oracle::Rows permuted(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) permuted[perm[i]] = rows[i];
    for (Metric metric : {Metric::Euclidean, Metric::Cosine}) {
        const auto a = neighbors(to_matrix(rows), 4, 10, metric);
        const auto b = neighbors(to_matrix(permuted), perm[4], 10, metric);
        for (std::size_t i = 0; i < a.neighbors.size(); ++i) {
            EXPECT_EQ(perm[a.neighbors[i].index], b.neighbors[i].index);
            EXPECT_EQ(a.neighbors[i].distance, b.neighbors[i].distance);
        }
    }
}

TEST(PairwiseDistances, SmallCases) {
    const Matrix one = pairwise_distances(to_matrix({{1, 2}}), Metric::Euclidean);
    ASSERT_EQ(one.rows(), 1);
    EXPECT_EQ(one(0, 0), 0.0);
    const Matrix two = pairwise_distances(to_matrix({{0, 0}, {3, 4}}), Metric::Euclidean);
    EXPECT_EQ(two(0, 1), 5.0);
    EXPECT_EQ(two(1, 0), 5.0);
}

TEST(PairwiseDistances, MatchesScalarRecomputation) {
    std::mt19937_64 rng(12);
    const auto rows = oracle::gaussian_rows(20, 6, rng);
    for (Metric metric : {Metric::Euclidean, Metric::Cosine}) {
        const Matrix d = pairwise_distances(to_matrix(rows), metric);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            EXPECT_EQ(d(i, i), 0.0);
            for (std::size_t j = 0; j < rows.size(); ++j) {
                if (i == j) continue;
                const double want = metric == Metric::Cosine ? oracle::cosine(rows[i], rows[j])
                                                             : oracle::euclidean(rows[i], rows[j]);
                EXPECT_NEAR(d(i, j), want, 1e-12);
                EXPECT_EQ(d(i, j), d(j, i));
            }
        }
    }
}

TEST(PairwiseDistances, MetricAxioms) {
    std::mt19937_64 rng(13);
    const auto rows = oracle::gaussian_rows(40, 7, rng, 3.0);
    const Matrix e = pairwise_distances(to_matrix(rows), Metric::Euclidean);
    const Matrix c = pairwise_distances(to_matrix(rows), Metric::Cosine);
    std::uniform_int_distribution<Eigen::Index> pick(0, 39);
    for (int t = 0; t < 500; ++t) {
        const auto a = pick(rng), b = pick(rng), x = pick(rng);
        EXPECT_LE(e(a, b), e(a, x) + e(x, b) + 1e-9);
        EXPECT_GE(c(a, b), 0.0);
        EXPECT_LE(c(a, b), 2.0);
    }
}
