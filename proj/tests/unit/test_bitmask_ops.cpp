// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>

#include "expect_error.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "tvc/bitmask_ops.hpp"

using namespace tvc;
using tvc::testing::code_of;
using tvc::testing::make_tensor;

namespace {

TernaryTensor random_tensor(std::mt19937_64 & rng, std::uint64_t dim) {
    std::uniform_int_distribution<std::uint64_t> nnz(0, dim);
    std::vector<std::uint64_t> idx;
    std::vector<std::int8_t> sg;
    oracle::random_support(rng, dim, nnz(rng), idx, sg);
    return make_tensor("t", dim, idx, sg, std::uniform_real_distribution<float>(0.01f, 3.0f)(rng));
}

std::vector<long double> dense_of(const TernaryTensor & t) {
    return oracle::dense(t.dim, t.indices, t.signs, t.scale);
}

} // namespace

TEST(BitmaskOps, LayoutIsLsbFirst) {
    const auto p = BitmaskPair::from_tensor(make_tensor("w", 70, {0, 3, 64, 69}, {1, -1, -1, 1}, 1.0f));
    ASSERT_EQ(p.pos().size(), 2u);
    EXPECT_EQ(p.pos()[0], 0x1u);
    EXPECT_EQ(p.neg()[0], 0x8u);
    EXPECT_EQ(p.neg()[1], 0x1u);
    EXPECT_EQ(p.pos()[1], 0x20u);
    EXPECT_EQ(p.nonzeros(), 4u);
    EXPECT_EQ(p.sign_at(3), -1);
    EXPECT_EQ(p.sign_at(4), 0);
}

TEST(BitmaskOps, ConstructorValidation) {
    EXPECT_EQ(code_of([] { BitmaskPair(4, {0x3}, {0x2}, 1.0f); }), Errc::MaskOverlap);
    EXPECT_EQ(code_of([] { BitmaskPair(4, {0x10}, {0x0}, 1.0f); }), Errc::InvalidArgument);
    EXPECT_EQ(code_of([] { BitmaskPair(4, {0x1, 0x0}, {0x0}, 1.0f); }), Errc::InvalidArgument);
}

TEST(BitmaskOps, TensorRoundTrip) {
    std::mt19937_64 rng(41);
    for (int i = 0; i < 100; ++i) {
        const auto t = random_tensor(rng, 1 + rng() % 300);
        EXPECT_EQ(BitmaskPair::from_tensor(t).to_tensor("t"), t);
    }
}

TEST(BitmaskOps, SelfDotAndDisjointDot) {
    const auto a = BitmaskPair::from_tensor(make_tensor("a", 100, {1, 7, 50}, {1, -1, 1}, 0.5f));
    EXPECT_EQ(dot(a, a), 0.25 * 3);
    const auto b = BitmaskPair::from_tensor(make_tensor("b", 100, {2, 8, 99}, {1, 1, -1}, 2.0f));
    EXPECT_EQ(dot(a, b), 0.0);
}

TEST(BitmaskOps, SignDistanceCountsOppositeAsTwo) {
    const auto a = BitmaskPair::from_tensor(make_tensor("a", 10, {3}, {1}, 1.0f));
    const auto b = BitmaskPair::from_tensor(make_tensor("b", 10, {3}, {-1}, 1.0f));
    EXPECT_EQ(sign_distance(a, a), 0u);
    EXPECT_EQ(sign_distance(a, b), 2u);
}

TEST(BitmaskOps, L2Examples) {
    const auto a = BitmaskPair::from_tensor(make_tensor("a", 64, {1, 2, 3}, {1, -1, 1}, 1.0f));
    const auto b = BitmaskPair::from_tensor(make_tensor("b", 64, {10, 20}, {1, 1}, 1.0f));
    EXPECT_EQ(scaled_l2_distance(a, a), 0.0);
    EXPECT_DOUBLE_EQ(scaled_l2_distance(a, b), std::sqrt(5.0));
}

TEST(BitmaskOps, KernelsMatchDenseOracles) {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 200; ++trial) {
        const std::uint64_t dim = trial % 2 ? 4096 : 1 + rng() % 1000;
        const auto ta = random_tensor(rng, dim);
        const auto tb = random_tensor(rng, dim);
        const auto a  = BitmaskPair::from_tensor(ta);
        const auto b  = BitmaskPair::from_tensor(tb);
        const auto da = dense_of(ta);
        const auto db = dense_of(tb);

        ASSERT_EQ(dot(a, b), static_cast<double>(oracle::dense_dot(da, db)));
        ASSERT_EQ(dot(a, b), dot(b, a));
        ASSERT_LE(dot(a, b) * dot(a, b), dot(a, a) * dot(b, b) * (1 + 1e-12));
        ASSERT_EQ(sign_distance(a, b), oracle::dense_sign_distance(oracle::ternary(dim, ta.indices, ta.signs),
                                                                    oracle::ternary(dim, tb.indices, tb.signs)));
        ASSERT_LE(oracle::ulp_distance(scaled_l2_distance(a, b), static_cast<double>(oracle::dense_l2(da, db))), 1u);
    }
}

TEST(BitmaskOps, AccumulateMatchesDenseSum) {
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 30; ++trial) {
        const std::uint64_t dim = 1 + rng() % 2000;
        std::vector<BitmaskPair> items;
        std::vector<long double> want(dim, 0.0L);
        for (int k = 0; k < 5; ++k) {
            const auto t = random_tensor(rng, dim);
            const auto d = dense_of(t);
            for (std::size_t i = 0; i < dim; ++i) want[i] += d[i];
            items.push_back(BitmaskPair::from_tensor(t));
        }
        const auto got = accumulate(items);
        ASSERT_EQ(got.size(), dim);
        for (std::size_t i = 0; i < dim; ++i) ASSERT_EQ(got[i], static_cast<float>(want[i])) << i;
    }
}

TEST(BitmaskOps, AccumulateEdgeCases) {
    const auto t = make_tensor("a", 70, {0, 65}, {1, -1}, 1.5f);
    const auto a = BitmaskPair::from_tensor(t);
    const std::vector<BitmaskPair> one{a};
    EXPECT_EQ(accumulate(one), reconstruct_dense(t));
    const std::vector<BitmaskPair> cancel{a, a.negated()};
    for (float x : accumulate(cancel)) EXPECT_EQ(x, 0.0f);
    EXPECT_EQ(code_of([] { accumulate(std::span<const BitmaskPair>{}); }), Errc::EmptyList);
}

TEST(BitmaskOps, DimMismatch) {
    const auto a = BitmaskPair::from_tensor(make_tensor("a", 10, {1}, {1}, 1.0f));
    const auto b = BitmaskPair::from_tensor(make_tensor("b", 11, {1}, {1}, 1.0f));
    EXPECT_EQ(code_of([&] { dot(a, b); }), Errc::DimMismatch);
    EXPECT_EQ(code_of([&] { sign_distance(a, b); }), Errc::DimMismatch);
    EXPECT_EQ(code_of([&] { scaled_l2_distance(a, b); }), Errc::DimMismatch);
    const std::vector<BitmaskPair> both{a, b};
    EXPECT_EQ(code_of([&] { accumulate(both); }), Errc::DimMismatch);
}
