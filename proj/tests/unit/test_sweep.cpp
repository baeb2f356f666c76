// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "fixtures.hpp"
#include "tvc/codec.hpp"
#include "tvc/error.hpp"
#include "tvc/sweep.hpp"

using namespace tvc;

namespace {

double l2_error(const TaskVector & tau, const CompressedArtifact & ca) {
    const auto rec = reconstruct(ca);
    long double s  = 0;
    for (std::size_t g = 0; g < tau.group_count(); ++g) {
        for (std::size_t i = 0; i < tau.groups()[g].values.size(); ++i) {
            const long double d = static_cast<long double>(tau.groups()[g].values[i]) - rec.groups()[g].values[i];
            s += d * d;
        }
    }
    return static_cast<double>(std::sqrt(s));
}

} // namespace

TEST(Sweep, ReconstructionScorerPicksBruteForceBest) {
    std::mt19937_64 rng(71);
    const auto tau    = tvc::testing::random_task_vector(rng, {20000});
    const SweepGrid grid;
    const auto result = run_sweep(tau, grid, reconstruction_scorer(tau));
    ASSERT_EQ(result.rows.size(), 45u);

    double best_err = std::numeric_limits<double>::infinity();
    double best_k = 0, best_a = 0;
    for (double k : grid.k_values) {
        for (double a : grid.alpha_values) {
            const double err = l2_error(tau, compress(tau, k, a));
            if (err < best_err) {
                best_err = err;
                best_k   = k;
                best_a   = a;
            }
        }
    }
    EXPECT_EQ(result.best_row().k_percent, best_k);
    EXPECT_EQ(result.best_row().alpha, best_a);
    EXPECT_EQ(best_k, 50.0);
    EXPECT_EQ(best_a, 1.0);
    EXPECT_NEAR(-result.best_row().score, best_err, 1e-9 * best_err);
}

TEST(Sweep, RowsAreKMajorWithGolombSizes) {
    std::mt19937_64 rng(72);
    const auto tau = tvc::testing::random_task_vector(rng, {1000, 300});
    const SweepGrid grid{{10, 20}, {1, 2, 3}};
    const auto result = run_sweep(tau, grid, [](const CompressedArtifact &) { return 0.0; });
    ASSERT_EQ(result.rows.size(), 6u);
    EXPECT_EQ(result.rows[0].k_percent, 10.0);
    EXPECT_EQ(result.rows[2].alpha, 3.0);
    EXPECT_EQ(result.rows[3].k_percent, 20.0);
    const auto ca = compress(tau, 20, 2.0);
    EXPECT_EQ(result.rows[4].size_bits, measured_size_bits(encode_golomb(ca.tensors)));
}

TEST(Sweep, ConstantScorerTieRule) {
    std::mt19937_64 rng(73);
    const auto tau    = tvc::testing::random_task_vector(rng, {5000});
    const auto result = run_sweep(tau, SweepGrid{}, [](const CompressedArtifact &) { return 1.0; });
    EXPECT_EQ(result.best_row().k_percent, 5.0);
    EXPECT_EQ(result.best_row().alpha, 0.5);
}

TEST(Sweep, SingleCell) {
    const auto tau    = tvc::testing::single_group({1, -2, 3});
    const auto result = run_sweep(tau, SweepGrid{{50}, {2}}, [](const CompressedArtifact &) { return -1.0; });
    ASSERT_EQ(result.rows.size(), 1u);
    EXPECT_EQ(result.best, 0u);
}

TEST(Sweep, FailingCellsAreRecorded) {
    std::mt19937_64 rng(74);
    const auto tau    = tvc::testing::random_task_vector(rng, {100});
    const auto result = run_sweep(tau, SweepGrid{{10}, {1, 2, 3}}, [](const CompressedArtifact & ca) {
        if (ca.alpha == 1) throw std::runtime_error("scorer crashed");
        if (ca.alpha == 3) return std::nan("");
        return 5.0;
    });
    ASSERT_EQ(result.rows.size(), 3u);
    EXPECT_EQ(result.rows[0].score, -std::numeric_limits<double>::infinity());
    EXPECT_NE(result.rows[0].error.find("scorer crashed"), std::string::npos);
    EXPECT_EQ(result.rows[2].score, -std::numeric_limits<double>::infinity());
    EXPECT_FALSE(result.rows[2].error.empty());
    EXPECT_EQ(result.best, 1u);
}

TEST(Sweep, InvalidGrid) {
    const auto tau = tvc::testing::single_group({1});
    const auto s   = [](const CompressedArtifact &) { return 0.0; };
    EXPECT_THROW(run_sweep(tau, SweepGrid{{}, {1}}, s), Error);
    EXPECT_THROW(run_sweep(tau, SweepGrid{{0}, {1}}, s), Error);
    EXPECT_THROW(run_sweep(tau, SweepGrid{{5}, {-1}}, s), Error);
}

TEST(Sweep, RecommendAlpha) {
    EXPECT_EQ(recommend_alpha(13000000000ull, 20), 1.0);
    EXPECT_EQ(recommend_alpha(65000000000ull, 5), 1.0);
    EXPECT_FALSE(recommend_alpha(3000000000ull, 5).has_value());
    EXPECT_FALSE(recommend_alpha(70000000000ull, 50).has_value());
    EXPECT_FALSE(recommend_alpha(12999999999ull, 10).has_value());
}
