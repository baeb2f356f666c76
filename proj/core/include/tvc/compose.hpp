// SPDX-License-Identifier: Apache-2.0
//
// Weighted composition of low-rank adapter modules: every layer of the
// composed module is A_m = sum_i w_i A_i and B_m = sum_i w_i B_i, so the
// effective update B_m A_m is quadratic in the weights.
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tvc/compress.hpp"
#include "tvc/tensor_store.hpp"

namespace tvc {

struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> data;  // row-major

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0f) {}

    float & operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    float operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    bool operator==(const Matrix &) const = default;
};

/// Row-major product, accumulated in double.
Matrix matmul(const Matrix & lhs, const Matrix & rhs);

/// One adapted layer: `a` is rank x in, `b` is out x rank.
struct LowRankLayer {
    std::string name;
    Matrix a;
    Matrix b;

    /// The dense update b * a (out x in).
    Matrix effective_update() const { return matmul(b, a); }

    bool operator==(const LowRankLayer &) const = default;
};

struct LowRankModule {
    std::vector<LowRankLayer> layers;

    std::size_t rank() const noexcept { return layers.empty() ? 0 : layers.front().a.rows; }

    bool operator==(const LowRankModule &) const = default;
};

/// Group naming convention: "<layer>.lora_A" with shape [rank, in] and
/// "<layer>.lora_B" with shape [out, rank]. Layers keep first-seen order.
LowRankModule low_rank_from_task_vector(const TaskVector & tv);
TaskVector to_task_vector(const LowRankModule & module);

struct ComposeWeights {
    std::vector<double> w;
    double lo = -1.5;
    double hi = 1.5;

    /// Projects every weight into [lo, hi].
    void clamp();
};

LowRankModule compose_modules(std::span<const LowRankModule> modules, const ComposeWeights & weights);

/// compose_modules on the dense reconstructions of the artifacts.
LowRankModule compose_compressed(std::span<const CompressedArtifact> artifacts, const ComposeWeights & weights);

using LossFn = std::function<double(std::span<const double>)>;

struct OptimizeOptions {
    std::size_t budget = 200;   // loss evaluations
    std::uint64_t seed = 0;
    double lo = -1.5;
    double hi = 1.5;
    double initial_step = 0.5;  // simplex edge length around the start point
};

struct OptimizeResult {
    ComposeWeights weights;
    double loss = 0.0;
    std::size_t evaluations = 0;
    std::size_t restarts = 0;
};

/// Derivative-free minimization of `loss` over [lo, hi]^n starting at w = 0.
///
/// Bounded Nelder-Mead: trial points are clamped into the box, and a
/// collapsed simplex restarts around the best point with seeded random
/// orientation. Returns the best point seen; a later point must be strictly
/// better to replace it, so a flat loss returns the start point.
OptimizeResult optimize_weights(std::size_t n, const LossFn & loss, const OptimizeOptions & options);

OptimizeResult optimize_weights(std::span<const LowRankModule> modules, const LossFn & loss,
                                const OptimizeOptions & options);

} // namespace tvc
