// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tvc/compress.hpp"
#include "tvc/tensor_store.hpp"

namespace tvc {

struct SweepGrid {
    std::vector<double> k_values{5, 10, 20, 30, 50};  // percent
    std::vector<double> alpha_values{0.5, 1, 2, 3, 4, 5, 6, 8, 10};
};

void validate(const SweepGrid & grid);

struct SweepRow {
    double k_percent = 0.0;
    double alpha     = 0.0;
    double score     = 0.0;  // -inf when the scorer failed
    std::uint64_t size_bits = 0;  // golomb payload bits
    std::string error;
};

struct SweepResult {
    std::vector<SweepRow> rows;  // k-major, grid order
    std::size_t best = 0;        // index into rows

    const SweepRow & best_row() const { return rows.at(best); }
};

/// Higher is better. Exceptions thrown by the scorer mark only that cell.
using Scorer = std::function<double(const CompressedArtifact &)>;

/// Evaluates every (k, alpha) cell. The best cell has the highest score;
/// ties go to the smaller golomb size, then the smaller alpha.
SweepResult run_sweep(const TaskVector & tau, const SweepGrid & grid, const Scorer & scorer,
                      SigmaMode sigma_mode = SigmaMode::per_group);

/// Returns 1.0 for models of at least 13B parameters compressed at k <= 20%,
/// where a fixed alpha works; std::nullopt means a sweep is required.
std::optional<double> recommend_alpha(std::uint64_t model_params, double k_percent);

/// Negative Euclidean distance between tau and the artifact's reconstruction.
Scorer reconstruction_scorer(const TaskVector & tau);

} // namespace tvc
