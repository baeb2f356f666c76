// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <string_view>

#include "tvc/compress.hpp"
#include "tvc/tensor_store.hpp"

namespace tvc {

enum class MergeMethod { average, task_arithmetic, ties };

std::string_view to_string(MergeMethod method) noexcept;
std::optional<MergeMethod> parse_merge_method(std::string_view name) noexcept;

struct MergeSpec {
    MergeMethod method  = MergeMethod::task_arithmetic;
    double lambda       = 1.0;
    double trim_density = 100.0;  // percent, ties only
};

void validate(const MergeSpec & spec);

// All merges accumulate in double, in input order, and round to float once.

TaskVector merge_average(std::span<const TaskVector> taus);

/// lambda * sum(taus)
TaskVector merge_task_arithmetic(std::span<const TaskVector> taus, double lambda);

/// TIES merging:
///  1. trim each input to its top trim_density% magnitudes per group (values kept),
///  2. elect a sign per coordinate from the sum of the trimmed values,
///  3. average the trimmed values agreeing with the elected sign,
/// then scale by lambda. A coordinate whose trimmed sum is exactly 0 merges to 0.
TaskVector merge_ties(std::span<const TaskVector> taus, double lambda, double trim_density);

TaskVector merge(std::span<const TaskVector> taus, const MergeSpec & spec);

/// Same result as merge() on the dense reconstructions. Average and task
/// arithmetic run on the bitmask kernels without densifying each input.
TaskVector merge_compressed(std::span<const CompressedArtifact> artifacts, const MergeSpec & spec);

} // namespace tvc
