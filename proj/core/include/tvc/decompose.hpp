// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tvc/tensor_store.hpp"

namespace tvc {

/// Per-group sign and magnitude split of a task vector: tau = sign * magnitude.
struct SignMagnitude {
    struct Group {
        std::string name;
        std::vector<std::int8_t> signs;  // -1, 0, +1
        std::vector<float> magnitudes;   // >= 0
    };
    std::vector<Group> groups;
};

struct VectorStats {
    std::string name;  // group name, or "<pooled>"
    std::uint64_t count = 0;
    double mean = 0.0;
    double std  = 0.0;  // population standard deviation
    double max  = 0.0;
    double min  = 0.0;
};

struct StatsReport {
    std::vector<VectorStats> groups;
    VectorStats pooled;
};

/// theta_ft - theta_init, group by group. Layouts must match exactly.
TaskVector task_vector(const TaskVector & theta_ft, const TaskVector & theta_init);

/// sgn(0) and sgn(-0.0) are both 0.
std::int8_t sign_of(float v) noexcept;

SignMagnitude sign_magnitude(const TaskVector & tau);

VectorStats compute_stats(std::span<const float> values, std::string name = {});
StatsReport stats(const TaskVector & tau);

} // namespace tvc
