// SPDX-License-Identifier: Apache-2.0
//
// Sparse ternary compression of task vectors.
//
// Each parameter group keeps the signs of its top-k% largest-magnitude
// entries; every kept entry is reconstructed as +/- alpha * sigma, where sigma
// is the population standard deviation of the original dense group.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tvc/decompose.hpp"
#include "tvc/tensor_store.hpp"

namespace tvc {

struct TernaryTensor {
    std::string name;
    std::uint64_t dim = 0;
    std::vector<std::uint64_t> indices;  // strictly increasing, < dim
    std::vector<std::int8_t> signs;      // +1 / -1, parallel to indices
    float scale = 0.0f;
    std::vector<std::uint64_t> shape;    // product equals dim

    std::uint64_t nonzeros() const noexcept { return indices.size(); }
    double density() const noexcept { return dim == 0 ? 0.0 : static_cast<double>(indices.size()) / dim; }

    bool operator==(const TernaryTensor &) const = default;
};

/// Throws InvalidArgument describing the first violated invariant.
void validate(const TernaryTensor & t);

/// Kept sign structure of one group before a scale is attached.
struct SparseSigns {
    std::string name;
    std::uint64_t dim = 0;
    std::vector<std::uint64_t> indices;
    std::vector<std::int8_t> signs;
};

enum class SigmaMode { per_group, pooled };

struct CompressedArtifact {
    std::vector<TernaryTensor> tensors;
    double k_percent = 100.0;
    double alpha     = 1.0;
    std::uint64_t source_fingerprint = 0;  // 0 when unknown

    std::uint64_t dim() const noexcept;
    std::uint64_t nonzeros() const noexcept;

    bool operator==(const CompressedArtifact &) const = default;
};

void validate(const CompressedArtifact & ca);

/// max(1, round-half-up(n * k / 100)), clamped to n.
std::uint64_t keep_count(std::uint64_t n, double k_percent);

/// Ascending indices of the keep_count(n, k) largest magnitudes.
///
/// Zero magnitudes are never selected, so fewer indices come back when the
/// group has fewer nonzeros than the budget. Among equal magnitudes at the
/// cut-off the lower index wins. Runs in expected O(n).
std::vector<std::uint64_t> topk_support(std::span<const float> magnitudes, double k_percent);

std::vector<SparseSigns> sparsify_topk(const SignMagnitude & sm, double k_percent);

/// Attaches scale = alpha * sigma[i] to group i.
std::vector<TernaryTensor> quantize(std::span<const SparseSigns> sparse, std::span<const double> sigma, double alpha);

CompressedArtifact compress(const TaskVector & tau, double k_percent, double alpha,
                            SigmaMode sigma_mode = SigmaMode::per_group);

std::vector<float> reconstruct_dense(const TernaryTensor & t);
TaskVector reconstruct(const CompressedArtifact & ca);

/// theta_init + reconstruct(ca), matched by group name and element count.
TaskVector apply(const TaskVector & theta_init, const CompressedArtifact & ca);

} // namespace tvc
