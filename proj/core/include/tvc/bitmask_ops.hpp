// SPDX-License-Identifier: Apache-2.0
//
// Kernels on the dual-bitmask form of a ternary tensor. Masks are stored as
// 64-bit words; bit (i % 64) of word (i / 64) is index i, and bits past dim
// are zero. Every kernel works on whole words with AND/XOR and popcount.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tvc/compress.hpp"

namespace tvc {

class BitmaskPair {
public:
    /// Validates word counts, zero tail bits and disjointness (MaskOverlap).
    BitmaskPair(std::uint64_t dim, std::vector<std::uint64_t> pos, std::vector<std::uint64_t> neg, float scale);

    static BitmaskPair from_tensor(const TernaryTensor & t);

    std::uint64_t dim() const noexcept { return dim_; }
    float scale() const noexcept { return scale_; }
    const std::vector<std::uint64_t> & pos() const noexcept { return pos_; }
    const std::vector<std::uint64_t> & neg() const noexcept { return neg_; }

    std::uint64_t nonzeros() const noexcept;
    int sign_at(std::uint64_t i) const noexcept;

    /// Swaps the masks, i.e. the reconstruction of -v.
    BitmaskPair negated() const;

    TernaryTensor to_tensor(std::string name) const;
    std::vector<float> to_dense() const;

private:
    std::uint64_t dim_;
    std::vector<std::uint64_t> pos_;
    std::vector<std::uint64_t> neg_;
    float scale_;
};

constexpr std::size_t words_for(std::uint64_t dim) noexcept {
    return static_cast<std::size_t>((dim + 63) / 64);
}

/// Dense dot product of the two reconstructions:
/// sa * sb * (|pp| + |nn| - |pn| - |np|) with |.| the popcount of the AND.
double dot(const BitmaskPair & a, const BitmaskPair & b);

/// Hamming distance over both masks; a +1 vs -1 disagreement counts 2.
std::uint64_t sign_distance(const BitmaskPair & a, const BitmaskPair & b);

/// Euclidean distance between the two reconstructions.
double scaled_l2_distance(const BitmaskPair & a, const BitmaskPair & b);

/// Sum of the reconstructions. All inputs must share dim.
std::vector<float> accumulate(std::span<const BitmaskPair> items);

/// Adds sum of scale_i * (pos_i - neg_i) into `out`, in input order.
void accumulate_into(std::span<const BitmaskPair> items, std::span<double> out);

} // namespace tvc
