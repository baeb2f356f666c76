// SPDX-License-Identifier: Apache-2.0
//
// Wire formats for ternary tensors.
//
// Blob layout (integers little-endian):
//
//   "CPT1", u8 version (=1), u8 format (0 = golomb, 1 = bitmask), u32 count
//   per tensor: u32 name_len, name, u64 dim, u64 nonzeros, f32 scale,
//               [u8 rice_b]  -- golomb only
//   payloads, one per tensor in header order, each padded with zero bits to
//   a byte boundary; bits are packed MSB-first.
//
// Golomb payload: for every nonzero in index order, the run of zeros before it
// (gap) is Rice-coded with parameter b: floor(gap / 2^b) one-bits, a zero-bit,
// then the low b bits of gap MSB-first; then one sign bit (1 = +1, 0 = -1).
//
// Bitmask payload: the positive mask (dim bits), padded, then the negative
// mask (dim bits), padded. Bit i of a mask is bit (7 - i % 8) of byte i / 8.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tvc/compress.hpp"

namespace tvc {

enum class BlobFormat : std::uint8_t { golomb = 0, bitmask = 1 };

std::string_view to_string(BlobFormat format) noexcept;

/// Entropy in bits of a ternary vector of length d at density k, plus the
/// 16 bits charged for the shared scale: -((1-k)log2(1-k) + k log2(k/2)) d + 16.
double entropy_bits(double k, std::uint64_t d);

/// The per-parameter part of entropy_bits.
double entropy_bits_per_param(double k);

struct GolombParams {
    double p = 0.0;
    unsigned b_star = 1;
    double avg_bits_per_pos = 0.0;  // expected position bits per nonzero, sign excluded
};

/// Rice parameter minimizing the expected code length for geometric gaps at
/// nonzero probability p: b* = 1 + floor(log2(log(phi - 1) / log(1 - p))),
/// clamped to at least 1.
GolombParams golomb_params(double p);

/// The b used for a tensor with `nonzeros` of `dim` entries set.
unsigned rice_parameter(std::uint64_t nonzeros, std::uint64_t dim);

struct EncodedBlob {
    BlobFormat format = BlobFormat::golomb;
    std::vector<std::uint8_t> bytes;
};

EncodedBlob encode_golomb(std::span<const TernaryTensor> tensors);
EncodedBlob encode_bitmask(std::span<const TernaryTensor> tensors);
EncodedBlob encode(std::span<const TernaryTensor> tensors, BlobFormat format);

inline EncodedBlob encode_golomb(const TernaryTensor & t) { return encode_golomb(std::span(&t, 1)); }
inline EncodedBlob encode_bitmask(const TernaryTensor & t) { return encode_bitmask(std::span(&t, 1)); }

/// Wraps raw bytes, checking magic, version and format (HeaderMismatch).
EncodedBlob parse_blob(std::vector<std::uint8_t> bytes);

std::vector<TernaryTensor> decode_golomb(const EncodedBlob & blob);
std::vector<TernaryTensor> decode_bitmask(const EncodedBlob & blob);
std::vector<TernaryTensor> decode(const EncodedBlob & blob);

/// Payload bits before byte padding, header framing excluded.
std::uint64_t measured_size_bits(const EncodedBlob & blob);

/// Payload bits plus 16 per tensor for its scale; for the bitmask format this
/// is 2*d + 16 per tensor.
std::uint64_t accounted_size_bits(const EncodedBlob & blob);

struct BlobSummary {
    BlobFormat format = BlobFormat::golomb;
    std::uint64_t tensors   = 0;
    std::uint64_t dim       = 0;
    std::uint64_t nonzeros  = 0;
    std::uint64_t payload_bits = 0;
};

BlobSummary summarize(const EncodedBlob & blob);

} // namespace tvc
