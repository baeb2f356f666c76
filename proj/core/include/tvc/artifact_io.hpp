// SPDX-License-Identifier: Apache-2.0
//
// On-disk form of a CompressedArtifact: the compression metadata and tensor
// shapes, followed by a golomb-coded CPT1 blob.
//
//   "CPA1", u8 version (=1), f64 k_percent, f64 alpha, u64 source_fingerprint,
//   u32 tensor_count, per tensor: u32 rank, rank x u64 shape
//   CPT1 golomb blob (rest of file)
#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "tvc/codec.hpp"
#include "tvc/compress.hpp"
#include "tvc/tensor_store.hpp"

namespace tvc {

std::vector<std::uint8_t> encode_artifact(const CompressedArtifact & ca);
CompressedArtifact decode_artifact(std::span<const std::uint8_t> bytes);

void save_artifact(const CompressedArtifact & ca, const std::filesystem::path & path);
CompressedArtifact load_artifact(const std::filesystem::path & path);

/// Wraps bare tensors (e.g. from a decoded blob) in an artifact. k_percent is
/// the smallest density consistent with every tensor, alpha is 0 (unknown),
/// and the fingerprint is 0.
CompressedArtifact artifact_from_tensors(std::vector<TernaryTensor> tensors);

enum class FileKind { container, artifact, blob, unknown };

FileKind sniff(std::span<const std::uint8_t> bytes) noexcept;

/// Loads a CPA1 artifact or a CPT1 blob of either format.
CompressedArtifact load_compressed(const std::filesystem::path & path);

/// Decodes a TVC1 container as-is, or densely reconstructs a CPA1/CPT1 file.
TaskVector decode_dense(std::vector<std::uint8_t> bytes);
TaskVector load_dense(const std::filesystem::path & path);

} // namespace tvc
