// SPDX-License-Identifier: Apache-2.0
//
// Dense task vectors and the TVC1 container they are stored in.
//
// Container layout (all integers little-endian):
//
//   "TVC1\n"
//   u64 manifest_bytes
//   manifest:
//     u32 tensor_count
//     per tensor: u32 name_len, name bytes, u32 rank, rank x u32 shape,
//                 u8 dtype, u64 offset_bytes, u64 length_elems
//   payload: raw little-endian values; offset_bytes is relative to the
//            first payload byte
//
// Values are always held as float in memory regardless of storage dtype.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tvc {

enum class Dtype : std::uint8_t { f32 = 0, f16 = 1, bf16 = 2 };

std::string_view to_string(Dtype dtype) noexcept;
std::optional<Dtype> parse_dtype(std::string_view name) noexcept;
std::size_t dtype_size(Dtype dtype) noexcept;

struct TensorMeta {
    std::string name;
    std::vector<std::uint64_t> shape;
    Dtype dtype = Dtype::f32;
    std::uint64_t offset_bytes = 0;
    std::uint64_t length_elems = 0;
};

/// Number of elements implied by a shape; the empty shape is a scalar.
std::uint64_t shape_elems(std::span<const std::uint64_t> shape) noexcept;

struct ParamGroup {
    std::string name;
    std::vector<std::uint64_t> shape;
    std::vector<float> values;

    bool operator==(const ParamGroup &) const = default;
};

/// An ordered, immutable collection of named dense parameter groups.
///
/// Construction validates that names are unique, every group is non-empty
/// and its element count matches its shape. Group order is preserved.
class TaskVector {
public:
    explicit TaskVector(std::vector<ParamGroup> groups);

    const std::vector<ParamGroup> & groups() const noexcept { return groups_; }
    std::size_t group_count() const noexcept { return groups_.size(); }
    std::uint64_t dim() const noexcept { return dim_; }

    const ParamGroup * find(std::string_view name) const noexcept;

    std::vector<ParamGroup> release() && { return std::move(groups_); }

    bool operator==(const TaskVector &) const = default;

private:
    std::vector<ParamGroup> groups_;
    std::uint64_t dim_ = 0;
};

/// Throws NameMismatch when the group names or their order differ, and
/// ShapeMismatch when a same-named group has a different shape.
void check_same_layout(const TaskVector & a, const TaskVector & b);

/// Same check, but only element counts are compared (flat views).
void check_same_lengths(const TaskVector & a, const TaskVector & b);

std::vector<std::uint8_t> encode_container(const TaskVector & tv, Dtype dtype);
TaskVector decode_container(std::span<const std::uint8_t> bytes);
std::vector<TensorMeta> decode_manifest(std::span<const std::uint8_t> bytes);

void save_container(const TaskVector & tv, Dtype dtype, const std::filesystem::path & path);
TaskVector load_container(const std::filesystem::path & path);
std::vector<TensorMeta> read_manifest(const std::filesystem::path & path);

/// Exact file size save_container would produce.
std::uint64_t container_size_bytes(const TaskVector & tv, Dtype dtype) noexcept;

/// 64-bit FNV-1a over group names, shapes and f32 little-endian values.
std::uint64_t fingerprint(const TaskVector & tv) noexcept;

std::vector<std::uint8_t> read_file(const std::filesystem::path & path);
void write_file(const std::filesystem::path & path, std::span<const std::uint8_t> bytes);

} // namespace tvc
