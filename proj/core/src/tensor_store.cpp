// SPDX-License-Identifier: Apache-2.0
#include "tvc/tensor_store.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <unordered_set>

#include "byte_io.hpp"
#include "tvc/error.hpp"
#include "tvc/half.hpp"

namespace tvc {

namespace {

constexpr std::string_view kMagic = "TVC1\n";
constexpr std::size_t kChunkElems = 1 << 18;

using Sink = std::function<void(std::span<const std::uint8_t>)>;

std::vector<std::uint8_t> build_header(const TaskVector & tv, Dtype dtype) {
    std::vector<std::uint8_t> manifest;
    detail::ByteWriter m(manifest);
    m.u32(static_cast<std::uint32_t>(tv.group_count()));
    std::uint64_t offset = 0;
    for (const auto & g : tv.groups()) {
        m.str(g.name);
        m.u32(static_cast<std::uint32_t>(g.shape.size()));
        for (auto s : g.shape) {
            if (s > std::numeric_limits<std::uint32_t>::max()) {
                raise(Errc::InvalidArgument, "shape entry of '" + g.name + "' does not fit in u32");
            }
            m.u32(static_cast<std::uint32_t>(s));
        }
        m.u8(static_cast<std::uint8_t>(dtype));
        m.u64(offset);
        m.u64(g.values.size());
        offset += g.values.size() * dtype_size(dtype);
    }

    std::vector<std::uint8_t> header;
    detail::ByteWriter h(header);
    h.bytes(kMagic);
    h.u64(manifest.size());
    h.bytes(manifest);
    return header;
}

void write_values(std::span<const float> values, Dtype dtype, const Sink & sink) {
    std::vector<std::uint8_t> buf;
    buf.reserve(std::min(values.size(), kChunkElems) * dtype_size(dtype));
    for (std::size_t start = 0; start < values.size(); start += kChunkElems) {
        const std::size_t end = std::min(values.size(), start + kChunkElems);
        buf.clear();
        for (std::size_t i = start; i < end; ++i) {
            std::uint32_t bits = 0;
            int width          = 4;
            switch (dtype) {
                case Dtype::f32:  bits = std::bit_cast<std::uint32_t>(values[i]); break;
                case Dtype::f16:  bits = float_to_f16(values[i]); width = 2; break;
                case Dtype::bf16: bits = float_to_bf16(values[i]); width = 2; break;
            }
            for (int b = 0; b < width; ++b) {
                buf.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
            }
        }
        sink(buf);
    }
}

void check_storable(const TaskVector & tv, Dtype dtype) {
    if (dtype == Dtype::f32) {
        return;
    }
    for (const auto & g : tv.groups()) {
        for (float v : g.values) {
            const float back = dtype == Dtype::f16 ? f16_to_float(float_to_f16(v)) : bf16_to_float(float_to_bf16(v));
            if (!std::isfinite(back)) {
                raise(Errc::PayloadNonFinite,
                      "group '" + g.name + "' overflows " + std::string(to_string(dtype)));
            }
        }
    }
}

void write_container(const TaskVector & tv, Dtype dtype, const Sink & sink) {
    check_storable(tv, dtype);
    sink(build_header(tv, dtype));
    for (const auto & g : tv.groups()) {
        write_values(g.values, dtype, sink);
    }
}

struct ParsedHeader {
    std::vector<TensorMeta> metas;
    std::size_t payload_start = 0;
};

ParsedHeader parse_header(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kMagic.size() ||
        std::string_view(reinterpret_cast<const char *>(bytes.data()), kMagic.size()) != kMagic) {
        raise(Errc::ManifestCorrupt, "missing TVC1 magic");
    }
    detail::ByteReader outer(bytes.subspan(kMagic.size()), Errc::ManifestCorrupt);
    const std::uint64_t manifest_bytes = outer.u64();
    if (manifest_bytes > outer.remaining()) {
        raise(Errc::ManifestCorrupt, "manifest length exceeds file size");
    }
    detail::ByteReader r(outer.take(static_cast<std::size_t>(manifest_bytes)), Errc::ManifestCorrupt);

    ParsedHeader out;
    out.payload_start = kMagic.size() + 8 + static_cast<std::size_t>(manifest_bytes);

    const std::uint32_t count = r.u32();
    if (count == 0) {
        raise(Errc::ManifestCorrupt, "manifest lists no tensors");
    }
    std::unordered_set<std::string> seen;
    std::uint64_t prev_end = 0;
    for (std::uint32_t i = 0; i < count; ++i) {
        TensorMeta meta;
        meta.name = r.str();
        const std::uint32_t rank = r.u32();
        if (rank > r.remaining() / 4) {
            raise(Errc::ManifestCorrupt, "rank of '" + meta.name + "' overruns manifest");
        }
        meta.shape.resize(rank);
        for (auto & s : meta.shape) {
            s = r.u32();
        }
        const std::uint8_t dtype = r.u8();
        if (dtype > static_cast<std::uint8_t>(Dtype::bf16)) {
            raise(Errc::DtypeUnsupported, "dtype byte " + std::to_string(dtype) + " for '" + meta.name + "'");
        }
        meta.dtype        = static_cast<Dtype>(dtype);
        meta.offset_bytes = r.u64();
        meta.length_elems = r.u64();

        if (!seen.insert(meta.name).second) {
            raise(Errc::ManifestCorrupt, "duplicate tensor name '" + meta.name + "'");
        }
        if (meta.length_elems != shape_elems(meta.shape)) {
            raise(Errc::ManifestCorrupt, "length of '" + meta.name + "' disagrees with its shape");
        }
        if (meta.offset_bytes < prev_end) {
            raise(Errc::ManifestCorrupt, "tensor '" + meta.name + "' overlaps its predecessor");
        }
        if (meta.length_elems > std::numeric_limits<std::uint64_t>::max() / 4) {
            raise(Errc::ManifestCorrupt, "length of '" + meta.name + "' overflows");
        }
        prev_end = meta.offset_bytes + meta.length_elems * dtype_size(meta.dtype);
        if (prev_end < meta.offset_bytes) {
            raise(Errc::ManifestCorrupt, "offset of '" + meta.name + "' overflows");
        }
        out.metas.push_back(std::move(meta));
    }
    if (r.remaining() != 0) {
        raise(Errc::ManifestCorrupt, "trailing bytes inside manifest");
    }
    return out;
}

} // namespace

std::string_view to_string(Dtype dtype) noexcept {
    switch (dtype) {
        case Dtype::f32:  return "f32";
        case Dtype::f16:  return "f16";
        case Dtype::bf16: return "bf16";
    }
    return "?";
}

std::optional<Dtype> parse_dtype(std::string_view name) noexcept {
    if (name == "f32") return Dtype::f32;
    if (name == "f16") return Dtype::f16;
    if (name == "bf16") return Dtype::bf16;
    return std::nullopt;
}

std::size_t dtype_size(Dtype dtype) noexcept {
    return dtype == Dtype::f32 ? 4 : 2;
}

std::uint64_t shape_elems(std::span<const std::uint64_t> shape) noexcept {
    std::uint64_t n = 1;
    for (auto s : shape) {
        n *= s;
    }
    return n;
}

TaskVector::TaskVector(std::vector<ParamGroup> groups) : groups_(std::move(groups)) {
    if (groups_.empty()) {
        raise(Errc::EmptyVector, "task vector has no groups");
    }
    std::unordered_set<std::string_view> names;
    for (const auto & g : groups_) {
        if (!names.insert(g.name).second) {
            raise(Errc::InvalidArgument, "duplicate group name '" + g.name + "'");
        }
        if (g.values.empty()) {
            raise(Errc::EmptyVector, "group '" + g.name + "' is empty");
        }
        if (shape_elems(g.shape) != g.values.size()) {
            raise(Errc::ShapeMismatch, "group '" + g.name + "' has " + std::to_string(g.values.size()) +
                                           " values but shape implies " + std::to_string(shape_elems(g.shape)));
        }
        dim_ += g.values.size();
    }
}

const ParamGroup * TaskVector::find(std::string_view name) const noexcept {
    for (const auto & g : groups_) {
        if (g.name == name) {
            return &g;
        }
    }
    return nullptr;
}

void check_same_layout(const TaskVector & a, const TaskVector & b) {
    check_same_lengths(a, b);
    for (std::size_t i = 0; i < a.group_count(); ++i) {
        if (a.groups()[i].shape != b.groups()[i].shape) {
            raise(Errc::ShapeMismatch, "group '" + a.groups()[i].name + "' has different shapes");
        }
    }
}

void check_same_lengths(const TaskVector & a, const TaskVector & b) {
    if (a.group_count() != b.group_count()) {
        raise(Errc::NameMismatch, "group counts differ (" + std::to_string(a.group_count()) + " vs " +
                                      std::to_string(b.group_count()) + ")");
    }
    for (std::size_t i = 0; i < a.group_count(); ++i) {
        const auto & ga = a.groups()[i];
        const auto & gb = b.groups()[i];
        if (ga.name != gb.name) {
            raise(Errc::NameMismatch, "group " + std::to_string(i) + " is '" + ga.name + "' vs '" + gb.name + "'");
        }
        if (ga.values.size() != gb.values.size()) {
            raise(Errc::ShapeMismatch, "group '" + ga.name + "' has different lengths");
        }
    }
}

std::vector<std::uint8_t> encode_container(const TaskVector & tv, Dtype dtype) {
    std::vector<std::uint8_t> out;
    out.reserve(static_cast<std::size_t>(container_size_bytes(tv, dtype)));
    write_container(tv, dtype, [&](std::span<const std::uint8_t> s) { out.insert(out.end(), s.begin(), s.end()); });
    return out;
}

std::vector<TensorMeta> decode_manifest(std::span<const std::uint8_t> bytes) {
    return parse_header(bytes).metas;
}

TaskVector decode_container(std::span<const std::uint8_t> bytes) {
    auto header  = parse_header(bytes);
    auto payload = bytes.subspan(header.payload_start);

    const auto & last        = header.metas.back();
    const std::uint64_t need = last.offset_bytes + last.length_elems * dtype_size(last.dtype);
    if (payload.size() < need) {
        raise(Errc::PayloadTruncated,
              "payload has " + std::to_string(payload.size()) + " bytes, manifest needs " + std::to_string(need));
    }
    if (payload.size() > need) {
        raise(Errc::ManifestCorrupt, "payload has trailing bytes beyond the manifest");
    }

    std::vector<ParamGroup> groups;
    groups.reserve(header.metas.size());
    for (auto & meta : header.metas) {
        ParamGroup g{std::move(meta.name), std::move(meta.shape), {}};
        g.values.resize(static_cast<std::size_t>(meta.length_elems));
        const std::uint8_t * p = payload.data() + meta.offset_bytes;
        for (std::size_t i = 0; i < g.values.size(); ++i) {
            float v;
            switch (meta.dtype) {
                case Dtype::f32: {
                    const std::uint32_t bits = std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 |
                                               std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
                    v = std::bit_cast<float>(bits);
                    p += 4;
                    break;
                }
                case Dtype::f16:
                    v = f16_to_float(static_cast<std::uint16_t>(p[0] | p[1] << 8));
                    p += 2;
                    break;
                case Dtype::bf16:
                default:
                    v = bf16_to_float(static_cast<std::uint16_t>(p[0] | p[1] << 8));
                    p += 2;
                    break;
            }
            if (!std::isfinite(v)) {
                raise(Errc::PayloadNonFinite, "non-finite value in '" + g.name + "' at element " + std::to_string(i));
            }
            g.values[i] = v;
        }
        groups.push_back(std::move(g));
    }
    return TaskVector(std::move(groups));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path & path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) {
        raise(Errc::IoFailure, "cannot open '" + path.string() + "'");
    }
    const auto size = static_cast<std::size_t>(in.tellg());
    std::vector<std::uint8_t> bytes(size);
    in.seekg(0);
    if (size > 0 && !in.read(reinterpret_cast<char *>(bytes.data()), static_cast<std::streamsize>(size))) {
        raise(Errc::IoFailure, "short read on '" + path.string() + "'");
    }
    return bytes;
}

void write_file(const std::filesystem::path & path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()))) {
        raise(Errc::IoFailure, "cannot write '" + path.string() + "'");
    }
}

void save_container(const TaskVector & tv, Dtype dtype, const std::filesystem::path & path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        raise(Errc::IoFailure, "cannot open '" + path.string() + "' for writing");
    }
    write_container(tv, dtype, [&](std::span<const std::uint8_t> s) {
        if (!out.write(reinterpret_cast<const char *>(s.data()), static_cast<std::streamsize>(s.size()))) {
            raise(Errc::IoFailure, "write failed on '" + path.string() + "'");
        }
    });
    out.close();
    if (!out) {
        raise(Errc::IoFailure, "close failed on '" + path.string() + "'");
    }
}

TaskVector load_container(const std::filesystem::path & path) {
    return decode_container(read_file(path));
}

std::vector<TensorMeta> read_manifest(const std::filesystem::path & path) {
    return decode_manifest(read_file(path));
}

std::uint64_t container_size_bytes(const TaskVector & tv, Dtype dtype) noexcept {
    std::uint64_t n = kMagic.size() + 8 + 4;
    for (const auto & g : tv.groups()) {
        n += 4 + g.name.size() + 4 + 4 * g.shape.size() + 1 + 8 + 8;
        n += g.values.size() * dtype_size(dtype);
    }
    return n;
}

std::uint64_t fingerprint(const TaskVector & tv) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix        = [&h](std::uint64_t v, int bytes) {
        for (int i = 0; i < bytes; ++i) {
            h ^= (v >> (8 * i)) & 0xffu;
            h *= 0x100000001b3ull;
        }
    };
    for (const auto & g : tv.groups()) {
        mix(g.name.size(), 4);
        for (unsigned char c : g.name) {
            mix(c, 1);
        }
        mix(g.shape.size(), 4);
        for (auto s : g.shape) {
            mix(s, 8);
        }
        for (float v : g.values) {
            mix(std::bit_cast<std::uint32_t>(v), 4);
        }
    }
    return h;
}

} // namespace tvc
