// SPDX-License-Identifier: Apache-2.0
#include "tvc/artifact_io.hpp"

#include <algorithm>
#include <string_view>

#include "byte_io.hpp"
#include "tvc/error.hpp"

namespace tvc {

namespace {

constexpr std::string_view kMagic = "CPA1";
constexpr std::uint8_t kVersion   = 1;

bool starts_with(std::span<const std::uint8_t> bytes, std::string_view magic) noexcept {
    return bytes.size() >= magic.size() &&
           std::equal(magic.begin(), magic.end(), bytes.begin(),
                      [](char a, std::uint8_t b) { return static_cast<std::uint8_t>(a) == b; });
}

} // namespace

std::vector<std::uint8_t> encode_artifact(const CompressedArtifact & ca) {
    validate(ca);
    std::vector<std::uint8_t> out;
    detail::ByteWriter w(out);
    w.bytes(kMagic);
    w.u8(kVersion);
    w.f64(ca.k_percent);
    w.f64(ca.alpha);
    w.u64(ca.source_fingerprint);
    w.u32(static_cast<std::uint32_t>(ca.tensors.size()));
    for (const auto & t : ca.tensors) {
        w.u32(static_cast<std::uint32_t>(t.shape.size()));
        for (auto s : t.shape) {
            w.u64(s);
        }
    }
    const auto blob = encode_golomb(ca.tensors);
    w.bytes(blob.bytes);
    return out;
}

CompressedArtifact decode_artifact(std::span<const std::uint8_t> bytes) {
    if (!starts_with(bytes, kMagic)) {
        raise(Errc::HeaderMismatch, "missing CPA1 magic");
    }
    detail::ByteReader r(bytes.subspan(kMagic.size()), Errc::HeaderMismatch);
    if (const auto v = r.u8(); v != kVersion) {
        raise(Errc::HeaderMismatch, "unsupported artifact version " + std::to_string(v));
    }
    CompressedArtifact ca;
    ca.k_percent          = r.f64();
    ca.alpha              = r.f64();
    ca.source_fingerprint = r.u64();
    const auto count      = r.u32();
    std::vector<std::vector<std::uint64_t>> shapes;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto rank = r.u32();
        if (rank > r.remaining() / 8) {
            raise(Errc::HeaderMismatch, "shape rank overruns the artifact header");
        }
        std::vector<std::uint64_t> shape(rank);
        for (auto & s : shape) {
            s = r.u64();
        }
        shapes.push_back(std::move(shape));
    }
    auto rest = r.take(r.remaining());
    ca.tensors = decode_golomb(parse_blob(std::vector<std::uint8_t>(rest.begin(), rest.end())));
    if (ca.tensors.size() != shapes.size()) {
        raise(Errc::HeaderMismatch, "artifact shape table disagrees with its blob");
    }
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        if (shape_elems(shapes[i]) != ca.tensors[i].dim) {
            raise(Errc::HeaderMismatch, "shape of '" + ca.tensors[i].name + "' disagrees with its dim");
        }
        ca.tensors[i].shape = std::move(shapes[i]);
    }
    validate(ca);
    return ca;
}

void save_artifact(const CompressedArtifact & ca, const std::filesystem::path & path) {
    write_file(path, encode_artifact(ca));
}

CompressedArtifact load_artifact(const std::filesystem::path & path) {
    return decode_artifact(read_file(path));
}

CompressedArtifact artifact_from_tensors(std::vector<TernaryTensor> tensors) {
    CompressedArtifact ca;
    ca.alpha       = 0.0;
    double k       = 0.0;
    for (const auto & t : tensors) {
        validate(t);
        k = std::max(k, 100.0 * static_cast<double>(t.nonzeros()) / static_cast<double>(t.dim));
    }
    ca.k_percent = k > 0.0 ? std::min(k, 100.0) : 100.0;
    ca.tensors   = std::move(tensors);
    return ca;
}

FileKind sniff(std::span<const std::uint8_t> bytes) noexcept {
    if (starts_with(bytes, "TVC1\n")) return FileKind::container;
    if (starts_with(bytes, "CPA1")) return FileKind::artifact;
    if (starts_with(bytes, "CPT1")) return FileKind::blob;
    return FileKind::unknown;
}

CompressedArtifact load_compressed(const std::filesystem::path & path) {
    auto bytes = read_file(path);
    switch (sniff(bytes)) {
        case FileKind::artifact: return decode_artifact(bytes);
        case FileKind::blob:     return artifact_from_tensors(decode(parse_blob(std::move(bytes))));
        default:
            raise(Errc::HeaderMismatch, "'" + path.string() + "' is not a compressed artifact or blob");
    }
}

TaskVector load_dense(const std::filesystem::path & path) {
    return decode_dense(read_file(path));
}

TaskVector decode_dense(std::vector<std::uint8_t> bytes) {
    switch (sniff(bytes)) {
        case FileKind::container: return decode_container(bytes);
        case FileKind::artifact:  return reconstruct(decode_artifact(bytes));
        case FileKind::blob:      return reconstruct(artifact_from_tensors(decode(parse_blob(std::move(bytes)))));
        default:
            raise(Errc::ManifestCorrupt, "not a recognized tensor file");
    }
}

} // namespace tvc
