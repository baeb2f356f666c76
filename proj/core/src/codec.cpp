// SPDX-License-Identifier: Apache-2.0
#include "tvc/codec.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <string_view>

#include "bitstream.hpp"
#include "byte_io.hpp"
#include "tvc/error.hpp"

namespace tvc {

namespace {

constexpr std::string_view kMagic = "CPT1";
constexpr std::uint8_t kVersion   = 1;
constexpr unsigned kMaxRice       = 63;
constexpr std::uint64_t kMaxDim   = std::uint64_t{1} << 60;

struct TensorHeader {
    std::string name;
    std::uint64_t dim      = 0;
    std::uint64_t nonzeros = 0;
    float scale            = 0.0f;
    unsigned rice_b        = 0;
};

struct ParsedBlob {
    BlobFormat format = BlobFormat::golomb;
    std::vector<TensorHeader> headers;
    std::size_t payload_start = 0;
};

void write_header(std::vector<std::uint8_t> & out, BlobFormat format, std::span<const TernaryTensor> tensors) {
    detail::ByteWriter w(out);
    w.bytes(kMagic);
    w.u8(kVersion);
    w.u8(static_cast<std::uint8_t>(format));
    w.u32(static_cast<std::uint32_t>(tensors.size()));
    for (const auto & t : tensors) {
        w.str(t.name);
        w.u64(t.dim);
        w.u64(t.nonzeros());
        w.f32(t.scale);
        if (format == BlobFormat::golomb) {
            w.u8(static_cast<std::uint8_t>(rice_parameter(t.nonzeros(), t.dim)));
        }
    }
}

ParsedBlob parse_header(std::span<const std::uint8_t> bytes) {
    detail::ByteReader r(bytes, Errc::HeaderMismatch);
    auto magic = r.take(kMagic.size());
    if (std::string_view(reinterpret_cast<const char *>(magic.data()), magic.size()) != kMagic) {
        raise(Errc::HeaderMismatch, "missing CPT1 magic");
    }
    if (const auto v = r.u8(); v != kVersion) {
        raise(Errc::HeaderMismatch, "unsupported blob version " + std::to_string(v));
    }
    const auto format = r.u8();
    if (format > static_cast<std::uint8_t>(BlobFormat::bitmask)) {
        raise(Errc::HeaderMismatch, "unknown blob format " + std::to_string(format));
    }
    ParsedBlob out;
    out.format         = static_cast<BlobFormat>(format);
    const auto count   = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
        TensorHeader h;
        h.name     = r.str();
        h.dim      = r.u64();
        h.nonzeros = r.u64();
        h.scale    = r.f32();
        if (out.format == BlobFormat::golomb) {
            h.rice_b = r.u8();
        }
        if (h.dim == 0 || h.dim > kMaxDim || h.nonzeros > h.dim) {
            raise(Errc::HeaderMismatch, "tensor '" + h.name + "' has inconsistent dim/nonzero counts");
        }
        if (!std::isfinite(h.scale)) {
            raise(Errc::HeaderMismatch, "tensor '" + h.name + "' has a non-finite scale");
        }
        if (out.format == BlobFormat::golomb && h.nonzeros > 0 && (h.rice_b == 0 || h.rice_b > kMaxRice)) {
            raise(Errc::HeaderMismatch, "tensor '" + h.name + "' has invalid rice parameter");
        }
        out.headers.push_back(std::move(h));
    }
    out.payload_start = r.pos();
    return out;
}

// Every nonzero costs at least one payload bit, which bounds the reservation.
TernaryTensor tensor_from_header(const TensorHeader & h, std::size_t payload_bytes) {
    TernaryTensor t;
    t.name  = h.name;
    t.dim   = h.dim;
    t.scale = h.scale;
    t.shape = {h.dim};
    if (h.nonzeros <= static_cast<std::uint64_t>(payload_bytes) * 8) {
        t.indices.reserve(static_cast<std::size_t>(h.nonzeros));
        t.signs.reserve(static_cast<std::size_t>(h.nonzeros));
    }
    return t;
}

struct Decoded {
    std::vector<TernaryTensor> tensors;
    std::uint64_t payload_bits = 0;
};

Decoded decode_golomb_impl(std::span<const std::uint8_t> bytes, const ParsedBlob & parsed) {
    Decoded out;
    detail::BitReader reader(bytes.subspan(parsed.payload_start));
    for (const auto & h : parsed.headers) {
        TernaryTensor t        = tensor_from_header(h, bytes.size());
        const unsigned b       = h.rice_b;
        const std::uint64_t q_limit = h.nonzeros == 0 ? 0 : (h.dim >> b);
        const std::uint64_t start   = reader.position();
        std::uint64_t next          = 0;  // previous index + 1
        for (std::uint64_t j = 0; j < h.nonzeros; ++j) {
            // rs holds the remainder and the sign bit
            std::uint64_t q  = 0;
            std::uint64_t rs = 0;
            if (!reader.try_codeword(b + 1, q, rs)) {
                q  = reader.unary(q_limit);
                rs = reader.bits(b + 1);
            }
            if (q > q_limit) {
                raise(Errc::BitstreamCorrupt, "gap overruns dim in tensor '" + h.name + "'");
            }
            const std::uint64_t gap = (q << b) | (rs >> 1);
            if (gap >= h.dim - next) {
                raise(Errc::BitstreamCorrupt, "gap overruns dim in tensor '" + h.name + "'");
            }
            const std::uint64_t index = next + gap;
            t.indices.push_back(index);
            t.signs.push_back((rs & 1u) ? std::int8_t{1} : std::int8_t{-1});
            next = index + 1;
        }
        out.payload_bits += reader.position() - start;
        reader.align();
        out.tensors.push_back(std::move(t));
    }
    if (reader.position() != (bytes.size() - parsed.payload_start) * 8) {
        raise(Errc::BitstreamCorrupt, "trailing bytes after the last payload");
    }
    return out;
}

Decoded decode_bitmask_impl(std::span<const std::uint8_t> bytes, const ParsedBlob & parsed) {
    Decoded out;
    auto payload     = bytes.subspan(parsed.payload_start);
    std::size_t cursor = 0;
    for (const auto & h : parsed.headers) {
        const std::uint64_t mask_bytes = (h.dim + 7) / 8;
        if (payload.size() - cursor < 2 * mask_bytes) {
            raise(Errc::BitstreamCorrupt, "payload exhausted in tensor '" + h.name + "'");
        }
        const std::uint8_t * pos = payload.data() + cursor;
        const std::uint8_t * neg = pos + mask_bytes;
        cursor += static_cast<std::size_t>(2 * mask_bytes);

        if (const unsigned tail = static_cast<unsigned>(h.dim % 8); tail != 0) {
            const auto pad = static_cast<std::uint8_t>(0xffu >> tail);
            if ((pos[mask_bytes - 1] & pad) != 0 || (neg[mask_bytes - 1] & pad) != 0) {
                raise(Errc::BitstreamCorrupt, "nonzero padding bits in tensor '" + h.name + "'");
            }
        }

        TernaryTensor t = tensor_from_header(h, payload.size());
        for (std::uint64_t byte = 0; byte < mask_bytes; byte += 8) {
            // eight mask bytes at a time, first byte in the high bits
            const std::uint64_t n_bytes = std::min<std::uint64_t>(8, mask_bytes - byte);
            std::uint64_t p = 0;
            std::uint64_t n = 0;
            for (std::uint64_t k = 0; k < n_bytes; ++k) {
                p = (p << 8) | pos[byte + k];
                n = (n << 8) | neg[byte + k];
            }
            p <<= 8 * (8 - n_bytes);
            n <<= 8 * (8 - n_bytes);
            if ((p & n) != 0) {
                raise(Errc::MaskOverlap, "index set in both masks of tensor '" + h.name + "'");
            }
            for (std::uint64_t any = p | n; any != 0;) {
                const auto z             = static_cast<unsigned>(std::countl_zero(any));
                const std::uint64_t mask = std::uint64_t{1} << (63 - z);
                t.indices.push_back(byte * 8 + z);
                t.signs.push_back((p & mask) ? std::int8_t{1} : std::int8_t{-1});
                any &= ~mask;
            }
        }
        if (t.indices.size() != h.nonzeros) {
            raise(Errc::BitstreamCorrupt, "mask population disagrees with header for '" + h.name + "'");
        }
        out.payload_bits += 2 * h.dim;
        out.tensors.push_back(std::move(t));
    }
    if (cursor != payload.size()) {
        raise(Errc::BitstreamCorrupt, "trailing bytes after the last payload");
    }
    return out;
}

Decoded decode_any(const EncodedBlob & blob) {
    const auto parsed = parse_header(blob.bytes);
    if (parsed.format != blob.format) {
        raise(Errc::HeaderMismatch, "blob header format disagrees with its tag");
    }
    return parsed.format == BlobFormat::golomb ? decode_golomb_impl(blob.bytes, parsed)
                                               : decode_bitmask_impl(blob.bytes, parsed);
}

void validate_all(std::span<const TernaryTensor> tensors) {
    for (const auto & t : tensors) {
        validate(t);
    }
}

} // namespace

std::string_view to_string(BlobFormat format) noexcept {
    return format == BlobFormat::golomb ? "golomb" : "bitmask";
}

double entropy_bits_per_param(double k) {
    if (!(k > 0.0 && k <= 1.0)) {
        raise(Errc::DomainError, "density must be in (0, 1], got " + std::to_string(k));
    }
    const double zero_term = k < 1.0 ? (1.0 - k) * std::log2(1.0 - k) : 0.0;
    return -(zero_term + k * std::log2(k / 2.0));
}

double entropy_bits(double k, std::uint64_t d) {
    return entropy_bits_per_param(k) * static_cast<double>(d) + 16.0;
}

GolombParams golomb_params(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        raise(Errc::DomainError, "nonzero probability must be in (0, 1), got " + std::to_string(p));
    }
    const double ratio = std::log(std::numbers::phi - 1.0) / std::log1p(-p);
    const double raw   = 1.0 + std::floor(std::log2(ratio));
    GolombParams g;
    g.p      = p;
    g.b_star = raw < 1.0 ? 1u : static_cast<unsigned>(std::min(raw, static_cast<double>(kMaxRice)));
    g.avg_bits_per_pos = g.b_star + 1.0 / (1.0 - std::pow(1.0 - p, std::ldexp(1.0, static_cast<int>(g.b_star))));
    return g;
}

unsigned rice_parameter(std::uint64_t nonzeros, std::uint64_t dim) {
    if (nonzeros == 0) {
        return 0;
    }
    if (nonzeros >= dim) {
        return 1;
    }
    return golomb_params(static_cast<double>(nonzeros) / static_cast<double>(dim)).b_star;
}

EncodedBlob encode_golomb(std::span<const TernaryTensor> tensors) {
    validate_all(tensors);
    EncodedBlob blob{BlobFormat::golomb, {}};
    write_header(blob.bytes, BlobFormat::golomb, tensors);
    detail::BitWriter w(blob.bytes);
    for (const auto & t : tensors) {
        const unsigned b   = rice_parameter(t.nonzeros(), t.dim);
        std::uint64_t next = 0;
        for (std::size_t j = 0; j < t.indices.size(); ++j) {
            const std::uint64_t gap  = t.indices[j] - next;
            const std::uint64_t q    = gap >> b;
            const std::uint64_t tail = ((gap & ((std::uint64_t{1} << b) - 1)) << 1) | (t.signs[j] > 0 ? 1u : 0u);
            if (q + b + 2 <= 56) {
                // q ones, a zero, b remainder bits and the sign as one codeword
                const std::uint64_t ones = ((std::uint64_t{1} << q) - 1) << (b + 2);
                w.put(ones | tail, static_cast<unsigned>(q + b + 2));
            } else {
                w.put_ones(q);
                w.put(0, 1);
                if (b > 32) {
                    w.put(gap >> 32, b - 32);
                    w.put(gap, 32);
                } else {
                    w.put(gap, b);
                }
                w.put(tail & 1u, 1);
            }
            next = t.indices[j] + 1;
        }
        w.align();
    }
    return blob;
}

EncodedBlob encode_bitmask(std::span<const TernaryTensor> tensors) {
    validate_all(tensors);
    EncodedBlob blob{BlobFormat::bitmask, {}};
    write_header(blob.bytes, BlobFormat::bitmask, tensors);
    for (const auto & t : tensors) {
        const std::size_t mask_bytes = static_cast<std::size_t>((t.dim + 7) / 8);
        const std::size_t base       = blob.bytes.size();
        blob.bytes.resize(base + 2 * mask_bytes, 0);
        std::uint8_t * pos = blob.bytes.data() + base;
        std::uint8_t * neg = pos + mask_bytes;
        for (std::size_t j = 0; j < t.indices.size(); ++j) {
            const std::uint64_t i = t.indices[j];
            (t.signs[j] > 0 ? pos : neg)[i >> 3] |= static_cast<std::uint8_t>(0x80u >> (i & 7));
        }
    }
    return blob;
}

EncodedBlob encode(std::span<const TernaryTensor> tensors, BlobFormat format) {
    return format == BlobFormat::golomb ? encode_golomb(tensors) : encode_bitmask(tensors);
}

EncodedBlob parse_blob(std::vector<std::uint8_t> bytes) {
    const auto parsed = parse_header(bytes);
    return EncodedBlob{parsed.format, std::move(bytes)};
}

std::vector<TernaryTensor> decode_golomb(const EncodedBlob & blob) {
    if (blob.format != BlobFormat::golomb) {
        raise(Errc::HeaderMismatch, "not a golomb blob");
    }
    return decode_any(blob).tensors;
}

std::vector<TernaryTensor> decode_bitmask(const EncodedBlob & blob) {
    if (blob.format != BlobFormat::bitmask) {
        raise(Errc::HeaderMismatch, "not a bitmask blob");
    }
    return decode_any(blob).tensors;
}

std::vector<TernaryTensor> decode(const EncodedBlob & blob) {
    return decode_any(blob).tensors;
}

std::uint64_t measured_size_bits(const EncodedBlob & blob) {
    return summarize(blob).payload_bits;
}

std::uint64_t accounted_size_bits(const EncodedBlob & blob) {
    const auto s = summarize(blob);
    return s.payload_bits + 16 * s.tensors;
}

BlobSummary summarize(const EncodedBlob & blob) {
    const auto parsed = parse_header(blob.bytes);
    BlobSummary s;
    s.format  = parsed.format;
    s.tensors = parsed.headers.size();
    for (const auto & h : parsed.headers) {
        s.dim += h.dim;
        s.nonzeros += h.nonzeros;
    }
    if (parsed.format == BlobFormat::bitmask) {
        s.payload_bits = 2 * s.dim;
    } else {
        s.payload_bits = decode_any(blob).payload_bits;
    }
    return s;
}

} // namespace tvc
