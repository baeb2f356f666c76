// SPDX-License-Identifier: Apache-2.0
// Little-endian byte writer/reader shared by the on-disk formats.
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tvc/error.hpp"

namespace tvc::detail {

class ByteWriter {
public:
    explicit ByteWriter(std::vector<std::uint8_t> & out) : out_(out) {}

    void bytes(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }
    void bytes(std::span<const std::uint8_t> s) { out_.insert(out_.end(), s.begin(), s.end()); }
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u32(std::uint32_t v) { le(v, 4); }
    void u64(std::uint64_t v) { le(v, 8); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void str(std::string_view s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes(s);
    }

private:
    void le(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) {
            out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
        }
    }

    std::vector<std::uint8_t> & out_;
};

/// Bounds-checked reader; running off the end raises `short_code`.
class ByteReader {
public:
    ByteReader(std::span<const std::uint8_t> in, Errc short_code) : in_(in), short_code_(short_code) {}

    std::size_t pos() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return in_.size() - pos_; }

    std::span<const std::uint8_t> take(std::size_t n) {
        need(n);
        auto s = in_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    std::uint8_t u8() { return take(1)[0]; }
    std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
    std::uint64_t u64() { return le(8); }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() {
        const std::uint32_t n = u32();
        auto s = take(n);
        return std::string(reinterpret_cast<const char *>(s.data()), s.size());
    }

private:
    void need(std::size_t n) const {
        if (n > remaining()) {
            raise(short_code_, "unexpected end of data");
        }
    }
    std::uint64_t le(int n) {
        auto s = take(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) {
            v |= static_cast<std::uint64_t>(s[static_cast<std::size_t>(i)]) << (8 * i);
        }
        return v;
    }

    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
    Errc short_code_;
};

} // namespace tvc::detail
