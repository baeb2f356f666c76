// SPDX-License-Identifier: Apache-2.0
// MSB-first bit packing.
#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <span>
#include <vector>

#include "tvc/error.hpp"

namespace tvc::detail {

class BitWriter {
public:
    explicit BitWriter(std::vector<std::uint8_t> & out) : out_(out) {}

    /// Appends the low `count` bits of `value`, most significant first. count <= 56.
    void put(std::uint64_t value, unsigned count) {
        if (count == 0) {
            return;
        }
        acc_ = (acc_ << count) | (value & ((std::uint64_t{1} << count) - 1));
        pending_ += count;
        written_ += count;
        while (pending_ >= 8) {
            pending_ -= 8;
            out_.push_back(static_cast<std::uint8_t>(acc_ >> pending_));
        }
    }

    void put_ones(std::uint64_t count) {
        while (count >= 56) {
            put(~std::uint64_t{0}, 56);
            count -= 56;
        }
        put(~std::uint64_t{0}, static_cast<unsigned>(count));
    }

    /// Zero-pads to the next byte boundary.
    void align() {
        if (pending_ > 0) {
            out_.push_back(static_cast<std::uint8_t>(acc_ << (8 - pending_)));
            pending_ = 0;
        }
    }

    std::uint64_t bits_written() const noexcept { return written_; }

private:
    std::vector<std::uint8_t> & out_;
    std::uint64_t acc_     = 0;
    unsigned pending_      = 0;
    std::uint64_t written_ = 0;
};

class BitReader {
public:
    explicit BitReader(std::span<const std::uint8_t> data) : data_(data), end_(data.size() * 8) {}

    std::uint64_t position() const noexcept { return pos_; }

    unsigned bit() {
        if (pos_ >= end_) {
            raise(Errc::BitstreamCorrupt, "payload exhausted");
        }
        const unsigned b = (data_[pos_ >> 3] >> (7 - (pos_ & 7))) & 1u;
        ++pos_;
        return b;
    }

    /// Reads `count` bits (count <= 64) as an unsigned value.
    std::uint64_t bits(unsigned count) {
        if (end_ - pos_ < count) {
            raise(Errc::BitstreamCorrupt, "payload exhausted");
        }
        if (count == 0) {
            return 0;
        }
        if (count > 32) {
            const std::uint64_t hi = bits(count - 32);
            return (hi << 32) | bits(32);
        }
        const std::uint64_t v = peek() >> (64 - count);
        pos_ += count;
        return v;
    }

    /// Counts one-bits up to and including the terminating zero; the zero is
    /// consumed. Raises BitstreamCorrupt once the count exceeds `limit`.
    std::uint64_t unary(std::uint64_t limit) {
        std::uint64_t n = 0;
        for (;;) {
            if (pos_ >= end_) {
                raise(Errc::BitstreamCorrupt, "payload exhausted inside a unary run");
            }
            const std::uint64_t avail = std::min<std::uint64_t>(kWindow, end_ - pos_);
            const auto ones           = static_cast<std::uint64_t>(std::countl_one(peek()));
            if (ones < avail) {
                n += ones;
                pos_ += ones + 1;
                break;
            }
            n += avail;
            pos_ += avail;
            if (n > limit) {
                break;
            }
        }
        if (n > limit) {
            raise(Errc::BitstreamCorrupt, "unary run overruns the tensor");
        }
        return n;
    }

    /// Reads a whole codeword of `ones` one-bits, a zero and `tail` more bits
    /// with a single window load. Returns false, consuming nothing, when the
    /// codeword might not fit in the window.
    bool try_codeword(unsigned tail, std::uint64_t & ones, std::uint64_t & tail_bits) {
        if (end_ - pos_ < kWindow) {
            return false;
        }
        const std::uint64_t w = peek();
        const auto n          = static_cast<unsigned>(std::countl_one(w));
        if (n + 1 + tail > kWindow || tail == 0) {
            return false;
        }
        ones      = n;
        tail_bits = (w << (n + 1)) >> (64 - tail);
        pos_ += n + 1 + tail;
        return true;
    }

    /// Skips to the next byte boundary; padding bits must be zero.
    void align() {
        const unsigned offset = static_cast<unsigned>(pos_ & 7);
        if (offset != 0) {
            if (bits(8 - offset) != 0) {
                raise(Errc::BitstreamCorrupt, "nonzero padding bits");
            }
        }
    }

private:
    // peek() always holds at least this many valid bits (fewer near the end)
    static constexpr std::uint64_t kWindow = 57;

    /// The next 64 bits, left-aligned; bits past the end read as zero.
    std::uint64_t peek() const noexcept {
        const std::size_t byte = static_cast<std::size_t>(pos_ >> 3);
        std::uint64_t v        = 0;
        if (byte + 8 <= data_.size()) {
            for (std::size_t k = 0; k < 8; ++k) v = (v << 8) | data_[byte + k];
        } else {
            for (std::size_t k = 0; k < 8; ++k) v = (v << 8) | (byte + k < data_.size() ? data_[byte + k] : 0u);
        }
        return v << (pos_ & 7);
    }

    std::span<const std::uint8_t> data_;
    std::uint64_t pos_ = 0;
    std::uint64_t end_ = 0;
};

} // namespace tvc::detail
