// SPDX-License-Identifier: Apache-2.0
#include "tvc/half.hpp"

#include <bit>

namespace tvc {

std::uint16_t float_to_f16(float value) noexcept {
    const std::uint32_t x    = std::bit_cast<std::uint32_t>(value);
    const std::uint32_t sign = (x >> 16) & 0x8000u;
    const std::uint32_t mag  = x & 0x7fffffffu;

    if (mag >= 0x7f800000u) {
        return static_cast<std::uint16_t>(sign | 0x7c00u | (mag > 0x7f800000u ? 0x0200u : 0u));
    }
    // halfway between 65504 and 65536 rounds to even, i.e. to infinity
    if (mag >= 0x477ff000u) {
        return static_cast<std::uint16_t>(sign | 0x7c00u);
    }
    if (mag < 0x38800000u) {
        const std::uint32_t exp = mag >> 23;
        if (exp < 102) {
            return static_cast<std::uint16_t>(sign);
        }
        const std::uint32_t mant  = (mag & 0x7fffffu) | 0x800000u;
        const std::uint32_t shift = 126u - exp;
        std::uint32_t q           = mant >> shift;
        const std::uint32_t rem   = mant & ((1u << shift) - 1u);
        const std::uint32_t half  = 1u << (shift - 1u);
        if (rem > half || (rem == half && (q & 1u))) {
            ++q;
        }
        return static_cast<std::uint16_t>(sign | q);
    }
    std::uint32_t h         = (((mag >> 23) - 112u) << 10) | ((mag & 0x7fffffu) >> 13);
    const std::uint32_t rem = mag & 0x1fffu;
    if (rem > 0x1000u || (rem == 0x1000u && (h & 1u))) {
        ++h;
    }
    return static_cast<std::uint16_t>(sign | h);
}

float f16_to_float(std::uint16_t bits) noexcept {
    const std::uint32_t sign = static_cast<std::uint32_t>(bits & 0x8000u) << 16;
    const std::uint32_t exp  = (bits >> 10) & 0x1fu;
    std::uint32_t mant       = bits & 0x3ffu;

    std::uint32_t out;
    if (exp == 0x1f) {
        out = sign | 0x7f800000u | (mant << 13);
    } else if (exp != 0) {
        out = sign | ((exp + 112u) << 23) | (mant << 13);
    } else if (mant == 0) {
        out = sign;
    } else {
        // subnormal half: renormalize
        std::uint32_t e = 113;
        while ((mant & 0x400u) == 0) {
            mant <<= 1;
            --e;
        }
        out = sign | (e << 23) | ((mant & 0x3ffu) << 13);
    }
    return std::bit_cast<float>(out);
}

std::uint16_t float_to_bf16(float value) noexcept {
    const std::uint32_t x = std::bit_cast<std::uint32_t>(value);
    if ((x & 0x7fffffffu) > 0x7f800000u) {
        return static_cast<std::uint16_t>((x >> 16) | 0x0040u);
    }
    const std::uint32_t rounding = 0x7fffu + ((x >> 16) & 1u);
    return static_cast<std::uint16_t>((x + rounding) >> 16);
}

float bf16_to_float(std::uint16_t bits) noexcept {
    return std::bit_cast<float>(static_cast<std::uint32_t>(bits) << 16);
}

} // namespace tvc
