// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace tvc {

// IEEE binary16 and bfloat16 conversions, round-to-nearest-even.
std::uint16_t float_to_f16(float value) noexcept;
float f16_to_float(std::uint16_t bits) noexcept;

std::uint16_t float_to_bf16(float value) noexcept;
float bf16_to_float(std::uint16_t bits) noexcept;

} // namespace tvc
