// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tvc {

enum class Errc {
    InvalidArgument,
    IoFailure,
    ManifestCorrupt,
    PayloadTruncated,
    DtypeUnsupported,
    PayloadNonFinite,
    ShapeMismatch,
    NameMismatch,
    EmptyVector,
    EmptyList,
    InvalidDensity,
    InvalidAlpha,
    NonFiniteScale,
    DomainError,
    BitstreamCorrupt,
    HeaderMismatch,
    MaskOverlap,
    DimMismatch,
    RankMismatch,
    LossNonFinite,
};

std::string_view to_string(Errc code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (and tests) can dispatch on the kind without parsing messages.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string & what);

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] void raise(Errc code, const std::string & what);

// Warnings go to stderr unless silenced; tests and benchmarks turn them off.
void set_warnings_enabled(bool enabled) noexcept;
void warn(std::string_view message);

} // namespace tvc
