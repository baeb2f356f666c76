// SPDX-License-Identifier: Apache-2.0
#include "tvc/error.hpp"

#include <atomic>
#include <iostream>

namespace tvc {

namespace {
std::atomic<bool> g_warnings_enabled{true};
}

std::string_view to_string(Errc code) noexcept {
    switch (code) {
        case Errc::InvalidArgument:  return "InvalidArgument";
        case Errc::IoFailure:        return "IoFailure";
        case Errc::ManifestCorrupt:  return "ManifestCorrupt";
        case Errc::PayloadTruncated: return "PayloadTruncated";
        case Errc::DtypeUnsupported: return "DtypeUnsupported";
        case Errc::PayloadNonFinite: return "PayloadNonFinite";
        case Errc::ShapeMismatch:    return "ShapeMismatch";
        case Errc::NameMismatch:     return "NameMismatch";
        case Errc::EmptyVector:      return "EmptyVector";
        case Errc::EmptyList:        return "EmptyList";
        case Errc::InvalidDensity:   return "InvalidDensity";
        case Errc::InvalidAlpha:     return "InvalidAlpha";
        case Errc::NonFiniteScale:   return "NonFiniteScale";
        case Errc::DomainError:      return "DomainError";
        case Errc::BitstreamCorrupt: return "BitstreamCorrupt";
        case Errc::HeaderMismatch:   return "HeaderMismatch";
        case Errc::MaskOverlap:      return "MaskOverlap";
        case Errc::DimMismatch:      return "DimMismatch";
        case Errc::RankMismatch:     return "RankMismatch";
        case Errc::LossNonFinite:    return "LossNonFinite";
    }
    return "Unknown";
}

Error::Error(Errc code, const std::string & what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void raise(Errc code, const std::string & what) {
    throw Error(code, what);
}

void set_warnings_enabled(bool enabled) noexcept {
    g_warnings_enabled.store(enabled, std::memory_order_relaxed);
}

void warn(std::string_view message) {
    if (g_warnings_enabled.load(std::memory_order_relaxed)) {
        std::cerr << "warning: " << message << '\n';
    }
}

} // namespace tvc
