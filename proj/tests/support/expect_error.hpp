// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <gtest/gtest.h>

#include <functional>

#include "tvc/error.hpp"

namespace tvc::testing {

/// Runs fn and returns the code of the tvc::Error it throws.
inline Errc code_of(const std::function<void()> & fn) {
    try {
        fn();
    } catch (const Error & e) {
        return e.code();
    }
    ADD_FAILURE() << "expected tvc::Error";
    return static_cast<Errc>(-1);
}

} // namespace tvc::testing
