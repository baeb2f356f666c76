// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace tvc {

struct TransferModel {
    double bandwidth_bits_per_sec = 1e9;
    double fixed_latency_sec      = 0.0;
};

/// fixed_latency + size / bandwidth
double estimate_transfer(std::uint64_t size_bits, const TransferModel & model);

struct BenchOptions {
    std::size_t trials = 10;
    bool drop_caches   = false;  // advise the kernel to evict the file before each trial
    bool read_only     = false;  // time the raw read without decoding
};

struct BenchReport {
    std::string path;
    std::string kind;  // container / artifact / blob
    std::size_t trials = 0;
    double mean_sec = 0.0;
    double std_sec  = 0.0;  // population standard deviation over trials
    std::uint64_t size_bits = 0;  // file size
};

/// Reads and, unless read_only, decodes the file to dense values `trials`
/// times. Compressed files pay for reconstruction so the comparison with a
/// dense container is like for like.
BenchReport bench_load(const std::filesystem::path & path, const BenchOptions & options);

} // namespace tvc
