// SPDX-License-Identifier: Apache-2.0
#include "tvc/bench.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <vector>

#include "tvc/artifact_io.hpp"
#include "tvc/error.hpp"

namespace tvc {

namespace {

void evict(const std::filesystem::path & path) {
#if defined(POSIX_FADV_DONTNEED)
    const int fd = ::open(path.c_str(), O_RDONLY);
    if (fd >= 0) {
        ::fdatasync(fd);
        ::posix_fadvise(fd, 0, 0, POSIX_FADV_DONTNEED);
        ::close(fd);
    }
#else
    (void)path;
#endif
}

std::string kind_name(FileKind kind) {
    switch (kind) {
        case FileKind::container: return "container";
        case FileKind::artifact:  return "artifact";
        case FileKind::blob:      return "blob";
        case FileKind::unknown:   break;
    }
    return "unknown";
}

} // namespace

double estimate_transfer(std::uint64_t size_bits, const TransferModel & model) {
    if (!(model.bandwidth_bits_per_sec > 0.0) || !(model.fixed_latency_sec >= 0.0)) {
        raise(Errc::InvalidArgument, "bandwidth must be positive and latency non-negative");
    }
    return model.fixed_latency_sec + static_cast<double>(size_bits) / model.bandwidth_bits_per_sec;
}

BenchReport bench_load(const std::filesystem::path & path, const BenchOptions & options) {
    if (options.trials == 0) {
        raise(Errc::InvalidArgument, "trials must be at least 1");
    }
    std::error_code ec;
    const auto file_size = std::filesystem::file_size(path, ec);
    if (ec) {
        raise(Errc::IoFailure, "cannot stat '" + path.string() + "': " + ec.message());
    }

    BenchReport report;
    report.path      = path.string();
    report.trials    = options.trials;
    report.size_bits = static_cast<std::uint64_t>(file_size) * 8;

    std::vector<double> times;
    times.reserve(options.trials);
    std::uint64_t sink = 0;
    for (std::size_t t = 0; t < options.trials; ++t) {
        if (options.drop_caches) {
            evict(path);
        }
        const auto start = std::chrono::steady_clock::now();
        auto bytes       = read_file(path);
        if (t == 0) {
            report.kind = kind_name(sniff(bytes));
        }
        if (options.read_only) {
            sink += bytes.size();
        } else {
            sink += decode_dense(std::move(bytes)).dim();
        }
        const auto stop = std::chrono::steady_clock::now();
        times.push_back(std::chrono::duration<double>(stop - start).count());
    }
    (void)sink;

    double mean = 0.0;
    for (double x : times) {
        mean += x;
    }
    mean /= static_cast<double>(times.size());
    double var = 0.0;
    for (double x : times) {
        var += (x - mean) * (x - mean);
    }
    report.mean_sec = mean;
    report.std_sec  = std::sqrt(var / static_cast<double>(times.size()));
    return report;
}

} // namespace tvc
