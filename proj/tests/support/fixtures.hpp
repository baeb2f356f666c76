// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <unistd.h>

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "tvc/compress.hpp"
#include "tvc/tensor_store.hpp"

namespace tvc::testing {

inline TaskVector single_group(std::vector<float> values, std::string name = "w") {
    const auto n = values.size();
    return TaskVector({ParamGroup{std::move(name), {n}, std::move(values)}});
}

inline std::vector<float> normal_values(std::mt19937_64 & rng, std::size_t n, float stddev = 1.0f) {
    std::normal_distribution<float> dist(0.0f, stddev);
    std::vector<float> v(n);
    for (auto & x : v) x = dist(rng);
    return v;
}

inline TaskVector random_task_vector(std::mt19937_64 & rng, const std::vector<std::size_t> & sizes,
                                     float stddev = 1.0f) {
    std::vector<ParamGroup> groups;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        groups.push_back(ParamGroup{"g" + std::to_string(i), {sizes[i]}, normal_values(rng, sizes[i], stddev)});
    }
    return TaskVector(std::move(groups));
}

inline TernaryTensor make_tensor(std::string name, std::uint64_t dim, std::vector<std::uint64_t> indices,
                                 std::vector<std::int8_t> signs, float scale) {
    return TernaryTensor{std::move(name), dim, std::move(indices), std::move(signs), scale, {dim}};
}

/// A per-test scratch directory removed on destruction.
class ScratchDir {
public:
    explicit ScratchDir(const std::string & tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("tvc-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::filesystem::path operator/(const std::string & name) const { return path_ / name; }
    const std::filesystem::path & path() const { return path_; }

private:
    std::filesystem::path path_;
};

} // namespace tvc::testing
