// SPDX-License-Identifier: Apache-2.0
#include "tvc/decompose.hpp"

#include <algorithm>
#include <cmath>

#include "tvc/error.hpp"

namespace tvc {

namespace {

struct Moments {
    std::uint64_t count = 0;
    double sum          = 0.0;
    double max          = -INFINITY;
    double min          = INFINITY;

    // the mean of values that are all equal can otherwise drift by an ulp
    double mean() const { return std::clamp(sum / static_cast<double>(count), min, max); }

    void add(std::span<const float> values) {
        for (float v : values) {
            sum += v;
            max = std::max(max, static_cast<double>(v));
            min = std::min(min, static_cast<double>(v));
        }
        count += values.size();
    }
};

double sum_sq_dev(std::span<const float> values, double mean) {
    double acc = 0.0;
    for (float v : values) {
        const double d = static_cast<double>(v) - mean;
        acc += d * d;
    }
    return acc;
}

VectorStats finish(std::string name, const Moments & m, double sq_dev) {
    VectorStats s;
    s.name  = std::move(name);
    s.count = m.count;
    s.mean  = m.mean();
    s.std   = std::sqrt(sq_dev / static_cast<double>(m.count));
    s.max   = m.max;
    s.min   = m.min;
    return s;
}

} // namespace

TaskVector task_vector(const TaskVector & theta_ft, const TaskVector & theta_init) {
    check_same_layout(theta_ft, theta_init);
    std::vector<ParamGroup> out;
    out.reserve(theta_ft.group_count());
    for (std::size_t i = 0; i < theta_ft.group_count(); ++i) {
        const auto & ft   = theta_ft.groups()[i];
        const auto & init = theta_init.groups()[i];
        ParamGroup g{ft.name, ft.shape, std::vector<float>(ft.values.size())};
        std::transform(ft.values.begin(), ft.values.end(), init.values.begin(), g.values.begin(),
                       [](float a, float b) { return a - b; });
        out.push_back(std::move(g));
    }
    return TaskVector(std::move(out));
}

std::int8_t sign_of(float v) noexcept {
    return v > 0.0f ? 1 : (v < 0.0f ? -1 : 0);
}

SignMagnitude sign_magnitude(const TaskVector & tau) {
    SignMagnitude sm;
    sm.groups.reserve(tau.group_count());
    for (const auto & g : tau.groups()) {
        SignMagnitude::Group out{g.name, std::vector<std::int8_t>(g.values.size()),
                                 std::vector<float>(g.values.size())};
        for (std::size_t i = 0; i < g.values.size(); ++i) {
            out.signs[i]      = sign_of(g.values[i]);
            out.magnitudes[i] = out.signs[i] == 0 ? 0.0f : std::fabs(g.values[i]);
        }
        sm.groups.push_back(std::move(out));
    }
    return sm;
}

VectorStats compute_stats(std::span<const float> values, std::string name) {
    if (values.empty()) {
        raise(Errc::EmptyVector, "statistics of an empty vector");
    }
    Moments m;
    m.add(values);
    return finish(std::move(name), m, sum_sq_dev(values, m.mean()));
}

StatsReport stats(const TaskVector & tau) {
    StatsReport report;
    Moments pooled;
    for (const auto & g : tau.groups()) {
        report.groups.push_back(compute_stats(g.values, g.name));
        pooled.add(g.values);
    }
    const double mean = pooled.mean();
    double sq_dev     = 0.0;
    for (const auto & g : tau.groups()) {
        sq_dev += sum_sq_dev(g.values, mean);
    }
    report.pooled = finish("<pooled>", pooled, sq_dev);
    return report;
}

} // namespace tvc
