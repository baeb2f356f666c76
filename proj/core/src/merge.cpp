// SPDX-License-Identifier: Apache-2.0
#include "tvc/merge.hpp"

#include <cmath>
#include <vector>

#include "tvc/bitmask_ops.hpp"
#include "tvc/error.hpp"

namespace tvc {

namespace {

void check_inputs(std::span<const TaskVector> taus) {
    if (taus.empty()) {
        raise(Errc::EmptyList, "merge needs at least one task vector");
    }
    for (std::size_t i = 1; i < taus.size(); ++i) {
        check_same_layout(taus[0], taus[i]);
    }
}

void check_lambda(double lambda) {
    if (!std::isfinite(lambda)) {
        raise(Errc::InvalidArgument, "lambda must be finite");
    }
}

template <typename Finish>
TaskVector sum_groups(std::span<const TaskVector> taus, Finish finish) {
    std::vector<ParamGroup> out;
    out.reserve(taus[0].group_count());
    for (std::size_t gi = 0; gi < taus[0].group_count(); ++gi) {
        const auto & first = taus[0].groups()[gi];
        std::vector<double> acc(first.values.size(), 0.0);
        for (const auto & tau : taus) {
            const auto & values = tau.groups()[gi].values;
            for (std::size_t i = 0; i < acc.size(); ++i) {
                acc[i] += values[i];
            }
        }
        ParamGroup g{first.name, first.shape, std::vector<float>(acc.size())};
        for (std::size_t i = 0; i < acc.size(); ++i) {
            g.values[i] = static_cast<float>(finish(acc[i]));
        }
        out.push_back(std::move(g));
    }
    return TaskVector(std::move(out));
}

std::vector<float> trim(std::span<const float> values, double density) {
    std::vector<float> magnitudes(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        magnitudes[i] = std::fabs(values[i]);
    }
    std::vector<float> out(values.size(), 0.0f);
    for (auto i : topk_support(magnitudes, density)) {
        out[i] = values[i];
    }
    return out;
}

void check_artifacts(std::span<const CompressedArtifact> artifacts) {
    if (artifacts.empty()) {
        raise(Errc::EmptyList, "merge needs at least one artifact");
    }
    const auto & first = artifacts[0].tensors;
    for (const auto & ca : artifacts) {
        if (ca.tensors.size() != first.size()) {
            raise(Errc::NameMismatch, "artifacts have different tensor counts");
        }
        for (std::size_t i = 0; i < first.size(); ++i) {
            if (ca.tensors[i].name != first[i].name) {
                raise(Errc::NameMismatch, "tensor '" + ca.tensors[i].name + "' vs '" + first[i].name + "'");
            }
            if (ca.tensors[i].dim != first[i].dim) {
                raise(Errc::ShapeMismatch, "tensor '" + first[i].name + "' has different dims");
            }
        }
    }
}

} // namespace

std::string_view to_string(MergeMethod method) noexcept {
    switch (method) {
        case MergeMethod::average:         return "average";
        case MergeMethod::task_arithmetic: return "task-arithmetic";
        case MergeMethod::ties:            return "ties";
    }
    return "?";
}

std::optional<MergeMethod> parse_merge_method(std::string_view name) noexcept {
    if (name == "average" || name == "avg") return MergeMethod::average;
    if (name == "task-arithmetic" || name == "task_arithmetic" || name == "ta") return MergeMethod::task_arithmetic;
    if (name == "ties") return MergeMethod::ties;
    return std::nullopt;
}

void validate(const MergeSpec & spec) {
    check_lambda(spec.lambda);
    if (!(spec.trim_density > 0.0 && spec.trim_density <= 100.0)) {
        raise(Errc::InvalidDensity, "trim density must be in (0, 100]");
    }
}

TaskVector merge_average(std::span<const TaskVector> taus) {
    check_inputs(taus);
    const double n = static_cast<double>(taus.size());
    return sum_groups(taus, [n](double s) { return s / n; });
}

TaskVector merge_task_arithmetic(std::span<const TaskVector> taus, double lambda) {
    check_inputs(taus);
    check_lambda(lambda);
    return sum_groups(taus, [lambda](double s) { return lambda * s; });
}

TaskVector merge_ties(std::span<const TaskVector> taus, double lambda, double trim_density) {
    check_inputs(taus);
    validate(MergeSpec{MergeMethod::ties, lambda, trim_density});

    std::vector<ParamGroup> out;
    out.reserve(taus[0].group_count());
    for (std::size_t gi = 0; gi < taus[0].group_count(); ++gi) {
        const auto & first = taus[0].groups()[gi];
        const std::size_t n = first.values.size();

        std::vector<std::vector<float>> trimmed;
        trimmed.reserve(taus.size());
        std::vector<double> total(n, 0.0);
        for (const auto & tau : taus) {
            trimmed.push_back(trim(tau.groups()[gi].values, trim_density));
            for (std::size_t i = 0; i < n; ++i) {
                total[i] += trimmed.back()[i];
            }
        }

        ParamGroup g{first.name, first.shape, std::vector<float>(n, 0.0f)};
        for (std::size_t i = 0; i < n; ++i) {
            if (total[i] == 0.0) {
                continue;
            }
            const bool positive = total[i] > 0.0;
            double sum          = 0.0;
            std::size_t count   = 0;
            for (const auto & t : trimmed) {
                if ((positive && t[i] > 0.0f) || (!positive && t[i] < 0.0f)) {
                    sum += t[i];
                    ++count;
                }
            }
            g.values[i] = static_cast<float>(lambda * (sum / static_cast<double>(count)));
        }
        out.push_back(std::move(g));
    }
    return TaskVector(std::move(out));
}

TaskVector merge(std::span<const TaskVector> taus, const MergeSpec & spec) {
    validate(spec);
    switch (spec.method) {
        case MergeMethod::average:         return merge_average(taus);
        case MergeMethod::task_arithmetic: return merge_task_arithmetic(taus, spec.lambda);
        case MergeMethod::ties:            return merge_ties(taus, spec.lambda, spec.trim_density);
    }
    raise(Errc::InvalidArgument, "unknown merge method");
}

TaskVector merge_compressed(std::span<const CompressedArtifact> artifacts, const MergeSpec & spec) {
    validate(spec);
    check_artifacts(artifacts);

    if (spec.method == MergeMethod::ties) {
        std::vector<TaskVector> dense;
        dense.reserve(artifacts.size());
        for (const auto & ca : artifacts) {
            dense.push_back(reconstruct(ca));
        }
        return merge_ties(dense, spec.lambda, spec.trim_density);
    }

    const double n = static_cast<double>(artifacts.size());
    std::vector<ParamGroup> out;
    for (std::size_t gi = 0; gi < artifacts[0].tensors.size(); ++gi) {
        const auto & first = artifacts[0].tensors[gi];
        std::vector<BitmaskPair> masks;
        masks.reserve(artifacts.size());
        for (const auto & ca : artifacts) {
            masks.push_back(BitmaskPair::from_tensor(ca.tensors[gi]));
        }
        std::vector<double> acc(static_cast<std::size_t>(first.dim), 0.0);
        accumulate_into(masks, acc);

        ParamGroup g{first.name, first.shape.empty() ? std::vector<std::uint64_t>{first.dim} : first.shape,
                     std::vector<float>(acc.size())};
        for (std::size_t i = 0; i < acc.size(); ++i) {
            g.values[i] = static_cast<float>(spec.method == MergeMethod::average ? acc[i] / n : spec.lambda * acc[i]);
        }
        out.push_back(std::move(g));
    }
    return TaskVector(std::move(out));
}

} // namespace tvc
