// SPDX-License-Identifier: Apache-2.0
#include "tvc/compress.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "tvc/error.hpp"

namespace tvc {

namespace {

void check_density(double k_percent) {
    if (!(k_percent > 0.0 && k_percent <= 100.0)) {
        raise(Errc::InvalidDensity, "density must be in (0, 100], got " + std::to_string(k_percent));
    }
}

void check_alpha(double alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        raise(Errc::InvalidAlpha, "alpha must be positive and finite, got " + std::to_string(alpha));
    }
}

} // namespace

void validate(const TernaryTensor & t) {
    if (t.dim == 0) {
        raise(Errc::InvalidArgument, "tensor '" + t.name + "' has zero dim");
    }
    if (t.indices.size() != t.signs.size()) {
        raise(Errc::InvalidArgument, "tensor '" + t.name + "' has mismatched index/sign counts");
    }
    if (shape_elems(t.shape) != t.dim) {
        raise(Errc::InvalidArgument, "tensor '" + t.name + "' shape disagrees with dim");
    }
    if (!std::isfinite(t.scale)) {
        raise(Errc::NonFiniteScale, "tensor '" + t.name + "' has a non-finite scale");
    }
    for (std::size_t i = 0; i < t.indices.size(); ++i) {
        if (t.indices[i] >= t.dim || (i > 0 && t.indices[i] <= t.indices[i - 1])) {
            raise(Errc::InvalidArgument, "tensor '" + t.name + "' indices are not strictly increasing below dim");
        }
        if (t.signs[i] != 1 && t.signs[i] != -1) {
            raise(Errc::InvalidArgument, "tensor '" + t.name + "' has a sign outside {-1, +1}");
        }
    }
}

std::uint64_t CompressedArtifact::dim() const noexcept {
    std::uint64_t n = 0;
    for (const auto & t : tensors) {
        n += t.dim;
    }
    return n;
}

std::uint64_t CompressedArtifact::nonzeros() const noexcept {
    std::uint64_t n = 0;
    for (const auto & t : tensors) {
        n += t.nonzeros();
    }
    return n;
}

void validate(const CompressedArtifact & ca) {
    check_density(ca.k_percent);
    for (const auto & t : ca.tensors) {
        validate(t);
        if (t.nonzeros() > keep_count(t.dim, ca.k_percent)) {
            raise(Errc::InvalidArgument, "tensor '" + t.name + "' is denser than k_percent allows");
        }
    }
}

std::uint64_t keep_count(std::uint64_t n, double k_percent) {
    check_density(k_percent);
    const double raw   = std::floor(static_cast<double>(n) * k_percent / 100.0 + 0.5);
    std::uint64_t keep = raw < 1.0 ? 1 : static_cast<std::uint64_t>(raw);
    return std::min(keep, n);
}

std::vector<std::uint64_t> topk_support(std::span<const float> magnitudes, double k_percent) {
    const std::uint64_t keep = keep_count(magnitudes.size(), k_percent);
    const auto nonzero =
        static_cast<std::uint64_t>(std::count_if(magnitudes.begin(), magnitudes.end(), [](float m) { return m > 0.0f; }));

    std::vector<std::uint64_t> out;
    if (nonzero <= keep) {
        out.reserve(nonzero);
        for (std::size_t i = 0; i < magnitudes.size(); ++i) {
            if (magnitudes[i] > 0.0f) {
                out.push_back(i);
            }
        }
        return out;
    }

    std::vector<float> scratch(magnitudes.begin(), magnitudes.end());
    auto nth = scratch.begin() + static_cast<std::ptrdiff_t>(keep - 1);
    std::nth_element(scratch.begin(), nth, scratch.end(), std::greater<float>());
    const float threshold = *nth;

    const auto above = static_cast<std::uint64_t>(
        std::count_if(magnitudes.begin(), magnitudes.end(), [threshold](float m) { return m > threshold; }));
    std::uint64_t ties_left = keep - above;

    out.reserve(keep);
    for (std::size_t i = 0; i < magnitudes.size(); ++i) {
        if (magnitudes[i] > threshold) {
            out.push_back(i);
        } else if (magnitudes[i] == threshold && ties_left > 0) {
            out.push_back(i);
            --ties_left;
        }
    }
    return out;
}

std::vector<SparseSigns> sparsify_topk(const SignMagnitude & sm, double k_percent) {
    check_density(k_percent);
    std::vector<SparseSigns> out;
    out.reserve(sm.groups.size());
    for (const auto & g : sm.groups) {
        SparseSigns s{g.name, g.magnitudes.size(), topk_support(g.magnitudes, k_percent), {}};
        s.signs.reserve(s.indices.size());
        for (auto i : s.indices) {
            s.signs.push_back(g.signs[i]);
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<TernaryTensor> quantize(std::span<const SparseSigns> sparse, std::span<const double> sigma, double alpha) {
    check_alpha(alpha);
    if (sigma.size() != sparse.size()) {
        raise(Errc::InvalidArgument, "need one sigma per group");
    }
    std::vector<TernaryTensor> out;
    out.reserve(sparse.size());
    for (std::size_t i = 0; i < sparse.size(); ++i) {
        const auto & s = sparse[i];
        if (!std::isfinite(sigma[i]) || sigma[i] < 0.0) {
            raise(Errc::NonFiniteScale, "sigma of '" + s.name + "' is not a finite non-negative value");
        }
        // sigma enters at working (float) precision
        const auto scale = static_cast<float>(alpha * static_cast<double>(static_cast<float>(sigma[i])));
        if (!std::isfinite(scale)) {
            raise(Errc::NonFiniteScale, "alpha * sigma overflows for '" + s.name + "'");
        }
        if (scale == 0.0f) {
            warn("group '" + s.name + "' has zero scale; it reconstructs to all zeros");
        }
        out.push_back(TernaryTensor{s.name, s.dim, s.indices, s.signs, scale, {s.dim}});
    }
    return out;
}

CompressedArtifact compress(const TaskVector & tau, double k_percent, double alpha, SigmaMode sigma_mode) {
    check_density(k_percent);
    check_alpha(alpha);

    const StatsReport report = stats(tau);
    std::vector<double> sigma;
    sigma.reserve(tau.group_count());
    for (const auto & g : report.groups) {
        sigma.push_back(sigma_mode == SigmaMode::pooled ? report.pooled.std : g.std);
    }

    const auto sparse = sparsify_topk(sign_magnitude(tau), k_percent);

    CompressedArtifact ca;
    ca.tensors            = quantize(sparse, sigma, alpha);
    ca.k_percent          = k_percent;
    ca.alpha              = alpha;
    ca.source_fingerprint = fingerprint(tau);
    for (std::size_t i = 0; i < ca.tensors.size(); ++i) {
        ca.tensors[i].shape = tau.groups()[i].shape;
    }
    return ca;
}

std::vector<float> reconstruct_dense(const TernaryTensor & t) {
    std::vector<float> out(static_cast<std::size_t>(t.dim), 0.0f);
    for (std::size_t i = 0; i < t.indices.size(); ++i) {
        out[t.indices[i]] = t.signs[i] > 0 ? t.scale : -t.scale;
    }
    return out;
}

TaskVector reconstruct(const CompressedArtifact & ca) {
    std::vector<ParamGroup> groups;
    groups.reserve(ca.tensors.size());
    for (const auto & t : ca.tensors) {
        groups.push_back(ParamGroup{t.name, t.shape.empty() ? std::vector<std::uint64_t>{t.dim} : t.shape,
                                    reconstruct_dense(t)});
    }
    return TaskVector(std::move(groups));
}

TaskVector apply(const TaskVector & theta_init, const CompressedArtifact & ca) {
    if (theta_init.group_count() != ca.tensors.size()) {
        raise(Errc::ShapeMismatch, "artifact has " + std::to_string(ca.tensors.size()) + " tensors, base has " +
                                       std::to_string(theta_init.group_count()) + " groups");
    }
    std::vector<ParamGroup> groups = theta_init.groups();
    for (std::size_t i = 0; i < groups.size(); ++i) {
        const auto & t = ca.tensors[i];
        auto & g       = groups[i];
        if (g.name != t.name || g.values.size() != t.dim) {
            raise(Errc::ShapeMismatch, "group '" + g.name + "' does not match artifact tensor '" + t.name + "'");
        }
        for (std::size_t j = 0; j < t.indices.size(); ++j) {
            g.values[t.indices[j]] += t.signs[j] > 0 ? t.scale : -t.scale;
        }
    }
    return TaskVector(std::move(groups));
}

} // namespace tvc
