// SPDX-License-Identifier: Apache-2.0
#include "tvc/sweep.hpp"

#include <cmath>
#include <limits>

#include "tvc/codec.hpp"
#include "tvc/error.hpp"

namespace tvc {

void validate(const SweepGrid & grid) {
    if (grid.k_values.empty() || grid.alpha_values.empty()) {
        raise(Errc::InvalidArgument, "sweep grid must be non-empty");
    }
    for (double k : grid.k_values) {
        if (!(k > 0.0 && k <= 100.0)) {
            raise(Errc::InvalidDensity, "grid density " + std::to_string(k) + " outside (0, 100]");
        }
    }
    for (double a : grid.alpha_values) {
        if (!(a > 0.0) || !std::isfinite(a)) {
            raise(Errc::InvalidAlpha, "grid alpha " + std::to_string(a) + " is not positive");
        }
    }
}

SweepResult run_sweep(const TaskVector & tau, const SweepGrid & grid, const Scorer & scorer, SigmaMode sigma_mode) {
    validate(grid);

    const StatsReport report = stats(tau);
    std::vector<double> sigma;
    for (const auto & g : report.groups) {
        sigma.push_back(sigma_mode == SigmaMode::pooled ? report.pooled.std : g.std);
    }
    const SignMagnitude sm   = sign_magnitude(tau);
    const std::uint64_t fp   = fingerprint(tau);

    SweepResult result;
    for (double k : grid.k_values) {
        // the support and its coded size depend on k only
        const auto sparse = sparsify_topk(sm, k);
        std::optional<std::uint64_t> size_bits;

        for (double alpha : grid.alpha_values) {
            SweepRow row{k, alpha, -std::numeric_limits<double>::infinity(), 0, {}};
            try {
                CompressedArtifact ca;
                ca.tensors = quantize(sparse, sigma, alpha);
                for (std::size_t i = 0; i < ca.tensors.size(); ++i) {
                    ca.tensors[i].shape = tau.groups()[i].shape;
                }
                ca.k_percent          = k;
                ca.alpha              = alpha;
                ca.source_fingerprint = fp;
                if (!size_bits) {
                    size_bits = measured_size_bits(encode_golomb(ca.tensors));
                }
                row.size_bits = *size_bits;
                const double score = scorer(ca);
                if (std::isnan(score)) {
                    row.error = "scorer returned NaN";
                } else {
                    row.score = score;
                }
            } catch (const std::exception & e) {
                row.error = e.what();
            }
            result.rows.push_back(std::move(row));
        }
    }

    for (std::size_t i = 1; i < result.rows.size(); ++i) {
        const auto & r = result.rows[i];
        const auto & b = result.rows[result.best];
        const bool better = r.score > b.score ||
                            (r.score == b.score && (r.size_bits < b.size_bits ||
                                                    (r.size_bits == b.size_bits && r.alpha < b.alpha)));
        if (better) {
            result.best = i;
        }
    }
    return result;
}

std::optional<double> recommend_alpha(std::uint64_t model_params, double k_percent) {
    if (model_params == 0) {
        raise(Errc::InvalidArgument, "model parameter count must be positive");
    }
    if (!(k_percent > 0.0 && k_percent <= 100.0)) {
        raise(Errc::InvalidDensity, "density must be in (0, 100]");
    }
    if (model_params >= 13'000'000'000ull && k_percent <= 20.0) {
        return 1.0;
    }
    return std::nullopt;
}

Scorer reconstruction_scorer(const TaskVector & tau) {
    return [&tau](const CompressedArtifact & ca) {
        if (ca.tensors.size() != tau.group_count()) {
            raise(Errc::ShapeMismatch, "artifact does not match the task vector");
        }
        double sq = 0.0;
        for (std::size_t gi = 0; gi < ca.tensors.size(); ++gi) {
            const auto & values = tau.groups()[gi].values;
            const auto & t      = ca.tensors[gi];
            if (t.dim != values.size()) {
                raise(Errc::ShapeMismatch, "tensor '" + t.name + "' does not match the task vector");
            }
            std::size_t j = 0;
            for (std::size_t i = 0; i < values.size(); ++i) {
                double r = 0.0;
                if (j < t.indices.size() && t.indices[j] == i) {
                    r = t.signs[j] > 0 ? t.scale : -t.scale;
                    ++j;
                }
                const double d = static_cast<double>(values[i]) - r;
                sq += d * d;
            }
        }
        return -std::sqrt(sq);
    };
}

} // namespace tvc
