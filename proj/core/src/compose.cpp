// SPDX-License-Identifier: Apache-2.0
#include "tvc/compose.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <unordered_map>

#include "tvc/error.hpp"

namespace tvc {

namespace {

constexpr std::string_view kSuffixA = ".lora_A";
constexpr std::string_view kSuffixB = ".lora_B";

bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() > suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

Matrix to_matrix(const ParamGroup & g) {
    if (g.shape.size() != 2) {
        raise(Errc::ShapeMismatch, "group '" + g.name + "' must be two-dimensional");
    }
    Matrix m;
    m.rows = static_cast<std::size_t>(g.shape[0]);
    m.cols = static_cast<std::size_t>(g.shape[1]);
    m.data = g.values;
    return m;
}

void check_compatible(std::span<const LowRankModule> modules) {
    if (modules.empty()) {
        raise(Errc::EmptyList, "composition needs at least one module");
    }
    const auto & ref = modules[0];
    for (const auto & m : modules) {
        if (m.layers.size() != ref.layers.size()) {
            raise(Errc::ShapeMismatch, "modules have different layer counts");
        }
        if (m.rank() != ref.rank()) {
            raise(Errc::RankMismatch, "modules have ranks " + std::to_string(m.rank()) + " and " +
                                          std::to_string(ref.rank()));
        }
        for (std::size_t l = 0; l < ref.layers.size(); ++l) {
            const auto & x = m.layers[l];
            const auto & y = ref.layers[l];
            if (x.name != y.name) {
                raise(Errc::ShapeMismatch, "layer '" + x.name + "' vs '" + y.name + "'");
            }
            if (x.a.rows != y.a.rows || x.a.cols != y.a.cols || x.b.rows != y.b.rows || x.b.cols != y.b.cols) {
                raise(Errc::ShapeMismatch, "layer '" + x.name + "' has different shapes");
            }
        }
    }
}

Matrix weighted_sum(std::span<const LowRankModule> modules, std::span<const double> w, std::size_t layer, bool pick_a) {
    const Matrix & ref = pick_a ? modules[0].layers[layer].a : modules[0].layers[layer].b;
    std::vector<double> acc(ref.data.size(), 0.0);
    for (std::size_t i = 0; i < modules.size(); ++i) {
        const Matrix & m = pick_a ? modules[i].layers[layer].a : modules[i].layers[layer].b;
        for (std::size_t j = 0; j < acc.size(); ++j) {
            acc[j] += w[i] * static_cast<double>(m.data[j]);
        }
    }
    Matrix out(ref.rows, ref.cols);
    std::transform(acc.begin(), acc.end(), out.data.begin(), [](double v) { return static_cast<float>(v); });
    return out;
}

struct Exhausted {};

class BoundedNelderMead {
public:
    BoundedNelderMead(std::size_t n, const LossFn & loss, const OptimizeOptions & opt)
        : n_(n), loss_(loss), opt_(opt), rng_(opt.seed) {}

    OptimizeResult run() {
        std::vector<double> start(n_, 0.0);
        project(start);
        best_x_ = start;
        best_f_ = evaluate(start);

        try {
            std::vector<std::vector<double>> simplex{start};
            std::vector<double> values{best_f_};
            for (std::size_t i = 0; i < n_; ++i) {
                simplex.push_back(axis_point(start, i, opt_.initial_step));
                values.push_back(evaluate(simplex.back()));
            }
            iterate(simplex, values);
        } catch (const Exhausted &) {
        }

        OptimizeResult r;
        r.weights     = ComposeWeights{best_x_, opt_.lo, opt_.hi};
        r.loss        = best_f_;
        r.evaluations = evals_;
        r.restarts    = restarts_;
        return r;
    }

private:
    void project(std::vector<double> & x) const {
        for (auto & v : x) {
            v = std::clamp(v, opt_.lo, opt_.hi);
        }
    }

    // Steps along axis i, flipping direction when the box would swallow the move.
    std::vector<double> axis_point(const std::vector<double> & base, std::size_t i, double step) const {
        std::vector<double> x = base;
        x[i] = base[i] + step <= opt_.hi ? base[i] + step : base[i] - step;
        project(x);
        return x;
    }

    double evaluate(const std::vector<double> & x) {
        if (evals_ >= opt_.budget) {
            throw Exhausted{};
        }
        ++evals_;
        const double f = loss_(x);
        if (!std::isfinite(f)) {
            raise(Errc::LossNonFinite, "loss returned a non-finite value at evaluation " + std::to_string(evals_));
        }
        if (f < best_f_) {
            best_f_ = f;
            best_x_ = x;
        }
        return f;
    }

    std::vector<double> along(const std::vector<double> & c, const std::vector<double> & x, double t) const {
        std::vector<double> out(n_);
        for (std::size_t j = 0; j < n_; ++j) {
            out[j] = c[j] + t * (x[j] - c[j]);
        }
        project(out);
        return out;
    }

    bool collapsed(const std::vector<std::vector<double>> & simplex) const {
        double diameter = 0.0;
        for (std::size_t i = 1; i < simplex.size(); ++i) {
            for (std::size_t j = 0; j < n_; ++j) {
                diameter = std::max(diameter, std::fabs(simplex[i][j] - simplex[0][j]));
            }
        }
        return diameter < kCollapseTol;
    }

    void restart(std::vector<std::vector<double>> & simplex, std::vector<double> & values) {
        ++restarts_;
        std::uniform_real_distribution<double> scale(0.25, 1.0);
        std::bernoulli_distribution flip(0.5);
        const double step = opt_.initial_step * std::pow(0.5, static_cast<double>(std::min<std::size_t>(restarts_, 20)));
        simplex.assign(1, best_x_);
        values.assign(1, best_f_);
        for (std::size_t i = 0; i < n_; ++i) {
            const double s = step * scale(rng_) * (flip(rng_) ? -1.0 : 1.0);
            std::vector<double> x = best_x_;
            x[i] += s;
            if (x[i] < opt_.lo || x[i] > opt_.hi) {
                x[i] = best_x_[i] - s;
            }
            project(x);
            simplex.push_back(std::move(x));
            values.push_back(evaluate(simplex.back()));
        }
    }

    void iterate(std::vector<std::vector<double>> & simplex, std::vector<double> & values) {
        std::vector<std::size_t> order(simplex.size());
        for (;;) {
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
            {
                std::vector<std::vector<double>> s;
                std::vector<double> v;
                for (auto i : order) {
                    s.push_back(std::move(simplex[i]));
                    v.push_back(values[i]);
                }
                simplex = std::move(s);
                values  = std::move(v);
            }

            if (collapsed(simplex)) {
                restart(simplex, values);
                continue;
            }

            std::vector<double> centroid(n_, 0.0);
            for (std::size_t i = 0; i < n_; ++i) {
                for (std::size_t j = 0; j < n_; ++j) {
                    centroid[j] += simplex[i][j] / static_cast<double>(n_);
                }
            }
            const auto & worst = simplex[n_];

            auto reflected  = along(centroid, worst, -1.0);
            const double fr = evaluate(reflected);
            if (fr < values[0]) {
                auto expanded   = along(centroid, worst, -2.0);
                const double fe = evaluate(expanded);
                if (fe < fr) {
                    simplex[n_] = std::move(expanded);
                    values[n_]  = fe;
                } else {
                    simplex[n_] = std::move(reflected);
                    values[n_]  = fr;
                }
                continue;
            }
            if (fr < values[n_ - 1]) {
                simplex[n_] = std::move(reflected);
                values[n_]  = fr;
                continue;
            }
            const bool outside = fr < values[n_];
            auto contracted    = outside ? along(centroid, reflected, 0.5) : along(centroid, worst, 0.5);
            const double fc    = evaluate(contracted);
            if (fc < (outside ? fr : values[n_])) {
                simplex[n_] = std::move(contracted);
                values[n_]  = fc;
                continue;
            }
            for (std::size_t i = 1; i <= n_; ++i) {
                simplex[i] = along(simplex[0], simplex[i], 0.5);
                values[i]  = evaluate(simplex[i]);
            }
        }
    }

    static constexpr double kCollapseTol = 1e-9;

    std::size_t n_;
    const LossFn & loss_;
    OptimizeOptions opt_;
    std::mt19937_64 rng_;
    std::vector<double> best_x_;
    double best_f_ = std::numeric_limits<double>::infinity();
    std::size_t evals_    = 0;
    std::size_t restarts_ = 0;
};

} // namespace

Matrix matmul(const Matrix & lhs, const Matrix & rhs) {
    if (lhs.cols != rhs.rows) {
        raise(Errc::ShapeMismatch, "matmul of " + std::to_string(lhs.rows) + "x" + std::to_string(lhs.cols) +
                                       " by " + std::to_string(rhs.rows) + "x" + std::to_string(rhs.cols));
    }
    Matrix out(lhs.rows, rhs.cols);
    for (std::size_t i = 0; i < lhs.rows; ++i) {
        for (std::size_t j = 0; j < rhs.cols; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < lhs.cols; ++k) {
                acc += static_cast<double>(lhs(i, k)) * rhs(k, j);
            }
            out(i, j) = static_cast<float>(acc);
        }
    }
    return out;
}

LowRankModule low_rank_from_task_vector(const TaskVector & tv) {
    struct Pending {
        std::optional<Matrix> a;
        std::optional<Matrix> b;
    };
    std::vector<std::string> order;
    std::unordered_map<std::string, Pending> pending;
    for (const auto & g : tv.groups()) {
        const bool is_a = ends_with(g.name, kSuffixA);
        const bool is_b = ends_with(g.name, kSuffixB);
        if (!is_a && !is_b) {
            raise(Errc::InvalidArgument, "group '" + g.name + "' is not a .lora_A/.lora_B factor");
        }
        const std::string layer = g.name.substr(0, g.name.size() - kSuffixA.size());
        auto [it, inserted]     = pending.try_emplace(layer);
        if (inserted) {
            order.push_back(layer);
        }
        auto & slot = is_a ? it->second.a : it->second.b;
        if (slot) {
            raise(Errc::InvalidArgument, "duplicate factor for layer '" + layer + "'");
        }
        slot = to_matrix(g);
    }

    LowRankModule module;
    for (const auto & layer : order) {
        auto & p = pending[layer];
        if (!p.a || !p.b) {
            raise(Errc::InvalidArgument, "layer '" + layer + "' is missing a factor");
        }
        if (p.a->rows != p.b->cols) {
            raise(Errc::RankMismatch, "layer '" + layer + "' has A rank " + std::to_string(p.a->rows) +
                                          " but B rank " + std::to_string(p.b->cols));
        }
        if (!module.layers.empty() && p.a->rows != module.rank()) {
            raise(Errc::RankMismatch, "layer '" + layer + "' has a different rank from earlier layers");
        }
        module.layers.push_back(LowRankLayer{layer, std::move(*p.a), std::move(*p.b)});
    }
    if (module.layers.empty()) {
        raise(Errc::EmptyVector, "no low-rank layers found");
    }
    return module;
}

TaskVector to_task_vector(const LowRankModule & module) {
    std::vector<ParamGroup> groups;
    for (const auto & l : module.layers) {
        groups.push_back(ParamGroup{l.name + std::string(kSuffixA), {l.a.rows, l.a.cols}, l.a.data});
        groups.push_back(ParamGroup{l.name + std::string(kSuffixB), {l.b.rows, l.b.cols}, l.b.data});
    }
    return TaskVector(std::move(groups));
}

void ComposeWeights::clamp() {
    for (auto & v : w) {
        v = std::clamp(v, lo, hi);
    }
}

LowRankModule compose_modules(std::span<const LowRankModule> modules, const ComposeWeights & weights) {
    check_compatible(modules);
    if (weights.w.size() != modules.size()) {
        raise(Errc::InvalidArgument, "need one weight per module (" + std::to_string(modules.size()) + "), got " +
                                         std::to_string(weights.w.size()));
    }
    LowRankModule out;
    for (std::size_t l = 0; l < modules[0].layers.size(); ++l) {
        out.layers.push_back(LowRankLayer{modules[0].layers[l].name, weighted_sum(modules, weights.w, l, true),
                                          weighted_sum(modules, weights.w, l, false)});
    }
    return out;
}

LowRankModule compose_compressed(std::span<const CompressedArtifact> artifacts, const ComposeWeights & weights) {
    std::vector<LowRankModule> modules;
    modules.reserve(artifacts.size());
    for (const auto & ca : artifacts) {
        modules.push_back(low_rank_from_task_vector(reconstruct(ca)));
    }
    return compose_modules(modules, weights);
}

OptimizeResult optimize_weights(std::size_t n, const LossFn & loss, const OptimizeOptions & options) {
    if (n == 0) {
        raise(Errc::EmptyList, "nothing to optimize");
    }
    if (options.budget < n + 2) {
        raise(Errc::InvalidArgument, "budget must be at least n + 2 evaluations");
    }
    if (!(options.lo < options.hi) || !(options.initial_step > 0.0)) {
        raise(Errc::InvalidArgument, "invalid optimizer bounds or step");
    }
    return BoundedNelderMead(n, loss, options).run();
}

OptimizeResult optimize_weights(std::span<const LowRankModule> modules, const LossFn & loss,
                                const OptimizeOptions & options) {
    check_compatible(modules);
    return optimize_weights(modules.size(), loss, options);
}

} // namespace tvc
