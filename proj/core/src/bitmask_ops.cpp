// SPDX-License-Identifier: Apache-2.0
#include "tvc/bitmask_ops.hpp"

#include <bit>
#include <cmath>

#include "tvc/error.hpp"

namespace tvc {

namespace {

void check_dims(const BitmaskPair & a, const BitmaskPair & b) {
    if (a.dim() != b.dim()) {
        raise(Errc::DimMismatch, "bitmask dims differ (" + std::to_string(a.dim()) + " vs " +
                                     std::to_string(b.dim()) + ")");
    }
}

struct OverlapCounts {
    std::uint64_t same = 0;  // both +1 or both -1
    std::uint64_t opposite = 0;
};

OverlapCounts overlap(const BitmaskPair & a, const BitmaskPair & b) {
    OverlapCounts c;
    const auto * ap = a.pos().data();
    const auto * an = a.neg().data();
    const auto * bp = b.pos().data();
    const auto * bn = b.neg().data();
    const std::size_t n = a.pos().size();
    for (std::size_t w = 0; w < n; ++w) {
        c.same += static_cast<std::uint64_t>(std::popcount(ap[w] & bp[w]) + std::popcount(an[w] & bn[w]));
        c.opposite += static_cast<std::uint64_t>(std::popcount(ap[w] & bn[w]) + std::popcount(an[w] & bp[w]));
    }
    return c;
}

} // namespace

BitmaskPair::BitmaskPair(std::uint64_t dim, std::vector<std::uint64_t> pos, std::vector<std::uint64_t> neg,
                         float scale)
    : dim_(dim), pos_(std::move(pos)), neg_(std::move(neg)), scale_(scale) {
    if (dim_ == 0) {
        raise(Errc::InvalidArgument, "bitmask dim must be positive");
    }
    if (pos_.size() != words_for(dim_) || neg_.size() != words_for(dim_)) {
        raise(Errc::InvalidArgument, "bitmask word count does not match dim");
    }
    if (!std::isfinite(scale_)) {
        raise(Errc::NonFiniteScale, "bitmask scale is not finite");
    }
    const unsigned tail = static_cast<unsigned>(dim_ % 64);
    if (tail != 0) {
        const std::uint64_t beyond = ~((std::uint64_t{1} << tail) - 1);
        if ((pos_.back() & beyond) != 0 || (neg_.back() & beyond) != 0) {
            raise(Errc::InvalidArgument, "bits set beyond dim");
        }
    }
    for (std::size_t w = 0; w < pos_.size(); ++w) {
        if ((pos_[w] & neg_[w]) != 0) {
            raise(Errc::MaskOverlap, "positive and negative masks overlap");
        }
    }
}

BitmaskPair BitmaskPair::from_tensor(const TernaryTensor & t) {
    validate(t);
    std::vector<std::uint64_t> pos(words_for(t.dim), 0);
    std::vector<std::uint64_t> neg(words_for(t.dim), 0);
    for (std::size_t j = 0; j < t.indices.size(); ++j) {
        const std::uint64_t i = t.indices[j];
        (t.signs[j] > 0 ? pos : neg)[i >> 6] |= std::uint64_t{1} << (i & 63);
    }
    return BitmaskPair(t.dim, std::move(pos), std::move(neg), t.scale);
}

std::uint64_t BitmaskPair::nonzeros() const noexcept {
    std::uint64_t n = 0;
    for (std::size_t w = 0; w < pos_.size(); ++w) {
        n += static_cast<std::uint64_t>(std::popcount(pos_[w]) + std::popcount(neg_[w]));
    }
    return n;
}

int BitmaskPair::sign_at(std::uint64_t i) const noexcept {
    const std::uint64_t bit = std::uint64_t{1} << (i & 63);
    if (pos_[i >> 6] & bit) return 1;
    if (neg_[i >> 6] & bit) return -1;
    return 0;
}

BitmaskPair BitmaskPair::negated() const {
    return BitmaskPair(dim_, neg_, pos_, scale_);
}

TernaryTensor BitmaskPair::to_tensor(std::string name) const {
    TernaryTensor t;
    t.name  = std::move(name);
    t.dim   = dim_;
    t.scale = scale_;
    t.shape = {dim_};
    for (std::size_t w = 0; w < pos_.size(); ++w) {
        std::uint64_t any = pos_[w] | neg_[w];
        while (any != 0) {
            const auto bit = static_cast<unsigned>(std::countr_zero(any));
            t.indices.push_back(w * 64 + bit);
            t.signs.push_back((pos_[w] >> bit) & 1u ? std::int8_t{1} : std::int8_t{-1});
            any &= any - 1;
        }
    }
    return t;
}

std::vector<float> BitmaskPair::to_dense() const {
    std::vector<float> out(static_cast<std::size_t>(dim_), 0.0f);
    for (std::size_t w = 0; w < pos_.size(); ++w) {
        for (std::uint64_t m = pos_[w]; m != 0; m &= m - 1) {
            out[w * 64 + static_cast<unsigned>(std::countr_zero(m))] = scale_;
        }
        for (std::uint64_t m = neg_[w]; m != 0; m &= m - 1) {
            out[w * 64 + static_cast<unsigned>(std::countr_zero(m))] = -scale_;
        }
    }
    return out;
}

double dot(const BitmaskPair & a, const BitmaskPair & b) {
    check_dims(a, b);
    const auto c = overlap(a, b);
    const auto net = static_cast<double>(static_cast<std::int64_t>(c.same) - static_cast<std::int64_t>(c.opposite));
    // the product of two floats is exact in double, so only one rounding happens
    return static_cast<double>(a.scale()) * static_cast<double>(b.scale()) * net;
}

std::uint64_t sign_distance(const BitmaskPair & a, const BitmaskPair & b) {
    check_dims(a, b);
    std::uint64_t d = 0;
    for (std::size_t w = 0; w < a.pos().size(); ++w) {
        d += static_cast<std::uint64_t>(std::popcount(a.pos()[w] ^ b.pos()[w]) +
                                        std::popcount(a.neg()[w] ^ b.neg()[w]));
    }
    return d;
}

double scaled_l2_distance(const BitmaskPair & a, const BitmaskPair & b) {
    check_dims(a, b);
    const auto c = overlap(a, b);
    const std::uint64_t only_a = a.nonzeros() - c.same - c.opposite;
    const std::uint64_t only_b = b.nonzeros() - c.same - c.opposite;

    // Splitting by coordinate class keeps every term non-negative, which
    // avoids the cancellation in |a|^2 + |b|^2 - 2<a,b>.
    const long double sa = a.scale();
    const long double sb = b.scale();
    const long double sq = static_cast<long double>(only_a) * sa * sa + static_cast<long double>(only_b) * sb * sb +
                           static_cast<long double>(c.same) * (sa - sb) * (sa - sb) +
                           static_cast<long double>(c.opposite) * (sa + sb) * (sa + sb);
    return static_cast<double>(std::sqrt(sq));
}

void accumulate_into(std::span<const BitmaskPair> items, std::span<double> out) {
    for (const auto & v : items) {
        if (v.dim() != out.size()) {
            raise(Errc::DimMismatch, "accumulate input has dim " + std::to_string(v.dim()) + ", expected " +
                                         std::to_string(out.size()));
        }
    }
    for (const auto & v : items) {
        const double s = v.scale();
        for (std::size_t w = 0; w < v.pos().size(); ++w) {
            for (std::uint64_t m = v.pos()[w]; m != 0; m &= m - 1) {
                out[w * 64 + static_cast<unsigned>(std::countr_zero(m))] += s;
            }
            for (std::uint64_t m = v.neg()[w]; m != 0; m &= m - 1) {
                out[w * 64 + static_cast<unsigned>(std::countr_zero(m))] -= s;
            }
        }
    }
}

std::vector<float> accumulate(std::span<const BitmaskPair> items) {
    if (items.empty()) {
        raise(Errc::EmptyList, "accumulate needs at least one input");
    }
    std::vector<double> sum(static_cast<std::size_t>(items.front().dim()), 0.0);
    accumulate_into(items, sum);
    return std::vector<float>(sum.begin(), sum.end());
}

} // namespace tvc
