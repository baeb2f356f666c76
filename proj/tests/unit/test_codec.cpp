// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "expect_error.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "tvc/codec.hpp"

using namespace tvc;
using tvc::testing::code_of;
using tvc::testing::make_tensor;

namespace {

// Offset of the first payload byte for a single-tensor blob named `name`.
std::size_t payload_offset(const std::string & name, BlobFormat format) {
    return 10 + 4 + name.size() + 8 + 8 + 4 + (format == BlobFormat::golomb ? 1 : 0);
}

TernaryTensor random_tensor(std::mt19937_64 & rng, std::uint64_t dim, double density, const std::string & name) {
    auto nnz = static_cast<std::uint64_t>(std::llround(density * static_cast<double>(dim)));
    nnz      = std::min(nnz, dim);
    std::vector<std::uint64_t> idx;
    std::vector<std::int8_t> sg;
    oracle::random_support(rng, dim, nnz, idx, sg);
    std::uniform_real_distribution<float> scale(0.0f, 2.0f);
    return make_tensor(name, dim, std::move(idx), std::move(sg), scale(rng));
}

} // namespace

TEST(Codec, EntropyClosedForms) {
    EXPECT_DOUBLE_EQ(entropy_bits(1.0, 10), 26.0);
    EXPECT_NEAR(entropy_bits_per_param(0.05), 0.3364, 0.0005);
    EXPECT_NEAR(entropy_bits(0.05, 1000000) - 16.0, 0.3364e6, 0.005e6);
    EXPECT_NEAR(16.0 / entropy_bits_per_param(0.05), 47.0, 1.0);
    EXPECT_EQ(code_of([] { entropy_bits(0.0, 10); }), Errc::DomainError);
    EXPECT_EQ(code_of([] { entropy_bits(1.5, 10); }), Errc::DomainError);
}

TEST(Codec, EntropyBelowTwoBitsEverywhere) {
    for (int i = 1; i < 10000; ++i) {
        const double k = i / 10000.0;
        ASSERT_LT(entropy_bits_per_param(k), 2.0) << k;
    }
}

TEST(Codec, GolombParameterFormula) {
    const auto p05 = golomb_params(0.05);
    EXPECT_EQ(p05.b_star, 4u);
    EXPECT_NEAR(p05.avg_bits_per_pos, 4.0 + 1.0 / (1.0 - std::pow(0.95, 16)), 1e-12);
    EXPECT_NEAR(p05.avg_bits_per_pos, 5.786, 0.0005);
    EXPECT_EQ(golomb_params(0.01).b_star, 6u);
    EXPECT_EQ(golomb_params(0.2).b_star, 2u);
    EXPECT_EQ(golomb_params(0.5).b_star, 1u);
    EXPECT_EQ(golomb_params(0.9).b_star, 1u);
    EXPECT_EQ(code_of([] { golomb_params(0.0); }), Errc::DomainError);
    EXPECT_EQ(code_of([] { golomb_params(1.0); }), Errc::DomainError);

    const double phi = (std::sqrt(5.0) + 1.0) / 2.0;
    for (double p : {0.001, 0.003, 0.02, 0.1, 0.3}) {
        const int want = 1 + static_cast<int>(std::floor(std::log2(std::log(phi - 1.0) / std::log(1.0 - p))));
        EXPECT_EQ(golomb_params(p).b_star, static_cast<unsigned>(std::max(1, want))) << p;
    }
}

TEST(Codec, RiceParameterFollowsDensity) {
    EXPECT_EQ(rice_parameter(2, 8), golomb_params(0.25).b_star);
    EXPECT_EQ(rice_parameter(5, 100), 4u);
    EXPECT_EQ(rice_parameter(8, 8), 1u);
}

TEST(Codec, GolombHandExample) {
    const auto t    = make_tensor("w", 8, {0, 5}, {1, -1}, 0.5f);
    const auto blob = encode_golomb(t);
    // p = 0.25 gives b = 1: gap 0 -> "0" "0" sign "1"; gap 4 -> "110" "0" sign "0"
    ASSERT_EQ(rice_parameter(2, 8), 1u);
    const auto bits = oracle::golomb_bits({0, 5}, {1, -1}, 1);
    EXPECT_EQ(bits.bits, "00111000");
    EXPECT_EQ(measured_size_bits(blob), 8u);
    EXPECT_EQ(accounted_size_bits(blob), 24u);
    ASSERT_EQ(blob.bytes.size(), payload_offset("w", BlobFormat::golomb) + 1);
    EXPECT_EQ(blob.bytes.back(), 0x38);
    EXPECT_EQ(decode(blob), std::vector<TernaryTensor>{t});
}

TEST(Codec, GolombMatchesStraightLineWriter) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 300; ++trial) {
        std::uniform_int_distribution<std::uint64_t> dim_dist(1, 5000);
        const auto dim = dim_dist(rng);
        const auto t   = random_tensor(rng, dim, std::uniform_real_distribution<double>(0.0, 1.0)(rng), "t");
        const auto blob = encode_golomb(t);
        auto bits = oracle::golomb_bits(t.indices, t.signs, rice_parameter(t.nonzeros(), t.dim));
        ASSERT_EQ(measured_size_bits(blob), bits.bits.size());
        bits.pad();
        const auto want = bits.bytes();
        const std::size_t off = payload_offset("t", BlobFormat::golomb);
        ASSERT_EQ(blob.bytes.size(), off + want.size());
        ASSERT_TRUE(std::equal(want.begin(), want.end(), blob.bytes.begin() + static_cast<std::ptrdiff_t>(off)));
    }
}

TEST(Codec, EmptyTensorHasNoPayload) {
    const auto t = make_tensor("z", 100, {}, {}, 1.0f);
    const auto g = encode_golomb(t);
    EXPECT_EQ(measured_size_bits(g), 0u);
    EXPECT_EQ(g.bytes.size(), payload_offset("z", BlobFormat::golomb));
    EXPECT_EQ(decode(g), std::vector<TernaryTensor>{t});

    const auto m = encode_bitmask(t);
    EXPECT_EQ(measured_size_bits(m), 200u);
    for (std::size_t i = payload_offset("z", BlobFormat::bitmask); i < m.bytes.size(); ++i) EXPECT_EQ(m.bytes[i], 0);
    EXPECT_EQ(decode(m), std::vector<TernaryTensor>{t});
}

TEST(Codec, BitmaskExample) {
    const auto t    = make_tensor("w", 4, {1, 2}, {1, -1}, 0.25f);
    const auto blob = encode_bitmask(t);
    const auto off  = payload_offset("w", BlobFormat::bitmask);
    ASSERT_EQ(blob.bytes.size(), off + 2);
    EXPECT_EQ(blob.bytes[off], 0x40);      // 0100
    EXPECT_EQ(blob.bytes[off + 1], 0x20);  // 0010
    EXPECT_EQ(measured_size_bits(blob), 8u);
    EXPECT_EQ(accounted_size_bits(blob), 2u * 4u + 16u);
    EXPECT_EQ(decode(blob), std::vector<TernaryTensor>{t});
}

TEST(Codec, RoundTripBothFormats) {
    std::mt19937_64 rng(22);
    for (std::uint64_t dim : {1u, 2u, 63u, 64u, 65u, 1000u}) {
        for (int trial = 0; trial < 60; ++trial) {
            const double density = trial == 0 ? 1.0 : std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            const std::vector<TernaryTensor> ts{random_tensor(rng, dim, density, "a"),
                                                random_tensor(rng, dim + 3, density / 2, "b")};
            ASSERT_EQ(decode(encode_golomb(ts)), ts);
            ASSERT_EQ(decode(encode_bitmask(ts)), ts);
        }
    }
}

TEST(Codec, GolombBeatsBitmaskAtFivePercent) {
    std::mt19937_64 rng(23);
    const auto t = random_tensor(rng, 100000, 0.05, "w");
    EXPECT_LT(measured_size_bits(encode_golomb(t)), measured_size_bits(encode_bitmask(t)));
    const auto s = summarize(encode_golomb(t));
    EXPECT_EQ(s.tensors, 1u);
    EXPECT_EQ(s.dim, 100000u);
    EXPECT_EQ(s.nonzeros, 5000u);
}

TEST(Codec, CorruptHeaders) {
    const auto t = make_tensor("w", 8, {0, 5}, {1, -1}, 0.5f);
    auto bytes   = encode_golomb(t).bytes;

    auto bad_magic = bytes;
    bad_magic[0]   = 'X';
    EXPECT_EQ(code_of([&] { parse_blob(bad_magic); }), Errc::HeaderMismatch);

    auto bad_version = bytes;
    bad_version[4]   = 9;
    EXPECT_EQ(code_of([&] { parse_blob(bad_version); }), Errc::HeaderMismatch);

    // nonzeros field (after name and dim) larger than dim
    auto bad_nnz = bytes;
    bad_nnz[10 + 4 + 1 + 8] = 9;
    EXPECT_EQ(code_of([&] { decode(parse_blob(bad_nnz)); }), Errc::HeaderMismatch);

    EXPECT_EQ(code_of([&] { decode_bitmask(parse_blob(bytes)); }), Errc::HeaderMismatch);
}

TEST(Codec, CorruptPayloads) {
    const auto t = make_tensor("w", 8, {0, 5}, {1, -1}, 0.5f);
    const auto good = encode_golomb(t).bytes;

    auto truncated = good;
    truncated.pop_back();
    EXPECT_EQ(code_of([&] { decode(parse_blob(truncated)); }), Errc::BitstreamCorrupt);

    auto trailing = good;
    trailing.push_back(0);
    EXPECT_EQ(code_of([&] { decode(parse_blob(trailing)); }), Errc::BitstreamCorrupt);

    // a long unary run pushes the second index past dim
    auto overrun   = good;
    overrun.back() = 0x3e;  // 001 11110 -> second quotient >= 4
    EXPECT_EQ(code_of([&] { decode(parse_blob(overrun)); }), Errc::BitstreamCorrupt);

    auto padding = encode_golomb(make_tensor("w", 8, {0}, {1}, 0.5f)).bytes;
    padding.back() |= 0x01;
    EXPECT_EQ(code_of([&] { decode(parse_blob(padding)); }), Errc::BitstreamCorrupt);
}

TEST(Codec, OverlappingMasksAreRejected) {
    auto bytes = encode_bitmask(make_tensor("w", 4, {1, 2}, {1, -1}, 0.25f)).bytes;
    bytes.back() |= 0x40;  // index 1 now in both masks
    EXPECT_EQ(code_of([&] { decode(parse_blob(bytes)); }), Errc::MaskOverlap);
}

TEST(Codec, LongUnaryRunsRoundTrip) {
    // half the entries set up front, then one far away: b = 1 and a quotient of ~2500
    std::vector<std::uint64_t> idx;
    std::vector<std::int8_t> sg;
    for (std::uint64_t i = 0; i < 5000; ++i) {
        idx.push_back(i);
        sg.push_back(i % 3 ? 1 : -1);
    }
    idx.push_back(9999);
    sg.push_back(-1);
    const auto t    = make_tensor("w", 10000, idx, sg, 1.0f);
    const auto blob = encode_golomb(t);
    auto bits       = oracle::golomb_bits(idx, sg, rice_parameter(t.nonzeros(), t.dim));
    EXPECT_EQ(measured_size_bits(blob), bits.bits.size());
    EXPECT_EQ(decode(blob), std::vector<TernaryTensor>{t});
}

TEST(Codec, WideRiceParameterRoundTrips) {
    // density 2^-58 pushes b past the single-codeword width
    const std::uint64_t dim = std::uint64_t{1} << 59;
    const auto t = make_tensor("huge", dim, {123456789012345ull, dim - 1}, {1, -1}, 0.5f);
    const unsigned b = rice_parameter(2, dim);
    EXPECT_GE(b, 56u);
    const auto blob = encode_golomb(t);
    auto bits       = oracle::golomb_bits(t.indices, t.signs, b);
    EXPECT_EQ(measured_size_bits(blob), bits.bits.size());
    bits.pad();
    const auto want = bits.bytes();
    EXPECT_TRUE(std::equal(want.begin(), want.end(), blob.bytes.end() - static_cast<std::ptrdiff_t>(want.size())));
    EXPECT_EQ(decode(blob), std::vector<TernaryTensor>{t});
}
