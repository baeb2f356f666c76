// SPDX-License-Identifier: Apache-2.0
//
// Drives the tvc binary end to end and checks its files against the library.
#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <sys/wait.h>

#include "fixtures.hpp"
#include "tvc/artifact_io.hpp"
#include "tvc/compose.hpp"
#include "tvc/decompose.hpp"
#include "tvc/merge.hpp"
#include "tvc/sweep.hpp"

using namespace tvc;
using tvc::testing::ScratchDir;

namespace {

struct Run {
    int status = -1;
    std::string out;
};

Run tvc_cli(const std::string & args) {
    const std::string cmd = std::string(TVC_BIN) + " " + args + " 2>&1";
    Run r;
    FILE * pipe = ::popen(cmd.c_str(), "r");
    if (pipe == nullptr) return r;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    const int raw = ::pclose(pipe);
    r.status      = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return r;
}

std::string q(const std::filesystem::path & p) { return "'" + p.string() + "'"; }

TaskVector lora_like(std::mt19937_64 & rng) {
    return TaskVector({ParamGroup{"q.lora_A", {4, 8}, tvc::testing::normal_values(rng, 32)},
                       ParamGroup{"q.lora_B", {6, 4}, tvc::testing::normal_values(rng, 24)}});
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        std::mt19937_64 rng(91);
        init_ = lora_like(rng);
        ft_   = lora_like(rng);
        m2_   = lora_like(rng);
        save_container(init_, Dtype::f32, dir_ / "init.tvc");
        save_container(ft_, Dtype::f32, dir_ / "ft.tvc");
        save_container(m2_, Dtype::f32, dir_ / "m2.tvc");
    }

    ScratchDir dir_{"cli"};
    TaskVector init_{std::vector<ParamGroup>{ParamGroup{"x", {1}, {0}}}};
    TaskVector ft_   = init_;
    TaskVector m2_   = init_;
};

} // namespace

TEST_F(Cli, CompressionPipelineMatchesLibrary) {
    ASSERT_EQ(tvc_cli("diff " + q(dir_ / "ft.tvc") + " " + q(dir_ / "init.tvc") + " -o " + q(dir_ / "tau.tvc")).status, 0);
    const auto tau = task_vector(ft_, init_);
    EXPECT_EQ(load_container(dir_ / "tau.tvc"), tau);

    ASSERT_EQ(tvc_cli("compress " + q(dir_ / "tau.tvc") + " -k 20 --alpha 2 -o " + q(dir_ / "a.cpa")).status, 0);
    auto want               = compress(tau, 20, 2.0);
    want.source_fingerprint = fingerprint(tau);
    EXPECT_EQ(load_artifact(dir_ / "a.cpa"), want);

    ASSERT_EQ(tvc_cli("pack " + q(dir_ / "a.cpa") + " --format golomb -o " + q(dir_ / "a.cpt")).status, 0);
    EXPECT_EQ(read_file(dir_ / "a.cpt"), encode_golomb(want.tensors).bytes);
    const auto size = tvc_cli("size " + q(dir_ / "a.cpt"));
    ASSERT_EQ(size.status, 0);
    EXPECT_NE(size.out.find("payload_bits    " + std::to_string(measured_size_bits(encode_golomb(want.tensors)))),
              std::string::npos)
        << size.out;

    ASSERT_EQ(tvc_cli("pack " + q(dir_ / "a.cpa") + " --format bitmask -o " + q(dir_ / "a.bm")).status, 0);
    ASSERT_EQ(tvc_cli("unpack " + q(dir_ / "a.bm") + " -o " + q(dir_ / "b.cpa")).status, 0);
    EXPECT_EQ(load_artifact(dir_ / "b.cpa").tensors[0].indices, want.tensors[0].indices);

    ASSERT_EQ(tvc_cli("decompress " + q(dir_ / "a.cpa") + " -o " + q(dir_ / "rec.tvc")).status, 0);
    EXPECT_EQ(load_container(dir_ / "rec.tvc"), reconstruct(want));
    ASSERT_EQ(tvc_cli("apply " + q(dir_ / "init.tvc") + " " + q(dir_ / "a.cpa") + " -o " + q(dir_ / "out.tvc")).status, 0);
    EXPECT_EQ(load_container(dir_ / "out.tvc"), apply(init_, want));

    const auto sim = tvc_cli("similarity " + q(dir_ / "a.cpa") + " " + q(dir_ / "a.cpt"));
    ASSERT_EQ(sim.status, 0);
    EXPECT_NE(sim.out.find("sign_distance  0"), std::string::npos) << sim.out;
}

TEST_F(Cli, InspectAndStats) {
    const auto r = tvc_cli("inspect " + q(dir_ / "ft.tvc"));
    ASSERT_EQ(r.status, 0);
    EXPECT_NE(r.out.find("q.lora_A"), std::string::npos);
    EXPECT_NE(r.out.find("[6,4]"), std::string::npos);
    const auto s = tvc_cli("stats " + q(dir_ / "ft.tvc"));
    ASSERT_EQ(s.status, 0);
    EXPECT_NE(s.out.find("<pooled>"), std::string::npos);
}

TEST_F(Cli, MergeMatchesLibrary) {
    ASSERT_EQ(tvc_cli("merge --method ties --trim 50 --lambda 0.5 " + q(dir_ / "ft.tvc") + " " + q(dir_ / "m2.tvc") +
                      " -o " + q(dir_ / "m.tvc"))
                  .status,
              0);
    const std::vector<TaskVector> taus{ft_, m2_};
    EXPECT_EQ(load_container(dir_ / "m.tvc"), merge_ties(taus, 0.5, 50));
    EXPECT_EQ(tvc_cli("merge --method median " + q(dir_ / "ft.tvc") + " -o " + q(dir_ / "x.tvc")).status == 0, false);
}

TEST_F(Cli, ComposeWithWeightsFile) {
    std::ofstream(dir_ / "w.json") << "[0.5, 0.7]";
    ASSERT_EQ(tvc_cli("compose --weights " + q(dir_ / "w.json") + " " + q(dir_ / "ft.tvc") + " " + q(dir_ / "m2.tvc") +
                      " -o " + q(dir_ / "c.tvc"))
                  .status,
              0);
    const std::vector<LowRankModule> mods{low_rank_from_task_vector(ft_), low_rank_from_task_vector(m2_)};
    EXPECT_EQ(load_container(dir_ / "c.tvc"), to_task_vector(compose_modules(mods, ComposeWeights{{0.5, 0.7}})));
}

TEST_F(Cli, ComposeOptWithExternalLoss) {
    const std::string loss = "\"awk -F'[][,]' '{s=0; for(i=2;i<NF;i++){d=\\$i-0.5; s+=d*d}; print s}'\"";
    const auto r = tvc_cli("compose-opt --budget 60 --seed 3 --loss-cmd " + loss + " " + q(dir_ / "ft.tvc") + " " +
                           q(dir_ / "m2.tvc") + " -o " + q(dir_ / "w.json"));
    ASSERT_EQ(r.status, 0) << r.out;
    std::ifstream in(dir_ / "w.json");
    std::stringstream ss;
    ss << in.rdbuf();
    EXPECT_NE(ss.str().find("\"evaluations\": 60"), std::string::npos) << ss.str();
    EXPECT_NE(ss.str().find("\"weights\""), std::string::npos);
}

TEST_F(Cli, SweepWritesFullGrid) {
    save_container(task_vector(ft_, init_), Dtype::f32, dir_ / "tau.tvc");
    ASSERT_EQ(tvc_cli("sweep " + q(dir_ / "tau.tvc") + " -o " + q(dir_ / "s.csv")).status, 0);
    std::ifstream in(dir_ / "s.csv");
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "k,alpha,score,size_bits");
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 45u);
}

TEST_F(Cli, RecommendAlphaAndBench) {
    EXPECT_NE(tvc_cli("recommend-alpha --params 13e9 -k 20").out.find("alpha 1"), std::string::npos);
    EXPECT_NE(tvc_cli("recommend-alpha --params 3e9 -k 5").out.find("sweep required"), std::string::npos);
    const auto b = tvc_cli("bench " + q(dir_ / "ft.tvc") + " --trials 2");
    ASSERT_EQ(b.status, 0);
    EXPECT_NE(b.out.find("container"), std::string::npos);
}

TEST_F(Cli, LibraryErrorsExitWithTwo) {
    std::ofstream(dir_ / "bad.tvc") << "garbage";
    const auto r = tvc_cli("inspect " + q(dir_ / "bad.tvc"));
    EXPECT_EQ(r.status, 2);
    EXPECT_NE(r.out.find("ManifestCorrupt"), std::string::npos);
}
