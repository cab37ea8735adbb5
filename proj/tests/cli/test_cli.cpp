#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "damseg/csv.hpp"
#include "damseg_cli/commands.hpp"
#include "damseg_cli/config_file.hpp"

using namespace damseg;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code = -1;
    std::string out;
    std::string err;
};

Outcome invoke(std::vector<std::string> args) {
    std::ostringstream out, err;
    Outcome o;
    o.code = cli::run(args, out, err);
    o.out = out.str();
    o.err = err.str();
    return o;
}

CsvTable parse(const std::string& text) {
    std::istringstream in(text);
    return read_csv(in);
}

class TempDir {
public:
    TempDir() {
        path_ = fs::temp_directory_path() /
                ("damseg_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
                 ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    std::string file(const std::string& name, const std::string& contents = {}) const {
        const auto p = (path_ / name).string();
        if (!contents.empty()) std::ofstream(p) << contents;
        return p;
    }

private:
    fs::path path_;
};

const std::vector<std::string> kTinyModel = {"--image-size", "8",  "--patch-size",   "4", "--embed-dim", "8",
                                             "--blocks",     "1",  "--heads",        "2", "--memory-slots", "2",
                                             "--batch",      "4"};

std::vector<std::string> with(std::vector<std::string> base, const std::vector<std::string>& extra) {
    base.insert(base.end(), extra.begin(), extra.end());
    return base;
}

}  // namespace

TEST(CliCapacity, SinglePatternNoCorruption) {
    auto o = invoke({"capacity", "--interaction", "poly2", "--n", "64", "--k", "1", "--trials", "50",
                     "--corruption", "0"});
    ASSERT_EQ(o.code, 0) << o.err;
    auto t = parse(o.out);
    ASSERT_EQ(t.rows.size(), 1u);
    EXPECT_EQ(t.number(0, "recovery_rate"), 1.0);
    EXPECT_EQ(t.header, (std::vector<std::string>{"interaction", "N", "K", "corruption", "trials", "recovery_rate"}));
}

TEST(CliCapacity, ExponentialAtLeastCubicAtEqualK) {
    const std::vector<std::string> common = {"--n", "64", "--k", "40,80,120", "--trials", "50", "--seed", "3"};
    auto cubic = invoke(with({"capacity", "--interaction", "poly3"}, common));
    auto expo = invoke(with({"capacity", "--interaction", "exp"}, common));
    ASSERT_EQ(cubic.code, 0);
    ASSERT_EQ(expo.code, 0);
    auto a = parse(cubic.out), b = parse(expo.out);
    for (std::size_t r = 0; r < a.rows.size(); ++r) {
        EXPECT_GE(b.number(r, "recovery_rate"), a.number(r, "recovery_rate"));
    }
}

TEST(CliCapacity, MissingNIsUsageError) {
    auto o = invoke({"capacity", "--k", "1"});
    EXPECT_EQ(o.code, 2);
    EXPECT_NE(o.err.find("--n"), std::string::npos);
}

TEST(CliCapacity, ModulePreconditionsAreUsageErrors) {
    EXPECT_EQ(invoke({"capacity", "--n", "300", "--k", "1"}).code, 2);
    EXPECT_EQ(invoke({"capacity", "--n", "64", "--k", "1", "--trials", "10"}).code, 2);
    EXPECT_EQ(invoke({"capacity", "--n", "64", "--k", "1", "--interaction", "poly1"}).code, 2);
    EXPECT_EQ(invoke({"capacity", "--n", "sixty", "--k", "1"}).code, 2);
}

TEST(CliGradcheck, DamForwardPasses) {
    auto o = invoke({"gradcheck", "--target", "dam_forward", "--seed", "7"});
    ASSERT_EQ(o.code, 0) << o.err;
    auto t = parse(o.out);
    EXPECT_LT(t.number(0, "max_rel_err"), 1e-5);
}

TEST(CliGradcheck, EnergyContinuousPasses) {
    auto o = invoke({"gradcheck", "--target", "energy_continuous"});
    ASSERT_EQ(o.code, 0) << o.err;
    EXPECT_LT(parse(o.out).number(0, "max_rel_err"), 1e-5);
}

TEST(CliGradcheck, UnknownTargetListsTargets) {
    auto o = invoke({"gradcheck", "--target", "nope"});
    EXPECT_EQ(o.code, 2);
    for (const char* name : {"matmul", "softmax_rows", "energy_continuous", "dam_forward", "seg_loss"}) {
        EXPECT_NE(o.err.find(name), std::string::npos) << name;
    }
}

TEST(CliGradcheck, BadEpsIsUsageError) {
    EXPECT_EQ(invoke({"gradcheck", "--target", "matmul", "--eps", "0.1"}).code, 2);
}

TEST(CliTrain, OneEpochSmoke) {
    TempDir dir;
    const auto ckpt = dir.file("model.damw");
    auto o = invoke({"train", "--epochs", "1", "--samples", "8", "--checkpoint", ckpt, "--memory-weights",
                     dir.file("mem_")});
    ASSERT_EQ(o.code, 0) << o.err;
    auto t = parse(o.out);
    ASSERT_EQ(t.rows.size(), 1u);
    EXPECT_TRUE(fs::exists(ckpt));
    EXPECT_TRUE(fs::exists(dir.file("mem_0.damw")));
    EXPECT_TRUE(fs::exists(dir.file("mem_3.damw")));
}

TEST(CliTrain, ValidationErrors) {
    EXPECT_EQ(invoke(with({"train", "--memory", "maybe"}, kTinyModel)).code, 2);
    EXPECT_EQ(invoke(with({"train", "--occlusion", "1.5"}, kTinyModel)).code, 2);
    EXPECT_EQ(invoke({"train", "--image-size", "10", "--patch-size", "4"}).code, 2);
    EXPECT_EQ(invoke({"train", "--epochs", "3", "--patience", "9"}).code, 2);
}

TEST(CliTrain, WritesToOutPath) {
    TempDir dir;
    const auto path = dir.file("run.csv");
    auto o = invoke(with({"train", "--epochs", "2", "--samples", "6", "--out", path}, kTinyModel));
    ASSERT_EQ(o.code, 0) << o.err;
    EXPECT_TRUE(o.out.empty());
    EXPECT_EQ(read_csv_file(path).rows.size(), 2u);
}

TEST(CliTrain, UnwritableOutputIsRuntimeFailure) {
    auto o = invoke(with({"train", "--epochs", "1", "--samples", "4", "--out", "/nonexistent/dir/run.csv"},
                         kTinyModel));
    EXPECT_EQ(o.code, 1);
}

TEST(CliAblate, SixRowsForThreeSeeds) {
    auto o = invoke(with({"ablate", "--occlusion", "0.4", "--seeds", "3", "--epochs", "1", "--samples", "4",
                          "--test-samples", "2"},
                         kTinyModel));
    ASSERT_EQ(o.code, 0) << o.err;
    EXPECT_EQ(parse(o.out).rows.size(), 6u);
    EXPECT_NE(o.err.find("occlusion 0.4"), std::string::npos);
}

TEST(CliAblate, FewerThanThreeSeedsRejected) {
    EXPECT_EQ(invoke(with({"ablate", "--seeds", "2", "--epochs", "1"}, kTinyModel)).code, 2);
}

TEST(CliCensus, TinyBetaSingleAttractor) {
    auto o = invoke({"census", "--beta", "0.0001"});
    ASSERT_EQ(o.code, 0) << o.err;
    EXPECT_EQ(parse(o.out).rows.size(), 1u);
}

TEST(CliCensus, ThreeWellSeparatedPatterns) {
    auto o = invoke({"census", "--beta", "32", "--patterns", "well_separated_3"});
    ASSERT_EQ(o.code, 0) << o.err;
    auto t = parse(o.out);
    ASSERT_EQ(t.rows.size(), 3u);
    double basins = 0;
    for (std::size_t r = 0; r < 3; ++r) basins += t.number(r, "basin_count");
    EXPECT_EQ(basins, 60.0);
}

TEST(CliCensus, PatternFileColumnsAreRead) {
    TempDir dir;
    const auto path = dir.file("patterns.txt", "# two patterns in 3-d\n1 0 0\n\n0 0 -2\n");
    auto o = invoke({"census", "--beta", "50", "--patterns", path, "--noise", "0.05"});
    ASSERT_EQ(o.code, 0) << o.err;
    auto t = parse(o.out);
    ASSERT_EQ(t.rows.size(), 2u);
}

TEST(CliCensus, MalformedPatternFileNamesLine) {
    TempDir dir;
    const auto path = dir.file("bad.txt", "1 0 0\n0 1 0\n0 x 1\n");
    auto o = invoke({"census", "--beta", "1", "--patterns", path});
    EXPECT_EQ(o.code, 2);
    EXPECT_NE(o.err.find(":3:"), std::string::npos) << o.err;

    const auto ragged = dir.file("ragged.txt", "1 0 0\n0 1\n");
    auto r = invoke({"census", "--beta", "1", "--patterns", ragged});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find(":2:"), std::string::npos) << r.err;
}

TEST(CliCensus, BetaRequiredAndPositive) {
    EXPECT_EQ(invoke({"census"}).code, 2);
    EXPECT_EQ(invoke({"census", "--beta", "0"}).code, 2);
}

TEST(Cli, NoSubcommandIsUsageError) {
    EXPECT_EQ(invoke({}).code, 2);
    EXPECT_EQ(invoke({"frobnicate"}).code, 2);
}

TEST(Cli, HelpExitsZero) {
    auto o = invoke({"--help"});
    EXPECT_EQ(o.code, 0);
    EXPECT_NE(o.out.find("capacity"), std::string::npos);
}

TEST(Cli, EveryCommandDeterministicGivenSeed) {
    const std::vector<std::vector<std::string>> commands = {
        {"capacity", "--interaction", "exp", "--n", "32", "--k", "4,16", "--trials", "50", "--seed", "4"},
        {"gradcheck", "--target", "softmax_rows", "--seed", "4"},
        with({"train", "--epochs", "2", "--samples", "6", "--seed", "4"}, kTinyModel),
        with({"ablate", "--epochs", "1", "--samples", "4", "--test-samples", "2", "--seed", "4"}, kTinyModel),
        {"census", "--beta", "8", "--seed", "4"},
    };
    for (const auto& cmd : commands) {
        auto a = invoke(cmd), b = invoke(cmd);
        ASSERT_EQ(a.code, 0) << cmd[0] << ": " << a.err;
        EXPECT_EQ(a.out, b.out) << cmd[0];
    }
}

TEST(Cli, CsvOutputsRoundTrip) {
    for (const auto& cmd : std::vector<std::vector<std::string>>{
             {"capacity", "--n", "16", "--k", "1,2,3", "--trials", "50"},
             {"gradcheck", "--target", "matmul"},
             {"census", "--beta", "4"},
         }) {
        auto o = invoke(cmd);
        ASSERT_EQ(o.code, 0);
        EXPECT_EQ(to_csv_string(parse(o.out)), o.out) << cmd[0];
    }
}

TEST(Cli, SeedDefaultsToEnvironment) {
    const std::vector<std::string> cmd = {"capacity", "--n", "32", "--k", "8", "--trials", "50"};
    ::setenv("DAM_SEED", "17", 1);
    auto from_env = invoke(cmd);
    ::unsetenv("DAM_SEED");
    auto explicit_seed = invoke(with(cmd, {"--seed", "17"}));
    ASSERT_EQ(from_env.code, 0);
    EXPECT_EQ(from_env.out, explicit_seed.out);
    ::setenv("DAM_SEED", "abc", 1);
    EXPECT_EQ(invoke(cmd).code, 2);
    ::unsetenv("DAM_SEED");
}

TEST(CliConfig, FileValuesApplyAndFlagsOverride) {
    TempDir dir;
    const auto cfg = dir.file("exp.cfg", "# capacity run\ninteraction = poly3\nn = 32\nk = 2,4\ntrials = 50\nseed = 5\n");
    auto from_file = invoke({"capacity", "--config", cfg});
    ASSERT_EQ(from_file.code, 0) << from_file.err;
    auto t = parse(from_file.out);
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_EQ(t.rows[0][0], "poly3");
    EXPECT_EQ(from_file.out, invoke({"capacity", "--interaction", "poly3", "--n", "32", "--k", "2,4", "--trials",
                                     "50", "--seed", "5"})
                                 .out);

    auto overridden = invoke({"capacity", "--config", cfg, "--interaction", "exp", "--k", "3"});
    ASSERT_EQ(overridden.code, 0) << overridden.err;
    auto o = parse(overridden.out);
    ASSERT_EQ(o.rows.size(), 1u);
    EXPECT_EQ(o.rows[0][0], "exp");
    EXPECT_EQ(o.rows[0][2], "3");
}

TEST(CliConfig, UnderscoreKeysMapToFlags) {
    TempDir dir;
    const auto cfg = dir.file("c.cfg", "max_sweeps = 3\nn = 16\nk = 1\ntrials = 50\n");
    EXPECT_EQ(invoke({"capacity", "--config", cfg}).code, 0);
}

TEST(CliConfig, MalformedFileIsUsageError) {
    TempDir dir;
    const auto cfg = dir.file("bad.cfg", "n = 16\njust words\n");
    auto o = invoke({"capacity", "--config", cfg});
    EXPECT_EQ(o.code, 2);
    EXPECT_NE(o.err.find(":2:"), std::string::npos) << o.err;
    EXPECT_EQ(invoke({"capacity", "--config", dir.file("missing.cfg")}).code, 2);
}

TEST(CliConfig, ReaderParsesCommentsAndSpacing) {
    TempDir dir;
    const auto cfg = dir.file("x.cfg", "  a=1  \n# full comment\nb = two words # trailing\n");
    auto entries = cli::read_config_file(cfg);
    ASSERT_EQ(entries.size(), 2u);
    EXPECT_EQ(entries[0], (std::pair<std::string, std::string>{"a", "1"}));
    EXPECT_EQ(entries[1], (std::pair<std::string, std::string>{"b", "two words"}));
}
