#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "riskydates/cli.hpp"
#include "riskydates/error.hpp"

using namespace riskydates;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = RISKYDATES_SCENARIO_DIR;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("riskydates_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_file(const fs::path& dir, const std::string& name, const std::string& text) {
    const fs::path p = dir / name;
    std::ofstream(p) << text;
    return p;
}

std::string merton_with(const std::string& from, const std::string& to) {
    std::string text = slurp(kScenarios / "merton.scn");
    const auto at = text.find(from);
    EXPECT_NE(at, std::string::npos);
    text.replace(at, from.size(), to);
    return text;
}

}  // namespace

TEST(ScenarioIo, RoundTripBundledScenarios) {
    for (const auto& entry : fs::directory_iterator(kScenarios)) {
        if (entry.path().extension() != ".scn") continue;
        const ScenarioConfig cfg = load_scenario_file(entry.path().string());
        const ScenarioConfig again = parse_scenario(serialize_scenario(cfg), "roundtrip");
        EXPECT_EQ(cfg, again) << entry.path();
        EXPECT_NO_THROW(build_scenario(cfg)) << entry.path();
    }
}

TEST(ScenarioIo, UnknownKeyReportsPosition) {
    const std::string text = merton_with("  steps: 200\n", "  steps: 200\n  stpes: 3\n");
    try {
        parse_scenario(text, "bad.scn");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ParseError);
        EXPECT_NE(std::string(e.what()).find("bad.scn:9:3"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("stpes"), std::string::npos);
    }
}

TEST(ScenarioIo, WrongSchemaVersionRejected) {
    EXPECT_THROW(parse_scenario(merton_with("schema_version: 1", "schema_version: 2"), "v2"), Error);
}

TEST(CmdValidate, ExitCodes) {
    std::ostringstream out, err;
    EXPECT_EQ(cmd_validate((kScenarios / "merton.scn").string(), out, err), kExitOk);

    const fs::path dir = scratch("validate");
    const auto late = write_file(dir, "late.scn", merton_with("{date: 0.5, weight: 1}", "{date: 2.0, weight: 1}"));
    std::ostringstream out2, err2;
    EXPECT_EQ(cmd_validate(late.string(), out2, err2), kExitInvalid);
    EXPECT_NE(err2.str().find("NodeOutOfRange"), std::string::npos) << err2.str();

    std::string rec = slurp(kScenarios / "recovery-rmv.scn");
    rec.replace(rec.find("{loss: 0.4"), 10, "{loss: -0.4");
    const auto neg = write_file(dir, "neg.scn", rec);
    std::ostringstream out3, err3;
    EXPECT_EQ(cmd_validate(neg.string(), out3, err3), kExitInvalid);
    EXPECT_NE(err3.str().find("LossOutOfRange"), std::string::npos) << err3.str();

    std::ostringstream out4, err4;
    EXPECT_EQ(cmd_validate((dir / "missing.scn").string(), out4, err4), kExitInternal);
}

TEST(CmdSimulate, UnwritableOutputDirectory) {
    const fs::path dir = scratch("unwritable");
    const auto blocker = write_file(dir, "file", "x");
    CommandOptions o;
    o.paths = 10;
    o.steps = 10;
    o.workers = 1;
    o.out_dir = (blocker / "sub").string();
    std::ostringstream out, err;
    EXPECT_NE(cmd_simulate((kScenarios / "merton.scn").string(), o, out, err), kExitOk);
}

TEST(CmdSimulate, SameSeedSameBytes) {
    CommandOptions o;
    o.paths = 600;
    o.steps = 20;
    o.workers = 1;
    o.out_dir = scratch("sim_a").string();
    std::ostringstream out, err;
    ASSERT_EQ(cmd_simulate((kScenarios / "poisson-news.scn").string(), o, out, err), kExitOk) << err.str();
    const std::string a = slurp(fs::path(o.out_dir) / "surfaces.csv");
    o.out_dir = scratch("sim_b").string();
    o.workers = 3;
    ASSERT_EQ(cmd_simulate((kScenarios / "poisson-news.scn").string(), o, out, err), kExitOk) << err.str();
    const std::string b = slurp(fs::path(o.out_dir) / "surfaces.csv");
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.substr(0, a.find('\n')), "t,T,mean_price,se,mean_discounted,se");
    EXPECT_TRUE(fs::exists(fs::path(o.out_dir) / "manifest.json"));
}

TEST(CmdVerify, ReportsAndVerdict) {
    CommandOptions o;
    o.paths = 2000;
    o.steps = 20;
    o.workers = 1;
    o.out_dir = scratch("verify").string();
    std::ostringstream out, err;
    EXPECT_EQ(cmd_verify((kScenarios / "merton.scn").string(), o, out, err), kExitOk) << err.str();
    for (const char* f : {"martingale_report.json", "condition_report.json", "jump_report.json", "manifest.json"}) {
        EXPECT_TRUE(fs::exists(fs::path(o.out_dir) / f)) << f;
    }
    EXPECT_NE(out.str().find("verdict: pass"), std::string::npos);

    o.which = ConditionBreak::Drift;
    o.magnitude = 0.05;
    std::ostringstream out2, err2;
    EXPECT_EQ(cmd_verify((kScenarios / "merton.scn").string(), o, out2, err2), kExitVerifyFailed);
    EXPECT_NE(out2.str().find("verdict: fail"), std::string::npos);
}

TEST(BreakLabels, RoundTrip) {
    for (auto b : {ConditionBreak::ShortRate, ConditionBreak::JumpProbability, ConditionBreak::Drift}) {
        EXPECT_EQ(parse_break(break_label(b)), b);
    }
    EXPECT_EQ(parse_break(""), ConditionBreak::None);
}

TEST(GitBlobHash, KnownValues) {
    EXPECT_EQ(git_blob_hash("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
    EXPECT_EQ(git_blob_hash(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}
