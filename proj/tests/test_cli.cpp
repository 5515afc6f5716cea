#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include <unistd.h>

#include "cli.hpp"
#include "rotbox/io.hpp"
#include "json.hpp"

namespace rotbox {
namespace {

namespace fs = std::filesystem;

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("rotbox_test_cli_" + std::to_string(::getpid()) + "_" +
                                            ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    fs::path dir_;
};

TEST_F(Cli, IouExample) {
    const Outcome r = cli({"iou", "--box-a", "5,2,10,4,0", "--box-b", "10,2,10,4,0"});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, "0.3333\n");
}

TEST_F(Cli, IouOracleCrossCheck) {
    const Outcome r = cli({"iou", "--box-a", "20,20,30,10,30", "--box-b", "22,21,25,12,-10", "--oracle", "--precision", "6"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream in(r.out);
    double iou = 0, oracle = 0;
    std::string tag;
    in >> iou >> tag >> oracle;
    EXPECT_EQ(tag, "oracle");
    EXPECT_NEAR(iou, oracle, 5e-3);
}

TEST_F(Cli, SynthDetectEvalGivesPerfectAp) {
    const std::string scene = path("scene");
    ASSERT_EQ(cli({"synth", "--seed", "7", "--n-boxes", "12", "--out", scene}).code, 0);
    EXPECT_TRUE(fs::exists(fs::path(scene) / "scores_P2.rbk"));
    EXPECT_TRUE(fs::exists(fs::path(scene) / "regs_P4.rbk"));

    const std::string dets = path("dets.jsonl");
    Outcome d = cli({"detect", "--input", scene, "--out", dets, "--anchors", scene + "/anchors.json"});
    ASSERT_EQ(d.code, 0) << d.err;

    Outcome e = cli({"eval", "--detections", dets, "--annotations", scene + "/annotations.jsonl", "--svg", path("pr.svg")});
    ASSERT_EQ(e.code, 0) << e.err;
    EXPECT_EQ(e.err, "AP 1.0000 (voc07, IoU 0.50)\n");
    EXPECT_EQ(nlohmann::json::parse(e.out).at("ap").get<double>(), 1.0);
    EXPECT_TRUE(fs::exists(path("pr.svg")));

    for (const char* pattern : {"rect9", "diamond5", "diamond9", "diamond13"}) {
        d = cli({"detect", "--input", scene, "--out", dets, "--lasa", pattern});
        ASSERT_EQ(d.code, 0) << d.err;
        e = cli({"eval", "--detections", dets, "--annotations", scene + "/annotations.jsonl", "--method", "all_points"});
        ASSERT_EQ(e.code, 0) << e.err;
        EXPECT_EQ(e.err, "AP 1.0000 (all_points, IoU 0.50)\n") << pattern;
    }
}

TEST_F(Cli, SynthIsByteIdenticalAcrossRuns) {
    ASSERT_EQ(cli({"synth", "--seed", "3", "--out", path("a")}).code, 0);
    ASSERT_EQ(cli({"synth", "--seed", "3", "--out", path("b")}).code, 0);
    for (const char* f : {"scores_P2.rbk", "regs_P3.rbk", "annotations.jsonl", "anchors.json", "image.json"}) {
        EXPECT_EQ(read_file_bytes(fs::path(path("a")) / f), read_file_bytes(fs::path(path("b")) / f)) << f;
    }
}

TEST_F(Cli, LossOnIdealMapsIsNearZero) {
    const std::string scene = path("scene");
    ASSERT_EQ(cli({"synth", "--seed", "5", "--n-boxes", "6", "--out", scene}).code, 0);
    const Outcome r = cli({"loss", "--input", scene, "--annotations", scene + "/annotations.jsonl"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_LE(j.at("total").get<double>(), 1e-3);
    EXPECT_GT(j.at("n_positive").get<int>(), 0);
}

TEST_F(Cli, AssignAnchorsRender) {
    const std::string scene = path("scene");
    ASSERT_EQ(cli({"synth", "--seed", "9", "--n-boxes", "15", "--out", scene}).code, 0);
    const std::string ann = scene + "/annotations.jsonl";

    Outcome r = cli({"assign", "--annotations", ann, "--out", path("labels")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("synth_9 P2 positive="), std::string::npos) << r.out;
    EXPECT_TRUE(fs::exists(fs::path(path("labels")) / "synth_9" / "targets_P3.rbk"));

    r = cli({"anchors", "--annotations", ann, "--seed", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(anchors_from_json(r.out).priors.size(), 15u);

    r = cli({"render", "--annotations", ann});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("<svg"), std::string::npos);
}

TEST_F(Cli, ConfigFileAndFlagOverride) {
    const std::string scene = path("scene");
    ASSERT_EQ(cli({"synth", "--seed", "2", "--n-boxes", "8", "--out", scene}).code, 0);
    const std::string cfg = path("rotbox.cfg");
    // A strict final threshold drops imperfectly aligned boxes; the flag restores it.
    write_text_file(cfg, "# strict\nfinal_thresh = 0.999\nlasa = rect9\n");
    Outcome r = cli({"detect", "--config", cfg, "--input", scene});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto strict = parse_detections(r.out);
    r = cli({"detect", "--config", cfg, "--input", scene, "--final-thresh", "0.3"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto relaxed = parse_detections(r.out);
    ASSERT_EQ(strict.size(), 1u);
    ASSERT_EQ(relaxed.size(), 1u);
    EXPECT_EQ(relaxed[0].detections.size(), 8u);
    EXPECT_LT(strict[0].detections.size(), relaxed[0].detections.size());

    write_text_file(cfg, "bogus_key = 1\n");
    EXPECT_EQ(cli({"detect", "--config", cfg, "--input", scene}).code, 1);
}

TEST_F(Cli, InputErrorsExitOne) {
    Outcome r = cli({"frobnicate"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("Usage"), std::string::npos);
    EXPECT_EQ(cli({}).code, 1);
    EXPECT_EQ(cli({"iou", "--box-a", "1,2,3", "--box-b", "1,2,3,4,0"}).code, 1);
    EXPECT_EQ(cli({"iou", "--box-a", "1,2,-3,4,0", "--box-b", "1,2,3,4,0"}).code, 1);
    EXPECT_EQ(cli({"detect", "--input", path("missing")}).code, 1);
    EXPECT_EQ(cli({"detect", "--input", path("missing"), "--lasa", "star"}).code, 1);
    write_text_file(path("bad.jsonl"), "{nope\n");
    r = cli({"anchors", "--annotations", path("bad.jsonl")});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("line 1"), std::string::npos) << r.err;
}

TEST_F(Cli, HelpExitsZero) {
    const Outcome r = cli({"--help"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("synth"), std::string::npos);
}

}  // namespace
}  // namespace rotbox
