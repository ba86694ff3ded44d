#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "picscore/picscore.hpp"

namespace picscore {
namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / "picscore_cli_test";
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    ASSERT_EQ(run("synth --seed 3 --n-genuine 20000 --n-imposter 20000 --refs-per-probe 5 -o " + path("all.csv")), 0);
    ASSERT_EQ(run("split " + path("all.csv") + " --seed 1 --out-train " + path("train.csv") + " --out-test " +
                  path("test.csv")),
              0);
    ASSERT_EQ(run("train " + path("train.csv") + " -o " + path("model.json")), 0);
    ASSERT_EQ(run("score " + path("test.csv") + " --model " + path("model.json") + " -o " + path("scored.csv")), 0);
  }

  static std::string path(const std::string& name) { return (dir_ / name).string(); }

  static int run(const std::string& args) {
    const std::string cmd = std::string(PICSCORE_CLI_PATH) + " " + args + " > " + (dir_ / "stdout.txt").string() +
                            " 2> " + (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  static std::map<std::string, std::string> summary(const std::string& p) {
    std::map<std::string, std::string> out;
    for (const auto& row : csv::read_file(p).rows) out[row[0]] = row[1];
    return out;
  }

  static nlohmann::json manifest(const std::string& p) { return nlohmann::json::parse(slurp(p + ".manifest.json")); }

  static void write(const std::string& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

  static inline fs::path dir_;
};

TEST_F(Cli, SynthCountsSchemaAndDeterminism) {
  const auto set = load_scores(path("all.csv"));
  EXPECT_EQ(set.genuine_scores().size(), 20000u);
  EXPECT_EQ(set.imposter_scores().size(), 20000u);
  const auto text = slurp(path("all.csv"));
  EXPECT_EQ(text.substr(0, text.find('\n')), "score,label,probe_id,reference_id,subject_a,subject_b");
  ASSERT_EQ(run("synth --seed 3 --n-genuine 20000 --n-imposter 20000 --refs-per-probe 5 -o " + path("again.csv")), 0);
  EXPECT_EQ(slurp(path("again.csv")), text);
  const auto m = manifest(path("all.csv"));
  EXPECT_EQ(m["command"], "synth");
  EXPECT_EQ(m["seed"], 3);
  EXPECT_EQ(m["outputs"][0], path("all.csv"));
  EXPECT_EQ(run("synth --genuine-std -1 -o " + path("bad.csv")), 2);
}

TEST_F(Cli, SplitIsSubjectExclusive) {
  std::set<std::string> train, test;
  const auto train_set = load_scores(path("train.csv"));
  for (const auto& r : train_set.records()) {
    train.insert(*r.subject_a);
    train.insert(*r.subject_b);
  }
  const auto test_set = load_scores(path("test.csv"));
  for (const auto& r : test_set.records()) {
    test.insert(*r.subject_a);
    test.insert(*r.subject_b);
  }
  for (const auto& s : train) EXPECT_EQ(test.count(s), 0u);
  EXPECT_FALSE(train.empty());
  EXPECT_FALSE(test.empty());
  EXPECT_TRUE(fs::exists(path("train.csv") + ".manifest.json"));
}

TEST_F(Cli, TrainRoundTripAndPrior) {
  const auto model = load_model(path("model.json"));
  const auto direct = fit_model(load_scores(path("train.csv")));
  for (std::size_t i : {0u, 1000u, 2048u, 3000u, 4095u}) {
    EXPECT_EQ(model.genuine.grid_values()[i], direct.genuine.grid_values()[i]);
    EXPECT_EQ(model.imposter.grid_values()[i], direct.imposter.grid_values()[i]);
  }
  EXPECT_EQ(manifest(path("model.json"))["parameters"]["prior_genuine"], 0.5);
  EXPECT_EQ(run("train " + path("train.csv") + " --prior 1.5 -o " + path("m2.json")), 2);
  write(path("only_genuine.csv"), "score,label\n0.5,genuine\n0.6,genuine\n");
  EXPECT_EQ(run("train " + path("only_genuine.csv") + " -o " + path("m3.json")), 2);
}

TEST_F(Cli, ScoreAppendsColumnsAndMatchesLibrary) {
  const auto table = csv::read_file(path("scored.csv"));
  const auto input = load_scores(path("test.csv"));
  ASSERT_EQ(table.rows.size(), input.size());
  ASSERT_EQ(table.header.back(), "confidence");
  const auto model = load_model(path("model.json"));
  const auto pic = table.require_column("pic"), score = table.require_column("score");
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const double v = std::stod(table.rows[i][pic]);
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 1.0);
  }
  const auto& row = table.rows[7];
  EXPECT_NEAR(std::stod(row[pic]), pic_single(model, std::stod(row[score])).value, 5e-7);
}

TEST_F(Cli, FuseSingletonAndMaxRefs) {
  ASSERT_EQ(run("fuse " + path("test.csv") + " --model " + path("model.json") + " --max-refs 1 -o " +
                path("fused1.csv")),
            0);
  const auto fused = csv::read_file(path("fused1.csv"));
  EXPECT_EQ(fused.header, (std::vector<std::string>{"probe_id", "claimed_id", "n_used", "pic", "decision",
                                                     "confidence", "label"}));
  // The first row of the test file opens the first group.
  const auto scored = csv::read_file(path("scored.csv"));
  EXPECT_EQ(fused.rows[0][3], scored.rows[0][scored.require_column("pic")]);
  EXPECT_EQ(fused.rows[0][2], "1");

  // Groups of two with max-refs 5 use both scores.
  write(path("pairs.csv"),
        "score,label,probe_id,reference_id,subject_a,subject_b\n"
        "0.6,genuine,p1,r1,A,A\n0.7,genuine,p1,r2,A,A\n0.2,imposter,p2,r1,A,B\n");
  ASSERT_EQ(run("fuse " + path("pairs.csv") + " --model " + path("model.json") + " -o " + path("pairs_fused.csv")), 0);
  const auto pairs = csv::read_file(path("pairs_fused.csv"));
  ASSERT_EQ(pairs.rows.size(), 2u);
  EXPECT_EQ(pairs.rows[0][2], "2");
  EXPECT_EQ(pairs.rows[1][2], "1");

  write(path("no_ids.csv"), "score,label\n0.6,genuine\n");
  EXPECT_EQ(run("fuse " + path("no_ids.csv") + " --model " + path("model.json") + " -o " + path("x.csv")), 2);
  EXPECT_EQ(run("fuse " + path("pairs.csv") + " --model " + path("model.json") + " --max-refs 3 -o " + path("x.csv")),
            2);
}

TEST_F(Cli, EvalReportsCalibrationAndRanking) {
  ASSERT_EQ(run("eval " + path("scored.csv") + " --estimator pic -o " + path("pic_report.csv")), 0);
  const auto pic = summary(path("pic_report.csv") + ".summary.csv");
  EXPECT_LE(std::stod(pic.at("ece")), 0.01);
  EXPECT_GE(std::stod(pic.at("mce")), std::stod(pic.at("ece")));
  const auto bins = csv::read_file(path("pic_report.csv"));
  EXPECT_EQ(bins.rows.size(), 10u);
  EXPECT_EQ(bins.header, (std::vector<std::string>{"bin_lo", "bin_hi", "count", "p_true", "p_pred_mean",
                                                    "p_pred_std"}));

  ASSERT_EQ(run("eval " + path("scored.csv") + " --estimator dtc --train " + path("train.csv") + " -o " +
                path("dtc_report.csv")),
            0);
  const auto dtc = summary(path("dtc_report.csv") + ".summary.csv");
  EXPECT_GT(std::stod(dtc.at("ece")), std::stod(pic.at("ece")));
  EXPECT_EQ(manifest(path("dtc_report.csv"))["estimator"], "dtc");

  EXPECT_EQ(run("eval " + path("scored.csv") + " --estimator lrc --train " + path("train.csv") + " -o " +
                path("x.csv")),
            2);
  EXPECT_EQ(run("eval " + path("scored.csv") + " --estimator nope -o " + path("x.csv")), 2);
}

TEST_F(Cli, CurveSchemaAndDefaultBins) {
  ASSERT_EQ(run("train " + path("test.csv") + " -o " + path("test_model.json")), 0);
  ASSERT_EQ(run("curve " + path("scored.csv") + " --test-model " + path("test_model.json") + " -o " +
                path("curve.csv")),
            0);
  const auto curve = csv::read_file(path("curve.csv"));
  EXPECT_EQ(curve.header, (std::vector<std::string>{"bin_center", "pred_mean", "pred_std", "count"}));
  EXPECT_EQ(curve.rows.size(), 30u);
  EXPECT_EQ(curve.rows[0][0], "0.016667");
  EXPECT_EQ(manifest(path("curve.csv"))["bins"]["ccc"], 30);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("train " + path("missing.csv") + " -o " + path("x.json")), 2);
  write(path("nan.csv"), "score,label\nNaN,genuine\n");
  EXPECT_EQ(run("train " + path("nan.csv") + " -o " + path("x.json")), 2);
  EXPECT_NE(slurp(path("stderr.txt")).find("row 1"), std::string::npos);

  auto j = nlohmann::json::parse(slurp(path("model.json")));
  j["version"] = 99;
  write(path("v99.json"), j.dump());
  EXPECT_EQ(run("score " + path("test.csv") + " --model " + path("v99.json") + " -o " + path("x.csv")), 2);
  EXPECT_NE(slurp(path("stderr.txt")).find("99"), std::string::npos);
}

}  // namespace
}  // namespace picscore
