#include "helpers.hpp"

#include "strata/cli.hpp"
#include "strata/config.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <iterator>
#include <sstream>

namespace strata {
namespace {

namespace fs = std::filesystem;

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "strata");
  return cli_dispatch(args);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}), 2);
  EXPECT_EQ(run({"frobnicate"}), 2);
  EXPECT_EQ(run({"train", "--no-such-flag", "1"}), 2);
  EXPECT_EQ(run({"prepare"}), 2);  // --plots missing
  EXPECT_EQ(run({"train", "--plots", "x", "--prepared", "y", "--out", "z", "--epochs", "0"}), 2);
}

TEST(Cli, LabelsFileRoundTrip) {
  const auto dir = test::temp_dir("labels");
  const std::vector<Label> l{ClassId::Ground, std::nullopt, ClassId::Coniferous};
  write_labels(l, dir / "l.txt");
  EXPECT_EQ(read_labels(dir / "l.txt"), l);
  EXPECT_EQ(slurp(dir / "l.txt"), "0\n-1\n5\n");
}

class Pipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = test::temp_dir("cli_pipeline");
    const std::string r = root_.string();
    ASSERT_EQ(run({"synth", "--out", r + "/data", "--train-plots", "1", "--test-plots-count", "1", "--plot-size", "10",
                   "--pulse-density", "12", "--seed", "5"}),
              0);
    ASSERT_EQ(run({"prepare", "--plots", r + "/data/train", "--reference", r + "/data/reference", "--out",
                   r + "/prep_train"}), 0);
    ASSERT_EQ(run({"prepare", "--plots", r + "/data/test", "--reference", r + "/data/reference", "--out",
                   r + "/prep_test"}),
              0);
    ASSERT_EQ(run({"train", "--plots", r + "/data/train", "--prepared", r + "/prep_train", "--out", r + "/train",
                   "--epochs", "1", "--cylinders-per-epoch", "2", "--batch-size", "2", "--subsample", "64",
                   "--radius", "2", "--seed", "5"}),
              0);
    ASSERT_EQ(run({"infer", "--plots", r + "/data/test", "--checkpoint", r + "/train/checkpoint.bin", "--out",
                   r + "/pred", "--subsample", "64", "--radius", "2"}),
              0);
  }
  static fs::path root_;
};
fs::path Pipeline::root_;

TEST_F(Pipeline, Layout) {
  for (const char* f : {"data/train/train_00.txt", "data/test/test_00.txt", "data/reference/test_00.txt",
                        "data/scenes/test_00.json", "prep_train/train_00_gv_truth.asc", "prep_train/train_00.mixture",
                        "prep_test/test_00_labels.txt", "prep_test/test_00_overstory_occ.asc",
                        "train/train_log.jsonl", "train/checkpoint.bin", "pred/test_00_labels.txt",
                        "pred/test_00_understory_hmax.asc", "pred/test_00_overstory.obj", "pred/run_manifest.txt"})
    EXPECT_TRUE(fs::exists(root_ / f)) << f;
  EXPECT_NE(slurp(root_ / "train/run_manifest.txt").find("# command train"), std::string::npos);
}

TEST_F(Pipeline, ManifestReplaysConfig) {
  const auto cfg = load_config(root_ / "train/run_manifest.txt");
  EXPECT_EQ(cfg.train.epochs, 1);
  EXPECT_EQ(cfg.train.S, 64);
  EXPECT_EQ(cfg.train.seed, 5u);
}

TEST_F(Pipeline, EvalAgainstItselfIsPerfect) {
  RunConfig cfg;
  cfg.pred = (root_ / "prep_test").string();
  cfg.truth = (root_ / "prep_test").string();
  std::ostringstream out;
  const auto r = run_eval(cfg, out);
  EXPECT_EQ(r.plots, 1);
  ASSERT_TRUE(r.r3);
  EXPECT_EQ(*r.r3->oa, 100.0);
  EXPECT_EQ(*r.r3->miou, 100.0);
  EXPECT_EQ(*r.heights.mae(HeightTarget::OverstoryTop), 0.0);
}

TEST_F(Pipeline, EvalOfPredictionWritesMetrics) {
  const std::string r = root_.string();
  EXPECT_EQ(run({"eval", "--pred", r + "/pred", "--truth", r + "/prep_test", "--out", r + "/eval"}), 0);
  EXPECT_NE(slurp(root_ / "eval/metrics.jsonl").find("\"metric\""), std::string::npos);
}

TEST_F(Pipeline, BaselineRuns) {
  const std::string r = root_.string();
  EXPECT_EQ(run({"baseline", "--plots", r + "/data/train", "--reference", r + "/data/reference", "--prepared",
                 r + "/prep_train", "--test-plots", r + "/data/test", "--truth", r + "/prep_test", "--out",
                 r + "/baseline"}),
            0);
  EXPECT_TRUE(fs::exists(root_ / "baseline/forest/test_00_gv_occ.asc"));
  EXPECT_TRUE(fs::exists(root_ / "baseline/logistic/test_00_gv_occ.asc"));
}

}  // namespace
}  // namespace strata
