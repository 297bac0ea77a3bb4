#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "lrtc/image_io.hpp"
#include "run_config.hpp"

using namespace lrtc;
using namespace lrtc::cli;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr ClipRange kPixels{0.0, 255.0};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(LRTC_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

class CliRun : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("lrtc_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir_);
    input_ = dir_ / "input.png";
    fs::copy_file(fs::path(LRTC_TEST_DATA) / "astronaut_64.png", input_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path dir_;
  fs::path input_;
};

}  // namespace

TEST(CliConfig, DefaultsMatchSolverDefaults) {
  const RunConfig cfg = parse_run_config(R"({"solver": {}})", kPixels);
  ASSERT_EQ(cfg.solvers.size(), 1u);
  const SolverConfig& c = cfg.solvers[0].cfg;
  EXPECT_EQ(cfg.solvers[0].name, "proposed");
  EXPECT_EQ(c.xi, 1.7);
  EXPECT_TRUE(c.adaptive_rho);
  EXPECT_EQ(c.svt_scaling, SvtScaling::fixed);
  ASSERT_TRUE(c.clip_range);
  EXPECT_EQ(c.clip_range->hi, 255.0);
}

TEST(CliConfig, PresetThenOverrides) {
  const RunConfig cfg = parse_run_config(
      R"({"solvers": [{"name": "b", "preset": "fixed-penalty", "t_max": 7, "clip": null},
                      {"name": "w", "warm_start_from": "b", "svt_scaling": "penalty-scaled", "lambda": 2.5}]})",
      kPixels);
  ASSERT_EQ(cfg.solvers.size(), 2u);
  EXPECT_FALSE(cfg.solvers[0].cfg.adaptive_rho);
  EXPECT_FALSE(cfg.solvers[0].cfg.over_relax);
  EXPECT_EQ(cfg.solvers[0].cfg.t_max, 7u);
  EXPECT_FALSE(cfg.solvers[0].cfg.clip_range);
  EXPECT_EQ(cfg.solvers[1].warm_start_from, std::optional<std::string>("b"));
  EXPECT_EQ(cfg.solvers[1].cfg.svt_scaling, SvtScaling::penalty_scaled);
  EXPECT_EQ(cfg.solvers[1].cfg.lambda, std::optional<double>(2.5));
}

TEST(CliConfig, RejectsUnknownKeysAndPresets) {
  EXPECT_THROW(parse_run_config(R"({"ratoi": 0.5})", kPixels), std::invalid_argument);
  EXPECT_THROW(parse_run_config(R"({"solver": {"rho": 1}})", kPixels), std::invalid_argument);
  EXPECT_THROW(parse_run_config(R"({"solver": {"preset": "nonesuch"}})", kPixels), std::invalid_argument);
  EXPECT_THROW(parse_run_config(R"({"solver": {"clip": [0]}})", kPixels), std::invalid_argument);
  EXPECT_THROW(parse_run_config("[1, 2]", kPixels), std::invalid_argument);
}

TEST(CliConfig, ManifestParsesBackToSameConfig) {
  RunConfig cfg;
  cfg.command = "sweep";
  cfg.input = "a.png";
  cfg.output = "out";
  cfg.seed = 42;
  cfg.ratios = {0.2, 0.6};
  cfg.repeats = 2;
  cfg.t_max = 99;
  cfg.solvers = default_sweep_solvers(kPixels);
  cfg.solvers[0].cfg.lambda = 3.0;
  cfg.solvers[0].cfg.rho_init_override = 0.5;
  cfg.solvers[0].cfg.alphas = {0.2, 0.3, 0.5};
  cfg.config_text = "{\"seed\": 42}";

  const json manifest = make_manifest(cfg, json{{"note", 1}});
  EXPECT_EQ(manifest["manifest"]["config_text"], cfg.config_text);
  EXPECT_EQ(manifest["manifest"]["note"], 1);

  const RunConfig back = parse_run_config(manifest.dump(), std::nullopt);
  EXPECT_EQ(back.command, cfg.command);
  EXPECT_EQ(back.input, cfg.input);
  EXPECT_EQ(back.seed, cfg.seed);
  EXPECT_EQ(back.ratios, cfg.ratios);
  EXPECT_EQ(back.repeats, cfg.repeats);
  EXPECT_EQ(back.t_max, cfg.t_max);
  ASSERT_EQ(back.solvers.size(), cfg.solvers.size());
  for (std::size_t i = 0; i < cfg.solvers.size(); ++i) {
    EXPECT_EQ(solver_to_json(back.solvers[i]), solver_to_json(cfg.solvers[i]));
  }
}

TEST(CliBinary, NoArgumentsExitsNonzero) { EXPECT_NE(run_cli(""), 0); }

TEST(CliBinary, UnknownSubcommandExitsNonzero) { EXPECT_NE(run_cli("frobnicate"), 0); }

TEST_F(CliRun, FullyObservedImageIsReproduced) {
  const fs::path out = dir_ / "full";
  ASSERT_EQ(run_cli("complete --input " + input_.string() + " --ratio 1 --output " + out.string()), 0);
  EXPECT_EQ(load_image(out / "reconstruction.png"), load_image(input_));
  for (const char* name : {"observed.png", "history.csv", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(out / name)) << name;
  }
}

TEST_F(CliRun, ManifestReplayIsBitIdentical) {
  const fs::path a = dir_ / "a";
  const fs::path b = dir_ / "b";
  const std::string before = slurp(input_);
  ASSERT_EQ(run_cli("complete --input " + input_.string() + " --ratio 0.5 --seed 9 --t-max 40 --output " +
                    a.string()),
            0);
  ASSERT_EQ(run_cli("complete --config " + (a / "manifest.json").string() + " --output " + b.string()), 0);
  EXPECT_EQ(slurp(a / "history.csv"), slurp(b / "history.csv"));
  EXPECT_EQ(slurp(a / "reconstruction.png"), slurp(b / "reconstruction.png"));
  EXPECT_EQ(slurp(input_), before);
}

TEST_F(CliRun, RefusesToOverwriteItsInput) {
  const fs::path renamed = dir_ / "reconstruction.png";
  fs::rename(input_, renamed);
  const std::string before = slurp(renamed);
  EXPECT_NE(run_cli("complete --input " + renamed.string() + " --ratio 1 --output " + dir_.string()), 0);
  EXPECT_EQ(slurp(renamed), before);
}

TEST_F(CliRun, CompleteWithoutRatioOrMaskFails) {
  EXPECT_NE(run_cli("complete --input " + input_.string() + " --output " + (dir_ / "x").string()), 0);
}
