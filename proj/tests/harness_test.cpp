#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "optionforge/checkpoint.hpp"
#include "optionforge/harness.hpp"

namespace optionforge {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() / ("optionforge-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  [[nodiscard]] const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

ExperimentManifest small_manifest(const fs::path& root, const std::string& extra = "") {
  return parse_manifest(parse_key_values(std::string_view(
      "experiment.name=smoke\nexperiment.seeds=1,2,3\nexperiment.output=" + root.string() +
      "\ntrain.algorithm=diayn\nenv.name=four_rooms\nenv.side=7\ntrain.n_options=4\ntrain.horizon=15\n"
      "train.episodes=60\ntrain.eval_every=20\ntrain.checkpoint_every=20\n" +
      extra)));
}

int cli(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
  args.insert(args.begin(), "optionforge");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return code;
}

TEST(RunLogCsv, RoundTripWithMissingFields) {
  RunLog log;
  log.records.push_back({100, 1.5, 0.25, std::nullopt, 0.1234567890123, std::nullopt, 0.5});
  log.records.push_back({200, -0.0, 1e-300, 2.0, 0.0, 0.75, 1.0});
  std::stringstream text;
  write_runlog_csv(text, log);
  EXPECT_EQ(text.str().substr(0, text.str().find('\n')), kRunLogHeader);
  EXPECT_NE(text.str().find("100,1.5,0.25,,"), std::string::npos);
  EXPECT_EQ(read_runlog_csv(text), log.records);
}

TEST(RunLogCsv, RejectsWrongHeader) {
  std::istringstream in("episode,loss\n1,2\n");
  EXPECT_THROW(read_runlog_csv(in), InvalidSpecError);
}

TEST(EpisodesCsv, RoundTrip) {
  RunLog log;
  log.episodes.push_back({0, OptionId{3}, StateId{0}, StateId{7}, 15, 0.3333333333333333, 2.0794415416798357});
  log.episodes.push_back({1, OptionId{0}, StateId{7}, StateId{7}, 0, 0.0, 0.0});
  std::stringstream text;
  write_episodes_csv(text, log);
  EXPECT_EQ(read_episodes_csv(text), log.episodes);
}

TEST(Heatmap, AllZeroCounts) {
  TempDir dir;
  const auto env = make_four_rooms(5);
  emit_heatmap_data(std::vector<double>(25, 0.0), env, dir.path() / "h.csv");
  const auto text = slurp(dir.path() / "h.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')), "# total_visits=0");
  EXPECT_EQ(text.substr(text.find('\n') + 1, 10), "0,0,0,0,0\n");
  EXPECT_EQ(read_heatmap_counts(dir.path() / "h.csv", env), std::vector<double>(25, 0.0));
}

TEST(Heatmap, SingleVisitedCell) {
  TempDir dir;
  const auto env = make_four_rooms(5);
  std::vector<double> counts(25, 0.0);
  counts[7] = 12.0;
  emit_heatmap_data(counts, env, dir.path() / "h.csv");
  std::ifstream in(dir.path() / "h.csv");
  std::string line;
  std::getline(in, line);
  std::size_t nonzero = 0;
  while (std::getline(in, line)) {
    for (const auto& field : split(line, ',')) {
      if (parse_double(field) != 0.0) {
        ++nonzero;
        EXPECT_EQ(parse_double(field), 1.0);
      }
    }
  }
  EXPECT_EQ(nonzero, 1u);
}

TEST(Heatmap, FourRoomsRoundTrip) {
  TempDir dir;
  const auto env = make_four_rooms(11);
  std::vector<double> counts(env.num_states);
  for (std::size_t s = 0; s < counts.size(); ++s) counts[s] = static_cast<double>((s * 37) % 101);
  emit_heatmap_data(counts, env, dir.path() / "h.csv");
  EXPECT_EQ(read_heatmap_counts(dir.path() / "h.csv", env), counts);
}

TEST(Heatmap, SizeMismatch) {
  TempDir dir;
  EXPECT_THROW(emit_heatmap_data(std::vector<double>(3, 1.0), make_four_rooms(5), dir.path() / "h.csv"),
               ContractViolation);
}

TEST(Manifest, VariantsOverrideSharedKeys) {
  const auto manifest = parse_manifest(parse_key_values(std::string_view(
      "experiment.name=m\nexperiment.seeds=4,5\ntrain.algorithm=diayn\nenv.name=chain\n"
      "variant.fast.train.episodes=10\nvariant.slow.train.episodes=20\nvariant.slow.env.n=7\n")));
  ASSERT_EQ(manifest.variants.size(), 2u);
  EXPECT_EQ(manifest.seeds, (std::vector<std::uint64_t>{4, 5}));
  EXPECT_EQ(manifest.variants[0].name, "fast");
  EXPECT_EQ(manifest.variants[0].keys.at("train.episodes"), "10");
  EXPECT_EQ(manifest.variants[1].keys.at("env.n"), "7");
  EXPECT_EQ(manifest.variants[1].keys.at("env.name"), "chain");
}

TEST(Manifest, RequiresNameAndSeeds) {
  EXPECT_THROW(parse_manifest(parse_key_values(std::string_view("experiment.seeds=1\n"))), InvalidSpecError);
  EXPECT_THROW(parse_manifest(parse_key_values(std::string_view("experiment.name=x\n"))), InvalidSpecError);
  EXPECT_THROW(parse_manifest(parse_key_values(std::string_view("experiment.name=x\nexperiment.seeds=1\nfoo=1\n"))),
               InvalidSpecError);
}

TEST(Experiment, OneVariantThreeSeeds) {
  TempDir root;
  const auto result = run_experiment(small_manifest(root.path()));
  EXPECT_EQ(result.exit_status, 0);
  ASSERT_EQ(result.runs.size(), 3u);
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto dir = result.directory / "default" / ("seed-" + std::to_string(seed));
    for (const char* file : {"runlog.csv", "episodes.csv", "config.txt", "checkpoint.json", "heatmap.csv",
                             "checkpoint-20.json", "checkpoint-40.json"}) {
      EXPECT_TRUE(fs::exists(dir / file)) << dir / file;
    }
  }
  std::size_t run_dirs = 0;
  for (const auto& entry : fs::directory_iterator(result.directory / "default")) run_dirs += entry.is_directory();
  EXPECT_EQ(run_dirs, 3u);
  EXPECT_TRUE(fs::exists(result.directory / "summary.json"));
  EXPECT_EQ(result.summary.at("status"), "ok");
  EXPECT_EQ(result.summary.at("variants").at("default").at("metrics").at("disc_loss").at("n"), 3);
}

TEST(Experiment, RerunProducesIdenticalCsvs) {
  TempDir root;
  const auto manifest = small_manifest(root.path());
  const auto first = run_experiment(manifest);
  auto parallel = manifest;
  parallel.jobs = 3;
  const auto second = run_experiment(parallel);
  ASSERT_NE(first.directory, second.directory);
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto rel = fs::path("default") / ("seed-" + std::to_string(seed));
    for (const char* file : {"runlog.csv", "episodes.csv", "heatmap.csv", "checkpoint.json"}) {
      EXPECT_EQ(slurp(first.directory / rel / file), slurp(second.directory / rel / file)) << rel / file;
    }
  }
}

TEST(Experiment, SavedArtifactsReloadToEqualValues) {
  TempDir root;
  const auto result = run_experiment(small_manifest(root.path()));
  const auto dir = result.directory / "default" / "seed-2";
  const auto config = config_from_key_values(parse_key_values(std::string_view(slurp(dir / "config.txt"))));
  Trainer trainer(config);
  trainer.train();
  EXPECT_EQ(load_checkpoint(dir / "checkpoint.json"), trainer.snapshot());
  EXPECT_EQ(load_runlog(dir), trainer.log());

  // A periodic checkpoint resumes to the same final state.
  Trainer resumed(load_checkpoint(dir / "checkpoint-40.json"));
  resumed.train();
  EXPECT_EQ(resumed.snapshot(), trainer.snapshot());
}

TEST(Experiment, InvalidVariantFailsBeforeRunning) {
  TempDir root;
  auto manifest = small_manifest(root.path(), "variant.bad.train.gamma=2\nvariant.good.train.gamma=0.9\n");
  EXPECT_THROW(run_experiment(manifest), InvalidSpecError);
  EXPECT_TRUE(fs::is_empty(root.path()));
}

TEST(Experiment, NumericalFailureIsReported) {
  TempDir root;
  const auto result = run_experiment(small_manifest(root.path(), "train.policy_step=1e308\n"));
  EXPECT_EQ(result.exit_status, 1);
  EXPECT_EQ(result.summary.at("status"), "failed");
  for (const auto& run : result.runs) {
    EXPECT_FALSE(run.ok);
    EXPECT_FALSE(run.error.empty());
    EXPECT_TRUE(fs::exists(run.directory / "runlog.csv"));
  }
}

TEST(Experiment, OutputRootVariableWins) {
  TempDir root;
  TempDir other;
  ::setenv(kOutputRootVariable, other.path().c_str(), 1);
  const auto result = run_experiment(small_manifest(root.path()));
  ::unsetenv(kOutputRootVariable);
  EXPECT_EQ(result.directory.parent_path(), other.path());
}

TEST(MeanAndSd, SampleStatistics) {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  const auto [mean, sd] = mean_and_sd(v);
  EXPECT_DOUBLE_EQ(mean, 2.5);
  EXPECT_NEAR(sd, 1.2909944487358056, 1e-15);
  EXPECT_EQ(mean_and_sd(std::vector<double>{7.0}).second, 0.0);
}

TEST(Cli, RunEvalOracleAndReport) {
  TempDir root;
  const auto manifest_path = root.path() / "m.txt";
  {
    std::ofstream out(manifest_path);
    out << "experiment.name=cli\nexperiment.seeds=1\nexperiment.output=" << (root.path() / "out").string()
        << "\ntrain.algorithm=vic\nenv.name=chain\nenv.n=3\ntrain.n_options=2\ntrain.horizon=2\ntrain.episodes=100\n";
  }
  std::string out;
  ASSERT_EQ(cli({"run", manifest_path.string()}, &out), 0);
  const auto results = fs::path(out.substr(out.find("results: ") + 9, out.find('\n', out.find("results: ")) - out.find("results: ") - 9));
  const auto checkpoint = results / "default" / "seed-1" / "checkpoint.json";
  ASSERT_TRUE(fs::exists(checkpoint));

  ASSERT_EQ(cli({"eval", checkpoint.string(), "--episodes", "50"}, &out), 0);
  const auto eval = nlohmann::json::parse(out);
  EXPECT_EQ(eval.at("episodes"), 50);
  EXPECT_TRUE(eval.contains("empirical_mi"));

  ASSERT_EQ(cli({"oracle", "mi", checkpoint.string()}, &out), 0);
  const auto mi = nlohmann::json::parse(out);
  EXPECT_NEAR(mi.at("exact_mi").get<double>(), mi.at("exact_mi_option_form").get<double>(), 1e-10);

  ASSERT_EQ(cli({"oracle", "capacity", checkpoint.string(), "--s0", "1"}, &out), 0);
  const auto cap = nlohmann::json::parse(out);
  EXPECT_GE(cap.at("capacity").get<double>(), cap.at("uniform_prior_mi").get<double>() - 1e-12);

  ASSERT_EQ(cli({"report", results.string()}, &out), 0);
  EXPECT_NE(out.find("default/seed-1,"), std::string::npos);
  EXPECT_NE(out.find("status: ok"), std::string::npos);
}

TEST(Cli, OracleAcceptsConfigFiles) {
  TempDir root;
  const auto config = root.path() / "c.txt";
  {
    std::ofstream out(config);
    out << "train.algorithm=diayn\nenv.name=chain\nenv.n=4\ntrain.n_options=2\ntrain.horizon=3\n";
  }
  std::string out;
  ASSERT_EQ(cli({"oracle", "mi", config.string()}, &out), 0);
  EXPECT_NEAR(nlohmann::json::parse(out).at("exact_mi").get<double>(), 0.0, 1e-12);
}

TEST(Cli, ExitCodes) {
  TempDir root;
  std::string err;
  EXPECT_EQ(cli({}, nullptr, &err), 2);
  EXPECT_EQ(cli({"eval", (root.path() / "missing.json").string()}, nullptr, &err), 2);
  EXPECT_NE(err.find("error"), std::string::npos);
  EXPECT_EQ(cli({"oracle", "mi", (root.path() / "missing.txt").string()}), 2);

  const auto bad = root.path() / "bad.txt";
  {
    std::ofstream out(bad);
    out << "experiment.name=x\nexperiment.seeds=1\nexperiment.output=" << root.path().string()
        << "\nenv.name=chain\ntrain.gamma=7\n";
  }
  EXPECT_EQ(cli({"run", bad.string()}), 2);

  const auto failing = root.path() / "failing.txt";
  {
    std::ofstream out(failing);
    out << "experiment.name=x\nexperiment.seeds=1\nexperiment.output=" << root.path().string()
        << "\ntrain.algorithm=diayn\nenv.name=chain\ntrain.episodes=5\ntrain.policy_step=1e308\n";
  }
  EXPECT_EQ(cli({"run", failing.string()}), 1);
}

TEST(Text, DoublesRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.125, 0.0}) EXPECT_EQ(parse_double(format_double(v)), v);
  EXPECT_THROW(parse_double("1.5x"), InvalidSpecError);
  EXPECT_THROW(parse_key_values(std::string_view("novalue\n")), InvalidSpecError);
}

}  // namespace
}  // namespace optionforge
