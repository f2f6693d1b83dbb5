#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "optionforge/checkpoint.hpp"
#include "optionforge/oracle.hpp"
#include "optionforge/trainers.hpp"

namespace optionforge {
namespace {

TrainConfig config_from(const std::string& text) { return config_from_key_values(parse_key_values(std::string_view(text))); }

bool loss_shape_holds(const RunLog& log) {
  const auto ma = moving_average(log.episode_losses(), 100);
  const std::size_t q = ma.size() / 4;
  return mean_of(ma, ma.size() - q, ma.size()) < mean_of(ma, 0, q);
}

TEST(Config, DefaultsAndParsing) {
  const auto config = config_from(
      "train.algorithm=vic\nenv.name=chain\nenv.n=4\nenv.slip=0.1\ntrain.n_options=3\ntrain.hidden=8,4\n"
      "train.backend=mlp\n");
  EXPECT_EQ(config.algorithm, Algorithm::vic);
  EXPECT_EQ(config.env, make_chain(4, 0.1));
  EXPECT_EQ(config.num_options, 3u);
  EXPECT_EQ(config.hidden, (std::vector<std::size_t>{8, 4}));
  EXPECT_EQ(config.backend, BackendKind::mlp);
  EXPECT_EQ(config.effective_horizon(), 20u);
}

TEST(Config, RoundTripsThroughKeyValues) {
  const auto config = config_from(
      "train.algorithm=valor\nenv.name=four_rooms\nenv.side=7\ntrain.policy_step=0.0123\ntrain.seed=99\n"
      "train.gamma=0.9\ntrain.horizon=12\n");
  const auto again = config_from_key_values(to_key_values(config));
  EXPECT_EQ(to_key_values(again), to_key_values(config));
  EXPECT_EQ(again.env, config.env);
  EXPECT_EQ(again.policy_step, 0.0123);
}

TEST(Config, RejectsInvalidValues) {
  EXPECT_THROW(config_from("train.algorithm=sac\nenv.name=chain\n"), InvalidSpecError);
  EXPECT_THROW(config_from("env.name=chain\ntrain.n_options=0\n"), InvalidSpecError);
  EXPECT_THROW(config_from("env.name=chain\ntrain.gamma=1.5\n"), InvalidSpecError);
  EXPECT_THROW(config_from("env.name=chain\ntrain.entropy_coef=-1\n"), InvalidSpecError);
  EXPECT_THROW(config_from("env.name=chain\ntrain.typo=1\n"), InvalidSpecError);
  EXPECT_THROW(config_from("env.name=maze\n"), InvalidSpecError);
  EXPECT_THROW(config_from("env.name=chain\ntrain.eval_every=10\ntrain.checkpoint_every=15\n"), InvalidSpecError);
  EXPECT_THROW(config_from("env.name=chain\ntrain.episodes=abc\n"), InvalidSpecError);
}

TEST(Trainer, WrongEntryPointIsAContractViolation) {
  const auto config = config_from("train.algorithm=diayn\nenv.name=chain\ntrain.episodes=10\n");
  EXPECT_THROW(train_vic(config), ContractViolation);
  EXPECT_THROW(train_valor(config), ContractViolation);
}

TEST(Trainer, RunningPastTheEndIsAContractViolation) {
  Trainer trainer(config_from("train.algorithm=diayn\nenv.name=chain\ntrain.episodes=3\n"));
  trainer.train();
  EXPECT_THROW(trainer.run_episode(), ContractViolation);
}

TEST(Vic, FirstEpisodeRewardIsZero) {
  Trainer trainer(config_from("train.algorithm=vic\nenv.name=four_rooms\nenv.side=5\ntrain.n_options=8\n"));
  EXPECT_NEAR(trainer.run_episode().mean_reward, 0.0, 1e-12);
}

TEST(Vic, LearnsThePerfectTwoStateChannel) {
  const auto config = config_from(
      "train.algorithm=vic\nenv.name=chain\nenv.n=2\ntrain.n_options=2\ntrain.horizon=1\ntrain.episodes=5000\n"
      "train.policy_step=0.1\ntrain.prior_step=0.1\n");
  Trainer trainer(config);
  trainer.train();
  const double mi = exact_mi(trainer.env(), trainer.policy(), trainer.prior(), StateId{0}, 1);
  EXPECT_GE(mi, 0.9 * std::log(2.0));
  EXPECT_GE(trainer.log().records.back().empirical_mi.value(), 0.9 * std::log(2.0) - 0.05);
}

TEST(Vic, SingleOptionRewardIsZero) {
  Trainer trainer(config_from("train.algorithm=vic\nenv.name=chain\nenv.n=4\ntrain.n_options=1\ntrain.episodes=200\n"));
  for (const auto& e : trainer.train().episodes) {
    EXPECT_LE(e.mean_reward, 0.0);
    EXPECT_GE(e.mean_reward, -1e-12);
  }
}

TEST(Vic, FourRoomsRecordsAndLossShape) {
  const auto config = config_from(
      "train.algorithm=vic\nenv.name=four_rooms\nenv.side=7\ntrain.n_options=8\ntrain.horizon=30\n"
      "train.episodes=10000\ntrain.policy_step=0.5\ntrain.prior_step=0.5\ntrain.eval_every=500\n");
  const auto log = train_vic(config);
  ASSERT_EQ(log.records.size(), 20u);
  for (std::size_t i = 0; i < log.records.size(); ++i) {
    EXPECT_EQ(log.records[i].episode, (i + 1) * 500);
    EXPECT_TRUE(log.records[i].prior_entropy.has_value());
    EXPECT_TRUE(log.records[i].disc_loss.has_value());
    EXPECT_TRUE(log.records[i].room0_frac.has_value());
  }
  EXPECT_LT(log.records.back().prior_entropy.value(), std::log(8.0));
  EXPECT_TRUE(loss_shape_holds(log));
}

TEST(Vic, ResetsToInitialStateOnSchedule) {
  Trainer trainer(config_from(
      "train.algorithm=vic\nenv.name=chain\nenv.n=6\ntrain.n_options=2\ntrain.episodes=60\ntrain.vic_reset_period=7\n"));
  const auto& log = trainer.train();
  for (std::size_t i = 0; i < log.episodes.size(); ++i) {
    if (i % 7 == 0) {
      EXPECT_EQ(log.episodes[i].start, StateId{0});
    } else {
      EXPECT_EQ(log.episodes[i].start, log.episodes[i - 1].final_state);
    }
  }
}

TEST(Diayn, TwoStateOptimum) {
  const auto config = config_from(
      "train.algorithm=diayn\nenv.name=chain\nenv.n=2\ntrain.n_options=2\ntrain.horizon=10\ntrain.episodes=3000\n"
      "train.policy_step=0.1\n");
  Trainer trainer(config);
  const auto& log = trainer.train();
  const auto losses = moving_average(log.episode_losses(), 100);
  const auto rewards = moving_average(log.episode_rewards(), 100);
  EXPECT_LT(losses.back(), 0.05);
  EXPECT_GE(rewards.back(), 0.9 * std::log(2.0));
}

TEST(Diayn, RewardBounds) {
  const auto config = config_from(
      "train.algorithm=diayn\nenv.name=point_mass\nenv.grid=5\ntrain.n_options=8\ntrain.horizon=50\ntrain.episodes=300\n");
  Trainer trainer(config);
  for (const auto& e : trainer.train().episodes) {
    EXPECT_LE(e.mean_reward, std::log(8.0) + 1e-9);
    EXPECT_LE(e.mean_reward * static_cast<double>(e.length), 50 * std::log(8.0) + 1e-9);
  }
  Rng rng(3);
  for (const auto& t : trainer.sample_rollouts(50, false, rng)) EXPECT_LE(t.intrinsic_return, 50 * std::log(8.0) + 1e-9);
}

TEST(Diayn, LossShapeOnPointMass) {
  const auto config = config_from(
      "train.algorithm=diayn\nenv.name=point_mass\nenv.grid=5\ntrain.n_options=8\ntrain.horizon=100\n"
      "train.episodes=2000\ntrain.policy_step=0.005\ntrain.entropy_coef=0.02\n");
  const auto log = train_diayn(config);
  EXPECT_TRUE(loss_shape_holds(log));
  EXPECT_TRUE(log.records.back().static_frac.has_value());
  EXPECT_FALSE(log.records.back().room0_frac.has_value());
}

TEST(Diayn, MlpBackendTrains) {
  const auto config = config_from(
      "train.algorithm=diayn\nenv.name=four_rooms\nenv.side=7\ntrain.n_options=4\ntrain.horizon=20\n"
      "train.episodes=200\ntrain.backend=mlp\ntrain.hidden=16\n");
  const auto log = train_diayn(config);
  EXPECT_EQ(log.records.size(), 2u);
  for (const auto& e : log.episodes) EXPECT_LE(e.mean_reward, std::log(4.0) + 1e-9);
}

TEST(Valor, OppositeDirectionsAndDecoderAccuracy) {
  const auto config = config_from(
      "train.algorithm=valor\nenv.name=chain\nenv.n=5\nenv.start=2\ntrain.n_options=2\ntrain.horizon=4\n"
      "train.episodes=2000\n");
  Trainer trainer(config);
  trainer.train();
  Rng rng(5);
  std::size_t correct = 0;
  const auto rollouts = trainer.sample_rollouts(200, true, rng);
  for (const auto& t : rollouts) {
    const auto q = trainer.discriminator().distribution(trajectory_key(trainer.env(), t));
    correct += static_cast<std::size_t>(std::max_element(q.begin(), q.end()) - q.begin()) == t.option.value();
  }
  EXPECT_GE(static_cast<double>(correct) / static_cast<double>(rollouts.size()), 0.95);
  const auto greedy = trainer.greedy_rollouts(rng);
  EXPECT_NE(greedy[0].final_state, greedy[1].final_state);
  EXPECT_TRUE(loss_shape_holds(trainer.log()));
}

TEST(Valor, SingleOptionLossIsZeroAfterFirstUpdate) {
  auto config = config_from("train.algorithm=valor\nenv.name=chain\nenv.n=5\ntrain.n_options=1\ntrain.episodes=5\n");
  Trainer trainer(config);
  trainer.run_episode();
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(trainer.run_episode().disc_loss, 0.0, 1e-12);

  config.backend = BackendKind::mlp;
  Trainer mlp(config);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(mlp.run_episode().disc_loss, 0.0);
}

TEST(Determinism, SameSeedSameLog) {
  for (const char* algorithm : {"vic", "diayn", "valor"}) {
    const auto config = config_from(std::string("train.algorithm=") + algorithm +
                                    "\nenv.name=four_rooms\nenv.side=7\ntrain.n_options=4\ntrain.horizon=15\n"
                                    "train.episodes=300\ntrain.eval_every=50\ntrain.seed=42\n");
    EXPECT_EQ(Trainer(config).train(), Trainer(config).train()) << algorithm;
  }
}

TEST(Determinism, DifferentSeedsDiffer) {
  auto config = config_from("train.algorithm=diayn\nenv.name=four_rooms\nenv.side=7\ntrain.episodes=50\n");
  const auto a = Trainer(config).train();
  config.seed = 2;
  EXPECT_NE(a, Trainer(config).train());
}

TEST(Checkpoint, ResumeMatchesUninterruptedRun) {
  for (const char* backend : {"tabular", "mlp"}) {
    for (const char* algorithm : {"vic", "diayn", "valor"}) {
      const auto config = config_from(std::string("train.algorithm=") + algorithm + "\ntrain.backend=" + backend +
                                      "\nenv.name=four_rooms\nenv.side=7\ntrain.n_options=3\ntrain.horizon=12\n"
                                      "train.episodes=120\ntrain.eval_every=20\ntrain.vic_reset_period=7\n");
      Trainer full(config);
      full.train();

      Trainer first(config);
      for (int i = 0; i < 60; ++i) first.run_episode();
      const auto restored = checkpoint_from_json(nlohmann::json::parse(checkpoint_to_json(first.snapshot()).dump()));
      EXPECT_EQ(restored, first.snapshot());
      Trainer resumed(restored);
      resumed.train();

      EXPECT_EQ(resumed.snapshot(), full.snapshot()) << algorithm << '/' << backend;
      const auto& tail = full.log().records;
      EXPECT_EQ(resumed.log().records, std::vector<RunRecord>(tail.begin() + 3, tail.end()));
    }
  }
}

TEST(MovingAverage, TrailingWindow) {
  const auto ma = moving_average({1, 2, 3, 4, 5}, 2);
  EXPECT_EQ(ma, (std::vector<double>{1, 1.5, 2.5, 3.5, 4.5}));
  EXPECT_THROW(moving_average({1.0}, 0), ContractViolation);
}

}  // namespace
}  // namespace optionforge
