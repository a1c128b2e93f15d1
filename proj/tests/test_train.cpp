#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "argnn/checkpoint.hpp"
#include "argnn/generators.hpp"
#include "argnn/train.hpp"

using namespace argnn;

namespace {

std::vector<DatasetRecord> records(std::size_t count, std::size_t lo, std::size_t hi, std::uint64_t seed,
                                   Task task = Task::credulous, Semantics s = Semantics::grounded) {
  CorpusSpec spec;
  spec.count = count;
  spec.n_min = lo;
  spec.n_max = hi;
  spec.seed = seed;
  std::vector<AF> afs;
  for (auto& g : generate_corpus(spec)) afs.push_back(g.af);
  Rng rng(seed);
  return label_frameworks(afs, task, s, rng);
}

TrainConfig small_config() {
  TrainConfig c;
  c.dim = 8;
  c.steps = 4;
  c.batch_graphs = 10;
  c.epochs = 2;
  c.lr_max = 1e-3;
  c.seed = 42;
  return c;
}

}  // namespace

TEST(Mcc, ConfusionFixture) {
  Confusion c{4, 3, 1, 2};
  EXPECT_NEAR(mcc(c), 10.0 / std::sqrt(5.0 * 6 * 4 * 5), 1e-15);
  EXPECT_NEAR(mcc(c), 0.40825, 1e-5);
}

TEST(Mcc, Properties) {
  const std::vector<std::uint8_t> y{1, 0, 1, 1, 0, 0, 1};
  std::vector<std::uint8_t> inv(y.size()), flip_p(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) inv[i] = 1 - y[i];
  EXPECT_DOUBLE_EQ(mcc(y, y), 1.0);
  EXPECT_DOUBLE_EQ(mcc(inv, y), -1.0);
  EXPECT_EQ(mcc(std::vector<std::uint8_t>(7, 1), y), 0.0);
  EXPECT_EQ(mcc(std::vector<std::uint8_t>(7, 0), y), 0.0);
  const std::vector<std::uint8_t> p{1, 1, 0, 1, 0, 1, 1};
  for (std::size_t i = 0; i < y.size(); ++i) flip_p[i] = 1 - p[i];
  EXPECT_DOUBLE_EQ(mcc(p, y), mcc(flip_p, inv));
  EXPECT_THROW(mcc(p, std::vector<std::uint8_t>{1}), UsageError);
}

TEST(Mae, Fixtures) {
  EXPECT_NEAR(mae(std::vector<double>{0.9, 0.2}, std::vector<std::uint8_t>{1, 0}), 0.15, 1e-15);
  EXPECT_EQ(mae(std::vector<double>{1, 0}, std::vector<std::uint8_t>{1, 0}), 0.0);
  EXPECT_EQ(mae(std::vector<double>(4, 0.5), std::vector<std::uint8_t>{1, 0, 0, 1}), 0.5);
}

TEST(Train, LossDecreasesOnTrivialData) {
  std::vector<DatasetRecord> rs;
  for (std::size_t n = 3; n < 13; ++n) rs.push_back(build_acceptance_record(AF(n, {}), Semantics::grounded, Task::credulous));
  TrainConfig c = small_config();
  c.batch_graphs = 1;
  c.epochs = 1;
  c.lr_max = c.lr_min = 1e-2;
  const auto res = train(c, rs, rs);
  ASSERT_EQ(res.batch_losses.size(), 10u);
  for (std::size_t i = 1; i < res.batch_losses.size(); ++i) EXPECT_LT(res.batch_losses[i], res.batch_losses[i - 1]);
}

TEST(Train, SeededRunsAreBitIdentical) {
  const auto tr = records(60, 4, 8, 1);
  const auto va = records(20, 4, 8, 2);
  const auto a = train(small_config(), tr, va);
  const auto b = train(small_config(), tr, va);
  EXPECT_EQ(a.batch_losses, b.batch_losses);
  EXPECT_EQ(serialize(a.best), serialize(b.best));
  EXPECT_EQ(serialize(a.final), serialize(b.final));
  EXPECT_EQ(to_json(evaluate(a.best.params, va, 4)).dump(), to_json(evaluate(b.best.params, va, 4)).dump());
}

TEST(Train, ResumeContinuesBitExactly) {
  const auto tr = records(40, 4, 8, 3);
  const auto va = records(10, 4, 8, 4);
  TrainConfig c = small_config();
  c.epochs = 3;
  const auto full = train(c, tr, va);
  TrainConfig first = c;
  first.epochs = 1;
  auto partial = train(first, tr, va);
  // Resume needs the state checkpoint to carry the full configuration.
  Checkpoint state = checkpoint_from_json(nlohmann::json::parse(serialize(partial.final)));
  state.config = c;
  const auto resumed = train(c, tr, va, &state);
  EXPECT_EQ(serialize(resumed.final), serialize(full.final));
}

TEST(Train, ResamplingChangesTrainingAndResumesBitExactly) {
  const auto tr = records(40, 4, 8, 3, Task::constructive, Semantics::preferred);
  const auto va = records(10, 4, 8, 4, Task::constructive, Semantics::preferred);
  TrainConfig c = small_config();
  c.task = Task::constructive;
  c.semantics = Semantics::preferred;
  c.epochs = 3;
  const auto fixed = train(c, tr, va);
  c.resample_inputs = true;
  const auto full = train(c, tr, va);
  // The first epoch uses the stored records; later ones differ.
  const std::size_t per_epoch = fixed.batch_losses.size() / 3;
  for (std::size_t k = 0; k < per_epoch; ++k) EXPECT_EQ(full.batch_losses[k], fixed.batch_losses[k]);
  EXPECT_NE(full.batch_losses.back(), fixed.batch_losses.back());
  EXPECT_EQ(serialize(train(c, tr, va).final), serialize(full.final));

  TrainConfig first = c;
  first.epochs = 2;
  Checkpoint state = train(first, tr, va).final;
  state.config = c;
  EXPECT_EQ(serialize(train(c, tr, va, &state).final), serialize(full.final));
}

TEST(Train, Validation) {
  const auto tr = records(10, 4, 6, 1);
  EXPECT_THROW(train(small_config(), {}, tr), UsageError);
  const auto other = records(10, 4, 6, 1, Task::sceptical);
  EXPECT_THROW(train(small_config(), other, tr), UsageError);
  TrainConfig bad = small_config();
  bad.dim = 0;
  EXPECT_THROW(train(bad, tr, tr), UsageError);
  bad = small_config();
  bad.lr_max = std::numeric_limits<double>::infinity();
  EXPECT_THROW(train(bad, tr, tr), UsageError);
}

TEST(Train, NonFiniteLossAbortsWithDiagnostic) {
  const auto tr = records(10, 4, 6, 1);
  TrainConfig c = small_config();
  c.lr_max = c.lr_min = 1e300;
  c.clip_norm = 1e300;
  const auto dir = std::filesystem::temp_directory_path() / "argnn_nonfinite";
  std::filesystem::create_directories(dir);
  std::filesystem::remove(dir / "diagnostic.ckpt.json");
  c.checkpoint_dir = dir.string();
  EXPECT_THROW(train(c, tr, tr), RuntimeError);
  EXPECT_TRUE(std::filesystem::exists(dir / "diagnostic.ckpt.json"));
}

TEST(Checkpoint, RoundTripIsExact) {
  const auto tr = records(20, 4, 6, 5);
  TrainConfig c = small_config();
  c.epochs = 1;
  const auto res = train(c, tr, tr);
  const std::string s = serialize(res.final);
  const Checkpoint back = checkpoint_from_json(nlohmann::json::parse(s));
  EXPECT_TRUE(back == res.final);
  EXPECT_EQ(serialize(back), s);
  const auto path = std::filesystem::temp_directory_path() / "argnn_rt.ckpt.json";
  save_checkpoint(res.best, path);
  EXPECT_TRUE(load_checkpoint(path) == res.best);
  EXPECT_THROW(checkpoint_from_json(nlohmann::json{{"format", "other"}}), ParseError);
}

TEST(Config, JsonRoundTripAndUnknownKeys) {
  TrainConfig c = small_config();
  c.task = Task::constructive;
  c.semantics = Semantics::preferred;
  c.resample_inputs = true;
  EXPECT_EQ(train_config_from_json(to_json(c)), c);
  EXPECT_THROW(train_config_from_json(nlohmann::json{{"learning_rate", 1}}), UsageError);
}

TEST(Evaluate, MultiStepEqualsSingleStep) {
  Rng rng(3);
  const auto p = ModelParameters::init(8, rng);
  const auto rs = records(30, 4, 8, 6);
  const auto multi = evaluate_at(p, rs, {2, 5, 7});
  for (const auto& r : multi) {
    const auto single = evaluate(p, rs, r.steps);
    EXPECT_EQ(single.mcc, r.mcc);
    EXPECT_EQ(single.mae, r.mae);
  }
}

TEST(ScalingEval, ReducesToPlainEvaluation) {
  Rng rng(3);
  const auto p = ModelParameters::init(8, rng);
  std::map<std::size_t, std::vector<DatasetRecord>> data{{6, records(20, 6, 6, 7)}};
  const auto table = scaling_eval(p, data, {6}, {4});
  EXPECT_EQ(table.mcc[0][0], evaluate(p, data[6], 4).mcc);
  EXPECT_NE(table.to_csv().find("size,steps,mcc,mae"), std::string::npos);
  EXPECT_THROW(scaling_eval(p, data, {9}, {4}), UsageError);
}

TEST(ScalingEval, UntrainedModelIsNearChance) {
  Rng rng(12);
  const auto p = ModelParameters::init(32, rng);
  std::map<std::size_t, std::vector<DatasetRecord>> data{{10, records(500, 10, 10, 8)}};
  const auto table = scaling_eval(p, data, {10}, {16});
  EXPECT_LE(std::abs(table.mcc[0][0]), 0.2);
}
