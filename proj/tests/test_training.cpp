#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "autoformal/error.hpp"
#include "autoformal/training.hpp"
#include "toy_corpus.hpp"

using namespace autoformal;
using lexing::Language;

namespace {

ModelParams single(double value) {
  ModelParams p;
  p.output_projection = Matrix::Constant(1, 1, value);
  return p;
}

ModelParams random_params(SplitMix64& rng) {
  HyperParams hp;
  hp.num_units = 3;
  hp.num_layers = 1;
  auto p = init_params(hp, 5, 6);
  for (auto& t : p.tensors()) {
    for (Eigen::Index i = 0; i < t.value->size(); ++i) t.value->data()[i] = rng.uniform(-2.0, 2.0);
  }
  return p;
}

corpus::CorpusSplit one_pair_corpus(const std::string& src, const std::string& tgt) {
  corpus::CorpusSplit split;
  split.train.push_back({lexing::split_tokens(src, Language::Latex),
                         lexing::split_tokens(tgt, Language::Mizar), std::nullopt});
  return split;
}

HyperParams small_train_hp() {
  HyperParams hp;
  hp.num_units = 16;
  hp.attention = AttentionType::Luong;
  hp.train_steps = 40;
  hp.batch_size = 8;
  hp.seed = 3;
  return hp;
}

corpus::CorpusSplit toy_split() {
  corpus::CorpusSplit split;
  split.train = autoformal::testing::toy_pairs();
  split.dev = {split.train[0], split.train[50]};
  return split;
}

}  // namespace

TEST(Sgd, ZeroGradientKeepsParameters) {
  auto p = single(1.5);
  sgd_update(p, single(0.0), 1.0);
  EXPECT_EQ(p.output_projection(0, 0), 1.5);
}

TEST(Sgd, ScalarStep) {
  auto p = single(1.0);
  sgd_update(p, single(0.5), 1.0);
  EXPECT_EQ(p.output_projection(0, 0), 0.5);
}

TEST(Sgd, MatchesElementwiseOracle) {
  SplitMix64 rng(1);
  auto p = random_params(rng);
  const auto g = random_params(rng);
  const auto before = p;
  sgd_update(p, g, 0.3);
  const auto pt = p.tensors();
  const auto bt = before.tensors();
  const auto gt = g.tensors();
  for (std::size_t k = 0; k < pt.size(); ++k) {
    for (Eigen::Index i = 0; i < pt[k].value->size(); ++i) {
      EXPECT_EQ(pt[k].value->data()[i], bt[k].value->data()[i] - 0.3 * gt[k].value->data()[i]);
    }
  }
}

TEST(Sgd, ShapeMismatchIsAnError) {
  auto p = single(1.0);
  ModelParams g;
  g.output_projection = Matrix::Zero(2, 1);
  try {
    sgd_update(p, g, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ShapeMismatch);
  }
}

TEST(Adam, FirstStepMovesByAboutTheLearningRate) {
  for (double g : {0.5, -3.0, 1e-3}) {
    auto p = single(0.0);
    auto state = make_adam_state(p);
    adam_update(p, state, single(g), 0.001);
    const double step = std::abs(p.output_projection(0, 0));
    EXPECT_GE(step, 0.9 * 0.001);
    EXPECT_LE(step, 0.001);
    EXPECT_EQ(state.t, 1);
  }
}

TEST(Adam, ZeroGradientKeepsParameters) {
  auto p = single(2.0);
  auto state = make_adam_state(p);
  for (int i = 0; i < 10; ++i) adam_update(p, state, single(0.0), 0.01);
  EXPECT_EQ(p.output_projection(0, 0), 2.0);
}

TEST(Adam, TwoStepsMatchScalarOracle) {
  const double lr = 0.01, b1 = 0.9, b2 = 0.999, eps = 1e-8, g = 0.7;
  double theta = 1.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 2; ++t) {
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mhat = m / (1 - std::pow(b1, t));
    const double vhat = v / (1 - std::pow(b2, t));
    theta -= lr * mhat / (std::sqrt(vhat) + eps);
  }
  auto p = single(1.0);
  auto state = make_adam_state(p);
  adam_update(p, state, single(g), lr);
  adam_update(p, state, single(g), lr);
  EXPECT_NEAR(p.output_projection(0, 0), theta, 1e-15);
}

TEST(Clip, BelowThresholdIsIdentity) {
  auto g = single(0.5);
  clip_gradients(g, 5.0);
  EXPECT_EQ(g.output_projection(0, 0), 0.5);
}

TEST(Clip, ThreeFourFive) {
  ModelParams g;
  g.output_projection = Matrix(2, 1);
  g.output_projection << 3.0, 4.0;
  EXPECT_DOUBLE_EQ(clip_gradients(g, 1.0), 5.0);
  EXPECT_NEAR(g.output_projection(0, 0), 0.6, 1e-15);
  EXPECT_NEAR(g.output_projection(1, 0), 0.8, 1e-15);
}

TEST(Clip, MultiTensorMatchesIndependentNorm) {
  SplitMix64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    auto g = random_params(rng);
    double sq = 0.0;
    for (const auto& t : g.tensors()) {
      for (Eigen::Index i = 0; i < t.value->size(); ++i) sq += t.value->data()[i] * t.value->data()[i];
    }
    const double norm = std::sqrt(sq);
    EXPECT_NEAR(global_norm(g), norm, 1e-12 * norm);
    const double clip = rng.uniform(0.1, 2.0 * norm);
    clip_gradients(g, clip);
    EXPECT_LE(global_norm(g), std::min(norm, clip) * (1 + 1e-12));
  }
}

TEST(DevPerplexity, UniformModelGivesVocabularySize) {
  HyperParams hp;
  hp.num_units = 4;
  auto p = init_params(hp, 9, 9);
  p.output_projection.setZero();
  const std::vector<Example> dev = {{{3, 4}, {5, 6}}, {{7}, {8}}};
  EXPECT_NEAR(dev_perplexity(p, hp, dev), 9.0, 1e-12);
}

TEST(DevPerplexity, EmptyDevSetIsAnError) {
  HyperParams hp;
  hp.num_units = 4;
  try {
    dev_perplexity(init_params(hp, 5, 5), hp, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyEvalSet);
  }
}

TEST(Train, ZeroStepsReturnsInitialParameters) {
  auto hp = small_train_hp();
  hp.train_steps = 0;
  const auto split = toy_split();
  const auto result = train(split, hp);
  EXPECT_TRUE(result.snapshots.empty());
  EXPECT_FALSE(result.diverged);
  const auto init = init_params(hp, result.model.src_vocab, result.model.tgt_vocab);
  EXPECT_EQ(result.model.params.output_projection, init.output_projection);
  EXPECT_EQ(result.model.params.src_embedding, init.src_embedding);
}

TEST(Train, EmptyTrainingSetIsAnError) {
  try {
    train(corpus::CorpusSplit{}, small_train_hp());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyTrainSet);
  }
}

TEST(Train, ReproducibleLossHistory) {
  const auto split = toy_split();
  const auto a = train(split, small_train_hp());
  const auto b = train(split, small_train_hp());
  ASSERT_EQ(a.state.history.size(), 40u);
  EXPECT_EQ(a.state.history, b.state.history);
  auto other = small_train_hp();
  other.seed = 4;
  EXPECT_NE(train(split, other).state.history, a.state.history);
}

TEST(Train, SnapshotsFollowCadenceAndLogFormat) {
  TrainOptions options;
  options.snapshot_every = 10;
  options.log_every = 0;
  std::vector<std::string> log;
  options.on_log = [&](const TrainLogEntry& e) { log.push_back(format_log_entry(e)); };
  const auto result = train(toy_split(), small_train_hp(), options);
  ASSERT_EQ(result.snapshots.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(result.snapshots[i].step, static_cast<std::int64_t>(10 * (i + 1)));
  }
  EXPECT_EQ(result.snapshots.back().model.params.output_projection,
            result.model.params.output_projection);
  ASSERT_EQ(log.size(), 4u);
  EXPECT_EQ(log[0].rfind("step 10 loss ", 0), 0u);
  EXPECT_NE(log[0].find(" dev_ppl "), std::string::npos);
  EXPECT_EQ(log[0].find("NA"), std::string::npos);
}

TEST(Train, InjectedNanStopsAndRestoresLastFiniteState) {
  TrainOptions options;
  options.snapshot_every = 5;
  options.inject_nan_at = 13;
  const auto result = train(toy_split(), small_train_hp(), options);
  EXPECT_TRUE(result.diverged);
  EXPECT_EQ(result.state.step, 12);
  ASSERT_EQ(result.snapshots.size(), 2u);
  EXPECT_EQ(result.snapshots.back().step, 10);
  EXPECT_TRUE(result.model.params.all_finite());

  auto hp = small_train_hp();
  hp.train_steps = 12;
  const auto clean = train(toy_split(), hp);
  EXPECT_EQ(clean.model.params.output_projection, result.model.params.output_projection);
}

TEST(Train, AdamKeepsMomentsShapedLikeParameters) {
  auto hp = small_train_hp();
  hp.optimizer = OptimizerType::Adam;
  hp.train_steps = 5;
  const auto result = train(toy_split(), hp);
  ASSERT_TRUE(result.state.adam.has_value());
  EXPECT_EQ(result.state.adam->t, 5);
  EXPECT_EQ(result.state.adam->m.tensors().size(), result.state.params.tensors().size());
  EXPECT_FALSE(train(toy_split(), small_train_hp()).state.adam.has_value());
}

TEST(Train, MemorizesASinglePair) {
  auto hp = small_train_hp();
  hp.train_steps = 150;
  hp.dropout = 0.0;
  const auto split = one_pair_corpus("a", "b c");
  const auto result = train(split, hp);
  EXPECT_EQ(result.model.translate_tokens(split.train[0].latex).joined(), "b c");
}

TEST(Train, ReverseDirectionUsesMizarAsSource) {
  auto hp = small_train_hp();
  hp.train_steps = 150;
  hp.dropout = 0.0;
  TrainOptions options;
  options.src_language = Language::Mizar;
  options.tgt_language = Language::Latex;
  const auto split = one_pair_corpus("$ x $", "x ;");
  const auto result = train(split, hp, options);
  EXPECT_TRUE(result.model.src_vocab.contains(";"));
  EXPECT_EQ(result.model.translate_tokens(split.train[0].mizar).joined(), "$ x $");
}

TEST(Train, ToyLossKeepsFallingUntilSmall) {
  auto hp = small_train_hp();
  hp.num_units = 32;
  hp.attention = AttentionType::ScaledLuong;
  hp.batch_size = 128;
  hp.optimizer = OptimizerType::Adam;
  hp.learning_rate = 0.01;
  hp.train_steps = 1500;
  const auto result = train(toy_split(), hp);
  const auto& h = result.state.history;
  // Compare 50-step means 500 steps apart while the earlier mean is >= 0.1.
  auto mean = [&](std::size_t end) {
    double s = 0.0;
    for (std::size_t i = end - 50; i < end; ++i) s += h[i].second;
    return s / 50.0;
  };
  for (std::size_t end = 50; end + 500 <= h.size(); end += 50) {
    if (mean(end) < 0.1) break;
    EXPECT_LT(mean(end + 500), mean(end)) << "window ending at step " << end;
  }
  EXPECT_LT(h.back().second, 0.1);
}
