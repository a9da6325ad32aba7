#include <gtest/gtest.h>

#include <cmath>

#include "autoformal/corpus.hpp"
#include "autoformal/error.hpp"
#include "autoformal/model.hpp"
#include "autoformal/params.hpp"
#include "gradcheck.hpp"

using namespace autoformal;
using autoformal::testing::check_gradients;
using autoformal::testing::tiny_batch;
using autoformal::testing::tiny_hyperparams;
using corpus::Vocabulary;

namespace {

const UnitType kUnits[] = {UnitType::LSTM, UnitType::GRU, UnitType::LayerNormLSTM};
const AttentionType kAttentions[] = {AttentionType::None, AttentionType::Bahdanau,
                                     AttentionType::NormedBahdanau, AttentionType::Luong,
                                     AttentionType::ScaledLuong};

HyperParams small_hp(AttentionType attention = AttentionType::Luong) {
  HyperParams hp = tiny_hyperparams(UnitType::LSTM, attention);
  hp.max_src_len = 20;
  hp.max_tgt_len = 20;
  return hp;
}

}  // namespace

class GradientSuite : public ::testing::TestWithParam<std::tuple<UnitType, AttentionType>> {};

TEST_P(GradientSuite, AnalyticMatchesCentralDifferences) {
  const auto [unit, attention] = GetParam();
  const auto report = check_gradients(tiny_hyperparams(unit, attention), tiny_batch());
  EXPECT_LE(report.max_relative_error, 1e-4) << report.worst_tensor;
  EXPECT_GT(report.checked, 500u);
}

INSTANTIATE_TEST_SUITE_P(AllCellsAndAttentions, GradientSuite,
                         ::testing::Combine(::testing::ValuesIn(kUnits),
                                            ::testing::ValuesIn(kAttentions)));

TEST(GradientVariants, BidirectionalResidualDropout) {
  for (auto unit : kUnits) {
    auto hp = tiny_hyperparams(unit, AttentionType::NormedBahdanau);
    hp.encoder_type = EncoderType::Bidirectional;
    hp.residual = true;
    hp.num_layers = 4;
    hp.dropout = 0.3;
    const auto report = check_gradients(hp, tiny_batch(), 12, 12, true);
    EXPECT_LE(report.max_relative_error, 1e-4) << report.worst_tensor;
  }
}

TEST(GradientVariants, SingleLayerBidirectionalIsRejectedAndTwoLayerWorks) {
  auto hp = tiny_hyperparams(UnitType::GRU, AttentionType::None);
  hp.encoder_type = EncoderType::Bidirectional;
  hp.num_layers = 3;
  EXPECT_THROW(hp.validate(), Error);
  hp.num_layers = 2;
  EXPECT_LE(check_gradients(hp, tiny_batch()).max_relative_error, 1e-4);
}

TEST(Params, ShapesFollowHyperParams) {
  HyperParams hp;
  hp.num_units = 4;
  const auto p = init_params(hp, 7, 9);
  EXPECT_EQ(p.src_embedding.rows(), 7);
  EXPECT_EQ(p.src_embedding.cols(), 4);
  EXPECT_EQ(p.output_projection.rows(), 4);
  EXPECT_EQ(p.output_projection.cols(), 9);
  EXPECT_EQ(p.encoder_cells.size(), 2u);
  EXPECT_EQ(p.decoder_cells[0].w.rows(), 16);
  EXPECT_EQ(p.decoder_cells[0].w.cols(), 8);
}

TEST(Params, DeterministicAndBounded) {
  HyperParams hp;
  hp.num_units = 6;
  hp.attention = AttentionType::Bahdanau;
  const auto a = init_params(hp, 10, 11);
  const auto b = init_params(hp, 10, 11);
  const auto ta = a.tensors();
  const auto tb = b.tensors();
  ASSERT_EQ(ta.size(), tb.size());
  for (std::size_t k = 0; k < ta.size(); ++k) {
    EXPECT_EQ(*ta[k].value, *tb[k].value) << ta[k].name;
  }
  EXPECT_LE(a.src_embedding.cwiseAbs().maxCoeff(), 0.1);
  hp.seed = 1;
  EXPECT_NE(init_params(hp, 10, 11).src_embedding, a.src_embedding);
}

TEST(Params, ForgetBiasIsSet) {
  HyperParams hp;
  hp.num_units = 5;
  hp.forget_bias = 1.0;
  const auto p = init_params(hp, 8, 8);
  for (const auto* cells : {&p.encoder_cells, &p.decoder_cells}) {
    for (const auto& c : *cells) EXPECT_TRUE((c.b.middleRows(5, 5).array() == 1.0).all());
  }
  hp.unit_type = UnitType::LayerNormLSTM;
  const auto ln = init_params(hp, 8, 8);
  EXPECT_TRUE((ln.encoder_cells[0].shift.middleRows(5, 5).array() == 1.0).all());
  EXPECT_TRUE((ln.encoder_cells[0].gain.array() == 1.0).all());
}

TEST(Encode, OneAnnotationPerToken) {
  const auto hp = small_hp();
  const auto p = init_params(hp, 12, 12);
  EXPECT_EQ(encode({4}, hp, p).annotations.cols(), 1);
  const auto out = encode({4, 5, 6}, hp, p);
  EXPECT_EQ(out.annotations.cols(), 3);
  EXPECT_EQ(out.annotations.rows(), hp.num_units);
  EXPECT_EQ(out.final_state.size(), 2u);
}

TEST(Encode, ResidualWithZeroUpperLayerPassesLayerOneThrough) {
  auto hp = small_hp(AttentionType::None);
  hp.residual = true;
  auto p = init_params(hp, 12, 12);
  auto& upper = p.encoder_cells[1];
  upper.w.setZero();
  upper.b.setZero();
  auto hp1 = hp;
  hp1.num_layers = 1;
  auto p1 = init_params(hp1, 12, 12);
  p1.src_embedding = p.src_embedding;
  p1.encoder_cells[0] = p.encoder_cells[0];
  const auto two = encode({3, 4, 5}, hp, p);
  const auto one = encode({3, 4, 5}, hp1, p1);
  EXPECT_LT((two.annotations - one.annotations).cwiseAbs().maxCoeff(), 1e-15);
  hp.residual = false;
  EXPECT_TRUE(encode({3, 4, 5}, hp, p).annotations.isZero(0.0));
}

TEST(Encode, BidirectionalInterleavesFinalStates) {
  auto hp = small_hp();
  hp.encoder_type = EncoderType::Bidirectional;
  hp.num_layers = 4;
  const auto p = init_params(hp, 12, 12);
  const auto out = encode({3, 4, 5}, hp, p);
  ASSERT_EQ(out.final_state.size(), 4u);
  EXPECT_EQ(out.annotations.cols(), 3);
  // The backward stack's final state only depends on the sequence read
  // right to left, so changing the last token changes it less directly than
  // the first; check the forward final state ignores nothing.
  const auto other = encode({3, 4, 6}, hp, p);
  EXPECT_NE(out.final_state[0].h, other.final_state[0].h);
}

TEST(Encode, RejectsBadIdsAndLengths) {
  auto hp = small_hp();
  const auto p = init_params(hp, 12, 12);
  try {
    encode({3, 12}, hp, p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IdOutOfRange);
  }
  hp.max_src_len = 2;
  try {
    encode({3, 4, 5}, hp, p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::LengthExceeded);
  }
}

TEST(DecodeStep, AttentionWeightsSumToOne) {
  for (auto attention : kAttentions) {
    if (attention == AttentionType::None) continue;
    const auto hp = small_hp(attention);
    const auto p = init_params(hp, 12, 12);
    auto enc = encode({3, 4, 5, 6}, hp, p);
    auto state = enc.final_state;
    int prev = Vocabulary::kSos;
    for (int step = 0; step < 4; ++step) {
      const auto r = decode_step(prev, state, enc.annotations, hp, p);
      EXPECT_NEAR(r.attention_weights.sum(), 1.0, 1e-12);
      EXPECT_EQ(r.logits.size(), 12);
      state = r.state;
      prev = 3 + step;
    }
  }
}

TEST(DecodeStep, UniformScoresAverageAnnotations) {
  auto hp = small_hp(AttentionType::Luong);
  auto p = init_params(hp, 12, 12);
  p.attention.score.setZero();
  // With W_c = [I 0] the attentional hidden state is tanh(context).
  p.attention.combine.setZero();
  p.attention.combine.leftCols(hp.num_units).setIdentity();
  p.output_projection.setIdentity(hp.num_units, 12);
  const auto enc = encode({3, 4, 5}, hp, p);
  const auto r = decode_step(Vocabulary::kSos, enc.final_state, enc.annotations, hp, p);
  const Vector mean = enc.annotations.rowwise().mean();
  for (int i = 0; i < hp.num_units; ++i) EXPECT_NEAR(r.logits(i), std::tanh(mean(i)), 1e-14);
}

TEST(ForwardLoss, UniformLogitsGiveLogVocabPerToken) {
  auto hp = small_hp(AttentionType::ScaledLuong);
  auto p = init_params(hp, 12, 12);
  p.output_projection.setZero();
  const auto batch = tiny_batch();
  const auto r = forward_loss(batch, hp, p, false);
  std::size_t tokens = 0;
  for (const auto& ex : batch) tokens += ex.tgt.size() + 1;
  EXPECT_EQ(r.token_count, tokens);
  EXPECT_NEAR(r.loss, static_cast<double>(tokens) * std::log(12.0) / 3.0, 1e-12);
}

TEST(ForwardLoss, EmptyTargetStillPaysForEos) {
  const auto hp = small_hp();
  const auto p = init_params(hp, 12, 12);
  const std::vector<Example> batch = {{{3, 4}, {}}};
  const auto r = forward_loss(batch, hp, p, false);
  EXPECT_GT(r.loss, 0.0);
  EXPECT_EQ(r.token_count, 1u);
}

TEST(ForwardLoss, BatchedEqualsPerSentenceAverage) {
  const auto hp = small_hp(AttentionType::Bahdanau);
  const auto p = init_params(hp, 12, 12);
  const auto batch = tiny_batch();
  double sum = 0.0;
  for (const auto& ex : batch) sum += forward_loss(std::vector<Example>{ex}, hp, p, false).loss;
  EXPECT_NEAR(forward_loss(batch, hp, p, false).loss, sum / 3.0, 1e-12);
}

TEST(ForwardLoss, GoldLogprobsSumToLoss) {
  const auto hp = small_hp(AttentionType::NormedBahdanau);
  const auto p = init_params(hp, 12, 12);
  const auto batch = tiny_batch();
  const auto lps = gold_logprobs(batch, hp, p);
  double total = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    EXPECT_EQ(lps[b].size(), batch[b].tgt.size() + 1);
    for (double lp : lps[b]) {
      EXPECT_LE(lp, 0.0);
      total -= lp;
    }
  }
  EXPECT_NEAR(forward_loss(batch, hp, p, false).loss, total / 3.0, 1e-12);
}

TEST(ForwardLoss, DeterministicIncludingDropout) {
  auto hp = small_hp();
  hp.dropout = 0.5;
  const auto p = init_params(hp, 12, 12);
  SplitMix64 a(3), b(3);
  EXPECT_EQ(forward_loss(tiny_batch(), hp, p, true, &a).loss,
            forward_loss(tiny_batch(), hp, p, true, &b).loss);
  EXPECT_THROW(forward_loss(tiny_batch(), hp, p, true, nullptr), Error);
  EXPECT_NO_THROW(forward_loss(tiny_batch(), hp, p, false, nullptr));
}

TEST(GreedyDecode, TiesGoToTheLowestId) {
  const auto hp = small_hp();
  auto p = init_params(hp, 12, 12);
  p.output_projection.setZero();
  const auto r = greedy_decode({3, 4}, hp, p, 5);
  EXPECT_EQ(r.ids, std::vector<int>(5, Vocabulary::kUnk));
  EXPECT_FALSE(r.ended_by_eos);
}

// Saturated gates in the top decoder layer make h_top strictly positive, so
// the logit of any all-ones projection column dominates.
ModelParams params_ranking_first(const HyperParams& hp, int id) {
  auto p = init_params(hp, 12, 12);
  auto& top = p.decoder_cells.back();
  top.w.setZero();
  top.b.setConstant(30.0);
  p.output_projection.setZero();
  p.output_projection.col(id).setConstant(1.0);
  return p;
}

TEST(GreedyDecode, EosFirstGivesEmptyOutput) {
  const auto hp = small_hp(AttentionType::None);
  const auto r = greedy_decode({3, 4}, hp, params_ranking_first(hp, Vocabulary::kEos), 5);
  EXPECT_TRUE(r.ids.empty());
  EXPECT_TRUE(r.ended_by_eos);
  ASSERT_EQ(r.token_logprobs.size(), 1u);
  EXPECT_LE(r.token_logprobs[0], 0.0);
}

TEST(GreedyDecode, CapStopsWithoutEos) {
  const auto hp = small_hp(AttentionType::None);
  const auto r = greedy_decode({3}, hp, params_ranking_first(hp, 7), 3);
  EXPECT_EQ(r.ids, (std::vector<int>{7, 7, 7}));
  EXPECT_FALSE(r.ended_by_eos);
  EXPECT_EQ(r.token_logprobs.size(), 3u);
}

TEST(GreedyDecode, FollowsArgmaxOfShiftedLogits) {
  for (auto attention : kAttentions) {
    const auto hp = small_hp(attention);
    const auto p = init_params(hp, 12, 12);
    const auto result = greedy_decode({3, 4, 5}, hp, p, 6);
    const auto enc = encode({3, 4, 5}, hp, p);
    auto state = enc.final_state;
    int prev = Vocabulary::kSos;
    for (std::size_t t = 0; t < result.ids.size(); ++t) {
      const auto r = decode_step(prev, state, enc.annotations, hp, p);
      const Vector shifted = (r.logits.array() + 123.0).matrix();
      Eigen::Index best = 0;
      shifted.maxCoeff(&best);
      EXPECT_EQ(best, result.ids[t]);
      state = r.state;
      prev = result.ids[t];
    }
  }
}

TEST(GreedyDecode, Deterministic) {
  const auto hp = small_hp(AttentionType::ScaledLuong);
  const auto p = init_params(hp, 12, 12);
  const auto a = greedy_decode({3, 9, 4}, hp, p, 8);
  const auto b = greedy_decode({3, 9, 4}, hp, p, 8);
  EXPECT_EQ(a.ids, b.ids);
  EXPECT_EQ(a.token_logprobs, b.token_logprobs);
}

TEST(GreedyDecode, EmptySourceIsHandled) {
  for (auto attention : kAttentions) {
    const auto hp = small_hp(attention);
    const auto p = init_params(hp, 12, 12);
    EXPECT_NO_THROW(greedy_decode({}, hp, p, 3));
  }
}
