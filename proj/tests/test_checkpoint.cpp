#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "autoformal/checkpoint.hpp"
#include "autoformal/error.hpp"
#include "autoformal/training.hpp"
#include "toy_corpus.hpp"

using namespace autoformal;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("autoformal_ckpt_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

Model trained_model(AttentionType attention, EncoderType encoder) {
  corpus::CorpusSplit split;
  split.train = autoformal::testing::toy_pairs();
  HyperParams hp;
  hp.num_units = 8;
  hp.attention = attention;
  hp.encoder_type = encoder;
  hp.train_steps = 5;
  hp.batch_size = 16;
  hp.learning_rate = 0.5;
  return train(split, hp).model;
}

}  // namespace

TEST(Checkpoint, RoundTripReproducesParametersAndDecoding) {
  const auto dir = scratch("roundtrip");
  for (auto attention : {AttentionType::None, AttentionType::NormedBahdanau, AttentionType::ScaledLuong}) {
    for (auto encoder : {EncoderType::Unidirectional, EncoderType::Bidirectional}) {
      const auto model = trained_model(attention, encoder);
      const auto path = (dir / "model.ckpt").string();
      save_checkpoint(path, model);
      const auto back = load_checkpoint(path);
      EXPECT_EQ(back.hp.to_text(), model.hp.to_text());
      EXPECT_EQ(back.src_vocab, model.src_vocab);
      EXPECT_EQ(back.tgt_vocab, model.tgt_vocab);
      EXPECT_EQ(back.step, model.step);
      const auto a = model.params.tensors();
      const auto b = back.params.tensors();
      ASSERT_EQ(a.size(), b.size());
      for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(*a[k].value, *b[k].value) << a[k].name;
      for (const auto& pair : autoformal::testing::toy_pairs()) {
        const auto x = model.translate(pair.latex);
        const auto y = back.translate(pair.latex);
        EXPECT_EQ(x.ids, y.ids);
        EXPECT_EQ(x.token_logprobs, y.token_logprobs);
      }
    }
  }
}

TEST(Checkpoint, UnsetLearningRateStaysUnset) {
  const auto dir = scratch("lr");
  Model m;
  m.hp.num_units = 2;
  m.params = init_params(m.hp, m.src_vocab, m.tgt_vocab);
  save_checkpoint((dir / "m").string(), m);
  EXPECT_FALSE(load_checkpoint((dir / "m").string()).hp.learning_rate.has_value());
}

TEST(Checkpoint, CorruptFilesAreRejected) {
  const auto dir = scratch("corrupt");
  const auto path = (dir / "m").string();
  {
    std::ofstream out(path);
    out << "not a checkpoint\n";
  }
  try {
    load_checkpoint(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidCheckpoint);
  }

  Model m;
  m.hp.num_units = 2;
  m.params = init_params(m.hp, m.src_vocab, m.tgt_vocab);
  save_checkpoint(path, m);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 8);
  EXPECT_THROW(load_checkpoint(path), Error);

  try {
    load_checkpoint((dir / "missing").string());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Io);
  }
}
